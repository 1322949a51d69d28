#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "config.hpp"
#include "runner.hpp"

namespace {

void print_usage(std::ostream& out) {
  out << "usage: plap <command> <config> [--out DIR] [--quiet] [--threads K]\n"
         "commands:\n"
         "  evolve      backward Euler flow run; writes trajectory.csv and a\n"
         "              manifest\n"
         "  continuity  exponent continuity experiment; writes the report\n"
         "              pair and a manifest\n"
         "  mosco       energy convergence probes; writes gap CSV and report\n"
         "  diagonal    diagonal selection over a table; writes diagonal.csv\n"
         "exit codes: 0 ok, 1 validation error, 2 solver non-convergence,\n"
         "            3 verdict failure\n";
}

bool parse_command(const std::string& word, plap::Command& out) {
  if (word == "evolve") out = plap::Command::Evolve;
  else if (word == "continuity") out = plap::Command::Continuity;
  else if (word == "mosco") out = plap::Command::Mosco;
  else if (word == "diagonal") out = plap::Command::Diagonal;
  else return false;
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc >= 2 && (std::strcmp(argv[1], "--help") == 0 ||
                    std::strcmp(argv[1], "-h") == 0)) {
    print_usage(std::cout);
    return plap::kExitOk;
  }
  if (argc < 3) {
    print_usage(std::cerr);
    return plap::kExitValidation;
  }

  plap::Command command;
  if (!parse_command(argv[1], command)) {
    std::cerr << "unknown command '" << argv[1] << "'\n";
    print_usage(std::cerr);
    return plap::kExitValidation;
  }

  const std::string config_path = argv[2];
  plap::CliOptions opts;
  for (int i = 3; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--quiet") {
      opts.quiet = true;
    } else if (arg == "--out") {
      if (++i >= argc) {
        std::cerr << "--out requires a directory\n";
        return plap::kExitValidation;
      }
      opts.out_override = argv[i];
    } else if (arg == "--threads") {
      if (++i >= argc) {
        std::cerr << "--threads requires a count\n";
        return plap::kExitValidation;
      }
      try {
        opts.threads = std::stoi(argv[i]);
      } catch (const std::exception&) {
        opts.threads = 0;
      }
      if (opts.threads < 1) {
        std::cerr << "--threads requires a positive count\n";
        return plap::kExitValidation;
      }
    } else {
      std::cerr << "unknown flag '" << arg << "'\n";
      print_usage(std::cerr);
      return plap::kExitValidation;
    }
  }

  std::ifstream in(config_path, std::ios::binary);
  if (!in) {
    std::cerr << "config file not found: " << config_path << '\n';
    return plap::kExitValidation;
  }
  std::ostringstream text;
  text << in.rdbuf();

  plap::RunConfig cfg;
  try {
    cfg = plap::parse_config(command, text.str());
  } catch (const plap::ConfigError& e) {
    std::cerr << "config error in " << config_path << ": " << e.what() << '\n';
    return plap::kExitValidation;
  }

  return plap::run_command(cfg, opts);
}
