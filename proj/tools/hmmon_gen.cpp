// Model generator: icy-driving, snakes-and-ladders, random HMMs and monitors.
#include <iostream>

#include <CLI11.hpp>

#include "hmmon/model_io.hpp"
#include "hmmon/oracle.hpp"

using namespace hmmon;

int main(int argc, char** argv) {
  CLI::App app{"Generate benchmark models as JSON"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string output;
  app.add_option("-o,--output", output, "write here instead of stdout");

  IcyDrivingParams icy_params;
  std::string dry_to_icy = "9/10", dry_to_crash = "1/10", icy_to_dry = "1/2", icy_to_icy = "1/4",
              icy_to_crash = "1/4";
  auto* icy = app.add_subcommand("icy", "icy-driving model");
  icy->add_option("--dry-to-icy", dry_to_icy);
  icy->add_option("--dry-to-crash", dry_to_crash);
  icy->add_option("--icy-to-dry", icy_to_dry);
  icy->add_option("--icy-to-icy", icy_to_icy);
  icy->add_option("--icy-to-crash", icy_to_crash);

  unsigned size = 10;
  auto* snl = app.add_subcommand("snl", "snakes-and-ladders board");
  snl->add_option("size", size, "number of cells")->required();

  unsigned states = 4, observations = 2;
  std::uint64_t seed = 0;
  auto* random = app.add_subcommand("random", "random HMM");
  random->add_option("states", states)->required();
  random->add_option("observations", observations)->required();
  random->add_option("seed", seed)->required();

  std::string hmm_path;
  auto* dfa = app.add_subcommand("dfa", "random monitor over an HMM's observations");
  dfa->add_option("hmm", hmm_path)->required();
  dfa->add_option("states", states)->required();
  dfa->add_option("seed", seed)->required();

  CLI11_PARSE(app, argc, argv);
  try {
    std::string text;
    if (icy->parsed()) {
      icy_params = {parse_rational(dry_to_icy), parse_rational(dry_to_crash), parse_rational(icy_to_dry),
                    parse_rational(icy_to_icy), parse_rational(icy_to_crash)};
      text = to_json(icy_driving(icy_params));
    } else if (snl->parsed()) {
      text = to_json(snakes_ladders(size));
    } else if (random->parsed()) {
      text = to_json(random_hmm(states, observations, seed));
    } else {
      text = to_json(random_dfa(load_hmm(hmm_path).observations(), states, seed));
    }
    if (output.empty()) {
      std::cout << text;
    } else {
      write_file(output, text);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
