#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "fracgamma/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Fractional p-Laplacian energies: solvers and Gamma-convergence experiments"};
  std::string command;
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  app.add_option("command", command,
                 "solve | infinity | sweep-p | sweep-s-above | sweep-s-below | verify-gamma | oracle")
      ->required();
  app.add_option("--config", config_path, "experiment description (key = value)")->required();
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides output_dir)");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides seed)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fracgamma::kExitConfig;
  }

  fracgamma::ConfigOverrides overrides;
  overrides.command = fracgamma::parse_command(command);
  if (!overrides.command) {
    std::cerr << "config error: unknown command '" << command << "'\n";
    return fracgamma::kExitConfig;
  }
  if (*out_opt) overrides.output_dir = out_dir;
  if (*seed_opt) overrides.seed = seed;

  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "config error: cannot open " << config_path << '\n';
    return fracgamma::kExitConfig;
  }
  std::ostringstream text;
  text << in.rdbuf();
  return fracgamma::run_text(text.str(), overrides, std::cout, std::cerr);
}
