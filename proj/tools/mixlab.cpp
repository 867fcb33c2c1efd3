#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mixlab/experiment.hpp"

namespace {

// CLI flag -> config key. Every subcommand accepts the same flags; the
// experiment validates the ones it needs.
const std::vector<std::pair<std::string, std::string>> kFlags{
    {"model", "model"},
    {"N", "N"},
    {"k", "k"},
    {"p", "p"},
    {"seed", "seed"},
    {"replicas", "replicas"},
    {"stationary-replicas", "stationary_replicas"},
    {"t-max", "t_max"},
    {"grid", "grid"},
    {"eps", "eps"},
    {"out", "out"},
    {"format", "format"},
    {"n-list", "n_list"},
    {"workers", "workers"},
    {"bins", "bins"},
    {"coupling", "coupling"},
    {"estimator", "estimator"},
    {"init", "init"},
    {"exact-limit", "exact_limit"},
};

const std::map<std::string, std::string> kDescriptions{
    {"spectrum", "Dirichlet Laplacian eigenvalues gamma_j"},
    {"exact", "exact d(t) and T_mix by uniformization (small N)"},
    {"simulate", "one trajectory of the graphical construction"},
    {"couple", "coupling times of the bottom and top states"},
    {"dtv", "Monte-Carlo lower/upper estimates of d(t)"},
    {"profile", "particle density profile from the packed-left start"},
    {"cutoff", "half-crossing times across a list of N"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixlab: mixing-time experiments for exclusion, interchange and corner-flip chains"};
  app.require_subcommand(1);

  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, text] : kDescriptions) {
    CLI::App* sub = app.add_subcommand(name, text);
    subs[name] = sub;
    for (const auto& [flag, key] : kFlags) sub->add_option("--" + flag, values[name][key]);
  }
  std::string config_path;
  CLI::App* run = app.add_subcommand("run", "run the experiment described by a key = value config file");
  run->add_option("config", config_path, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (run->parsed()) return mixlab::run_experiment(config_path, std::cerr);

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    mixlab::ConfigMap map{{"experiment", name}};
    for (const auto& [flag, key] : kFlags) {
      if (sub->count("--" + flag) > 0) map[key] = values[name][key];
    }
    mixlab::ExperimentConfig config;
    try {
      config = mixlab::config_from_map(map);
    } catch (const mixlab::Error& e) {
      std::cerr << "mixlab: " << e.what() << "\n";
      return 2;
    }
    return mixlab::execute(config, std::cerr);
  }
  return 2;
}
