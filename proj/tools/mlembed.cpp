#include "mlembed/commands.hpp"
#include "mlembed/errors.hpp"
#include "mlembed/log.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Common {
  std::string config_file;
  std::vector<std::string> overrides;  // key=value
  std::map<std::string, std::string> flags;
  bool deterministic = false;
  bool print_config = false;
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("-c,--config", common.config_file, "key = value config file");
  cmd->add_option("--set", common.overrides, "override a config key, e.g. --set sgns.dim=64")->take_all();
  // Shorthands for the most used keys; all map onto config keys.
  const std::vector<std::pair<std::string, std::string>> shorthands = {
      {"--edges", "edges"},        {"--labels", "labels"},       {"--embeddings", "embeddings"},
      {"--planted", "planted"},    {"-o,--out", "output_dir"},   {"--dataset", "dataset"},
      {"--seed", "seed"},          {"-j,--threads", "threads"},  {"--threshold", "supra.threshold"},
      {"--dim", "sgns.dim"},       {"--clusters", "refine.clusters"},
  };
  for (const auto& [flag, key] : shorthands) {
    cmd->add_option_function<std::string>(flag, [&common, key](const std::string& v) { common.flags[key] = v; },
                                           "sets `" + key + "`");
  }
  cmd->add_flag("--deterministic", common.deterministic, "single-threaded, bit-reproducible numerics");
  cmd->add_flag("--print-config", common.print_config, "print the resolved config and exit");
}

mlembed::RunConfig resolve(const Common& common) {
  mlembed::RunConfig config;
  if (!common.config_file.empty()) config = mlembed::load_config(common.config_file);
  for (const auto& [key, value] : common.flags) mlembed::set_config_value(config, key, value);
  for (const auto& kv : common.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw mlembed::ValidationError("--set expects key=value, got `" + kv + "`");
    mlembed::set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (common.deterministic) config.deterministic = true;
  config.validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilayer network embedding with modularity-guided refinement"};
  app.require_subcommand(1);

  Common common;
  std::string task;
  auto* sbm = app.add_subcommand("generate-sbm", "write a planted-partition multilayer network");
  auto* supra = app.add_subcommand("build-supra", "build the supra graph and report coupling statistics");
  auto* embed = app.add_subcommand("embed", "random walks and skip-gram embeddings of every replica");
  auto* refine = app.add_subcommand("refine", "autoencoder and modularity-guided clustering refinement");
  auto* eval = app.add_subcommand("eval", "node classification, link prediction or community detection");
  auto* pipeline = app.add_subcommand("pipeline", "every stage end to end");
  for (auto* cmd : {sbm, supra, embed, refine, eval, pipeline}) add_common(cmd, common);
  eval->add_option("-t,--task", task, "nc | lp | cd")->required()->check(CLI::IsMember({"nc", "lp", "cd"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const auto config = resolve(common);
    if (common.print_config) {
      mlembed::write_config(std::cout, config);
      return 0;
    }
    if (*sbm) mlembed::cmd_generate_sbm(config, std::cout);
    else if (*supra) mlembed::cmd_build_supra(config, std::cout);
    else if (*embed) mlembed::cmd_embed(config, std::cout);
    else if (*refine) mlembed::cmd_refine(config, std::cout);
    else if (*eval) mlembed::cmd_eval(config, mlembed::parse_task(task), std::cout);
    else if (*pipeline) mlembed::cmd_pipeline(config, std::cout);
  } catch (const mlembed::NumericError& e) {
    mlembed::logger()->error("{}", e.what());
    return 3;
  } catch (const mlembed::IoError& e) {
    mlembed::logger()->error("{}", e.what());
    return 2;
  } catch (const mlembed::ValidationError& e) {
    mlembed::logger()->error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    mlembed::logger()->error("unexpected failure: {}", e.what());
    return 3;
  }
  return 0;
}
