#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "scorecard/error.hpp"
#include "scorecard/pipeline.hpp"

namespace fs = std::filesystem;
using namespace scorecard;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

PipelineConfig config_for(const std::string& path, const std::string& out, std::optional<std::uint64_t> seed) {
  auto c = load_config(path);
  if (!out.empty()) c.output_dir = out;
  if (seed) c.override_seed(*seed);
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Customer-data scorecard: screening, variable clustering, stepwise logistic model, decile evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string config, out, model, data, schema;
  std::optional<std::uint64_t> seed;

  auto* synth = app.add_subcommand("synth", "generate a synthetic table with a planted model");
  synth->add_option("--config", config, "config file with a 'synthetic' section")->required();
  synth->add_option("--out", out, "output directory (overrides output_dir)");
  synth->add_option("--seed", seed, "seed (overrides the config)");

  auto* pipeline = app.add_subcommand("pipeline", "run screening, model fit and evaluation");
  pipeline->add_option("--config", config, "config file")->required();
  pipeline->add_option("--out", out, "output directory (overrides output_dir)");
  pipeline->add_option("--seed", seed, "seed (overrides the config)");

  auto* score_cmd = app.add_subcommand("score", "score a CSV with a saved model");
  score_cmd->add_option("--model", model, "model.json from a pipeline run")->required();
  score_cmd->add_option("--data", data, "CSV to score")->required();
  score_cmd->add_option("--schema", schema, "schema file (default: the one stored in the model)");
  score_cmd->add_option("--out", out, "output CSV")->required();

  auto* version = app.add_subcommand("version", "print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*version) {
      std::cout << kVersion << '\n';
    } else if (*synth) {
      const auto c = config_for(config, out, seed);
      if (c.output_dir.empty()) throw ConfigError("output_dir: required (set it in the config or pass --out)");
      for (const auto& p : run_synth(c)) std::cout << p.string() << '\n';
    } else if (*pipeline) {
      const auto c = config_for(config, out, seed);
      if (c.output_dir.empty()) throw ConfigError("output_dir: required (set it in the config or pass --out)");
      const auto r = run_pipeline(c);
      std::cout << "model terms: " << r.model.terms.size() << '\n';
      for (const auto& e : r.evaluations)
        std::cout << e.name << ": decile-1 lift " << e.deciles[0].lift << ", accuracy "
                  << e.metrics.accuracy.value_or(0.0) << '\n';
      std::cout << "reports in " << c.output_dir.string() << '\n';
    } else if (*score_cmd) {
      run_score(model, data, schema.empty() ? std::nullopt : std::optional<fs::path>(schema), out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
