// proxtrace command-line driver.
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "proxtrace/error.hpp"
#include "proxtrace/pipeline.hpp"

namespace fs = std::filesystem;
using namespace proxtrace;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  int jobs = 0;
  long long seed = -1;
  std::string look;
  std::vector<std::string> masks;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "config file (section.key = value)");
  cmd->add_option("-s,--set", c.overrides, "override one setting, e.g. net.epochs=50")->take_all();
  cmd->add_option("-j,--jobs", c.jobs, "worker threads");
  cmd->add_option("--seed", c.seed, "master seed");
}

void add_features(CLI::App* cmd, Common& c) {
  cmd->add_option("--look", c.look, "look subset: first, last or full");
  cmd->add_option("--mask", c.masks, "drop a feature: coarse_grain, expected_distance, angle")->take_all();
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : RunConfig::load(c.config);
  for (const auto& o : c.overrides) {
    auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + o + "'");
    cfg.set(std::string_view(o).substr(0, eq), std::string_view(o).substr(eq + 1));
  }
  if (c.jobs > 0) cfg.jobs = c.jobs;
  if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
  if (!c.look.empty()) cfg.look_mode = parse_look_mode(c.look);
  for (const auto& m : c.masks) cfg.feature_mask.add(m);
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"proxtrace: BLE proximity (TC4TL) pipeline"};
  app.require_subcommand(1);

  Common c;
  auto* gen = app.add_subcommand("gen", "generate train/dev/test corpora");
  add_common(gen, c);

  auto* train_angle = app.add_subcommand("train-angle", "train the stage-1 angle booster");
  auto* train_dist = app.add_subcommand("train-dist", "train the stage-2 distance network");
  auto* train = app.add_subcommand("train", "train both stages");
  for (auto* cmd : {train_angle, train_dist, train}) {
    add_common(cmd, c);
    add_features(cmd, c);
  }

  std::string split, output;
  auto* predict = app.add_subcommand("predict", "write a system-output file for one split");
  add_common(predict, c);
  add_features(predict, c);
  predict->add_option("--split", split, "train, dev or test (default: predict.split)");
  predict->add_option("-o,--output", output, "output path (default: reports/<split>_output.tsv)");

  std::string key, hyp, prefix;
  auto* score = app.add_subcommand("score", "score a system output against a key");
  add_common(score, c);
  score->add_option("--key", key, "key.tsv")->required();
  score->add_option("--hyp", hyp, "system output file")->required();
  score->add_option("--prefix", prefix, "report path prefix (default: reports/score)");

  auto* ablate = app.add_subcommand("ablate", "run the feature and look ablations");
  add_common(ablate, c);

  std::vector<std::string> csvs;
  auto* report = app.add_subcommand("report", "render saved CSV score reports");
  report->add_option("csv", csvs, "report CSV files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*report) {
      std::vector<fs::path> paths(csvs.begin(), csvs.end());
      std::cout << cmd_report(paths);
      return 0;
    }
    const RunConfig cfg = resolve(c);
    if (*gen) cmd_gen(cfg, std::cerr);
    else if (*train_angle) cmd_train_angle(cfg, std::cerr);
    else if (*train_dist) cmd_train_dist(cfg, std::cerr);
    else if (*train) cmd_train(cfg, std::cerr);
    else if (*predict) {
      const std::string s = split.empty() ? cfg.predict_split : split;
      const fs::path out = output.empty() ? default_output_path(cfg, s) : fs::path(output);
      auto result = cmd_predict(cfg, s, out, std::cerr);
      if (!result.failures.empty()) {
        std::cerr << "predict: " << result.failures.size() << " event(s) could not be classified\n";
        return static_cast<int>(ErrorKind::data);
      }
    } else if (*score) {
      const fs::path p = prefix.empty() ? cfg.report_dir / "score" : fs::path(prefix);
      auto r = cmd_score(cfg, key, hyp, p, std::cout);
      (void)r;
    } else if (*ablate) {
      cmd_ablate(cfg, std::cerr);
    }
  } catch (const Error& e) {
    std::cerr << "proxtrace: error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "proxtrace: error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::data);
  }
  return 0;
}
