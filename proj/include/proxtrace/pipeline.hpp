#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "proxtrace/angle_model.hpp"
#include "proxtrace/distance_model.hpp"
#include "proxtrace/ingest.hpp"
#include "proxtrace/scorer.hpp"
#include "proxtrace/synthgen.hpp"

namespace proxtrace {

/// Everything a run needs. Text form is a flat `section.key = value` document.
struct RunConfig {
  std::filesystem::path corpus_dir = "corpus";
  std::filesystem::path model_dir = "models";
  std::filesystem::path report_dir = "reports";
  GeneratorConfig generator;
  GBCConfig gbc;
  NetConfig net;
  ScoringConfig scoring;
  GrainParams params;
  FeatureMask feature_mask;
  LookMode look_mode = LookMode::full;
  std::string predict_split = "dev";
  std::uint64_t seed = 7;
  int jobs = 1;

  /// Applies one `section.key` assignment; throws ConfigError on unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  /// Applies every assignment in a config document.
  void apply_text(std::string_view text);
  void validate() const;

  /// Canonical dump of every key, in fixed order.
  std::string to_text() const;
  /// Hash over the settings that shape trained models (seed, features, gbc, net).
  std::string fingerprint() const;

  static RunConfig load(const std::filesystem::path& path);
};

/// Stable per-stage seed: adding a stage never perturbs the others.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage) noexcept;

inline constexpr std::array<std::string_view, 3> kSplits = {"train", "dev", "test"};

std::filesystem::path split_dir(const RunConfig& cfg, std::string_view split);
std::filesystem::path angle_model_path(const RunConfig& cfg);
std::filesystem::path distance_model_path(const RunConfig& cfg);
std::filesystem::path default_output_path(const RunConfig& cfg, std::string_view split);

/// Generator settings for one split, with its derived seed and labelling.
GeneratorConfig split_generator(const RunConfig& cfg, std::string_view split);

/// Event files of a split, sorted by file name.
std::vector<std::filesystem::path> list_event_files(const RunConfig& cfg, std::string_view split);

/// Writes train/dev/test corpora. Keys for train and dev, angle truth for train.
void cmd_gen(const RunConfig& cfg, std::ostream& log);

/// Stage 1 on the train split. No-op when angle is masked.
void cmd_train_angle(const RunConfig& cfg, std::ostream& log);
/// Stage 2 on the train split (uses the saved angle model unless angle is masked).
void cmd_train_dist(const RunConfig& cfg, std::ostream& log);
void cmd_train(const RunConfig& cfg, std::ostream& log);

struct PredictResult {
  std::vector<SystemOutputEntry> predictions;
  std::vector<std::string> failures;  // "file: reason"
};

/// Predicts every event of `split` and writes the system-output file.
/// Unreadable events are listed in the result and skipped.
PredictResult cmd_predict(const RunConfig& cfg, std::string_view split, const std::filesystem::path& output,
                          std::ostream& log);

/// Scores an output against a key and writes `<prefix>.txt` / `<prefix>.csv`.
ScoreReport cmd_score(const RunConfig& cfg, const std::filesystem::path& key, const std::filesystem::path& output,
                      const std::filesystem::path& report_prefix, std::ostream& log);

struct AblationVariant {
  std::string name;
  FeatureMask mask;
  LookMode look = LookMode::full;
  ScoreReport report;
};

/// Baseline, the three feature drops, and the three look subsets; writes one
/// report block per variant plus an average-nDCF summary under reports/ablation.
std::vector<AblationVariant> cmd_ablate(const RunConfig& cfg, std::ostream& log);

/// Side-by-side average nDCF table.
std::string render_summary(const std::vector<AblationVariant>& variants);

/// Re-renders saved CSV reports as aligned tables (plus a summary when several).
std::string cmd_report(const std::vector<std::filesystem::path>& csv_files);

}  // namespace proxtrace
