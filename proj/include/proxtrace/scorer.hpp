#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "proxtrace/core.hpp"
#include "proxtrace/ingest.hpp"

namespace proxtrace {

struct Threshold {
  Grain subset;
  double distance;  // D, metres

  friend bool operator==(const Threshold&, const Threshold&) = default;
};

struct ScoringConfig {
  std::vector<Threshold> thresholds{
      {Grain::fine, 1.2}, {Grain::fine, 1.8}, {Grain::fine, 3.0}, {Grain::coarse, 1.8}};
  double w_miss = 1.0;
  double w_fa = 1.0;
  double time_threshold = 0.0;  // T; only 0 is supported

  void validate() const;
};

/// Contact-event hypothesis at distance threshold D.
enum class ContactLabel { tc4tl, not_tc4tl };

/// TC4TL iff distance_m <= D.
ContactLabel decide(double distance_m, double threshold_m) noexcept;

struct ErrorRates {
  double p_miss = 0.0;
  double p_fa = 0.0;
  std::size_t n_target = 0;
  std::size_t n_nontarget = 0;
};

/// P_miss = misses / targets, P_fa = false alarms / non-targets.
/// Throws DataError when lengths differ or either pool is empty.
ErrorRates error_rates(std::span<const ContactLabel> reference, std::span<const ContactLabel> hypothesis);

/// (w_miss P_miss + w_fa P_fa) / min(w_miss, w_fa).
double ndcf(double p_miss, double p_fa, double w_miss = 1.0, double w_fa = 1.0);

struct ScoreRow {
  Grain subset = Grain::fine;
  double distance = 0.0;
  bool valid = false;
  std::string invalid_reason;
  double p_miss = 0.0;
  double p_fa = 0.0;
  double ndcf = 0.0;
  std::size_t n_target = 0;
  std::size_t n_nontarget = 0;
};

struct ScoreReport {
  std::vector<ScoreRow> rows;
  // Unweighted means over the valid rows; absent when no row is valid.
  std::optional<double> average_p_miss;
  std::optional<double> average_p_fa;
  std::optional<double> average_ndcf;

  bool all_valid() const noexcept;
  /// Aligned 2-decimal table.
  std::string render_text() const;
  /// `subset,D,p_miss,p_fa,ndcf,...` at full precision plus 2-decimal columns.
  std::string render_csv() const;
  static ScoreReport parse_csv(std::string_view csv);
};

/// Scores one system output against a key. Every key id must appear in the
/// output exactly once (extra ids are rejected too).
ScoreReport score(std::span<const KeyEntry> key, std::span<const SystemOutputEntry> output,
                  const ScoringConfig& config = {});

ScoreReport score_run(const std::filesystem::path& key_file, const std::filesystem::path& output_file,
                      const ScoringConfig& config = {});

}  // namespace proxtrace
