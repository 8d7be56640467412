#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "proxtrace/core.hpp"
#include "proxtrace/ingest.hpp"

namespace proxtrace {

struct GeneratorConfig {
  std::uint64_t seed = 7;
  int events_per_class = 8;
  double grain_mix = 0.5;        // fraction of coarse events
  double shadowing_sigma = 2.0;  // dB
  double sample_rate = 4.0;      // Hz per channel
  double look_step = 11.0;       // seconds of gap after each 4 s look
  double missing_probability = 0.1;
  GrainParams params_by_grain;
  std::array<double, kNumCarryLocations> carry_weights{1.0, 1.0, 1.0, 1.0, 0.0};
  std::array<double, kNumPoses> pose_weights{1.0, 1.0, 1.0, 0.0};
  std::vector<int> tx_power_choices{-56, -54, -52, -50};
  bool labelled = true;  // write reference_distance into event headers
  std::string id_prefix = "ev";

  /// Throws ConfigError on any violated invariant.
  void validate() const;
};

inline constexpr int kAngleSegments = 8;
inline constexpr double kSegmentSeconds = 15.0;
inline constexpr int kAngleStepDegrees = 45;

struct AngleSegment {
  double start = 0.0;  // inclusive, seconds
  double end = 0.0;    // exclusive
  int angle = 0;       // degrees

  friend bool operator==(const AngleSegment&, const AngleSegment&) = default;
};

struct GroundTruth {
  std::string event_id;
  DistanceClass true_distance = DistanceClass::d1_2;
  std::vector<AngleSegment> segments;

  /// Facing angle at time t; throws DataError outside the recorded segments.
  int angle_at(double t) const;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/// TX - 10 n log10(d) + noise. Throws DataError for d <= 0.
double sample_rssi(double distance, const PathLossParams& params, double noise_db);

/// Deterministic per-event seed derived from the corpus seed and event index.
std::uint64_t event_seed(std::uint64_t corpus_seed, std::uint64_t index) noexcept;

struct GeneratedEvent {
  EventFile event;
  GroundTruth truth;
};

/// One event at a fixed protocol distance inside `distance`'s band. Throws
/// DataError when a coarse event is asked for 1.2 m or 3.0 m.
GeneratedEvent generate_event(const GeneratorConfig& config, Grain grain, DistanceClass distance,
                              std::string event_id, std::mt19937_64& rng);

struct Corpus {
  std::vector<EventFile> events;
  std::vector<KeyEntry> key;
  std::vector<GroundTruth> truth;
};

/// Exactly balanced per grain: round(events_per_class * (1 - mix)) fine events
/// per fine class and round(2 * events_per_class * mix) per coarse class.
/// `jobs` > 1 generates events on worker threads; output is identical.
Corpus generate_corpus(const GeneratorConfig& config, int jobs = 1);

/// Ground-truth file: `event_id<TAB>true_distance<TAB>start<TAB>end<TAB>angle`, one line per segment.
std::string serialize_truth_file(const std::vector<GroundTruth>& truth);
std::vector<GroundTruth> parse_truth_file(std::string_view bytes);

/// Writes events/<id>.evt plus key.tsv and truth.tsv when requested.
void write_corpus(const std::filesystem::path& dir, const Corpus& corpus, bool write_key, bool write_truth);

}  // namespace proxtrace
