#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "proxtrace/core.hpp"
#include "proxtrace/sidecar.hpp"

namespace proxtrace {

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

/// Event file: `#key=value` header, then `look_index,timestamp,channel,v1[,v2,v3]` lines.
EventFile parse_event_file(std::string_view bytes);
std::string serialize_event_file(const EventFile& event);

struct KeyEntry {
  std::string event_id;
  DistanceClass reference;
  Grain grain;

  friend bool operator==(const KeyEntry&, const KeyEntry&) = default;
};

/// `event_id<TAB>reference_distance_m<TAB>grain` per line.
std::vector<KeyEntry> parse_key_file(std::string_view bytes);
std::string serialize_key_file(std::span<const KeyEntry> entries);

struct SystemOutputEntry {
  std::string event_id;
  double distance_m;
};

/// `event_id<TAB>predicted_distance_m` per line.
std::vector<SystemOutputEntry> parse_system_output(std::string_view bytes);
std::string serialize_system_output(std::span<const SystemOutputEntry> entries);

// ---------------------------------------------------------------------------
// Feature rows
// ---------------------------------------------------------------------------

/// Path-loss constants per grain used when computing expected distance.
struct GrainParams {
  PathLossParams coarse = kCoarseParams;
  PathLossParams fine = kFineParams;

  const PathLossParams& operator[](Grain g) const noexcept { return g == Grain::coarse ? coarse : fine; }

  friend bool operator==(const GrainParams&, const GrainParams&) = default;
};

/// One bluetooth timestamp with every sensor channel carried forward to it.
struct FeatureRow {
  double timestamp = 0.0;
  int look_index = 0;
  std::array<double, 3> gyro{};
  std::array<double, 3> magnetic_field{};
  std::array<double, 3> accelerometer{};
  std::array<double, 3> attitude{};  // roll, pitch, yaw (rad)
  double rssi = 0.0;
  double tx_power = 0.0;
  CarryLocation carry_location = CarryLocation::unknown;
  Pose pose = Pose::unknown;
  Grain grain = Grain::fine;
  double expected_distance = 0.0;
  double attenuation = 0.0;
  std::optional<int> angle;  // degrees, set once the angle model has run

  /// Timestamps the gyro/magnetic/accelerometer/attitude values were observed at.
  std::array<double, 4> source_timestamps{};
};

/// Last-observation-carried-forward over the whole event. One candidate row per
/// bluetooth reading; rows with a never-observed channel are dropped.
/// Throws DataError when the event has no bluetooth readings.
std::vector<FeatureRow> assemble_rows(const EventFile& event, const GrainParams& params = {});

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

/// Engineered inputs that can be withheld for ablations.
struct FeatureMask {
  bool coarse_grain = false;
  bool expected_distance = false;
  bool angle = false;

  bool empty() const noexcept { return !coarse_grain && !expected_distance && !angle; }
  /// Space-separated names in fixed order; "none" when empty.
  std::string to_string() const;
  static FeatureMask parse(std::string_view words);
  /// Accepts "coarse_grain", "expected_distance" or "angle".
  void add(std::string_view name);

  friend bool operator==(const FeatureMask&, const FeatureMask&) = default;
};

/// Reserved vocabulary slot for levels not seen while fitting.
inline constexpr std::string_view kUnseenLevel = "<unseen>";

struct NumericFeature {
  std::string name;
  double mean = 0.0;
  double stddev = 1.0;

  friend bool operator==(const NumericFeature&, const NumericFeature&) = default;
};

struct EncodingSchema {
  FeatureMask mask;
  GrainParams params;                  // constants used for expected distance
  std::vector<NumericFeature> numeric;  // retained, in encoding order
  std::vector<std::string> dropped;     // zero-variance numerics
  // Categorical vocabularies; the unseen bucket follows the listed levels.
  std::vector<std::string> carry_vocab;
  std::vector<std::string> pose_vocab;
  std::vector<std::string> grain_vocab;  // empty when the grain indicator is masked
  std::vector<std::string> angle_vocab;  // empty when angle is masked

  std::size_t dimension() const noexcept;
  /// Column names, numerics first, then "carry=hand" style one-hot slots.
  std::vector<std::string> column_names() const;

  void save(KvDocument& doc, std::string_view prefix) const;
  static EncodingSchema load(const KvDocument& doc, std::string_view prefix);

  friend bool operator==(const EncodingSchema&, const EncodingSchema&) = default;
};

using FeatureVector = std::vector<double>;

/// Candidate numeric feature names in schema order for a given mask.
std::vector<std::string> numeric_feature_names(const FeatureMask& mask);

/// Expected distance as the encoder sees it: recomputed with the midpoint
/// constants when the grain indicator is masked.
double encoded_expected_distance(const FeatureRow& row, const FeatureMask& mask, const GrainParams& params);

/// Z-score statistics (population std) and vocabularies from training rows.
/// Requires at least two rows; drops zero-variance numerics.
EncodingSchema fit_schema(std::span<const FeatureRow> rows, const FeatureMask& mask = {},
                          const GrainParams& params = {});

/// Z-scored numerics followed by one-hot blocks in schema order.
/// Throws DataError when `mask` differs from the schema's or a required field is absent.
FeatureVector encode_row(const FeatureRow& row, const EncodingSchema& schema, const FeatureMask& mask);

/// Row-major N x dimension matrix of encoded rows.
std::vector<double> encode_rows(std::span<const FeatureRow> rows, const EncodingSchema& schema);

}  // namespace proxtrace
