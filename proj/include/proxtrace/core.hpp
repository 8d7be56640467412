#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace proxtrace {

// ---------------------------------------------------------------------------
// Distance classes and grains
// ---------------------------------------------------------------------------

/// The four reference distances of the collection protocol, ordered near to far.
enum class DistanceClass { d1_2 = 0, d1_8 = 1, d3_0 = 2, d4_5 = 3 };

inline constexpr std::size_t kNumDistanceClasses = 4;
inline constexpr std::array<DistanceClass, kNumDistanceClasses> kAllDistanceClasses = {
    DistanceClass::d1_2, DistanceClass::d1_8, DistanceClass::d3_0, DistanceClass::d4_5};

double metres(DistanceClass c) noexcept;
std::size_t class_index(DistanceClass c) noexcept;
DistanceClass class_from_index(std::size_t index);

/// Exact inverse of `metres`: accepts only the four class values.
DistanceClass class_from_metres(double m);

/// Canonical text form ("1.2", "1.8", "3.0", "4.5").
std::string format_distance(DistanceClass c);
DistanceClass parse_distance(std::string_view text);

/// Maps a protocol distance onto its class band:
/// [0.9,1.2]→1.2, [1.5,1.8]→1.8, [2.4,3.0]→3.0, [3.6,4.5]→4.5.
/// Band edges admit a 1e-9 relative slack; anything between bands throws DataError.
DistanceClass quantize_distance(double metres);

enum class Grain { coarse, fine };

std::string_view to_string(Grain g) noexcept;
Grain parse_grain(std::string_view text);

/// Coarse events are labelled only 1.8 m or 4.5 m.
bool grain_admits(Grain g, DistanceClass c) noexcept;

// ---------------------------------------------------------------------------
// Path loss
// ---------------------------------------------------------------------------

struct PathLossParams {
  double tx_power;  // dBm at 1 m
  double exponent;  // dimensionless, > 0

  friend bool operator==(const PathLossParams&, const PathLossParams&) = default;
};

inline constexpr PathLossParams kCoarseParams{-52.0, 2.6};
inline constexpr PathLossParams kFineParams{-54.0, 2.1};
/// Used when the grain indicator is withheld from the model.
inline constexpr PathLossParams kMidpointParams{-53.0, 2.35};

PathLossParams default_params(Grain g) noexcept;

/// Log-distance inversion: 10^((tx - rssi) / (10 n)).
double expected_distance(double rssi, const PathLossParams& params);

/// Total loss between transmitter and receiver, in dB.
inline double attenuation(double tx_power, double rssi) noexcept { return tx_power - rssi; }

// ---------------------------------------------------------------------------
// Sensor readings and event files
// ---------------------------------------------------------------------------

enum class Channel { gyroscope, magnetic_field, accelerometer, attitude, bluetooth };

inline constexpr std::size_t kNumChannels = 5;

std::string_view to_string(Channel c) noexcept;
Channel parse_channel(std::string_view text);
/// 3 for the IMU channels, 1 for bluetooth RSSI.
std::size_t component_count(Channel c) noexcept;

struct SensorReading {
  double timestamp = 0.0;  // seconds
  Channel channel = Channel::bluetooth;
  std::array<double, 3> values{};  // only the first component_count(channel) are meaningful

  std::span<const double> components() const noexcept {
    return {values.data(), component_count(channel)};
  }
  double rssi() const noexcept { return values[0]; }

  friend bool operator==(const SensorReading&, const SensorReading&) = default;
};

enum class CarryLocation { hand, pocket, shirt, purse, unknown };
enum class Pose { sitting, standing, walking, unknown };

inline constexpr std::size_t kNumCarryLocations = 5;
inline constexpr std::size_t kNumPoses = 4;

std::string_view to_string(CarryLocation c) noexcept;
std::string_view to_string(Pose p) noexcept;
CarryLocation parse_carry(std::string_view text);
Pose parse_pose(std::string_view text);

struct EventMetadata {
  std::string event_id;
  Grain grain = Grain::fine;
  int tx_power = 0;  // dBm
  CarryLocation carry_location = CarryLocation::unknown;
  Pose pose = Pose::unknown;
  std::optional<DistanceClass> reference_distance;

  friend bool operator==(const EventMetadata&, const EventMetadata&) = default;
};

struct Look {
  int look_index = 0;
  std::vector<SensorReading> readings;  // time-ordered, spanning at most 4 s

  friend bool operator==(const Look&, const Look&) = default;
};

struct EventFile {
  EventMetadata metadata;
  std::vector<Look> looks;  // ordered by first timestamp

  std::size_t reading_count() const noexcept;

  friend bool operator==(const EventFile&, const EventFile&) = default;
};

inline constexpr double kLookSeconds = 4.0;

}  // namespace proxtrace
