#include "proxtrace/core.hpp"

#include <cmath>

#include "proxtrace/error.hpp"
#include "proxtrace/text.hpp"

namespace proxtrace {

namespace {

constexpr std::array<double, kNumDistanceClasses> kClassMetres = {1.2, 1.8, 3.0, 4.5};

struct Band {
  double lo, hi;
  DistanceClass cls;
};
constexpr std::array<Band, kNumDistanceClasses> kBands = {{
    {0.9, 1.2, DistanceClass::d1_2},
    {1.5, 1.8, DistanceClass::d1_8},
    {2.4, 3.0, DistanceClass::d3_0},
    {3.6, 4.5, DistanceClass::d4_5},
}};

constexpr double kBandSlack = 1e-9;

}  // namespace

double metres(DistanceClass c) noexcept { return kClassMetres[class_index(c)]; }

std::size_t class_index(DistanceClass c) noexcept { return static_cast<std::size_t>(c); }

DistanceClass class_from_index(std::size_t index) {
  if (index >= kNumDistanceClasses)
    throw DataError("distance class index out of range: " + std::to_string(index));
  return static_cast<DistanceClass>(index);
}

DistanceClass class_from_metres(double m) {
  for (std::size_t i = 0; i < kNumDistanceClasses; ++i)
    if (kClassMetres[i] == m) return class_from_index(i);
  throw DataError("not a distance class: " + text::shortest(m) + " m");
}

std::string format_distance(DistanceClass c) { return text::fixed(metres(c), 1); }

DistanceClass parse_distance(std::string_view s) {
  auto v = text::to_double(s);
  if (!v) throw DataError("invalid distance '" + std::string(s) + "'");
  return class_from_metres(*v);
}

DistanceClass quantize_distance(double m) {
  for (const auto& band : kBands) {
    if (m >= band.lo * (1.0 - kBandSlack) && m <= band.hi * (1.0 + kBandSlack)) return band.cls;
  }
  throw DataError("out-of-protocol distance: " + text::shortest(m) + " m");
}

std::string_view to_string(Grain g) noexcept { return g == Grain::coarse ? "coarse" : "fine"; }

Grain parse_grain(std::string_view s) {
  if (s == "coarse") return Grain::coarse;
  if (s == "fine") return Grain::fine;
  throw DataError("unknown grain '" + std::string(s) + "'");
}

bool grain_admits(Grain g, DistanceClass c) noexcept {
  return g == Grain::fine || c == DistanceClass::d1_8 || c == DistanceClass::d4_5;
}

PathLossParams default_params(Grain g) noexcept {
  return g == Grain::coarse ? kCoarseParams : kFineParams;
}

double expected_distance(double rssi, const PathLossParams& params) {
  if (!(params.exponent > 0.0)) throw DataError("path-loss exponent must be positive");
  return std::pow(10.0, (params.tx_power - rssi) / (10.0 * params.exponent));
}

std::string_view to_string(Channel c) noexcept {
  switch (c) {
    case Channel::gyroscope: return "gyroscope";
    case Channel::magnetic_field: return "magnetic_field";
    case Channel::accelerometer: return "accelerometer";
    case Channel::attitude: return "attitude";
    case Channel::bluetooth: return "bluetooth";
  }
  return "?";
}

Channel parse_channel(std::string_view s) {
  if (s == "gyroscope") return Channel::gyroscope;
  if (s == "magnetic_field") return Channel::magnetic_field;
  if (s == "accelerometer") return Channel::accelerometer;
  if (s == "attitude") return Channel::attitude;
  if (s == "bluetooth") return Channel::bluetooth;
  throw DataError("unknown channel '" + std::string(s) + "'");
}

std::size_t component_count(Channel c) noexcept { return c == Channel::bluetooth ? 1 : 3; }

std::string_view to_string(CarryLocation c) noexcept {
  switch (c) {
    case CarryLocation::hand: return "hand";
    case CarryLocation::pocket: return "pocket";
    case CarryLocation::shirt: return "shirt";
    case CarryLocation::purse: return "purse";
    case CarryLocation::unknown: return "unknown";
  }
  return "?";
}

std::string_view to_string(Pose p) noexcept {
  switch (p) {
    case Pose::sitting: return "sitting";
    case Pose::standing: return "standing";
    case Pose::walking: return "walking";
    case Pose::unknown: return "unknown";
  }
  return "?";
}

CarryLocation parse_carry(std::string_view s) {
  for (std::size_t i = 0; i < kNumCarryLocations; ++i) {
    auto c = static_cast<CarryLocation>(i);
    if (to_string(c) == s) return c;
  }
  throw DataError("unknown carry location '" + std::string(s) + "'");
}

Pose parse_pose(std::string_view s) {
  for (std::size_t i = 0; i < kNumPoses; ++i) {
    auto p = static_cast<Pose>(i);
    if (to_string(p) == s) return p;
  }
  throw DataError("unknown pose '" + std::string(s) + "'");
}

std::size_t EventFile::reading_count() const noexcept {
  std::size_t n = 0;
  for (const auto& look : looks) n += look.readings.size();
  return n;
}

}  // namespace proxtrace
