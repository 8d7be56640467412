#include "proxtrace/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "proxtrace/error.hpp"
#include "proxtrace/parallel.hpp"
#include "proxtrace/text.hpp"

namespace proxtrace {

namespace {

// Marked distances on the floor, grouped by the class band they fall in.
const std::array<std::vector<double>, kNumDistanceClasses> kProtocolMarks = {{
    {0.9, 1.2},
    {1.5, 1.8},
    {2.4, 2.7, 3.0},
    {3.6, 4.5},
}};

// Local geomagnetic field in the world frame (uT): horizontal north, vertical down.
constexpr double kFieldHorizontal = 20.0;
constexpr double kFieldVertical = -40.0;

constexpr double kYawNoise = 0.05;      // rad
constexpr double kTiltNoise = 0.02;     // rad
constexpr double kMagNoise = 0.5;       // uT
constexpr double kGyroNoise = 0.01;     // rad/s
constexpr double kAccelNoise = 0.01;    // g
constexpr double kWalkingFactor = 10.0;  // noise multiplier while walking

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double wrap_angle(double rad) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(rad + std::numbers::pi, two_pi);
  if (r < 0) r += two_pi;
  return r - std::numbers::pi;
}

/// Nominal device tilt (roll, pitch) for each carry location.
std::array<double, 2> carry_tilt(CarryLocation c) {
  switch (c) {
    case CarryLocation::hand: return {0.0, -0.6};
    case CarryLocation::pocket: return {0.1, 1.4};
    case CarryLocation::shirt: return {0.0, 1.3};
    case CarryLocation::purse: return {0.4, 0.2};
    case CarryLocation::unknown: return {0.0, 0.0};
  }
  return {0.0, 0.0};
}

double round_micro(double t) { return std::round(t * 1e6) / 1e6; }

template <std::size_t N>
std::size_t draw_index(const std::array<double, N>& weights, std::mt19937_64& rng) {
  std::discrete_distribution<std::size_t> dist(weights.begin(), weights.end());
  return dist(rng);
}

}  // namespace

void GeneratorConfig::validate() const {
  if (events_per_class < 1) throw ConfigError("events_per_class must be >= 1");
  if (!(grain_mix >= 0.0 && grain_mix <= 1.0)) throw ConfigError("grain_mix must lie in [0, 1]");
  if (!(shadowing_sigma >= 0.0)) throw ConfigError("shadowing_sigma must be >= 0");
  if (!(sample_rate > 0.0)) throw ConfigError("sample_rate must be > 0");
  if (!(look_step >= 0.0)) throw ConfigError("look_step must be >= 0");
  if (!(missing_probability >= 0.0 && missing_probability < 1.0))
    throw ConfigError("missing_probability must lie in [0, 1)");
  if (!(params_by_grain.coarse.exponent > 0.0 && params_by_grain.fine.exponent > 0.0))
    throw ConfigError("path-loss exponents must be > 0");
  auto positive_sum = [](const auto& w) {
    double s = 0.0;
    for (double v : w) {
      if (v < 0.0) return false;
      s += v;
    }
    return s > 0.0;
  };
  if (!positive_sum(carry_weights)) throw ConfigError("carry weights must be non-negative with a positive sum");
  if (!positive_sum(pose_weights)) throw ConfigError("pose weights must be non-negative with a positive sum");
  if (tx_power_choices.empty()) throw ConfigError("tx_power_choices is empty");
}

int GroundTruth::angle_at(double t) const {
  for (const auto& s : segments)
    if (t >= s.start && t < s.end) return s.angle;
  throw DataError("event " + event_id + ": no angle segment covers t=" + text::shortest(t));
}

double sample_rssi(double distance, const PathLossParams& params, double noise_db) {
  if (!(distance > 0.0)) throw DataError("sample_rssi needs a positive distance");
  return params.tx_power - 10.0 * params.exponent * std::log10(distance) + noise_db;
}

std::uint64_t event_seed(std::uint64_t corpus_seed, std::uint64_t index) noexcept {
  return splitmix64(corpus_seed ^ index);
}

GeneratedEvent generate_event(const GeneratorConfig& config, Grain grain, DistanceClass distance,
                              std::string event_id, std::mt19937_64& rng) {
  if (!grain_admits(grain, distance))
    throw DataError("protocol violation: coarse event at " + format_distance(distance) + " m");

  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  GeneratedEvent out;
  auto& md = out.event.metadata;
  md.event_id = std::move(event_id);
  md.grain = grain;
  md.carry_location = static_cast<CarryLocation>(draw_index(config.carry_weights, rng));
  md.pose = static_cast<Pose>(draw_index(config.pose_weights, rng));
  md.tx_power = config.tx_power_choices[std::uniform_int_distribution<std::size_t>(
      0, config.tx_power_choices.size() - 1)(rng)];
  if (config.labelled) md.reference_distance = distance;

  const auto& marks = kProtocolMarks[class_index(distance)];
  const double true_metres = marks[std::uniform_int_distribution<std::size_t>(0, marks.size() - 1)(rng)];
  const PathLossParams& pl = config.params_by_grain[grain];

  out.truth.event_id = md.event_id;
  out.truth.true_distance = distance;
  for (int s = 0; s < kAngleSegments; ++s)
    out.truth.segments.push_back({s * kSegmentSeconds, (s + 1) * kSegmentSeconds, s * kAngleStepDegrees});

  const double motion = md.pose == Pose::walking ? kWalkingFactor : 1.0;
  const auto tilt = carry_tilt(md.carry_location);
  const double duration = kAngleSegments * kSegmentSeconds;
  const double period = kLookSeconds + config.look_step;
  const double dt = 1.0 / config.sample_rate;

  int look_index = 0;
  for (double look_start = 0.0; look_start < duration; look_start += period, ++look_index) {
    Look look{look_index, {}};
    for (int k = 0;; ++k) {
      const double offset = k * dt;
      if (offset >= kLookSeconds - 1e-12) break;
      const double t = round_micro(look_start + offset);
      if (t >= duration) break;
      const double heading = out.truth.angle_at(t) * std::numbers::pi / 180.0;

      auto maybe_emit = [&](Channel ch, std::array<double, 3> v) {
        // Draw the coin unconditionally so the stream does not depend on outcomes.
        const bool withheld = uniform(rng) < config.missing_probability;
        if (ch != Channel::bluetooth && withheld) return;
        look.readings.push_back({t, ch, v});
      };

      maybe_emit(Channel::gyroscope, {kGyroNoise * motion * unit(rng), kGyroNoise * motion * unit(rng),
                                      kGyroNoise * motion * unit(rng)});
      const double mag_heading = heading + kYawNoise * unit(rng);
      maybe_emit(Channel::magnetic_field,
                 {kFieldHorizontal * std::cos(mag_heading) + kMagNoise * unit(rng),
                  -kFieldHorizontal * std::sin(mag_heading) + kMagNoise * unit(rng),
                  kFieldVertical + kMagNoise * unit(rng)});
      maybe_emit(Channel::accelerometer, {kAccelNoise * motion * unit(rng), kAccelNoise * motion * unit(rng),
                                          1.0 + kAccelNoise * motion * unit(rng)});
      const double roll = tilt[0] + kTiltNoise * motion * unit(rng);
      const double pitch = tilt[1] + kTiltNoise * motion * unit(rng);
      const double yaw = wrap_angle(heading + kYawNoise * unit(rng));
      maybe_emit(Channel::attitude, {roll, pitch, yaw});
      const double noise = config.shadowing_sigma * unit(rng);
      const double rssi = std::min(0.0, sample_rssi(true_metres, pl, noise));
      maybe_emit(Channel::bluetooth, {rssi, 0.0, 0.0});
    }
    if (!look.readings.empty()) out.event.looks.push_back(std::move(look));
  }
  return out;
}

Corpus generate_corpus(const GeneratorConfig& config, int jobs) {
  config.validate();
  const int fine_per_class = static_cast<int>(std::lround(config.events_per_class * (1.0 - config.grain_mix)));
  const int coarse_per_class = static_cast<int>(std::lround(2.0 * config.events_per_class * config.grain_mix));

  struct Plan {
    Grain grain;
    DistanceClass distance;
  };
  std::vector<Plan> plan;
  for (auto c : kAllDistanceClasses)
    for (int i = 0; i < fine_per_class; ++i) plan.push_back({Grain::fine, c});
  for (auto c : {DistanceClass::d1_8, DistanceClass::d4_5})
    for (int i = 0; i < coarse_per_class; ++i) plan.push_back({Grain::coarse, c});

  // Event ids carry no class information.
  std::mt19937_64 order_rng(splitmix64(config.seed));
  std::shuffle(plan.begin(), plan.end(), order_rng);

  const std::size_t n = plan.size();
  const int width = n >= 100000 ? 6 : 5;
  std::vector<GeneratedEvent> generated(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    std::string id = std::to_string(i);
    id = config.id_prefix + std::string(width > static_cast<int>(id.size()) ? width - id.size() : 0, '0') + id;
    std::mt19937_64 rng(event_seed(config.seed, i));
    generated[i] = generate_event(config, plan[i].grain, plan[i].distance, std::move(id), rng);
  });

  Corpus corpus;
  for (std::size_t i = 0; i < n; ++i) {
    corpus.key.push_back({generated[i].event.metadata.event_id, plan[i].distance, plan[i].grain});
    corpus.events.push_back(std::move(generated[i].event));
    corpus.truth.push_back(std::move(generated[i].truth));
  }
  return corpus;
}

std::string serialize_truth_file(const std::vector<GroundTruth>& truth) {
  std::string out;
  for (const auto& g : truth) {
    for (const auto& s : g.segments) {
      out += g.event_id + "\t" + format_distance(g.true_distance) + "\t" + text::fixed(s.start, 6) + "\t" +
             text::fixed(s.end, 6) + "\t" + std::to_string(s.angle) + "\n";
    }
  }
  return out;
}

std::vector<GroundTruth> parse_truth_file(std::string_view bytes) {
  std::vector<GroundTruth> out;
  auto lines = text::split(bytes, '\n');
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (text::trim(lines[n]).empty()) continue;
    auto f = text::split(lines[n], '\t');
    if (f.size() != 5) throw ParseError(n + 1, "expected 5 tab-separated truth fields");
    auto start = text::to_double(f[2]);
    auto end = text::to_double(f[3]);
    auto angle = text::to_int(f[4]);
    if (!start || !end || !angle || !(*end > *start)) throw ParseError(n + 1, "invalid angle segment");
    if (*angle < 0 || *angle >= 360 || *angle % kAngleStepDegrees != 0)
      throw ParseError(n + 1, "angle must be a multiple of 45 in [0, 315]");
    DistanceClass d;
    try {
      d = parse_distance(f[1]);
    } catch (const DataError& e) {
      throw ParseError(n + 1, e.what());
    }
    if (out.empty() || out.back().event_id != f[0]) out.push_back({std::string(f[0]), d, {}});
    out.back().segments.push_back({*start, *end, static_cast<int>(*angle)});
  }
  return out;
}

void write_corpus(const std::filesystem::path& dir, const Corpus& corpus, bool write_key, bool write_truth) {
  for (const auto& ev : corpus.events)
    text::write_file_atomic(dir / "events" / (ev.metadata.event_id + ".evt"), serialize_event_file(ev));
  if (write_key) text::write_file_atomic(dir / "key.tsv", serialize_key_file(corpus.key));
  if (write_truth) text::write_file_atomic(dir / "truth.tsv", serialize_truth_file(corpus.truth));
}

}  // namespace proxtrace
