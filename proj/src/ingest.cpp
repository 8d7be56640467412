#include "proxtrace/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "proxtrace/error.hpp"
#include "proxtrace/text.hpp"

namespace proxtrace {

namespace {

constexpr std::array<std::string_view, 6> kHeaderKeys = {"event_id", "grain", "tx_power",
                                                         "carry", "pose", "reference_distance"};

std::size_t channel_slot(Channel c) noexcept { return static_cast<std::size_t>(c); }

/// Lines of a text file; a trailing LF does not produce an extra empty line.
std::vector<std::string_view> lines_of(std::string_view bytes) {
  auto lines = text::split(bytes, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  for (auto& l : lines)
    if (l.ends_with('\r')) l.remove_suffix(1);
  return lines;
}

}  // namespace

// ---------------------------------------------------------------------------
// Event files
// ---------------------------------------------------------------------------

EventFile parse_event_file(std::string_view bytes) {
  EventFile event;
  std::array<bool, kHeaderKeys.size()> seen{};
  bool in_body = false;
  auto lines = lines_of(bytes);

  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::size_t lineno = n + 1;
    std::string_view line = lines[n];
    if (text::trim(line).empty()) continue;

    if (line.front() == '#') {
      if (in_body) throw ParseError(lineno, "header line after readings");
      auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ParseError(lineno, "header line without '='");
      auto key = line.substr(1, eq - 1);
      auto value = line.substr(eq + 1);
      auto it = std::find(kHeaderKeys.begin(), kHeaderKeys.end(), key);
      if (it == kHeaderKeys.end()) throw ParseError(lineno, "unknown header key '" + std::string(key) + "'");
      auto slot = static_cast<std::size_t>(it - kHeaderKeys.begin());
      if (seen[slot]) throw ParseError(lineno, "duplicate header key '" + std::string(key) + "'");
      seen[slot] = true;
      try {
        auto& md = event.metadata;
        if (key == "event_id") {
          if (value.empty()) throw DataError("empty event_id");
          md.event_id = std::string(value);
        } else if (key == "grain") {
          md.grain = parse_grain(value);
        } else if (key == "tx_power") {
          auto v = text::to_int(value);
          if (!v) throw DataError("tx_power must be an integer");
          md.tx_power = static_cast<int>(*v);
        } else if (key == "carry") {
          md.carry_location = parse_carry(value);
        } else if (key == "pose") {
          md.pose = parse_pose(value);
        } else {
          md.reference_distance = parse_distance(value);
        }
      } catch (const ParseError&) {
        throw;
      } catch (const DataError& e) {
        throw ParseError(lineno, e.what());
      }
      continue;
    }

    if (!in_body) {
      for (std::size_t k = 0; k + 1 < kHeaderKeys.size(); ++k)
        if (!seen[k]) throw ParseError(lineno, "missing header key '" + std::string(kHeaderKeys[k]) + "'");
      in_body = true;
    }

    auto fields = text::split(line, ',');
    if (fields.size() < 4) throw ParseError(lineno, "expected look_index,timestamp,channel,values");
    auto look_index = text::to_int(fields[0]);
    if (!look_index || *look_index < 0) throw ParseError(lineno, "invalid look index");
    auto timestamp = text::to_double(fields[1]);
    if (!timestamp || !std::isfinite(*timestamp)) throw ParseError(lineno, "invalid timestamp");

    SensorReading reading;
    reading.timestamp = *timestamp;
    try {
      reading.channel = parse_channel(fields[2]);
    } catch (const DataError& e) {
      throw ParseError(lineno, e.what());
    }
    const std::size_t arity = component_count(reading.channel);
    if (fields.size() - 3 != arity)
      throw ParseError(lineno, std::string(to_string(reading.channel)) + " expects " + std::to_string(arity) +
                                   " component(s), got " + std::to_string(fields.size() - 3));
    for (std::size_t c = 0; c < arity; ++c) {
      auto v = text::to_double(fields[3 + c]);
      if (!v || !std::isfinite(*v)) throw ParseError(lineno, "invalid value '" + std::string(fields[3 + c]) + "'");
      reading.values[c] = *v;
    }
    if (reading.channel == Channel::bluetooth && reading.rssi() > 0.0)
      throw ParseError(lineno, "RSSI must be <= 0 dBm");

    const int idx = static_cast<int>(*look_index);
    if (event.looks.empty() || event.looks.back().look_index != idx) {
      if (!event.looks.empty()) {
        const auto& prev = event.looks.back();
        if (idx < prev.look_index) throw ParseError(lineno, "look index decreases");
        if (reading.timestamp < prev.readings.front().timestamp)
          throw ParseError(lineno, "looks not ordered by first timestamp");
      }
      event.looks.push_back(Look{idx, {}});
    }
    auto& look = event.looks.back();
    if (!look.readings.empty()) {
      if (reading.timestamp < look.readings.back().timestamp)
        throw ParseError(lineno, "non-monotone timestamp within look " + std::to_string(idx));
      if (reading.timestamp - look.readings.front().timestamp > kLookSeconds + 1e-9)
        throw ParseError(lineno, "look " + std::to_string(idx) + " spans more than 4 s");
    }
    look.readings.push_back(reading);
  }

  if (!in_body) {
    for (std::size_t k = 0; k + 1 < kHeaderKeys.size(); ++k)
      if (!seen[k])
        throw ParseError(lines.size(), "missing header key '" + std::string(kHeaderKeys[k]) + "'");
  }
  return event;
}

std::string serialize_event_file(const EventFile& event) {
  const auto& md = event.metadata;
  std::string out;
  out.reserve(64 * event.reading_count() + 128);
  out += "#event_id=" + md.event_id + "\n";
  out += "#grain=" + std::string(to_string(md.grain)) + "\n";
  out += "#tx_power=" + std::to_string(md.tx_power) + "\n";
  out += "#carry=" + std::string(to_string(md.carry_location)) + "\n";
  out += "#pose=" + std::string(to_string(md.pose)) + "\n";
  if (md.reference_distance) out += "#reference_distance=" + format_distance(*md.reference_distance) + "\n";
  for (const auto& look : event.looks) {
    for (const auto& r : look.readings) {
      out += std::to_string(look.look_index);
      out += ',';
      out += text::fixed(r.timestamp, 6);
      out += ',';
      out += to_string(r.channel);
      for (double v : r.components()) {
        out += ',';
        out += text::shortest(v);
      }
      out += '\n';
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Key and system-output files
// ---------------------------------------------------------------------------

std::vector<KeyEntry> parse_key_file(std::string_view bytes) {
  std::vector<KeyEntry> out;
  auto lines = lines_of(bytes);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (text::trim(lines[n]).empty()) continue;
    auto f = text::split(lines[n], '\t');
    if (f.size() != 3 || f[0].empty()) throw ParseError(n + 1, "expected event_id<TAB>distance<TAB>grain");
    try {
      KeyEntry e{std::string(f[0]), parse_distance(f[1]), parse_grain(f[2])};
      if (!grain_admits(e.grain, e.reference))
        throw DataError("coarse event labelled " + format_distance(e.reference) + " m");
      out.push_back(std::move(e));
    } catch (const ParseError&) {
      throw;
    } catch (const DataError& e) {
      throw ParseError(n + 1, e.what());
    }
  }
  return out;
}

std::string serialize_key_file(std::span<const KeyEntry> entries) {
  std::string out;
  for (const auto& e : entries)
    out += e.event_id + "\t" + format_distance(e.reference) + "\t" + std::string(to_string(e.grain)) + "\n";
  return out;
}

std::vector<SystemOutputEntry> parse_system_output(std::string_view bytes) {
  std::vector<SystemOutputEntry> out;
  auto lines = lines_of(bytes);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (text::trim(lines[n]).empty()) continue;
    auto f = text::split(lines[n], '\t');
    if (f.size() != 2 || f[0].empty()) throw ParseError(n + 1, "expected event_id<TAB>distance");
    auto d = text::to_double(f[1]);
    if (!d || !(*d > 0.0) || !std::isfinite(*d)) throw ParseError(n + 1, "predicted distance must be positive");
    out.push_back({std::string(f[0]), *d});
  }
  return out;
}

std::string serialize_system_output(std::span<const SystemOutputEntry> entries) {
  std::string out;
  for (const auto& e : entries) {
    std::string d;
    try {
      d = format_distance(class_from_metres(e.distance_m));
    } catch (const DataError&) {
      d = text::shortest(e.distance_m);
    }
    out += e.event_id + "\t" + d + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Forward fill
// ---------------------------------------------------------------------------

std::vector<FeatureRow> assemble_rows(const EventFile& event, const GrainParams& params) {
  struct Tagged {
    const SensorReading* reading;
    int look_index;
  };
  std::vector<Tagged> all;
  all.reserve(event.reading_count());
  bool any_bluetooth = false;
  for (const auto& look : event.looks) {
    for (const auto& r : look.readings) {
      all.push_back({&r, look.look_index});
      any_bluetooth |= r.channel == Channel::bluetooth;
    }
  }
  if (!any_bluetooth) throw DataError("event " + event.metadata.event_id + " has no bluetooth readings");

  std::stable_sort(all.begin(), all.end(),
                   [](const Tagged& a, const Tagged& b) { return a.reading->timestamp < b.reading->timestamp; });

  const auto& md = event.metadata;
  const PathLossParams& pl = params[md.grain];

  // Latest observation per IMU channel (gyroscope, magnetic_field, accelerometer, attitude).
  std::array<const SensorReading*, 4> latest{};
  std::vector<FeatureRow> rows;

  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    const double t = all[i].reading->timestamp;
    while (j < all.size() && all[j].reading->timestamp == t) ++j;
    // Same-timestamp sensor values count as "at or before" the bluetooth reading.
    for (std::size_t k = i; k < j; ++k)
      if (all[k].reading->channel != Channel::bluetooth) latest[channel_slot(all[k].reading->channel)] = all[k].reading;
    for (std::size_t k = i; k < j; ++k) {
      const auto& r = *all[k].reading;
      if (r.channel != Channel::bluetooth) continue;
      if (std::any_of(latest.begin(), latest.end(), [](auto* p) { return p == nullptr; })) continue;

      FeatureRow row;
      row.timestamp = r.timestamp;
      row.look_index = all[k].look_index;
      auto copy3 = [](const SensorReading* s) { return s->values; };
      row.gyro = copy3(latest[channel_slot(Channel::gyroscope)]);
      row.magnetic_field = copy3(latest[channel_slot(Channel::magnetic_field)]);
      row.accelerometer = copy3(latest[channel_slot(Channel::accelerometer)]);
      row.attitude = copy3(latest[channel_slot(Channel::attitude)]);
      for (std::size_t c = 0; c < 4; ++c) row.source_timestamps[c] = latest[c]->timestamp;
      row.rssi = r.rssi();
      row.tx_power = md.tx_power;
      row.carry_location = md.carry_location;
      row.pose = md.pose;
      row.grain = md.grain;
      row.expected_distance = expected_distance(row.rssi, pl);
      row.attenuation = attenuation(row.tx_power, row.rssi);
      rows.push_back(row);
    }
    i = j;
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Feature mask
// ---------------------------------------------------------------------------

std::string FeatureMask::to_string() const {
  std::string out;
  auto add_word = [&](const char* w) {
    if (!out.empty()) out += ' ';
    out += w;
  };
  if (coarse_grain) add_word("coarse_grain");
  if (expected_distance) add_word("expected_distance");
  if (angle) add_word("angle");
  return out.empty() ? "none" : out;
}

void FeatureMask::add(std::string_view name) {
  if (name == "coarse_grain") coarse_grain = true;
  else if (name == "expected_distance") expected_distance = true;
  else if (name == "angle") angle = true;
  else if (name == "none" || name.empty()) return;
  else throw ConfigError("unknown mask feature '" + std::string(name) + "'");
}

FeatureMask FeatureMask::parse(std::string_view words) {
  FeatureMask m;
  for (auto w : text::split_ws(words)) {
    for (auto part : text::split(w, ',')) m.add(text::trim(part));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Encoding schema
// ---------------------------------------------------------------------------

namespace {

constexpr std::array<std::string_view, 14> kBaseNumerics = {
    "gyro_x",          "gyro_y",          "gyro_z",          "magnetic_field_x", "magnetic_field_y",
    "magnetic_field_z", "accelerometer_x", "accelerometer_y", "accelerometer_z", "attitude_roll",
    "attitude_pitch",  "attitude_yaw",    "rssi",            "tx_power"};

double numeric_value(const FeatureRow& row, std::string_view name, const FeatureMask& mask,
                     const GrainParams& params) {
  for (std::size_t c = 0; c < 3; ++c) {
    if (name == kBaseNumerics[c]) return row.gyro[c];
    if (name == kBaseNumerics[3 + c]) return row.magnetic_field[c];
    if (name == kBaseNumerics[6 + c]) return row.accelerometer[c];
    if (name == kBaseNumerics[9 + c]) return row.attitude[c];
  }
  if (name == "rssi") return row.rssi;
  if (name == "tx_power") return row.tx_power;
  if (name == "expected_distance") return encoded_expected_distance(row, mask, params);
  if (name == "attenuation") return row.attenuation;
  throw DataError("unknown numeric feature '" + std::string(name) + "'");
}

std::string angle_level(int degrees) { return std::to_string(degrees); }

template <typename Enum>
std::vector<std::string> observed_levels(std::span<const FeatureRow> rows, std::size_t count,
                                         Enum (*get)(const FeatureRow&)) {
  std::vector<bool> seen(count, false);
  for (const auto& r : rows) seen[static_cast<std::size_t>(get(r))] = true;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i)
    if (seen[i]) out.emplace_back(to_string(static_cast<Enum>(i)));
  return out;
}

void one_hot(std::vector<double>& out, const std::vector<std::string>& vocab, std::string_view level) {
  auto it = std::find(vocab.begin(), vocab.end(), level);
  const std::size_t slot = it == vocab.end() ? vocab.size() : static_cast<std::size_t>(it - vocab.begin());
  for (std::size_t i = 0; i <= vocab.size(); ++i) out.push_back(i == slot ? 1.0 : 0.0);
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace

std::vector<std::string> numeric_feature_names(const FeatureMask& mask) {
  std::vector<std::string> names(kBaseNumerics.begin(), kBaseNumerics.end());
  if (!mask.expected_distance) names.emplace_back("expected_distance");
  names.emplace_back("attenuation");
  return names;
}

double encoded_expected_distance(const FeatureRow& row, const FeatureMask& mask, const GrainParams& params) {
  if (mask.coarse_grain) return expected_distance(row.rssi, kMidpointParams);
  return expected_distance(row.rssi, params[row.grain]);
}

std::size_t EncodingSchema::dimension() const noexcept {
  std::size_t d = numeric.size() + carry_vocab.size() + 1 + pose_vocab.size() + 1;
  if (!mask.coarse_grain) d += grain_vocab.size() + 1;
  if (!mask.angle) d += angle_vocab.size() + 1;
  return d;
}

std::vector<std::string> EncodingSchema::column_names() const {
  std::vector<std::string> out;
  for (const auto& f : numeric) out.push_back(f.name);
  auto block = [&](const char* prefix, const std::vector<std::string>& vocab) {
    for (const auto& level : vocab) out.push_back(std::string(prefix) + "=" + level);
    out.push_back(std::string(prefix) + "=" + std::string(kUnseenLevel));
  };
  block("carry", carry_vocab);
  block("pose", pose_vocab);
  if (!mask.coarse_grain) block("grain", grain_vocab);
  if (!mask.angle) block("angle", angle_vocab);
  return out;
}

EncodingSchema fit_schema(std::span<const FeatureRow> rows, const FeatureMask& mask, const GrainParams& params) {
  if (rows.size() < 2) throw DataError("fit_schema needs at least two rows, got " + std::to_string(rows.size()));

  EncodingSchema schema;
  schema.mask = mask;
  schema.params = params;

  const double n = static_cast<double>(rows.size());
  for (const auto& name : numeric_feature_names(mask)) {
    double sum = 0.0;
    for (const auto& r : rows) sum += numeric_value(r, name, mask, params);
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& r : rows) {
      const double d = numeric_value(r, name, mask, params) - mean;
      ss += d * d;
    }
    const double stddev = std::sqrt(ss / n);
    if (!(stddev > 0.0)) {
      schema.dropped.push_back(name);
      continue;
    }
    schema.numeric.push_back({name, mean, stddev});
  }

  schema.carry_vocab = observed_levels<CarryLocation>(rows, kNumCarryLocations,
                                                      [](const FeatureRow& r) { return r.carry_location; });
  schema.pose_vocab = observed_levels<Pose>(rows, kNumPoses, [](const FeatureRow& r) { return r.pose; });
  if (!mask.coarse_grain)
    schema.grain_vocab = observed_levels<Grain>(rows, 2, [](const FeatureRow& r) { return r.grain; });
  if (!mask.angle) {
    std::set<int> angles;
    for (const auto& r : rows) {
      if (!r.angle) throw DataError("fit_schema: row without angle while angle is not masked");
      angles.insert(*r.angle);
    }
    for (int a : angles) schema.angle_vocab.push_back(angle_level(a));
  }
  return schema;
}

FeatureVector encode_row(const FeatureRow& row, const EncodingSchema& schema, const FeatureMask& mask) {
  if (mask != schema.mask)
    throw DataError("feature mask '" + mask.to_string() + "' does not match schema mask '" +
                    schema.mask.to_string() + "'");
  FeatureVector out;
  out.reserve(schema.dimension());
  for (const auto& f : schema.numeric)
    out.push_back((numeric_value(row, f.name, mask, schema.params) - f.mean) / f.stddev);
  one_hot(out, schema.carry_vocab, to_string(row.carry_location));
  one_hot(out, schema.pose_vocab, to_string(row.pose));
  if (!mask.coarse_grain) one_hot(out, schema.grain_vocab, to_string(row.grain));
  if (!mask.angle) {
    if (!row.angle) throw DataError("row has no angle but the schema encodes one");
    one_hot(out, schema.angle_vocab, angle_level(*row.angle));
  }
  return out;
}

std::vector<double> encode_rows(std::span<const FeatureRow> rows, const EncodingSchema& schema) {
  std::vector<double> out;
  out.reserve(rows.size() * schema.dimension());
  for (const auto& r : rows) {
    auto v = encode_row(r, schema, schema.mask);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

void EncodingSchema::save(KvDocument& doc, std::string_view prefix) const {
  const std::string p(prefix);
  doc.set(p + "mask", mask.to_string());
  doc.set_doubles(p + "params.coarse", {params.coarse.tx_power, params.coarse.exponent});
  doc.set_doubles(p + "params.fine", {params.fine.tx_power, params.fine.exponent});
  std::vector<std::string> names;
  std::vector<double> means, stds;
  for (const auto& f : numeric) {
    names.push_back(f.name);
    means.push_back(f.mean);
    stds.push_back(f.stddev);
  }
  doc.set(p + "numeric.names", join(names));
  doc.set_doubles(p + "numeric.mean", means);
  doc.set_doubles(p + "numeric.std", stds);
  doc.set(p + "numeric.dropped", join(dropped));
  doc.set(p + "vocab.carry", join(carry_vocab));
  doc.set(p + "vocab.pose", join(pose_vocab));
  doc.set(p + "vocab.grain", join(grain_vocab));
  doc.set(p + "vocab.angle", join(angle_vocab));
}

EncodingSchema EncodingSchema::load(const KvDocument& doc, std::string_view prefix) {
  const std::string p(prefix);
  EncodingSchema s;
  s.mask = FeatureMask::parse(doc.get(p + "mask"));
  auto pair = [&](const std::string& key) {
    auto v = doc.get_doubles(key);
    if (v.size() != 2) throw DataError("sidecar key " + key + " must hold two numbers");
    return PathLossParams{v[0], v[1]};
  };
  s.params.coarse = pair(p + "params.coarse");
  s.params.fine = pair(p + "params.fine");
  auto names = doc.get_words(p + "numeric.names");
  auto means = doc.get_doubles(p + "numeric.mean");
  auto stds = doc.get_doubles(p + "numeric.std");
  if (names.size() != means.size() || names.size() != stds.size())
    throw DataError("schema numeric lists have inconsistent lengths");
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!(stds[i] > 0.0)) throw DataError("schema std for " + names[i] + " is not positive");
    s.numeric.push_back({names[i], means[i], stds[i]});
  }
  s.dropped = doc.get_words(p + "numeric.dropped");
  s.carry_vocab = doc.get_words(p + "vocab.carry");
  s.pose_vocab = doc.get_words(p + "vocab.pose");
  s.grain_vocab = doc.get_words(p + "vocab.grain");
  s.angle_vocab = doc.get_words(p + "vocab.angle");
  return s;
}

}  // namespace proxtrace
