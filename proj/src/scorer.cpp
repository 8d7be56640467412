#include "proxtrace/scorer.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_map>

#include "proxtrace/error.hpp"
#include "proxtrace/text.hpp"

namespace proxtrace {

void ScoringConfig::validate() const {
  if (thresholds.empty()) throw ConfigError("no scoring thresholds configured");
  for (const auto& t : thresholds)
    if (!(t.distance > 0.0)) throw ConfigError("scoring threshold D must be > 0");
  if (!(w_miss > 0.0 && w_fa > 0.0)) throw ConfigError("scoring weights must be > 0");
  if (time_threshold != 0.0) throw ConfigError("only T = 0 is supported");
}

ContactLabel decide(double distance_m, double threshold_m) noexcept {
  return distance_m <= threshold_m ? ContactLabel::tc4tl : ContactLabel::not_tc4tl;
}

ErrorRates error_rates(std::span<const ContactLabel> reference, std::span<const ContactLabel> hypothesis) {
  if (reference.size() != hypothesis.size()) throw DataError("reference and hypothesis lists differ in length");
  ErrorRates r;
  std::size_t misses = 0, false_alarms = 0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (reference[i] == ContactLabel::tc4tl) {
      ++r.n_target;
      misses += hypothesis[i] == ContactLabel::not_tc4tl;
    } else {
      ++r.n_nontarget;
      false_alarms += hypothesis[i] == ContactLabel::tc4tl;
    }
  }
  if (r.n_target == 0) throw DataError("undefined P_miss: no target (TC4TL) events");
  if (r.n_nontarget == 0) throw DataError("undefined P_fa: no non-target events");
  r.p_miss = static_cast<double>(misses) / static_cast<double>(r.n_target);
  r.p_fa = static_cast<double>(false_alarms) / static_cast<double>(r.n_nontarget);
  return r;
}

double ndcf(double p_miss, double p_fa, double w_miss, double w_fa) {
  return (w_miss * p_miss + w_fa * p_fa) / std::min(w_miss, w_fa);
}

ScoreReport score(std::span<const KeyEntry> key, std::span<const SystemOutputEntry> output,
                  const ScoringConfig& config) {
  config.validate();

  std::unordered_map<std::string_view, std::size_t> predicted;  // id -> index into output
  std::vector<std::string> duplicates, unknown, missing;
  for (std::size_t i = 0; i < output.size(); ++i)
    if (!predicted.emplace(output[i].event_id, i).second) duplicates.push_back(output[i].event_id);

  std::unordered_map<std::string_view, bool> key_ids;
  for (const auto& k : key) {
    if (!key_ids.emplace(k.event_id, true).second) throw DataError("duplicate event id in key: " + k.event_id);
    if (!predicted.contains(k.event_id)) missing.push_back(k.event_id);
  }
  for (const auto& o : output)
    if (!key_ids.contains(o.event_id)) unknown.push_back(o.event_id);

  if (!missing.empty() || !duplicates.empty() || !unknown.empty()) {
    auto list = [](const std::vector<std::string>& ids) {
      std::string s;
      for (std::size_t i = 0; i < ids.size() && i < 20; ++i) s += (i ? "," : "") + ids[i];
      if (ids.size() > 20) s += ",...";
      return s;
    };
    std::string msg = "system output does not match key:";
    if (!missing.empty()) msg += " missing[" + list(missing) + "]";
    if (!duplicates.empty()) msg += " duplicate[" + list(duplicates) + "]";
    if (!unknown.empty()) msg += " unknown[" + list(unknown) + "]";
    throw DataError(msg);
  }

  ScoreReport report;
  double sum_miss = 0.0, sum_fa = 0.0, sum_ndcf = 0.0;
  std::size_t valid = 0;
  for (const auto& t : config.thresholds) {
    std::vector<ContactLabel> ref, hyp;
    for (const auto& k : key) {
      if (k.grain != t.subset) continue;
      ref.push_back(decide(metres(k.reference), t.distance));
      hyp.push_back(decide(output[predicted.at(k.event_id)].distance_m, t.distance));
    }
    ScoreRow row;
    row.subset = t.subset;
    row.distance = t.distance;
    try {
      auto rates = error_rates(ref, hyp);
      row.valid = true;
      row.p_miss = rates.p_miss;
      row.p_fa = rates.p_fa;
      row.ndcf = ndcf(rates.p_miss, rates.p_fa, config.w_miss, config.w_fa);
      row.n_target = rates.n_target;
      row.n_nontarget = rates.n_nontarget;
      sum_miss += row.p_miss;
      sum_fa += row.p_fa;
      sum_ndcf += row.ndcf;
      ++valid;
    } catch (const DataError& e) {
      row.invalid_reason = e.what();
      for (auto r : ref) (r == ContactLabel::tc4tl ? row.n_target : row.n_nontarget)++;
    }
    report.rows.push_back(std::move(row));
  }
  if (valid) {
    const double v = static_cast<double>(valid);
    report.average_p_miss = sum_miss / v;
    report.average_p_fa = sum_fa / v;
    report.average_ndcf = sum_ndcf / v;
  }
  return report;
}

ScoreReport score_run(const std::filesystem::path& key_file, const std::filesystem::path& output_file,
                      const ScoringConfig& config) {
  auto key = parse_key_file(text::read_file(key_file));
  auto output = parse_system_output(text::read_file(output_file));
  return score(key, output, config);
}

bool ScoreReport::all_valid() const noexcept {
  return std::all_of(rows.begin(), rows.end(), [](const ScoreRow& r) { return r.valid; });
}

namespace {

std::string subset_name(Grain g) { return std::string(to_string(g)) + "_grain"; }

std::string two(double v) { return text::fixed(v, 2); }

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::string ScoreReport::render_text() const {
  std::string out;
  out += pad("Subset", 16) + pad("D", 7) + pad("P_miss", 8) + pad("P_fa", 8) + "nDCF\n";
  for (const auto& r : rows) {
    out += pad(subset_name(r.subset), 16) + pad(two(r.distance), 7);
    if (r.valid)
      out += pad(two(r.p_miss), 8) + pad(two(r.p_fa), 8) + two(r.ndcf) + "\n";
    else
      out += "invalid (" + r.invalid_reason + ")\n";
  }
  out += pad("average scores", 16) + pad("", 7);
  if (average_ndcf)
    out += pad(two(*average_p_miss), 8) + pad(two(*average_p_fa), 8) + two(*average_ndcf) + "\n";
  else
    out += "invalid\n";
  return out;
}

std::string ScoreReport::render_csv() const {
  std::string out = "subset,D,p_miss,p_fa,ndcf,n_target,n_nontarget,p_miss_2dp,p_fa_2dp,ndcf_2dp\n";
  for (const auto& r : rows) {
    out += subset_name(r.subset) + "," + text::fixed(r.distance, 2) + ",";
    if (r.valid) {
      out += text::sig17(r.p_miss) + "," + text::sig17(r.p_fa) + "," + text::sig17(r.ndcf) + ",";
    } else {
      out += "invalid,invalid,invalid,";
    }
    out += std::to_string(r.n_target) + "," + std::to_string(r.n_nontarget) + ",";
    out += r.valid ? two(r.p_miss) + "," + two(r.p_fa) + "," + two(r.ndcf) : "invalid,invalid,invalid";
    out += "\n";
  }
  out += "average,,";
  if (average_ndcf) {
    out += text::sig17(*average_p_miss) + "," + text::sig17(*average_p_fa) + "," + text::sig17(*average_ndcf) +
           ",,," + two(*average_p_miss) + "," + two(*average_p_fa) + "," + two(*average_ndcf);
  } else {
    out += "invalid,invalid,invalid,,,invalid,invalid,invalid";
  }
  out += "\n";
  return out;
}

ScoreReport ScoreReport::parse_csv(std::string_view csv) {
  ScoreReport report;
  auto lines = text::split(csv, '\n');
  bool header = true;
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (text::trim(lines[n]).empty()) continue;
    if (header) {
      header = false;
      if (!lines[n].starts_with("subset,D,")) throw ParseError(n + 1, "not a score report");
      continue;
    }
    auto f = text::split(lines[n], ',');
    if (f.size() != 10) throw ParseError(n + 1, "expected 10 report columns");
    if (f[0] == "average") {
      if (f[2] != "invalid") {
        report.average_p_miss = text::to_double(f[2]);
        report.average_p_fa = text::to_double(f[3]);
        report.average_ndcf = text::to_double(f[4]);
        if (!report.average_p_miss || !report.average_p_fa || !report.average_ndcf)
          throw ParseError(n + 1, "malformed average row");
      }
      continue;
    }
    ScoreRow r;
    if (f[0] == "fine_grain") r.subset = Grain::fine;
    else if (f[0] == "coarse_grain") r.subset = Grain::coarse;
    else throw ParseError(n + 1, "unknown subset '" + std::string(f[0]) + "'");
    auto d = text::to_double(f[1]);
    auto nt = text::to_int(f[5]);
    auto nn = text::to_int(f[6]);
    if (!d || !nt || !nn) throw ParseError(n + 1, "malformed report row");
    r.distance = *d;
    r.n_target = static_cast<std::size_t>(*nt);
    r.n_nontarget = static_cast<std::size_t>(*nn);
    if (f[2] == "invalid") {
      r.invalid_reason = "invalid in source report";
    } else {
      auto pm = text::to_double(f[2]), pf = text::to_double(f[3]), nd = text::to_double(f[4]);
      if (!pm || !pf || !nd) throw ParseError(n + 1, "malformed rates");
      r.valid = true;
      r.p_miss = *pm;
      r.p_fa = *pf;
      r.ndcf = *nd;
    }
    report.rows.push_back(std::move(r));
  }
  return report;
}

}  // namespace proxtrace
