// Acceptance suite. `acceptance N` runs criterion N, `acceptance` runs all.
// Prints one PASS/FAIL line per criterion; exit status is non-zero on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "proxtrace/angle_model.hpp"
#include "proxtrace/distance_model.hpp"
#include "proxtrace/error.hpp"
#include "proxtrace/ingest.hpp"
#include "proxtrace/pipeline.hpp"
#include "proxtrace/scorer.hpp"
#include "proxtrace/synthgen.hpp"
#include "proxtrace/text.hpp"

using namespace proxtrace;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("proxtrace_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string num(double v, int digits = 4) { return text::fixed(v, digits); }

// --- 1 ---------------------------------------------------------------------

struct TableRow {
  const char* set;
  const char* label;
  double p_miss, p_fa, printed;
};

Outcome scoring_fixtures() {
  const auto t0 = Clock::now();
  const std::vector<TableRow> rows = {
      {"baseline", "fine 1.20", 0.01, 0.02, 0.02},   {"baseline", "fine 1.80", 0.03, 0.01, 0.03},
      {"baseline", "fine 3.00", 0.01, 0.14, 0.15},   {"baseline", "coarse 1.80", 0.01, 0.01, 0.01},
      {"baseline", "average", 0.04, 0.05, 0.05},     {"no grain", "fine 1.20", 0.21, 0.01, 0.21},
      {"no grain", "fine 1.80", 0.14, 0.07, 0.21}, {"no grain", "fine 3.00", 0.17, 0.12, 0.29},
      {"no grain", "coarse 1.80", 0.05, 0.13, 0.18}, {"no grain", "average", 0.14, 0.08, 0.22},
      {"no expected distance", "fine 1.20", 0.00, 0.02, 0.02},  {"no expected distance", "fine 1.80", 0.03, 0.02, 0.06},
      {"no expected distance", "fine 3.00", 0.02, 0.11, 0.13},  {"no expected distance", "coarse 1.80", 0.01, 0.00, 0.01},
      {"no expected distance", "average", 0.01, 0.04, 0.06},    {"no angle", "fine 1.20", 0.01, 0.01, 0.03},
      {"no angle", "fine 1.80", 0.03, 0.02, 0.06},   {"no angle", "fine 3.00", 0.03, 0.07, 0.10},
      {"no angle", "coarse 1.80", 0.01, 0.01, 0.02}, {"no angle", "average", 0.02, 0.03, 0.04},
      {"cross-split", "fine 1.20", 0.67, 0.38, 1.05},  {"cross-split", "fine 1.80", 0.48, 0.63, 1.12},
      {"cross-split", "fine 3.00", 0.12, 0.89, 1.02},  {"cross-split", "coarse 1.80", 0.39, 0.58, 0.97},
      {"cross-split", "average", 0.42, 0.62, 1.04},
  };
  int ok = 0;
  std::string misses;
  for (const auto& r : rows) {
    const double got = ndcf(r.p_miss, r.p_fa);
    if (std::abs(got - r.printed) <= 0.015 + 1e-12) {
      ++ok;
    } else {
      misses += std::string(" ") + r.set + " " + r.label + ": ndcf(" + num(r.p_miss, 2) + "," +
                num(r.p_fa, 2) + ")=" + num(got, 2) + " vs printed " + num(r.printed, 2) + ";";
    }
  }
  const double secs = seconds_since(t0);
  return {ok == static_cast<int>(rows.size()) && secs < 1.0,
          std::to_string(ok) + "/" + std::to_string(rows.size()) + " rows within 0.015" + misses + " (" +
              num(secs, 3) + " s)"};
}

// --- 2 ---------------------------------------------------------------------

Outcome scorer_oracle() {
  const auto t0 = Clock::now();
  const auto dir = scratch("c2");
  std::mt19937_64 rng(2024);
  ScoringConfig cfg;
  std::vector<std::pair<bool, double>> th;
  for (const auto& t : cfg.thresholds) th.push_back({t.subset == Grain::coarse, t.distance});
  int equal = 0, degenerate = 0;
  std::string first_diff;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 50;
    std::vector<KeyEntry> key;
    std::vector<SystemOutputEntry> out;
    std::vector<oracle::KeyLine> okey;
    std::vector<oracle::OutLine> oout;
    for (std::size_t i = 0; i < n; ++i) {
      const bool coarse = rng() % 2;
      const auto ref =
          coarse ? (rng() % 2 ? DistanceClass::d1_8 : DistanceClass::d4_5) : class_from_index(rng() % 4);
      const auto hyp = class_from_index(rng() % 4);
      const std::string id = "ev" + std::to_string(trial) + "_" + std::to_string(i);
      key.push_back({id, ref, coarse ? Grain::coarse : Grain::fine});
      out.push_back({id, metres(hyp)});
      okey.push_back({id, metres(ref), coarse});
      oout.push_back({id, metres(hyp)});
    }
    std::shuffle(out.begin(), out.end(), rng);
    text::write_file_atomic(dir / "key.tsv", serialize_key_file(key));
    text::write_file_atomic(dir / "out.tsv", serialize_system_output(out));
    const auto got = score_run(dir / "key.tsv", dir / "out.tsv", cfg);
    const auto want = oracle::brute_force(okey, oout, th);
    bool same = got.rows.size() == want.cells.size() && got.average_ndcf == want.avg_ndcf &&
                got.average_p_miss == want.avg_miss && got.average_p_fa == want.avg_fa;
    for (std::size_t i = 0; same && i < got.rows.size(); ++i) {
      const auto& a = got.rows[i];
      const auto& b = want.cells[i];
      same = a.valid == b.valid && a.p_miss == b.p_miss && a.p_fa == b.p_fa && a.ndcf == b.ndcf &&
             static_cast<long>(a.n_target) == b.n_target && static_cast<long>(a.n_nontarget) == b.n_nontarget;
      degenerate += !a.valid;
    }
    if (same) ++equal;
    else if (first_diff.empty()) first_diff = " first mismatch at trial " + std::to_string(trial);
  }
  fs::remove_all(dir);
  const double secs = seconds_since(t0);
  return {equal == 1000 && secs < 10.0, std::to_string(equal) + "/1000 pairs identical (" +
                                            std::to_string(degenerate) + " invalid cells agreed)" + first_diff +
                                            " (" + num(secs, 2) + " s)"};
}

// --- 3 ---------------------------------------------------------------------

Outcome path_loss_fixtures() {
  bool ok = expected_distance(-52, kCoarseParams) == 1.0;
  const double a = expected_distance(-78, kCoarseParams);
  const double b = expected_distance(-75, kFineParams);
  ok = ok && std::abs(a - 10.0) <= 1e-9 * 10.0 && std::abs(b - 10.0) <= 1e-9 * 10.0;
  double worst = 0;
  for (auto c : kAllDistanceClasses)
    for (auto p : {kCoarseParams, kFineParams}) {
      const double d = metres(c);
      worst = std::max(worst, std::abs(expected_distance(sample_rssi(d, p, 0.0), p) - d) / d);
    }
  ok = ok && worst <= 1e-9;
  return {ok, "coarse(-78)=" + text::sig17(a) + ", fine(-75)=" + text::sig17(b) +
                  ", worst round-trip rel error " + text::shortest(worst)};
}

// --- 4 ---------------------------------------------------------------------

Outcome gradient_check() {
  const auto t0 = Clock::now();
  GeneratorConfig g;
  g.events_per_class = 2;
  auto corpus = generate_corpus(g);
  std::vector<FeatureRow> rows;
  for (const auto& e : corpus.events)
    for (auto r : assemble_rows(e)) {
      r.angle = kAngleClasses[rows.size() % kAngleClasses.size()];
      rows.push_back(r);
    }
  const auto schema = fit_schema(rows);
  const std::size_t dim = schema.dimension();

  std::mt19937_64 rng(99);
  std::vector<double> x;
  std::vector<int> y;
  for (int i = 0; i < 10; ++i) {
    const auto& r = rows[rng() % rows.size()];
    auto v = encode_row(r, schema, schema.mask);
    x.insert(x.end(), v.begin(), v.end());
    y.push_back(static_cast<int>(rng() % 4));
  }
  NetConfig cfg;
  DenseNetwork net(dim, cfg.hidden_layers, kNumDistanceClasses);
  net.init_he(rng);
  std::normal_distribution<double> n(0, 0.05);
  for (const auto& l : net.layers())
    for (std::size_t j = 0; j < l.out; ++j) net.parameters()[l.bias_offset + j] = n(rng);

  std::vector<double> grad;
  net.loss(x, y, &grad);
  auto params = net.parameters();
  const double h = 1e-5;
  // Every tensor is checked; large ones on a random sample of entries. Two
  // measures: L2 relative error of the sampled block, and the worst element
  // (denominator floored at 1e-6 so near-zero entries do not dominate).
  constexpr std::size_t kPerTensor = 1500;
  double worst_tensor = 0, worst_element = 0;
  std::size_t checked = 0;
  for (const auto& l : net.layers()) {
    for (auto [off, len] : {std::pair{l.weight_offset, l.in * l.out}, std::pair{l.bias_offset, l.out}}) {
      std::vector<std::size_t> idx(len);
      std::iota(idx.begin(), idx.end(), off);
      if (len > kPerTensor) {
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(kPerTensor);
      }
      double diff2 = 0, norm2 = 0;
      for (std::size_t i : idx) {
        const double keep = params[i];
        params[i] = keep + h;
        const double up = net.loss(x, y);
        params[i] = keep - h;
        const double down = net.loss(x, y);
        params[i] = keep;
        const double fd = (up - down) / (2 * h);
        diff2 += (fd - grad[i]) * (fd - grad[i]);
        norm2 += std::max(fd * fd, grad[i] * grad[i]);
        worst_element =
            std::max(worst_element, std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-6}));
        ++checked;
      }
      if (norm2 > 0) worst_tensor = std::max(worst_tensor, std::sqrt(diff2 / norm2));
    }
  }
  const double secs = seconds_since(t0);
  return {worst_tensor < 1e-4 && worst_element < 1e-4 && secs < 5.0,
          "dim " + std::to_string(dim) + ", " + std::to_string(checked) + " of " +
              std::to_string(net.parameters().size()) + " parameters over " +
              std::to_string(2 * net.layers().size()) + " tensors, worst per-tensor relative error " +
              text::shortest(worst_tensor) + ", worst element " + text::shortest(worst_element) + " (" +
              num(secs, 2) + " s)"};
}

// --- 5 ---------------------------------------------------------------------

Outcome angle_learnability() {
  const auto t0 = Clock::now();
  RunConfig cfg;
  cfg.generator.events_per_class = 32;
  auto train = generate_corpus(split_generator(cfg, "train"));
  auto held = generate_corpus(split_generator(cfg, "dev"));
  auto collect = [&](const Corpus& c, std::vector<FeatureRow>& rows, std::vector<int>& angles) {
    for (std::size_t i = 0; i < c.events.size(); ++i)
      for (const auto& r : assemble_rows(c.events[i], cfg.params)) {
        rows.push_back(r);
        angles.push_back(c.truth[i].angle_at(r.timestamp));
      }
  };
  std::vector<FeatureRow> tr, te;
  std::vector<int> ta, ea;
  collect(train, tr, ta);
  collect(held, te, ea);
  const auto model = AngleModel::train(tr, ta, cfg.gbc);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < te.size(); ++i) correct += model.predict(te[i]).angle == ea[i];
  const double acc = static_cast<double>(correct) / static_cast<double>(te.size());
  const double secs = seconds_since(t0);
  return {acc >= 0.95 && secs < 120.0, "held-out angle accuracy " + num(acc) + " on " + std::to_string(te.size()) +
                                           " rows (" + std::to_string(tr.size()) + " train rows, " +
                                           num(secs, 1) + " s)"};
}

// --- 6, 7 ------------------------------------------------------------------

RunConfig benchmark_config(const fs::path& root, double sigma) {
  RunConfig cfg;
  cfg.generator.events_per_class = 32;
  cfg.generator.shadowing_sigma = sigma;
  cfg.net.epochs = 200;
  cfg.corpus_dir = root / "corpus";
  cfg.model_dir = root / "models";
  cfg.report_dir = root / "reports";
  return cfg;
}

double run_benchmark(const RunConfig& cfg, std::ostream& log) {
  cmd_train(cfg, log);
  const auto out = default_output_path(cfg, "dev");
  auto result = cmd_predict(cfg, "dev", out, log);
  if (!result.failures.empty()) throw DataError("prediction failures: " + result.failures.front());
  auto report = cmd_score(cfg, split_dir(cfg, "dev") / "key.tsv", out, cfg.report_dir / "dev", log);
  if (!report.average_ndcf) throw DataError("no valid scoring row");
  return *report.average_ndcf;
}

Outcome end_to_end() {
  const auto t0 = Clock::now();
  std::ostringstream log;
  auto clean = benchmark_config(scratch("c6_clean"), 0.0);
  cmd_gen(clean, log);
  const double a = run_benchmark(clean, log);
  auto noisy = benchmark_config(scratch("c6_noisy"), 2.0);
  cmd_gen(noisy, log);
  const double b = run_benchmark(noisy, log);
  const double secs = seconds_since(t0);
  std::cout << log.str();
  return {a <= 0.05 && b <= 0.30 && secs < 600.0, "sigma=0 average nDCF " + num(a) + " (<= 0.05), sigma=2 average nDCF " +
                                                      num(b) + " (<= 0.30), " + num(secs, 1) + " s"};
}

Outcome ablation_direction() {
  const auto t0 = Clock::now();
  std::ostringstream log;
  auto base = benchmark_config(scratch("c7"), 2.0);
  cmd_gen(base, log);
  auto with = base;
  with.model_dir = base.model_dir / "baseline";
  with.report_dir = base.report_dir / "baseline";
  const double a = run_benchmark(with, log);
  auto without = base;
  without.feature_mask.coarse_grain = true;
  without.model_dir = base.model_dir / "no_coarse_grain";
  without.report_dir = base.report_dir / "no_coarse_grain";
  const double b = run_benchmark(without, log);
  std::cout << log.str();
  return {a <= b, "average nDCF with grain indicator " + num(a) + ", without " + num(b) + " (" +
                      num(seconds_since(t0), 1) + " s)"};
}

// --- 8 ---------------------------------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = text::read_file(e.path());
  return files;
}

Outcome determinism() {
  const auto t0 = Clock::now();
  const std::string config =
      "run.seed = 13\n"
      "gen.events_per_class = 8\n"
      "net.epochs = 40\n"
      "run.jobs = 2\n";
  std::vector<std::map<std::string, std::string>> runs;
  for (int run = 0; run < 2; ++run) {
    const auto dir = scratch("c8_run" + std::to_string(run));
    text::write_file_atomic(dir / "run.cfg", config);
    const std::string cli = PROXTRACE_CLI;
    const std::string pre = "cd '" + dir.string() + "' && '" + cli + "' ";
    const std::string quiet = " > /dev/null 2> cli.log";
    for (const std::string step :
         {"gen --config run.cfg", "train --config run.cfg", "predict --config run.cfg",
          "score --config run.cfg --key corpus/dev/key.tsv --hyp reports/dev_output.tsv --prefix reports/dev"}) {
      if (std::system((pre + step + quiet).c_str()) != 0)
        return {false, "run " + std::to_string(run) + ": '" + step + "' failed"};
    }
    fs::remove(dir / "cli.log");
    runs.push_back(snapshot(dir));
  }
  std::size_t differing = 0;
  std::string which;
  for (const auto& [name, bytes] : runs[0]) {
    auto it = runs[1].find(name);
    if (it == runs[1].end() || it->second != bytes) {
      ++differing;
      if (which.empty()) which = " e.g. " + name;
    }
  }
  differing += runs[1].size() > runs[0].size() ? runs[1].size() - runs[0].size() : 0;
  const double secs = seconds_since(t0);
  return {differing == 0 && secs < 600.0, std::to_string(runs[0].size()) + " files compared, " +
                                              std::to_string(differing) + " differ" + which + " (" + num(secs, 1) +
                                              " s)"};
}

// --- 9 ---------------------------------------------------------------------

Outcome invariants() {
  const auto t0 = Clock::now();
  std::vector<std::string> failed;
  std::mt19937_64 rng(9);

  // Forward-fill causality on a corpus with heavy missingness.
  GeneratorConfig g;
  g.events_per_class = 4;
  g.missing_probability = 0.5;
  auto corpus = generate_corpus(g);
  std::size_t rows_seen = 0;
  bool causal = true;
  for (const auto& e : corpus.events)
    for (const auto& r : assemble_rows(e)) {
      ++rows_seen;
      for (double s : r.source_timestamps) causal = causal && s <= r.timestamp;
    }
  if (!causal || rows_seen == 0) failed.push_back("forward-fill causality");

  // Mode: permutation invariance and smaller-distance tie rule.
  bool mode_ok = aggregate_event(std::vector{DistanceClass::d3_0, DistanceClass::d1_2}) == DistanceClass::d1_2 &&
                 aggregate_event(std::vector{DistanceClass::d4_5, DistanceClass::d1_8}) == DistanceClass::d1_8;
  for (int t = 0; t < 2000 && mode_ok; ++t) {
    std::vector<DistanceClass> v(1 + rng() % 12);
    for (auto& c : v) c = class_from_index(rng() % 4);
    std::array<int, 4> counts{};
    for (auto c : v) counts[class_index(c)]++;
    const auto expect = class_from_index(static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin()));
    const auto before = aggregate_event(v);
    std::shuffle(v.begin(), v.end(), rng);
    mode_ok = before == expect && aggregate_event(v) == before;
  }
  if (!mode_ok) failed.push_back("mode aggregation");

  // Softmax normalization, for both heads.
  bool norm = true;
  std::normal_distribution<double> n(0, 20);
  for (int t = 0; t < 2000; ++t) {
    std::vector<double> s(t % 2 ? 8 : 4);
    for (auto& v : s) v = n(rng);
    double sum = 0;
    for (double p : softmax(s)) {
      norm = norm && p >= 0;
      sum += p;
    }
    norm = norm && std::abs(sum - 1) <= 1e-9;
  }
  if (!norm) failed.push_back("softmax normalization");

  // Quantization round trip.
  bool quant = true;
  for (auto c : kAllDistanceClasses)
    quant = quant && quantize_distance(metres(c)) == c && parse_distance(format_distance(c)) == c;
  if (!quant) failed.push_back("quantization round trip");

  // Boosting loss monotonicity on overlapping classes.
  std::vector<double> x;
  std::vector<int> y;
  std::normal_distribution<double> noise(0, 0.7);
  for (int i = 0; i < 400; ++i) {
    const int c = i % 8;
    x.push_back(std::cos(c * M_PI / 4) + noise(rng));
    x.push_back(std::sin(c * M_PI / 4) + noise(rng));
    y.push_back(c);
  }
  GBCConfig gbc;
  gbc.n_estimators = 60;
  auto booster = SoftmaxBooster::train(x, 2, y, 8, gbc);
  bool mono = true;
  const auto& loss = booster.training_loss();
  for (std::size_t k = 1; k < loss.size(); ++k) mono = mono && loss[k] <= loss[k - 1] + 1e-9;
  if (!mono) failed.push_back("boosting loss monotonicity");

  const double secs = seconds_since(t0);
  std::string detail = failed.empty() ? "5/5 suites hold" : "violated:";
  for (const auto& f : failed) detail += " " + f;
  return {failed.empty() && secs < 60.0, detail + " (" + num(secs, 2) + " s)"};
}

const std::vector<std::pair<const char*, std::function<Outcome()>>> kCriteria = {
    {"scoring-math fixtures", scoring_fixtures},
    {"scorer oracle equivalence", scorer_oracle},
    {"path-loss fixtures", path_loss_fixtures},
    {"gradient check", gradient_check},
    {"stage-1 learnability", angle_learnability},
    {"end-to-end synthetic benchmark", end_to_end},
    {"ablation direction", ablation_direction},
    {"determinism", determinism},
    {"invariant suites", invariants},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  if (which.empty())
    for (int i = 1; i <= static_cast<int>(kCriteria.size()); ++i) which.push_back(i);

  int failures = 0;
  for (int id : which) {
    if (id < 1 || id > static_cast<int>(kCriteria.size())) {
      std::cerr << "unknown criterion " << id << "\n";
      return 1;
    }
    const auto& [name, fn] = kCriteria[id - 1];
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << o.detail << std::endl;
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
