#include <doctest.h>

#include <cmath>
#include <map>

#include "proxtrace/error.hpp"
#include "proxtrace/ingest.hpp"
#include "proxtrace/synthgen.hpp"

using namespace proxtrace;

namespace {

std::string corpus_bytes(const Corpus& c) {
  std::string all;
  for (const auto& e : c.events) all += serialize_event_file(e);
  all += serialize_key_file(c.key);
  all += serialize_truth_file(c.truth);
  return all;
}

}  // namespace

TEST_CASE("sample_rssi inverts expected_distance") {
  CHECK(sample_rssi(1.0, kCoarseParams, 0) == -52);
  CHECK(sample_rssi(10.0, kCoarseParams, 0) == doctest::Approx(-78).epsilon(1e-12));
  CHECK(sample_rssi(10.0, kFineParams, 0) == doctest::Approx(-75).epsilon(1e-12));
  for (auto c : kAllDistanceClasses)
    for (auto p : {kCoarseParams, kFineParams}) {
      const double back = expected_distance(sample_rssi(metres(c), p, 0), p);
      CHECK(std::abs(back - metres(c)) <= 1e-9 * metres(c));
    }
  CHECK_THROWS_AS(sample_rssi(0.0, kCoarseParams, 0), DataError);
}

TEST_CASE("generate_event structure") {
  GeneratorConfig cfg;
  std::mt19937_64 rng(event_seed(7, 0));
  auto g = generate_event(cfg, Grain::fine, DistanceClass::d1_2, "x", rng);
  CHECK(g.truth.segments.size() == kAngleSegments);
  CHECK(g.truth.true_distance == DistanceClass::d1_2);
  CHECK(g.event.metadata.reference_distance == DistanceClass::d1_2);
  for (int s = 0; s < kAngleSegments; ++s) CHECK(g.truth.segments[s].angle == s * kAngleStepDegrees);
  double prev_end = -1;
  for (const auto& look : g.event.looks) {
    REQUIRE_FALSE(look.readings.empty());
    CHECK(look.readings.front().timestamp > prev_end);
    CHECK(look.readings.back().timestamp - look.readings.front().timestamp <= kLookSeconds + 1e-9);
    for (std::size_t i = 1; i < look.readings.size(); ++i)
      CHECK(look.readings[i].timestamp >= look.readings[i - 1].timestamp);
    prev_end = look.readings.back().timestamp;
  }
  std::mt19937_64 rng2(1);
  CHECK_THROWS_AS(generate_event(cfg, Grain::coarse, DistanceClass::d1_2, "y", rng2), DataError);
}

TEST_CASE("corpus determinism and parallel equivalence") {
  GeneratorConfig cfg;
  cfg.events_per_class = 3;
  const auto a = corpus_bytes(generate_corpus(cfg, 1));
  const auto b = corpus_bytes(generate_corpus(cfg, 1));
  const auto c = corpus_bytes(generate_corpus(cfg, 4));
  CHECK(a == b);
  CHECK(a == c);
  cfg.seed = 8;
  CHECK(corpus_bytes(generate_corpus(cfg, 1)) != a);
}

TEST_CASE("class balance") {
  GeneratorConfig cfg;
  cfg.events_per_class = 4;
  cfg.grain_mix = 0.0;
  auto fine = generate_corpus(cfg);
  CHECK(fine.events.size() == 16);
  CHECK(fine.key.size() == fine.events.size());
  std::map<DistanceClass, int> counts;
  for (const auto& k : fine.key) {
    CHECK(k.grain == Grain::fine);
    counts[k.reference]++;
  }
  for (auto c : kAllDistanceClasses) CHECK(counts[c] == 4);

  cfg.grain_mix = 1.0;
  auto coarse = generate_corpus(cfg);
  CHECK(coarse.key.size() == coarse.events.size());
  std::map<DistanceClass, int> cc;
  for (const auto& k : coarse.key) {
    CHECK(k.grain == Grain::coarse);
    CHECK((k.reference == DistanceClass::d1_8 || k.reference == DistanceClass::d4_5));
    cc[k.reference]++;
  }
  CHECK(cc[DistanceClass::d1_8] == cc[DistanceClass::d4_5]);

  cfg.grain_mix = 0.5;
  auto mixed = generate_corpus(cfg);
  std::map<std::pair<Grain, DistanceClass>, int> mc;
  for (const auto& k : mixed.key) mc[{k.grain, k.reference}]++;
  CHECK(mc[{Grain::fine, DistanceClass::d1_2}] == 2);
  CHECK(mc[{Grain::fine, DistanceClass::d4_5}] == 2);
  CHECK(mc[{Grain::coarse, DistanceClass::d1_8}] == 4);
  CHECK(mc[{Grain::coarse, DistanceClass::d4_5}] == 4);
}

TEST_CASE("noiseless corpus: every reading quantizes to its class") {
  GeneratorConfig cfg;
  cfg.events_per_class = 4;
  cfg.shadowing_sigma = 0;
  auto corpus = generate_corpus(cfg);
  for (std::size_t i = 0; i < corpus.events.size(); ++i) {
    const auto& e = corpus.events[i];
    const auto& params = cfg.params_by_grain[e.metadata.grain];
    double sum = 0;
    int n = 0;
    for (const auto& look : e.looks)
      for (const auto& r : look.readings)
        if (r.channel == Channel::bluetooth) {
          CHECK(quantize_distance(expected_distance(r.rssi(), params)) == corpus.key[i].reference);
          sum += expected_distance(r.rssi(), params);
          ++n;
        }
    REQUIRE(n > 0);
    CHECK(quantize_distance(sum / n) == corpus.key[i].reference);
  }
}

TEST_CASE("config validation") {
  GeneratorConfig cfg;
  cfg.events_per_class = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.grain_mix = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.missing_probability = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("truth file round trip and angle lookup") {
  GeneratorConfig cfg;
  cfg.events_per_class = 1;
  auto corpus = generate_corpus(cfg);
  auto text = serialize_truth_file(corpus.truth);
  auto back = parse_truth_file(text);
  CHECK(back == corpus.truth);
  CHECK(serialize_truth_file(back) == text);
  const auto& t = back.front();
  CHECK(t.angle_at(0.0) == 0);
  CHECK(t.angle_at(15.0) == 45);
  CHECK(t.angle_at(119.9) == 315);
  CHECK_THROWS_AS(t.angle_at(120.0), DataError);
}
