#include <doctest.h>

#include <cmath>
#include <random>

#include "proxtrace/core.hpp"
#include "proxtrace/error.hpp"
#include "proxtrace/sidecar.hpp"
#include "proxtrace/text.hpp"

using namespace proxtrace;

TEST_CASE("quantize_distance maps protocol bands") {
  CHECK(quantize_distance(0.9) == DistanceClass::d1_2);
  CHECK(quantize_distance(2.4) == DistanceClass::d3_0);
  CHECK(quantize_distance(1.5) == DistanceClass::d1_8);
  CHECK(quantize_distance(4.5) == DistanceClass::d4_5);
  CHECK_THROWS_AS(quantize_distance(2.0), DataError);
  CHECK_THROWS_AS(quantize_distance(0.5), DataError);
  CHECK_THROWS_AS(quantize_distance(5.0), DataError);
}

TEST_CASE("quantization round trip on class distances") {
  for (auto c : kAllDistanceClasses) {
    CHECK(quantize_distance(metres(c)) == c);
    CHECK(parse_distance(format_distance(c)) == c);
    CHECK(class_from_index(class_index(c)) == c);
  }
  CHECK(format_distance(DistanceClass::d3_0) == "3.0");
}

TEST_CASE("expected_distance") {
  CHECK(expected_distance(-52, kCoarseParams) == 1.0);
  CHECK(expected_distance(-78, kCoarseParams) == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(expected_distance(-75, kFineParams) == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(expected_distance(-76.5, kMidpointParams) == doctest::Approx(10.0).epsilon(1e-9));
  CHECK_THROWS(expected_distance(-60, PathLossParams{-52, 0.0}));
}

TEST_CASE("expected_distance is positive and 1 at tx") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-120, 0);
  for (int i = 0; i < 1000; ++i) {
    const double rssi = u(rng);
    CHECK(expected_distance(rssi, kCoarseParams) > 0);
    CHECK(expected_distance(rssi, kFineParams) > 0);
    const PathLossParams p{rssi, 1.0 + (i % 7) * 0.3};
    CHECK(expected_distance(rssi, p) == 1.0);
  }
}

TEST_CASE("attenuation") {
  CHECK(attenuation(-52, -60) == 8);
  CHECK(attenuation(-52, -52) == 0);
  CHECK(attenuation(-54, -80) == 26);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> u(-120, 0);
  for (int i = 0; i < 1000; ++i) {
    const double tx = u(rng), rssi = u(rng);
    CHECK(attenuation(tx, rssi) + rssi == tx);
  }
}

TEST_CASE("grain admits") {
  CHECK(grain_admits(Grain::coarse, DistanceClass::d1_8));
  CHECK(grain_admits(Grain::coarse, DistanceClass::d4_5));
  CHECK_FALSE(grain_admits(Grain::coarse, DistanceClass::d1_2));
  CHECK_FALSE(grain_admits(Grain::coarse, DistanceClass::d3_0));
  for (auto c : kAllDistanceClasses) CHECK(grain_admits(Grain::fine, c));
  CHECK(parse_grain("coarse") == Grain::coarse);
  CHECK_THROWS(parse_grain("medium"));
}

TEST_CASE("text number formatting round trips") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0, 50);
  for (int i = 0; i < 1000; ++i) {
    const double v = n(rng);
    CHECK(*text::to_double(text::shortest(v)) == v);
    CHECK(*text::to_double(text::sig17(v)) == v);
  }
  CHECK(text::fixed(-0.001, 2) == "0.00");
  CHECK_FALSE(text::to_double("1.0x"));
  CHECK_FALSE(text::to_int("3.5"));
}

TEST_CASE("sidecar documents") {
  KvDocument d;
  d.set("a.b", "hello world");
  d.set_doubles("v", {1.0, -2.5, 0.1});
  CHECK_THROWS(d.set("a.b", "again"));
  auto back = KvDocument::parse(d.serialize());
  CHECK(back.get("a.b") == "hello world");
  CHECK(back.get_doubles("v") == std::vector<double>{1.0, -2.5, 0.1});
  CHECK_THROWS(back.get("missing"));
}
