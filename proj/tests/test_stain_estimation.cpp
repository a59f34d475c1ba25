#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <numeric>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "stainkit/stain_estimation.hpp"

using namespace stainkit;

namespace {

oracle::Vec3 vec(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }

Image mixture(const std::array<oracle::Vec3, 2>& s, std::uint64_t seed, double scale = 1.0) {
  return oracle::synthesise(s[0], s[1], fixture::skewed_concentrations(50000, seed, scale), 250);
}

}  // namespace

TEST_CASE("MacenkoParams validation") {
  MacenkoParams p;
  CHECK_NOTHROW(p.validate());
  p.od_threshold = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.angle_percentile = 50.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.concentration_percentile = 50.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("estimation recovers the generating stain vectors") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto s = fixture::random_stain_pair(seed);
    const StainProfile p = estimate_stain_profile(mixture(s, seed));
    CHECK(p.matrix()[0].name == "haematoxylin");
    CHECK(oracle::angle_deg(vec(p.matrix().vector(0)), s[0]) < 2.0);
    CHECK(oracle::angle_deg(vec(p.matrix().vector(1)), s[1]) < 2.0);
    CHECK(p.robust_max()[0] > 0.0);
    CHECK(p.robust_max()[1] > 0.0);
  }
}

TEST_CASE("estimation errors") {
  CHECK_THROWS_AS(estimate_stain_profile(Image(100, 100, 3, 255)), InsufficientTissue);

  const auto s = fixture::random_stain_pair(4);
  std::vector<std::array<double, 2>> single(40000);
  stainkit::SeededRng rng(9);
  for (auto& c : single) c = {rng.uniform(0.3, 1.5), 0.0};
  CHECK_THROWS_AS(estimate_stain_profile(oracle::synthesise(s[0], s[1], single, 200)),
                  DegenerateStainDistribution);

  MacenkoParams strict;
  strict.min_tissue_pixels = 60000;
  CHECK_THROWS_AS(estimate_stain_profile(mixture(s, 4), strict), InsufficientTissue);
  CHECK_THROWS_AS(estimate_stain_profile(Image(4, 4, 1)), ChannelCountError);
}

TEST_CASE("directions are scale invariant and robust_max scales linearly") {
  const auto s = fixture::random_stain_pair(5);
  const StainProfile a = estimate_stain_profile(mixture(s, 5, 1.0));
  const StainProfile b = estimate_stain_profile(mixture(s, 5, 0.8));
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(oracle::angle_deg(vec(a.matrix().vector(i)), vec(b.matrix().vector(i))) < 0.5);
    CHECK(b.robust_max()[i] / a.robust_max()[i] == doctest::Approx(0.8).epsilon(0.01));
  }
}

TEST_CASE("estimation ignores pixel order and is deterministic") {
  const auto s = fixture::random_stain_pair(6);
  const Image img = mixture(s, 6);
  Image shuffled = img;
  std::vector<std::size_t> order(img.pixel_count());
  std::iota(order.begin(), order.end(), 0);
  stainkit::SeededRng rng(77);
  for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::copy_n(img.pixel(order[i]).begin(), 3, shuffled.pixel(i).begin());
  }
  const StainProfile p = estimate_stain_profile(img);
  CHECK(estimate_stain_profile(shuffled) == p);
  CHECK(estimate_stain_profile(img) == p);
}

TEST_CASE("haematoxylin is the stain with the larger red density") {
  // Feed the stains in swapped roles: the first generator vector has less red.
  const auto s = fixture::random_stain_pair(7);
  const Image img = oracle::synthesise(s[1], s[0], fixture::skewed_concentrations(50000, 7), 250);
  const StainProfile p = estimate_stain_profile(img);
  CHECK(p.matrix().vector(0)[0] > p.matrix().vector(1)[0]);
  CHECK(oracle::angle_deg(vec(p.matrix().vector(0)), s[0]) < 2.0);
}

TEST_CASE("percentile uses linear interpolation") {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(percentile(v, 99.0) == doctest::Approx(oracle::percentile(v, 99.0)));
  CHECK(percentile(v, 99.0) == doctest::Approx(99.01));
  CHECK(percentile(v, 0.0) == 1.0);
  CHECK(percentile(v, 100.0) == 100.0);
  CHECK_THROWS_AS(percentile(std::vector<double>{}, 50.0), EmptyInput);

  stainkit::SeededRng rng(1);
  std::vector<double> r(333);
  for (double& x : r) x = rng.normal();
  for (double p : {1.0, 12.5, 50.0, 77.7, 99.0}) {
    CHECK(percentile(r, p) == doctest::Approx(oracle::percentile(r, p)).epsilon(1e-12));
  }
}

TEST_CASE("concentration_scales") {
  const ConcentrationMap constant(10, 10, 2, 0.7);
  const auto s = concentration_scales(constant, 99.0);
  CHECK(s.scale[0] == doctest::Approx(0.7));
  CHECK(s.scale[1] == doctest::Approx(0.7));
  CHECK_FALSE(s.absent[0]);

  ConcentrationMap ramp(100, 1, 2);
  for (int x = 0; x < 100; ++x) ramp.at(x, 0, 0) = x + 1.0;
  const auto r = concentration_scales(ramp, 99.0);
  std::vector<double> values(100);
  std::iota(values.begin(), values.end(), 1.0);
  CHECK(r.scale[0] == doctest::Approx(oracle::percentile(values, 99.0)));
  CHECK(r.scale[1] == 1.0);
  CHECK(r.absent[1]);

  CHECK_THROWS_AS(concentration_scales(ConcentrationMap(0, 0, 2), 99.0), EmptyInput);
}

TEST_CASE("stain profile documents") {
  const StainProfile p(presets::haematoxylin_eosin(), {1.25, 0.5});
  CHECK(parse_stain_profile(format_stain_profile(p)) == p);
  const auto dir = std::filesystem::temp_directory_path() / "stainkit_test_profile";
  write_stain_profile(dir / "p.json", p);
  CHECK(read_stain_profile(dir / "p.json") == p);
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(StainProfile(presets::haematoxylin_eosin(), {0.0, 1.0}), InvalidStainMatrix);
  CHECK_THROWS_AS(StainProfile(presets::haematoxylin_eosin_dab(), {1.0, 1.0}), InvalidStainMatrix);
  CHECK_THROWS_AS(parse_stain_profile(format_stain_matrix(presets::haematoxylin_eosin())), Error);
}
