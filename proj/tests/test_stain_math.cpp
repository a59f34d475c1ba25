#include <doctest.h>

#include <filesystem>

#include "oracles.hpp"
#include "stainkit/rng.hpp"
#include "stainkit/stain_math.hpp"

using namespace stainkit;

namespace {

Image pixel(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return Image(1, 1, 3, std::vector<std::uint8_t>{r, g, b});
}

oracle::Vec3 vec(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }

StainMatrix orthogonal_pair() {
  return StainMatrix({{"a", {1.0, 1.0, 0.0}}, {"b", {0.0, 0.2, 1.0}}});
}

}  // namespace

TEST_CASE("rgb_to_od matches the defining formula") {
  CHECK(rgb_to_od(pixel(255, 255, 255)).at(0, 0, 0) == 0.0);
  const ODImage grey24 = rgb_to_od(pixel(24, 24, 24));
  CHECK(grey24.at(0, 0, 1) == doctest::Approx(1.0103).epsilon(1e-4));
  CHECK(grey24.at(0, 0, 1) == doctest::Approx(oracle::od(24)).epsilon(1e-14));
  const ODImage black = rgb_to_od(pixel(0, 0, 0));
  CHECK(black.at(0, 0, 2) == doctest::Approx(2.4082).epsilon(1e-4));
  CHECK(std::isfinite(black.at(0, 0, 2)));

  for (int v = 0; v < 256; ++v) {
    const auto u = static_cast<std::uint8_t>(v);
    CHECK(rgb_to_od(pixel(u, u, u)).at(0, 0, 0) == doctest::Approx(oracle::od(v)).epsilon(1e-14));
  }
}

TEST_CASE("rgb_to_od rejects grey input") {
  CHECK_THROWS_AS(rgb_to_od(Image(2, 2, 1)), ChannelCountError);
}

TEST_CASE("od_to_rgb roundtrip is exact for every channel value") {
  Image all(256, 1, 3);
  for (int v = 0; v < 256; ++v) {
    for (int c = 0; c < 3; ++c) all.at(v, 0, c) = static_cast<std::uint8_t>(v);
  }
  CHECK(od_to_rgb(rgb_to_od(all)) == all);
}

TEST_CASE("od_to_rgb saturates and rejects negative density") {
  CHECK(od_to_rgb(ODImage(1, 1, 0.0)) == pixel(255, 255, 255));
  CHECK(od_to_rgb(ODImage(1, 1, 10.0)) == pixel(0, 0, 0));
  CHECK_THROWS_AS(od_to_rgb(ODImage(1, 1, -0.1)), DomainError);
  for (double d : {0.01, 0.3, 0.77, 1.5, 2.2}) {
    CHECK(od_to_rgb(ODImage(1, 1, d)).at(0, 0) == oracle::od_inverse(d));
  }
}

TEST_CASE("stain matrix validation") {
  const StainMatrix he = presets::haematoxylin_eosin();
  CHECK(he.size() == 2);
  CHECK(he[0].name == "haematoxylin");
  for (const auto& s : he.stains()) CHECK(s.od.norm() == doctest::Approx(1.0));

  CHECK_THROWS_AS(StainMatrix({{"a", {1, 0, 0}}}), InvalidStainMatrix);
  CHECK_THROWS_AS(StainMatrix({{"a", {1, 0, 0}}, {"b", {-0.5, 1, 0}}}), InvalidStainMatrix);
  CHECK_THROWS_AS(StainMatrix({{"a", {1, 0, 0}}, {"b", {1, 0.001, 0}}}), InvalidStainMatrix);
  CHECK_THROWS_AS(StainMatrix({{"a", {0, 0, 0}}, {"b", {0, 1, 0}}}), InvalidStainMatrix);
  CHECK_THROWS_AS(presets::by_name("nope"), ConfigError);
}

TEST_CASE("two-stain basis is completed with the normalised cross product") {
  const StainMatrix m = orthogonal_pair();
  const Eigen::Matrix3d b = m.basis();
  const oracle::Vec3 expect = oracle::normalise(oracle::cross(vec(m.vector(0)), vec(m.vector(1))));
  for (int i = 0; i < 3; ++i) CHECK(b(i, 2) == doctest::Approx(expect[static_cast<std::size_t>(i)]));
}

TEST_CASE("deconvolve recovers known concentrations") {
  const StainMatrix m = orthogonal_pair();
  SUBCASE("stain vector itself") {
    ODImage od(1, 1);
    for (int c = 0; c < 3; ++c) od.at(0, 0, c) = m.vector(0)[c];
    const ConcentrationMap c = deconvolve(od, m);
    CHECK(c.at(0, 0, 0) == doctest::Approx(1.0));
    CHECK(c.at(0, 0, 1) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("mixture 0.5 s1 + 0.3 s2") {
    ODImage od(1, 1);
    for (int c = 0; c < 3; ++c) od.at(0, 0, c) = 0.5 * m.vector(0)[c] + 0.3 * m.vector(1)[c];
    const ConcentrationMap c = deconvolve(od, m);
    CHECK(std::abs(c.at(0, 0, 0) - 0.5) < 1e-9);
    CHECK(std::abs(c.at(0, 0, 1) - 0.3) < 1e-9);
  }
  SUBCASE("zero input") {
    const ConcentrationMap c = deconvolve(ODImage(1, 1, 0.0), m);
    CHECK(c.at(0, 0, 0) == 0.0);
    CHECK(c.at(0, 0, 1) == 0.0);
  }
}

TEST_CASE("deconvolve agrees with Cramer's rule on random densities") {
  const StainMatrix m = presets::haematoxylin_eosin_dab();
  SeededRng rng(11);
  ODImage od(64, 1);
  for (double& v : od.data()) v = rng.uniform(0.0, 2.0);
  const Deconvolver solve(m);
  for (int x = 0; x < 64; ++x) {
    const oracle::Vec3 b{od.at(x, 0, 0), od.at(x, 0, 1), od.at(x, 0, 2)};
    const oracle::Vec3 ref = oracle::cramer(vec(m.vector(0)), vec(m.vector(1)), vec(m.vector(2)), b);
    const Eigen::Vector3d got = solve.solve({b[0], b[1], b[2]});
    for (int i = 0; i < 3; ++i) CHECK(got[i] == doctest::Approx(ref[static_cast<std::size_t>(i)]).epsilon(1e-9));
  }
  const ConcentrationMap c = deconvolve(od, m);
  for (double v : c.data()) CHECK(v >= 0.0);
}

TEST_CASE("deconvolution is linear when no clamping occurs") {
  const StainMatrix m = presets::haematoxylin_eosin();
  ODImage od1(1, 1), od2(1, 1), mix(1, 1);
  for (int c = 0; c < 3; ++c) {
    od1.at(0, 0, c) = 0.4 * m.vector(0)[c] + 0.1 * m.vector(1)[c];
    od2.at(0, 0, c) = 0.2 * m.vector(0)[c] + 0.7 * m.vector(1)[c];
    mix.at(0, 0, c) = 2.0 * od1.at(0, 0, c) + 0.5 * od2.at(0, 0, c);
  }
  const auto a = deconvolve(od1, m), b = deconvolve(od2, m), ab = deconvolve(mix, m);
  for (int s = 0; s < 2; ++s) {
    CHECK(ab.at(0, 0, s) == doctest::Approx(2.0 * a.at(0, 0, s) + 0.5 * b.at(0, 0, s)));
  }
}

TEST_CASE("near-parallel basis raises SingularStainMatrix") {
  // Pairwise well separated but almost coplanar.
  const StainMatrix m({{"a", {1.0, 0.0, 0.0}}, {"b", {0.0, 1.0, 0.0}}, {"c", {1.0, 1.0, 1e-8}}});
  CHECK_THROWS_AS(deconvolve(ODImage(1, 1, 0.1), m), SingularStainMatrix);
}

TEST_CASE("residual reports the unexplained density") {
  const StainMatrix m = orthogonal_pair();
  ODImage od(1, 1);
  const oracle::Vec3 third = oracle::normalise(oracle::cross(vec(m.vector(0)), vec(m.vector(1))));
  for (int c = 0; c < 3; ++c) od.at(0, 0, c) = 0.2 * m.vector(0)[c] + 0.25 * third[static_cast<std::size_t>(c)];
  const Deconvolution d = deconvolve_with_residual(od, m);
  CHECK(d.residual.at(0, 0) == doctest::Approx(0.25));
}

TEST_CASE("reconstruct inverts deconvolve on synthesised images") {
  const StainMatrix m = presets::haematoxylin_eosin();
  SeededRng rng(5);
  std::vector<std::array<double, 2>> conc(32 * 32);
  for (auto& c : conc) c = {rng.uniform(0.0, 1.2), rng.uniform(0.0, 1.2)};
  const Image img = oracle::synthesise(vec(m.vector(0)), vec(m.vector(1)), conc, 32);
  const Image back = reconstruct(deconvolve(rgb_to_od(img), m), m);
  double err = 0.0;
  for (std::size_t i = 0; i < img.data().size(); ++i) err += std::abs(img.data()[i] - back.data()[i]);
  CHECK(err / static_cast<double>(img.data().size()) <= 2.0);
}

TEST_CASE("reconstruct edge cases") {
  const StainMatrix m = presets::haematoxylin_eosin();
  CHECK(reconstruct(ConcentrationMap(3, 2, 2, 0.0), m) == Image(3, 2, 3, 255));
  CHECK_THROWS_AS(reconstruct(ConcentrationMap(1, 1, 3), m), DimensionError);

  const StainMatrix hand({{"h", {0.65, 0.70, 0.29}}, {"e", {0.07, 0.99, 0.11}}});
  ConcentrationMap one(1, 1, 2, std::vector<double>{1.0, 0.0});
  const oracle::Vec3 s1 = oracle::normalise({0.65, 0.70, 0.29});
  const Image px = reconstruct(one, hand);
  for (int c = 0; c < 3; ++c) CHECK(px.at(0, 0, c) == oracle::od_inverse(s1[static_cast<std::size_t>(c)]));
}

TEST_CASE("stain matrix document roundtrip") {
  const StainMatrix m = presets::haematoxylin_eosin_dab();
  const StainMatrixDocument doc = parse_stain_matrix(format_stain_matrix(m, 240.0));
  CHECK(doc.matrix == m);
  CHECK(doc.i0 == 240.0);

  const auto re = parse_stain_matrix(
      R"({"i0": 255, "stains": [{"name": "x", "od": [2, 0, 0]}, {"name": "y", "od": [0, 3, 0]}]})");
  CHECK(re.matrix.vector(0)[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(parse_stain_matrix("{"), ParseError);
  CHECK_THROWS_AS(parse_stain_matrix(R"({"stains": [{"name": "x", "od": [1, 0]}]})"), Error);

  const auto dir = std::filesystem::temp_directory_path() / "stainkit_test_matrix";
  write_stain_matrix(dir / "m.json", m);
  CHECK(load_stain_matrix((dir / "m.json").string()) == m);
  CHECK(load_stain_matrix("he") == presets::haematoxylin_eosin());
  std::filesystem::remove_all(dir);
}

TEST_CASE("pure functions are bit-reproducible") {
  SeededRng rng(3);
  Image img(16, 16, 3);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng.index(256));
  const StainMatrix m = presets::haematoxylin_dab();
  const auto a = deconvolve(rgb_to_od(img), m);
  const auto b = deconvolve(rgb_to_od(img), m);
  CHECK(a == b);
}
