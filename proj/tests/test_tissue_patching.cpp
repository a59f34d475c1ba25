#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "fixtures.hpp"
#include "stainkit/image_io.hpp"
#include "stainkit/tissue_patching.hpp"

using namespace stainkit;

namespace {

Polygon square(double cx, double cy, double half) {
  return {{cx - half, cy - half}, {cx + half, cy - half}, {cx + half, cy + half}, {cx - half, cy + half}};
}

Image expected_block(int w, int h, int x0, int y0, int bw, int bh) {
  Image m(w, h, 1, 0);
  for (int y = y0; y < y0 + bh; ++y) {
    for (int x = x0; x < x0 + bw; ++x) m.at(x, y) = 255;
  }
  return m;
}

}  // namespace

TEST_CASE("polygon geometry") {
  const Polygon sq = square(5.0, 5.0, 2.0);
  CHECK(signed_area(sq) == doctest::Approx(16.0));
  CHECK(centroid(sq).x == doctest::Approx(5.0));
  CHECK(contains(sq, 5.0, 5.0));
  CHECK_FALSE(contains(sq, 8.0, 5.0));
  // Half-open edges: left/top boundary inside, right/bottom outside.
  CHECK(contains(sq, 3.0, 5.0));
  CHECK_FALSE(contains(sq, 7.0, 5.0));
  CHECK(is_simple(sq));
  const Polygon bowtie{{0, 0}, {4, 4}, {4, 0}, {0, 4}};
  CHECK_FALSE(is_simple(bowtie));
}

TEST_CASE("rasterisation counts pixel centres") {
  const Image m = rasterize(square(5.0, 5.0, 2.0), 12, 12);
  std::size_t n = 0;
  for (std::uint8_t v : m.data()) n += v == 255;
  CHECK(n == 16);
  CHECK(m.at(3, 3) == 255);
  CHECK(m.at(6, 6) == 255);
  CHECK(m.at(7, 7) == 0);
}

TEST_CASE("annotation documents") {
  AnnotationSet set;
  set.objects.push_back({3, square(10, 10, 4)});
  const AnnotationSet back = parse_annotations(format_annotations(set));
  REQUIRE(back.objects.size() == 1);
  CHECK(back.objects[0].id == 3);
  CHECK(back.objects[0].polygon == set.objects[0].polygon);
  CHECK_THROWS_AS(parse_annotations(R"({"objects": [{"id": 1, "polygon": [[0,0],[4,4],[4,0],[0,4]]}]})"),
                  InvalidAnnotation);
  CHECK_THROWS_AS(parse_annotations(R"({"objects": [{"id": 1, "polygon": [[0,0],[4]]}]})"), Error);
  CHECK_THROWS_AS(parse_annotations("nope"), ParseError);
  CHECK_THROWS_AS(validate_annotations(set, 12, 12), InvalidAnnotation);
  CHECK_NOTHROW(validate_annotations(set, 20, 20));
}

TEST_CASE("label rasters convert to polygons that rasterise back") {
  Image labels(40, 30, 1, 0);
  for (int y = 3; y < 12; ++y) {
    for (int x = 4; x < 15; ++x) labels.at(x, y) = 1;
  }
  // An L-shape with a hole, label 2.
  for (int y = 15; y < 28; ++y) {
    for (int x = 20; x < 36; ++x) {
      if (x >= 28 && y < 21) continue;
      labels.at(x, y) = 2;
    }
  }
  labels.at(23, 24) = 0;
  // Two diagonal-touching pixels form separate 4-connected regions.
  labels.at(1, 20) = 3;
  labels.at(2, 21) = 3;

  const AnnotationSet set = annotations_from_label_raster(labels);
  CHECK(set.objects.size() == 4);
  Image filled = labels;
  filled.at(23, 24) = 2;
  for (const auto& o : set.objects) {
    CHECK(is_simple(o.polygon));
    const Image m = rasterize(o.polygon, 40, 30);
    for (int y = 0; y < 30; ++y) {
      for (int x = 0; x < 40; ++x) {
        if (m.at(x, y)) REQUIRE(filled.at(x, y) == o.id);
      }
    }
  }
  const Image all = rasterize(set, 40, 30);
  for (std::size_t i = 0; i < all.data().size(); ++i) {
    REQUIRE((all.data()[i] != 0) == (filled.data()[i] != 0));
  }
}

TEST_CASE("tissue mask fixtures") {
  SUBCASE("block") {
    const Image slide = fixture::block_slide(400, 300, 50, 40, 200, 200);
    CHECK(tissue_mask(slide).to_image() == expected_block(400, 300, 50, 40, 200, 200));
  }
  SUBCASE("speck") {
    Image slide = fixture::block_slide(400, 300, 50, 40, 200, 200);
    for (int x = 300; x < 303; ++x) {
      for (int c = 0; c < 3; ++c) slide.at(x, 280, c) = 20;
    }
    CHECK(tissue_mask(slide, 50).to_image() == expected_block(400, 300, 50, 40, 200, 200));
    CHECK(tissue_mask(slide, 2).tissue(301, 280));
  }
  SUBCASE("hole") {
    Image slide = fixture::block_slide(400, 300, 50, 40, 200, 200);
    for (int y = 100; y < 110; ++y) {
      for (int x = 120; x < 130; ++x) {
        for (int c = 0; c < 3; ++c) slide.at(x, y, c) = 255;
      }
    }
    CHECK(tissue_mask(slide, 500, true).to_image() == expected_block(400, 300, 50, 40, 200, 200));
    CHECK_FALSE(tissue_mask(slide, 500, false).tissue(125, 105));
  }
  CHECK_THROWS_AS(tissue_mask(Image(10, 10, 3, 128)), DegenerateImage);
  CHECK_THROWS_AS(tissue_mask(Image(10, 10, 1, 128)), ChannelCountError);
}

TEST_CASE("glomerulus patches") {
  Image slide(1400, 1300, 3, 200);
  AnnotationSet set;
  set.objects.push_back({1, square(1000, 1000, 30)});
  const auto patches = extract_glomerulus_patches(slide, set, 508);
  REQUIRE(patches.size() == 1);
  CHECK(patches[0].origin_x == 746);
  CHECK(patches[0].origin_y == 746);
  CHECK(patches[0].sample.image.width() == 508);
  CHECK(patches[0].sample.mask.at(254, 254) == 255);
  CHECK(patches[0].sample.label == SampleLabel::glomerulus);

  CHECK(extract_glomerulus_patches(slide, AnnotationSet{}, 508).empty());

  AnnotationSet corner;
  corner.objects.push_back({1, square(5, 5, 4)});
  corner.objects.push_back({2, square(12, 8, 4)});
  const auto edge = extract_glomerulus_patches(slide, corner, 508);
  REQUIRE(edge.size() == 2);
  for (const auto& p : edge) {
    CHECK(p.sample.image.width() == 508);
    CHECK(p.sample.image.height() == 508);
    CHECK_NOTHROW(p.sample.validate());
  }
  // Both overlapping objects appear in the first window.
  const auto& m = edge[0].sample.mask;
  CHECK(m.at(5 - edge[0].origin_x, 5 - edge[0].origin_y) == 255);
  CHECK(m.at(15 - edge[0].origin_x, 8 - edge[0].origin_y) == 255);
}

TEST_CASE("crop_reflect mirrors outside the slide") {
  Image slide(5, 4, 1);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 5; ++x) slide.at(x, y) = static_cast<std::uint8_t>(10 * y + x);
  }
  const Image c = crop_reflect(slide, -2, -1, 9);
  CHECK(c.at(0, 1) == slide.at(1, 0));
  CHECK(c.at(1, 0) == slide.at(0, 0));
  CHECK(c.at(8, 5) == slide.at(3, 3));
  CHECK(c.at(8, 8) == slide.at(3, 0));
}

TEST_CASE("tissue patch sampling") {
  SUBCASE("single tissue pixel") {
    Image slide(20, 20, 3, 200);
    TissueMask mask(20, 20);
    mask.set(7, 11, true);
    SeededRng rng(1);
    const auto p = sample_tissue_patches(slide, mask, {}, 1, 6, rng);
    REQUIRE(p.size() == 1);
    CHECK(p[0].origin_x == 4);
    CHECK(p[0].origin_y == 8);
    CHECK(p[0].sample.label == SampleLabel::tissue);
    CHECK(std::all_of(p[0].sample.mask.data().begin(), p[0].sample.mask.data().end(),
                      [](std::uint8_t v) { return v == 0; }));
  }
  SUBCASE("n = 0") {
    SeededRng rng(1);
    CHECK(sample_tissue_patches(Image(4, 4, 3), TissueMask(4, 4), {}, 0, 2, rng).empty());
  }
  SUBCASE("centres avoid annotations") {
    Image slide(60, 60, 3, 100);
    TissueMask mask(60, 60);
    for (auto& v : mask.cells()) v = 1;
    AnnotationSet set;
    set.objects.push_back({1, square(30, 30, 20)});
    SeededRng rng(2);
    const auto patches = sample_tissue_patches(slide, mask, set, 200, 8, rng);
    for (const auto& p : patches) {
      CHECK_FALSE(contains(set.objects[0].polygon, p.origin_x + 4, p.origin_y + 4));
    }
    TissueSamplingOptions strict;
    strict.exclude_overlap = true;
    SeededRng rng2(2);
    for (const auto& p : sample_tissue_patches(slide, mask, set, 20, 8, rng2, strict)) {
      const bool clear = p.origin_x + 8 <= 10 || p.origin_x >= 50 || p.origin_y + 8 <= 10 || p.origin_y >= 50;
      CHECK(clear);
    }
  }
  SUBCASE("budget exhaustion") {
    Image slide(20, 20, 3);
    TissueMask mask(20, 20);
    mask.set(10, 10, true);
    AnnotationSet set;
    set.objects.push_back({1, square(10, 10, 3)});
    SeededRng rng(3);
    CHECK_THROWS_AS(sample_tissue_patches(slide, mask, set, 2, 4, rng), InsufficientTissueArea);
    CHECK_THROWS_AS(sample_tissue_patches(slide, TissueMask(20, 20), {}, 1, 4, rng), InsufficientTissueArea);
  }
}

TEST_CASE("tissue centres are uniform over the tissue") {
  // Left half is tissue; bin centres by 5x5 blocks and run a chi-square test.
  const int w = 40, h = 40;
  TissueMask mask(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w / 2; ++x) mask.set(x, y, true);
  }
  SeededRng rng(17);
  const auto patches = sample_tissue_patches(Image(w, h, 3), mask, {}, 10000, 2, rng);
  std::vector<int> bins(32, 0);
  for (const auto& p : patches) {
    const int x = p.origin_x + 1, y = p.origin_y + 1;
    REQUIRE(mask.tissue(x, y));
    ++bins[static_cast<std::size_t>((y / 5) * 4 + x / 5)];
  }
  double chi2 = 0.0;
  for (int b : bins) chi2 += (b - 312.5) * (b - 312.5) / 312.5;
  CHECK(chi2 < 52.19);  // chi-square 0.99 quantile, 31 degrees of freedom
}

TEST_CASE("dataset statistics") {
  std::vector<Image> half{Image(2, 2, 3, 0), Image(2, 2, 3, 255)};
  const DatasetStats s = dataset_stats(half);
  CHECK(s.mean[0] == doctest::Approx(0.5));
  CHECK(s.std[2] == doctest::Approx(0.5));
  std::reverse(half.begin(), half.end());
  const DatasetStats r = dataset_stats(half);
  CHECK(r.mean == s.mean);
  CHECK(r.std == s.std);

  std::vector<Image> zeros{Image(3, 3, 3, 0)};
  CHECK_THROWS_AS(dataset_stats(zeros), DegenerateImage);
  std::vector<Image> fifty_one{Image(3, 3, 3, 51)};
  try {
    dataset_stats(fifty_one);
    FAIL("expected DegenerateImage");
  } catch (const DegenerateImage& e) {
    CHECK(std::string(e.what()).find("0.2") != std::string::npos);
  }
  CHECK_THROWS_AS(dataset_stats(std::vector<Image>{}), EmptyInput);
  std::vector<Image> mixed{Image(2, 2, 3, 0), Image(2, 2, 1, 9)};
  CHECK_THROWS_AS(dataset_stats(mixed), DimensionError);

  const DatasetStats parsed = parse_dataset_stats(format_dataset_stats(s));
  CHECK(parsed.mean == s.mean);
}

TEST_CASE("image io roundtrip") {
  const auto dir = std::filesystem::temp_directory_path() / "stainkit_test_io";
  Image rgb(7, 5, 3);
  for (std::size_t i = 0; i < rgb.data().size(); ++i) rgb.data()[i] = static_cast<std::uint8_t>(i * 7);
  write_image(dir / "a.png", rgb);
  write_image(dir / "b.tif", rgb);
  write_image(dir / "g.png", Image(3, 3, 1, 9));
  CHECK(read_image(dir / "a.png") == rgb);
  CHECK(read_image(dir / "b.tif") == rgb);
  CHECK(read_image(dir / "g.png") == Image(3, 3, 1, 9));
  const auto listed = list_images(dir);
  REQUIRE(listed.size() == 3);
  CHECK(listed[0].filename() == "a.png");
  CHECK_THROWS_AS(read_image(dir / "missing.png"), IoError);
  CHECK_THROWS_AS(write_image(dir / "x.jpg", rgb), IoError);
  std::filesystem::remove_all(dir);
}
