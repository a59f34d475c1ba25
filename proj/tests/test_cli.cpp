#include <doctest.h>

#include "cli_harness.hpp"
#include "stainkit/image_io.hpp"
#include "stainkit/synthetic.hpp"
#include "stainkit/tissue_patching.hpp"
#include "stainkit/transforms.hpp"

using namespace stainkit;
namespace fs = std::filesystem;

namespace {

const fs::path kScratch = fs::temp_directory_path() / "stainkit_test_cli";

fs::path fresh(const std::string& name) {
  const fs::path p = kScratch / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

fs::path patch_dataset() {
  const fs::path dir = fresh("dataset");
  const auto stainings = synthetic::stainings();
  for (std::size_t i = 0; i < 3; ++i) {
    const Sample s = synthetic::glomerulus_patch(stainings[i].profile, 96, 10 + i);
    write_image(dir / "images" / ("p" + std::to_string(i) + ".png"), s.image);
    write_image(dir / "masks" / ("p" + std::to_string(i) + ".png"), s.mask);
  }
  return dir;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(harness::run_cli("", kScratch).code == 2);
  CHECK(harness::run_cli("frobnicate", kScratch).code == 2);
  CHECK(harness::run_cli("transform --input a --out b --mode sepia", kScratch).code == 2);
  CHECK(harness::run_cli("augment --input a --out b", kScratch).code == 2);  // no seed
  CHECK(harness::run_cli("stats --input a --out b --bogus", kScratch).code == 2);
  CHECK(harness::run_cli("--help", kScratch).code == 0);
}

TEST_CASE("operation errors exit with 1 and name the error") {
  const fs::path dir = fresh("errors");
  write_image(dir / "grey.png", Image(8, 8, 1, 40));
  const auto o = harness::run_cli("transform --mode greyscale --input " + q(dir / "grey.png") + " --out " +
                                      q(dir / "out"),
                                  dir);
  CHECK(o.code == 1);
  CHECK(o.err.rfind("ChannelCountError:", 0) == 0);
  const auto missing = harness::run_cli("stats --input " + q(dir / "nothing") + " --out " + q(dir / "s.json"), dir);
  CHECK(missing.code == 1);
  CHECK(missing.err.rfind("IoError:", 0) == 0);
}

TEST_CASE("greyscale transform writes same-named single-channel images") {
  const fs::path data = patch_dataset();
  const fs::path out = fresh("grey");
  const auto o = harness::run_cli("transform --mode greyscale --input " + q(data / "images") + " --out " + q(out), out);
  REQUIRE(o.code == 0);
  for (const auto& f : list_images(data / "images")) {
    const Image g = read_image(out / f.filename());
    CHECK(g.channels() == 1);
    CHECK(g == to_greyscale(read_image(f)));
  }
  CHECK(fs::exists(out / "manifest.json"));
}

TEST_CASE("augment is reproducible and thread-count independent") {
  const fs::path data = patch_dataset();
  const fs::path a = fresh("aug_a"), b = fresh("aug_b");
  const std::string common = "augment --input " + q(data) + " --seed 7 --repeat 2";
  REQUIRE(harness::run_cli(common + " --threads 1 --out " + q(a), a).code == 0);
  REQUIRE(harness::run_cli(common + " --threads 3 --out " + q(b), b).code == 0);
  fs::remove(a / "stderr.txt");
  fs::remove(b / "stderr.txt");
  const auto ta = harness::tree(a);
  CHECK(ta.size() == 15);  // 6 images, 6 masks, config, trace, manifest
  CHECK(ta == harness::tree(b));

  const auto manifest = nlohmann::json::parse(harness::slurp(a / "manifest.json"));
  CHECK(manifest["seed"] == 7);
  CHECK(manifest["command"] == "augment");
  CHECK(manifest["config_digest"].get<std::string>().rfind("sha256:", 0) == 0);
  CHECK(manifest["outputs"][0] == "config.json");

  const fs::path c = fresh("aug_c");
  REQUIRE(harness::run_cli("augment --input " + q(data) + " --seed 8 --repeat 2 --out " + q(c), c).code == 0);
  CHECK(harness::slurp(c / "images/p0_0.png") != harness::slurp(a / "images/p0_0.png"));
}

TEST_CASE("score on a perfect prediction reports F1 = 1") {
  const fs::path dir = fresh("score");
  const auto s = synthetic::slide(synthetic::stainings()[0].profile, 200, 160, 3, 14.0, 5);
  AnnotationSet truth;
  for (std::size_t i = 0; i < s.glomeruli.size(); ++i) {
    Polygon poly;
    for (const auto& [x, y] : s.glomeruli[i]) poly.push_back({x, y});
    truth.objects.push_back({static_cast<int>(i + 1), poly});
  }
  fs::create_directories(dir / "truth");
  {
    std::ofstream out(dir / "truth" / "s.json");
    out << format_annotations(truth);
  }
  write_image(dir / "pred" / "s.png", rasterize(truth, 200, 160));
  const auto o = harness::run_cli("score --pred " + q(dir / "pred") + " --truth " + q(dir / "truth") +
                                      " --iou 0.5 --out " + q(dir / "report.json"),
                                  dir);
  REQUIRE(o.code == 0);
  const auto report = nlohmann::json::parse(harness::slurp(dir / "report.json"));
  CHECK(report["f1"]["mean"] == 1.0);
  CHECK(report["slides"][0]["true_positives"] == 3);
  CHECK(fs::exists(dir / "report.manifest.json"));
}

TEST_CASE("patches, mask and stats subcommands") {
  const fs::path dir = fresh("patches");
  const auto s = synthetic::slide(synthetic::stainings()[1].profile, 320, 240, 2, 16.0, 9);
  AnnotationSet truth;
  for (std::size_t i = 0; i < s.glomeruli.size(); ++i) {
    Polygon poly;
    for (const auto& [x, y] : s.glomeruli[i]) poly.push_back({x, y});
    truth.objects.push_back({static_cast<int>(i + 1), poly});
  }
  write_image(dir / "slide.png", s.image);
  {
    std::ofstream out(dir / "slide.json");
    out << format_annotations(truth);
  }
  const auto o = harness::run_cli("patches --slide " + q(dir / "slide.png") + " --annotations " +
                                      q(dir / "slide.json") + " --size 64 --tissue 4 --seed 3 --out " + q(dir / "ds"),
                                  dir);
  REQUIRE(o.code == 0);
  CHECK(list_images(dir / "ds" / "images").size() == 6);
  CHECK(harness::run_cli("patches --slide " + q(dir / "slide.png") + " --annotations " + q(dir / "slide.json") +
                             " --tissue 4 --out " + q(dir / "x"),
                         dir)
            .code == 2);

  REQUIRE(harness::run_cli("mask --input " + q(dir / "slide.png") + " --out " + q(dir / "mask"), dir).code == 0);
  CHECK(read_image(dir / "mask" / "slide.png") == tissue_mask(s.image).to_image());

  REQUIRE(harness::run_cli("stats --input " + q(dir / "ds") + " --out " + q(dir / "stats.json"), dir).code == 0);
  std::vector<Image> images;
  for (const auto& f : list_images(dir / "ds" / "images")) images.push_back(read_image(f));
  const DatasetStats expected = dataset_stats(images);
  const DatasetStats got = parse_dataset_stats(harness::slurp(dir / "stats.json"));
  CHECK(got.mean[0] == doctest::Approx(expected.mean[0]));
}

TEST_CASE("estimate-stains and colour transfer") {
  const fs::path dir = fresh("transfer");
  const auto st = synthetic::stainings();
  write_image(dir / "pas.png", synthetic::glomerulus_patch(st[0].profile, 128, 1).image);
  write_image(dir / "cd68.png", synthetic::glomerulus_patch(st[2].profile, 128, 2).image);
  REQUIRE(harness::run_cli("estimate-stains --input " + q(dir / "cd68.png") + " --out " + q(dir / "cd68.json"), dir)
              .code == 0);
  REQUIRE(harness::run_cli("transform --mode colour_transfer --input " + q(dir / "pas.png") + " --target " +
                               q(dir / "cd68.json") + " --out " + q(dir / "out"),
                           dir)
              .code == 0);
  CHECK(read_image(dir / "out" / "pas.png").channels() == 3);
  CHECK(harness::run_cli("transform --mode colour_transfer --input " + q(dir / "pas.png") + " --out " + q(dir / "o2"),
                         dir)
            .code == 2);
}
