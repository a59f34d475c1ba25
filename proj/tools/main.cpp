#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "manifest.hpp"
#include "stainkit/augmentation.hpp"
#include "stainkit/errors.hpp"
#include "stainkit/image_io.hpp"
#include "stainkit/metrics.hpp"
#include "stainkit/parallel.hpp"
#include "stainkit/stain_estimation.hpp"
#include "stainkit/synthetic.hpp"
#include "stainkit/tissue_patching.hpp"
#include "stainkit/transforms.hpp"
#include "stainkit/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace stainkit;
using stainkit::cli::RunManifest;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<fs::path> collect_images(const fs::path& input) {
  if (fs::is_directory(input)) {
    auto files = list_images(input);
    if (files.empty()) throw EmptyInput("no PNG or TIFF images in " + input.string());
    return files;
  }
  if (!fs::exists(input)) throw IoError("no such file: " + input.string());
  return {input};
}

// A dataset directory holds images/ and optionally masks/ with matching names;
// a plain directory of images is read with empty masks.
fs::path dataset_image_dir(const fs::path& input) {
  return fs::is_directory(input / "images") ? input / "images" : input;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

fs::path manifest_beside(const fs::path& file) {
  return file.parent_path() / (file.stem().string() + ".manifest.json");
}

Image as_rgb(const Image& image) { return image.channels() == 1 ? grey_to_rgb(image) : image; }

// --- estimate-stains ---------------------------------------------------------

struct EstimateArgs {
  fs::path input, out;
  MacenkoParams params;
};

void run_estimate(const EstimateArgs& a) {
  json args{{"input", a.input.generic_string()},
            {"od_threshold", a.params.od_threshold},
            {"angle_percentile", a.params.angle_percentile},
            {"concentration_percentile", a.params.concentration_percentile}};
  RunManifest manifest("estimate-stains", args.dump());
  const auto files = collect_images(a.input);

  // Several images are pooled into one pixel list.
  std::size_t total = 0;
  std::vector<Image> images;
  for (const auto& f : files) {
    images.push_back(read_image(f));
    if (images.back().channels() != 3) throw ChannelCountError(f.string() + " is not RGB");
    total += images.back().pixel_count();
    manifest.add_input(f);
  }
  Image pooled(static_cast<int>(total), 1, 3);
  auto it = pooled.data().begin();
  for (const auto& img : images) it = std::copy(img.data().begin(), img.data().end(), it);

  const StainProfile profile = estimate_stain_profile(pooled, a.params);
  write_stain_profile(a.out, profile, a.params.i0);
  manifest.add_output(a.out);
  manifest.write(manifest_beside(a.out));
}

// --- transform ---------------------------------------------------------------

struct TransformArgs {
  fs::path input, out, target, source;
  std::string mode;
  std::string perm;
  std::uint64_t seed = 0;
  bool has_seed = false;
  unsigned threads = 0;
};

void run_transform(const TransformArgs& a) {
  json args{{"input", a.input.generic_string()}, {"mode", a.mode}};
  if (!a.perm.empty()) args["perm"] = a.perm;
  if (!a.target.empty()) args["target"] = a.target.generic_string();
  if (!a.source.empty()) args["source"] = a.source.generic_string();
  RunManifest manifest("transform", args.dump());
  if (a.has_seed) manifest.set_seed(a.seed);

  std::optional<ChannelPermutation> fixed_perm;
  std::optional<StainProfile> target, source;
  if (a.mode == "channel_swap") {
    if (!a.perm.empty()) {
      fixed_perm = ChannelPermutation::parse(a.perm);
    } else if (!a.has_seed) {
      throw UsageError("channel_swap needs --perm or --seed");
    }
  } else if (a.mode == "colour_transfer") {
    if (a.target.empty()) throw UsageError("colour_transfer needs --target");
    target = read_stain_profile(a.target);
    manifest.add_input(a.target);
    if (!a.source.empty()) {
      source = read_stain_profile(a.source);
      manifest.add_input(a.source);
    }
  }

  const auto files = collect_images(a.input);
  for (const auto& f : files) manifest.add_input(f);
  std::vector<fs::path> outputs(files.size());
  parallel_for(files.size(), a.threads, [&](std::size_t i) {
    const Image img = read_image(files[i]);
    Image result;
    if (a.mode == "greyscale") {
      result = to_greyscale(img);
    } else if (a.mode == "haematoxylin") {
      result = extract_haematoxylin(img);
    } else if (a.mode == "channel_swap") {
      SeededRng rng(a.seed, i);
      result = channel_swap(img, fixed_perm ? *fixed_perm : ChannelPermutation::random(rng));
    } else {
      const StainProfile src = source ? *source : estimate_stain_profile(img);
      result = colour_transfer(img, src, *target);
    }
    outputs[i] = a.out / files[i].filename();
    write_image(outputs[i], result);
  });
  for (const auto& o : outputs) manifest.add_output(o);
  manifest.write(a.out / "manifest.json");
}

// --- mask --------------------------------------------------------------------

struct MaskArgs {
  fs::path input, out;
  std::size_t min_object_px = kDefaultMinObjectPx;
  bool keep_holes = false;
  unsigned threads = 0;
};

void run_mask(const MaskArgs& a) {
  json args{{"input", a.input.generic_string()},
            {"min_object_px", a.min_object_px},
            {"fill_holes", !a.keep_holes}};
  RunManifest manifest("mask", args.dump());
  const auto files = collect_images(a.input);
  for (const auto& f : files) manifest.add_input(f);
  std::vector<fs::path> outputs(files.size());
  parallel_for(files.size(), a.threads, [&](std::size_t i) {
    const TissueMask mask = tissue_mask(read_image(files[i]), a.min_object_px, !a.keep_holes);
    outputs[i] = a.out / (files[i].stem().string() + ".png");
    write_image(outputs[i], mask.to_image());
  });
  for (const auto& o : outputs) manifest.add_output(o);
  manifest.write(a.out / "manifest.json");
}

// --- patches -----------------------------------------------------------------

struct PatchArgs {
  fs::path slide, annotations, out;
  int size = kDefaultPatchSize;
  std::size_t tissue = 0;
  std::uint64_t seed = 0;
  bool has_seed = false;
  bool exclude_overlap = false;
  std::size_t min_object_px = kDefaultMinObjectPx;
};

void run_patches(const PatchArgs& a) {
  if (a.tissue > 0 && !a.has_seed) throw UsageError("--tissue needs --seed");
  json args{{"slide", a.slide.generic_string()},
            {"annotations", a.annotations.generic_string()},
            {"size", a.size},
            {"tissue", a.tissue},
            {"exclude_overlap", a.exclude_overlap},
            {"min_object_px", a.min_object_px}};
  RunManifest manifest("patches", args.dump());
  if (a.has_seed) manifest.set_seed(a.seed);
  manifest.add_input(a.slide);
  manifest.add_input(a.annotations);

  const Image slide = read_image(a.slide);
  const AnnotationSet annotations = read_annotations(a.annotations);
  std::vector<std::pair<std::string, Patch>> named;
  const std::string stem = a.slide.stem().string();
  for (auto& p : extract_glomerulus_patches(slide, annotations, a.size)) {
    named.emplace_back(stem + "_g" + std::to_string(p.object_id), std::move(p));
  }
  if (a.tissue > 0) {
    SeededRng rng(a.seed);
    TissueSamplingOptions options;
    options.exclude_overlap = a.exclude_overlap;
    const TissueMask mask = tissue_mask(slide, a.min_object_px);
    auto tissue = sample_tissue_patches(slide, mask, annotations, a.tissue, a.size, rng, options);
    for (std::size_t k = 0; k < tissue.size(); ++k) {
      named.emplace_back(stem + "_t" + std::to_string(k), std::move(tissue[k]));
    }
  }

  json index = json::array();
  for (const auto& [name, p] : named) {
    const fs::path img = a.out / "images" / (name + ".png");
    const fs::path msk = a.out / "masks" / (name + ".png");
    write_image(img, p.sample.image);
    write_image(msk, p.sample.mask);
    manifest.add_output(img);
    manifest.add_output(msk);
    index.push_back({{"name", name},
                     {"label", std::string(to_string(p.sample.label))},
                     {"origin_x", p.origin_x},
                     {"origin_y", p.origin_y},
                     {"object_id", p.object_id}});
  }
  write_text(a.out / "patches.json", index.dump(2));
  manifest.add_output(a.out / "patches.json");
  manifest.write(a.out / "manifest.json");
}

// --- augment -----------------------------------------------------------------

struct AugmentArgs {
  fs::path input, config, out;
  std::uint64_t seed = 0;
  std::size_t repeat = 1;
  unsigned threads = 0;
};

json trace_json(const AugmentationTrace& t, const AugmentationConfig& cfg) {
  json steps = json::array();
  const std::pair<const char*, bool> fired[] = {
      {"elastic", t.elastic}, {"affine", t.affine},         {"noise", t.noise},
      {"blur", t.blur},       {"brightness", t.brightness}, {"colour", t.colour},
      {"contrast", t.contrast}, {"stain", t.stain}};
  for (const auto& [name, on] : fired) {
    if (on) steps.push_back(name);
  }
  json out{{"steps", steps}};
  if (t.permutation) out["permutation"] = t.permutation->to_string();
  if (t.staining) {
    out["staining"] = cfg.colour_transfer.stainings.at(*t.staining).name;
    out["transferred"] = t.transferred;
  }
  if (!t.skipped_reason.empty()) out["skipped"] = t.skipped_reason;
  return out;
}

void run_augment(const AugmentArgs& a) {
  std::clog << "augment: seed " << a.seed << '\n';
  const AugmentationConfig cfg = a.config.empty() ? AugmentationConfig{} : read_augmentation_config(a.config);
  const std::string canonical = format_augmentation_config(cfg);
  json args{{"input", a.input.generic_string()}, {"repeat", a.repeat}};
  if (!a.config.empty()) args["config"] = a.config.generic_string();
  RunManifest manifest("augment", args.dump());
  manifest.set_config(canonical);
  manifest.set_seed(a.seed);
  if (!a.config.empty()) manifest.add_input(a.config);

  const fs::path image_dir = dataset_image_dir(a.input);
  const auto files = collect_images(image_dir);
  for (const auto& f : files) manifest.add_input(f);
  const std::size_t total = files.size() * a.repeat;
  std::vector<json> traces(total);
  std::vector<std::string> names(total);

  parallel_for(total, a.threads, [&](std::size_t index) {
    const fs::path& file = files[index / a.repeat];
    Image image = read_image(file);
    const fs::path mask_path = a.input / "masks" / file.filename();
    Sample sample = fs::exists(mask_path) ? Sample{image, read_image(mask_path), SampleLabel::glomerulus}
                                          : Sample::with_empty_mask(image);
    sample.validate();
    AugmentationTrace trace;
    const Sample out = augment_sample(sample, cfg, a.seed, index, &trace);
    names[index] = file.stem().string() + "_" + std::to_string(index % a.repeat) + ".png";
    write_image(a.out / "images" / names[index], out.image);
    write_image(a.out / "masks" / names[index], out.mask);
    traces[index] = trace_json(trace, cfg);
    traces[index]["name"] = names[index];
    traces[index]["index"] = index;
  });

  json trace_doc = json::array();
  for (std::size_t i = 0; i < total; ++i) {
    trace_doc.push_back(std::move(traces[i]));
    manifest.add_output(a.out / "images" / names[i]);
    manifest.add_output(a.out / "masks" / names[i]);
  }
  write_text(a.out / "config.json", canonical);
  write_text(a.out / "trace.json", trace_doc.dump(2));
  manifest.add_output(a.out / "config.json");
  manifest.add_output(a.out / "trace.json");
  manifest.write(a.out / "manifest.json");
}

// --- stats -------------------------------------------------------------------

struct StatsArgs {
  fs::path input, out;
};

void run_stats(const StatsArgs& a) {
  RunManifest manifest("stats", json{{"input", a.input.generic_string()}}.dump());
  std::vector<Image> images;
  for (const auto& f : collect_images(dataset_image_dir(a.input))) {
    images.push_back(read_image(f));
    manifest.add_input(f);
  }
  write_text(a.out, format_dataset_stats(dataset_stats(images)));
  manifest.add_output(a.out);
  manifest.write(manifest_beside(a.out));
}

// --- score -------------------------------------------------------------------

struct ScoreArgs {
  std::vector<fs::path> preds;
  fs::path truth, out, table;
  std::string name = "run";
  double iou = 0.5;
  std::string mode = "iou";
  std::string pooling = "pooled";
  unsigned threads = 0;
};

fs::path find_truth(const fs::path& truth, const std::string& stem) {
  if (!fs::is_directory(truth)) return truth;
  if (fs::exists(truth / (stem + ".json"))) return truth / (stem + ".json");
  for (const auto& f : list_images(truth)) {
    if (f.stem() == stem) return f;
  }
  throw IoError("no annotations for " + stem + " in " + truth.string());
}

void run_score(const ScoreArgs& a) {
  MatchOptions options;
  options.mode = parse_match_mode(a.mode);
  options.iou_threshold = a.iou;
  const Pooling pooling = parse_pooling(a.pooling);

  json preds = json::array();
  for (const auto& p : a.preds) preds.push_back(p.generic_string());
  json args{{"pred", preds},
            {"truth", a.truth.generic_string()},
            {"iou", a.iou},
            {"mode", to_string(options.mode)},
            {"pooling", to_string(pooling)}};
  RunManifest manifest("score", args.dump());

  // Each --pred is one repetition.
  std::vector<DetectionReport> runs;
  for (const auto& pred : a.preds) {
    const auto files = collect_images(pred);
    std::vector<SlideCounts> slides(files.size());
    std::vector<fs::path> truths(files.size());
    for (std::size_t i = 0; i < files.size(); ++i) truths[i] = find_truth(a.truth, files[i].stem().string());
    parallel_for(files.size(), a.threads, [&](std::size_t i) {
      const AnnotationSet truth = read_annotations(truths[i]);
      slides[i] = {files[i].stem().string(), match_objects_detailed(read_image(files[i]), truth, options).counts};
    });
    for (std::size_t i = 0; i < files.size(); ++i) {
      manifest.add_input(files[i]);
      manifest.add_input(truths[i]);
    }
    runs.push_back(make_report(std::move(slides), pooling));
  }
  const DetectionReport report = aggregate_runs(runs);
  write_text(a.out, format_report(report, {options, pooling}));
  manifest.add_output(a.out);
  if (!a.table.empty()) {
    write_text(a.table, format_table({{a.name, report}}));
    manifest.add_output(a.table);
  }
  manifest.write(manifest_beside(a.out));
}

// --- montage -----------------------------------------------------------------

struct MontageArgs {
  fs::path out;
  int size = 256;
  std::uint64_t seed = 1;
};

// One column per staining. The last row shows the first staining's patch
// transferred to each column's staining.
void run_montage(const MontageArgs& a) {
  json args{{"size", a.size}};
  RunManifest manifest("montage", args.dump());
  manifest.set_seed(a.seed);
  const auto stainings = synthetic::stainings();
  const int cols = static_cast<int>(stainings.size()), gap = 4, rows = 4;

  std::vector<Image> originals;
  std::vector<StainProfile> profiles;
  for (std::size_t i = 0; i < stainings.size(); ++i) {
    originals.push_back(synthetic::glomerulus_patch(stainings[i].profile, a.size, a.seed + i).image);
    profiles.push_back(estimate_stain_profile(originals.back()));
  }

  Image grid(cols * a.size + (cols + 1) * gap, rows * a.size + (rows + 1) * gap, 3, 255);
  auto place = [&](const Image& tile, int row, int col) {
    const Image rgb = as_rgb(tile);
    const int x0 = gap + col * (a.size + gap), y0 = gap + row * (a.size + gap);
    for (int y = 0; y < a.size; ++y) {
      for (int x = 0; x < a.size; ++x) {
        for (int c = 0; c < 3; ++c) grid.at(x0 + x, y0 + y, c) = rgb.at(x, y, c);
      }
    }
  };
  for (int c = 0; c < cols; ++c) {
    const Image& img = originals[static_cast<std::size_t>(c)];
    place(img, 0, c);
    place(to_greyscale(img), 1, c);
    place(extract_haematoxylin(img), 2, c);
    place(c == 0 ? originals[0] : colour_transfer(originals[0], profiles[0], profiles[static_cast<std::size_t>(c)]),
          3, c);
  }
  write_image(a.out, grid);
  manifest.add_output(a.out);
  manifest.write(manifest_beside(a.out));
}

// --- bench -------------------------------------------------------------------

struct BenchArgs {
  fs::path config, out;
  std::size_t samples = 32;
  int size = kDefaultPatchSize;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

void run_bench(const BenchArgs& a) {
  const AugmentationConfig cfg = a.config.empty() ? AugmentationConfig{} : read_augmentation_config(a.config);
  json args{{"samples", a.samples}, {"size", a.size}};
  if (!a.config.empty()) args["config"] = a.config.generic_string();
  RunManifest manifest("bench", args.dump());
  manifest.set_config(format_augmentation_config(cfg));
  manifest.set_seed(a.seed);
  if (a.samples == 0) throw UsageError("--samples must be positive");

  const auto stainings = synthetic::stainings();
  std::vector<Sample> inputs;
  for (std::size_t i = 0; i < stainings.size(); ++i) {
    inputs.push_back(synthetic::glomerulus_patch(stainings[i].profile, a.size, a.seed + i));
  }
  using clock = std::chrono::steady_clock;
  std::vector<double> latency_ms(a.samples);
  const auto start = clock::now();
  parallel_for(a.samples, a.threads, [&](std::size_t i) {
    const auto t0 = clock::now();
    const Sample out = augment_sample(inputs[i % inputs.size()], cfg, a.seed, i);
    latency_ms[i] = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    if (out.image.width() != a.size) throw DimensionError("unexpected output size");
  });
  const double seconds = std::chrono::duration<double>(clock::now() - start).count();

  json report{{"samples", a.samples},
              {"patch_size", a.size},
              {"threads", a.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : a.threads},
              {"seconds", seconds},
              {"samples_per_second", static_cast<double>(a.samples) / seconds},
              {"latency_ms", {{"p50", percentile(latency_ms, 50.0)}, {"p99", percentile(latency_ms, 99.0)}}}};
  std::cout << report.dump(2) << '\n';
  write_text(a.out, report.dump(2));
  manifest.add_output(a.out);
  manifest.write(manifest_beside(a.out));
}

void add_threads(CLI::App* cmd, unsigned& threads) {
  cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stain-aware histopathology augmentation toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  std::function<void()> action;

  EstimateArgs est;
  auto* c_est = app.add_subcommand("estimate-stains", "Estimate a two-stain profile from one image or a directory");
  c_est->add_option("--input", est.input, "Image or directory (pixels are pooled)")->required();
  c_est->add_option("--out", est.out, "Profile document to write")->required();
  c_est->add_option("--od-threshold", est.params.od_threshold);
  c_est->add_option("--angle-percentile", est.params.angle_percentile);
  c_est->add_option("--max-percentile", est.params.concentration_percentile);
  c_est->callback([&] { action = [&] { run_estimate(est); }; });

  TransformArgs tr;
  auto* c_tr = app.add_subcommand("transform", "Apply a staining-invariance transform to images");
  c_tr->add_option("--input", tr.input, "Image or directory")->required();
  c_tr->add_option("--out", tr.out, "Output directory")->required();
  c_tr->add_option("--mode", tr.mode)
      ->required()
      ->check(CLI::IsMember({"greyscale", "haematoxylin", "channel_swap", "colour_transfer"}));
  c_tr->add_option("--perm", tr.perm, "Fixed permutation for channel_swap, e.g. 2,1,0");
  auto* tr_seed = c_tr->add_option("--seed", tr.seed, "Seed for random channel_swap permutations");
  c_tr->add_option("--target", tr.target, "Target profile for colour_transfer");
  c_tr->add_option("--source", tr.source, "Source profile (estimated per image when omitted)");
  add_threads(c_tr, tr.threads);
  c_tr->callback([&] {
    tr.has_seed = tr_seed->count() > 0;
    action = [&] { run_transform(tr); };
  });

  MaskArgs mk;
  auto* c_mk = app.add_subcommand("mask", "Compute tissue masks");
  c_mk->add_option("--input", mk.input, "Slide image or directory")->required();
  c_mk->add_option("--out", mk.out, "Output directory")->required();
  c_mk->add_option("--min-object-px", mk.min_object_px);
  c_mk->add_flag("--keep-holes", mk.keep_holes);
  add_threads(c_mk, mk.threads);
  c_mk->callback([&] { action = [&] { run_mask(mk); }; });

  PatchArgs pa;
  auto* c_pa = app.add_subcommand("patches", "Extract glomerulus and tissue patches from a slide");
  c_pa->add_option("--slide", pa.slide)->required();
  c_pa->add_option("--annotations", pa.annotations, "Polygon document or label image")->required();
  c_pa->add_option("--out", pa.out, "Output dataset directory")->required();
  c_pa->add_option("--size", pa.size)->check(CLI::PositiveNumber);
  c_pa->add_option("--tissue", pa.tissue, "Number of tissue patches to sample");
  auto* pa_seed = c_pa->add_option("--seed", pa.seed);
  c_pa->add_flag("--exclude-overlap", pa.exclude_overlap);
  c_pa->add_option("--min-object-px", pa.min_object_px);
  c_pa->callback([&] {
    pa.has_seed = pa_seed->count() > 0;
    action = [&] { run_patches(pa); };
  });

  AugmentArgs au;
  auto* c_au = app.add_subcommand("augment", "Augment a dataset directory");
  c_au->add_option("--input", au.input, "Dataset directory (images/ and masks/) or image directory")->required();
  c_au->add_option("--config", au.config, "Augmentation config document");
  c_au->add_option("--seed", au.seed)->required();
  c_au->add_option("--out", au.out, "Output directory")->required();
  c_au->add_option("--repeat", au.repeat, "Augmented copies per input")->check(CLI::PositiveNumber);
  add_threads(c_au, au.threads);
  c_au->callback([&] { action = [&] { run_augment(au); }; });

  StatsArgs st;
  auto* c_st = app.add_subcommand("stats", "Per-channel mean and std of a patch set");
  c_st->add_option("--input", st.input, "Dataset or image directory")->required();
  c_st->add_option("--out", st.out, "Statistics document")->required();
  c_st->callback([&] { action = [&] { run_stats(st); }; });

  ScoreArgs sc;
  auto* c_sc = app.add_subcommand("score", "Object-level precision, recall and F1");
  c_sc->add_option("--pred", sc.preds, "Prediction mask or directory; repeat for repetitions")->required();
  c_sc->add_option("--truth", sc.truth, "Annotations file or directory")->required();
  c_sc->add_option("--out", sc.out, "Report document")->required();
  c_sc->add_option("--iou", sc.iou)->check(CLI::Range(0.0, 1.0));
  c_sc->add_option("--mode", sc.mode)->check(CLI::IsMember({"iou", "centroid"}));
  c_sc->add_option("--pooling", sc.pooling)->check(CLI::IsMember({"pooled", "per-slide", "per_slide"}));
  c_sc->add_option("--table", sc.table, "Also write a delimited table row");
  c_sc->add_option("--name", sc.name, "Row name for --table");
  add_threads(c_sc, sc.threads);
  c_sc->callback([&] { action = [&] { run_score(sc); }; });

  MontageArgs mo;
  auto* c_mo = app.add_subcommand("montage", "Render the transform montage from synthetic patches");
  c_mo->add_option("--out", mo.out, "PNG to write")->required();
  c_mo->add_option("--size", mo.size, "Tile size")->check(CLI::Range(64, 1024));
  c_mo->add_option("--seed", mo.seed, "Seed of the synthetic patches");
  c_mo->callback([&] { action = [&] { run_montage(mo); }; });

  BenchArgs be;
  auto* c_be = app.add_subcommand("bench", "Measure augmentation throughput");
  c_be->add_option("--config", be.config);
  c_be->add_option("--samples", be.samples);
  c_be->add_option("--size", be.size)->check(CLI::Range(64, 4096));
  c_be->add_option("--seed", be.seed)->required();
  c_be->add_option("--out", be.out, "Report document")->required();
  add_threads(c_be, be.threads);
  c_be->callback([&] { action = [&] { run_bench(be); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    action();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << e.name() << ": " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "IoError: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "Error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
