#include <set>

#include "json.hpp"
#include "stainkit/augmentation.hpp"
#include "text_io.hpp"

namespace stainkit {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void reject_unknown(const json& object, std::initializer_list<std::string_view> known,
                    const std::string& where) {
  if (!object.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string_view> allowed(known);
  for (const auto& [key, value] : object.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

Range parse_range(const json& v, const std::string& name) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigError(name + " must be a [low, high] pair");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

ordered_json range_json(const Range& r) { return ordered_json::array({r.low, r.high}); }

StainMatrix parse_matrix_entry(const json& v, const std::filesystem::path& base) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "he" || s == "hdab" || s == "hed") return presets::by_name(s);
    return read_stain_matrix(base / s).matrix;
  }
  return parse_stain_matrix(v.dump()).matrix;
}

StainProfile parse_profile_entry(const json& v, const std::filesystem::path& base) {
  if (v.is_string()) return read_stain_profile(base / v.get<std::string>());
  return parse_stain_profile(v.dump());
}

ordered_json matrix_json(const StainMatrix& m) {
  return ordered_json::parse(format_stain_matrix(m));
}

ordered_json profile_json(const StainProfile& p) {
  return ordered_json::parse(format_stain_profile(p));
}

MacenkoParams parse_macenko(const json& v) {
  reject_unknown(v, {"od_threshold", "angle_percentile", "concentration_percentile",
                     "min_tissue_pixels", "i0"},
                 "macenko");
  MacenkoParams p;
  p.od_threshold = v.value("od_threshold", p.od_threshold);
  p.angle_percentile = v.value("angle_percentile", p.angle_percentile);
  p.concentration_percentile = v.value("concentration_percentile", p.concentration_percentile);
  p.min_tissue_pixels = v.value("min_tissue_pixels", p.min_tissue_pixels);
  p.i0 = v.value("i0", p.i0);
  return p;
}

}  // namespace

AugmentationConfig parse_augmentation_config(std::string_view text,
                                             const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("augmentation config: ") + e.what());
  }

  AugmentationConfig cfg;
  try {
    reject_unknown(doc,
                   {"probability", "probabilities", "affine", "noise_sigma", "blur_sigma",
                    "brightness", "colour", "contrast", "stain_variation", "elastic", "strategy",
                    "haematoxylin_stains", "colour_transfer"},
                   "config");

    if (doc.contains("probability")) {
      const double p = doc["probability"].get<double>();
      cfg.probability = {p, p, p, p, p, p, p};
    }
    if (doc.contains("probabilities")) {
      const auto& p = doc["probabilities"];
      reject_unknown(p, {"affine", "noise", "blur", "brightness", "colour", "contrast", "stain"},
                     "probabilities");
      auto& q = cfg.probability;
      q.affine = p.value("affine", q.affine);
      q.noise = p.value("noise", q.noise);
      q.blur = p.value("blur", q.blur);
      q.brightness = p.value("brightness", q.brightness);
      q.colour = p.value("colour", q.colour);
      q.contrast = p.value("contrast", q.contrast);
      q.stain = p.value("stain", q.stain);
    }
    if (doc.contains("affine")) {
      const auto& a = doc["affine"];
      reject_unknown(a, {"rotation_deg", "shift_px", "zoom", "horizontal_flip", "vertical_flip",
                         "flip_probability"},
                     "affine");
      if (a.contains("rotation_deg")) cfg.rotation_deg = parse_range(a["rotation_deg"], "rotation_deg");
      if (a.contains("shift_px")) cfg.shift_px = parse_range(a["shift_px"], "shift_px");
      if (a.contains("zoom")) cfg.zoom = parse_range(a["zoom"], "zoom");
      cfg.horizontal_flip = a.value("horizontal_flip", cfg.horizontal_flip);
      cfg.vertical_flip = a.value("vertical_flip", cfg.vertical_flip);
      cfg.flip_probability = a.value("flip_probability", cfg.flip_probability);
    }
    if (doc.contains("noise_sigma")) cfg.noise_sigma = parse_range(doc["noise_sigma"], "noise_sigma");
    if (doc.contains("blur_sigma")) cfg.blur_sigma = parse_range(doc["blur_sigma"], "blur_sigma");
    if (doc.contains("brightness")) cfg.brightness = parse_range(doc["brightness"], "brightness");
    if (doc.contains("colour")) cfg.colour = parse_range(doc["colour"], "colour");
    if (doc.contains("contrast")) cfg.contrast = parse_range(doc["contrast"], "contrast");
    if (doc.contains("stain_variation")) {
      const auto& s = doc["stain_variation"];
      reject_unknown(s, {"alpha", "beta", "stains"}, "stain_variation");
      if (s.contains("alpha")) cfg.stain_alpha = parse_range(s["alpha"], "stain alpha");
      if (s.contains("beta")) cfg.stain_beta = parse_range(s["beta"], "stain beta");
      if (s.contains("stains")) cfg.stain_matrix = parse_matrix_entry(s["stains"], base_dir);
    }
    if (doc.contains("elastic")) {
      const auto& e = doc["elastic"];
      reject_unknown(e, {"sigma", "alpha", "always", "probability"}, "elastic");
      cfg.elastic.sigma = e.value("sigma", cfg.elastic.sigma);
      cfg.elastic.alpha = e.value("alpha", cfg.elastic.alpha);
      cfg.elastic_always = e.value("always", cfg.elastic_always);
      cfg.elastic_probability = e.value("probability", cfg.elastic_probability);
    }
    if (doc.contains("strategy")) cfg.strategy = parse_strategy(doc["strategy"].get<std::string>());
    if (doc.contains("haematoxylin_stains")) {
      cfg.haematoxylin_matrix = parse_matrix_entry(doc["haematoxylin_stains"], base_dir);
    }
    if (doc.contains("colour_transfer")) {
      const auto& c = doc["colour_transfer"];
      reject_unknown(c, {"stainings", "source_index", "source_profile", "macenko"},
                     "colour_transfer");
      auto& ct = cfg.colour_transfer;
      ct.source_index = c.value("source_index", ct.source_index);
      if (c.contains("source_profile") && !c["source_profile"].is_null()) {
        ct.source_profile = parse_profile_entry(c["source_profile"], base_dir);
      }
      if (c.contains("macenko")) ct.macenko = parse_macenko(c["macenko"]);
      if (c.contains("stainings")) {
        for (const auto& s : c["stainings"]) {
          reject_unknown(s, {"name", "profiles"}, "staining");
          StainingPool pool;
          pool.name = s.value("name", "staining" + std::to_string(ct.stainings.size()));
          if (s.contains("profiles")) {
            for (const auto& p : s["profiles"]) pool.profiles.push_back(parse_profile_entry(p, base_dir));
          }
          ct.stainings.push_back(std::move(pool));
        }
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("augmentation config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

AugmentationConfig read_augmentation_config(const std::filesystem::path& path) {
  return parse_augmentation_config(detail::read_text_file(path), path.parent_path());
}

std::string format_augmentation_config(const AugmentationConfig& cfg) {
  ordered_json doc;
  const auto& p = cfg.probability;
  doc["probabilities"] = {{"affine", p.affine},         {"noise", p.noise},
                          {"blur", p.blur},             {"brightness", p.brightness},
                          {"colour", p.colour},         {"contrast", p.contrast},
                          {"stain", p.stain}};
  doc["affine"] = {{"rotation_deg", range_json(cfg.rotation_deg)},
                   {"shift_px", range_json(cfg.shift_px)},
                   {"zoom", range_json(cfg.zoom)},
                   {"horizontal_flip", cfg.horizontal_flip},
                   {"vertical_flip", cfg.vertical_flip},
                   {"flip_probability", cfg.flip_probability}};
  doc["noise_sigma"] = range_json(cfg.noise_sigma);
  doc["blur_sigma"] = range_json(cfg.blur_sigma);
  doc["brightness"] = range_json(cfg.brightness);
  doc["colour"] = range_json(cfg.colour);
  doc["contrast"] = range_json(cfg.contrast);
  doc["stain_variation"] = {{"alpha", range_json(cfg.stain_alpha)},
                            {"beta", range_json(cfg.stain_beta)},
                            {"stains", matrix_json(cfg.stain_matrix)}};
  doc["elastic"] = {{"sigma", cfg.elastic.sigma},
                    {"alpha", cfg.elastic.alpha},
                    {"always", cfg.elastic_always},
                    {"probability", cfg.elastic_probability}};
  doc["strategy"] = std::string(to_string(cfg.strategy));
  doc["haematoxylin_stains"] = matrix_json(cfg.haematoxylin_matrix);

  const auto& ct = cfg.colour_transfer;
  ordered_json transfer;
  transfer["source_index"] = ct.source_index;
  transfer["source_profile"] = ct.source_profile ? profile_json(*ct.source_profile) : ordered_json();
  transfer["macenko"] = {{"od_threshold", ct.macenko.od_threshold},
                         {"angle_percentile", ct.macenko.angle_percentile},
                         {"concentration_percentile", ct.macenko.concentration_percentile},
                         {"min_tissue_pixels", ct.macenko.min_tissue_pixels},
                         {"i0", ct.macenko.i0}};
  transfer["stainings"] = ordered_json::array();
  for (const auto& pool : ct.stainings) {
    ordered_json profiles = ordered_json::array();
    for (const auto& prof : pool.profiles) profiles.push_back(profile_json(prof));
    transfer["stainings"].push_back({{"name", pool.name}, {"profiles", profiles}});
  }
  doc["colour_transfer"] = transfer;
  return doc.dump(2) + "\n";
}

}  // namespace stainkit
