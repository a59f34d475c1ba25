#include "stainkit/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <tuple>
#include <unordered_map>

#include "components.hpp"
#include "json.hpp"
#include "text_io.hpp"

namespace stainkit {

namespace {

struct Candidate {
  std::size_t prediction;
  std::size_t truth;
  std::size_t intersection;
  double iou;
};

std::vector<std::size_t> truth_pixels(const Polygon& polygon, int width, int height) {
  std::vector<std::size_t> out;
  const BoundingBox b = bounds(polygon);
  const int y0 = std::max(0, static_cast<int>(std::floor(b.min_y)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(b.max_y)));
  const int x0 = std::max(0, static_cast<int>(std::floor(b.min_x)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(b.max_x)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (contains(polygon, x, y)) {
        out.push_back(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(x));
      }
    }
  }
  return out;
}

// Intersection sizes between every predicted and truth object that overlap.
std::vector<Candidate> candidates(const std::vector<std::vector<std::size_t>>& predicted,
                                  const std::vector<std::vector<std::size_t>>& truth) {
  std::unordered_map<std::size_t, std::vector<std::size_t>> owner;  // pixel -> predictions
  for (std::size_t p = 0; p < predicted.size(); ++p) {
    for (std::size_t px : predicted[p]) owner[px].push_back(p);
  }
  std::vector<Candidate> out;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    std::unordered_map<std::size_t, std::size_t> hits;
    for (std::size_t px : truth[t]) {
      const auto it = owner.find(px);
      if (it == owner.end()) continue;
      for (std::size_t p : it->second) ++hits[p];
    }
    for (const auto& [p, inter] : hits) {
      const std::size_t uni = predicted[p].size() + truth[t].size() - inter;
      out.push_back({p, t, inter, static_cast<double>(inter) / static_cast<double>(uni)});
    }
  }
  return out;
}

MatchResult greedy(std::vector<Candidate> pairs, std::size_t n_pred, std::size_t n_truth,
                   double threshold) {
  std::sort(pairs.begin(), pairs.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(b.iou, a.prediction, a.truth) < std::tie(a.iou, b.prediction, b.truth);
  });
  MatchResult result;
  result.predicted_objects = n_pred;
  result.truth_objects = n_truth;
  std::vector<bool> pred_used(n_pred, false), truth_used(n_truth, false);
  for (const Candidate& c : pairs) {
    if (c.iou < threshold) break;
    if (pred_used[c.prediction] || truth_used[c.truth]) continue;
    pred_used[c.prediction] = true;
    truth_used[c.truth] = true;
    result.pairs.push_back({c.prediction, c.truth, c.iou});
  }
  result.counts.true_positives = result.pairs.size();
  result.counts.false_positives = n_pred - result.pairs.size();
  result.counts.false_negatives = n_truth - result.pairs.size();
  return result;
}

void check_threshold(double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("IoU threshold must lie in (0, 1)");
  }
}

nlohmann::ordered_json summary_json(const MetricSummary& s) {
  return {{"mean", s.mean}, {"std", s.std}};
}

MetricSummary summarise(const std::vector<double>& values) {
  MetricSummary s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  for (double v : values) s.std += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(s.std / static_cast<double>(values.size()));
  return s;
}

}  // namespace

Scores detection_scores(const DetectionCounts& counts) noexcept {
  Scores s;
  const double tp = static_cast<double>(counts.true_positives);
  const std::size_t pred = counts.true_positives + counts.false_positives;
  const std::size_t truth = counts.true_positives + counts.false_negatives;
  if (pred > 0) s.precision = tp / static_cast<double>(pred);
  if (truth > 0) s.recall = tp / static_cast<double>(truth);
  if (s.precision + s.recall > 0.0) {
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  }
  return s;
}

MatchMode parse_match_mode(std::string_view text) {
  if (text == "iou") return MatchMode::iou;
  if (text == "centroid") return MatchMode::centroid;
  throw ConfigError("unknown match mode '" + std::string(text) + "'");
}

std::string to_string(MatchMode mode) { return mode == MatchMode::iou ? "iou" : "centroid"; }

Pooling parse_pooling(std::string_view text) {
  if (text == "pooled") return Pooling::pooled;
  if (text == "per-slide" || text == "per_slide") return Pooling::per_slide;
  throw ConfigError("unknown pooling '" + std::string(text) + "'");
}

std::string to_string(Pooling pooling) {
  return pooling == Pooling::pooled ? "pooled" : "per-slide";
}

MatchResult match_labelled(const std::vector<std::vector<std::size_t>>& predicted,
                           const std::vector<std::vector<std::size_t>>& truth,
                           double iou_threshold) {
  check_threshold(iou_threshold);
  return greedy(candidates(predicted, truth), predicted.size(), truth.size(), iou_threshold);
}

MatchResult match_objects_detailed(const Image& pred_mask, const AnnotationSet& truth,
                                   const MatchOptions& options) {
  require_channels(pred_mask, 1, "match_objects");
  if (options.mode == MatchMode::iou) check_threshold(options.iou_threshold);
  const int w = pred_mask.width();
  const int h = pred_mask.height();
  for (const auto& object : truth.objects) {
    for (const Point& p : object.polygon) {
      if (p.x < -0.5 || p.y < -0.5 || p.x > w + 0.5 || p.y > h + 0.5) {
        throw DimensionError("truth object " + std::to_string(object.id) +
                             " lies outside the prediction mask");
      }
    }
  }

  std::vector<std::uint8_t> binary(pred_mask.data().begin(), pred_mask.data().end());
  const detail::Components comps = detail::label_components(binary, w, h, 8);
  std::vector<std::vector<std::size_t>> predicted(static_cast<std::size_t>(comps.count));
  for (std::size_t i = 0; i < comps.labels.size(); ++i) {
    if (comps.labels[i]) predicted[static_cast<std::size_t>(comps.labels[i] - 1)].push_back(i);
  }
  std::vector<std::vector<std::size_t>> truths;
  truths.reserve(truth.objects.size());
  for (const auto& object : truth.objects) truths.push_back(truth_pixels(object.polygon, w, h));

  if (options.mode == MatchMode::iou) {
    return greedy(candidates(predicted, truths), predicted.size(), truths.size(),
                  options.iou_threshold);
  }

  // Centroid mode: a prediction may claim a truth object containing its
  // centroid pixel. Pairs are still resolved greedily by IoU.
  std::vector<Candidate> pairs = candidates(predicted, truths);
  const auto uw = static_cast<std::size_t>(w);
  std::vector<std::size_t> centre(predicted.size());
  for (std::size_t p = 0; p < predicted.size(); ++p) {
    double sx = 0.0, sy = 0.0;
    for (std::size_t px : predicted[p]) {
      sx += static_cast<double>(px % uw);
      sy += static_cast<double>(px / uw);
    }
    const auto n = static_cast<double>(predicted[p].size());
    centre[p] = static_cast<std::size_t>(std::nearbyint(sy / n)) * uw +
                static_cast<std::size_t>(std::nearbyint(sx / n));
  }
  std::erase_if(pairs, [&](const Candidate& c) {
    const auto& t = truths[c.truth];
    return std::find(t.begin(), t.end(), centre[c.prediction]) == t.end();
  });
  return greedy(std::move(pairs), predicted.size(), truths.size(), 0.0);
}

DetectionCounts match_objects(const Image& pred_mask, const AnnotationSet& truth,
                              double iou_threshold) {
  return match_objects_detailed(pred_mask, truth, {MatchMode::iou, iou_threshold}).counts;
}

DetectionReport make_report(std::vector<SlideCounts> slides, Pooling pooling) {
  DetectionReport report;
  report.slides = std::move(slides);
  if (pooling == Pooling::pooled || report.slides.empty()) {
    DetectionCounts total;
    for (const auto& s : report.slides) total += s.counts;
    report.scores = detection_scores(total);
  } else {
    for (const auto& s : report.slides) {
      const Scores one = detection_scores(s.counts);
      report.scores.precision += one.precision;
      report.scores.recall += one.recall;
      report.scores.f1 += one.f1;
    }
    const auto n = static_cast<double>(report.slides.size());
    report.scores.precision /= n;
    report.scores.recall /= n;
    report.scores.f1 /= n;
  }
  report.precision = {report.scores.precision, 0.0};
  report.recall = {report.scores.recall, 0.0};
  report.f1 = {report.scores.f1, 0.0};
  return report;
}

DetectionReport aggregate_runs(const std::vector<DetectionReport>& reports) {
  if (reports.empty()) throw EmptyInput("no reports to aggregate");
  std::vector<double> p, r, f;
  for (const auto& rep : reports) {
    p.push_back(rep.scores.precision);
    r.push_back(rep.scores.recall);
    f.push_back(rep.scores.f1);
  }
  DetectionReport out;
  out.slides = reports.front().slides;
  out.precision = summarise(p);
  out.recall = summarise(r);
  out.f1 = summarise(f);
  out.scores = {out.precision.mean, out.recall.mean, out.f1.mean};
  out.repetitions = reports.size();
  return out;
}

std::string format_report(const DetectionReport& report, const ReportEcho& echo) {
  nlohmann::ordered_json doc;
  doc["config"] = {{"match_mode", to_string(echo.match.mode)},
                   {"iou_threshold", echo.match.iou_threshold},
                   {"pooling", to_string(echo.pooling)}};
  doc["repetitions"] = report.repetitions;
  doc["slides"] = nlohmann::ordered_json::array();
  for (const auto& s : report.slides) {
    doc["slides"].push_back({{"slide", s.slide},
                             {"true_positives", s.counts.true_positives},
                             {"false_positives", s.counts.false_positives},
                             {"false_negatives", s.counts.false_negatives}});
  }
  doc["precision"] = summary_json(report.precision);
  doc["recall"] = summary_json(report.recall);
  doc["f1"] = summary_json(report.f1);
  return doc.dump(2) + "\n";
}

DetectionReport parse_report(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    DetectionReport report;
    report.repetitions = doc.value("repetitions", std::size_t{1});
    for (const auto& s : doc.value("slides", nlohmann::json::array())) {
      report.slides.push_back({s.at("slide").get<std::string>(),
                               {s.at("true_positives").get<std::size_t>(),
                                s.at("false_positives").get<std::size_t>(),
                                s.at("false_negatives").get<std::size_t>()}});
    }
    auto read = [&](const char* key) {
      const auto& m = doc.at(key);
      return MetricSummary{m.at("mean").get<double>(), m.at("std").get<double>()};
    };
    report.precision = read("precision");
    report.recall = read("recall");
    report.f1 = read("f1");
    report.scores = {report.precision.mean, report.recall.mean, report.f1.mean};
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("detection report: ") + e.what());
  }
}

DetectionReport read_report(const std::filesystem::path& path) {
  return parse_report(detail::read_text_file(path));
}

std::string format_table(const std::vector<std::pair<std::string, DetectionReport>>& rows) {
  std::string out = "strategy,precision_mean,precision_std,recall_mean,recall_std,f1_mean,f1_std\n";
  char buf[256];
  for (const auto& [name, r] : rows) {
    std::snprintf(buf, sizeof buf, ",%.3f,%.3f,%.3f,%.3f,%.3f,%.3f\n", r.precision.mean,
                  r.precision.std, r.recall.mean, r.recall.std, r.f1.mean, r.f1.std);
    out += name;
    out += buf;
  }
  return out;
}

}  // namespace stainkit
