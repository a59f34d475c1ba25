#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "stainkit/raster.hpp"
#include "stainkit/tissue_patching.hpp"

namespace stainkit {

struct DetectionCounts {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;

  DetectionCounts& operator+=(const DetectionCounts& other) noexcept {
    true_positives += other.true_positives;
    false_positives += other.false_positives;
    false_negatives += other.false_negatives;
    return *this;
  }
  bool operator==(const DetectionCounts&) const = default;
};

struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Zero denominators give zero scores.
Scores detection_scores(const DetectionCounts& counts) noexcept;

enum class MatchMode {
  iou,       // greedy one-to-one on IoU >= threshold
  centroid,  // prediction centroid pixel falls inside the truth object
};

MatchMode parse_match_mode(std::string_view text);
std::string to_string(MatchMode mode);

struct MatchOptions {
  MatchMode mode = MatchMode::iou;
  double iou_threshold = 0.5;
};

struct MatchedPair {
  std::size_t prediction = 0;  // index into the predicted components
  std::size_t truth = 0;       // index into the truth objects
  double iou = 0.0;
};

struct MatchResult {
  DetectionCounts counts;
  std::vector<MatchedPair> pairs;
  std::size_t predicted_objects = 0;
  std::size_t truth_objects = 0;
};

/// Predicted objects are the 8-connected components of the non-zero pixels of
/// `pred_mask`. Truth polygons are rasterised with the shared pixel rule.
/// Throws DimensionError if the mask is not single-channel of the slide size,
/// ConfigError if the IoU threshold is outside (0, 1).
MatchResult match_objects_detailed(const Image& pred_mask, const AnnotationSet& truth,
                                   const MatchOptions& options = {});

DetectionCounts match_objects(const Image& pred_mask, const AnnotationSet& truth,
                              double iou_threshold = 0.5);

/// Same matching on pre-labelled objects: each vector lists the pixel indices
/// of one object. Exposed for oracle testing.
MatchResult match_labelled(const std::vector<std::vector<std::size_t>>& predicted,
                           const std::vector<std::vector<std::size_t>>& truth,
                           double iou_threshold);

// --- reports ---------------------------------------------------------------

struct SlideCounts {
  std::string slide;
  DetectionCounts counts;
};

enum class Pooling {
  pooled,     // scores from counts summed over slides
  per_slide,  // scores averaged over slides
};

Pooling parse_pooling(std::string_view text);
std::string to_string(Pooling pooling);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;
};

/// One repetition (or, after aggregate_runs, several).
struct DetectionReport {
  std::vector<SlideCounts> slides;
  Scores scores;
  MetricSummary precision;
  MetricSummary recall;
  MetricSummary f1;
  std::size_t repetitions = 1;
};

DetectionReport make_report(std::vector<SlideCounts> slides, Pooling pooling = Pooling::pooled);

/// Mean and population std of each metric over the repetitions. The slide
/// counts of the first report are kept. Throws EmptyInput for no reports.
DetectionReport aggregate_runs(const std::vector<DetectionReport>& reports);

struct ReportEcho {
  MatchOptions match;
  Pooling pooling = Pooling::pooled;
};

std::string format_report(const DetectionReport& report, const ReportEcho& echo);
DetectionReport parse_report(std::string_view text);
DetectionReport read_report(const std::filesystem::path& path);

/// Delimited table, one row per named report:
/// strategy,precision_mean,precision_std,recall_mean,recall_std,f1_mean,f1_std
std::string format_table(const std::vector<std::pair<std::string, DetectionReport>>& rows);

}  // namespace stainkit
