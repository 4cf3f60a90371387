#pragma once

#include "csa/calibration.hpp"

#include <functional>
#include <span>
#include <vector>

namespace csa {

struct PredictionSet {
  std::vector<Index> labels;
  Vec t_scores;  // per label, against the final thresholds

  bool contains(Index label) const;
  Index size() const { return static_cast<Index>(labels.size()); }
};

/// Discretized outcome grid y_min, y_min + step, ... up to y_max.
struct GridSpec {
  double y_min = 0.0;
  double y_max = 1.0;
  double step = 0.01;

  void validate() const;
  Index count() const;
  double point(Index i) const { return y_min + static_cast<double>(i) * step; }
};

/// Target range widened by 20% on each side, with `points` grid points.
GridSpec default_grid(const Vec& targets, Index points = 401);

/// Label y is kept iff its score row lies in the envelope.
PredictionSet classification_set(const Mat& label_scores, const QuantileEnvelope& envelope);

using ScoreFn = std::function<Vec(double)>;

struct GridRegion {
  Index inside = 0;      // grid points accepted
  Index components = 0;  // maximal runs of consecutive accepted points
  double length = 0.0;   // step * inside
};

GridRegion regression_region(const ScoreFn& score_eval, const QuantileEnvelope& envelope,
                             const GridSpec& grid);

double regression_interval_length(const ScoreFn& score_eval, const QuantileEnvelope& envelope,
                                  const GridSpec& grid);

/// Residual score function for point predictions f_1(x), ..., f_K(x).
ScoreFn residual_score_fn(const Vec& predictions);

enum class TaskKind { kClassification, kRegression };

/// One evaluation point: candidate outcomes with their score rows and the true outcome's score.
struct LabeledPoint {
  Mat candidate_scores;  // C x K
  Vec true_score;        // K
  double cell_measure = 1.0;
};

struct CoverageReport {
  double coverage = 0.0;
  double mean_size = 0.0;
  double size_std = 0.0;
  Index n = 0;
};

using Membership = std::function<std::vector<bool>(const Mat&)>;

Membership envelope_membership(const QuantileEnvelope& envelope);

CoverageReport coverage_and_length_report(std::span<const LabeledPoint> points,
                                          const Membership& member, TaskKind kind);

CoverageReport coverage_and_length_report(std::span<const LabeledPoint> points,
                                          const QuantileEnvelope& envelope, TaskKind kind);

LabeledPoint classification_point(Mat label_scores, Index true_label);
LabeledPoint regression_point(const Vec& predictions, double target, const GridSpec& grid);

}  // namespace csa
