#include "csa/regions.hpp"

#include "csa/scores.hpp"

#include <algorithm>

namespace csa {

bool PredictionSet::contains(Index label) const {
  return std::find(labels.begin(), labels.end(), label) != labels.end();
}

void GridSpec::validate() const {
  require(std::isfinite(y_min) && std::isfinite(y_max) && y_min < y_max,
          "grid: need finite y_min < y_max");
  require(step > 0 && std::isfinite(step), "grid: step must be positive");
  require(count() >= 2, "grid: need at least 2 points");
}

Index GridSpec::count() const {
  return static_cast<Index>(std::floor((y_max - y_min) / step + 1e-9)) + 1;
}

GridSpec default_grid(const Vec& targets, Index points) {
  require(targets.size() >= 1, "default_grid: no targets");
  require(points >= 2, "default_grid: need at least 2 points");
  double lo = targets.minCoeff();
  double hi = targets.maxCoeff();
  const double pad = hi > lo ? 0.2 * (hi - lo) : 1.0;
  lo -= pad;
  hi += pad;
  return {lo, hi, (hi - lo) / static_cast<double>(points - 1)};
}

namespace {

void check_nonnegative(const Mat& scores) {
  for (Index i = 0; i < scores.size(); ++i) {
    const double v = scores.data()[i];
    require(std::isfinite(v) && v >= 0, "scores must be nonnegative and finite");
  }
}

}  // namespace

PredictionSet classification_set(const Mat& label_scores, const QuantileEnvelope& envelope) {
  require(label_scores.cols() == envelope.K(),
          "classification_set: score width does not match envelope K");
  check_nonnegative(label_scores);
  PredictionSet out;
  out.t_scores.resize(label_scores.rows());
  const std::vector<bool> inside = envelope.contains_rows(label_scores);
  for (Index y = 0; y < label_scores.rows(); ++y) {
    out.t_scores[y] = envelope.score(label_scores.row(y).transpose());
    if (inside[static_cast<std::size_t>(y)]) out.labels.push_back(y);
  }
  return out;
}

GridRegion regression_region(const ScoreFn& score_eval, const QuantileEnvelope& envelope,
                             const GridSpec& grid) {
  grid.validate();
  const Index n = grid.count();
  Mat scores(n, envelope.K());
  for (Index i = 0; i < n; ++i) {
    const Vec s = score_eval(grid.point(i));
    require(s.size() == envelope.K(), "regression: score length does not match envelope K");
    scores.row(i) = s.transpose();
  }
  check_nonnegative(scores);
  const std::vector<bool> inside = envelope.contains_rows(scores);
  GridRegion out;
  bool prev = false;
  for (bool in : inside) {
    if (in) {
      ++out.inside;
      if (!prev) ++out.components;
    }
    prev = in;
  }
  out.length = grid.step * static_cast<double>(out.inside);
  return out;
}

double regression_interval_length(const ScoreFn& score_eval, const QuantileEnvelope& envelope,
                                  const GridSpec& grid) {
  return regression_region(score_eval, envelope, grid).length;
}

ScoreFn residual_score_fn(const Vec& predictions) {
  return [predictions](double y) -> Vec {
    return predictions.unaryExpr([y](double f) { return residual_score(f, y); });
  };
}

Membership envelope_membership(const QuantileEnvelope& envelope) {
  return [&envelope](const Mat& scores) { return envelope.contains_rows(scores); };
}

CoverageReport coverage_and_length_report(std::span<const LabeledPoint> points,
                                          const Membership& member, TaskKind kind) {
  require(!points.empty(), "coverage report: empty test set");
  CoverageReport out;
  out.n = static_cast<Index>(points.size());
  std::vector<double> sizes;
  sizes.reserve(points.size());
  Index covered = 0;
  for (const LabeledPoint& p : points) {
    const double cell = kind == TaskKind::kClassification ? 1.0 : p.cell_measure;
    const std::vector<bool> truth = member(Mat(p.true_score.transpose()));
    covered += truth.front() ? 1 : 0;
    const std::vector<bool> in = member(p.candidate_scores);
    sizes.push_back(cell * static_cast<double>(std::count(in.begin(), in.end(), true)));
  }
  out.coverage = static_cast<double>(covered) / static_cast<double>(out.n);
  const Eigen::Map<const Vec> s(sizes.data(), static_cast<Index>(sizes.size()));
  out.mean_size = s.mean();
  out.size_std = sizes.size() > 1
                     ? std::sqrt((s.array() - out.mean_size).square().sum() /
                                 static_cast<double>(sizes.size() - 1))
                     : 0.0;
  return out;
}

CoverageReport coverage_and_length_report(std::span<const LabeledPoint> points,
                                          const QuantileEnvelope& envelope, TaskKind kind) {
  return coverage_and_length_report(points, envelope_membership(envelope), kind);
}

LabeledPoint classification_point(Mat label_scores, Index true_label) {
  require(true_label >= 0 && true_label < label_scores.rows(), "true label out of range");
  LabeledPoint p;
  p.true_score = label_scores.row(true_label).transpose();
  p.candidate_scores = std::move(label_scores);
  return p;
}

LabeledPoint regression_point(const Vec& predictions, double target, const GridSpec& grid) {
  grid.validate();
  const ScoreFn fn = residual_score_fn(predictions);
  LabeledPoint p;
  p.true_score = fn(target);
  p.cell_measure = grid.step;
  p.candidate_scores.resize(grid.count(), predictions.size());
  for (Index i = 0; i < grid.count(); ++i) p.candidate_scores.row(i) = fn(grid.point(i)).transpose();
  return p;
}

}  // namespace csa
