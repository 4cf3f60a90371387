#include "csa/geometry.hpp"

#include <numbers>

namespace csa {

DirectionSet DirectionSet::subset(const std::vector<Index>& rows) const {
  DirectionSet out;
  out.seed = seed;
  out.directions.resize(static_cast<Index>(rows.size()), K());
  for (std::size_t r = 0; r < rows.size(); ++r) out.directions.row(r) = directions.row(rows[r]);
  return out;
}

ScoreMatrix::ScoreMatrix(Mat values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    fail(ErrorKind::kInvalidArgument, "score matrix needs at least one row and one column");
  }
  for (Index i = 0; i < values_.rows(); ++i) {
    for (Index k = 0; k < values_.cols(); ++k) {
      const double v = values_(i, k);
      if (!std::isfinite(v) || v < 0) {
        fail(ErrorKind::kValidation, "score (" + std::to_string(i) + ", " + std::to_string(k) +
                                         ") = " + std::to_string(v) +
                                         " violates the nonnegative finite score assumption");
      }
    }
  }
}

ScoreMatrix ScoreMatrix::rows(const std::vector<Index>& idx) const {
  Mat out(static_cast<Index>(idx.size()), K());
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(r) = values_.row(idx[r]);
  return ScoreMatrix(std::move(out));
}

ScoreMatrix ScoreMatrix::column(Index k) const {
  require(k >= 0 && k < K(), "column index out of range");
  return ScoreMatrix(Mat(values_.col(k)));
}

DirectionSet sample_directions(Index K, Index M, std::uint64_t seed) {
  require(K >= 1, "sample_directions: K must be positive");
  require(M >= 1, "sample_directions: M must be positive");
  DirectionSet out;
  if (K == 1) {
    out.directions = Mat::Ones(1, 1);
    return out;
  }
  if (K == 2) {
    out.directions.resize(M, 2);
    for (Index m = 0; m < M; ++m) {
      const double theta =
          M == 1 ? std::numbers::pi / 4 : static_cast<double>(m) * (std::numbers::pi / 2) /
                                              static_cast<double>(M - 1);
      out.directions(m, 0) = std::cos(theta);
      out.directions(m, 1) = std::sin(theta);
    }
    // cos(pi/2) is 6e-17, not 0.
    if (M > 1) out.directions(M - 1, 0) = 0.0;
    return out;
  }
  out.seed = seed;
  out.directions.resize(M, K);
  Rng rng(seed);
  std::normal_distribution<double> normal;
  for (Index m = 0; m < M; ++m) {
    double norm = 0;
    do {
      for (Index k = 0; k < K; ++k) out.directions(m, k) = std::abs(normal(rng));
      norm = out.directions.row(m).norm();
    } while (norm == 0.0);
    out.directions.row(m) /= norm;
  }
  return out;
}

Vec t_scores_from_projections(const Mat& projections, const Vec& thresholds) {
  require(projections.cols() == thresholds.size(), "t-scores: threshold count does not match M");
  for (Index m = 0; m < thresholds.size(); ++m) {
    if (!(thresholds[m] > kDegenerateThreshold)) {
      fail(ErrorKind::kDegenerateEnvelope,
           "t-scores: threshold " + std::to_string(m) + " is not positive");
    }
  }
  const Vec inv = thresholds.unaryExpr([](double q) { return std::isinf(q) ? 0.0 : 1.0 / q; });
  Vec out(projections.rows());
  for (Index i = 0; i < projections.rows(); ++i) {
    double best = 0;
    for (Index m = 0; m < projections.cols(); ++m) {
      if (inv[m] == 0.0) continue;
      best = std::max(best, projections(i, m) / thresholds[m]);
    }
    out[i] = best;
  }
  return out;
}

std::vector<Index> usable_directions(const Vec& thresholds) {
  std::vector<Index> keep;
  for (Index m = 0; m < thresholds.size(); ++m) {
    if (thresholds[m] > kDegenerateThreshold) keep.push_back(m);
  }
  return keep;
}

}  // namespace csa
