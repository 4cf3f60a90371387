#pragma once

#include "csa/common.hpp"

#include <optional>
#include <vector>

namespace csa {

/// Unit directions on the nonnegative orthant of the (K-1)-sphere, stored row-wise (M x K).
struct DirectionSet {
  Mat directions;
  std::optional<std::uint64_t> seed;  // absent for the deterministic K <= 2 constructions

  Index K() const { return directions.cols(); }
  Index M() const { return directions.rows(); }

  DirectionSet subset(const std::vector<Index>& rows) const;
};

/// N x K matrix of nonnegative score evaluations; rows are calibration points.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  explicit ScoreMatrix(Mat values);

  const Mat& values() const { return values_; }
  Index N() const { return values_.rows(); }
  Index K() const { return values_.cols(); }
  auto row(Index i) const { return values_.row(i); }

  ScoreMatrix rows(const std::vector<Index>& idx) const;
  ScoreMatrix column(Index k) const;

 private:
  Mat values_;
};

/// K=1: the single direction (1). K=2: equi-spaced angles on [0, pi/2] with both axes
/// included (pi/4 when M=1). K>=3: |N(0, I)| draws normalized per vector.
DirectionSet sample_directions(Index K, Index M, std::uint64_t seed);

/// Entry (i, m) is <u_m, s_i>.
template <typename Derived>
Matrix<typename Derived::Scalar> project_scores(const Eigen::MatrixBase<Derived>& scores,
                                                const Mat& directions) {
  require(scores.cols() == directions.cols(), "project_scores: score dimension " +
                                                  std::to_string(scores.cols()) +
                                                  " does not match direction dimension " +
                                                  std::to_string(directions.cols()));
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> out = scores * directions.transpose().template cast<Scalar>();
  return out;
}

inline Mat project_scores(const ScoreMatrix& scores, const DirectionSet& dirs) {
  return project_scores(scores.values(), dirs.directions);
}

inline constexpr double kDegenerateThreshold = 1e-12;

/// max_m <u_m, s> / q_m. A +inf threshold contributes 0 (that halfspace is the whole space).
template <typename Derived>
typename Derived::Scalar t_score(const Eigen::MatrixBase<Derived>& s, const Mat& directions,
                                 const Vec& thresholds) {
  using Scalar = typename Derived::Scalar;
  require(s.size() == directions.cols(), "t_score: score length does not match K");
  require(thresholds.size() == directions.rows(), "t_score: threshold count does not match M");
  Scalar best = 0;
  for (Index m = 0; m < directions.rows(); ++m) {
    const double q = thresholds[m];
    if (!(q > kDegenerateThreshold)) {
      fail(ErrorKind::kDegenerateEnvelope,
           "t_score: threshold " + std::to_string(m) + " is not positive");
    }
    if (std::isinf(q)) continue;
    Scalar proj = 0;
    for (Index k = 0; k < directions.cols(); ++k) proj += directions(m, k) * s[k];
    const Scalar ratio = proj / q;
    if (ratio > best) best = ratio;
  }
  return best;
}

inline double t_score(const Vec& s, const DirectionSet& dirs, const Vec& thresholds) {
  return t_score(s, dirs.directions, thresholds);
}

/// Row-wise t-scores of a projection matrix (N x M) against thresholds (M).
Vec t_scores_from_projections(const Mat& projections, const Vec& thresholds);

/// Indices of thresholds above the degeneracy floor.
std::vector<Index> usable_directions(const Vec& thresholds);

}  // namespace csa
