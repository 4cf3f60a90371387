#pragma once

#include "csa/common.hpp"

#include <vector>

namespace csa {

/// Class probabilities; validated to be nonnegative and to sum to 1 within 1e-6.
class ProbVector {
 public:
  explicit ProbVector(Vec probs);
  const Vec& probs() const { return probs_; }
  Index size() const { return probs_.size(); }

 private:
  Vec probs_;
};

/// Generated samples per predictor: samples[k] is J_k x D, one sample per row.
class SampleBank {
 public:
  SampleBank() = default;
  explicit SampleBank(std::vector<Mat> samples);

  Index K() const { return static_cast<Index>(samples_.size()); }
  Index D() const { return samples_.empty() ? 0 : samples_.front().cols(); }
  Index J(Index k) const { return samples_.at(static_cast<std::size_t>(k)).rows(); }
  const Mat& samples(Index k) const { return samples_.at(static_cast<std::size_t>(k)); }
  // Number of sample tuples (one sample per predictor).
  Index tuple_count() const;

 private:
  std::vector<Mat> samples_;
};

double residual_score(double prediction, double y);

struct EnsembleScore {
  double value = 0.0;
  bool degenerate = false;
};

inline constexpr double kEnsembleSigmaFloor = 1e-12;
inline constexpr double kEnsembleScoreCap = 1e12;

/// |mean - y| / std over the ensemble predictions (population std).
EnsembleScore ensemble_score(const Vec& predictions, double y);

/// Cumulative probability mass, sorted from most to least likely, up to and including `label`.
/// Ties are ordered by ascending label index.
double aps_score(const ProbVector& probs, Index label);

/// min_j || sample_kj - c ||_2.
double gpcp_score(const SampleBank& bank, Index k, const Vec& c);

/// Stacked K-vector of per-predictor GPCP scores.
Vec gpcp_scores(const SampleBank& bank, const Vec& c);

Vec stack_scores(const std::vector<double>& component_scores);

}  // namespace csa
