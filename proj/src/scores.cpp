#include "csa/scores.hpp"

#include <algorithm>
#include <numeric>

namespace csa {

ProbVector::ProbVector(Vec probs) : probs_(std::move(probs)) {
  require(probs_.size() >= 2, "probability vector needs at least 2 labels");
  for (Index i = 0; i < probs_.size(); ++i) {
    require(std::isfinite(probs_[i]) && probs_[i] >= 0, "probabilities must be nonnegative");
  }
  require(std::abs(probs_.sum() - 1.0) <= 1e-6, "probabilities must sum to 1");
}

SampleBank::SampleBank(std::vector<Mat> samples) : samples_(std::move(samples)) {
  require(!samples_.empty(), "sample bank needs at least one predictor");
  const Index d = samples_.front().cols();
  require(d >= 1, "samples need at least one coordinate");
  for (const Mat& s : samples_) {
    require(s.rows() >= 1, "every predictor needs at least one sample");
    require(s.cols() == d, "all samples must share one dimension");
  }
}

Index SampleBank::tuple_count() const {
  Index n = 1;
  for (const Mat& s : samples_) n *= s.rows();
  return n;
}

double residual_score(double prediction, double y) { return std::abs(prediction - y); }

EnsembleScore ensemble_score(const Vec& predictions, double y) {
  require(predictions.size() >= 2, "ensemble_score: need at least 2 predictions");
  const double mean = predictions.mean();
  const double sigma = std::sqrt((predictions.array() - mean).square().mean());
  const double gap = std::abs(mean - y);
  if (sigma < kEnsembleSigmaFloor) {
    return {std::min(gap / kEnsembleSigmaFloor, kEnsembleScoreCap), true};
  }
  return {gap / sigma, false};
}

double aps_score(const ProbVector& probs, Index label) {
  const Vec& p = probs.probs();
  require(label >= 0 && label < p.size(), "aps_score: label out of range");
  std::vector<Index> order(static_cast<std::size_t>(p.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return p[a] > p[b]; });
  double mass = 0;
  for (Index j : order) {
    mass += p[j];
    if (j == label) break;
  }
  return mass;
}

double gpcp_score(const SampleBank& bank, Index k, const Vec& c) {
  require(k >= 0 && k < bank.K(), "gpcp_score: predictor index out of range");
  require(c.size() == bank.D(), "gpcp_score: candidate dimension does not match samples");
  return (bank.samples(k).rowwise() - c.transpose()).rowwise().norm().minCoeff();
}

Vec gpcp_scores(const SampleBank& bank, const Vec& c) {
  Vec s(bank.K());
  for (Index k = 0; k < bank.K(); ++k) s[k] = gpcp_score(bank, k, c);
  return s;
}

Vec stack_scores(const std::vector<double>& component_scores) {
  require(!component_scores.empty(), "stack_scores: no components");
  Vec s(static_cast<Index>(component_scores.size()));
  for (std::size_t k = 0; k < component_scores.size(); ++k) {
    const double v = component_scores[k];
    require(std::isfinite(v) && v >= 0,
            "stack_scores: component " + std::to_string(k) + " is negative; scores must be >= 0");
    s[static_cast<Index>(k)] = v;
  }
  return s;
}

}  // namespace csa
