#pragma once

#include "csa/flow.hpp"
#include "csa/geometry.hpp"
#include "csa/regions.hpp"
#include "csa/scores.hpp"

#include <string>
#include <vector>

namespace csa {

enum class SyntheticKind { kGaussianResidual, kLognormal, kChi2Check, kAnisotropic, kRoutingToy };

SyntheticKind parse_synthetic_kind(const std::string& name);
std::string to_string(SyntheticKind kind);

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::kGaussianResidual;
  Index K = 2;
  double rho = 0.0;
  Index n_cal = 2000;
  Index n_test = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Equicorrelated K-variate standard normal draws, one per row.
Mat correlated_normals(Index n, Index K, double rho, Rng& rng);

struct ScoreData {
  ScoreMatrix cal;
  ScoreMatrix test;
};

/// gaussian_residual: |z|; lognormal: exp(z); chi2_check: z^2; anisotropic: |z| with column k
/// scaled by 10^(k / (K - 1)). z is equicorrelated N(0, 1) with correlation rho.
ScoreData generate_scores(const SyntheticSpec& spec);

/// Toy routing instance: 5 x 5 grid, a generative predictor with 4 samples per context and a
/// point predictor, both noisy views of the log-cost field with correlated errors.
struct RoutingDraw {
  SampleBank bank;  // predictor 0: 4 samples, predictor 1: 1 sample
  Vec truth;
};

struct RoutingInstance {
  FlowProblem problem;
  std::vector<RoutingDraw> calibration;
  std::vector<RoutingDraw> test;

  /// GPCP scores of the true costs, one row per calibration draw (N x 2).
  ScoreMatrix calibration_scores() const;
};

struct RoutingParams {
  Index grid = 5;
  std::vector<Index> samples_per_predictor{4, 1};
  double truth_sigma = 0.5;             // spread of the log-cost field
  std::vector<double> view_noise{0.3, 0.3};  // per-predictor error in the log-cost field
  std::vector<double> sample_noise{0.1, 0.0};
};

RoutingInstance generate_routing(const SyntheticSpec& spec, const RoutingParams& params = {});

/// A single-predictor view of a draw.
SampleBank predictor_bank(const SampleBank& bank, Index k);

/// Synthetic K-model classification with `labels` classes; scores are APS per model.
struct ClassificationData {
  std::vector<LabeledPoint> cal;
  std::vector<LabeledPoint> test;
  std::vector<LabeledPoint> cal_ensemble;  // APS of the averaged probabilities
  std::vector<LabeledPoint> test_ensemble;
};

ClassificationData generate_classification(const SyntheticSpec& spec, Index labels = 10);

/// Synthetic regression with K point predictors f_k = y + e_k, e ~ N(0, Sigma(rho)) scaled by
/// 1 + k / 2; residual scores on a shared grid.
struct RegressionData {
  std::vector<LabeledPoint> cal;
  std::vector<LabeledPoint> test;
  std::vector<LabeledPoint> cal_ensemble;
  std::vector<LabeledPoint> test_ensemble;
  GridSpec grid;
};

RegressionData generate_regression(const SyntheticSpec& spec, Index grid_points = 401);

/// True scores stacked row-wise.
ScoreMatrix true_scores(const std::vector<LabeledPoint>& points);

}  // namespace csa
