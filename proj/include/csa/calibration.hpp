#pragma once

#include "csa/geometry.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace csa {

struct CalibrationConfig {
  double alpha = 0.1;
  // Coverage window width on stage 1. Unset: max(0.01, 2 / N1).
  std::optional<double> epsilon;
  double split_fraction = 0.25;
  // Direction count. 0 selects the default: 512 for K <= 4, 128 K otherwise.
  Index M = 0;
  std::uint64_t seed = 0;
  int max_bisection_iters = 50;
};

Index default_direction_count(Index K);

namespace envelope_flags {
inline constexpr const char* kVacuous = "vacuous";
inline constexpr const char* kUncalibratedAblation = "uncalibrated-ablation";
inline constexpr const char* kBonferroni = "bonferroni";
inline constexpr const char* kWindowMissed = "window-missed";
inline constexpr const char* kDirectionsDropped = "directions-dropped";
}  // namespace envelope_flags

/// Calibrated acceptance region: the intersection over m of {s : <u_m, s> <= q_hat_m} with
/// q_hat = t_hat * q_tilde. When t_hat is +inf the region is all of R^K.
struct QuantileEnvelope {
  DirectionSet dirs;
  Vec raw_thresholds;
  double t_hat = 1.0;
  Vec final_thresholds;
  double beta_star = 0.0;
  double alpha = 0.0;
  Index n_stage1 = 0;
  Index n_stage2 = 0;
  std::vector<std::string> flags;
  std::vector<std::string> warnings;

  Index K() const { return dirs.K(); }
  Index M() const { return dirs.M(); }
  bool is_vacuous() const { return std::isinf(t_hat); }
  bool has_flag(const std::string& f) const;

  // t-score against the final thresholds; membership is score <= 1.
  double score(const Vec& s) const;
  bool contains(const Vec& s) const;
  // Row-wise membership for an n x K score block.
  std::vector<bool> contains_rows(const Mat& scores) const;
};

std::pair<ScoreMatrix, ScoreMatrix> split_scores(const ScoreMatrix& scores, double fraction,
                                                 std::uint64_t seed);

/// ceil(level * n)-th smallest value (the minimum for level 0).
double empirical_quantile(std::vector<double> values, double level);

struct FrontierFit {
  Vec raw_thresholds;
  double beta_star = 0.0;
  double stage1_coverage = 0.0;
  int iterations = 0;
  bool window_hit = false;
};

FrontierFit fit_frontier(const ScoreMatrix& stage1, const DirectionSet& dirs, double alpha,
                         double epsilon, int max_iters = 50);

struct TScoreQuantile {
  double t_hat = kInf;
  // Stage-2 row holding the selected order statistic (-1 when vacuous).
  Index critical_row = -1;
};

TScoreQuantile t_score_quantile(const ScoreMatrix& stage2, const DirectionSet& dirs,
                                const Vec& raw_thresholds, double alpha);

double compute_t_hat(const ScoreMatrix& stage2, const DirectionSet& dirs,
                     const Vec& raw_thresholds, double alpha);

/// Seeds calibrate() uses for its split and direction draws.
std::uint64_t split_seed(std::uint64_t seed);
std::uint64_t direction_seed(std::uint64_t seed);

QuantileEnvelope calibrate(const ScoreMatrix& scores, const CalibrationConfig& config);

/// Ablation: frontier fit on every calibration row with t_hat = 1. No coverage guarantee.
QuantileEnvelope single_stage_calibrate(const ScoreMatrix& scores, const DirectionSet& dirs,
                                        double alpha, double epsilon, int max_iters = 50);

/// Wraps scalar thresholds for K = 1 style use (e.g. per-member split conformal).
QuantileEnvelope scalar_envelope(double threshold, double alpha);

}  // namespace csa
