#pragma once

#include "csa/calibration.hpp"
#include "csa/regions.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace csa {

/// ceil((n + 1)(1 - alpha))-th smallest score; +inf when that rank exceeds n.
double split_conformal(std::vector<double> scores, double alpha);
double split_conformal(const Vec& scores, double alpha);

enum class VoteVariant { kMajority, kPartiallyRandomized, kRandomized };

VoteVariant parse_vote_variant(const std::string& name);
std::string to_string(VoteVariant v);

/// Weighted vote over K member regions: keep y iff sum_k w_k 1[y in C_k] > threshold, where
/// the threshold is 1/2 (M), 1/2 + U/2 (R) or U (U).
struct VoteAggregate {
  Vec weights;
  VoteVariant variant = VoteVariant::kMajority;
  double u_draw = 0.0;

  static VoteAggregate uniform(Index K, VoteVariant variant, double u_draw = 0.0);
  void validate() const;
  double threshold() const;
};

bool majority_vote_membership(const VoteAggregate& agg, const std::vector<bool>& in_member);

/// Member k accepts a score row iff s_k <= member_thresholds[k].
Membership vote_membership(const VoteAggregate& agg, const Vec& member_thresholds);

/// Per-direction conformal quantile at level 1 - alpha / M on all rows, t_hat = 1.
QuantileEnvelope bonferroni_envelope(const ScoreMatrix& scores, const DirectionSet& dirs,
                                     double alpha);

/// Estimated region size for a candidate direction and its stage-1 threshold.
using SizeOracle = std::function<double(const Vec& direction, double threshold)>;

/// Length of {y : sum_k u_k |f_k - y| <= q} when the predictors agree: 2q / ||u||_1.
SizeOracle interval_length_oracle();

/// Area of {s in [0, box]^2 : <u, s> <= q}.
SizeOracle halfplane_area_oracle(double box);

/// Mean number of accepted candidates over held-out labeled points.
SizeOracle mean_set_size_oracle(std::span<const LabeledPoint> points);

struct SingleDirection {
  Index index = 0;
  Vec direction;
  double threshold = 0.0;  // conformalized on stage 2
  double estimated_size = 0.0;

  QuantileEnvelope to_envelope(double alpha) const;
};

SingleDirection best_single_direction(const ScoreMatrix& stage1, const ScoreMatrix& stage2,
                                      const DirectionSet& dirs, double alpha,
                                      const SizeOracle& size_oracle);

/// argmin of the estimated member sizes; ties go to the smallest index.
Index model_selection(const std::vector<double>& member_sizes);

}  // namespace csa
