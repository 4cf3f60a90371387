#include "csa/baselines.hpp"

#include <algorithm>

namespace csa {

double split_conformal(std::vector<double> scores, double alpha) {
  require(!scores.empty(), "split_conformal: no scores");
  require(alpha > 0.0 && alpha < 1.0, "split_conformal: alpha must lie in (0, 1)");
  const Index n = static_cast<Index>(scores.size());
  const Index k = ceil_rank(static_cast<double>(n + 1) * (1.0 - alpha));
  if (k > n) return kInf;
  auto kth = scores.begin() + (k - 1);
  std::nth_element(scores.begin(), kth, scores.end());
  return *kth;
}

double split_conformal(const Vec& scores, double alpha) {
  return split_conformal(std::vector<double>(scores.data(), scores.data() + scores.size()), alpha);
}

VoteVariant parse_vote_variant(const std::string& name) {
  if (name == "M" || name == "m" || name == "cm") return VoteVariant::kMajority;
  if (name == "R" || name == "r" || name == "cr") return VoteVariant::kPartiallyRandomized;
  if (name == "U" || name == "u" || name == "cu") return VoteVariant::kRandomized;
  fail(ErrorKind::kInvalidArgument, "unknown vote variant '" + name + "'");
}

std::string to_string(VoteVariant v) {
  switch (v) {
    case VoteVariant::kMajority:
      return "M";
    case VoteVariant::kPartiallyRandomized:
      return "R";
    case VoteVariant::kRandomized:
      return "U";
  }
  return "?";
}

VoteAggregate VoteAggregate::uniform(Index K, VoteVariant variant, double u_draw) {
  require(K >= 1, "vote: need at least one member");
  return {Vec::Constant(K, 1.0 / static_cast<double>(K)), variant, u_draw};
}

void VoteAggregate::validate() const {
  require(weights.size() >= 1, "vote: no weights");
  require((weights.array() >= 0).all(), "vote: weights must be nonnegative");
  require(std::abs(weights.sum() - 1.0) <= 1e-9, "vote: weights must sum to 1");
  require(u_draw >= 0.0 && u_draw <= 1.0, "vote: u_draw must lie in [0, 1]");
}

double VoteAggregate::threshold() const {
  switch (variant) {
    case VoteVariant::kMajority:
      return 0.5;
    case VoteVariant::kPartiallyRandomized:
      return 0.5 + 0.5 * u_draw;
    case VoteVariant::kRandomized:
      return u_draw;
  }
  fail(ErrorKind::kInvalidArgument, "vote: invalid variant");
}

bool majority_vote_membership(const VoteAggregate& agg, const std::vector<bool>& in_member) {
  agg.validate();
  require(static_cast<Index>(in_member.size()) == agg.weights.size(),
          "vote: membership count does not match weights");
  double fraction = 0;
  for (std::size_t k = 0; k < in_member.size(); ++k) {
    if (in_member[k]) fraction += agg.weights[static_cast<Index>(k)];
  }
  return fraction > agg.threshold();
}

Membership vote_membership(const VoteAggregate& agg, const Vec& member_thresholds) {
  agg.validate();
  require(member_thresholds.size() == agg.weights.size(),
          "vote: threshold count does not match weights");
  return [agg, member_thresholds](const Mat& scores) {
    require(scores.cols() == member_thresholds.size(), "vote: score width does not match K");
    std::vector<bool> out(static_cast<std::size_t>(scores.rows()));
    std::vector<bool> members(static_cast<std::size_t>(scores.cols()));
    for (Index i = 0; i < scores.rows(); ++i) {
      for (Index k = 0; k < scores.cols(); ++k) {
        members[static_cast<std::size_t>(k)] = scores(i, k) <= member_thresholds[k];
      }
      out[static_cast<std::size_t>(i)] = majority_vote_membership(agg, members);
    }
    return out;
  };
}

QuantileEnvelope bonferroni_envelope(const ScoreMatrix& scores, const DirectionSet& dirs,
                                     double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "bonferroni: alpha must lie in (0, 1)");
  const Mat proj = project_scores(scores, dirs);
  const double level = alpha / static_cast<double>(dirs.M());
  QuantileEnvelope env;
  env.alpha = alpha;
  env.dirs = dirs;
  env.beta_star = level;
  env.n_stage1 = scores.N();
  env.raw_thresholds.resize(dirs.M());
  for (Index m = 0; m < dirs.M(); ++m) {
    env.raw_thresholds[m] = split_conformal(Vec(proj.col(m)), level);
  }
  env.t_hat = 1.0;
  env.final_thresholds = env.raw_thresholds;
  env.flags.emplace_back(envelope_flags::kBonferroni);
  return env;
}

SizeOracle interval_length_oracle() {
  return [](const Vec& u, double q) {
    const double l1 = u.lpNorm<1>();
    return std::isinf(q) ? kInf : 2.0 * q / l1;
  };
}

SizeOracle halfplane_area_oracle(double box) {
  require(box > 0, "area oracle: box must be positive");
  return [box](const Vec& u, double q) {
    require(u.size() == 2, "area oracle: needs K = 2");
    if (std::isinf(q)) return box * box;
    if (u[1] <= 0) return box * std::clamp(q / u[0], 0.0, box);
    // Midpoint rule on s1 of the clipped height min(box, (q - u1 s1) / u2).
    constexpr int kSteps = 4096;
    const double h = box / kSteps;
    double area = 0;
    for (int i = 0; i < kSteps; ++i) {
      const double s1 = (i + 0.5) * h;
      area += std::clamp((q - u[0] * s1) / u[1], 0.0, box) * h;
    }
    return area;
  };
}

SizeOracle mean_set_size_oracle(std::span<const LabeledPoint> points) {
  require(!points.empty(), "size oracle: no held-out points");
  return [points](const Vec& u, double q) {
    double total = 0;
    for (const LabeledPoint& p : points) {
      const Vec proj = p.candidate_scores * u;
      total += p.cell_measure * static_cast<double>((proj.array() <= q).count());
    }
    return total / static_cast<double>(points.size());
  };
}

QuantileEnvelope SingleDirection::to_envelope(double alpha) const {
  QuantileEnvelope env = scalar_envelope(threshold, alpha);
  env.dirs.directions = direction.transpose();
  return env;
}

SingleDirection best_single_direction(const ScoreMatrix& stage1, const ScoreMatrix& stage2,
                                      const DirectionSet& dirs, double alpha,
                                      const SizeOracle& size_oracle) {
  require(stage1.K() == dirs.K() && stage2.K() == dirs.K(),
          "best_single_direction: score dimension does not match directions");
  const Mat proj1 = project_scores(stage1, dirs);
  SingleDirection best;
  best.estimated_size = kInf;
  for (Index m = 0; m < dirs.M(); ++m) {
    const double q = split_conformal(Vec(proj1.col(m)), alpha);
    const double size = size_oracle(dirs.directions.row(m).transpose(), q);
    if (size < best.estimated_size || m == 0) {
      best.index = m;
      best.estimated_size = size;
    }
  }
  best.direction = dirs.directions.row(best.index).transpose();
  const Vec proj2 = stage2.values() * best.direction;
  best.threshold = split_conformal(proj2, alpha);
  return best;
}

Index model_selection(const std::vector<double>& member_sizes) {
  require(!member_sizes.empty(), "model_selection: no members");
  return static_cast<Index>(std::min_element(member_sizes.begin(), member_sizes.end()) -
                            member_sizes.begin());
}

}  // namespace csa
