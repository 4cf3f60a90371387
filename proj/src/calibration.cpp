#include "csa/calibration.hpp"

#include <algorithm>
#include <numeric>

namespace csa {

namespace {

void check_alpha(double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1), got " + std::to_string(alpha));
}

bool at_least(Index count, Index n, double level) {
  return static_cast<double>(count) >= level * static_cast<double>(n) - 1e-9;
}

// Per-direction sorted projections so each bisection step is a lookup.
class SortedProjections {
 public:
  explicit SortedProjections(const Mat& projections) : projections_(projections) {
    sorted_ = projections;  // column-major copy
    for (Index m = 0; m < sorted_.cols(); ++m) {
      std::sort(sorted_.col(m).data(), sorted_.col(m).data() + sorted_.rows());
    }
  }

  Vec thresholds(double level) const {
    const Index n = sorted_.rows();
    const Index k = std::min(ceil_rank(level * static_cast<double>(n)), n);
    return sorted_.row(k - 1).transpose();
  }

  Index covered(const Vec& q) const {
    Index count = 0;
    for (Index i = 0; i < projections_.rows(); ++i) {
      bool inside = true;
      for (Index m = 0; m < projections_.cols() && inside; ++m) inside = projections_(i, m) <= q[m];
      count += inside ? 1 : 0;
    }
    return count;
  }

 private:
  const Mat& projections_;
  Eigen::MatrixXd sorted_;
};

Vec scaled_thresholds(const Vec& raw, double t_hat, const Mat& directions, const Vec& critical) {
  Vec out(raw.size());
  for (Index m = 0; m < raw.size(); ++m) {
    const double proj = directions.row(m).dot(critical.transpose());
    // The critical score sits on the boundary of every direction it activates; take its
    // projection verbatim there so the order statistic is reproduced without rounding.
    out[m] = proj / raw[m] == t_hat ? proj : t_hat * raw[m];
  }
  return out;
}

}  // namespace

Index default_direction_count(Index K) { return K <= 4 ? 512 : 128 * K; }

bool QuantileEnvelope::has_flag(const std::string& f) const {
  return std::find(flags.begin(), flags.end(), f) != flags.end();
}

double QuantileEnvelope::score(const Vec& s) const {
  if (is_vacuous()) return 0.0;
  require(s.size() == K(), "envelope: score length does not match K");
  double best = 0;
  for (Index m = 0; m < M(); ++m) {
    const double q = final_thresholds[m];
    if (std::isinf(q)) continue;
    const double proj = dirs.directions.row(m).dot(s.transpose());
    if (q <= 0) {
      if (proj > 0) return kInf;
      continue;
    }
    best = std::max(best, proj / q);
  }
  return best;
}

bool QuantileEnvelope::contains(const Vec& s) const {
  require(s.size() == K(), "envelope: score length does not match K");
  if (is_vacuous()) return true;
  for (Index m = 0; m < M(); ++m) {
    if (dirs.directions.row(m).dot(s.transpose()) > final_thresholds[m]) return false;
  }
  return true;
}

std::vector<bool> QuantileEnvelope::contains_rows(const Mat& scores) const {
  require(scores.cols() == K(), "envelope: score block width does not match K");
  std::vector<bool> out(static_cast<std::size_t>(scores.rows()), true);
  if (is_vacuous()) return out;
  const Mat proj = project_scores(scores, dirs.directions);
  for (Index i = 0; i < proj.rows(); ++i) {
    for (Index m = 0; m < proj.cols(); ++m) {
      if (proj(i, m) > final_thresholds[m]) {
        out[static_cast<std::size_t>(i)] = false;
        break;
      }
    }
  }
  return out;
}

std::pair<ScoreMatrix, ScoreMatrix> split_scores(const ScoreMatrix& scores, double fraction,
                                                 std::uint64_t seed) {
  require(fraction > 0.0 && fraction < 1.0, "split fraction must lie in (0, 1)");
  const Index n = scores.N();
  if (n < 2) fail(ErrorKind::kInsufficientData, "split_scores: need at least 2 rows");
  const Index n1 = std::clamp<Index>(std::llround(fraction * static_cast<double>(n)), 1, n - 1);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Index> first(perm.begin(), perm.begin() + n1);
  std::vector<Index> second(perm.begin() + n1, perm.end());
  return {scores.rows(first), scores.rows(second)};
}

double empirical_quantile(std::vector<double> values, double level) {
  require(!values.empty(), "empirical_quantile: empty input");
  require(level >= 0.0 && level <= 1.0, "empirical_quantile: level must lie in [0, 1]");
  const Index n = static_cast<Index>(values.size());
  const Index k = std::min(ceil_rank(level * static_cast<double>(n)), n);
  auto kth = values.begin() + (k - 1);
  std::nth_element(values.begin(), kth, values.end());
  return *kth;
}

FrontierFit fit_frontier(const ScoreMatrix& stage1, const DirectionSet& dirs, double alpha,
                         double epsilon, int max_iters) {
  check_alpha(alpha);
  require(stage1.K() == dirs.K(), "fit_frontier: score dimension does not match directions");
  require(max_iters >= 1, "fit_frontier: max_iters must be positive");
  const Index n = stage1.N();
  require(epsilon >= 2.0 / static_cast<double>(n) - 1e-12,
          "fit_frontier: epsilon " + std::to_string(epsilon) + " is below 2/N1 = " +
              std::to_string(2.0 / static_cast<double>(n)));

  const Mat proj = project_scores(stage1, dirs);
  const SortedProjections sorted(proj);
  const double target = 1.0 - alpha;
  const auto evaluate = [&](double beta) {
    FrontierFit f;
    f.beta_star = beta;
    f.raw_thresholds = sorted.thresholds(1.0 - beta);
    const Index count = sorted.covered(f.raw_thresholds);
    f.stage1_coverage = static_cast<double>(count) / static_cast<double>(n);
    f.window_hit = at_least(count, n, target) &&
                   static_cast<double>(count) <= (target + epsilon) * static_cast<double>(n) + 1e-9;
    return f;
  };

  const double lo0 = alpha / static_cast<double>(dirs.M());
  if (dirs.M() == 1) {
    FrontierFit f = evaluate(alpha);
    f.iterations = 1;
    return f;
  }

  double lo = lo0;
  double hi = alpha;
  std::optional<FrontierFit> best;  // largest beta seen with coverage >= 1 - alpha
  int it = 0;
  while (it < max_iters) {
    ++it;
    const double beta = 0.5 * (lo + hi);
    FrontierFit f = evaluate(beta);
    const bool enough = f.stage1_coverage >= target - 1e-12;
    if (enough && (!best || beta > best->beta_star)) best = f;
    if (f.window_hit) {
      f.iterations = it;
      return f;
    }
    if (f.stage1_coverage > target) {
      lo = beta;
    } else {
      hi = beta;
    }
  }
  FrontierFit f = best ? *best : evaluate(lo0);
  f.window_hit = false;
  f.iterations = it;
  return f;
}

TScoreQuantile t_score_quantile(const ScoreMatrix& stage2, const DirectionSet& dirs,
                                const Vec& raw_thresholds, double alpha) {
  check_alpha(alpha);
  const Index n = stage2.N();
  const Vec t = t_scores_from_projections(project_scores(stage2, dirs), raw_thresholds);
  TScoreQuantile out;
  const Index k = ceil_rank(static_cast<double>(n + 1) * (1.0 - alpha));
  if (k > n) return out;
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return t[a] < t[b]; });
  out.critical_row = order[static_cast<std::size_t>(k - 1)];
  out.t_hat = t[out.critical_row];
  return out;
}

double compute_t_hat(const ScoreMatrix& stage2, const DirectionSet& dirs,
                     const Vec& raw_thresholds, double alpha) {
  return t_score_quantile(stage2, dirs, raw_thresholds, alpha).t_hat;
}

std::uint64_t split_seed(std::uint64_t seed) { return derive_seed(seed, "calibration.split"); }
std::uint64_t direction_seed(std::uint64_t seed) {
  return derive_seed(seed, "calibration.directions");
}

namespace {

// Drops directions whose frontier threshold collapsed to zero.
void drop_degenerate(QuantileEnvelope& env) {
  const std::vector<Index> keep = usable_directions(env.raw_thresholds);
  if (keep.empty()) {
    fail(ErrorKind::kDegenerateEnvelope,
         "every direction has a zero frontier threshold; the scores have no spread");
  }
  if (static_cast<Index>(keep.size()) == env.M()) return;
  env.warnings.push_back("dropped " + std::to_string(env.M() - static_cast<Index>(keep.size())) +
                         " directions with threshold <= 1e-12");
  env.flags.emplace_back(envelope_flags::kDirectionsDropped);
  Vec raw(static_cast<Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) raw[static_cast<Index>(i)] = env.raw_thresholds[keep[i]];
  env.raw_thresholds = raw;
  env.dirs = env.dirs.subset(keep);
}

}  // namespace

QuantileEnvelope calibrate(const ScoreMatrix& scores, const CalibrationConfig& config) {
  check_alpha(config.alpha);
  if (scores.N() < 4) fail(ErrorKind::kInsufficientData, "calibrate: need at least 4 rows");
  const Index M = config.M > 0 ? config.M : default_direction_count(scores.K());

  auto [stage1, stage2] = split_scores(scores, config.split_fraction, split_seed(config.seed));
  const double epsilon =
      config.epsilon.value_or(std::max(0.01, 2.0 / static_cast<double>(stage1.N())));

  QuantileEnvelope env;
  env.alpha = config.alpha;
  env.dirs = sample_directions(scores.K(), M, direction_seed(config.seed));
  env.n_stage1 = stage1.N();
  env.n_stage2 = stage2.N();

  const FrontierFit fit =
      fit_frontier(stage1, env.dirs, config.alpha, epsilon, config.max_bisection_iters);
  env.raw_thresholds = fit.raw_thresholds;
  env.beta_star = fit.beta_star;
  if (!fit.window_hit && env.M() > 1) {
    env.flags.emplace_back(envelope_flags::kWindowMissed);
    env.warnings.push_back("coverage window never hit; stage-1 coverage " +
                           std::to_string(fit.stage1_coverage));
  }
  drop_degenerate(env);

  const TScoreQuantile tq = t_score_quantile(stage2, env.dirs, env.raw_thresholds, config.alpha);
  env.t_hat = tq.t_hat;
  if (env.is_vacuous()) {
    env.flags.emplace_back(envelope_flags::kVacuous);
    env.final_thresholds = Vec::Constant(env.M(), kInf);
  } else {
    env.final_thresholds = scaled_thresholds(env.raw_thresholds, env.t_hat, env.dirs.directions,
                                             stage2.row(tq.critical_row).transpose());
  }
  return env;
}

QuantileEnvelope single_stage_calibrate(const ScoreMatrix& scores, const DirectionSet& dirs,
                                        double alpha, double epsilon, int max_iters) {
  const FrontierFit fit = fit_frontier(scores, dirs, alpha, epsilon, max_iters);
  QuantileEnvelope env;
  env.alpha = alpha;
  env.dirs = dirs;
  env.raw_thresholds = fit.raw_thresholds;
  env.beta_star = fit.beta_star;
  env.n_stage1 = scores.N();
  env.n_stage2 = 0;
  env.flags.emplace_back(envelope_flags::kUncalibratedAblation);
  if (!fit.window_hit && dirs.M() > 1) env.flags.emplace_back(envelope_flags::kWindowMissed);
  drop_degenerate(env);
  env.t_hat = 1.0;
  env.final_thresholds = env.raw_thresholds;
  return env;
}

QuantileEnvelope scalar_envelope(double threshold, double alpha) {
  QuantileEnvelope env;
  env.alpha = alpha;
  env.dirs.directions = Mat::Ones(1, 1);
  env.beta_star = alpha;
  if (std::isinf(threshold)) {
    env.raw_thresholds = Vec::Constant(1, 1.0);
    env.t_hat = kInf;
    env.final_thresholds = Vec::Constant(1, kInf);
    env.flags.emplace_back(envelope_flags::kVacuous);
  } else {
    env.raw_thresholds = Vec::Constant(1, threshold);
    env.t_hat = 1.0;
    env.final_thresholds = Vec::Constant(1, threshold);
  }
  return env;
}

}  // namespace csa
