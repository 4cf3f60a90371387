// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any criterion fails.

#define DOCTEST_CONFIG_DISABLE

#include "csa/baselines.hpp"
#include "csa/benchmark.hpp"
#include "csa/calibration.hpp"
#include "csa/flow.hpp"
#include "csa/lp.hpp"
#include "csa/robust.hpp"
#include "csa/synthetic.hpp"
#include "properties.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace csa;

namespace {

// Pinned tolerances.
constexpr int kCoverageTrials = 100;
constexpr double kCoverageBelow = 0.01;
constexpr double kCoverageAbove = 0.02;
constexpr double kBinomialZ = -2.326;  // one-sided 1%
constexpr double kCoverageSeconds = 60.0;
constexpr int kAblationWins = 90;
constexpr int kEfficiencyWins = 95;
constexpr int kReductionDatasets = 50;
constexpr double kChi2Low = 0.88, kChi2High = 0.92;
constexpr double kLpTol = 1e-6, kPathTol = 1e-9;
constexpr double kInnerRelTol = 1e-2, kInnerSlack = 1e-6, kInnerSeconds = 5.0;
constexpr double kRouteBoundRate = 0.94, kRouteP = 0.05, kRouteSeconds = 300.0;
constexpr double kScalingRatio = 12.0;
constexpr int kPropertyCases = 10000;

constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double fraction(const std::vector<bool>& v) { return test::fraction_true(v); }

std::uint64_t trial_seed(const char* what, int t) {
  return derive_seed(derive_seed(kSeed, what), "trial", static_cast<std::uint64_t>(t));
}

ScoreData trial_scores(SyntheticKind kind, Index K, double rho, std::uint64_t seed,
                       Index n_cal = 2000, Index n_test = 1000) {
  SyntheticSpec spec;
  spec.kind = kind;
  spec.K = K;
  spec.rho = rho;
  spec.n_cal = n_cal;
  spec.n_test = n_test;
  spec.seed = seed;
  return generate_scores(spec);
}

Outcome coverage_validity() {
  bool pass = true;
  std::ostringstream os;
  for (double rho : {0.0, 0.9}) {
    for (double alpha : {0.1, 0.05}) {
      const auto t0 = std::chrono::steady_clock::now();
      double sum = 0;
      Index covered = 0, total = 0;
      for (int t = 0; t < kCoverageTrials; ++t) {
        const std::uint64_t seed = trial_seed("coverage", t);
        const ScoreData d = trial_scores(SyntheticKind::kGaussianResidual, 2, rho, seed);
        CalibrationConfig cfg;
        cfg.alpha = alpha;
        cfg.seed = seed;
        const std::vector<bool> in = calibrate(d.cal, cfg).contains_rows(d.test.values());
        sum += fraction(in);
        covered += std::count(in.begin(), in.end(), true);
        total += static_cast<Index>(in.size());
      }
      const double secs = seconds_since(t0);
      const double mean = sum / kCoverageTrials;
      const double n = static_cast<double>(total);
      const double z = (static_cast<double>(covered) - n * (1 - alpha)) /
                       std::sqrt(n * alpha * (1 - alpha));
      const bool ok = mean >= 1 - alpha - kCoverageBelow && mean <= 1 - alpha + kCoverageAbove &&
                      z >= kBinomialZ && secs <= kCoverageSeconds;
      pass = pass && ok;
      os << fmt("[rho=%.1f a=%.2f cov=%.4f z=%.2f %.1fs] ", rho, alpha, mean, z, secs);
    }
  }
  return {pass, os.str()};
}

Outcome single_stage_ablation() {
  bool pass = true;
  std::ostringstream os;
  for (double rho : {0.0, 0.9}) {
    for (double alpha : {0.1, 0.05}) {
      int wins = 0;
      double single_sum = 0, csa_sum = 0;
      for (int t = 0; t < kCoverageTrials; ++t) {
        const std::uint64_t seed = trial_seed("ablation", t);
        const ScoreData d = trial_scores(SyntheticKind::kLognormal, 2, rho, seed);
        CalibrationConfig cfg;
        cfg.alpha = alpha;
        cfg.seed = seed;
        const QuantileEnvelope csa = calibrate(d.cal, cfg);
        const DirectionSet dirs =
            sample_directions(2, default_direction_count(2), direction_seed(seed));
        const double eps = std::max(0.01, 2.0 / static_cast<double>(d.cal.N()));
        const QuantileEnvelope single = single_stage_calibrate(d.cal, dirs, alpha, eps);
        const double c = fraction(csa.contains_rows(d.test.values()));
        const double s = fraction(single.contains_rows(d.test.values()));
        csa_sum += c;
        single_sum += s;
        if (s < c) ++wins;
      }
      const double single_mean = single_sum / kCoverageTrials;
      const bool ok = wins >= kAblationWins && single_mean < 1 - alpha;
      pass = pass && ok;
      os << fmt("[rho=%.1f a=%.2f single<csa %d/100 single=%.4f csa=%.4f] ", rho, alpha, wins,
                single_mean, csa_sum / kCoverageTrials);
    }
  }
  return {pass, os.str()};
}

Outcome efficiency_ordering() {
  int vs_bonf = 0, vs_vfcp = 0;
  double a_csa = 0, a_bonf = 0, a_vfcp = 0;
  BenchmarkConfig cfg;
  cfg.task = BenchTask::kScores;
  cfg.K = 2;
  cfg.rho = 0.9;
  for (int t = 0; t < kCoverageTrials; ++t) {
    const std::uint64_t seed = trial_seed("efficiency", t);
    const ScoreData d = trial_scores(SyntheticKind::kGaussianResidual, 2, 0.9, seed);
    const MonteCarloBox box = MonteCarloBox::around(d.cal, cfg.mc_points, seed);
    const auto area = [&](const char* m) {
      return box.area(fit_score_method(m, d.cal, box, cfg, seed).member(box.points));
    };
    const double c = area("csa"), b = area("bonferroni"), v = area("vfcp");
    vs_bonf += c <= b;
    vs_vfcp += c <= v;
    a_csa += c;
    a_bonf += b;
    a_vfcp += v;
  }
  return {vs_bonf >= kEfficiencyWins && vs_vfcp >= kEfficiencyWins,
          fmt("csa<=bonferroni %d/100, csa<=vfcp %d/100; mean areas %.3f / %.3f / %.3f", vs_bonf,
              vs_vfcp, a_csa / 100, a_bonf / 100, a_vfcp / 100)};
}

Outcome single_score_reduction() {
  int equal = 0;
  for (int i = 0; i < kReductionDatasets; ++i) {
    const std::uint64_t seed = trial_seed("reduction", i);
    Rng rng(seed);
    std::uniform_int_distribution<int> nd(20, 3000);
    std::uniform_real_distribution<double> ad(0.02, 0.3);
    const Index n = nd(rng);
    const Mat s = i % 2 ? test::exponential_matrix(n, 1, rng) : test::uniform_matrix(n, 1, rng);
    const ScoreMatrix scores(s);
    CalibrationConfig cfg;
    cfg.alpha = ad(rng);
    cfg.seed = seed;
    const QuantileEnvelope env = calibrate(scores, cfg);
    const auto [stage1, stage2] = split_scores(scores, cfg.split_fraction, split_seed(seed));
    const double q = split_conformal(Vec(stage2.values().col(0)), cfg.alpha);
    if (env.final_thresholds[0] == q) ++equal;
  }
  return {equal == kReductionDatasets, fmt("%d/%d exact matches", equal, kReductionDatasets)};
}

// P(s in region) for s = (z1^2, z2^2), z standard normal, by Simpson's rule over z1 >= 0.
double chi2_region_mass(const QuantileEnvelope& env) {
  const Mat& u = env.dirs.directions;
  const Vec& q = env.final_thresholds;
  const auto h = [&](double s1) {
    double best = kInf;
    for (Index m = 0; m < u.rows(); ++m) {
      if (u(m, 1) > 0) {
        best = std::min(best, (q[m] - u(m, 0) * s1) / u(m, 1));
      } else if (u(m, 0) * s1 > q[m]) {
        return -1.0;
      }
    }
    return best;
  };
  const auto integrand = [&](double z) {
    const double hz = h(z * z);
    if (hz < 0) return 0.0;
    const double cdf = std::isinf(hz) ? 1.0 : std::erf(std::sqrt(hz / 2));
    return 2 * std::exp(-z * z / 2) / std::sqrt(2 * std::numbers::pi) * cdf;
  };
  // Integrate up to the region's edge so Simpson's rule never straddles the jump to zero.
  double lo = 0.0, upper = 12.0;
  if (h(upper * upper) < 0) {
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + upper);
      (h(mid * mid) < 0 ? upper : lo) = mid;
    }
    upper = lo;
  }
  const int n = 200000;
  const double step = upper / n;
  double sum = integrand(0) + integrand(upper);
  for (int i = 1; i < n; ++i) sum += (i % 2 ? 4 : 2) * integrand(i * step);
  return sum * step / 3;
}

Outcome chi2_sanity() {
  const ScoreData d = trial_scores(SyntheticKind::kChi2Check, 2, 0.0, derive_seed(kSeed, "chi2"),
                                   100000, 10);
  CalibrationConfig cfg;
  cfg.alpha = 0.1;
  cfg.seed = derive_seed(kSeed, "chi2");
  const QuantileEnvelope env = calibrate(d.cal, cfg);
  const double mass = chi2_region_mass(env);
  // Integrator check on a box, where the mass factorizes.
  const double box = chi2_region_mass(test::axis_envelope(Vec::Constant(2, 2.0)));
  const double box_err = std::abs(box - std::pow(std::erf(1.0), 2));
  return {mass >= kChi2Low && mass <= kChi2High && box_err <= 1e-8,
          fmt("true mass %.4f (integrator error on a box %.1e)", mass, box_err)};
}

Outcome lp_oracles() {
  Rng rng(derive_seed(kSeed, "lp"));
  double worst_lp = 0, worst_path = 0;
  int lp_ok = 0, path_ok = 0;
  for (int i = 0; i < 50; ++i) {
    const LinearProgram lp = test::random_lp(2 + i % 5, rng);
    const auto brute = test::vertex_enumeration(lp);
    const LpResult r = simplex_solve(lp);
    if (brute && r.status == LpStatus::kOptimal) {
      const double err = std::abs(r.value - *brute);
      worst_lp = std::max(worst_lp, err);
      lp_ok += err <= kLpTol;
    }
  }
  std::uniform_int_distribution<int> gd(3, 6);
  for (int i = 0; i < 20; ++i) {
    const Index g = gd(rng);
    const Index E = 2 * g * (g - 1);
    const FlowProblem p = grid_graph(g, g, test::uniform_matrix(1, E, rng, 0.5, 2).row(0).transpose());
    const Vec c = test::uniform_matrix(1, E, rng, 0.1, 3).row(0).transpose();
    const LpResult r = simplex_solve(p.as_lp(c));
    if (r.status == LpStatus::kOptimal) {
      const double err = std::abs(shortest_path_lmo(p, c).value - r.value);
      worst_path = std::max(worst_path, err);
      path_ok += err <= kPathTol;
    }
  }
  return {lp_ok == 50 && path_ok == 20,
          fmt("LPs %d/50 (max err %.2e), paths %d/20 (max err %.2e)", lp_ok, worst_lp, path_ok,
              worst_path)};
}

Outcome inner_max_correctness() {
  Rng rng(derive_seed(kSeed, "inner"));
  const DirectionSet dirs = sample_directions(2, 8, 0);
  int ok = 0;
  double worst_rel = 0, worst_slack = 0, solver_secs = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 20; ++i) {
    const Mat a = test::uniform_matrix(2, 2, rng, 4, 6);
    const Mat b = test::uniform_matrix(1, 2, rng, 4, 6);
    const Vec c0 = test::uniform_matrix(1, 2, rng, 4, 6).row(0).transpose();
    const Index j = i % 2;
    const Vec a_j = a.row(j).transpose(), b_0 = b.row(0).transpose();
    Vec s0(2);
    s0 << (a_j - c0).norm(), (b_0 - c0).norm();
    const Vec q = (dirs.directions * s0).array() + 0.5;
    const QuantileEnvelope env = test::envelope_from(dirs.directions, q);
    // Flow weights are nonnegative.
    const Vec w = test::uniform_matrix(1, 2, rng, 0, 1).row(0).transpose();
    const auto s1 = std::chrono::steady_clock::now();
    const InnerMaxResult r = inner_max(w, SampleBank({a, b}), env, {j, 0});
    solver_secs += seconds_since(s1);
    const double grid = test::inner_max_by_grid(w, {a_j, b_0}, dirs.directions, q, (a_j + b_0) / 2,
                                                q.maxCoeff() * std::sqrt(2.0), 400);
    double slack = 0;
    for (Index m = 0; m < 8; ++m) {
      const double g = dirs.directions(m, 0) * (a_j - r.c_star).norm() +
                       dirs.directions(m, 1) * (b_0 - r.c_star).norm();
      slack = std::max(slack, g - q[m]);
    }
    const double rel = std::abs(r.value - grid) / std::abs(grid);
    worst_rel = std::max(worst_rel, rel);
    worst_slack = std::max(worst_slack, slack);
    ok += r.feasible() && rel <= kInnerRelTol && slack <= kInnerSlack;
  }
  const double secs = seconds_since(t0);
  return {ok == 20 && secs <= kInnerSeconds,
          fmt("%d/20 within tolerance (max rel %.2e, max slack %.2e), %.2fs total, %.3fs in solver",
              ok, worst_rel, worst_slack, secs, solver_secs)};
}

// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double incomplete_beta(double x, double a, double b) {
  if (x <= 0) return 0.0;
  if (x >= 1) return 1.0;
  if (x > (a + 1) / (a + b + 2)) return 1.0 - incomplete_beta(1 - x, b, a);
  const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                a * std::log(x) + b * std::log1p(-x)) / a;
  const double tiny = 1e-300;
  double f = 1, c = 1, d = 0;
  for (int i = 0; i <= 400; ++i) {
    const int m = i / 2;
    double num;
    if (i == 0) {
      num = 1;
    } else if (i % 2 == 0) {
      num = m * (b - m) * x / ((a + 2 * m - 1) * (a + 2 * m));
    } else {
      num = -(a + m) * (a + b + m) * x / ((a + 2 * m) * (a + 2 * m + 1));
    }
    d = 1 + num * d;
    d = std::abs(d) < tiny ? tiny : d;
    d = 1 / d;
    c = 1 + num / c;
    c = std::abs(c) < tiny ? tiny : c;
    const double cd = c * d;
    f *= cd;
    if (std::abs(1 - cd) < 1e-15) break;
  }
  return front * (f - 1);
}

// P(T <= t) for Student's t with df degrees of freedom.
double student_t_cdf(double t, double df) {
  const double tail = 0.5 * incomplete_beta(df / (df + t * t), df / 2, 0.5);
  return t < 0 ? tail : 1 - tail;
}

Outcome robust_routing() {
  const auto t0 = std::chrono::steady_clock::now();
  SyntheticSpec spec;
  spec.kind = SyntheticKind::kRoutingToy;
  spec.n_cal = 1000;
  spec.n_test = 200;
  spec.seed = derive_seed(kSeed, "routing");
  const RoutingInstance inst = generate_routing(spec);
  const double alpha = 0.05;
  const ScoreMatrix cal = routing_scores(inst.calibration, {0, 1});
  CalibrationConfig cfg;
  cfg.alpha = alpha;
  cfg.seed = spec.seed;
  const QuantileEnvelope env = calibrate(cal, cfg);
  const RouteEvaluation csa = evaluate_routing(inst.problem, inst.test, env, {0, 1});
  bool pass = csa.bound_rate() >= kRouteBoundRate;
  std::string detail = fmt("bound rate %.3f, csa delta %.4f", csa.bound_rate(), csa.mean_delta());
  for (Index k : {0, 1}) {
    const QuantileEnvelope single =
        scalar_envelope(split_conformal(Vec(cal.values().col(k)), alpha), alpha);
    const RouteEvaluation one = evaluate_routing(inst.problem, inst.test, single, {k});
    const std::size_t n = csa.delta.size();
    double mean = 0, ss = 0;
    for (std::size_t i = 0; i < n; ++i) mean += csa.delta[i] - one.delta[i];
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = csa.delta[i] - one.delta[i] - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    const double p = sd > 0 ? student_t_cdf(mean / (sd / std::sqrt(static_cast<double>(n))),
                                            static_cast<double>(n - 1))
                            : (mean < 0 ? 0.0 : 1.0);
    pass = pass && p < kRouteP;
    detail += fmt(", predictor_%d delta %.4f (p=%.2e)", static_cast<int>(k + 1), one.mean_delta(), p);
  }
  const double secs = seconds_since(t0);
  detail += fmt(", %.1fs", secs);
  return {pass && secs <= kRouteSeconds, detail};
}

Outcome direction_scaling() {
  const ScoreData d =
      trial_scores(SyntheticKind::kGaussianResidual, 4, 0.5, derive_seed(kSeed, "scaling"), 5000, 4);
  const auto timed = [&](Index M) {
    std::vector<double> runs;
    for (int r = 0; r < 3; ++r) {
      CalibrationConfig cfg;
      cfg.M = M;
      cfg.seed = derive_seed(kSeed, "scaling");
      const auto t0 = std::chrono::steady_clock::now();
      calibrate(d.cal, cfg);
      runs.push_back(seconds_since(t0));
    }
    std::sort(runs.begin(), runs.end());
    return runs[1];
  };
  const double small = timed(512), large = timed(4096);
  const double ratio = large / small;
  return {ratio <= kScalingRatio, fmt("M=512 %.3fs, M=4096 %.3fs, ratio %.2f", small, large, ratio)};
}

Outcome property_suites() {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "csa_acceptance";
  const std::vector<test::PropertyReport> reports = {
      test::homogeneity_property(kPropertyCases, derive_seed(kSeed, "p1")),
      test::monotonicity_property(kPropertyCases, derive_seed(kSeed, "p2")),
      test::nesting_property(kPropertyCases, derive_seed(kSeed, "p3")),
      test::frank_wolfe_gap_property(kPropertyCases, derive_seed(kSeed, "p4")),
      test::serialization_property(kPropertyCases, derive_seed(kSeed, "p5"), dir),
  };
  bool pass = true;
  std::string detail;
  for (const auto& r : reports) {
    pass = pass && r.failures == 0 && r.cases == kPropertyCases;
    detail += fmt("[%s: %d/%d failed] ", r.name.c_str(), r.failures, r.cases);
  }
  return {pass, detail};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"coverage validity", coverage_validity},
      {"single-stage ablation loses coverage", single_stage_ablation},
      {"efficiency ordering", efficiency_ordering},
      {"single-score exact reduction", single_score_reduction},
      {"chi-square region mass", chi2_sanity},
      {"LP and shortest-path oracles", lp_oracles},
      {"inner max correctness", inner_max_correctness},
      {"robust routing end to end", robust_routing},
      {"direction-count scaling", direction_scaling},
      {"property suites", property_suites},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
