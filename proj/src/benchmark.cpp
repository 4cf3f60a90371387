#include "csa/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace csa {

namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

double BenchmarkResult::coverage_mean() const { return mean_of(coverage); }
double BenchmarkResult::coverage_std() const { return sample_std(coverage); }
double BenchmarkResult::size_mean() const { return mean_of(size); }
double BenchmarkResult::size_std() const { return sample_std(size); }

void BenchmarkResult::validate() const {
  require(!method.empty(), "result: empty method name");
  require(!coverage.empty(), "result: no trials");
  require(coverage.size() == size.size(), "result: coverage and size counts differ");
  for (double c : coverage) require(c >= 0.0 && c <= 1.0, "result: coverage outside [0, 1]");
}

ResultFormat parse_result_format(const std::string& name) {
  if (name == "csv") return ResultFormat::kCsv;
  if (name == "json") return ResultFormat::kJson;
  fail(ErrorKind::kInvalidArgument, "unknown result format '" + name + "'");
}

ResultFormat result_format_for(const std::filesystem::path& path) {
  return path.extension() == ".json" ? ResultFormat::kJson : ResultFormat::kCsv;
}

std::string results_csv(const std::vector<BenchmarkResult>& results) {
  std::ostringstream out;
  out << std::setprecision(6);
  out << "method,alpha,coverage_mean,coverage_std,size_mean,size_std,trials\n";
  for (const BenchmarkResult& r : results) {
    out << r.method << ',' << r.alpha << ',' << r.coverage_mean() << ',' << r.coverage_std()
        << ',' << r.size_mean() << ',' << r.size_std() << ',' << r.trials() << '\n';
  }
  return out.str();
}

Json results_json(const std::vector<BenchmarkResult>& results) {
  Json arr = Json::array();
  for (const BenchmarkResult& r : results) {
    Json seconds = Json::object();
    for (const auto& [phase, v] : r.seconds) seconds[phase] = v;
    Json sizes = Json::array();
    for (double s : r.size) sizes.push_back(number_or_null(s));
    arr.push_back({{"method", r.method},
                   {"alpha", r.alpha},
                   {"trials", r.trials()},
                   {"coverage_mean", r.coverage_mean()},
                   {"coverage_std", r.coverage_std()},
                   {"size_mean", number_or_null(r.size_mean())},
                   {"size_std", number_or_null(r.size_std())},
                   {"insufficient_coverage", r.insufficient_coverage},
                   {"coverage", r.coverage},
                   {"size", sizes},
                   {"seeds", r.seeds},
                   {"seconds", seconds}});
  }
  return {{"schema_version", 1}, {"results", arr}};
}

std::vector<BenchmarkResult> results_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("results") || !j["results"].is_array()) {
    fail(ErrorKind::kParse, "results: expected {\"results\": [...]}");
  }
  std::vector<BenchmarkResult> out;
  try {
    for (const Json& e : j["results"]) {
      BenchmarkResult r;
      r.method = e.at("method").get<std::string>();
      r.alpha = e.at("alpha").get<double>();
      r.coverage = e.at("coverage").get<std::vector<double>>();
      for (const Json& s : e.at("size")) r.size.push_back(number_from_json(s));
      r.seeds = e.at("seeds").get<std::vector<std::uint64_t>>();
      for (const auto& [phase, v] : e.at("seconds").items()) {
        r.seconds[phase] = v.get<std::vector<double>>();
      }
      r.insufficient_coverage = e.at("insufficient_coverage").get<bool>();
      r.validate();
      out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, std::string("results: ") + e.what());
  }
  return out;
}

void emit_results(const std::vector<BenchmarkResult>& results, ResultFormat format,
                  const std::filesystem::path& path) {
  require(!results.empty(), "emit_results: no results to write");
  for (const BenchmarkResult& r : results) r.validate();
  if (format == ResultFormat::kJson) {
    write_json(path, results_json(results));
  } else {
    write_text(path, results_csv(results));
  }
}

std::vector<BenchmarkResult> load_results(const std::filesystem::path& path) {
  return results_from_json(read_json(path));
}

BenchTask parse_bench_task(const std::string& name) {
  if (name == "classification") return BenchTask::kClassification;
  if (name == "regression") return BenchTask::kRegression;
  if (name == "pto") return BenchTask::kPto;
  if (name == "scores") return BenchTask::kScores;
  fail(ErrorKind::kInvalidArgument, "unknown benchmark task '" + name + "'");
}

std::string to_string(BenchTask task) {
  switch (task) {
    case BenchTask::kClassification:
      return "classification";
    case BenchTask::kRegression:
      return "regression";
    case BenchTask::kPto:
      return "pto";
    case BenchTask::kScores:
      return "scores";
  }
  return "?";
}

std::vector<std::string> task_methods(BenchTask task) {
  switch (task) {
    case BenchTask::kClassification:
    case BenchTask::kRegression:
      return {"csa", "single_stage", "bonferroni", "cm", "cr", "cu", "vfcp", "ensemble", "split"};
    case BenchTask::kScores:
      return {"csa", "single_stage", "bonferroni", "cm", "cr", "cu", "vfcp", "split"};
    case BenchTask::kPto:
      return {"csa", "single_stage", "bonferroni", "predictor_1", "predictor_2"};
  }
  return {};
}

double RouteEvaluation::bound_rate() const {
  if (bounded.empty()) return 0.0;
  return static_cast<double>(std::count(bounded.begin(), bounded.end(), true)) /
         static_cast<double>(bounded.size());
}

double RouteEvaluation::mean_delta() const { return mean_of(delta); }

SampleBank select_predictors(const SampleBank& bank, const std::vector<Index>& predictors) {
  require(!predictors.empty(), "select_predictors: empty selection");
  std::vector<Mat> samples;
  for (Index k : predictors) {
    require(k >= 0 && k < bank.K(), "select_predictors: predictor index out of range");
    samples.push_back(bank.samples(k));
  }
  return SampleBank(std::move(samples));
}

ScoreMatrix routing_scores(const std::vector<RoutingDraw>& draws,
                           const std::vector<Index>& predictors) {
  require(!draws.empty(), "routing_scores: no draws");
  Mat s(static_cast<Index>(draws.size()), static_cast<Index>(predictors.size()));
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const Vec all = gpcp_scores(draws[i].bank, draws[i].truth);
    for (std::size_t k = 0; k < predictors.size(); ++k) {
      s(static_cast<Index>(i), static_cast<Index>(k)) = all[predictors[k]];
    }
  }
  return ScoreMatrix(std::move(s));
}

RouteEvaluation evaluate_routing(const FlowProblem& problem, const std::vector<RoutingDraw>& draws,
                                 const QuantileEnvelope& envelope,
                                 const std::vector<Index>& predictors,
                                 const RouteOptions& options) {
  require(static_cast<Index>(predictors.size()) == envelope.K(),
          "evaluate_routing: predictor selection does not match envelope K");
  // A region with no finite threshold bounds nothing; route on the mean sample cost instead.
  const bool unbounded = envelope.is_vacuous() || !envelope.final_thresholds.array().isFinite().any();
  RouteEvaluation out;
  for (const RoutingDraw& d : draws) {
    const SampleBank bank = select_predictors(d.bank, predictors);
    RobustSolution sol;
    if (unbounded) {
      Vec mean = Vec::Zero(bank.D());
      Index n = 0;
      for (Index k = 0; k < bank.K(); ++k) {
        mean += bank.samples(k).colwise().sum().transpose();
        n += bank.J(k);
      }
      sol.flow = linear_minimization_oracle(problem, mean / static_cast<double>(n)).flow;
    } else {
      sol = robust_route(problem, bank, envelope, options);
    }
    const double realized = d.truth.dot(sol.flow);
    out.robust_value.push_back(sol.robust_value);
    out.bounded.push_back(realized <= sol.robust_value + 1e-9 * (1.0 + std::abs(realized)));
    out.delta.push_back(suboptimality_gap(d.truth, sol.flow, problem));
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct MethodOutcome {
  double coverage = 0.0;
  double size = 0.0;
  double calibrate_seconds = 0.0;
  double evaluate_seconds = 0.0;
};

// Stage-1 / stage-2 row indices, matching split_scores' sizing.
std::pair<std::vector<Index>, std::vector<Index>> split_indices(Index n, double fraction,
                                                                std::uint64_t seed) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const Index n1 = std::clamp<Index>(std::llround(fraction * static_cast<double>(n)), 1, n - 1);
  return {std::vector<Index>(idx.begin(), idx.begin() + n1),
          std::vector<Index>(idx.begin() + n1, idx.end())};
}

double default_epsilon(const BenchmarkConfig& c, Index n_stage1) {
  return c.epsilon.value_or(std::max(0.01, 2.0 / static_cast<double>(n_stage1)));
}

CalibrationConfig calibration_config(const BenchmarkConfig& c, std::uint64_t seed) {
  CalibrationConfig cc;
  cc.alpha = c.alpha;
  cc.epsilon = c.epsilon;
  cc.split_fraction = c.split_fraction;
  cc.M = c.M;
  cc.seed = seed;
  return cc;
}

DirectionSet trial_directions(const BenchmarkConfig& c, Index K, std::uint64_t seed) {
  return sample_directions(K, c.M > 0 ? c.M : default_direction_count(K), direction_seed(seed));
}

FittedMethod from_envelope(const std::string& method, QuantileEnvelope env) {
  auto p = std::make_shared<const QuantileEnvelope>(std::move(env));
  return {method, p, [p](const Mat& s) { return p->contains_rows(s); },
          {{"envelope", envelope_to_json(*p)}}};
}

FittedMethod from_coordinate(const std::string& method, Index k, double threshold) {
  return {method, nullptr,
          [k, threshold](const Mat& s) {
            std::vector<bool> out(static_cast<std::size_t>(s.rows()));
            for (Index i = 0; i < s.rows(); ++i) {
              out[static_cast<std::size_t>(i)] = s(i, k) <= threshold;
            }
            return out;
          },
          {{"selected", k}, {"threshold", number_or_null(threshold)}}};
}

// Fits a method from calibration scores. size_of estimates a region's size from a membership
// test on held-out stage-1 rows (used by the selection baselines).
FittedMethod fit_method(const std::string& method, const ScoreMatrix& cal, const BenchmarkConfig& c,
                  std::uint64_t seed,
                  const std::function<SizeOracle(const std::vector<Index>&)>& direction_oracle,
                  const std::function<double(const std::vector<Index>&, Index, double)>&
                      member_size) {
  const Index K = cal.K();
  if (method == "csa") return from_envelope(method, calibrate(cal, calibration_config(c, seed)));
  if (method == "single_stage") {
    const DirectionSet dirs = trial_directions(c, K, seed);
    return from_envelope(
        method, single_stage_calibrate(cal, dirs, c.alpha, default_epsilon(c, cal.N())));
  }
  if (method == "bonferroni") {
    return from_envelope(method, bonferroni_envelope(cal, trial_directions(c, K, seed), c.alpha));
  }
  if (method == "cm" || method == "cr" || method == "cu") {
    // Members at level alpha / 2 so that the majority vote keeps 1 - alpha coverage.
    Vec thresholds(K);
    for (Index k = 0; k < K; ++k) {
      thresholds[k] = split_conformal(Vec(cal.values().col(k)), c.alpha / 2.0);
    }
    Rng rng(derive_seed(seed, "vote.u"));
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const VoteAggregate agg = VoteAggregate::uniform(K, parse_vote_variant(method), u);
    Json th = Json::array();
    for (Index k = 0; k < K; ++k) th.push_back(number_or_null(thresholds[k]));
    return {method, nullptr, vote_membership(agg, thresholds),
            {{"member_thresholds", th}, {"variant", to_string(agg.variant)}, {"u_draw", u}}};
  }
  if (method == "vfcp") {
    const auto [s1, s2] = split_indices(cal.N(), c.split_fraction, split_seed(seed));
    const DirectionSet dirs = trial_directions(c, K, seed);
    const SingleDirection best = best_single_direction(cal.rows(s1), cal.rows(s2), dirs, c.alpha,
                                                       direction_oracle(s1));
    return from_envelope(method, best.to_envelope(c.alpha));
  }
  if (method == "split") {
    const auto [s1, s2] = split_indices(cal.N(), c.split_fraction, split_seed(seed));
    const ScoreMatrix stage1 = cal.rows(s1);
    const ScoreMatrix stage2 = cal.rows(s2);
    std::vector<double> sizes;
    for (Index k = 0; k < K; ++k) {
      const double q = split_conformal(Vec(stage1.values().col(k)), c.alpha);
      sizes.push_back(member_size(s1, k, q));
    }
    const Index k = model_selection(sizes);
    return from_coordinate(method, k, split_conformal(Vec(stage2.values().col(k)), c.alpha));
  }
  fail(ErrorKind::kInvalidArgument, "unknown method '" + method + "'");
}

using TrialFn = std::function<std::map<std::string, MethodOutcome>(std::uint64_t)>;

MethodOutcome timed(const std::function<FittedMethod()>& fit,
                    const std::function<std::pair<double, double>(const Membership&)>& eval) {
  MethodOutcome o;
  auto t0 = Clock::now();
  const FittedMethod f = fit();
  o.calibrate_seconds = seconds_since(t0);
  t0 = Clock::now();
  std::tie(o.coverage, o.size) = eval(f.member);
  o.evaluate_seconds = seconds_since(t0);
  return o;
}

std::map<std::string, MethodOutcome> labeled_trial(const BenchmarkConfig& c,
                                                   const std::vector<std::string>& methods,
                                                   std::uint64_t seed) {
  SyntheticSpec spec{SyntheticKind::kGaussianResidual, c.K, c.rho, c.n_cal, c.n_test, seed};
  const bool classification = c.task == BenchTask::kClassification;
  const TaskKind kind = classification ? TaskKind::kClassification : TaskKind::kRegression;
  std::vector<LabeledPoint> cal, test, cal_ens, test_ens;
  if (classification) {
    ClassificationData d = generate_classification(spec, c.labels);
    cal = std::move(d.cal), test = std::move(d.test);
    cal_ens = std::move(d.cal_ensemble), test_ens = std::move(d.test_ensemble);
  } else {
    RegressionData d = generate_regression(spec, c.grid_points);
    cal = std::move(d.cal), test = std::move(d.test);
    cal_ens = std::move(d.cal_ensemble), test_ens = std::move(d.test_ensemble);
  }
  const ScoreMatrix cal_scores = true_scores(cal);

  const auto subset = [&](const std::vector<Index>& idx) {
    std::vector<LabeledPoint> pts;
    for (Index i : idx) pts.push_back(cal[static_cast<std::size_t>(i)]);
    return pts;
  };
  // Oracles hold their own copy of the stage-1 points.
  const auto direction_oracle = [&](const std::vector<Index>& s1) -> SizeOracle {
    if (!classification) return interval_length_oracle();
    auto pts = std::make_shared<std::vector<LabeledPoint>>(subset(s1));
    const SizeOracle inner = mean_set_size_oracle(*pts);
    return [pts, inner](const Vec& u, double q) { return inner(u, q); };
  };
  const auto member_size = [&](const std::vector<Index>& s1, Index k, double q) {
    double total = 0;
    for (Index i : s1) {
      const LabeledPoint& p = cal[static_cast<std::size_t>(i)];
      const double cell = classification ? 1.0 : p.cell_measure;
      total += cell * static_cast<double>((p.candidate_scores.col(k).array() <= q).count());
    }
    return total / static_cast<double>(s1.size());
  };

  std::map<std::string, MethodOutcome> out;
  for (const std::string& m : methods) {
    if (m == "ensemble") {
      out[m] = timed(
          [&] {
            const double q = split_conformal(Vec(true_scores(cal_ens).values().col(0)), c.alpha);
            return from_envelope("ensemble", scalar_envelope(q, c.alpha));
          },
          [&](const Membership& member) {
            const CoverageReport r = coverage_and_length_report(test_ens, member, kind);
            return std::pair{r.coverage, r.mean_size};
          });
      continue;
    }
    out[m] = timed([&] { return fit_method(m, cal_scores, c, seed, direction_oracle, member_size); },
                   [&](const Membership& member) {
                     const CoverageReport r = coverage_and_length_report(test, member, kind);
                     return std::pair{r.coverage, r.mean_size};
                   });
  }
  return out;
}

std::map<std::string, MethodOutcome> scores_trial(const BenchmarkConfig& c,
                                                  const std::vector<std::string>& methods,
                                                  std::uint64_t seed) {
  const SyntheticSpec spec{c.score_kind, c.K, c.rho, c.n_cal, c.n_test, seed};
  const ScoreData data = generate_scores(spec);
  const MonteCarloBox box = MonteCarloBox::around(data.cal, c.mc_points, seed);
  std::map<std::string, MethodOutcome> out;
  for (const std::string& m : methods) {
    out[m] = timed([&] { return fit_score_method(m, data.cal, box, c, seed); },
                   [&](const Membership& member) {
                     const std::vector<bool> hit = member(data.test.values());
                     const double cov = static_cast<double>(std::count(hit.begin(), hit.end(), true)) /
                                        static_cast<double>(hit.size());
                     return std::pair{cov, box.area(member(box.points))};
                   });
  }
  return out;
}

std::map<std::string, MethodOutcome> pto_trial(const BenchmarkConfig& c,
                                               const std::vector<std::string>& methods,
                                               std::uint64_t seed) {
  const SyntheticSpec spec{SyntheticKind::kRoutingToy, 2, c.rho, c.n_cal, c.n_test, seed};
  const RoutingInstance inst = generate_routing(spec, c.routing);
  const Index K = static_cast<Index>(c.routing.samples_per_predictor.size());
  std::vector<Index> all(static_cast<std::size_t>(K));
  std::iota(all.begin(), all.end(), Index{0});
  const ScoreMatrix cal = routing_scores(inst.calibration, all);

  std::map<std::string, MethodOutcome> out;
  for (const std::string& m : methods) {
    std::vector<Index> predictors = all;
    MethodOutcome o;
    auto t0 = Clock::now();
    QuantileEnvelope env;
    if (m == "csa") {
      env = calibrate(cal, calibration_config(c, seed));
    } else if (m == "single_stage") {
      env = single_stage_calibrate(cal, trial_directions(c, K, seed), c.alpha,
                                   default_epsilon(c, cal.N()));
    } else if (m == "bonferroni") {
      env = bonferroni_envelope(cal, trial_directions(c, K, seed), c.alpha);
    } else if (m.rfind("predictor_", 0) == 0) {
      Index k = -1;
      try {
        k = std::stol(m.substr(10)) - 1;
      } catch (const std::exception&) {
      }
      require(k >= 0 && k < K, "unknown method '" + m + "'");
      predictors = {k};
      env = scalar_envelope(split_conformal(Vec(cal.values().col(k)), c.alpha), c.alpha);
    } else {
      fail(ErrorKind::kInvalidArgument, "unknown method '" + m + "' for the pto task");
    }
    o.calibrate_seconds = seconds_since(t0);
    t0 = Clock::now();
    const RouteEvaluation ev = evaluate_routing(inst.problem, inst.test, env, predictors, c.route);
    o.evaluate_seconds = seconds_since(t0);
    o.coverage = ev.bound_rate();
    o.size = ev.mean_delta();
    out[m] = o;
  }
  return out;
}

}  // namespace

MonteCarloBox MonteCarloBox::around(const ScoreMatrix& cal, Index points, std::uint64_t seed) {
  require(points >= 1, "Monte Carlo box: need at least one point");
  const Vec upper = cal.values().colwise().maxCoeff().transpose();
  MonteCarloBox box;
  box.volume = upper.prod();
  box.points.resize(points, cal.K());
  Rng rng(derive_seed(seed, "scores.mc"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Index i = 0; i < points; ++i) {
    for (Index k = 0; k < cal.K(); ++k) box.points(i, k) = unit(rng) * upper[k];
  }
  return box;
}

double MonteCarloBox::area(const std::vector<bool>& inside) const {
  require(static_cast<Index>(inside.size()) == points.rows(), "Monte Carlo box: size mismatch");
  return volume * static_cast<double>(std::count(inside.begin(), inside.end(), true)) /
         static_cast<double>(inside.size());
}

FittedMethod fit_score_method(const std::string& method, const ScoreMatrix& cal,
                              const MonteCarloBox& box, const BenchmarkConfig& config,
                              std::uint64_t seed) {
  require(box.points.cols() == cal.K(), "fit_score_method: box dimension does not match K");
  const auto direction_oracle = [&](const std::vector<Index>&) -> SizeOracle {
    return [&box](const Vec& u, double q) {
      const Vec proj = box.points * u;
      return box.volume * static_cast<double>((proj.array() <= q).count()) /
             static_cast<double>(proj.size());
    };
  };
  const auto member_size = [&](const std::vector<Index>&, Index k, double q) {
    return box.volume * static_cast<double>((box.points.col(k).array() <= q).count()) /
           static_cast<double>(box.points.rows());
  };
  if (method == "ensemble") {
    require(cal.K() == 1, "ensemble baseline expects a single ensemble-score column");
    return from_envelope(method, scalar_envelope(split_conformal(Vec(cal.values().col(0)),
                                                                 config.alpha),
                                                 config.alpha));
  }
  return fit_method(method, cal, config, seed, direction_oracle, member_size);
}

std::vector<BenchmarkResult> run_benchmark(const BenchmarkConfig& config) {
  require(config.trials >= 1, "benchmark: trials must be at least 1");
  require(config.alpha > 0.0 && config.alpha < 1.0, "benchmark: alpha must lie in (0, 1)");
  std::vector<std::string> methods = config.methods.empty() ? task_methods(config.task)
                                                            : config.methods;
  const std::vector<std::string> known = task_methods(config.task);
  for (const std::string& m : methods) {
    const bool ok = std::find(known.begin(), known.end(), m) != known.end() ||
                    (config.task == BenchTask::kPto && m.rfind("predictor_", 0) == 0);
    require(ok, "unknown method '" + m + "' for task " + to_string(config.task));
  }

  const auto trial = [&](std::uint64_t seed) {
    switch (config.task) {
      case BenchTask::kClassification:
      case BenchTask::kRegression:
        return labeled_trial(config, methods, seed);
      case BenchTask::kScores:
        return scores_trial(config, methods, seed);
      case BenchTask::kPto:
        return pto_trial(config, methods, seed);
    }
    fail(ErrorKind::kInvalidArgument, "benchmark: invalid task");
  };

  if (config.warmup) trial(derive_seed(config.seed, "warmup"));

  std::vector<BenchmarkResult> results(methods.size());
  for (std::size_t i = 0; i < methods.size(); ++i) {
    results[i].method = methods[i];
    results[i].alpha = config.alpha;
  }
  for (int t = 0; t < config.trials; ++t) {
    const std::uint64_t seed = derive_seed(config.seed, "trial", static_cast<std::uint64_t>(t));
    const auto outcomes = trial(seed);
    for (BenchmarkResult& r : results) {
      const MethodOutcome& o = outcomes.at(r.method);
      r.coverage.push_back(o.coverage);
      r.size.push_back(o.size);
      r.seeds.push_back(seed);
      r.seconds["calibrate"].push_back(o.calibrate_seconds);
      r.seconds["evaluate"].push_back(o.evaluate_seconds);
    }
  }
  for (BenchmarkResult& r : results) {
    r.insufficient_coverage = r.coverage_mean() < 1.0 - config.alpha - 0.02;
  }
  return results;
}

}  // namespace csa
