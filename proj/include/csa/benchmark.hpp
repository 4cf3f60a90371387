#pragma once

#include "csa/baselines.hpp"
#include "csa/io.hpp"
#include "csa/robust.hpp"
#include "csa/synthetic.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace csa {

struct BenchmarkResult {
  std::string method;
  double alpha = 0.1;
  std::vector<double> coverage;  // per trial
  std::vector<double> size;      // per trial: mean set size, interval length, area or Delta
  std::vector<std::uint64_t> seeds;
  std::map<std::string, std::vector<double>> seconds;  // per phase, per trial
  bool insufficient_coverage = false;

  Index trials() const { return static_cast<Index>(coverage.size()); }
  double coverage_mean() const;
  double coverage_std() const;  // sample std across trials; 0 for a single trial
  double size_mean() const;
  double size_std() const;
  void validate() const;
};

enum class ResultFormat { kCsv, kJson };

ResultFormat parse_result_format(const std::string& name);
/// Format from the file extension; .json selects JSON, anything else CSV.
ResultFormat result_format_for(const std::filesystem::path& path);

std::string results_csv(const std::vector<BenchmarkResult>& results);
Json results_json(const std::vector<BenchmarkResult>& results);
std::vector<BenchmarkResult> results_from_json(const Json& j);

/// Writes the table; refuses an empty result list.
void emit_results(const std::vector<BenchmarkResult>& results, ResultFormat format,
                  const std::filesystem::path& path);
std::vector<BenchmarkResult> load_results(const std::filesystem::path& path);

enum class BenchTask { kClassification, kRegression, kPto, kScores };

BenchTask parse_bench_task(const std::string& name);
std::string to_string(BenchTask task);

struct BenchmarkConfig {
  BenchTask task = BenchTask::kClassification;
  std::vector<std::string> methods;  // empty: every method the task supports
  int trials = 10;
  double alpha = 0.1;
  std::uint64_t seed = 0;
  Index K = 3;
  double rho = 0.5;
  Index n_cal = 2000;
  Index n_test = 1000;
  Index M = 0;
  std::optional<double> epsilon;
  double split_fraction = 0.25;
  Index labels = 10;
  Index grid_points = 401;
  SyntheticKind score_kind = SyntheticKind::kGaussianResidual;  // scores task
  Index mc_points = 20000;  // Monte Carlo points for the scores-task area
  RoutingParams routing;
  RouteOptions route;
  bool warmup = true;
};

/// A method calibrated on score vectors alone.
struct FittedMethod {
  std::string method;
  std::shared_ptr<const QuantileEnvelope> envelope;  // null for vote and coordinate methods
  Membership member;
  Json summary;  // thresholds and choices, for reporting
};

/// Uniform points in [0, max calibration score]^K; areas of score-space regions are measured
/// on them.
struct MonteCarloBox {
  Mat points;
  double volume = 0.0;

  static MonteCarloBox around(const ScoreMatrix& cal, Index points, std::uint64_t seed);
  double area(const std::vector<bool>& inside) const;
};

/// Fits any scores-task method. The selection baselines (vfcp, split) size candidate regions
/// on the box.
FittedMethod fit_score_method(const std::string& method, const ScoreMatrix& cal,
                              const MonteCarloBox& box, const BenchmarkConfig& config,
                              std::uint64_t seed);

/// Methods a task accepts, in reporting order.
std::vector<std::string> task_methods(BenchTask task);

std::vector<BenchmarkResult> run_benchmark(const BenchmarkConfig& config);

/// Per-draw outcome of robust routing on held-out draws.
struct RouteEvaluation {
  std::vector<double> delta;  // suboptimality of the robust flow against the realized cost
  std::vector<bool> bounded;  // realized cost <= robust value
  std::vector<double> robust_value;

  double bound_rate() const;
  double mean_delta() const;
};

/// predictors selects which of each draw's predictors the envelope refers to (in order).
/// An envelope with no finite threshold routes on the mean sample cost, with an infinite bound.
RouteEvaluation evaluate_routing(const FlowProblem& problem, const std::vector<RoutingDraw>& draws,
                                 const QuantileEnvelope& envelope,
                                 const std::vector<Index>& predictors,
                                 const RouteOptions& options = {});

/// Bound sample of draws: the GPCP scores of the truth for the selected predictors.
ScoreMatrix routing_scores(const std::vector<RoutingDraw>& draws,
                           const std::vector<Index>& predictors);

/// Restricts a bank to the selected predictors.
SampleBank select_predictors(const SampleBank& bank, const std::vector<Index>& predictors);

}  // namespace csa
