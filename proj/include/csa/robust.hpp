#pragma once

#include "csa/calibration.hpp"
#include "csa/flow.hpp"
#include "csa/scores.hpp"

#include <vector>

namespace csa {

enum class SolveStatus { kConverged, kApproximate, kInfeasible };

const char* to_string(SolveStatus s);

struct InnerMaxOptions {
  int max_cuts = 500;
  double violation_tol = 1e-6;
  Index max_tuples = 10000;
};

struct InnerMaxResult {
  SolveStatus status = SolveStatus::kInfeasible;
  Vec c_star;
  double value = -kInf;
  double violation = kInf;  // max_m (g_m(c*) - q_hat_m)
  int cuts = 0;
  bool feasible() const { return status != SolveStatus::kInfeasible; }
};

/// max w . c  s.t.  sum_k u_mk || sample_{k, tuple_k} - c || <= q_hat_m for every m, by Kelley
/// cutting planes. The search runs in the affine subspace through the tuple's samples spanned
/// by their differences and w, which contains a maximizer.
InnerMaxResult inner_max(const Vec& w, const SampleBank& bank, const QuantileEnvelope& envelope,
                         const std::vector<Index>& tuple, const InnerMaxOptions& options = {});

/// Largest violation of the envelope constraints for a fixed tuple.
double tuple_violation(const Vec& c, const SampleBank& bank, const QuantileEnvelope& envelope,
                       const std::vector<Index>& tuple);

struct RobustValue {
  double value = -kInf;
  Vec c_star;  // a subgradient of the robust objective at w
  std::vector<Index> tuple;
  Index feasible_tuples = 0;
  SolveStatus status = SolveStatus::kConverged;
};

/// phi(w) = max over the prediction region of w . c, aggregated over every sample tuple.
RobustValue robust_value(const Vec& w, const SampleBank& bank, const QuantileEnvelope& envelope,
                         const InnerMaxOptions& options = {});

enum class RouteMode { kFrankWolfe, kProjectedSubgradient };

struct RouteOptions {
  int iters = 100;
  RouteMode mode = RouteMode::kFrankWolfe;
  double eta = 0.0;        // step size, projected-subgradient mode only
  double gap_tol = 1e-4;   // relative Frank-Wolfe gap for convergence
  InnerMaxOptions inner;
};

struct RobustSolution {
  Vec flow;
  double robust_value = kInf;
  double gap = kInf;  // smallest Frank-Wolfe gap observed
  int iterations = 0;
  SolveStatus status = SolveStatus::kApproximate;
  std::vector<Vec> c_trace;
  std::vector<double> value_trace;
  std::vector<double> gap_trace;
};

/// Minimizes phi over the flow polytope; returns the best iterate seen.
RobustSolution robust_route(const FlowProblem& problem, const SampleBank& bank,
                            const QuantileEnvelope& envelope, const RouteOptions& options = {});

/// Euclidean projection onto {w in [0, 1]^E : A w = b} by Dykstra's alternating projections.
Vec project_onto_flow_polytope(const FlowProblem& problem, const Vec& y, int max_iters = 20000,
                               double tol = 1e-10);

/// (c . w - min_v c . v) / min_v c . v, clamped to [0, 1].
double suboptimality_gap(const Vec& realized_cost, const Vec& w_robust,
                         const FlowProblem& problem);

}  // namespace csa
