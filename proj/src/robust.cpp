#include "csa/robust.hpp"

#include <algorithm>

namespace csa {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kConverged:
      return "converged";
    case SolveStatus::kApproximate:
      return "approximate";
    case SolveStatus::kInfeasible:
      return "infeasible";
  }
  return "?";
}

namespace {

// Envelope constraints restricted to finite thresholds.
struct Constraints {
  Mat u;  // M_f x K
  Vec q;  // M_f

  explicit Constraints(const QuantileEnvelope& env) {
    require(!env.is_vacuous(), "robust optimization needs a non-vacuous envelope");
    std::vector<Index> finite;
    for (Index m = 0; m < env.M(); ++m) {
      if (std::isfinite(env.final_thresholds[m])) finite.push_back(m);
    }
    require(!finite.empty(), "robust optimization needs at least one finite threshold");
    u.resize(static_cast<Index>(finite.size()), env.K());
    q.resize(static_cast<Index>(finite.size()));
    for (std::size_t i = 0; i < finite.size(); ++i) {
      u.row(static_cast<Index>(i)) = env.dirs.directions.row(finite[i]);
      q[static_cast<Index>(i)] = env.final_thresholds[finite[i]];
    }
  }
};

// Distances from z to each anchor (rows of `anchors`).
Vec distances(const Mat& anchors, const Vec& z) {
  return (anchors.rowwise() - z.transpose()).rowwise().norm();
}

struct Evaluation {
  Vec dist;
  Vec g;
  Index worst = 0;
  double violation = 0.0;
};

Evaluation evaluate(const Constraints& cons, const Mat& anchors, const Vec& z) {
  Evaluation e;
  e.dist = distances(anchors, z);
  e.g = cons.u * e.dist;
  e.violation = (e.g - cons.q).maxCoeff(&e.worst);
  return e;
}

}  // namespace

double tuple_violation(const Vec& c, const SampleBank& bank, const QuantileEnvelope& envelope,
                       const std::vector<Index>& tuple) {
  const Constraints cons(envelope);
  Mat anchors(bank.K(), bank.D());
  for (Index k = 0; k < bank.K(); ++k) anchors.row(k) = bank.samples(k).row(tuple[k]);
  return evaluate(cons, anchors, c).violation;
}

InnerMaxResult inner_max(const Vec& w, const SampleBank& bank, const QuantileEnvelope& envelope,
                         const std::vector<Index>& tuple, const InnerMaxOptions& options) {
  require(bank.K() == envelope.K(), "inner_max: predictor count does not match envelope K");
  require(w.size() == bank.D(), "inner_max: decision length does not match sample dimension");
  require(static_cast<Index>(tuple.size()) == bank.K(), "inner_max: tuple length must be K");
  const Constraints cons(envelope);
  const Index K = bank.K();

  Mat samples(K, bank.D());
  for (Index k = 0; k < K; ++k) {
    require(tuple[k] >= 0 && tuple[k] < bank.J(k), "inner_max: tuple index out of range");
    samples.row(k) = bank.samples(k).row(tuple[k]);
  }
  const Vec centroid = samples.colwise().mean().transpose();

  // Orthonormal basis of span{sample_k - sample_0, w}.
  Eigen::MatrixXd span(bank.D(), K);
  for (Index k = 1; k < K; ++k) span.col(k - 1) = (samples.row(k) - samples.row(0)).transpose();
  span.col(K - 1) = w;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(span);
  qr.setThreshold(1e-12);
  const Index d = span.isZero(0.0) ? 0 : qr.rank();
  const Eigen::MatrixXd basis =
      Eigen::MatrixXd(qr.householderQ()).leftCols(d);

  Mat anchors(K, d);
  for (Index k = 0; k < K; ++k) {
    anchors.row(k) = (basis.transpose() * (samples.row(k).transpose() - centroid)).transpose();
  }
  const Vec objective = basis.transpose() * w;
  const auto lift = [&](const Vec& z) -> Vec { return centroid + basis * z; };

  InnerMaxResult out;
  if (d == 0) {
    const Evaluation e = evaluate(cons, anchors, Vec::Zero(0));
    out.violation = e.violation;
    if (e.violation <= options.violation_tol) {
      out.status = SolveStatus::kConverged;
      out.c_star = centroid;
      out.value = w.dot(centroid);
    }
    return out;
  }

  const double radius = std::sqrt(static_cast<double>(K)) * cons.q.maxCoeff() +
                        anchors.rowwise().norm().maxCoeff();
  LinearProgram lp = LinearProgram::nonnegative(d);
  lp.objective = objective;
  lp.maximize = true;
  lp.lower = Vec::Constant(d, -radius);
  lp.upper = Vec::Constant(d, radius);

  Vec z = Vec::Zero(d);
  for (int iter = 0; iter <= options.max_cuts; ++iter) {
    const LpResult lp_result = simplex_solve(lp);
    if (lp_result.status == LpStatus::kInfeasible) {
      out.status = SolveStatus::kInfeasible;
      out.cuts = iter;
      return out;
    }
    if (lp_result.status != LpStatus::kOptimal) break;
    z = lp_result.x;
    const Evaluation e = evaluate(cons, anchors, z);
    out.cuts = iter;
    out.violation = e.violation;
    if (e.violation <= options.violation_tol) {
      out.status = SolveStatus::kConverged;
      out.c_star = lift(z);
      out.value = w.dot(out.c_star);
      return out;
    }
    if (iter == options.max_cuts) break;
    // First-order cut of the most violated constraint; coincident anchors contribute 0.
    Vec slope = Vec::Zero(d);
    for (Index k = 0; k < K; ++k) {
      if (e.dist[k] > 0) slope += cons.u(e.worst, k) * (z - anchors.row(k).transpose()) / e.dist[k];
    }
    lp.add_inequality(slope, cons.q[e.worst] - e.g[e.worst] + slope.dot(z));
  }

  // Cut budget exhausted: pull the last LP point back toward the most feasible anchor.
  Vec anchor = Vec::Zero(d);
  double anchor_violation = evaluate(cons, anchors, anchor).violation;
  for (Index k = 0; k < K; ++k) {
    const Vec candidate = anchors.row(k).transpose();
    const double v = evaluate(cons, anchors, candidate).violation;
    if (v < anchor_violation) {
      anchor = candidate;
      anchor_violation = v;
    }
  }
  if (anchor_violation > options.violation_tol) {
    out.status = SolveStatus::kInfeasible;
    out.violation = anchor_violation;
    return out;
  }
  double inside = 0.0;
  double outside = 1.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (inside + outside);
    if (evaluate(cons, anchors, anchor + mid * (z - anchor)).violation <= options.violation_tol) {
      inside = mid;
    } else {
      outside = mid;
    }
  }
  const Vec restored = anchor + inside * (z - anchor);
  out.status = SolveStatus::kApproximate;
  out.violation = evaluate(cons, anchors, restored).violation;
  out.c_star = lift(restored);
  out.value = w.dot(out.c_star);
  return out;
}

RobustValue robust_value(const Vec& w, const SampleBank& bank, const QuantileEnvelope& envelope,
                         const InnerMaxOptions& options) {
  const Index tuples = bank.tuple_count();
  require(tuples <= options.max_tuples,
          "robust_value: " + std::to_string(tuples) + " sample tuples exceed the cap of " +
              std::to_string(options.max_tuples));
  RobustValue out;
  std::vector<Index> tuple(static_cast<std::size_t>(bank.K()), 0);
  for (Index t = 0; t < tuples; ++t) {
    Index rest = t;
    for (Index k = bank.K() - 1; k >= 0; --k) {
      tuple[k] = rest % bank.J(k);
      rest /= bank.J(k);
    }
    const InnerMaxResult r = inner_max(w, bank, envelope, tuple, options);
    if (!r.feasible()) continue;
    ++out.feasible_tuples;
    if (r.status == SolveStatus::kApproximate) out.status = SolveStatus::kApproximate;
    if (r.value > out.value) {
      out.value = r.value;
      out.c_star = r.c_star;
      out.tuple = tuple;
    }
  }
  if (out.feasible_tuples == 0) {
    fail(ErrorKind::kEmptyRegion,
         "robust_value: every sample tuple is infeasible; the prediction region is empty");
  }
  return out;
}

Vec project_onto_flow_polytope(const FlowProblem& problem, const Vec& y, int max_iters,
                               double tol) {
  const Eigen::MatrixXd a = problem.incidence();
  const Vec b = problem.supply();
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  const auto affine = [&](const Vec& v) -> Vec {
    const Vec r = a * v - b;
    return v - cod.solve(Eigen::VectorXd(r));
  };
  Vec x = y;
  Vec p = Vec::Zero(y.size());
  Vec q = Vec::Zero(y.size());
  for (int it = 0; it < max_iters; ++it) {
    const Vec yk = affine(x + p);
    p = x + p - yk;
    const Vec xn = (yk + q).cwiseMax(0.0).cwiseMin(1.0);
    q = yk + q - xn;
    const double step = (xn - x).cwiseAbs().maxCoeff();
    x = xn;
    if (step < tol && (a * x - b).cwiseAbs().maxCoeff() < tol) break;
  }
  return x;
}

RobustSolution robust_route(const FlowProblem& problem, const SampleBank& bank,
                            const QuantileEnvelope& envelope, const RouteOptions& options) {
  require(options.iters >= 1, "robust_route: need at least one iteration");
  require(bank.D() == problem.edge_count(),
          "robust_route: sample dimension does not match the edge count");
  if (options.mode == RouteMode::kProjectedSubgradient) {
    require(options.eta > 0, "robust_route: projected-subgradient mode needs a positive eta");
  }

  Vec mean_cost = Vec::Zero(bank.D());
  Index total = 0;
  for (Index k = 0; k < bank.K(); ++k) {
    mean_cost += bank.samples(k).colwise().sum().transpose();
    total += bank.J(k);
  }
  mean_cost /= static_cast<double>(total);
  Vec w = linear_minimization_oracle(problem, mean_cost).flow;

  RobustSolution out;
  const auto consider = [&](const Vec& flow, const RobustValue& rv) {
    if (rv.value < out.robust_value) {
      out.robust_value = rv.value;
      out.flow = flow;
    }
  };

  bool converged = false;
  int t = 0;
  for (; t < options.iters; ++t) {
    const RobustValue rv = robust_value(w, bank, envelope, options.inner);
    consider(w, rv);
    out.c_trace.push_back(rv.c_star);
    out.value_trace.push_back(rv.value);
    const PathFlow v = linear_minimization_oracle(problem, rv.c_star);
    const double gap = (w - v.flow).dot(rv.c_star);
    out.gap_trace.push_back(gap);
    out.gap = std::min(out.gap, gap);
    if (gap <= options.gap_tol * std::max(1.0, std::abs(rv.value))) {
      converged = true;
      ++t;
      break;
    }
    if (options.mode == RouteMode::kFrankWolfe) {
      const double step = 2.0 / (static_cast<double>(t) + 2.0);
      w += step * (v.flow - w);
    } else {
      w = project_onto_flow_polytope(problem, w - options.eta * rv.c_star);
    }
  }
  if (!converged) {
    const RobustValue rv = robust_value(w, bank, envelope, options.inner);
    consider(w, rv);
    out.value_trace.push_back(rv.value);
  }
  out.iterations = t;
  out.status = converged ? SolveStatus::kConverged : SolveStatus::kApproximate;
  return out;
}

double suboptimality_gap(const Vec& realized_cost, const Vec& w_robust,
                         const FlowProblem& problem) {
  require(realized_cost.size() == problem.edge_count() && w_robust.size() == problem.edge_count(),
          "suboptimality_gap: vector length does not match the edge count");
  const double best = shortest_path_lmo(problem, realized_cost).value;
  if (!(best > 0)) {
    fail(ErrorKind::kUndefinedMetric, "suboptimality_gap: hindsight optimum is zero");
  }
  return std::clamp((realized_cost.dot(w_robust) - best) / best, 0.0, 1.0);
}

}  // namespace csa
