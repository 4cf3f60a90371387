#include "csa/flow.hpp"

#include <functional>
#include <queue>

namespace csa {

FlowProblem::FlowProblem(Index vertices, std::vector<Edge> edges, Index source, Index target)
    : vertices_(vertices), edges_(std::move(edges)), source_(source), target_(target) {
  require(vertices_ >= 2, "flow problem: need at least 2 vertices");
  require(!edges_.empty(), "flow problem: no edges");
  require(source_ >= 0 && source_ < vertices_ && target_ >= 0 && target_ < vertices_,
          "flow problem: source/target out of range");
  require(source_ != target_, "flow problem: source equals target");
  for (const Edge& e : edges_) {
    require(e.src >= 0 && e.src < vertices_ && e.dst >= 0 && e.dst < vertices_,
            "flow problem: edge endpoint out of range");
    require(e.src != e.dst, "flow problem: self loops are not allowed");
    require(std::isfinite(e.nominal_cost) && e.nominal_cost >= 0,
            "flow problem: nominal costs must be nonnegative");
  }
  // Reachability of target from source.
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(vertices_));
  for (const Edge& e : edges_) out[static_cast<std::size_t>(e.src)].push_back(e.dst);
  std::vector<bool> seen(static_cast<std::size_t>(vertices_), false);
  std::vector<Index> stack{source_};
  seen[static_cast<std::size_t>(source_)] = true;
  while (!stack.empty()) {
    const Index v = stack.back();
    stack.pop_back();
    for (Index u : out[static_cast<std::size_t>(v)]) {
      if (!seen[static_cast<std::size_t>(u)]) {
        seen[static_cast<std::size_t>(u)] = true;
        stack.push_back(u);
      }
    }
  }
  if (!seen[static_cast<std::size_t>(target_)]) {
    fail(ErrorKind::kInfeasible, "flow problem: target is unreachable from source");
  }
}

Mat FlowProblem::incidence() const {
  Mat a = Mat::Zero(vertices_, edge_count());
  for (Index e = 0; e < edge_count(); ++e) {
    a(edges_[e].src, e) = 1.0;
    a(edges_[e].dst, e) = -1.0;
  }
  return a;
}

Vec FlowProblem::supply() const {
  Vec b = Vec::Zero(vertices_);
  b[source_] = 1.0;
  b[target_] = -1.0;
  return b;
}

Vec FlowProblem::nominal_costs() const {
  Vec c(edge_count());
  for (Index e = 0; e < edge_count(); ++e) c[e] = edges_[e].nominal_cost;
  return c;
}

LinearProgram FlowProblem::as_lp(const Vec& costs) const {
  require(costs.size() == edge_count(), "flow LP: cost vector length does not match edges");
  LinearProgram lp = LinearProgram::nonnegative(edge_count());
  lp.objective = costs;
  lp.upper = Vec::Ones(edge_count());
  lp.A = incidence();
  lp.b = supply();
  return lp;
}

double FlowProblem::flow_residual(const Vec& w) const {
  return (incidence() * w - supply()).cwiseAbs().maxCoeff();
}

FlowProblem grid_graph(Index rows, Index cols, const Vec& nominal_costs) {
  require(rows >= 1 && cols >= 1 && rows * cols >= 2, "grid_graph: need at least 2 vertices");
  const Index n_edges = rows * (cols - 1) + (rows - 1) * cols;
  require(nominal_costs.size() == n_edges,
          "grid_graph: expected " + std::to_string(n_edges) + " nominal costs");
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(n_edges));
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      const Index v = r * cols + c;
      if (c + 1 < cols) edges.push_back({v, v + 1, 0.0});
      if (r + 1 < rows) edges.push_back({v, v + cols, 0.0});
    }
  }
  for (Index e = 0; e < n_edges; ++e) edges[static_cast<std::size_t>(e)].nominal_cost = nominal_costs[e];
  return FlowProblem(rows * cols, std::move(edges), 0, rows * cols - 1);
}

PathFlow shortest_path_lmo(const FlowProblem& problem, const Vec& edge_costs) {
  require(edge_costs.size() == problem.edge_count(),
          "shortest path: cost vector length does not match edges");
  for (Index e = 0; e < edge_costs.size(); ++e) {
    require(std::isfinite(edge_costs[e]) && edge_costs[e] >= 0,
            "shortest path: costs must be nonnegative");
  }
  const auto n = static_cast<std::size_t>(problem.vertices());
  std::vector<std::vector<Index>> out(n);
  for (Index e = 0; e < problem.edge_count(); ++e) {
    out[static_cast<std::size_t>(problem.edges()[e].src)].push_back(e);
  }
  std::vector<double> dist(n, kInf);
  std::vector<Index> via(n, -1);
  using Item = std::pair<double, Index>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[static_cast<std::size_t>(problem.source())] = 0.0;
  queue.emplace(0.0, problem.source());
  while (!queue.empty()) {
    const auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[static_cast<std::size_t>(v)]) continue;
    if (v == problem.target()) break;
    for (Index e : out[static_cast<std::size_t>(v)]) {
      const Index u = problem.edges()[e].dst;
      const double nd = d + edge_costs[e];
      if (nd < dist[static_cast<std::size_t>(u)]) {
        dist[static_cast<std::size_t>(u)] = nd;
        via[static_cast<std::size_t>(u)] = e;
        queue.emplace(nd, u);
      }
    }
  }
  if (std::isinf(dist[static_cast<std::size_t>(problem.target())])) {
    fail(ErrorKind::kInfeasible, "shortest path: target unreachable");
  }
  PathFlow out_flow;
  out_flow.flow = Vec::Zero(problem.edge_count());
  for (Index v = problem.target(); v != problem.source();) {
    const Index e = via[static_cast<std::size_t>(v)];
    out_flow.flow[e] = 1.0;
    v = problem.edges()[e].src;
  }
  out_flow.value = edge_costs.dot(out_flow.flow);
  return out_flow;
}

PathFlow linear_minimization_oracle(const FlowProblem& problem, const Vec& edge_costs) {
  if (edge_costs.minCoeff() >= 0) return shortest_path_lmo(problem, edge_costs);
  const LpResult r = simplex_solve(problem.as_lp(edge_costs));
  if (r.status != LpStatus::kOptimal) {
    fail(r.status == LpStatus::kIterationLimit ? ErrorKind::kIterationLimit
                                               : ErrorKind::kInfeasible,
         std::string("flow LP: ") + to_string(r.status));
  }
  return {r.x, r.value};
}

}  // namespace csa
