#pragma once

#include "csa/lp.hpp"

#include <vector>

namespace csa {

struct Edge {
  Index src = 0;
  Index dst = 0;
  double nominal_cost = 0.0;
};

/// Unit s -> t flow over a directed graph: {w in [0, 1]^E : A w = b}, where column e of A has
/// +1 at the edge's tail and -1 at its head, b_s = 1 and b_t = -1.
class FlowProblem {
 public:
  FlowProblem(Index vertices, std::vector<Edge> edges, Index source, Index target);

  Index vertices() const { return vertices_; }
  Index edge_count() const { return static_cast<Index>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  Index source() const { return source_; }
  Index target() const { return target_; }

  Mat incidence() const;
  Vec supply() const;
  Vec nominal_costs() const;

  /// min costs . w over the flow polytope.
  LinearProgram as_lp(const Vec& costs) const;
  double flow_residual(const Vec& w) const;

 private:
  Index vertices_;
  std::vector<Edge> edges_;
  Index source_;
  Index target_;
};

/// rows x cols lattice with edges pointing right and down; source top-left, target bottom-right.
FlowProblem grid_graph(Index rows, Index cols, const Vec& nominal_costs);

struct PathFlow {
  Vec flow;
  double value = 0.0;
};

/// Indicator flow of a minimum-cost s -> t path (Dijkstra). Costs must be nonnegative.
PathFlow shortest_path_lmo(const FlowProblem& problem, const Vec& edge_costs);

/// Linear minimization over the flow polytope; Dijkstra when costs are nonnegative, the
/// simplex solver otherwise.
PathFlow linear_minimization_oracle(const FlowProblem& problem, const Vec& edge_costs);

}  // namespace csa
