#pragma once

#include "csa/common.hpp"

namespace csa {

/// optimize objective . x  s.t.  G x <= h,  A x = b,  lower <= x <= upper.
/// Bounds may be infinite.
struct LinearProgram {
  Vec objective;
  bool maximize = false;
  Mat G;
  Vec h;
  Mat A;
  Vec b;
  Vec lower;
  Vec upper;

  /// n variables, x >= 0, no constraints yet.
  static LinearProgram nonnegative(Index n);
  Index variables() const { return objective.size(); }
  void add_inequality(const Vec& row, double rhs);
  void validate() const;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

const char* to_string(LpStatus s);

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  Vec x;
  double value = 0.0;
  int pivots = 0;
};

struct SimplexOptions {
  int max_pivots = 20000;
  double tolerance = 1e-9;
};

/// Dense two-phase primal simplex. Dantzig pricing, switching to Bland's rule after
/// 3 (rows + cols) pivots in a phase.
LpResult simplex_solve(const LinearProgram& lp, const SimplexOptions& options = {});

}  // namespace csa
