#include "csa/lp.hpp"

#include <vector>

namespace csa {

LinearProgram LinearProgram::nonnegative(Index n) {
  LinearProgram lp;
  lp.objective = Vec::Zero(n);
  lp.G.resize(0, n);
  lp.h.resize(0);
  lp.A.resize(0, n);
  lp.b.resize(0);
  lp.lower = Vec::Zero(n);
  lp.upper = Vec::Constant(n, kInf);
  return lp;
}

void LinearProgram::add_inequality(const Vec& row, double rhs) {
  require(row.size() == variables(), "LP: inequality row has the wrong width");
  G.conservativeResize(G.rows() + 1, variables());
  G.row(G.rows() - 1) = row.transpose();
  h.conservativeResize(h.size() + 1);
  h[h.size() - 1] = rhs;
}

void LinearProgram::validate() const {
  const Index n = variables();
  require(n >= 1, "LP: no variables");
  require(G.cols() == n && G.rows() == h.size(), "LP: inequality block has inconsistent shape");
  require(A.cols() == n && A.rows() == b.size(), "LP: equality block has inconsistent shape");
  require(lower.size() == n && upper.size() == n, "LP: bounds have the wrong length");
  require(objective.allFinite() && G.allFinite() && h.allFinite() && A.allFinite() &&
              b.allFinite(),
          "LP: coefficients must be finite");
  for (Index j = 0; j < n; ++j) {
    require(!std::isnan(lower[j]) && !std::isnan(upper[j]), "LP: NaN bound");
    require(lower[j] != kInf && upper[j] != -kInf, "LP: bound points the wrong way");
  }
}

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::kOptimal:
      return "optimal";
    case LpStatus::kInfeasible:
      return "infeasible";
    case LpStatus::kUnbounded:
      return "unbounded";
    case LpStatus::kIterationLimit:
      return "iteration-limit";
  }
  return "?";
}

namespace {

// Tableau with the reduced-cost row stored last and the right-hand side stored in the last column.
class Tableau {
 public:
  Tableau(Mat t, std::vector<Index> basis, Index first_artificial, const SimplexOptions& opt)
      : t_(std::move(t)), basis_(std::move(basis)), first_art_(first_artificial), opt_(opt) {}

  Index rows() const { return t_.rows() - 1; }
  Index cols() const { return t_.cols() - 1; }
  double rhs(Index i) const { return t_(i, cols()); }
  const std::vector<Index>& basis() const { return basis_; }
  int pivots() const { return pivots_; }

  void set_costs(const Vec& costs) {
    t_.row(rows()).setZero();
    t_.row(rows()).head(costs.size()) = costs.transpose();
    for (Index i = 0; i < rows(); ++i) {
      const double cb = basis_[i] < costs.size() ? costs[basis_[i]] : 0.0;
      if (cb != 0.0) t_.row(rows()) -= cb * t_.row(i);
    }
  }

  // Runs pivots until optimal; returns kOptimal, kUnbounded or kIterationLimit.
  LpStatus optimize(bool allow_artificial) {
    const Index bland_after = 3 * (rows() + cols());
    Index phase_pivots = 0;
    while (true) {
      const bool bland = phase_pivots > bland_after;
      const Index limit = allow_artificial ? cols() : first_art_;
      Index enter = -1;
      double best = -opt_.tolerance;
      for (Index j = 0; j < limit; ++j) {
        const double d = t_(rows(), j);
        if (d < best) {
          enter = j;
          if (bland) break;
          best = d;
        }
      }
      if (enter < 0) return LpStatus::kOptimal;
      Index leave = -1;
      double ratio = kInf;
      for (Index i = 0; i < rows(); ++i) {
        const double a = t_(i, enter);
        if (a <= opt_.tolerance) continue;
        const double r = rhs(i) / a;
        if (r < ratio - 1e-12 || (r <= ratio + 1e-12 && leave >= 0 && basis_[i] < basis_[leave])) {
          ratio = std::min(ratio, r);
          leave = i;
        }
      }
      if (leave < 0) return LpStatus::kUnbounded;
      if (pivots_ >= opt_.max_pivots) return LpStatus::kIterationLimit;
      pivot(leave, enter);
      ++phase_pivots;
    }
  }

  void pivot(Index r, Index c) {
    t_.row(r) /= t_(r, c);
    const Eigen::RowVectorXd pivot_row = t_.row(r);
    Vec factors = t_.col(c);
    factors[r] = 0.0;
    t_.noalias() -= factors * pivot_row;
    t_(r, c) = 1.0;
    for (Index i = 0; i < t_.rows(); ++i) {
      if (i != r) t_(i, c) = 0.0;
    }
    basis_[r] = c;
    ++pivots_;
  }

  // After phase 1: pivot artificials out of the basis or drop their (redundant) rows.
  void expel_artificials() {
    std::vector<Index> keep;
    for (Index i = 0; i < rows(); ++i) {
      if (basis_[i] >= first_art_) {
        Index col = -1;
        for (Index j = 0; j < first_art_; ++j) {
          if (std::abs(t_(i, j)) > 1e-7) {
            col = j;
            break;
          }
        }
        if (col >= 0) pivot(i, col);
      }
    }
    for (Index i = 0; i < rows(); ++i) {
      if (basis_[i] < first_art_) keep.push_back(i);
    }
    if (static_cast<Index>(keep.size()) == rows()) return;
    Mat reduced(static_cast<Index>(keep.size()) + 1, t_.cols());
    std::vector<Index> basis;
    for (std::size_t k = 0; k < keep.size(); ++k) {
      reduced.row(static_cast<Index>(k)) = t_.row(keep[k]);
      basis.push_back(basis_[keep[k]]);
    }
    reduced.row(reduced.rows() - 1) = t_.row(rows());
    t_ = std::move(reduced);
    basis_ = std::move(basis);
  }

  double objective_value() const { return -t_(rows(), cols()); }

 private:
  Mat t_;
  std::vector<Index> basis_;
  Index first_art_;
  SimplexOptions opt_;
  int pivots_ = 0;
};

}  // namespace

LpResult simplex_solve(const LinearProgram& lp, const SimplexOptions& options) {
  lp.validate();
  const Index n = lp.variables();
  LpResult result;

  // x = offset + map * y with y >= 0.
  Vec offset = Vec::Zero(n);
  std::vector<std::pair<Index, double>> cols_pos(static_cast<std::size_t>(n), {-1, 0.0});
  std::vector<Index> cols_neg(static_cast<std::size_t>(n), -1);
  std::vector<std::pair<Index, double>> bound_rows;  // (y column, upper - lower)
  Index ny = 0;
  for (Index j = 0; j < n; ++j) {
    const double lo = lp.lower[j];
    const double hi = lp.upper[j];
    if (lo > hi) return result;  // infeasible bounds
    if (std::isfinite(lo)) {
      offset[j] = lo;
      cols_pos[j] = {ny, 1.0};
      if (std::isfinite(hi)) bound_rows.emplace_back(ny, hi - lo);
      ++ny;
    } else if (std::isfinite(hi)) {
      offset[j] = hi;
      cols_pos[j] = {ny++, -1.0};
    } else {
      cols_pos[j] = {ny++, 1.0};
      cols_neg[j] = ny++;
    }
  }
  Mat map = Mat::Zero(n, ny);
  for (Index j = 0; j < n; ++j) {
    map(j, cols_pos[j].first) = cols_pos[j].second;
    if (cols_neg[j] >= 0) map(j, cols_neg[j]) = -1.0;
  }

  const Index m_in = lp.G.rows() + static_cast<Index>(bound_rows.size());
  const Index m_eq = lp.A.rows();
  const Index m = m_in + m_eq;
  Mat rows = Mat::Zero(m, ny);
  Vec rhs(m);
  if (lp.G.rows() > 0) {
    rows.topRows(lp.G.rows()) = lp.G * map;
    rhs.head(lp.G.rows()) = lp.h - lp.G * offset;
  }
  for (std::size_t r = 0; r < bound_rows.size(); ++r) {
    const Index i = lp.G.rows() + static_cast<Index>(r);
    rows(i, bound_rows[r].first) = 1.0;
    rhs[i] = bound_rows[r].second;
  }
  if (m_eq > 0) {
    rows.bottomRows(m_eq) = lp.A * map;
    rhs.tail(m_eq) = lp.b - lp.A * offset;
  }

  // Rows needing an artificial: equalities and inequalities with a negative right-hand side.
  std::vector<Index> art_rows;
  for (Index i = 0; i < m; ++i) {
    if (i >= m_in || rhs[i] < 0) art_rows.push_back(i);
  }
  const Index n_art = static_cast<Index>(art_rows.size());
  const Index n_cols = ny + m_in + n_art;
  Mat t = Mat::Zero(m + 1, n_cols + 1);
  std::vector<Index> basis(static_cast<std::size_t>(m));
  t.topLeftCorner(m, ny) = rows;
  for (Index i = 0; i < m_in; ++i) t(i, ny + i) = 1.0;
  t.block(0, n_cols, m, 1) = rhs;
  for (Index i = 0; i < m; ++i) {
    if (rhs[i] < 0) t.row(i) *= -1.0;
    basis[i] = ny + i;  // slack; replaced below for artificial rows
  }
  for (Index a = 0; a < n_art; ++a) {
    const Index i = art_rows[a];
    t(i, ny + m_in + a) = 1.0;
    basis[i] = ny + m_in + a;
  }

  Tableau tab(std::move(t), std::move(basis), ny + m_in, options);
  if (n_art > 0) {
    Vec phase1 = Vec::Zero(n_cols);
    phase1.tail(n_art).setOnes();
    tab.set_costs(phase1);
    const LpStatus s = tab.optimize(true);
    if (s == LpStatus::kIterationLimit) {
      result.status = s;
      result.pivots = tab.pivots();
      return result;
    }
    const double scale = 1.0 + rhs.cwiseAbs().maxCoeff();
    if (tab.objective_value() > 1e-8 * scale) {
      result.status = LpStatus::kInfeasible;
      result.pivots = tab.pivots();
      return result;
    }
    tab.expel_artificials();
  }

  Vec costs = Vec::Zero(n_cols);
  costs.head(ny) = map.transpose() * lp.objective;
  if (lp.maximize) costs = -costs;
  tab.set_costs(costs);
  result.status = tab.optimize(false);
  result.pivots = tab.pivots();
  if (result.status != LpStatus::kOptimal) return result;

  Vec y = Vec::Zero(ny);
  for (Index i = 0; i < tab.rows(); ++i) {
    if (tab.basis()[i] < ny) y[tab.basis()[i]] = std::max(0.0, tab.rhs(i));
  }
  result.x = offset + map * y;
  result.value = lp.objective.dot(result.x);
  return result;
}

}  // namespace csa
