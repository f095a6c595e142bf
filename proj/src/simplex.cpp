#include <algorithm>
#include <cmath>
#include <limits>

#include "mfi/error.hpp"
#include "mfi/lp.hpp"

namespace mfi::lp {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr std::size_t kMaxPivots = 200000;

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : m_(rows), n_(cols), a_((rows + 1) * (cols + 1), 0.0) {}

  double& at(std::size_t i, std::size_t j) { return a_[i * (n_ + 1) + j]; }
  double at(std::size_t i, std::size_t j) const { return a_[i * (n_ + 1) + j]; }
  double& rhs(std::size_t i) { return at(i, n_); }
  double& obj(std::size_t j) { return at(m_, j); }

  void pivot(std::size_t r, std::size_t c) {
    const std::size_t w = n_ + 1;
    double* pr = &a_[r * w];
    const double inv = 1.0 / pr[c];
    for (std::size_t j = 0; j < w; ++j) pr[j] *= inv;
    pr[c] = 1.0;
    for (std::size_t i = 0; i <= m_; ++i) {
      if (i == r) continue;
      double* pi = &a_[i * w];
      const double f = pi[c];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < w; ++j) pi[j] -= f * pr[j];
      pi[c] = 0.0;
    }
  }

  std::size_t rows() const { return m_; }
  std::size_t cols() const { return n_; }

 private:
  std::size_t m_, n_;
  std::vector<double> a_;
};

struct Runner {
  Tableau& t;
  std::vector<std::size_t>& basis;
  const std::vector<bool>& barred;
  double tol;
  std::size_t pivots = 0;

  // Returns false when unbounded.
  bool optimize() {
    bool degenerate = false;
    for (;;) {
      std::size_t enter = t.cols();
      double best = -tol;
      for (std::size_t j = 0; j < t.cols(); ++j) {
        if (barred[j]) continue;
        const double d = t.obj(j);
        if (d < -tol) {
          if (degenerate) {
            enter = j;
            break;
          }
          if (d < best) {
            best = d;
            enter = j;
          }
        }
      }
      if (enter == t.cols()) return true;

      std::size_t leave = t.rows();
      double ratio = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < t.rows(); ++i) {
        const double a = t.at(i, enter);
        if (a <= kPivotTol) continue;
        const double r = std::max(t.rhs(i), 0.0) / a;
        if (r < ratio - 1e-14 || (r <= ratio + 1e-14 && leave < t.rows() && basis[i] < basis[leave])) {
          if (r < ratio) ratio = r;
          leave = i;
        }
      }
      if (leave == t.rows()) return false;
      degenerate = ratio <= 1e-14;
      t.pivot(leave, enter);
      basis[leave] = enter;
      if (++pivots > kMaxPivots) throw Error(ErrorCode::InvalidArgument, "simplex pivot limit reached");
    }
  }
};

}  // namespace

Result solve(const Problem& problem, double tol) {
  const std::size_t n = problem.objective.size();
  const std::size_t m = problem.rows.size();

  std::vector<double> sign(m, 1.0);
  std::vector<Relation> rel(m);
  std::size_t n_slack = 0, n_art = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& row = problem.rows[i];
    if (row.coef.size() != n) throw Error(ErrorCode::InvalidArgument, "row length differs from objective");
    rel[i] = row.rel;
    if (row.rhs < 0.0) {
      sign[i] = -1.0;
      if (rel[i] == Relation::LessEq) rel[i] = Relation::GreaterEq;
      else if (rel[i] == Relation::GreaterEq) rel[i] = Relation::LessEq;
    }
    if (rel[i] != Relation::Equal) ++n_slack;
    if (rel[i] != Relation::LessEq) ++n_art;
  }

  const std::size_t cols = n + n_slack + n_art;
  Tableau t(m, cols);
  std::vector<std::size_t> basis(m);
  std::vector<std::size_t> slack_col(m, cols), art_col(m, cols);
  std::vector<bool> is_art(cols, false);
  {
    std::size_t s = n, a = n + n_slack;
    for (std::size_t i = 0; i < m; ++i) {
      const auto& row = problem.rows[i];
      for (std::size_t j = 0; j < n; ++j) t.at(i, j) = sign[i] * row.coef[j];
      t.rhs(i) = sign[i] * row.rhs;
      if (rel[i] == Relation::LessEq) {
        t.at(i, s) = 1.0;
        slack_col[i] = s;
        basis[i] = s++;
      } else {
        if (rel[i] == Relation::GreaterEq) {
          t.at(i, s) = -1.0;
          slack_col[i] = s++;
        }
        t.at(i, a) = 1.0;
        art_col[i] = a;
        is_art[a] = true;
        basis[i] = a++;
      }
    }
  }

  Result result;
  std::vector<bool> barred(cols, false);
  Runner run{t, basis, barred, tol};

  if (n_art > 0) {
    // Phase 1: maximize -sum(artificials).
    for (std::size_t j = 0; j <= cols; ++j) t.obj(j) = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (!is_art[basis[i]]) continue;
      for (std::size_t j = 0; j <= cols; ++j) t.obj(j) -= t.at(i, j);
    }
    for (std::size_t j = 0; j < cols; ++j) {
      if (is_art[j]) t.obj(j) += 1.0;
    }
    run.optimize();
    if (t.obj(cols) < -1e-9 * std::max(1.0, static_cast<double>(m))) {
      result.status = Status::Infeasible;
      result.pivots = run.pivots;
      return result;
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (!is_art[basis[i]]) continue;
      for (std::size_t j = 0; j < n + n_slack; ++j) {
        if (std::abs(t.at(i, j)) > 1e-9) {
          t.pivot(i, j);
          basis[i] = j;
          break;
        }
      }
    }
    for (std::size_t j = 0; j < cols; ++j) barred[j] = is_art[j];
  }

  // Phase 2.
  std::vector<double> c(cols, 0.0);
  for (std::size_t j = 0; j < n; ++j) c[j] = problem.objective[j];
  for (std::size_t j = 0; j <= cols; ++j) {
    double s = j < cols ? -c[j] : 0.0;
    for (std::size_t i = 0; i < m; ++i) s += c[basis[i]] * t.at(i, j);
    t.obj(j) = s;
  }
  if (!run.optimize()) {
    result.status = Status::Unbounded;
    result.pivots = run.pivots;
    return result;
  }

  result.status = Status::Optimal;
  result.pivots = run.pivots;
  result.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < n) result.x[basis[i]] = std::max(0.0, t.rhs(i));
  }
  long double primal = 0.0L;
  for (std::size_t j = 0; j < n; ++j) primal += problem.objective[j] * result.x[j];
  result.value = static_cast<double>(primal);

  result.duals.assign(m, 0.0);
  long double dual = 0.0L;
  for (std::size_t i = 0; i < m; ++i) {
    double y = 0.0;
    if (art_col[i] < cols) y = t.obj(art_col[i]);
    else y = t.obj(slack_col[i]);
    result.duals[i] = sign[i] * y;
    dual += result.duals[i] * problem.rows[i].rhs;
  }
  result.dual_value = static_cast<double>(dual);
  result.duality_gap = std::abs(result.value - result.dual_value);

  // Dual feasibility: A^T y >= c with sign restrictions per row type.
  double infeas = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < m; ++i) s += result.duals[i] * problem.rows[i].coef[j];
    infeas = std::max(infeas, static_cast<double>(problem.objective[j] - s));
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (problem.rows[i].rel == Relation::LessEq) infeas = std::max(infeas, -result.duals[i]);
    if (problem.rows[i].rel == Relation::GreaterEq) infeas = std::max(infeas, result.duals[i]);
  }
  result.dual_infeasibility = infeas;
  return result;
}

}  // namespace mfi::lp
