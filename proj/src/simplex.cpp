#include "simplex.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "groupcf/error.hpp"

namespace groupcf::detail {

namespace {

constexpr double kDrop = 1e-12;
constexpr std::size_t kDegenerateLimit = 50;
constexpr double kDualPivot = 1e-7;
constexpr std::size_t kRefreshPivots = 2000;

double resting_value(double lo, double hi) {
  if (lo > -kInf) return lo;
  if (hi < kInf) return hi;
  return 0.0;
}

}  // namespace

BoundedSimplex::BoundedSimplex(const MipModel& model, const Tolerances& tol) : tol_(tol) {
  m_ = model.num_constraints();
  n_ = model.num_variables();
  sign_ = model.objective_sense() == ObjSense::minimize ? 1.0 : -1.0;
  constant_ = model.objective_constant();

  a_.assign(m_ * n_, 0.0);
  b_.resize(m_);
  row_lo_.resize(m_);
  row_hi_.resize(m_);
  const auto& rows = model.constraints();
  for (std::size_t i = 0; i < m_; ++i) {
    for (const auto& t : rows[i].terms) a_[i * n_ + t.var.index] += t.coef;
    b_[i] = rows[i].rhs;
    switch (rows[i].sense) {
      case Sense::le: row_lo_[i] = 0.0; row_hi_[i] = kInf; break;
      case Sense::ge: row_lo_[i] = -kInf; row_hi_[i] = 0.0; break;
      case Sense::eq: row_lo_[i] = 0.0; row_hi_[i] = 0.0; break;
    }
  }
  lo_.resize(n_ + m_);
  hi_.resize(n_ + m_);
  cost_.assign(n_ + m_, 0.0);
  const auto& vars = model.variables();
  for (std::size_t j = 0; j < n_; ++j) {
    lo_[j] = vars[j].lower;
    hi_[j] = vars[j].upper;
    cost_[j] = sign_ * vars[j].objective;
  }
  for (std::size_t i = 0; i < m_; ++i) {
    lo_[n_ + i] = row_lo_[i];
    hi_[n_ + i] = row_hi_[i];
  }
}

std::size_t BoundedSimplex::dense_entries(const MipModel& model) {
  const std::size_t m = model.num_constraints();
  return m * (model.num_variables() + m);
}

void BoundedSimplex::set_bounds(std::size_t var, double lower, double upper) {
  lo_[var] = lower;
  hi_[var] = upper;
}

bool BoundedSimplex::expired(const Deadline& deadline) const {
  return deadline && Clock::now() >= *deadline;
}

void BoundedSimplex::build_initial_tableau() {
  std::vector<double> residual(b_);
  std::vector<double> x0(n_);
  for (std::size_t j = 0; j < n_; ++j) {
    x0[j] = resting_value(lo_[j], hi_[j]);
    if (x0[j] == 0.0) continue;
    for (std::size_t i = 0; i < m_; ++i) residual[i] -= a_[i * n_ + j] * x0[j];
  }
  std::vector<int> art_sign(m_, 0);
  std::size_t arts = 0;
  for (std::size_t i = 0; i < m_; ++i) {
    if (residual[i] < row_lo_[i] - tol_.feasibility || residual[i] > row_hi_[i] + tol_.feasibility) {
      art_sign[i] = residual[i] > 0.0 ? 1 : -1;
      ++arts;
    }
  }

  stride_ = n_ + m_ + arts;
  tab_.assign(m_ * stride_, 0.0);
  x_.assign(stride_, 0.0);
  lo_.resize(stride_);
  hi_.resize(stride_);
  cost_.resize(stride_);
  row_of_.assign(stride_, -1);
  basis_.assign(m_, 0);
  std::copy(x0.begin(), x0.end(), x_.begin());

  std::size_t next_art = n_ + m_;
  for (std::size_t i = 0; i < m_; ++i) {
    lo_[n_ + i] = row_lo_[i];
    hi_[n_ + i] = row_hi_[i];
    const double s = art_sign[i] == 0 ? 1.0 : static_cast<double>(art_sign[i]);
    for (std::size_t j = 0; j < n_; ++j) at(i, j) = s * a_[i * n_ + j];
    at(i, n_ + i) = s;
    if (art_sign[i] == 0) {
      basis_[i] = n_ + i;
      x_[n_ + i] = residual[i];
    } else {
      const std::size_t art = next_art++;
      at(i, art) = 1.0;
      lo_[art] = 0.0;
      hi_[art] = kInf;
      cost_[art] = 0.0;
      basis_[i] = art;
      x_[art] = std::abs(residual[i]);
      x_[n_ + i] = 0.0;
    }
    row_of_[basis_[i]] = static_cast<long>(i);
  }
}

void BoundedSimplex::compute_reduced_costs(const std::vector<double>& cost) {
  d_.assign(cost.begin(), cost.end());
  for (std::size_t i = 0; i < m_; ++i) {
    const double cb = cost[basis_[i]];
    if (cb == 0.0) continue;
    const double* row = &tab_[i * stride_];
    for (std::size_t j = 0; j < stride_; ++j) d_[j] -= cb * row[j];
  }
  for (std::size_t i = 0; i < m_; ++i) d_[basis_[i]] = 0.0;
}

void BoundedSimplex::pivot(std::size_t r, std::size_t q) {
  double* prow = &tab_[r * stride_];
  const double inv = 1.0 / prow[q];
  nz_.clear();
  for (std::size_t k = 0; k < stride_; ++k) {
    if (prow[k] == 0.0) continue;
    prow[k] *= inv;
    if (std::abs(prow[k]) < kDrop) {
      prow[k] = 0.0;
    } else {
      nz_.push_back(k);
    }
  }
  prow[q] = 1.0;
  for (std::size_t i = 0; i < m_; ++i) {
    if (i == r) continue;
    double* row = &tab_[i * stride_];
    const double f = row[q];
    if (f == 0.0) continue;
    for (std::size_t k : nz_) {
      double v = row[k] - f * prow[k];
      row[k] = std::abs(v) < kDrop ? 0.0 : v;
    }
    row[q] = 0.0;
  }
  const double fd = d_[q];
  if (fd != 0.0) {
    for (std::size_t k : nz_) d_[k] -= fd * prow[k];
  }
  d_[q] = 0.0;

  row_of_[basis_[r]] = -1;
  basis_[r] = q;
  row_of_[q] = static_cast<long>(r);
  ++iterations_;
}

void BoundedSimplex::shift_nonbasic(std::size_t col, double new_value) {
  const double delta = new_value - x_[col];
  x_[col] = new_value;
  if (delta == 0.0) return;
  for (std::size_t i = 0; i < m_; ++i) {
    const double t = at(i, col);
    if (t != 0.0) x_[basis_[i]] -= t * delta;
  }
}

SimplexResult BoundedSimplex::primal_loop(const Deadline& deadline) {
  const std::size_t cap = 50 * (m_ + stride_) + 10000;
  Rule rule = Rule::dantzig;
  std::size_t stalled = 0;

  for (std::size_t iter = 0;; ++iter) {
    if (iter > cap) {
      throw Error(Errc::numerical_breakdown, "primal simplex exceeded its iteration cap");
    }
    if ((iter & 31) == 31 && expired(deadline)) return SimplexResult::time_limit;

    // Entering column.
    std::size_t q = stride_;
    double best = 0.0;
    double dir = 0.0;
    for (std::size_t j = 0; j < stride_; ++j) {
      if (row_of_[j] >= 0 || lo_[j] == hi_[j]) continue;
      const double dj = d_[j];
      double candidate_dir = 0.0;
      if (dj < -tol_.optimality && x_[j] < hi_[j]) {
        candidate_dir = 1.0;
      } else if (dj > tol_.optimality && x_[j] > lo_[j]) {
        candidate_dir = -1.0;
      } else {
        continue;
      }
      if (rule == Rule::bland) {
        q = j;
        dir = candidate_dir;
        break;
      }
      if (std::abs(dj) > best) {
        best = std::abs(dj);
        q = j;
        dir = candidate_dir;
      }
    }
    if (q == stride_) return SimplexResult::optimal;

    // Two-pass (Harris) ratio test.
    double relaxed = kInf;
    for (std::size_t i = 0; i < m_; ++i) {
      const double alpha = at(i, q) * dir;
      if (std::abs(alpha) <= tol_.pivot) continue;
      const std::size_t bi = basis_[i];
      double t = kInf;
      if (alpha > 0.0 && lo_[bi] > -kInf) {
        t = (x_[bi] - lo_[bi] + tol_.feasibility) / alpha;
      } else if (alpha < 0.0 && hi_[bi] < kInf) {
        t = (hi_[bi] - x_[bi] + tol_.feasibility) / -alpha;
      }
      relaxed = std::min(relaxed, t);
    }
    std::size_t leave = m_;
    double theta = kInf;
    double best_alpha = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      const double alpha = at(i, q) * dir;
      if (std::abs(alpha) <= tol_.pivot) continue;
      const std::size_t bi = basis_[i];
      double t = kInf;
      if (alpha > 0.0 && lo_[bi] > -kInf) {
        t = (x_[bi] - lo_[bi]) / alpha;
      } else if (alpha < 0.0 && hi_[bi] < kInf) {
        t = (hi_[bi] - x_[bi]) / -alpha;
      }
      if (t == kInf) continue;
      t = std::max(t, 0.0);
      if (rule == Rule::bland) {
        if (t < theta || (t == theta && leave < m_ && bi < basis_[leave])) {
          theta = t;
          leave = i;
        }
      } else if (t <= relaxed && std::abs(alpha) > best_alpha) {
        best_alpha = std::abs(alpha);
        theta = t;
        leave = i;
      }
    }
    const double span = hi_[q] - lo_[q];
    const bool flip = span < kInf && span <= theta;
    if (flip) {
      theta = span;
    } else if (leave == m_) {
      return SimplexResult::unbounded;
    }

    const double gain = std::abs(d_[q]) * theta;
    if (gain > 1e-12) {
      stalled = 0;
      rule = Rule::dantzig;
    } else if (++stalled > kDegenerateLimit) {
      rule = Rule::bland;
    }

    if (theta > 0.0) {
      const double step = dir * theta;
      for (std::size_t i = 0; i < m_; ++i) {
        const double t = at(i, q);
        if (t != 0.0) x_[basis_[i]] -= t * step;
      }
      x_[q] += step;
    }
    if (flip) {
      x_[q] = dir > 0.0 ? hi_[q] : lo_[q];
      ++iterations_;
      continue;
    }
    const std::size_t out = basis_[leave];
    const double alpha = at(leave, q) * dir;
    x_[out] = alpha > 0.0 ? lo_[out] : hi_[out];
    pivot(leave, q);
  }
}

SimplexResult BoundedSimplex::dual_loop(const Deadline& deadline) {
  const std::size_t cap = 50 * (m_ + stride_) + 10000;
  for (std::size_t iter = 0;; ++iter) {
    if (iter > cap) {
      throw Error(Errc::numerical_breakdown, "dual simplex exceeded its iteration cap");
    }
    if ((iter & 31) == 31 && expired(deadline)) return SimplexResult::time_limit;

    std::size_t r = m_;
    double worst = tol_.feasibility;
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t bi = basis_[i];
      const double infeas = std::max(lo_[bi] - x_[bi], x_[bi] - hi_[bi]);
      if (infeas > worst) {
        worst = infeas;
        r = i;
      }
    }
    if (r == m_) return SimplexResult::optimal;

    const std::size_t out = basis_[r];
    const bool below = x_[out] < lo_[out];
    const double target = below ? lo_[out] : hi_[out];
    // x_out = beta - sum alpha_j x_j; we need x_out to rise when below.
    const double need = below ? -1.0 : 1.0;

    double relaxed = kInf;
    for (std::size_t j = 0; j < stride_; ++j) {
      if (row_of_[j] >= 0 || lo_[j] == hi_[j]) continue;
      const double alpha = at(r, j) * need;
      if (std::abs(alpha) <= kDualPivot) continue;
      const bool can_up = x_[j] < hi_[j];
      const bool can_down = x_[j] > lo_[j];
      if (!((alpha > 0.0 && can_up) || (alpha < 0.0 && can_down))) continue;
      relaxed = std::min(relaxed, (std::abs(d_[j]) + tol_.optimality) / std::abs(alpha));
    }
    std::size_t q = stride_;
    double best_alpha = 0.0;
    for (std::size_t j = 0; j < stride_; ++j) {
      if (row_of_[j] >= 0 || lo_[j] == hi_[j]) continue;
      const double alpha = at(r, j) * need;
      if (std::abs(alpha) <= kDualPivot) continue;
      const bool can_up = x_[j] < hi_[j];
      const bool can_down = x_[j] > lo_[j];
      if (!((alpha > 0.0 && can_up) || (alpha < 0.0 && can_down))) continue;
      const double ratio = std::abs(d_[j]) / std::abs(alpha);
      if (ratio <= relaxed && std::abs(alpha) > best_alpha) {
        best_alpha = std::abs(alpha);
        q = j;
      }
    }
    if (q == stride_) return proven_infeasible(r) ? SimplexResult::infeasible : solve(deadline);

    const double theta = (x_[out] - target) / at(r, q);
    for (std::size_t i = 0; i < m_; ++i) {
      const double t = at(i, q);
      if (t != 0.0) x_[basis_[i]] -= t * theta;
    }
    x_[q] += theta;
    x_[out] = target;
    pivot(r, q);
  }
}

void BoundedSimplex::drop_artificials() {
  const std::size_t first_art = n_ + m_;
  for (std::size_t i = 0; i < m_; ++i) {
    if (basis_[i] < first_art) continue;
    std::size_t q = first_art;
    double best = 1e-7;
    for (std::size_t j = 0; j < first_art; ++j) {
      if (row_of_[j] >= 0) continue;
      if (std::abs(at(i, j)) > best) {
        best = std::abs(at(i, j));
        q = j;
      }
    }
    if (q < first_art) {
      x_[basis_[i]] = 0.0;
      pivot(i, q);
    }
  }

  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < stride_; ++j) {
    if (j < first_art || row_of_[j] >= 0) keep.push_back(j);
  }
  if (keep.size() == stride_) {
    for (std::size_t j = first_art; j < stride_; ++j) lo_[j] = hi_[j] = x_[j] = 0.0;
    return;
  }
  const std::size_t new_stride = keep.size();
  std::vector<double> tab(m_ * new_stride);
  for (std::size_t i = 0; i < m_; ++i) {
    for (std::size_t k = 0; k < new_stride; ++k) tab[i * new_stride + k] = at(i, keep[k]);
  }
  std::vector<long> remap(stride_, -1);
  for (std::size_t k = 0; k < new_stride; ++k) remap[keep[k]] = static_cast<long>(k);
  auto compact = [&](std::vector<double>& v) {
    std::vector<double> out(new_stride);
    for (std::size_t k = 0; k < new_stride; ++k) out[k] = v[keep[k]];
    v.swap(out);
  };
  compact(x_);
  compact(lo_);
  compact(hi_);
  compact(cost_);
  tab_.swap(tab);
  stride_ = new_stride;
  row_of_.assign(stride_, -1);
  for (std::size_t i = 0; i < m_; ++i) {
    basis_[i] = static_cast<std::size_t>(remap[basis_[i]]);
    row_of_[basis_[i]] = static_cast<long>(i);
  }
  // Artificials left in the basis sit on redundant rows; pin them at zero.
  for (std::size_t j = first_art; j < stride_; ++j) lo_[j] = hi_[j] = x_[j] = 0.0;
}

bool BoundedSimplex::proven_infeasible(std::size_t r) const {
  if (!residual_ok()) return false;
  const std::size_t out = basis_[r];
  const bool below = x_[out] < lo_[out];
  const double gap = below ? lo_[out] - x_[out] : x_[out] - hi_[out];
  // Largest move of x_out toward its violated bound over the nonbasic box,
  // counting the tiny entries the ratio test ignores.
  double reach = 0.0;
  for (std::size_t j = 0; j < stride_; ++j) {
    if (row_of_[j] >= 0) continue;
    const double t = at(r, j);
    if (t == 0.0) continue;
    const bool raise = below == (t < 0.0);
    const double room = raise ? hi_[j] - x_[j] : x_[j] - lo_[j];
    if (room == kInf) return false;
    reach += std::abs(t) * room;
  }
  return reach < gap - tol_.feasibility;
}

bool BoundedSimplex::accurate() const {
  if (!residual_ok()) return false;
  for (std::size_t i = 0; i < m_; ++i) {
    const std::size_t bi = basis_[i];
    if (x_[bi] < lo_[bi] - 10 * tol_.feasibility || x_[bi] > hi_[bi] + 10 * tol_.feasibility) {
      return false;
    }
  }
  return true;
}

bool BoundedSimplex::residual_ok() const {
  for (std::size_t i = 0; i < m_; ++i) {
    double lhs = x_[n_ + i];
    double scale = 1.0 + std::abs(b_[i]);
    for (std::size_t j = 0; j < n_; ++j) {
      const double a = a_[i * n_ + j];
      if (a == 0.0) continue;
      lhs += a * x_[j];
      scale = std::max(scale, std::abs(a * x_[j]));
    }
    // Basic artificials are pinned at zero, so they never contribute.
    if (std::abs(lhs - b_[i]) > 1e-7 * scale) return false;
  }
  return true;
}

SimplexResult BoundedSimplex::solve(const Deadline& deadline) {
  ready_ = false;
  last_factor_ = iterations_;
  build_initial_tableau();
  if (stride_ > n_ + m_) {
    std::vector<double> phase1(stride_, 0.0);
    for (std::size_t j = n_ + m_; j < stride_; ++j) phase1[j] = 1.0;
    compute_reduced_costs(phase1);
    const auto r = primal_loop(deadline);
    if (r == SimplexResult::time_limit) return r;
    double infeasibility = 0.0;
    for (std::size_t j = n_ + m_; j < stride_; ++j) infeasibility += x_[j];
    if (infeasibility > tol_.feasibility) return SimplexResult::infeasible;
    drop_artificials();
  }
  compute_reduced_costs(cost_);
  auto r = primal_loop(deadline);
  if (r != SimplexResult::optimal) return r;
  if (!accurate()) {
    // Recompute from the original data and let primal simplex finish.
    if (!refactor() || !accurate()) {
      throw Error(Errc::numerical_breakdown, "simplex solution fails the residual check");
    }
    r = primal_loop(deadline);
    if (r != SimplexResult::optimal) return r;
    if (!accurate()) {
      throw Error(Errc::numerical_breakdown, "simplex solution fails the residual check");
    }
  }
  ready_ = true;
  return r;
}

bool BoundedSimplex::refactor() {
  // Basic artificials have no column in [A I]; leave those bases alone.
  if (stride_ != n_ + m_) return false;
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Matrix full = Matrix::Zero(static_cast<long>(m_), static_cast<long>(stride_));
  for (std::size_t i = 0; i < m_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) full(i, j) = a_[i * n_ + j];
    full(i, n_ + i) = 1.0;
  }
  Eigen::MatrixXd basis(m_, m_);
  for (std::size_t k = 0; k < m_; ++k) basis.col(k) = full.col(basis_[k]);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis);
  const Matrix tab = lu.solve(full);

  Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(b_.data(), static_cast<long>(m_));
  for (std::size_t j = 0; j < stride_; ++j) {
    if (row_of_[j] < 0 && x_[j] != 0.0) rhs -= full.col(j) * x_[j];
  }
  const Eigen::VectorXd xb = lu.solve(rhs);

  for (std::size_t k = 0; k < m_; ++k) {
    if (std::abs(tab(k, basis_[k]) - 1.0) > 1e-6 || !std::isfinite(xb[k])) return false;
  }
  for (std::size_t i = 0; i < m_; ++i) {
    for (std::size_t j = 0; j < stride_; ++j) {
      const double v = tab(i, j);
      at(i, j) = std::abs(v) < kDrop ? 0.0 : v;
    }
  }
  for (std::size_t k = 0; k < m_; ++k) {
    for (std::size_t i = 0; i < m_; ++i) at(i, basis_[k]) = i == k ? 1.0 : 0.0;
    x_[basis_[k]] = xb[k];
  }
  compute_reduced_costs(cost_);
  last_factor_ = iterations_;
  return true;
}

SimplexResult BoundedSimplex::warm_start(const Deadline& deadline) {
  // Restore dual feasibility of nonbasic boxed columns by parking them on
  // the bound their reduced cost prefers.
  for (std::size_t j = 0; j < stride_; ++j) {
    if (row_of_[j] >= 0) continue;
    double target = x_[j];
    if (lo_[j] == hi_[j]) {
      target = lo_[j];
    } else if (d_[j] > tol_.optimality) {
      if (lo_[j] == -kInf) return solve(deadline);
      target = lo_[j];
    } else if (d_[j] < -tol_.optimality) {
      if (hi_[j] == kInf) return solve(deadline);
      target = hi_[j];
    } else if (!(x_[j] == lo_[j] || x_[j] == hi_[j])) {
      target = resting_value(lo_[j], hi_[j]);
    }
    if (target != x_[j]) shift_nonbasic(j, target);
  }

  auto r = dual_loop(deadline);
  if (r == SimplexResult::optimal) r = primal_loop(deadline);
  if (r == SimplexResult::time_limit) ready_ = false;
  return r;
}

SimplexResult BoundedSimplex::reoptimize(const Deadline& deadline) {
  if (!ready_) return solve(deadline);
  if (iterations_ - last_factor_ > kRefreshPivots + 4 * m_ && !refactor()) return solve(deadline);
  auto r = warm_start(deadline);
  if (r == SimplexResult::optimal && !accurate()) {
    if (!refactor()) return solve(deadline);
    r = warm_start(deadline);
    if (r == SimplexResult::optimal && !accurate()) return solve(deadline);
  }
  return r;
}

double BoundedSimplex::internal_objective() const {
  double total = 0.0;
  for (std::size_t j = 0; j < n_; ++j) total += cost_[j] * x_[j];
  return total;
}

double BoundedSimplex::objective() const { return sign_ * internal_objective() + constant_; }

std::vector<double> BoundedSimplex::primal() const {
  return std::vector<double>(x_.begin(), x_.begin() + static_cast<long>(n_));
}

std::vector<double> BoundedSimplex::duals() const {
  std::vector<double> y(m_);
  for (std::size_t i = 0; i < m_; ++i) y[i] = -sign_ * d_[n_ + i];
  return y;
}

std::vector<double> BoundedSimplex::reduced_costs() const {
  std::vector<double> d(n_);
  for (std::size_t j = 0; j < n_; ++j) d[j] = sign_ * d_[j];
  return d;
}

}  // namespace groupcf::detail
