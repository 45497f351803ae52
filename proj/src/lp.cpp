#include "wildfire/lp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wildfire {

int LinearProgram::add_variable(double lo, double hi, double c) {
  cost.push_back(c);
  lower.push_back(lo);
  upper.push_back(hi);
  return static_cast<int>(cost.size()) - 1;
}

void LinearProgram::add_row(std::vector<std::pair<int, double>> terms, Relation rel, double rhs) {
  rows.push_back({std::move(terms), rel, rhs});
}

void LinearProgram::add_dense_row(const std::vector<double>& coef, Relation rel, double rhs) {
  Row r;
  r.relation = rel;
  r.rhs = rhs;
  for (std::size_t k = 0; k < coef.size(); ++k)
    if (coef[k] != 0.0) r.terms.emplace_back(static_cast<int>(k), coef[k]);
  rows.push_back(std::move(r));
}

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration_limit";
  }
  return "?";
}

double max_violation(const LinearProgram& lp, const std::vector<double>& x) {
  double worst = 0.0;
  for (int k = 0; k < lp.variables(); ++k) {
    worst = std::max(worst, lp.lower[k] - x[k]);
    worst = std::max(worst, x[k] - lp.upper[k]);
  }
  for (const auto& r : lp.rows) {
    double s = 0.0;
    for (auto [k, a] : r.terms) s += a * x[k];
    switch (r.relation) {
      case Relation::LessEqual: worst = std::max(worst, s - r.rhs); break;
      case Relation::GreaterEqual: worst = std::max(worst, r.rhs - s); break;
      case Relation::Equal: worst = std::max(worst, std::abs(s - r.rhs)); break;
    }
  }
  return worst;
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr int kDegenerateRun = 50;

enum class VarKind { Fixed, Lower, Upper, Free };

struct VarMap {
  VarKind kind = VarKind::Lower;
  double offset = 0.0;
  int col = -1;
  int col2 = -1;  // negative part of a free variable
};

enum class ColState : std::uint8_t { Basic, AtLower, AtUpper };

class Simplex {
 public:
  Simplex(int m, int n) : m_(m), n_(n), t_(static_cast<std::size_t>(m) * n, 0.0), beta_(m, 0.0),
                          ub_(n, kInf), basis_(m, -1), state_(n, ColState::AtLower),
                          excluded_(n, 0), d_(n, 0.0) {}

  double& a(int i, int j) { return t_[static_cast<std::size_t>(i) * n_ + j]; }
  double a(int i, int j) const { return t_[static_cast<std::size_t>(i) * n_ + j]; }

  int m_, n_;
  std::vector<double> t_;      // B^-1 A
  std::vector<double> beta_;   // values of the basic columns
  std::vector<double> ub_;
  std::vector<int> basis_;
  std::vector<ColState> state_;
  std::vector<std::uint8_t> excluded_;
  std::vector<double> d_;      // reduced costs
  int iterations_ = 0;

  double value(int j) const { return state_[j] == ColState::AtUpper ? ub_[j] : 0.0; }

  void price(const std::vector<double>& c) {
    for (int j = 0; j < n_; ++j) d_[j] = c[j];
    for (int i = 0; i < m_; ++i) {
      const double cb = c[basis_[i]];
      if (cb == 0.0) continue;
      const double* row = &t_[static_cast<std::size_t>(i) * n_];
      for (int j = 0; j < n_; ++j) d_[j] -= cb * row[j];
    }
  }

  void pivot(int r, int q) {
    double* pr = &t_[static_cast<std::size_t>(r) * n_];
    const double inv = 1.0 / pr[q];
    for (int j = 0; j < n_; ++j) pr[j] *= inv;
    pr[q] = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* pi = &t_[static_cast<std::size_t>(i) * n_];
      const double f = pi[q];
      if (f == 0.0) continue;
      for (int j = 0; j < n_; ++j) pi[j] -= f * pr[j];
      pi[q] = 0.0;
    }
    const double f = d_[q];
    if (f != 0.0) {
      for (int j = 0; j < n_; ++j) d_[j] -= f * pr[j];
      d_[q] = 0.0;
    }
  }

  // Runs simplex iterations on the current reduced costs.
  LpStatus run(int max_iterations) {
    int degenerate = 0;
    while (true) {
      if (iterations_ >= max_iterations) return LpStatus::IterationLimit;
      const bool bland = degenerate >= kDegenerateRun;

      int q = -1;
      double best = 0.0;
      for (int j = 0; j < n_; ++j) {
        if (state_[j] == ColState::Basic || excluded_[j]) continue;
        double gain = 0.0;
        if (state_[j] == ColState::AtLower && d_[j] < -kCostTol) gain = -d_[j];
        else if (state_[j] == ColState::AtUpper && d_[j] > kCostTol) gain = d_[j];
        if (gain <= 0.0) continue;
        if (bland) {
          q = j;
          break;
        }
        if (gain > best) {
          best = gain;
          q = j;
        }
      }
      if (q < 0) return LpStatus::Optimal;
      ++iterations_;

      const double dir = state_[q] == ColState::AtLower ? 1.0 : -1.0;
      int r = -1;
      double limit = kInf;
      bool to_upper = false;
      for (int i = 0; i < m_; ++i) {
        const double aiq = dir * a(i, q);
        if (std::abs(aiq) <= kPivotTol) continue;
        double lim;
        bool up;
        if (aiq > 0.0) {
          lim = std::max(0.0, beta_[i]) / aiq;
          up = false;
        } else {
          const double u = ub_[basis_[i]];
          if (u == kInf) continue;
          lim = std::max(0.0, u - beta_[i]) / -aiq;
          up = true;
        }
        bool take = lim < limit - 1e-12;
        if (!take && r >= 0 && lim <= limit + 1e-12) {
          take = bland ? basis_[i] < basis_[r] : std::abs(a(i, q)) > std::abs(a(r, q));
        }
        if (take) {
          limit = std::min(limit, lim);
          r = i;
          to_upper = up;
        }
      }

      if (ub_[q] <= limit) {
        if (ub_[q] == kInf) return LpStatus::Unbounded;
        // bound flip
        const double t = ub_[q];
        for (int i = 0; i < m_; ++i) beta_[i] -= dir * t * a(i, q);
        state_[q] = state_[q] == ColState::AtLower ? ColState::AtUpper : ColState::AtLower;
        degenerate = t > 1e-12 ? 0 : degenerate + 1;
        continue;
      }

      const double t = limit;
      for (int i = 0; i < m_; ++i)
        if (i != r) beta_[i] -= dir * t * a(i, q);
      const double entering = state_[q] == ColState::AtLower ? t : ub_[q] - t;
      const int leaving = basis_[r];
      pivot(r, q);
      beta_[r] = entering;
      basis_[r] = q;
      state_[q] = ColState::Basic;
      state_[leaving] = to_upper ? ColState::AtUpper : ColState::AtLower;
      degenerate = t > 1e-12 ? 0 : degenerate + 1;
    }
  }
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp, int max_iterations) {
  const int nv = lp.variables();
  if (static_cast<int>(lp.lower.size()) != nv || static_cast<int>(lp.upper.size()) != nv)
    throw std::invalid_argument("LP bound vectors do not match the variable count");
  for (int k = 0; k < nv; ++k) {
    if (!std::isfinite(lp.cost[k])) throw std::invalid_argument("LP cost is not finite");
    if (std::isnan(lp.lower[k]) || std::isnan(lp.upper[k]) || lp.lower[k] > lp.upper[k])
      throw std::invalid_argument("LP variable has lower > upper");
    if (lp.lower[k] == kInf || lp.upper[k] == -kInf)
      throw std::invalid_argument("LP variable has an empty domain");
  }
  for (const auto& r : lp.rows) {
    if (!std::isfinite(r.rhs)) throw std::invalid_argument("LP right-hand side is not finite");
    for (auto [k, v] : r.terms) {
      if (k < 0 || k >= nv) throw std::invalid_argument("LP row references an unknown variable");
      if (!std::isfinite(v)) throw std::invalid_argument("LP coefficient is not finite");
    }
  }

  // Internal columns y >= 0 with optional upper bounds.
  std::vector<VarMap> vmap(nv);
  std::vector<double> ub;
  for (int k = 0; k < nv; ++k) {
    auto& v = vmap[k];
    const double lo = lp.lower[k], hi = lp.upper[k];
    if (lo == hi) {
      v.kind = VarKind::Fixed;
      v.offset = lo;
    } else if (lo > -kInf) {
      v.kind = VarKind::Lower;
      v.offset = lo;
      v.col = static_cast<int>(ub.size());
      ub.push_back(hi - lo);
    } else if (hi < kInf) {
      v.kind = VarKind::Upper;
      v.offset = hi;
      v.col = static_cast<int>(ub.size());
      ub.push_back(kInf);
    } else {
      v.kind = VarKind::Free;
      v.col = static_cast<int>(ub.size());
      v.col2 = v.col + 1;
      ub.push_back(kInf);
      ub.push_back(kInf);
    }
  }
  const int ny = static_cast<int>(ub.size());
  const int m = static_cast<int>(lp.rows.size());

  std::vector<double> rhs(m);
  std::vector<Relation> rel(m);
  std::vector<double> dense(static_cast<std::size_t>(m) * ny, 0.0);
  for (int i = 0; i < m; ++i) {
    const auto& row = lp.rows[i];
    double b = row.rhs;
    double* out = &dense[static_cast<std::size_t>(i) * ny];
    for (auto [k, coef] : row.terms) {
      const auto& v = vmap[k];
      b -= coef * v.offset;
      switch (v.kind) {
        case VarKind::Fixed: break;
        case VarKind::Lower: out[v.col] += coef; break;
        case VarKind::Upper: out[v.col] -= coef; break;
        case VarKind::Free:
          out[v.col] += coef;
          out[v.col2] -= coef;
          break;
      }
    }
    rel[i] = row.relation;
    if (b < 0.0) {
      b = -b;
      for (int j = 0; j < ny; ++j) out[j] = -out[j];
      if (rel[i] == Relation::LessEqual) rel[i] = Relation::GreaterEqual;
      else if (rel[i] == Relation::GreaterEqual) rel[i] = Relation::LessEqual;
    }
    rhs[i] = b;
  }

  int slacks = 0, artificials = 0;
  for (int i = 0; i < m; ++i) {
    if (rel[i] != Relation::Equal) ++slacks;
    if (rel[i] != Relation::LessEqual) ++artificials;
  }
  const int n = ny + slacks + artificials;
  Simplex s(m, n);
  std::vector<double> full(static_cast<std::size_t>(m) * n, 0.0);  // original [A | S | R]
  for (int j = 0; j < ny; ++j) s.ub_[j] = ub[j];
  int sc = ny, ac = ny + slacks;
  std::vector<std::uint8_t> artificial(n, 0);
  for (int i = 0; i < m; ++i) {
    double* f = &full[static_cast<std::size_t>(i) * n];
    std::copy_n(&dense[static_cast<std::size_t>(i) * ny], ny, f);
    if (rel[i] == Relation::LessEqual) {
      f[sc] = 1.0;
      s.basis_[i] = sc++;
    } else {
      if (rel[i] == Relation::GreaterEqual) f[sc++] = -1.0;
      f[ac] = 1.0;
      artificial[ac] = 1;
      s.basis_[i] = ac++;
    }
    s.beta_[i] = rhs[i];
  }
  s.t_ = full;
  for (int i = 0; i < m; ++i) s.state_[s.basis_[i]] = ColState::Basic;

  LpResult result;
  if (artificials > 0) {
    std::vector<double> c1(n, 0.0);
    for (int j = 0; j < n; ++j) c1[j] = artificial[j] ? 1.0 : 0.0;
    s.price(c1);
    const auto st = s.run(max_iterations);
    result.iterations = s.iterations_;
    if (st == LpStatus::IterationLimit) {
      result.status = st;
      return result;
    }
    double infeas = 0.0, scale = 1.0;
    for (int i = 0; i < m; ++i) {
      scale = std::max(scale, rhs[i]);
      if (artificial[s.basis_[i]]) infeas += std::max(0.0, s.beta_[i]);
    }
    if (infeas > 1e-8 * scale) {
      result.status = LpStatus::Infeasible;
      return result;
    }
    // Drive zero-valued artificials out of the basis where possible; the rest
    // sit on redundant rows and are pinned at zero.
    for (int i = 0; i < m; ++i) {
      if (!artificial[s.basis_[i]]) continue;
      int q = -1;
      double best = 1e-7;
      for (int j = 0; j < n; ++j)
        if (!artificial[j] && s.state_[j] != ColState::Basic && std::abs(s.a(i, j)) > best) {
          best = std::abs(s.a(i, j));
          q = j;
        }
      if (q < 0) continue;
      const double entering = s.value(q);
      const int leaving = s.basis_[i];
      const double shift = s.beta_[i];  // ~0
      for (int r = 0; r < m; ++r)
        if (r != i) s.beta_[r] -= shift * s.a(r, q) / s.a(i, q);
      s.pivot(i, q);
      s.beta_[i] = entering;
      s.basis_[i] = q;
      s.state_[q] = ColState::Basic;
      s.state_[leaving] = ColState::AtLower;
    }
    for (int j = 0; j < n; ++j)
      if (artificial[j]) {
        s.excluded_[j] = 1;
        s.ub_[j] = 0.0;
      }
  }

  const double sense = lp.maximize ? -1.0 : 1.0;
  std::vector<double> c2(n, 0.0);
  for (int k = 0; k < nv; ++k) {
    const auto& v = vmap[k];
    const double ck = sense * lp.cost[k];
    switch (v.kind) {
      case VarKind::Fixed: break;
      case VarKind::Lower: c2[v.col] += ck; break;
      case VarKind::Upper: c2[v.col] -= ck; break;
      case VarKind::Free:
        c2[v.col] += ck;
        c2[v.col2] -= ck;
        break;
    }
  }
  s.price(c2);
  const auto st = s.run(max_iterations);
  result.iterations = s.iterations_;
  if (st != LpStatus::Optimal) {
    result.status = st;
    return result;
  }

  // Recompute the basic values from the original columns to shed the
  // round-off accumulated in the tableau.
  std::vector<double> y(n, 0.0);
  for (int j = 0; j < n; ++j)
    if (s.state_[j] != ColState::Basic) y[j] = s.value(j);
  if (m > 0) {
    Eigen::MatrixXd B(m, m);
    Eigen::VectorXd b(m);
    for (int i = 0; i < m; ++i) {
      const double* f = &full[static_cast<std::size_t>(i) * n];
      double r = rhs[i];
      for (int j = 0; j < n; ++j)
        if (s.state_[j] != ColState::Basic && y[j] != 0.0) r -= f[j] * y[j];
      b(i) = r;
      for (int k = 0; k < m; ++k) B(i, k) = f[s.basis_[k]];
    }
    const Eigen::VectorXd xb = B.partialPivLu().solve(b);
    bool sane = true;
    for (int k = 0; k < m; ++k) sane = sane && std::isfinite(xb(k));
    for (int k = 0; k < m; ++k) y[s.basis_[k]] = sane ? xb(k) : s.beta_[k];
  }
  for (int j = 0; j < n; ++j) {
    y[j] = std::max(0.0, y[j]);
    if (s.ub_[j] < kInf) y[j] = std::min(y[j], s.ub_[j]);
  }

  result.values.resize(nv);
  for (int k = 0; k < nv; ++k) {
    const auto& v = vmap[k];
    switch (v.kind) {
      case VarKind::Fixed: result.values[k] = v.offset; break;
      case VarKind::Lower: result.values[k] = v.offset + y[v.col]; break;
      case VarKind::Upper: result.values[k] = v.offset - y[v.col]; break;
      case VarKind::Free: result.values[k] = y[v.col] - y[v.col2]; break;
    }
  }
  result.objective = 0.0;
  for (int k = 0; k < nv; ++k) result.objective += lp.cost[k] * result.values[k];
  result.status = LpStatus::Optimal;
  return result;
}

}  // namespace wildfire
