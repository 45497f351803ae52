#include "wildfire/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "wildfire/lp.hpp"

namespace wildfire {

PlanMode parse_plan_mode(const std::string& s) {
  if (s == "ccro") return PlanMode::Ccro;
  if (s == "plain") return PlanMode::Plain;
  throw std::invalid_argument("unknown plan mode '" + s + "' (expected ccro or plain)");
}

const char* to_string(PlanMode m) { return m == PlanMode::Ccro ? "ccro" : "plain"; }

// --- cost oracle -------------------------------------------------------------

CostOracle::CostOracle(const Instance& inst, const IcnnModel& sq)
    : inst_(inst), sq_(sq), state_(inst.state()) {
  if (!sq.has_decision) throw std::invalid_argument("planner needs a model with a quench input");
  if (sq.width != inst.map.width || sq.height != inst.map.height)
    throw std::invalid_argument("SQ model size does not match the map");
}

double CostOracle::value(std::span<const double> fire_load) const {
  std::vector<double> q(state_.size(), 0.0);
  for (int i = 0; i < inst_.fire_count(); ++i) {
    const auto& f = inst_.fires[i];
    q[inst_.map.index(f.x, f.y)] = fire_load[i] / std::max(1, f.cap);
  }
  return predict_cost(sq_, state_, q);
}

double CostOracle::value_gradient(std::span<const double> fire_load,
                                  std::vector<double>& grad) const {
  std::vector<double> q(state_.size(), 0.0);
  for (int i = 0; i < inst_.fire_count(); ++i) {
    const auto& f = inst_.fires[i];
    q[inst_.map.index(f.x, f.y)] = fire_load[i] / std::max(1, f.cap);
  }
  const auto cut = cost_subgradient(sq_, state_, q);
  grad.resize(inst_.fire_count());
  for (int i = 0; i < inst_.fire_count(); ++i) {
    const auto& f = inst_.fires[i];
    grad[i] = cut.gradient[inst_.map.index(f.x, f.y)] / std::max(1, f.cap);
  }
  return cut.value;
}

double CostOracle::value(const Decision& d) const {
  std::vector<double> load(inst_.fire_count());
  for (int i = 0; i < inst_.fire_count(); ++i) load[i] = d.fire_load(i);
  return value(load);
}

// --- time predicate ----------------------------------------------------------

namespace {

// Operating-time constraints per home base (drones sharing a base share the
// same columns, so one constraint serves all of them).
class TimeChecker {
 public:
  TimeChecker(const Instance& inst, const Scenario& sc, const SolverOptions& opt)
      : inst_(inst), sc_(sc), opt_(opt), con_(inst.bases), built_(inst.bases, 0) {
    tau_max_ = opt.tau_max > 0.0 ? opt.tau_max : default_tau_max(inst, sc);
  }

  const CcroConstraint& con(int base) {
    if (!built_[base]) {
      // build_ccro only depends on the drone's home base
      for (int l = 0; l < inst_.drones; ++l)
        if (inst_.home[l] == base) {
          con_[base] = build_ccro(inst_, sc_, l);
          break;
        }
      built_[base] = 1;
    }
    return con_[base];
  }

  // x over fires for one drone.
  bool feasible(int drone, std::span<const double> x) {
    if (std::none_of(x.begin(), x.end(), [](double v) { return v > 0.5; })) return true;
    const auto& c = con(inst_.home[drone]);
    return opt_.mode == PlanMode::Ccro ? cantelli_feasible(c, x)
                                       : plain_time_feasible(c, x, sc_.speed, tau_max_);
  }

  double tau_max() const { return tau_max_; }

  // Smallest eigenvalue of A^T Sigma A at a base; bounds the variance of any
  // sub-selection from below.
  double variance_floor(int base) {
    if (floor_.empty()) floor_.assign(inst_.bases, -1.0);
    if (floor_[base] < 0.0) {
      const auto& c = con(base);
      const int n = c.size();
      Eigen::MatrixXd S(n, n);
      for (int r = 0; r < n; ++r)
        for (int q = 0; q < n; ++q) S(r, q) = c.S[static_cast<std::size_t>(r) * n + q];
      floor_[base] = n > 0 ? std::max(0.0, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                                              S, Eigen::EigenvaluesOnly).eigenvalues()[0])
                           : 0.0;
    }
    return floor_[base];
  }

  // Upper bound on the number of sorties drone l can fly among `fires`.
  int max_sorties(int drone, const std::vector<int>& fires) {
    const int base = inst_.home[drone];
    std::vector<double> time, battery;
    for (int i : fires) {
      const double d = inst_.d(i, base);
      const double tau = opt_.mode == PlanMode::Ccro ? inst_.mu[i] : tau_max_;
      time.push_back(d / sc_.speed + tau);
      battery.push_back(2.0 * d);
    }
    std::sort(time.begin(), time.end());
    std::sort(battery.begin(), battery.end());
    const double floor = opt_.mode == PlanMode::Ccro ? variance_floor(base) : 0.0;
    const double k = (1.0 - sc_.risk) / sc_.risk;
    const double budget = inst_.range[drone] * inst_.battery[drone];
    double tsum = 0.0, bsum = 0.0;
    int n = 0;
    for (std::size_t r = 0; r < time.size(); ++r) {
      tsum += time[r];
      bsum += battery[r];
      // cheapest n sorties with the dearest of them flown one way
      double lower = 2.0 * tsum - time[r];
      if (opt_.mode == PlanMode::Ccro) lower += std::sqrt(k * floor * (4.0 * (r + 1) - 3.0));
      if (lower > sc_.period + 1e-9 || bsum > budget + 1e-9) break;
      n = static_cast<int>(r + 1);
    }
    return n;
  }

 private:
  const Instance& inst_;
  const Scenario& sc_;
  const SolverOptions& opt_;
  std::vector<CcroConstraint> con_;
  std::vector<std::uint8_t> built_;
  std::vector<double> floor_;
  double tau_max_ = 0.0;
};

}  // namespace

bool time_feasible(const Instance& inst, const Decision& d, const Scenario& scenario,
                   const SolverOptions& opt) {
  TimeChecker tc(inst, scenario, opt);
  for (int l = 0; l < inst.drones; ++l)
    if (!tc.feasible(l, drone_columns(inst, d, l))) return false;
  return true;
}

// --- branch and cut ----------------------------------------------------------

namespace {

struct Entry {
  int i = 0;
  int j = 0;
  int l = 0;
  double dist = 0.0;
};

struct Node {
  std::vector<std::pair<int, std::uint8_t>> fixed;
  std::vector<int> cuts;  // pool rows binding at the parent
  double bound = -kInf;
};

class BranchAndCut {
 public:
  BranchAndCut(const Instance& inst, const std::vector<std::uint8_t>& bases, const IcnnModel& sq,
               const Scenario& sc, const SolverOptions& opt, double cutoff)
      : inst_(inst), sc_(sc), opt_(opt), oracle_(inst, sq), time_(inst, sc, opt), cutoff_(cutoff) {
    const int I = inst.fire_count();
    for (int i = 0; i < I; ++i)
      for (int l = 0; l < inst.drones; ++l) {
        const int j = inst.home[l];
        if (!bases[j] || !inst.pi(i, j) || !inst.available[l]) continue;
        // a single sortie already beyond the battery can never be used
        if (2.0 * inst.d(i, j) > inst.range[l] * inst.battery[l] + 1e-9) continue;
        entries_.push_back({i, j, l, inst.d(i, j)});
      }
    n_ = static_cast<int>(entries_.size());
    by_drone_.resize(inst.drones);
    by_fire_.resize(I);
    for (int e = 0; e < n_; ++e) {
      by_drone_[entries_[e].l].push_back(e);
      by_fire_[entries_[e].i].push_back(e);
    }
    build_base();
  }

  SubproblemResult run() {
    SubproblemResult out;
    const int I = inst_.fire_count();

    if (!opt_.require_coverage) {
      std::vector<double> zero(I, 0.0);
      best_value_ = sc_.w1 * oracle_.value(zero);
      best_x_.assign(n_, 0);
      has_best_ = true;
    }
    if (cutoff_ < kInf && (!has_best_ || cutoff_ <= best_value_)) {
      // only a solution strictly below the cutoff is of interest
      best_value_ = cutoff_;
      best_x_.clear();
      has_best_ = true;
      best_is_cutoff_ = true;
    }

    std::vector<Node> open(1);
    int processed = 0;
    while (!open.empty()) {
      if (nodes_ >= opt_.node_limit) {
        out.node_limit_hit = true;
        break;
      }
      if (opt_.restart_every > 0 && processed > 0 && processed % opt_.restart_every == 0) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < open.size(); ++k)
          if (open[k].bound < open[best].bound) best = k;
        std::rotate(open.begin() + best, open.begin() + best + 1, open.end());
      }
      Node node = std::move(open.back());
      open.pop_back();
      if (pruned(node.bound)) continue;
      ++nodes_;
      ++processed;
      process(node, open);
    }

    out.nodes = nodes_;
    out.cuts = static_cast<int>(pool_.size());
    out.bound = kInf;
    if (!has_best_) return out;
    if (best_is_cutoff_) {
      out.cut_off = true;
      out.bound = best_value_;
      return out;
    }
    out.feasible = true;
    out.value = best_value_;
    out.bound = best_value_;
    out.decision = Decision::zeros(inst_);
    for (int e = 0; e < n_; ++e)
      if (best_x_[e]) out.decision.at(entries_[e].i, entries_[e].j, entries_[e].l) = 1;
    out.decision.derive_bases();
    return out;
  }

 private:
  int xv(int e) const { return e; }
  int mv(int e) const { return n_ + e; }
  int eta() const { return 2 * n_; }

  bool pruned(double bound) const {
    return has_best_ && bound >= best_value_ - 0.1 * opt_.gap_tol;
  }

  void build_base() {
    auto& lp = base_;
    for (int e = 0; e < n_; ++e) lp.add_variable(0.0, 1.0, sc_.w3 * 2.0 * entries_[e].dist);
    for (int e = 0; e < n_; ++e) lp.add_variable(0.0, 1.0, 0.0);
    lp.add_variable(0.0, kInf, sc_.w1);

    for (int l = 0; l < inst_.drones; ++l) {
      const auto& es = by_drone_[l];
      if (es.empty()) continue;
      std::vector<std::pair<int, double>> battery, msum;
      for (int e : es) {
        battery.emplace_back(xv(e), 2.0 * entries_[e].dist);
        msum.emplace_back(mv(e), 1.0);
        lp.add_row({{mv(e), 1.0}, {xv(e), -1.0}}, Relation::LessEqual, 0.0);
      }
      lp.add_row(battery, Relation::LessEqual, inst_.range[l] * inst_.battery[l]);
      lp.add_row(msum, Relation::LessEqual, 1.0);

      std::vector<int> fires;
      for (int e : es) fires.push_back(entries_[e].i);
      const int most = time_.max_sorties(l, fires);

      // linear time row: (2x - m)^T c <= Delta; with the deterministic bound
      // the row is exact in plain mode. Under CCRO with S >= 0 entrywise,
      // w^T S w >= sum S_ii w_i^2 and at most `most` entries of w are
      // nonzero, so sqrt(k w^T S w) >= sum sqrt(k S_ii / most) w_i.
      const double tau = time_.tau_max();
      const auto& con = time_.con(inst_.home[l]);
      const bool spread = opt_.mode == PlanMode::Ccro && most > 0 && con.nonnegative();
      const int I = inst_.fire_count();
      std::vector<std::pair<int, double>> time;
      for (int e : es) {
        const int i = entries_[e].i;
        double c = opt_.mode == PlanMode::Ccro ? entries_[e].dist / sc_.speed + inst_.mu[i]
                                               : entries_[e].dist / sc_.speed + tau;
        if (spread)
          c += std::sqrt(con.k * std::max(0.0, con.S[static_cast<std::size_t>(i) * I + i]) / most);
        time.emplace_back(xv(e), 2.0 * c);
        time.emplace_back(mv(e), -c);
      }
      lp.add_row(time, Relation::LessEqual, sc_.period);

      if (most < static_cast<int>(es.size())) {
        std::vector<std::pair<int, double>> count;
        for (int e : es) count.emplace_back(xv(e), 1.0);
        lp.add_row(count, Relation::LessEqual, most);
      }
    }

    for (int i = 0; i < inst_.fire_count(); ++i) {
      std::vector<std::pair<int, double>> load;
      for (int e : by_fire_[i]) load.emplace_back(xv(e), 1.0);
      const double cap = inst_.fires[i].cap;
      if (opt_.require_coverage) {
        if (static_cast<double>(load.size()) < cap) infeasible_ = true;
        lp.add_row(load, Relation::Equal, cap);
      } else if (!load.empty() && static_cast<double>(load.size()) > cap) {
        lp.add_row(load, Relation::LessEqual, cap);
      }
    }

    // Interchangeable drones are ordered by the lowest fire they serve: drone
    // k may take fire i only if its predecessor l takes some fire i' <= i.
    // Unused drones therefore come last.
    for (int l = 0; l < inst_.drones; ++l)
      for (int k = l + 1; k < inst_.drones; ++k) {
        if (!interchangeable(l, k)) continue;
        const auto& prev = by_drone_[l];
        const auto& next = by_drone_[k];
        for (std::size_t r = 0; r < next.size(); ++r) {
          std::vector<std::pair<int, double>> row{{xv(next[r]), 1.0}};
          for (int e : prev)
            if (entries_[e].i <= entries_[next[r]].i) row.emplace_back(xv(e), -1.0);
          lp.add_row(row, Relation::LessEqual, 0.0);
        }
        break;  // chain to the next interchangeable drone only
      }
  }

  bool interchangeable(int a, int b) const {
    if (inst_.home[a] != inst_.home[b] || inst_.range[a] != inst_.range[b] ||
        inst_.battery[a] != inst_.battery[b] || inst_.available[a] != inst_.available[b])
      return false;
    const auto& ea = by_drone_[a];
    const auto& eb = by_drone_[b];
    if (ea.size() != eb.size()) return false;
    for (std::size_t r = 0; r < ea.size(); ++r)
      if (entries_[ea[r]].i != entries_[eb[r]].i) return false;
    return true;
  }

  void add_cut(std::vector<std::pair<int, double>> terms, Relation rel, double rhs) {
    active_.push_back(static_cast<int>(pool_.size()));
    pool_.push_back({std::move(terms), rel, rhs});
    in_active_.push_back(1);
  }

  // Signed violation of a pool row at v (positive when violated).
  double row_violation(const LinearProgram::Row& row, const std::vector<double>& v) const {
    double lhs = 0.0;
    for (auto [var, a] : row.terms) lhs += a * v[var];
    switch (row.relation) {
      case Relation::LessEqual: return lhs - row.rhs;
      case Relation::GreaterEqual: return row.rhs - lhs;
      case Relation::Equal: return std::abs(lhs - row.rhs);
    }
    return 0.0;
  }

  // Moves pool rows violated at v into the active set.
  bool separate_pool(const std::vector<double>& v) {
    bool added = false;
    for (std::size_t k = 0; k < pool_.size(); ++k) {
      if (in_active_[k]) continue;
      const auto& row = pool_[k];
      if (row_violation(row, v) > opt_.feasibility_tol * std::max(1.0, std::abs(row.rhs))) {
        active_.push_back(static_cast<int>(k));
        in_active_[k] = 1;
        added = true;
      }
    }
    return added;
  }

  std::vector<int> binding_cuts(const std::vector<double>& v) const {
    std::vector<int> out;
    for (int k : active_)
      if (row_violation(pool_[k], v) > -1e-6 * std::max(1.0, std::abs(pool_[k].rhs))) out.push_back(k);
    return out;
  }

  std::vector<double> fire_load(const std::vector<double>& v) const {
    std::vector<double> load(inst_.fire_count(), 0.0);
    for (int e = 0; e < n_; ++e) load[entries_[e].i] += v[xv(e)];
    return load;
  }

  // Epigraph cut eta >= f(x^) + g^T (x - x^); returns true if violated.
  bool epigraph_cut(const std::vector<double>& v) {
    if (sc_.w1 <= 0.0) return false;
    const auto load = fire_load(v);
    std::vector<double> g;
    const double f = oracle_.value_gradient(load, g);
    if (v[eta()] >= f - 1e-9 * std::max(1.0, std::abs(f))) return false;
    std::vector<std::pair<int, double>> row{{eta(), 1.0}};
    double rhs = f;
    for (int e = 0; e < n_; ++e) {
      const double ge = g[entries_[e].i];
      if (ge == 0.0) continue;
      row.emplace_back(xv(e), -ge);
      rhs -= ge * v[xv(e)];
    }
    add_cut(std::move(row), Relation::GreaterEqual, rhs);
    return true;
  }

  // Outer approximation of the robust time constraint at the LP point.
  bool time_cuts(const std::vector<double>& v) {
    if (opt_.mode != PlanMode::Ccro) return false;
    bool added = false;
    const int I = inst_.fire_count();
    for (int l = 0; l < inst_.drones; ++l) {
      const auto& es = by_drone_[l];
      if (es.empty()) continue;
      const auto& con = time_.con(inst_.home[l]);
      std::vector<double> w(I, 0.0);
      bool any = false;
      for (int e : es) {
        w[entries_[e].i] = 2.0 * v[xv(e)] - v[mv(e)];
        any = any || std::abs(w[entries_[e].i]) > 1e-12;
      }
      if (!any) continue;

      // c^T w + sqrt(k w^T S w) <= Delta is convex in w for every delta.
      const double tbar = con.mean_time(w);
      const double var = std::max(0.0, con.variance(w));
      if (var > 1e-14 && tbar + std::sqrt(con.k * var) > sc_.period + opt_.feasibility_tol) {
        const double scale = std::sqrt(con.k / var);
        std::vector<std::pair<int, double>> row;
        for (int e : es) {
          const int i = entries_[e].i;
          double sw = 0.0;
          for (int r = 0; r < I; ++r) sw += con.S[static_cast<std::size_t>(i) * I + r] * w[r];
          const double a = con.c[i] + scale * sw;
          row.emplace_back(xv(e), 2.0 * a);
          row.emplace_back(mv(e), -a);
        }
        add_cut(std::move(row), Relation::LessEqual, sc_.period);
        added = true;
      }

      // Gradient cut on the quadratic row when it is convex.
      if (con.q_psd) {
        const double q = con.quadratic(w);
        if (q > opt_.feasibility_tol * std::max(1.0, sc_.period * sc_.period)) {
          std::vector<double> grad(I);
          for (int i = 0; i < I; ++i) {
            double qw = 0.0;
            for (int r = 0; r < I; ++r) qw += con.Q[static_cast<std::size_t>(i) * I + r] * w[r];
            grad[i] = 2.0 * qw + 2.0 * sc_.period * con.c[i];
          }
          double rhs = -q;
          for (int i = 0; i < I; ++i) rhs += grad[i] * w[i];
          std::vector<std::pair<int, double>> row;
          for (int e : es) {
            const int i = entries_[e].i;
            row.emplace_back(xv(e), 2.0 * grad[i]);
            row.emplace_back(mv(e), -grad[i]);
          }
          add_cut(std::move(row), Relation::LessEqual, rhs);
          added = true;
        }
      }
    }
    return added;
  }

  // Battery and time feasibility of one drone flying every fire in `set`.
  // Both are monotone: a superset of an infeasible set is infeasible.
  bool set_feasible(int l, const std::vector<int>& set) {
    double battery = 0.0;
    std::vector<double> col(inst_.fire_count(), 0.0);
    for (int e : set) {
      battery += 2.0 * entries_[e].dist;
      col[entries_[e].i] = 1.0;
    }
    if (battery > inst_.range[l] * inst_.battery[l] + 1e-9) return false;
    return time_.feasible(l, col);
  }

  // Cover inequalities sum_F x <= |F| - 1 for infeasible sets F, grown
  // greedily from the LP point and shrunk to a minimal cover.
  bool cover_cuts(const std::vector<double>& v) {
    bool added = false;
    for (int l = 0; l < inst_.drones; ++l) {
      auto es = by_drone_[l];
      if (es.size() < 2) continue;
      double total = 0.0;
      for (int e : es) total += v[xv(e)];
      if (total <= 1.0 + opt_.feasibility_tol) continue;
      std::stable_sort(es.begin(), es.end(), [&](int a, int b) { return v[xv(a)] > v[xv(b)]; });
      std::vector<int> set;
      bool cover = false;
      for (int e : es) {
        if (v[xv(e)] <= opt_.integrality_tol) break;
        set.push_back(e);
        if (!set_feasible(l, set)) {
          cover = true;
          break;
        }
      }
      if (!cover) continue;
      // drop members, smallest LP value first, while the set stays infeasible
      for (int r = static_cast<int>(set.size()) - 1; r >= 0 && set.size() > 2; --r) {
        auto trial = set;
        trial.erase(trial.begin() + r);
        if (!set_feasible(l, trial)) set = std::move(trial);
      }
      double lhs = 0.0;
      for (int e : set) lhs += v[xv(e)];
      if (lhs <= set.size() - 1.0 + 1e-6) continue;
      // the same fires form a cover for every interchangeable drone
      for (int k = 0; k < inst_.drones; ++k) {
        if (k != l && !interchangeable(l, k)) continue;
        std::vector<std::pair<int, double>> row;
        for (int e : set) {
          const int pos = static_cast<int>(std::find(by_drone_[l].begin(), by_drone_[l].end(), e) -
                                           by_drone_[l].begin());
          row.emplace_back(xv(by_drone_[k][pos]), 1.0);
        }
        add_cut(std::move(row), Relation::LessEqual, set.size() - 1.0);
      }
      added = true;
    }
    return added;
  }

  // Exact per-drone check at an integer point; no-good cut per failing drone.
  bool integer_time_check(const std::vector<std::uint8_t>& x) {
    bool added = false;
    for (int l = 0; l < inst_.drones; ++l) {
      const auto& es = by_drone_[l];
      if (es.empty()) continue;
      std::vector<double> col(inst_.fire_count(), 0.0);
      for (int e : es) col[entries_[e].i] = x[e];
      if (time_.feasible(l, col)) continue;
      std::vector<std::pair<int, double>> row;
      double ones = 0.0;
      for (int e : es) {
        row.emplace_back(xv(e), x[e] ? 1.0 : -1.0);
        ones += x[e];
      }
      add_cut(std::move(row), Relation::LessEqual, ones - 1.0);
      added = true;
    }
    return added;
  }

  void process(const Node& node, std::vector<Node>& open) {
    if (infeasible_) return;
    int rounds = 0;
    int integer_rounds = 0;
    std::vector<double> bound_history;
    active_ = node.cuts;
    std::fill(in_active_.begin(), in_active_.end(), 0);
    for (int k : active_) in_active_[k] = 1;
    while (true) {
      LinearProgram lp = base_;
      for (int k : active_) lp.rows.push_back(pool_[k]);
      for (auto [var, val] : node.fixed) lp.lower[var] = lp.upper[var] = val;
      const auto res = solve_lp(lp);
      if (res.status == LpStatus::Infeasible) return;
      if (res.status != LpStatus::Optimal)
        throw std::runtime_error(std::string("node LP ended with status ") + to_string(res.status));
      if (pruned(res.objective)) return;
      const auto& v = res.values;
      if (separate_pool(v)) continue;

      bool integral = true;
      for (int e = 0; e < n_ && integral; ++e)
        integral = std::min(v[e], 1.0 - v[e]) <= opt_.integrality_tol;

      if (integral) {
        std::vector<std::uint8_t> x(n_);
        for (int e = 0; e < n_; ++e) x[e] = v[e] > 0.5;
        std::vector<double> xr(v);
        for (int e = 0; e < n_; ++e) xr[e] = x[e];
        if (integer_time_check(x)) continue;
        const auto load = fire_load(xr);
        double value = sc_.w1 * oracle_.value(load);
        for (int e = 0; e < n_; ++e)
          if (x[e]) value += sc_.w3 * 2.0 * entries_[e].dist;
        if (!has_best_ || value < best_value_ - 1e-12) {
          best_value_ = value;
          best_is_cutoff_ = false;
          best_x_ = x;
          has_best_ = true;
        }
        // the point is recorded at its true value; an underestimated eta
        // means a better point may still exist in this node
        if (++integer_rounds < 100 && epigraph_cut(xr)) continue;
        return;
      }

      // stop cutting once three rounds move the bound by less than 1e-4
      if (rounds >= 3 && res.objective - bound_history[rounds - 3] <=
                             1e-4 * std::max(1.0, std::abs(res.objective)))
        rounds = opt_.cut_rounds;
      if (rounds < opt_.cut_rounds) {
        bound_history.push_back(res.objective);
        bool added = epigraph_cut(v);
        added = cover_cuts(v) || added;
        added = time_cuts(v) || added;
        if (added) {
          ++rounds;
          continue;
        }
      }

      int branch = -1;
      double frac = -1.0;
      for (int e = 0; e < n_; ++e) {
        const double f = std::min(v[e], 1.0 - v[e]);
        if (f > opt_.integrality_tol && f > frac + 1e-12) {
          frac = f;
          branch = e;
        }
      }
      const auto keep = binding_cuts(v);
      Node zero{node.fixed, keep, res.objective};
      zero.fixed.emplace_back(branch, 0);
      Node one{node.fixed, keep, res.objective};
      one.fixed.emplace_back(branch, 1);
      open.push_back(std::move(zero));
      open.push_back(std::move(one));
      return;
    }
  }

  const Instance& inst_;
  const Scenario& sc_;
  const SolverOptions& opt_;
  CostOracle oracle_;
  TimeChecker time_;
  double cutoff_ = kInf;
  std::vector<Entry> entries_;
  std::vector<std::vector<int>> by_drone_, by_fire_;
  int n_ = 0;
  LinearProgram base_;
  std::vector<LinearProgram::Row> pool_;
  std::vector<int> active_;
  std::vector<std::uint8_t> in_active_;
  bool infeasible_ = false;
  int nodes_ = 0;

  bool has_best_ = false;
  double best_value_ = 0.0;
  std::vector<std::uint8_t> best_x_;
  bool best_is_cutoff_ = false;
};

int popcount(const std::vector<std::uint8_t>& b) {
  int s = 0;
  for (auto v : b) s += v;
  return s;
}

}  // namespace

SubproblemResult solve_subproblem(const Instance& inst, const std::vector<std::uint8_t>& bases,
                                  const IcnnModel& sq, const Scenario& scenario,
                                  const SolverOptions& opt, double cutoff) {
  if (static_cast<int>(bases.size()) != inst.bases)
    throw std::invalid_argument("base pattern size does not match the instance");
  BranchAndCut bc(inst, bases, sq, scenario, opt, cutoff);
  auto res = bc.run();
  if (res.feasible) res.decision.b = bases;
  return res;
}

// --- Benders master ----------------------------------------------------------

double master_value(const std::vector<std::uint8_t>& pattern, const BendersState& state,
                    const Scenario& scenario) {
  double x = std::max(0.0, state.floor);
  for (const auto& cut : state.cuts) {
    int hamming = 0;
    for (std::size_t j = 0; j < pattern.size(); ++j) hamming += pattern[j] != cut.pattern[j];
    if (cut.feasibility) {
      if (hamming == 0) return kInf;
      continue;
    }
    x = std::max(x, cut.value * (1.0 - hamming));
  }
  return scenario.w2 * popcount(pattern) + x;
}

MasterResult solve_master(const Instance& inst, const BendersState& state,
                          const Scenario& scenario) {
  const int J = inst.bases;
  if (J > 12) throw std::invalid_argument("master enumeration supports at most 12 bases");
  MasterResult best;
  best.bound = kInf;
  std::vector<std::uint8_t> pattern(J);
  for (std::uint32_t mask = 0; mask < (1u << J); ++mask) {
    for (int j = 0; j < J; ++j) pattern[j] = (mask >> j) & 1u;
    // safe-distance row; always met when eligibility follows the distance rule
    bool ok = true;
    for (int i = 0; i < inst.fire_count() && ok; ++i)
      for (int j = 0; j < J && ok; ++j)
        ok = !(inst.pi(i, j) && pattern[j] && scenario.safe_distance > inst.d(i, j) + 1e-12);
    if (!ok) continue;
    const double v = master_value(pattern, state, scenario);
    if (v < best.bound) {
      best.bound = v;
      best.pattern = pattern;
      best.feasible = true;
    }
  }
  return best;
}

PlanResult plan_instance(const Instance& inst, const IcnnModel& sq, const Scenario& scenario,
                         const SolverOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const int J = inst.bases;
  if (J > 12) throw std::invalid_argument("master enumeration supports at most 12 bases");
  PlanResult out;
  BendersState state;

  if (inst.fire_count() == 0) {
    CostOracle oracle(inst, sq);
    out.decision = Decision::zeros(inst);
    out.stats.predicted_cost = oracle.value(out.decision);
    out.value = objective(inst, out.decision, out.stats.predicted_cost, scenario);
    out.stats.iterations = 1;
  } else {
    const int cap = 1 << J;
    {
      // all bases open first: its optimum is a floor for every pattern and,
      // restricted to the bases it uses, the first incumbent
      const std::vector<std::uint8_t> all(J, 1);
      ++state.iterations;
      const auto sub = solve_subproblem(inst, all, sq, scenario, opt);
      out.stats.nodes += sub.nodes;
      out.stats.cuts += sub.cuts;
      out.stats.node_limit_hit = sub.node_limit_hit;
      if (!sub.feasible) {
        if (!sub.node_limit_hit) state.floor = kInf;
        state.cuts.push_back({all, 0.0, true});
      } else {
        if (!sub.node_limit_hit) state.floor = sub.value;
        state.cuts.push_back({all, sub.value, false});
        ++out.stats.cuts;
        Decision d = sub.decision;
        d.derive_bases();
        state.has_incumbent = true;
        state.incumbent = d;
        state.incumbent_pattern = d.b;
        state.incumbent_value = scenario.w2 * popcount(d.b) + sub.value;
      }
    }
    while (state.iterations < cap && state.floor < kInf) {
      const auto master = solve_master(inst, state, scenario);
      if (!master.feasible) break;
      state.bound = master.bound;
      state.bound_history.push_back(master.bound);
      if (state.has_incumbent && state.gap() <= opt.gap_tol) break;
      ++state.iterations;
      const double base_cost = scenario.w2 * popcount(master.pattern);
      const double cutoff = state.has_incumbent ? state.incumbent_value - base_cost : kInf;
      const auto sub = solve_subproblem(inst, master.pattern, sq, scenario, opt, cutoff);
      out.stats.nodes += sub.nodes;
      out.stats.cuts += sub.cuts;
      out.stats.node_limit_hit = out.stats.node_limit_hit || sub.node_limit_hit;
      if (sub.cut_off) {
        // the pattern cannot beat the incumbent; its value is at least the cutoff
        state.cuts.push_back({master.pattern, sub.bound, false});
        ++out.stats.cuts;
        continue;
      }
      if (!sub.feasible) {
        state.cuts.push_back({master.pattern, 0.0, true});
        continue;
      }
      state.cuts.push_back({master.pattern, sub.value, false});
      ++out.stats.cuts;
      const double total = scenario.w2 * popcount(master.pattern) + sub.value;
      if (!state.has_incumbent || total < state.incumbent_value - 1e-12) {
        state.has_incumbent = true;
        state.incumbent = sub.decision;
        state.incumbent_pattern = master.pattern;
        state.incumbent_value = total;
      }
    }
    const auto last = solve_master(inst, state, scenario);
    state.bound = last.feasible ? std::max(state.bound, last.bound) : state.incumbent_value;
    if (!state.has_incumbent) {
      out.decision = Decision::zeros(inst);
      out.stats.infeasible = true;
    } else {
      out.decision = state.incumbent;
      // only used bases stay active; with w2 >= 0 this never raises the value
      out.decision.derive_bases();
    }
    out.stats.iterations = state.iterations;
    CostOracle oracle(inst, sq);
    out.stats.predicted_cost = oracle.value(out.decision);
    out.value = objective(inst, out.decision, out.stats.predicted_cost, scenario);
    out.stats.gap = state.has_incumbent ? std::max(0.0, state.incumbent_value - state.bound) : 0.0;
  }
  out.stats.value = out.value;
  out.stats.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

PlanResult plan_period(const FireMap& map, const Scenario& scenario, const FleetState& fleet,
                       const IcnnModel& sq, const SolverOptions& opt) {
  return plan_instance(extract_instance(map, scenario, fleet), sq, scenario, opt);
}

// --- exhaustive oracle -------------------------------------------------------

ExactResult enumerate_exact(const Instance& inst, const IcnnModel& sq, const Scenario& scenario,
                            const SolverOptions& opt) {
  const int I = inst.fire_count();
  if (static_cast<long>(I) * inst.bases * inst.drones > 16)
    throw std::invalid_argument("enumerate_exact needs I * J * L <= 16");
  CostOracle oracle(inst, sq);
  TimeChecker time(inst, scenario, opt);

  std::vector<Entry> entries;
  for (int i = 0; i < I; ++i)
    for (int l = 0; l < inst.drones; ++l) {
      const int j = inst.home[l];
      if (inst.pi(i, j) && inst.available[l]) entries.push_back({i, j, l, inst.d(i, j)});
    }
  const int n = static_cast<int>(entries.size());

  std::map<std::vector<int>, double> cost_cache;
  ExactResult best;
  std::vector<int> load(I);
  std::vector<double> battery(inst.drones);
  std::vector<std::uint8_t> used(inst.bases);
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::fill(load.begin(), load.end(), 0);
    std::fill(battery.begin(), battery.end(), 0.0);
    std::fill(used.begin(), used.end(), 0);
    double move = 0.0;
    for (int e = 0; e < n; ++e)
      if ((mask >> e) & 1u) {
        ++load[entries[e].i];
        battery[entries[e].l] += 2.0 * entries[e].dist;
        used[entries[e].j] = 1;
        move += 2.0 * entries[e].dist;
      }
    bool ok = true;
    for (int i = 0; i < I && ok; ++i)
      ok = opt.require_coverage ? load[i] == inst.fires[i].cap : load[i] <= inst.fires[i].cap;
    for (int l = 0; l < inst.drones && ok; ++l)
      ok = battery[l] <= inst.range[l] * inst.battery[l] + 1e-9;
    for (int l = 0; l < inst.drones && ok; ++l) {
      std::vector<double> col(I, 0.0);
      for (int e = 0; e < n; ++e)
        if (entries[e].l == l && ((mask >> e) & 1u)) col[entries[e].i] = 1.0;
      ok = time.feasible(l, col);
    }
    if (!ok) continue;

    auto it = cost_cache.find(load);
    if (it == cost_cache.end()) {
      std::vector<double> lf(load.begin(), load.end());
      it = cost_cache.emplace(load, oracle.value(lf)).first;
    }
    const double value = scenario.w1 * it->second + scenario.w2 * popcount(used) + scenario.w3 * move;
    if (!best.feasible || value < best.value - 1e-12) {
      best.feasible = true;
      best.value = value;
      best.decision = Decision::zeros(inst);
      for (int e = 0; e < n; ++e)
        if ((mask >> e) & 1u) best.decision.at(entries[e].i, entries[e].j, entries[e].l) = 1;
      best.decision.b = used;
    }
  }
  return best;
}

std::string stats_csv_header() {
  return "instance,fires,bases,drones,iterations,nodes,cuts,value,wall_ms";
}

std::string stats_csv_row(const std::string& id, const Instance& inst, const PlanStats& s) {
  std::ostringstream os;
  os.precision(10);
  os << id << ',' << inst.fire_count() << ',' << inst.bases << ',' << inst.drones << ','
     << s.iterations << ',' << s.nodes << ',' << s.cuts << ',' << s.value << ',' << s.wall_ms;
  return os.str();
}

}  // namespace wildfire
