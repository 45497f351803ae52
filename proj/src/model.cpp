#include "wildfire/model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace wildfire {

double distance(GridPoint a, GridPoint b) {
  return std::hypot(double(a.x - b.x), double(a.y - b.y));
}

void Scenario::validate() const {
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument("scenario '" + name + "': " + what);
  };
  if (width <= 0 || height <= 0) fail("grid size must be positive");
  if (bases.empty()) fail("no bases");
  for (const auto& p : bases)
    if (p.x < 0 || p.y < 0 || p.x >= width || p.y >= height) fail("base outside the grid");
  for (const auto& d : drones) {
    if (d.home < 0 || d.home >= bases_count()) fail("drone home base out of range");
    if (!(d.range > 0.0)) fail("drone range must be positive");
  }
  if (w1 < 0 || w2 < 0 || w3 < 0) fail("weights must be nonnegative");
  if (!(period > 0.0)) fail("period must be positive");
  if (!(speed > 0.0)) fail("speed must be positive");
  if (safe_distance < 0.0) fail("safe distance must be nonnegative");
  if (!(reserve > 0.0 && reserve < 1.0)) fail("reserve must lie in (0, 1)");
  if (!(risk > 0.0 && risk < 0.5)) fail("risk must lie in (0, 0.5)");
  if (!(big_m > 0.0)) fail("M must be positive");
  if (tau_max < 0.0) fail("tau_max must be nonnegative");
  if (robust.sigma <= 0.0 || robust.correlation_length <= 0.0 || robust.nugget < 0.0 ||
      robust.mean < 0.0 || robust.mean_per_intensity < 0.0)
    fail("bad robust spec");
  weather.validate();
  if (!initial.intensity.empty()) {
    if (initial.width != width || initial.height != height) fail("initial map size mismatch");
    initial.validate();
  }
}

FleetState FleetState::fresh(int drones) {
  FleetState f;
  f.battery.assign(drones, 1.0);
  f.overtime.assign(drones, 0.0);
  f.swapped.assign(drones, 0);
  f.available.assign(drones, 1);
  return f;
}

std::vector<double> Instance::state() const {
  std::vector<double> y(map.cells());
  for (std::size_t c = 0; c < y.size(); ++c) y[c] = map.burning(c) ? 1.0 : 0.0;
  return y;
}

Instance extract_instance(const FireMap& map, const Scenario& scenario, const FleetState& fleet) {
  map.validate();
  if (fleet.size() != scenario.drones_count())
    throw std::invalid_argument("fleet size does not match the scenario");
  Instance inst;
  inst.map = map;
  inst.bases = scenario.bases_count();
  inst.drones = scenario.drones_count();
  for (const auto& d : scenario.drones) {
    inst.home.push_back(d.home);
    inst.range.push_back(d.range);
  }
  inst.available = fleet.available;
  inst.battery = fleet.battery;

  for (int y = 0; y < map.height; ++y)
    for (int x = 0; x < map.width; ++x) {
      const double g = map.intensity[map.index(x, y)];
      if (g > 0.0) inst.fires.push_back({x, y, g, static_cast<int>(std::ceil(g - 1e-12))});
    }
  const int n = inst.fire_count();
  const int J = inst.bases;
  inst.dist.resize(static_cast<std::size_t>(n) * J);
  inst.eligible.resize(inst.dist.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < J; ++j) {
      const double d = distance(scenario.bases[j], {inst.fires[i].x, inst.fires[i].y});
      inst.dist[static_cast<std::size_t>(i) * J + j] = d;
      inst.eligible[static_cast<std::size_t>(i) * J + j] = d >= scenario.safe_distance;
    }

  const auto& r = scenario.robust;
  inst.mu.resize(n);
  inst.sigma.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    inst.mu[i] = r.mean + r.mean_per_intensity * inst.fires[i].intensity;
    for (int k = 0; k < n; ++k) {
      const double h = distance({inst.fires[i].x, inst.fires[i].y}, {inst.fires[k].x, inst.fires[k].y});
      inst.sigma[static_cast<std::size_t>(i) * n + k] =
          r.sigma * r.sigma * std::exp(-h / r.correlation_length) + (i == k ? r.nugget : 0.0);
    }
  }
  return inst;
}

Decision::Decision(int i, int j, int l)
    : fires(i), bases(j), drones(l),
      x(static_cast<std::size_t>(i) * j * l, 0), b(static_cast<std::size_t>(j), 0) {}

Decision Decision::zeros(const Instance& inst) {
  return Decision(inst.fire_count(), inst.bases, inst.drones);
}

int Decision::assignments() const {
  int s = 0;
  for (auto v : x) s += v;
  return s;
}

int Decision::fire_load(int i) const {
  int s = 0;
  for (int j = 0; j < bases; ++j)
    for (int l = 0; l < drones; ++l) s += at(i, j, l);
  return s;
}

int Decision::drone_load(int l) const {
  int s = 0;
  for (int i = 0; i < fires; ++i)
    for (int j = 0; j < bases; ++j) s += at(i, j, l);
  return s;
}

void Decision::derive_bases() {
  std::fill(b.begin(), b.end(), 0);
  for (int i = 0; i < fires; ++i)
    for (int j = 0; j < bases; ++j)
      for (int l = 0; l < drones; ++l)
        if (at(i, j, l)) b[j] = 1;
}

namespace {

void check_shape(const Instance& inst, const Decision& d) {
  if (d.fires != inst.fire_count() || d.bases != inst.bases || d.drones != inst.drones ||
      d.x.size() != static_cast<std::size_t>(d.fires) * d.bases * d.drones ||
      d.b.size() != static_cast<std::size_t>(d.bases))
    throw std::invalid_argument("decision shape does not match the instance");
}

}  // namespace

std::vector<double> quench_input(const Instance& inst, const Decision& d) {
  check_shape(inst, d);
  std::vector<double> q(inst.map.cells(), 0.0);
  for (int i = 0; i < inst.fire_count(); ++i) {
    const auto& f = inst.fires[i];
    q[inst.map.index(f.x, f.y)] = std::min(1.0, double(d.fire_load(i)) / std::max(1, f.cap));
  }
  return q;
}

std::vector<int> quench_counts(const Instance& inst, const Decision& d) {
  check_shape(inst, d);
  std::vector<int> q(inst.map.cells(), 0);
  for (int i = 0; i < inst.fire_count(); ++i) {
    const auto& f = inst.fires[i];
    q[inst.map.index(f.x, f.y)] = d.fire_load(i);
  }
  return q;
}

double movement(const Instance& inst, const Decision& d) {
  check_shape(inst, d);
  double s = 0.0;
  for (int i = 0; i < d.fires; ++i)
    for (int j = 0; j < d.bases; ++j)
      for (int l = 0; l < d.drones; ++l)
        if (d.at(i, j, l)) s += 2.0 * inst.d(i, j);
  return s;
}

double objective(const Instance& inst, const Decision& d, double predicted_cost,
                 const Scenario& scenario) {
  check_shape(inst, d);
  double active = 0.0;
  for (auto v : d.b) active += v;
  return scenario.w1 * predicted_cost + scenario.w2 * active + scenario.w3 * movement(inst, d);
}

const char* to_string(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::Battery: return "battery";
    case ConstraintKind::Eligibility: return "eligibility";
    case ConstraintKind::Capacity: return "capacity";
    case ConstraintKind::SafeDistance: return "safe_distance";
    case ConstraintKind::Coverage: return "coverage";
  }
  return "?";
}

std::string Violation::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  if (i >= 0) os << " i=" << i;
  if (j >= 0) os << " j=" << j;
  if (l >= 0) os << " l=" << l;
  os << " by " << amount;
  return os.str();
}

std::vector<Violation> check_deterministic(const Instance& inst, const Decision& d,
                                           const Scenario& scenario) {
  check_shape(inst, d);
  std::vector<Violation> out;
  const int I = d.fires, J = d.bases, L = d.drones;
  constexpr double tol = 1e-9;

  for (int j = 0; j < J; ++j)
    for (int l = 0; l < L; ++l) {
      double used = 0.0;
      for (int i = 0; i < I; ++i)
        if (d.at(i, j, l)) used += 2.0 * inst.d(i, j);
      const double budget = inst.range[l] * inst.battery[l];
      if (used > budget + tol) out.push_back({ConstraintKind::Battery, -1, j, l, used - budget});
    }

  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j)
      for (int l = 0; l < L; ++l) {
        if (!d.at(i, j, l)) continue;
        const bool ok = d.b[j] && inst.home[l] == j && inst.pi(i, j) && inst.available[l];
        if (!ok) out.push_back({ConstraintKind::Eligibility, i, j, l, 1.0});
      }

  for (int i = 0; i < I; ++i) {
    const int load = d.fire_load(i);
    if (load > inst.fires[i].cap)
      out.push_back({ConstraintKind::Capacity, i, -1, -1, double(load - inst.fires[i].cap)});
  }

  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j) {
      const double lhs = (inst.pi(i, j) ? 1.0 : 0.0) * d.b[j] * scenario.safe_distance;
      if (lhs > inst.d(i, j) + tol)
        out.push_back({ConstraintKind::SafeDistance, i, j, -1, lhs - inst.d(i, j)});
    }
  return out;
}

// --- robust operating-time constraint --------------------------------------

bool positive_definite(std::span<const double> matrix, int n) {
  if (n == 0) return true;
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
      matrix.data(), n, n);
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

namespace {

CcroConstraint build_on_columns(const Instance& inst, const Scenario& scenario,
                                const std::vector<int>& fire, const std::vector<int>& base) {
  const int I = inst.fire_count();
  if (!positive_definite(inst.sigma, I))
    throw std::invalid_argument("covariance of the fire set is not positive definite");
  CcroConstraint con;
  con.fires = I;
  con.bases = inst.bases;
  con.col_fire = fire;
  con.col_base = base;
  const int n = static_cast<int>(fire.size());
  con.k = (1.0 - scenario.risk) / scenario.risk;
  con.period = scenario.period;
  con.big_m = scenario.big_m;
  con.A.assign(static_cast<std::size_t>(I) * n, 0.0);
  con.dist.resize(n);
  con.c.resize(n);
  for (int e = 0; e < n; ++e) {
    con.A[static_cast<std::size_t>(fire[e]) * n + e] = 1.0;
    con.dist[e] = inst.d(fire[e], base[e]);
    con.c[e] = con.dist[e] / scenario.speed + inst.mu[fire[e]];
  }
  con.S.resize(static_cast<std::size_t>(n) * n);
  con.Q.resize(con.S.size());
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const double s = inst.sigma[static_cast<std::size_t>(fire[a]) * I + fire[b]];
      con.S[static_cast<std::size_t>(a) * n + b] = s;
      con.Q[static_cast<std::size_t>(a) * n + b] = con.k * s - con.c[a] * con.c[b];
    }
  if (n > 0) {
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> q(
        con.Q.data(), n, n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q, Eigen::EigenvaluesOnly);
    con.q_min_eigenvalue = es.eigenvalues().minCoeff();
    con.q_psd = con.q_min_eigenvalue >= -1e-9;
  } else {
    con.q_psd = true;
  }
  return con;
}

}  // namespace

CcroConstraint build_ccro(const Instance& inst, const Scenario& scenario, int drone) {
  if (drone < 0 || drone >= inst.drones) throw std::out_of_range("drone index");
  std::vector<int> fire, base;
  for (int i = 0; i < inst.fire_count(); ++i) {
    fire.push_back(i);
    base.push_back(inst.home[drone]);
  }
  return build_on_columns(inst, scenario, fire, base);
}

CcroConstraint build_ccro_full(const Instance& inst, const Scenario& scenario) {
  std::vector<int> fire, base;
  for (int i = 0; i < inst.fire_count(); ++i)
    for (int j = 0; j < inst.bases; ++j) {
      fire.push_back(i);
      base.push_back(j);
    }
  return build_on_columns(inst, scenario, fire, base);
}

double CcroConstraint::mean_time(std::span<const double> w) const {
  double s = 0.0;
  for (int e = 0; e < size(); ++e) s += c[e] * w[e];
  return s;
}

double CcroConstraint::variance(std::span<const double> w) const {
  const int n = size();
  double s = 0.0;
  for (int a = 0; a < n; ++a) {
    if (w[a] == 0.0) continue;
    double r = 0.0;
    for (int b = 0; b < n; ++b) r += S[static_cast<std::size_t>(a) * n + b] * w[b];
    s += w[a] * r;
  }
  return s;
}

double CcroConstraint::quadratic(std::span<const double> w) const {
  const int n = size();
  double s = 0.0;
  for (int a = 0; a < n; ++a) {
    if (w[a] == 0.0) continue;
    double r = 0.0;
    for (int b = 0; b < n; ++b) r += Q[static_cast<std::size_t>(a) * n + b] * w[b];
    s += w[a] * r;
  }
  return s + 2.0 * period * mean_time(w) - period * period;
}

bool CcroConstraint::satisfied(std::span<const double> x, std::span<const double> m, double theta,
                               double tol) const {
  const int n = size();
  std::vector<double> w(n);
  double msum = 0.0;
  bool used = false;
  for (int e = 0; e < n; ++e) {
    w[e] = 2.0 * x[e] - m[e];
    msum += m[e];
    used = used || x[e] > 0.5;
  }
  const double scale = std::max(1.0, period * period);
  if (quadratic(w) > tol * scale) return false;
  if (mean_time(w) - period > tol * std::max(1.0, period)) return false;
  for (int e = 0; e < n; ++e) {
    if (x[e] * dist[e] > theta + tol) return false;
    if (theta > x[e] * dist[e] + big_m * (1.0 - m[e]) + tol) return false;
  }
  return std::abs(msum - (used ? 1.0 : 0.0)) <= tol;
}

std::vector<double> argmax_selector(std::span<const double> x, std::span<const double> dist) {
  std::vector<double> m(x.size(), 0.0);
  int best = -1;
  for (std::size_t e = 0; e < x.size(); ++e)
    if (x[e] > 0.5 && (best < 0 || dist[e] > dist[best])) best = static_cast<int>(e);
  if (best >= 0) m[best] = 1.0;
  return m;
}

bool cantelli_feasible(const CcroConstraint& con, std::span<const double> x) {
  const auto m = argmax_selector(x, con.dist);
  std::vector<double> w(x.size());
  for (std::size_t e = 0; e < x.size(); ++e) w[e] = 2.0 * x[e] - m[e];
  const double tbar = con.mean_time(w);
  if (tbar > con.period) return false;
  const double slack = con.period - tbar;
  return slack * slack >= con.k * con.variance(w);
}

bool plain_time_feasible(const CcroConstraint& con, std::span<const double> x, double speed,
                         double tau_max) {
  const auto m = argmax_selector(x, con.dist);
  double t = 0.0;
  for (std::size_t e = 0; e < x.size(); ++e)
    t += (2.0 * x[e] - m[e]) * (con.dist[e] / speed + tau_max);
  return t <= con.period + 1e-9;
}

std::vector<double> drone_columns(const Instance& inst, const Decision& d, int drone) {
  check_shape(inst, d);
  std::vector<double> x(inst.fire_count());
  for (int i = 0; i < inst.fire_count(); ++i) x[i] = d.at(i, inst.home[drone], drone);
  return x;
}

bool cantelli_feasible(const Instance& inst, const Decision& d, const Scenario& scenario,
                       int drone) {
  const auto x = drone_columns(inst, d, drone);
  if (std::none_of(x.begin(), x.end(), [](double v) { return v > 0.5; })) return true;
  return cantelli_feasible(build_ccro(inst, scenario, drone), x);
}

bool plain_time_feasible(const Instance& inst, const Decision& d, const Scenario& scenario,
                         int drone, double tau_max) {
  const auto x = drone_columns(inst, d, drone);
  if (std::none_of(x.begin(), x.end(), [](double v) { return v > 0.5; })) return true;
  return plain_time_feasible(build_ccro(inst, scenario, drone), x, scenario.speed, tau_max);
}

double default_tau_max(const Instance& inst, const Scenario& scenario) {
  if (scenario.tau_max > 0.0) return scenario.tau_max;
  const int I = inst.fire_count();
  double t = scenario.robust.mean;
  for (int i = 0; i < I; ++i)
    t = std::max(t, inst.mu[i] + 3.0 * std::sqrt(inst.sigma[static_cast<std::size_t>(i) * I + i]));
  return t;
}

}  // namespace wildfire
