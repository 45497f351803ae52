#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wildfire/firegrid.hpp"

namespace wildfire {

struct GridPoint {
  int x = 0;
  int y = 0;
  bool operator==(const GridPoint&) const = default;
};

double distance(GridPoint a, GridPoint b);

struct Drone {
  int home = 0;         // base index j with y_jl = 1
  double range = 40.0;  // D_l, cells of flight on a full battery
};

// Mean and covariance of bomb-delivery times as a function of the fire set.
// mu_i = mean + mean_per_intensity * g_i;
// Sigma_ik = sigma^2 exp(-|p_i - p_k| / correlation_length), plus a nugget
// on the diagonal. The exponential kernel is positive definite for distinct
// points, so Sigma_t is PD for every fire set.
struct RobustSpec {
  double mean = 1.0;
  double mean_per_intensity = 0.0;
  double sigma = 0.3;
  double correlation_length = 1.0;
  double nugget = 1e-6;
};

struct Scenario {
  std::string name;
  int width = 20;
  int height = 20;

  std::vector<GridPoint> bases;
  std::vector<Drone> drones;

  double w1 = 1.0;  // burn cost
  double w2 = 1.0;  // base activation
  double w3 = 1.0;  // movement
  double period = 10.0;      // Delta
  double speed = 5.0;        // alpha, cells per time unit
  double safe_distance = 1.0;
  double reserve = 0.2;      // s
  double risk = 0.05;        // delta
  double big_m = 1e6;        // M
  double tau_max = 0.0;      // plain-MIP service bound, 0 = default 3 sigma
  RobustSpec robust;

  // Environment for rollouts.
  Weather weather;
  SpreadConfig spread;
  FireMap initial;

  int bases_count() const { return static_cast<int>(bases.size()); }
  int drones_count() const { return static_cast<int>(drones.size()); }

  // Throws std::invalid_argument on a broken invariant.
  void validate() const;
};

struct FleetState {
  std::vector<double> battery;            // u, fraction of D_l
  std::vector<double> overtime;           // zeta
  std::vector<std::uint8_t> swapped;      // upsilon of the last transition
  std::vector<std::uint8_t> available;    // 1 - ceil(zeta / M)

  static FleetState fresh(int drones);
  int size() const { return static_cast<int>(battery.size()); }
};

struct FirePoint {
  int x = 0;
  int y = 0;
  double intensity = 0.0;
  int cap = 0;  // ceil(g)
};

struct Instance {
  FireMap map;
  std::vector<FirePoint> fires;
  int bases = 0;
  int drones = 0;
  std::vector<int> home;            // per drone
  std::vector<double> range;        // D_l
  std::vector<double> dist;         // I x J
  std::vector<std::uint8_t> eligible;  // pi, I x J
  std::vector<std::uint8_t> available;
  std::vector<double> battery;
  std::vector<double> mu;           // I
  std::vector<double> sigma;        // I x I, row-major

  int fire_count() const { return static_cast<int>(fires.size()); }
  double d(int i, int j) const { return dist[static_cast<std::size_t>(i) * bases + j]; }
  bool pi(int i, int j) const { return eligible[static_cast<std::size_t>(i) * bases + j] != 0; }
  // Flattened per-cell state for the predictors.
  std::vector<double> state() const;
};

Instance extract_instance(const FireMap& map, const Scenario& scenario, const FleetState& fleet);

// x over (i, j, l) with index (i * J + j) * L + l, b over j.
struct Decision {
  int fires = 0;
  int bases = 0;
  int drones = 0;
  std::vector<std::uint8_t> x;
  std::vector<std::uint8_t> b;

  Decision() = default;
  Decision(int i, int j, int l);
  static Decision zeros(const Instance& inst);

  std::size_t idx(int i, int j, int l) const {
    return (static_cast<std::size_t>(i) * bases + j) * drones + l;
  }
  std::uint8_t& at(int i, int j, int l) { return x[idx(i, j, l)]; }
  std::uint8_t at(int i, int j, int l) const { return x[idx(i, j, l)]; }
  int assignments() const;
  int fire_load(int i) const;   // sum over j, l
  int drone_load(int l) const;  // sum over i, j
  // b_j = 1 exactly on bases used by some assignment.
  void derive_bases();
  bool operator==(const Decision&) const = default;
};

// Per-cell quench fraction fed to the SQ model: assigned drones / ceil(g).
std::vector<double> quench_input(const Instance& inst, const Decision& d);
// Per-cell drone counts for apply_quench.
std::vector<int> quench_counts(const Instance& inst, const Decision& d);

double movement(const Instance& inst, const Decision& d);  // sum 2 x D

double objective(const Instance& inst, const Decision& d, double predicted_cost,
                 const Scenario& scenario);

enum class ConstraintKind { Battery, Eligibility, Capacity, SafeDistance, Coverage };
const char* to_string(ConstraintKind k);

struct Violation {
  ConstraintKind kind;
  int i = -1;
  int j = -1;
  int l = -1;
  double amount = 0.0;  // how far the constraint is exceeded
  std::string describe() const;
};

// Battery, eligibility, intensity cap and safe distance.
std::vector<Violation> check_deterministic(const Instance& inst, const Decision& d,
                                           const Scenario& scenario);

// --- robust operating-time constraint --------------------------------------

// The constraint for one drone over a set of (i, j) columns. With w = 2x - m:
//   Q = k A^T Sigma A - c c^T,  c = D / alpha + A^T mu,  k = (1 - delta) / delta
//   quadratic:  w^T Q w + 2 Delta c^T w - Delta^2 <= 0
//   linear:     c^T w <= Delta
//   x_e D_e <= theta,  theta <= x_e D_e + M (1 - m_e),  sum m = 1
struct CcroConstraint {
  int fires = 0;
  int bases = 0;
  std::vector<int> col_fire;  // i of each column
  std::vector<int> col_base;  // j of each column
  std::vector<double> A;      // fires x n
  std::vector<double> dist;   // D per column
  std::vector<double> c;      // linear_mean
  std::vector<double> S;      // A^T Sigma A, n x n
  std::vector<double> Q;      // n x n
  double k = 0.0;
  double period = 0.0;
  double big_m = 0.0;
  bool q_psd = false;
  double q_min_eigenvalue = 0.0;

  int size() const { return static_cast<int>(c.size()); }
  bool nonnegative() const {
    return std::all_of(S.begin(), S.end(), [](double v) { return v >= 0.0; });
  }

  double mean_time(std::span<const double> w) const;  // c^T w
  double variance(std::span<const double> w) const;   // w^T S w
  double quadratic(std::span<const double> w) const;  // left side of the quadratic row

  // Evaluates every row for a given (x, m, theta). The m-sum row applies to
  // drones with at least one assignment; an idle drone has m = 0.
  bool satisfied(std::span<const double> x, std::span<const double> m, double theta,
                 double tol = 1e-9) const;
};

// Columns: every (i, home(l)) pair of the drone.
CcroConstraint build_ccro(const Instance& inst, const Scenario& scenario, int drone);
// Columns: all I x J pairs, ordered i * J + j.
CcroConstraint build_ccro_full(const Instance& inst, const Scenario& scenario);

// m at the assigned column of maximum distance, lowest index on ties. All zero
// for an empty assignment.
std::vector<double> argmax_selector(std::span<const double> x, std::span<const double> dist);

bool cantelli_feasible(const CcroConstraint& con, std::span<const double> x);
bool plain_time_feasible(const CcroConstraint& con, std::span<const double> x,
                         double speed, double tau_max);

// Per-drone views of a Decision against build_ccro(inst, scenario, l).
std::vector<double> drone_columns(const Instance& inst, const Decision& d, int drone);
bool cantelli_feasible(const Instance& inst, const Decision& d, const Scenario& scenario,
                       int drone);
bool plain_time_feasible(const Instance& inst, const Decision& d, const Scenario& scenario,
                         int drone, double tau_max);

// max_i (mu_i + 3 sqrt(Sigma_ii)) unless the scenario pins a value.
double default_tau_max(const Instance& inst, const Scenario& scenario);

// True iff Sigma is numerically positive definite (Cholesky succeeds).
bool positive_definite(std::span<const double> matrix, int n);

}  // namespace wildfire
