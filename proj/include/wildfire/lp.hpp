#pragma once

#include <limits>
#include <utility>
#include <vector>

namespace wildfire {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { LessEqual, GreaterEqual, Equal };

// min c^T x  s.t.  rows,  lower <= x <= upper.
struct LinearProgram {
  struct Row {
    std::vector<std::pair<int, double>> terms;
    Relation relation = Relation::LessEqual;
    double rhs = 0.0;
  };

  std::vector<double> cost;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<Row> rows;
  bool maximize = false;

  int add_variable(double lo, double hi, double c = 0.0);
  void add_row(std::vector<std::pair<int, double>> terms, Relation rel, double rhs);
  // Dense row helper: one coefficient per variable.
  void add_dense_row(const std::vector<double>& coef, Relation rel, double rhs);
  int variables() const { return static_cast<int>(cost.size()); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };
const char* to_string(LpStatus s);

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> values;
  double objective = 0.0;
  int iterations = 0;
};

// Two-phase bounded-variable primal simplex on a dense tableau. Dantzig
// pricing, switching to Bland's rule after a run of degenerate pivots.
// Throws std::invalid_argument on malformed input (dimension mismatch,
// non-finite coefficients, lower > upper).
LpResult solve_lp(const LinearProgram& lp, int max_iterations = 50000);

// Largest violation of any row or bound by `x`.
double max_violation(const LinearProgram& lp, const std::vector<double>& x);

}  // namespace wildfire
