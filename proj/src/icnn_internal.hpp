#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "wildfire/icnn.hpp"

namespace wildfire::detail {

// Everything the backward pass needs from one forward evaluation.
struct Activations {
  std::vector<double> self;        // y (1 - x)
  std::vector<double> neighbours;  // unquenched burning 8-neighbours
  std::vector<double> a1, u1, a2, u2;
  std::vector<double> p1, z1, p2, z2;
  std::vector<double> logits;
  double unquenched = 0.0;  // S
  double exposure = 0.0;    // E
  double raw_cost = 0.0;
  double cost = 0.0;
};

void forward_pass(const IcnnModel& m, std::span<const double> y, std::span<const double> x,
                  Activations& act);

// out = W v + b
void affine(const Matrix& w, std::span<const double> v, const Matrix& b, std::vector<double>& out);
// out += W v
void accumulate_matvec(const Matrix& w, std::span<const double> v, std::vector<double>& out);
// out += W^T v
void accumulate_matvec_t(const Matrix& w, std::span<const double> v, std::vector<double>& out);
// G += a b^T
void accumulate_outer(Matrix& g, std::span<const double> a, std::span<const double> b);

inline double sigmoid(double t) {
  return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

}  // namespace wildfire::detail
