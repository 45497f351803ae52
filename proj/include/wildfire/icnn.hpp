#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "wildfire/firegrid.hpp"
#include "wildfire/parallel.hpp"

namespace wildfire {

// Row-major dense block. Biases are stored as (rows x 1).
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double v = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, v) {}

  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  bool empty() const { return data.empty(); }

  bool operator==(const Matrix&) const = default;
};

// Partially input-convex network over a grid.
//
// The flattened burning state y drives an unconstrained context path
//   u1 = relu(Cw0 y + cb0),  u2 = relu(Cw1 u1 + cb1).
// The quench decision x enters a convex path
//   z1 = relu(X0 x + U0 u1 + b0),  z2 = relu(Z1 z1 + X1 x + U1 u2 + b1),  Z1 >= 0
// and the cost head
//   C = S + scale * max(0, wz.z2 + wx.x + wu.u2 + (k0 S + k1 E) / scale + c),
// wz >= 0, is convex in x for every fixed y. S is the unquenched burning count
// and E the number of (unquenched burning, unburnt) neighbour pairs; both are
// affine in x. Unquenched cells keep burning, so S sits outside the clamp and
// the clamped part accounts for new ignitions. The decision weights X0, X1, wx
// are kept <= 0 and k0, k1 >= 0, which makes the head non-increasing in x as
// well: quenching never raises the predicted burn. The per-cell burn logit combines the
// context with three local features: the unquenched self state, the count of
// unquenched burning neighbours, and the quench fraction of the cell.
//
// Without a decision input (the spread-only model) the convex path is empty.
struct IcnnModel {
  int width = 0;
  int height = 0;
  int hidden = 0;
  bool has_decision = false;
  double cost_scale = 1.0;

  Matrix ctx_w0, ctx_b0, ctx_w1, ctx_b1;
  Matrix burn_w, burn_b, burn_local;
  Matrix cvx_x0, cvx_u0, cvx_b0, cvx_z1, cvx_x1, cvx_u1, cvx_b1;
  Matrix cost_z, cost_x, cost_u, cost_b, cost_local;

  int cells() const { return width * height; }

  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;

  // Clamps cvx_z1, cost_z and cost_local at zero from below and the decision
  // weights cvx_x0, cvx_x1, cost_x at zero from above.
  void project();
  // Smallest sign-constrained weight measured in its allowed direction, so
  // negative means a violated constraint (+inf if none).
  double min_constrained_weight() const;

  IcnnModel zeros_like() const;

  bool operator==(const IcnnModel&) const = default;
};

IcnnModel make_icnn(int width, int height, int hidden, bool has_decision,
                    std::uint64_t seed);

struct TrainConfig {
  int hidden = 0;  // 0: 64 up to 20x20, 128 above
  int epochs = 20;
  int batch = 32;
  double learning_rate = 1.0;
  double lr_decay = 0.5;
  int decay_every = 8;
  double cost_weight = 0.1;  // lambda on the squared cost error
  ExecPolicy policy = ExecPolicy::Parallel;
};

struct TrainingResult {
  IcnnModel model;
  std::vector<double> epoch_loss;
};

// Throws std::invalid_argument on an empty dataset, on quench data passed to
// the spread model or on missing quench data for the SQ model.
TrainingResult train_s(std::span<const TrainingPair> pairs, const TrainConfig& cfg,
                       std::uint64_t seed);
TrainingResult train_sq(std::span<const TrainingPair> pairs, const TrainConfig& cfg,
                        std::uint64_t seed);

// Raw forward pass on flattened inputs; quench may be empty for spread-only
// models. Returns per-cell burn probabilities and the cost.
struct ForwardOutput {
  std::vector<double> burn_probability;
  double cost = 0.0;
};
ForwardOutput forward(const IcnnModel& model, std::span<const double> state,
                      std::span<const double> quench);

FireMap predict_s(const IcnnModel& model, const FireMap& map);

struct SqPrediction {
  FireMap next;
  double cost = 0.0;
};
// quench: per-cell quench fraction in [0, 1].
SqPrediction predict_sq(const IcnnModel& model, const FireMap& map,
                        std::span<const double> quench);

double predict_cost(const IcnnModel& model, std::span<const double> state,
                    std::span<const double> quench);

struct CostCut {
  double value = 0.0;
  std::vector<double> gradient;  // per cell
};
// Value of the cost head and a subgradient in the quench input.
CostCut cost_subgradient(const IcnnModel& model, std::span<const double> state,
                         std::span<const double> quench);
CostCut cost_subgradient(const IcnnModel& model, const FireMap& map,
                         std::span<const double> quench);

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
};

struct MetricsReport {
  double sensitivity = 1.0;
  double specificity = 1.0;
  double precision = 1.0;
  double accuracy = 1.0;
  Confusion confusion;
};

MetricsReport metrics(const Confusion& c);
MetricsReport metrics(std::span<const std::uint8_t> predictions,
                      std::span<const std::uint8_t> labels);

// Thresholded predictions on every pair against its `after` grid.
MetricsReport evaluate(const IcnnModel& model, std::span<const TrainingPair> pairs,
                       ExecPolicy policy = ExecPolicy::Parallel);

// Checkpoint: "ICNN1", u32 layer count, then per layer u32 rows, u32 cols and
// row-major little-endian f64 values. Layer 0 holds the shape header
// [width, height, hidden, has_decision, cost_scale].
void write_model(std::ostream& os, const IcnnModel& model);
IcnnModel read_model(std::istream& is);
void save_model(const std::string& path, const IcnnModel& model);
IcnnModel load_model(const std::string& path);

}  // namespace wildfire
