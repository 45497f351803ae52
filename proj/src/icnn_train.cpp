#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "icnn_internal.hpp"
#include "wildfire/icnn.hpp"
#include "wildfire/rng.hpp"

namespace wildfire {

namespace {

struct Sample {
  std::vector<double> y;
  std::vector<double> x;  // empty for spread-only samples
  std::vector<double> label;
  double cost = 0.0;
};

std::vector<Sample> to_samples(std::span<const TrainingPair> pairs, bool with_quench) {
  std::vector<Sample> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    Sample s;
    const auto n = p.before.size();
    s.y.resize(n);
    for (std::size_t c = 0; c < n; ++c) s.y[c] = p.before[c] > 0 ? 1.0 : 0.0;
    if (with_quench) {
      s.x.resize(n);
      for (std::size_t c = 0; c < n; ++c) s.x[c] = (*p.quench)[c] ? 1.0 : 0.0;
    }
    s.label.assign(p.after.begin(), p.after.end());
    s.cost = p.next_cost;
    out.push_back(std::move(s));
  }
  return out;
}

double softplus(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

// Accumulates the gradient of one sample's loss into `g` and returns the loss.
double backprop(const IcnnModel& m, const Sample& s, double cost_weight,
                detail::Activations& act, IcnnModel& g) {
  detail::forward_pass(m, s.y, s.x, act);
  const int n = m.cells();
  const int h = m.hidden;
  const bool has_x = !s.x.empty();

  double loss = 0.0;
  std::vector<double> gl(n);
  for (int c = 0; c < n; ++c) {
    const double z = act.logits[c];
    // binary cross-entropy from logits
    loss += s.label[c] > 0.5 ? softplus(-z) : softplus(z);
    gl[c] = (detail::sigmoid(z) - s.label[c]) / n;
  }
  loss /= n;

  detail::accumulate_outer(g.burn_w, gl, act.u2);
  for (int c = 0; c < n; ++c) {
    g.burn_b.data[c] += gl[c];
    g.burn_local.data[0] += gl[c] * act.self[c];
    g.burn_local.data[1] += gl[c] * act.neighbours[c];
    if (has_x) g.burn_local.data[2] += gl[c] * s.x[c];
  }
  std::vector<double> du2(h, 0.0);
  detail::accumulate_matvec_t(m.burn_w, gl, du2);
  std::vector<double> du1(h, 0.0);

  if (m.has_decision && cost_weight > 0.0) {
    const double scale = m.cost_scale;
    // Fit the pre-clamp head. A zero target is met by any head <= 0; for a
    // positive target the error passes through the clamp so a negative head
    // still receives gradient.
    const double target = (s.cost - act.unquenched) / scale;
    const double err = target <= 0.0 && act.raw_cost <= 0.0 ? 0.0 : act.raw_cost - target;
    loss += cost_weight * err * err;
    const double gr = 2.0 * cost_weight * err;
    if (gr != 0.0) {
      for (int k = 0; k < h; ++k) {
        g.cost_z.data[k] += gr * act.z2[k];
        g.cost_u.data[k] += gr * act.u2[k];
        du2[k] += gr * m.cost_u.data[k];
      }
      g.cost_b.data[0] += gr;
      g.cost_local.data[0] += gr * act.unquenched / scale;
      g.cost_local.data[1] += gr * act.exposure / scale;
      if (has_x)
        for (int c = 0; c < n; ++c) g.cost_x.data[c] += gr * s.x[c];

      std::vector<double> dp2(h);
      for (int k = 0; k < h; ++k) dp2[k] = act.p2[k] > 0.0 ? gr * m.cost_z.data[k] : 0.0;
      detail::accumulate_outer(g.cvx_z1, dp2, act.z1);
      if (has_x) detail::accumulate_outer(g.cvx_x1, dp2, s.x);
      detail::accumulate_outer(g.cvx_u1, dp2, act.u2);
      for (int k = 0; k < h; ++k) g.cvx_b1.data[k] += dp2[k];
      detail::accumulate_matvec_t(m.cvx_u1, dp2, du2);

      std::vector<double> dz1(h, 0.0);
      detail::accumulate_matvec_t(m.cvx_z1, dp2, dz1);
      std::vector<double> dp1(h);
      for (int k = 0; k < h; ++k) dp1[k] = act.p1[k] > 0.0 ? dz1[k] : 0.0;
      if (has_x) detail::accumulate_outer(g.cvx_x0, dp1, s.x);
      detail::accumulate_outer(g.cvx_u0, dp1, act.u1);
      for (int k = 0; k < h; ++k) g.cvx_b0.data[k] += dp1[k];
      detail::accumulate_matvec_t(m.cvx_u0, dp1, du1);
    }
  }

  std::vector<double> da2(h);
  for (int k = 0; k < h; ++k) da2[k] = act.a2[k] > 0.0 ? du2[k] : 0.0;
  detail::accumulate_outer(g.ctx_w1, da2, act.u1);
  for (int k = 0; k < h; ++k) g.ctx_b1.data[k] += da2[k];
  detail::accumulate_matvec_t(m.ctx_w1, da2, du1);

  std::vector<double> da1(h);
  for (int k = 0; k < h; ++k) da1[k] = act.a1[k] > 0.0 ? du1[k] : 0.0;
  detail::accumulate_outer(g.ctx_w0, da1, s.y);
  for (int k = 0; k < h; ++k) g.ctx_b0.data[k] += da1[k];
  return loss;
}

// The bias and the two local features enter the pre-clamp head linearly, so
// with everything else frozen their squared-error optimum is a 3x3 solve.
// Samples with a zero target only count while their head is positive; the
// solve is repeated until that set settles.
void refit_cost_affine(IcnnModel& m, const std::vector<Sample>& samples, ExecPolicy policy) {
  const int n = static_cast<int>(samples.size());
  std::vector<Eigen::Vector4d> rows(samples.size());
  std::vector<double> rest(samples.size());
#pragma omp parallel for schedule(static) if (policy == ExecPolicy::Parallel)
  for (int k = 0; k < n; ++k) {
    detail::Activations act;
    detail::forward_pass(m, samples[k].y, samples[k].x, act);
    const double s = act.unquenched / m.cost_scale;
    const double e = act.exposure / m.cost_scale;
    rest[k] = act.raw_cost - m.cost_b.data[0] - m.cost_local.data[0] * s - m.cost_local.data[1] * e;
    rows[k] = Eigen::Vector4d(1.0, s, e, (samples[k].cost - act.unquenched) / m.cost_scale - rest[k]);
  }

  Eigen::Vector3d sol(m.cost_b.data[0], m.cost_local.data[0], m.cost_local.data[1]);
  std::vector<std::uint8_t> active(samples.size(), 1), previous;
  for (int round = 0; round < 8 && active != previous; ++round) {
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atb = Eigen::Vector3d::Zero();
    for (int k = 0; k < n; ++k) {
      if (!active[k]) continue;
      ata += rows[k].head<3>() * rows[k].head<3>().transpose();
      atb += rows[k].head<3>() * rows[k][3];
    }
    ata.diagonal().array() += 1e-9;
    // k0, k1 >= 0: try every active set and keep the best feasible solve
    double best = std::numeric_limits<double>::infinity();
    Eigen::Vector3d next = sol;
    for (int mask = 0; mask < 4; ++mask) {
      Eigen::Matrix3d a = ata;
      Eigen::Vector3d b = atb;
      for (int f = 0; f < 2; ++f)
        if (mask >> f & 1) {
          a.row(f + 1).setZero();
          a.col(f + 1).setZero();
          a(f + 1, f + 1) = 1.0;
          b[f + 1] = 0.0;
        }
      const Eigen::Vector3d x = a.ldlt().solve(b);
      if (!x.allFinite() || x[1] < 0.0 || x[2] < 0.0) continue;
      const double obj = x.dot(ata * x) - 2.0 * x.dot(atb);
      if (obj < best) {
        best = obj;
        next = x;
      }
    }
    if (!std::isfinite(best)) break;
    sol = next;
    previous = active;
    for (int k = 0; k < n; ++k) {
      const double target = rows[k][3] + rest[k];
      const double head = rest[k] + sol.dot(rows[k].head<3>());
      active[k] = target > 0.0 || head > 0.0;
    }
  }
  m.cost_b.data[0] = sol[0];
  m.cost_local.data[0] = sol[1];
  m.cost_local.data[1] = sol[2];
}

void zero(IcnnModel& g) {
  for (Matrix* m : g.parameters()) std::fill(m->data.begin(), m->data.end(), 0.0);
}

TrainingResult train(std::span<const TrainingPair> pairs, const TrainConfig& cfg,
                     std::uint64_t seed, bool with_quench) {
  if (pairs.empty()) throw std::invalid_argument("training set is empty");
  const int w = pairs.front().width;
  const int h = pairs.front().height;
  for (const auto& p : pairs) {
    if (p.width != w || p.height != h)
      throw std::invalid_argument("training pairs have mixed grid sizes");
    if (with_quench && !p.quench)
      throw std::invalid_argument("SQ training pair is missing quench data");
    if (!with_quench && p.quench)
      throw std::invalid_argument("spread training pair carries quench data");
  }
  if (cfg.batch < 1 || cfg.epochs < 1) throw std::invalid_argument("bad training config");

  const int hidden = cfg.hidden > 0 ? cfg.hidden : (w * h <= 400 ? 64 : 128);
  TrainingResult result;
  result.model = make_icnn(w, h, hidden, with_quench, derive_seed(seed, 1));
  IcnnModel& model = result.model;

  const auto samples = to_samples(pairs, with_quench);
  if (with_quench) {
    double mean = 0.0;
    for (const auto& s : samples) {
      double burning = 0.0;
      for (std::size_t c = 0; c < s.y.size(); ++c) burning += s.y[c] * (1.0 - s.x[c]);
      mean += s.cost - burning;
    }
    model.cost_b.data[0] = mean / samples.size() / model.cost_scale;
  }
  const double cost_weight = with_quench ? cfg.cost_weight : 0.0;

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, 2));

  const int batch = cfg.batch;
  std::vector<IcnnModel> grads(static_cast<std::size_t>(batch), model.zeros_like());
  std::vector<double> losses(static_cast<std::size_t>(batch));
  IcnnModel total = model.zeros_like();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = cfg.learning_rate * std::pow(cfg.lr_decay, epoch / std::max(1, cfg.decay_every));
    double epoch_loss = 0.0;

    for (std::size_t start = 0; start < order.size(); start += batch) {
      const int count = static_cast<int>(std::min<std::size_t>(batch, order.size() - start));
#pragma omp parallel for schedule(static) if (cfg.policy == ExecPolicy::Parallel)
      for (int b = 0; b < count; ++b) {
        zero(grads[b]);
        detail::Activations act;
        losses[b] = backprop(model, samples[order[start + b]], cost_weight, act, grads[b]);
      }
      // fixed-order reduction keeps serial and parallel runs bit-identical
      zero(total);
      auto tp = total.parameters();
      for (int b = 0; b < count; ++b) {
        epoch_loss += losses[b];
        auto gp = grads[b].parameters();
        for (std::size_t k = 0; k < tp.size(); ++k)
          for (std::size_t e = 0; e < tp[k]->data.size(); ++e) tp[k]->data[e] += gp[k]->data[e];
      }
      auto mp = model.parameters();
      const double step = lr / count;
      for (std::size_t k = 0; k < mp.size(); ++k)
        for (std::size_t e = 0; e < mp[k]->data.size(); ++e) mp[k]->data[e] -= step * tp[k]->data[e];
      model.project();
    }
    result.epoch_loss.push_back(epoch_loss / samples.size());
  }
  if (with_quench) refit_cost_affine(model, samples, cfg.policy);
  return result;
}

}  // namespace

TrainingResult train_s(std::span<const TrainingPair> pairs, const TrainConfig& cfg,
                       std::uint64_t seed) {
  return train(pairs, cfg, seed, false);
}

TrainingResult train_sq(std::span<const TrainingPair> pairs, const TrainConfig& cfg,
                        std::uint64_t seed) {
  return train(pairs, cfg, seed, true);
}

}  // namespace wildfire
