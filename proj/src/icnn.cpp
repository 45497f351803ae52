#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>

#include "icnn_internal.hpp"
#include "wildfire/icnn.hpp"

namespace wildfire {

namespace detail {

void affine(const Matrix& w, std::span<const double> v, const Matrix& b,
            std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(w.rows), 0.0);
  for (int r = 0; r < w.rows; ++r) {
    const double* row = &w.data[static_cast<std::size_t>(r) * w.cols];
    double s = b.data[r];
    for (int c = 0; c < w.cols; ++c) s += row[c] * v[c];
    out[r] = s;
  }
}

void accumulate_matvec(const Matrix& w, std::span<const double> v, std::vector<double>& out) {
  for (int r = 0; r < w.rows; ++r) {
    const double* row = &w.data[static_cast<std::size_t>(r) * w.cols];
    double s = 0.0;
    for (int c = 0; c < w.cols; ++c) s += row[c] * v[c];
    out[r] += s;
  }
}

void accumulate_matvec_t(const Matrix& w, std::span<const double> v, std::vector<double>& out) {
  for (int r = 0; r < w.rows; ++r) {
    const double vr = v[r];
    if (vr == 0.0) continue;
    const double* row = &w.data[static_cast<std::size_t>(r) * w.cols];
    for (int c = 0; c < w.cols; ++c) out[c] += row[c] * vr;
  }
}

void accumulate_outer(Matrix& g, std::span<const double> a, std::span<const double> b) {
  for (int r = 0; r < g.rows; ++r) {
    const double ar = a[r];
    if (ar == 0.0) continue;
    double* row = &g.data[static_cast<std::size_t>(r) * g.cols];
    for (int c = 0; c < g.cols; ++c) row[c] += ar * b[c];
  }
}

namespace {

void relu(const std::vector<double>& in, std::vector<double>& out) {
  out.resize(in.size());
  for (std::size_t k = 0; k < in.size(); ++k) out[k] = in[k] > 0.0 ? in[k] : 0.0;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

void forward_pass(const IcnnModel& m, std::span<const double> y, std::span<const double> x,
                  Activations& act) {
  const int n = m.cells();
  if (static_cast<int>(y.size()) != n)
    throw std::invalid_argument("state size does not match the model grid");
  const bool has_x = !x.empty();
  if (has_x && static_cast<int>(x.size()) != n)
    throw std::invalid_argument("quench size does not match the model grid");

  act.self.assign(n, 0.0);
  for (int c = 0; c < n; ++c) act.self[c] = y[c] * (has_x ? 1.0 - x[c] : 1.0);
  act.neighbours.assign(n, 0.0);
  for (int cy = 0; cy < m.height; ++cy)
    for (int cx = 0; cx < m.width; ++cx) {
      double s = 0.0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int nx = cx + dx;
          const int ny = cy + dy;
          if (nx < 0 || ny < 0 || nx >= m.width || ny >= m.height) continue;
          s += act.self[ny * m.width + nx];
        }
      act.neighbours[cy * m.width + cx] = s;
    }

  affine(m.ctx_w0, y, m.ctx_b0, act.a1);
  relu(act.a1, act.u1);
  affine(m.ctx_w1, act.u1, m.ctx_b1, act.a2);
  relu(act.a2, act.u2);

  affine(m.burn_w, act.u2, m.burn_b, act.logits);
  const double l_self = m.burn_local.data[0];
  const double l_nb = m.burn_local.data[1];
  const double l_q = m.burn_local.data[2];
  for (int c = 0; c < n; ++c)
    act.logits[c] += l_self * act.self[c] + l_nb * act.neighbours[c] + (has_x ? l_q * x[c] : 0.0);

  act.unquenched = 0.0;
  act.exposure = 0.0;
  for (int c = 0; c < n; ++c) {
    act.unquenched += act.self[c];
    if (y[c] <= 0.0) act.exposure += act.neighbours[c];
  }
  double raw = m.cost_b.data[0] + dot(m.cost_u.data, act.u2) +
               (m.cost_local.data[0] * act.unquenched + m.cost_local.data[1] * act.exposure) /
                   m.cost_scale;
  if (m.has_decision) {
    std::vector<double> zeros;
    std::span<const double> xv = x;
    if (!has_x) {
      zeros.assign(n, 0.0);
      xv = zeros;
    }
    affine(m.cvx_x0, xv, m.cvx_b0, act.p1);
    accumulate_matvec(m.cvx_u0, act.u1, act.p1);
    relu(act.p1, act.z1);
    affine(m.cvx_z1, act.z1, m.cvx_b1, act.p2);
    accumulate_matvec(m.cvx_x1, xv, act.p2);
    accumulate_matvec(m.cvx_u1, act.u2, act.p2);
    relu(act.p2, act.z2);
    raw += dot(m.cost_z.data, act.z2) + dot(m.cost_x.data, xv);
  }
  act.raw_cost = raw;
  act.cost = act.unquenched + m.cost_scale * std::max(0.0, raw);
}

}  // namespace detail

std::vector<Matrix*> IcnnModel::parameters() {
  return {&ctx_w0, &ctx_b0, &ctx_w1, &ctx_b1, &burn_w, &burn_b,
          &burn_local, &cvx_x0, &cvx_u0, &cvx_b0, &cvx_z1, &cvx_x1,
          &cvx_u1, &cvx_b1, &cost_z, &cost_x, &cost_u, &cost_b, &cost_local};
}

std::vector<const Matrix*> IcnnModel::parameters() const {
  auto p = const_cast<IcnnModel*>(this)->parameters();
  return {p.begin(), p.end()};
}

void IcnnModel::project() {
  for (Matrix* m : {&cvx_z1, &cost_z, &cost_local})
    for (double& w : m->data) w = std::max(w, 0.0);
  for (Matrix* m : {&cvx_x0, &cvx_x1, &cost_x})
    for (double& w : m->data) w = std::min(w, 0.0);
}

double IcnnModel::min_constrained_weight() const {
  double lo = std::numeric_limits<double>::infinity();
  for (const Matrix* m : {&cvx_z1, &cost_z, &cost_local})
    for (double w : m->data) lo = std::min(lo, w);
  for (const Matrix* m : {&cvx_x0, &cvx_x1, &cost_x})
    for (double w : m->data) lo = std::min(lo, -w);
  return lo;
}

IcnnModel IcnnModel::zeros_like() const {
  IcnnModel z = *this;
  for (Matrix* m : z.parameters()) std::fill(m->data.begin(), m->data.end(), 0.0);
  return z;
}

IcnnModel make_icnn(int width, int height, int hidden, bool has_decision,
                    std::uint64_t seed) {
  if (width <= 0 || height <= 0 || hidden <= 0)
    throw std::invalid_argument("model dimensions must be positive");
  IcnnModel m;
  m.width = width;
  m.height = height;
  m.hidden = hidden;
  m.has_decision = has_decision;
  const int n = width * height;
  m.cost_scale = std::max(1.0, n / 10.0);

  std::mt19937_64 rng(seed);
  auto gaussian = [&](int r, int c, double fan_in) {
    Matrix w(r, c);
    std::normal_distribution<double> d(0.0, 1.0 / std::sqrt(fan_in));
    for (double& v : w.data) v = d(rng);
    return w;
  };
  auto positive = [&](int r, int c, double fan_in) {
    Matrix w(r, c);
    std::uniform_real_distribution<double> d(0.0, 1.0 / fan_in);
    for (double& v : w.data) v = d(rng);
    return w;
  };

  m.ctx_w0 = gaussian(hidden, n, std::max(1.0, n / 10.0));
  m.ctx_b0 = Matrix(hidden, 1);
  m.ctx_w1 = gaussian(hidden, hidden, hidden);
  m.ctx_b1 = Matrix(hidden, 1);
  m.burn_w = gaussian(n, hidden, 4.0 * hidden);
  m.burn_b = Matrix(n, 1, -2.0);
  m.burn_local = Matrix(1, 3);
  if (has_decision) {
    m.cvx_x0 = positive(hidden, n, std::max(1.0, n / 10.0));
    m.cvx_u0 = gaussian(hidden, hidden, hidden);
    m.cvx_b0 = Matrix(hidden, 1, 0.1);
    m.cvx_z1 = positive(hidden, hidden, hidden);
    m.cvx_x1 = positive(hidden, n, std::max(1.0, n / 10.0));
    m.cvx_u1 = gaussian(hidden, hidden, hidden);
    m.cvx_b1 = Matrix(hidden, 1, 0.1);
    m.cost_z = positive(1, hidden, hidden);
    m.cost_x = Matrix(1, n);
    for (Matrix* w : {&m.cvx_x0, &m.cvx_x1})
      for (double& v : w->data) v = -v;
  }
  m.cost_u = gaussian(1, hidden, hidden);
  m.cost_b = Matrix(1, 1);
  m.cost_local = Matrix(1, 2);
  return m;
}

namespace {

std::vector<double> state_of(const FireMap& map) {
  std::vector<double> y(map.cells());
  for (std::size_t c = 0; c < map.cells(); ++c) y[c] = map.burning(c) ? 1.0 : 0.0;
  return y;
}

void check_size(const IcnnModel& model, const FireMap& map) {
  if (map.width != model.width || map.height != model.height)
    throw std::invalid_argument("map size " + std::to_string(map.width) + "x" +
                                std::to_string(map.height) + " does not match model " +
                                std::to_string(model.width) + "x" + std::to_string(model.height));
}

FireMap threshold_map(const FireMap& src, const std::vector<double>& logits) {
  FireMap out = src;
  for (std::size_t c = 0; c < src.cells(); ++c) {
    // sigmoid(logit) >= 0.5  <=>  logit >= 0
    const bool burn = logits[c] >= 0.0;
    out.intensity[c] = burn ? 1.0 : 0.0;
    if (burn) out.fuel[c] = 1;
  }
  return out;
}

}  // namespace

ForwardOutput forward(const IcnnModel& model, std::span<const double> state,
                      std::span<const double> quench) {
  detail::Activations act;
  detail::forward_pass(model, state, quench, act);
  ForwardOutput out;
  out.burn_probability.resize(act.logits.size());
  for (std::size_t c = 0; c < act.logits.size(); ++c)
    out.burn_probability[c] = detail::sigmoid(act.logits[c]);
  out.cost = act.cost;
  return out;
}

FireMap predict_s(const IcnnModel& model, const FireMap& map) {
  check_size(model, map);
  const auto y = state_of(map);
  detail::Activations act;
  detail::forward_pass(model, y, {}, act);
  return threshold_map(map, act.logits);
}

SqPrediction predict_sq(const IcnnModel& model, const FireMap& map,
                        std::span<const double> quench) {
  check_size(model, map);
  if (quench.size() != map.cells())
    throw std::invalid_argument("quench plan size does not match the map");
  const auto y = state_of(map);
  detail::Activations act;
  detail::forward_pass(model, y, quench, act);
  return {threshold_map(map, act.logits), act.cost};
}

double predict_cost(const IcnnModel& model, std::span<const double> state,
                    std::span<const double> quench) {
  detail::Activations act;
  detail::forward_pass(model, state, quench, act);
  return act.cost;
}

CostCut cost_subgradient(const IcnnModel& model, std::span<const double> state,
                         std::span<const double> quench) {
  detail::Activations act;
  detail::forward_pass(model, state, quench, act);
  const int n = model.cells();
  CostCut cut;
  cut.value = act.cost;
  cut.gradient.assign(n, 0.0);
  if (!model.has_decision) return cut;
  for (int c = 0; c < n; ++c) cut.gradient[c] = -state[c];
  if (act.raw_cost <= 0.0) return cut;

  const double s = model.cost_scale;
  for (int c = 0; c < n; ++c) cut.gradient[c] += s * model.cost_x.data[c];
  // S and E terms: quenching cell c removes it from S and removes its edges to
  // unburnt neighbours from E.
  for (int cy = 0; cy < model.height; ++cy)
    for (int cx = 0; cx < model.width; ++cx) {
      const int c = cy * model.width + cx;
      if (state[c] <= 0.0) continue;
      int unburnt = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = cx + dx;
          const int ny = cy + dy;
          if ((dx || dy) && nx >= 0 && ny >= 0 && nx < model.width && ny < model.height &&
              state[ny * model.width + nx] <= 0.0)
            ++unburnt;
        }
      cut.gradient[c] -= state[c] * (model.cost_local.data[0] + model.cost_local.data[1] * unburnt);
    }

  const int h = model.hidden;
  std::vector<double> dp2(h);
  for (int k = 0; k < h; ++k) dp2[k] = act.p2[k] > 0.0 ? s * model.cost_z.data[k] : 0.0;
  detail::accumulate_matvec_t(model.cvx_x1, dp2, cut.gradient);
  std::vector<double> dz1(h, 0.0);
  detail::accumulate_matvec_t(model.cvx_z1, dp2, dz1);
  for (int k = 0; k < h; ++k) dz1[k] = act.p1[k] > 0.0 ? dz1[k] : 0.0;
  detail::accumulate_matvec_t(model.cvx_x0, dz1, cut.gradient);
  return cut;
}

CostCut cost_subgradient(const IcnnModel& model, const FireMap& map,
                         std::span<const double> quench) {
  check_size(model, map);
  const auto y = state_of(map);
  return cost_subgradient(model, y, quench);
}

MetricsReport metrics(const Confusion& c) {
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  MetricsReport r;
  r.confusion = c;
  r.sensitivity = ratio(c.tp, c.tp + c.fn);
  r.specificity = ratio(c.tn, c.tn + c.fp);
  r.precision = ratio(c.tp, c.tp + c.fp);
  r.accuracy = ratio(c.tp + c.tn, c.total());
  return r;
}

MetricsReport metrics(std::span<const std::uint8_t> predictions,
                      std::span<const std::uint8_t> labels) {
  if (predictions.size() != labels.size())
    throw std::invalid_argument("prediction and label shapes differ");
  Confusion c;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const bool p = predictions[k] != 0;
    const bool l = labels[k] != 0;
    if (p && l) ++c.tp;
    else if (p) ++c.fp;
    else if (l) ++c.fn;
    else ++c.tn;
  }
  return metrics(c);
}

MetricsReport evaluate(const IcnnModel& model, std::span<const TrainingPair> pairs,
                       ExecPolicy policy) {
  for (const auto& p : pairs)
    if (p.width != model.width || p.height != model.height)
      throw std::invalid_argument("pair size does not match model");
  std::vector<Confusion> per_pair(pairs.size());
  const long count = static_cast<long>(pairs.size());
#pragma omp parallel for schedule(static) if (policy == ExecPolicy::Parallel)
  for (long k = 0; k < count; ++k) {
    const auto& p = pairs[k];
    std::vector<double> y(p.before.size());
    std::vector<double> x;
    for (std::size_t c = 0; c < y.size(); ++c) y[c] = p.before[c] > 0 ? 1.0 : 0.0;
    if (model.has_decision) {
      x.assign(y.size(), 0.0);
      for (std::size_t c = 0; c < y.size(); ++c) x[c] = p.before[c] == 2 ? 1.0 : 0.0;
    }
    detail::Activations act;
    detail::forward_pass(model, y, x, act);
    std::vector<std::uint8_t> pred(y.size());
    for (std::size_t c = 0; c < y.size(); ++c) pred[c] = act.logits[c] >= 0.0 ? 1 : 0;
    per_pair[k] = metrics(pred, p.after).confusion;
  }
  Confusion total;
  for (const auto& c : per_pair) {
    total.tp += c.tp;
    total.fp += c.fp;
    total.tn += c.tn;
    total.fn += c.fn;
  }
  return metrics(total);
}

// --- checkpoint --------------------------------------------------------------

namespace {

constexpr char kMagic[5] = {'I', 'C', 'N', 'N', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int k = 0; k < 4; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& os, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(bits >> (8 * k));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("checkpoint truncated");
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(b[k]) << (8 * k);
  return v;
}

double get_f64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("checkpoint truncated");
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  return std::bit_cast<double>(v);
}

void put_matrix(std::ostream& os, const Matrix& m) {
  put_u32(os, static_cast<std::uint32_t>(m.rows));
  put_u32(os, static_cast<std::uint32_t>(m.cols));
  for (double v : m.data) put_f64(os, v);
}

Matrix get_matrix(std::istream& is) {
  Matrix m;
  m.rows = static_cast<int>(get_u32(is));
  m.cols = static_cast<int>(get_u32(is));
  const auto n = static_cast<std::size_t>(m.rows) * static_cast<std::size_t>(m.cols);
  if (n > (std::size_t{1} << 28)) throw std::runtime_error("checkpoint layer too large");
  m.data.resize(n);
  for (double& v : m.data) v = get_f64(is);
  return m;
}

}  // namespace

void write_model(std::ostream& os, const IcnnModel& model) {
  os.write(kMagic, sizeof kMagic);
  const auto params = model.parameters();
  put_u32(os, static_cast<std::uint32_t>(params.size() + 1));
  Matrix header(1, 5);
  header.data = {double(model.width), double(model.height), double(model.hidden),
                 model.has_decision ? 1.0 : 0.0, model.cost_scale};
  put_matrix(os, header);
  for (const Matrix* m : params) put_matrix(os, *m);
}

IcnnModel read_model(std::istream& is) {
  char magic[5];
  if (!is.read(magic, 5) || std::memcmp(magic, kMagic, 5) != 0)
    throw std::runtime_error("not an ICNN1 checkpoint");
  IcnnModel model;
  auto params = model.parameters();
  const auto layers = get_u32(is);
  if (layers != params.size() + 1) throw std::runtime_error("checkpoint layer count mismatch");
  const Matrix header = get_matrix(is);
  if (header.rows != 1 || header.cols != 5) throw std::runtime_error("bad checkpoint header");
  model.width = static_cast<int>(header.data[0]);
  model.height = static_cast<int>(header.data[1]);
  model.hidden = static_cast<int>(header.data[2]);
  model.has_decision = header.data[3] != 0.0;
  model.cost_scale = header.data[4];
  for (Matrix* m : params) *m = get_matrix(is);
  const int n = model.cells();
  if (model.ctx_w0.cols != n || model.burn_w.rows != n || model.burn_local.data.size() != 3)
    throw std::runtime_error("checkpoint shapes inconsistent with header");
  return model;
}

void save_model(const std::string& path, const IcnnModel& model) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  write_model(f, model);
}

IcnnModel load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open model '" + path + "'");
  return read_model(f);
}

}  // namespace wildfire
