#pragma once

// Shared fixtures for the unit tests and the acceptance runner.

#include <algorithm>
#include <optional>
#include <random>
#include <vector>

#include "wildfire/icnn.hpp"
#include "wildfire/model.hpp"

namespace wildfire::testing {

// A small SQ model on 8x8 grids. The solver must be exact for any convex
// head, so a short training run is enough.
inline IcnnModel tiny_sq_model(std::uint64_t seed = 4) {
  const auto pairs = augment(generate_pairs(40, 8, 6, true, 3));
  TrainConfig cfg;
  cfg.epochs = 8;
  cfg.hidden = 16;
  return train_sq(pairs, cfg, seed).model;
}

struct TinyCase {
  Scenario scenario;
  FireMap map;
  Instance instance;
};

// Random 8x8 instance with I * J * L <= max_product, or nullopt if the draw
// came out larger.
inline std::optional<TinyCase> random_tiny_case(std::mt19937_64& rng, int max_product = 16) {
  TinyCase tc;
  Scenario& sc = tc.scenario;
  sc.width = sc.height = 8;
  std::uniform_int_distribution<int> pos(0, 7);
  const int J = 1 + static_cast<int>(rng() % 2);
  const int L = 1 + static_cast<int>(rng() % 2);
  for (int j = 0; j < J; ++j) sc.bases.push_back({pos(rng), pos(rng)});
  for (int l = 0; l < L; ++l)
    sc.drones.push_back({static_cast<int>(rng() % J), 10.0 + static_cast<double>(rng() % 30)});
  const int I = std::min(4, 1 + static_cast<int>(rng() % std::max(1, max_product / (J * L))));
  tc.map = FireMap(8, 8, true);
  for (int i = 0; i < I; ++i) tc.map.ignite(pos(rng), pos(rng), 0.5 + (rng() % 20) / 10.0);
  sc.w1 = 1.0 + static_cast<double>(rng() % 5);
  sc.w2 = static_cast<double>(rng() % 3);
  sc.w3 = 0.05 * static_cast<double>(rng() % 5);
  sc.period = 3.0 + static_cast<double>(rng() % 10);
  sc.speed = 2.0 + static_cast<double>(rng() % 4);
  sc.safe_distance = static_cast<double>(rng() % 3);
  sc.robust.sigma = 0.2 + (rng() % 5) / 10.0;
  sc.robust.correlation_length = 1.0 + static_cast<double>(rng() % 3);
  sc.risk = 0.05 + static_cast<double>(rng() % 4) * 0.1;
  sc.validate();
  tc.instance = extract_instance(tc.map, sc, FleetState::fresh(L));
  if (tc.instance.fire_count() * J * L > max_product) return std::nullopt;
  return tc;
}

// B B^T + eps I with entries of B uniform in [-1, 1].
inline std::vector<double> random_pd(std::mt19937_64& rng, int n, double eps = 0.05) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> b(static_cast<std::size_t>(n) * n);
  for (double& v : b) v = u(rng);
  std::vector<double> s(b.size(), 0.0);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      double acc = r == c ? eps : 0.0;
      for (int k = 0; k < n; ++k) acc += b[r * n + k] * b[c * n + k];
      s[r * n + c] = acc;
    }
  return s;
}

// Every 0/1 vector of length n, in counting order.
inline std::vector<std::vector<double>> all_binary(int n) {
  std::vector<std::vector<double>> out;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    std::vector<double> x(n);
    for (int e = 0; e < n; ++e) x[e] = (mask >> e) & 1u;
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace wildfire::testing
