#include "wildfire/firegrid.hpp"

#include <omp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

#include "wildfire/rng.hpp"

namespace wildfire {

int max_threads() { return omp_get_max_threads(); }

namespace {

constexpr std::array<const char*, 8> kWindNames = {"N", "NE", "E", "SE",
                                                   "S", "SW", "W", "NW"};
// Unit-free direction the wind blows towards; y grows southward.
constexpr std::array<std::array<int, 2>, 8> kWindVector = {
    {{0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}}};

constexpr std::array<std::array<int, 2>, 8> kNeighbours = {
    {{-1, -1}, {0, -1}, {1, -1}, {-1, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}}};

}  // namespace

WindDirection parse_wind_direction(const std::string& name) {
  for (std::size_t k = 0; k < kWindNames.size(); ++k) {
    if (name == kWindNames[k]) return static_cast<WindDirection>(k);
  }
  throw std::invalid_argument("unknown wind direction '" + name + "'");
}

const char* to_string(WindDirection d) {
  return kWindNames[static_cast<std::size_t>(d)];
}

void Weather::validate() const {
  if (!(wind_speed >= 0.0 && wind_speed <= 1.0))
    throw std::invalid_argument("wind_speed must lie in [0, 1]");
  if (!(moisture >= 0.0 && moisture <= 1.0))
    throw std::invalid_argument("moisture must lie in [0, 1]");
}

FireMap::FireMap(int w, int h, bool all_fuel) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw std::invalid_argument("map dimensions must be positive");
  const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  fuel.assign(n, all_fuel ? 1 : 0);
  intensity.assign(n, 0.0);
}

void FireMap::ignite(int x, int y, double g) {
  if (!in_bounds(x, y)) throw std::out_of_range("ignition outside map");
  if (!(g > 0.0)) throw std::invalid_argument("ignition intensity must be positive");
  const auto c = index(x, y);
  fuel[c] = 1;
  intensity[c] = g;
}

std::vector<std::uint8_t> FireMap::burning_mask() const {
  std::vector<std::uint8_t> mask(cells());
  for (std::size_t c = 0; c < cells(); ++c) mask[c] = burning(c) ? 1 : 0;
  return mask;
}

std::size_t FireMap::burning_count() const {
  return static_cast<std::size_t>(
      std::count_if(intensity.begin(), intensity.end(), [](double g) { return g > 0.0; }));
}

void FireMap::validate() const {
  if (width <= 0 || height <= 0) throw std::invalid_argument("map dimensions must be positive");
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (fuel.size() != n || intensity.size() != n)
    throw std::invalid_argument("map buffers do not match dimensions");
  for (std::size_t c = 0; c < n; ++c) {
    if (!(intensity[c] >= 0.0) || !std::isfinite(intensity[c]))
      throw std::invalid_argument("intensity must be finite and nonnegative");
    if (!fuel[c] && intensity[c] > 0.0)
      throw std::invalid_argument("non-fuel cell cannot burn");
  }
}

double wind_alignment(const Weather& w, int dx, int dy) {
  if (dx == 0 && dy == 0) return 1.0;
  const auto& wv = kWindVector[static_cast<std::size_t>(w.wind_direction)];
  const double dot = dx * wv[0] + dy * wv[1];
  const double cosine = dot / (std::hypot(dx, dy) * std::hypot(wv[0], wv[1]));
  return std::max(0.2, 1.0 + w.wind_speed * (cosine - 1.0));
}

double ignition_probability(const FireMap& map, int x, int y, const Weather& w,
                            const SpreadConfig& cfg) {
  const auto c = map.index(x, y);
  if (!map.fuel[c] || map.burning(c)) return 0.0;
  double survive = 1.0;
  for (const auto& [ox, oy] : kNeighbours) {
    const int sx = x + ox;
    const int sy = y + oy;
    if (!map.in_bounds(sx, sy) || !map.burning(map.index(sx, sy))) continue;
    // spread direction is source -> target
    const double p = std::clamp(
        cfg.base_p * wind_alignment(w, -ox, -oy) * (1.0 - w.moisture), 0.0, 1.0);
    survive *= 1.0 - p;
  }
  return 1.0 - survive;
}

FireMap step_spread(const FireMap& map, const Weather& weather, std::uint64_t seed,
                    const SpreadConfig& cfg, ExecPolicy policy) {
  FireMap next = map;
  const int h = map.height;
  const int w = map.width;
  const double keep = 1.0 - cfg.decay;
  const double ignite_g = std::min(cfg.ignition_intensity, cfg.intensity_cap);

#pragma omp parallel for schedule(static) if (policy == ExecPolicy::Parallel)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto c = map.index(x, y);
      if (map.burning(c)) {
        double g = std::min(map.intensity[c] * keep, cfg.intensity_cap);
        if (g <= cfg.exhaustion_threshold) {
          g = 0.0;
          next.fuel[c] = 0;
        }
        next.intensity[c] = g;
      } else if (map.fuel[c]) {
        const double p = ignition_probability(map, x, y, weather, cfg);
        if (p > 0.0 && uniform01(seed, c) < p) next.intensity[c] = ignite_g;
      }
    }
  }
  return next;
}

FireMap apply_quench(const FireMap& map, std::span<const int> quench) {
  if (quench.size() != map.cells())
    throw std::invalid_argument("quench plan size does not match the map");
  FireMap out = map;
  for (std::size_t c = 0; c < map.cells(); ++c) {
    const int k = quench[c];
    if (k < 0) throw std::invalid_argument("quench counts must be nonnegative");
    if (k == 0) continue;
    if (!map.burning(c))
      throw std::invalid_argument("quench assigned to non-burning cell " + std::to_string(c));
    const double g = map.intensity[c] - static_cast<double>(k);
    if (g <= 0.0) {
      out.intensity[c] = 0.0;
      out.fuel[c] = 0;
    } else {
      out.intensity[c] = g;
    }
  }
  return out;
}

double burn_cost(const FireMap& map, BurnCostMode mode) {
  if (mode == BurnCostMode::CellCount) return static_cast<double>(map.burning_count());
  double total = 0.0;
  for (double g : map.intensity) total += g;
  return total;
}

Weather random_weather(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Weather w;
  w.wind_direction = static_cast<WindDirection>(std::uniform_int_distribution<int>(0, 7)(rng));
  w.wind_speed = std::uniform_real_distribution<double>(0.0, 0.8)(rng);
  w.moisture = std::uniform_real_distribution<double>(0.0, 0.3)(rng);
  return w;
}

FireMap random_environment(int width, int height, std::uint64_t seed,
                           const PairGenConfig& cfg) {
  FireMap map(width, height, false);
  for (std::size_t c = 0; c < map.cells(); ++c)
    map.fuel[c] = uniform01(seed, c) < cfg.fuel_density ? 1 : 0;
  std::mt19937_64 rng(derive_seed(seed, 7));
  const int n = std::uniform_int_distribution<int>(cfg.min_ignitions, cfg.max_ignitions)(rng);
  std::uniform_int_distribution<int> px(width / 5, width - 1 - width / 5);
  std::uniform_int_distribution<int> py(height / 5, height - 1 - height / 5);
  for (int k = 0; k < n; ++k) map.ignite(px(rng), py(rng), cfg.spread.ignition_intensity);
  return map;
}

Episode simulate_episode(int size, int horizon, bool with_quench, std::uint64_t seed,
                         const PairGenConfig& cfg) {
  if (horizon < 2) throw std::invalid_argument("horizon must be at least 2");
  Episode ep;
  ep.weather = random_weather(derive_seed(seed, 1));
  FireMap map = random_environment(size, size, derive_seed(seed, 2), cfg);

  std::mt19937_64 rng(derive_seed(seed, 3));
  const int burn_in = std::uniform_int_distribution<int>(0, cfg.max_burn_in)(rng);
  for (int k = 0; k < burn_in; ++k)
    map = step_spread(map, ep.weather, derive_seed(seed, 50, k), cfg.spread, ExecPolicy::Serial);

  ep.maps.push_back(std::move(map));
  std::uniform_int_distribution<std::size_t> level(0, cfg.quench_levels.size() - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int k = 0; k + 1 < horizon; ++k) {
    const FireMap& cur = ep.maps.back();
    std::vector<int> q(cur.cells(), 0);
    if (with_quench && !cfg.quench_levels.empty()) {
      const double rate = cfg.quench_levels[level(rng)];
      for (std::size_t c = 0; c < cur.cells(); ++c) {
        if (cur.burning(c) && coin(rng) < rate)
          q[c] = static_cast<int>(std::ceil(cur.intensity[c]));
      }
    }
    const auto step_seed = derive_seed(seed, 100, k);
    FireMap next = step_spread(apply_quench(cur, q), ep.weather, step_seed, cfg.spread,
                               ExecPolicy::Serial);
    ep.quench.push_back(std::move(q));
    ep.step_seeds.push_back(step_seed);
    ep.maps.push_back(std::move(next));
  }
  return ep;
}

std::vector<TrainingPair> generate_pairs(int n_envs, int size, int horizon,
                                         bool with_quench, std::uint64_t seed,
                                         const PairGenConfig& cfg, ExecPolicy policy) {
  if (n_envs < 1) throw std::invalid_argument("n_envs must be at least 1");
  if (horizon < 2) throw std::invalid_argument("horizon must be at least 2");
  const std::size_t per_env = static_cast<std::size_t>(horizon - 1);
  std::vector<TrainingPair> pairs(static_cast<std::size_t>(n_envs) * per_env);

#pragma omp parallel for schedule(dynamic) if (policy == ExecPolicy::Parallel)
  for (int e = 0; e < n_envs; ++e) {
    const Episode ep = simulate_episode(size, horizon, with_quench, derive_seed(seed, 1000, e), cfg);
    for (std::size_t k = 0; k < per_env; ++k) {
      const FireMap& cur = ep.maps[k];
      const FireMap& nxt = ep.maps[k + 1];
      TrainingPair p;
      p.width = cur.width;
      p.height = cur.height;
      p.before.resize(cur.cells());
      for (std::size_t c = 0; c < cur.cells(); ++c)
        p.before[c] = cur.burning(c) ? (ep.quench[k][c] > 0 ? 2 : 1) : 0;
      p.after = nxt.burning_mask();
      if (with_quench) {
        std::vector<std::uint8_t> mask(cur.cells());
        for (std::size_t c = 0; c < cur.cells(); ++c) mask[c] = ep.quench[k][c] > 0 ? 1 : 0;
        p.quench = std::move(mask);
        p.next_cost = burn_cost(nxt);
      }
      pairs[static_cast<std::size_t>(e) * per_env + k] = std::move(p);
    }
  }
  return pairs;
}

namespace {

struct GridTransform {
  int rotations = 0;  // quarter turns clockwise
  bool mirror = false;
  int shift_x = 0;
  int shift_y = 0;
};

std::vector<std::uint8_t> transform_grid(const std::vector<std::uint8_t>& src, int w, int h,
                                         const GridTransform& t, int& out_w, int& out_h) {
  int cw = w;
  int ch = h;
  std::vector<std::uint8_t> cur = src;
  if (t.mirror) {
    std::vector<std::uint8_t> m(cur.size());
    for (int y = 0; y < ch; ++y)
      for (int x = 0; x < cw; ++x) m[y * cw + (cw - 1 - x)] = cur[y * cw + x];
    cur = std::move(m);
  }
  for (int r = 0; r < t.rotations; ++r) {
    // clockwise: (x, y) -> (h-1-y, x) in a grid of width h, height w
    std::vector<std::uint8_t> rot(cur.size());
    const int nw = ch;
    for (int y = 0; y < ch; ++y)
      for (int x = 0; x < cw; ++x) rot[x * nw + (ch - 1 - y)] = cur[y * cw + x];
    std::swap(cw, ch);
    cur = std::move(rot);
  }
  if (t.shift_x != 0 || t.shift_y != 0) {
    std::vector<std::uint8_t> s(cur.size());
    for (int y = 0; y < ch; ++y)
      for (int x = 0; x < cw; ++x) {
        const int nx = ((x + t.shift_x) % cw + cw) % cw;
        const int ny = ((y + t.shift_y) % ch + ch) % ch;
        s[ny * cw + nx] = cur[y * cw + x];
      }
    cur = std::move(s);
  }
  out_w = cw;
  out_h = ch;
  return cur;
}

std::vector<GridTransform> augmentation_set() {
  std::vector<GridTransform> out;
  for (int mirror = 0; mirror < 2; ++mirror)
    for (int r = 0; r < 4; ++r) out.push_back({r, mirror == 1, 0, 0});
  out.push_back({0, false, 1, 0});
  out.push_back({0, false, -1, 0});
  out.push_back({0, false, 0, 1});
  out.push_back({0, false, 0, -1});
  return out;
}

}  // namespace

std::vector<TrainingPair> augment(std::span<const TrainingPair> pairs) {
  if (pairs.empty()) throw std::invalid_argument("augment needs at least one pair");
  const auto transforms = augmentation_set();
  std::vector<TrainingPair> out;
  out.reserve(pairs.size() * transforms.size());
  for (const auto& p : pairs) {
    for (const auto& t : transforms) {
      TrainingPair q;
      q.next_cost = p.next_cost;
      q.before = transform_grid(p.before, p.width, p.height, t, q.width, q.height);
      int w2 = 0;
      int h2 = 0;
      q.after = transform_grid(p.after, p.width, p.height, t, w2, h2);
      if (p.quench) q.quench = transform_grid(*p.quench, p.width, p.height, t, w2, h2);
      out.push_back(std::move(q));
    }
  }
  return out;
}

}  // namespace wildfire
