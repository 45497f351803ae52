#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wildfire/parallel.hpp"

namespace wildfire {

enum class WindDirection { N, NE, E, SE, S, SW, W, NW };

WindDirection parse_wind_direction(const std::string& name);
const char* to_string(WindDirection d);

struct Weather {
  WindDirection wind_direction = WindDirection::N;
  double wind_speed = 0.0;  // [0, 1]
  double moisture = 0.0;    // [0, 1]

  void validate() const;
};

// Grid of fire intensities over a fuel mask. Row-major, x is the column and
// y the row (y grows southward). A cell burns iff its intensity is positive.
struct FireMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> fuel;
  std::vector<double> intensity;

  FireMap() = default;
  FireMap(int w, int h, bool all_fuel = true);

  std::size_t cells() const { return intensity.size(); }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(x);
  }
  bool burning(std::size_t c) const { return intensity[c] > 0.0; }
  bool in_bounds(int x, int y) const {
    return x >= 0 && y >= 0 && x < width && y < height;
  }

  // Ignites a fuel cell (adds fuel if missing).
  void ignite(int x, int y, double g);

  std::vector<std::uint8_t> burning_mask() const;
  std::size_t burning_count() const;

  // Throws std::invalid_argument on a broken invariant.
  void validate() const;

  bool operator==(const FireMap&) const = default;
};

struct SpreadConfig {
  double base_p = 0.3;
  double decay = 0.0;  // fraction of intensity lost per step
  double intensity_cap = 3.0;
  double ignition_intensity = 1.0;
  double exhaustion_threshold = 1e-9;
};

enum class BurnCostMode { CellCount, IntensitySum };

// Multiplier in [0.2, 1] for spread from a burning cell towards a neighbour at
// offset (dx, dy): 1 downwind, decreasing with the angle as wind speed grows.
double wind_alignment(const Weather& w, int dx, int dy);

// Probability that a non-burning fuel cell ignites this step, combining all
// burning 8-neighbours independently.
double ignition_probability(const FireMap& map, int x, int y, const Weather& w,
                            const SpreadConfig& cfg);

FireMap step_spread(const FireMap& map, const Weather& weather,
                    std::uint64_t seed, const SpreadConfig& cfg = {},
                    ExecPolicy policy = ExecPolicy::Parallel);

// Each drone removes one unit of intensity. A cell driven to zero is
// extinguished and its fuel is spent, so it cannot re-ignite.
// Throws std::invalid_argument when a quench targets a non-burning cell.
FireMap apply_quench(const FireMap& map, std::span<const int> quench);

double burn_cost(const FireMap& map, BurnCostMode mode = BurnCostMode::CellCount);

// One consecutive-snapshot training example. `before` uses 0 (no fire),
// 1 (burning) and 2 (burning, quenched this step); `after` uses 0/1.
struct TrainingPair {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> before;
  std::vector<std::uint8_t> after;
  std::optional<std::vector<std::uint8_t>> quench;
  double next_cost = 0.0;

  bool operator==(const TrainingPair&) const = default;
};

struct PairGenConfig {
  SpreadConfig spread;
  double fuel_density = 0.92;
  int min_ignitions = 1;
  int max_ignitions = 3;
  int max_burn_in = 3;
  // Per-step quench rate is drawn from these levels; each burning cell is then
  // fully quenched with that probability.
  std::vector<double> quench_levels = {0.0, 0.15, 0.3, 0.5, 0.75, 1.0};
};

// A simulated fire episode; maps[k+1] = step_spread(apply_quench(maps[k],
// quench[k]), weather, step_seeds[k]).
struct Episode {
  Weather weather;
  std::vector<FireMap> maps;
  std::vector<std::vector<int>> quench;
  std::vector<std::uint64_t> step_seeds;
};

Weather random_weather(std::uint64_t seed);
FireMap random_environment(int width, int height, std::uint64_t seed,
                           const PairGenConfig& cfg);

Episode simulate_episode(int size, int horizon, bool with_quench,
                         std::uint64_t seed, const PairGenConfig& cfg = {});

std::vector<TrainingPair> generate_pairs(int n_envs, int size, int horizon,
                                         bool with_quench, std::uint64_t seed,
                                         const PairGenConfig& cfg = {},
                                         ExecPolicy policy = ExecPolicy::Parallel);

// 8 dihedral symmetries followed by 4 one-cell cyclic translations.
std::vector<TrainingPair> augment(std::span<const TrainingPair> pairs);

inline constexpr int kAugmentFactor = 12;

// --- text / json-lines formats ---------------------------------------------

void write_map_text(std::ostream& os, const FireMap& map);
void write_fuel_text(std::ostream& os, const FireMap& map);
FireMap read_map_text(std::istream& intensity, std::istream* fuel = nullptr);

void save_map(const std::string& path, const FireMap& map);
FireMap load_map(const std::string& path, const std::string& fuel_path = {});

void write_pairs_jsonl(std::ostream& os, std::span<const TrainingPair> pairs);
std::vector<TrainingPair> read_pairs_jsonl(std::istream& is);

void save_pairs(const std::string& path, std::span<const TrainingPair> pairs);
std::vector<TrainingPair> load_pairs(const std::string& path);

}  // namespace wildfire
