#include <sstream>

#include "doctest.h"
#include "wildfire/firegrid.hpp"
#include "wildfire/rng.hpp"

using namespace wildfire;

namespace {

FireMap random_map(int w, int h, std::uint64_t seed, double p_fire) {
  FireMap m(w, h);
  for (std::size_t c = 0; c < m.cells(); ++c) {
    if (uniform01(seed, 2 * c) < 0.1) m.fuel[c] = 0;
    if (m.fuel[c] && uniform01(seed, 2 * c + 1) < p_fire)
      m.intensity[c] = 0.5 + 2.0 * uniform01(seed ^ 0xabc, c);
  }
  return m;
}

}  // namespace

TEST_CASE("nothing burns on an all-zero map") {
  FireMap m(20, 20);
  Weather w{WindDirection::E, 0.8, 0.0};
  CHECK(step_spread(m, w, 3) == m);
}

TEST_CASE("isolated fire stays alone") {
  FireMap m(5, 5, false);
  m.ignite(2, 2, 1.0);
  SpreadConfig cfg;
  cfg.base_p = 1.0;
  const FireMap next = step_spread(m, Weather{}, 11, cfg);
  CHECK(next.burning_count() == 1);
  CHECK(next.burning(next.index(2, 2)));
}

TEST_CASE("certain ignition lights the full neighbourhood") {
  FireMap m(20, 20);
  m.ignite(10, 10, 1.0);
  SpreadConfig cfg;
  cfg.base_p = 1.0;
  // calm air: every direction gets alignment 1
  const FireMap next = step_spread(m, Weather{WindDirection::N, 0.0, 0.0}, 5, cfg);
  CHECK(next.burning_count() == 9);
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) CHECK(next.burning(next.index(10 + dx, 10 + dy)));
}

TEST_CASE("wind alignment stays in its band and favours downwind") {
  Weather w{WindDirection::E, 1.0, 0.0};
  for (int dx = -1; dx <= 1; ++dx)
    for (int dy = -1; dy <= 1; ++dy) {
      if (dx == 0 && dy == 0) continue;
      const double a = wind_alignment(w, dx, dy);
      CHECK(a >= 0.2 - 1e-12);
      CHECK(a <= 1.0 + 1e-12);
    }
  CHECK(wind_alignment(w, 1, 0) == doctest::Approx(1.0));
  CHECK(wind_alignment(w, 1, 0) > wind_alignment(w, -1, 0));
  CHECK(wind_alignment(Weather{}, -1, 1) == doctest::Approx(1.0));
}

TEST_CASE("moisture damps ignition") {
  FireMap m(5, 5);
  m.ignite(2, 2, 1.0);
  SpreadConfig cfg;
  cfg.base_p = 0.6;
  const double dry = ignition_probability(m, 3, 2, Weather{WindDirection::N, 0.0, 0.0}, cfg);
  const double wet = ignition_probability(m, 3, 2, Weather{WindDirection::N, 0.0, 0.5}, cfg);
  CHECK(dry == doctest::Approx(0.6));
  CHECK(wet == doctest::Approx(0.3));
  m.fuel[m.index(3, 2)] = 0;
  CHECK(ignition_probability(m, 3, 2, Weather{}, cfg) == 0.0);
}

TEST_CASE("spread is seed-deterministic and serial equals parallel") {
  const Weather w{WindDirection::SW, 0.6, 0.1};
  for (int size : {20, 40, 97}) {
    const FireMap m = random_map(size, size, 100 + size, 0.05);
    const FireMap a = step_spread(m, w, 42, {}, ExecPolicy::Serial);
    const FireMap b = step_spread(m, w, 42, {}, ExecPolicy::Parallel);
    CHECK(a == b);
    CHECK(a == step_spread(m, w, 42, {}, ExecPolicy::Serial));
  }
}

TEST_CASE("burning set only grows without quench") {
  const Weather w{WindDirection::NE, 0.4, 0.2};
  FireMap m = random_map(30, 30, 9, 0.03);
  for (int t = 0; t < 6; ++t) {
    const FireMap next = step_spread(m, w, derive_seed(9, t));
    next.validate();
    for (std::size_t c = 0; c < m.cells(); ++c)
      if (m.burning(c)) CHECK(next.burning(c));
    m = next;
  }
}

TEST_CASE("quench arithmetic") {
  FireMap m(4, 1);
  m.intensity = {1.0, 2.4, 0.0, 3.0};
  std::vector<int> none(4, 0);
  CHECK(apply_quench(m, none) == m);

  std::vector<int> q{1, 2, 0, 1};
  const FireMap out = apply_quench(m, q);
  CHECK(out.intensity[0] == 0.0);
  CHECK(out.fuel[0] == 0);
  CHECK(out.intensity[1] == doctest::Approx(0.4));
  CHECK(out.intensity[3] == doctest::Approx(2.0));
  for (std::size_t c = 0; c < m.cells(); ++c) CHECK(out.intensity[c] <= m.intensity[c]);

  std::vector<int> bad{0, 0, 1, 0};
  CHECK_THROWS_AS(apply_quench(m, bad), std::invalid_argument);
  std::vector<int> negative{-1, 0, 0, 0};
  CHECK_THROWS_AS(apply_quench(m, negative), std::invalid_argument);
}

TEST_CASE("extinguished cells do not re-ignite") {
  FireMap m(3, 3);
  m.ignite(1, 1, 1.0);
  m.ignite(0, 1, 1.0);
  std::vector<int> q(9, 0);
  q[m.index(1, 1)] = 1;
  const FireMap after = apply_quench(m, q);
  SpreadConfig cfg;
  cfg.base_p = 1.0;
  const FireMap next = step_spread(after, Weather{}, 1, cfg);
  CHECK_FALSE(next.burning(next.index(1, 1)));
}

TEST_CASE("burn cost counts burning cells") {
  FireMap m(20, 20);
  CHECK(burn_cost(m) == 0.0);
  for (int k = 0; k < 44; ++k) m.ignite(k % 20, k / 20, 1.5);
  CHECK(burn_cost(m) == 44.0);
  CHECK(burn_cost(m, BurnCostMode::IntensitySum) == doctest::Approx(66.0));
  std::vector<int> q(m.cells(), 0);
  for (std::size_t c = 0; c < m.cells(); ++c)
    if (m.burning(c)) q[c] = 2;
  CHECK(burn_cost(apply_quench(m, q)) == 0.0);
}

TEST_CASE("pair counts") {
  CHECK(generate_pairs(1, 20, 2, false, 1).size() == 1);
  CHECK(generate_pairs(9, 20, 9, false, 1).size() == 72);
  CHECK_THROWS(generate_pairs(0, 20, 9, false, 1));
  CHECK_THROWS(generate_pairs(1, 20, 1, false, 1));
}

TEST_CASE("pair generation is policy independent") {
  const auto a = generate_pairs(6, 20, 5, true, 17, {}, ExecPolicy::Serial);
  const auto b = generate_pairs(6, 20, 5, true, 17, {}, ExecPolicy::Parallel);
  CHECK(a == b);
}

TEST_CASE("quenched cells are out in the next snapshot") {
  const auto pairs = generate_pairs(8, 20, 6, true, 23);
  int quenched = 0;
  for (const auto& p : pairs) {
    REQUIRE(p.quench.has_value());
    CHECK(p.next_cost >= 0.0);
    for (std::size_t c = 0; c < p.before.size(); ++c) {
      if ((*p.quench)[c]) {
        CHECK(p.before[c] == 2);
        CHECK(p.after[c] == 0);
        ++quenched;
      }
    }
  }
  CHECK(quenched > 0);
  for (const auto& p : generate_pairs(3, 20, 4, false, 23)) {
    CHECK_FALSE(p.quench.has_value());
    for (auto v : p.before) CHECK(v <= 1);
  }
}

TEST_CASE("episodes replay step by step") {
  const Episode ep = simulate_episode(20, 7, true, 31);
  REQUIRE(ep.maps.size() == 7);
  for (std::size_t k = 0; k + 1 < ep.maps.size(); ++k) {
    const FireMap replay =
        step_spread(apply_quench(ep.maps[k], ep.quench[k]), ep.weather, ep.step_seeds[k]);
    CHECK(replay == ep.maps[k + 1]);
  }
}

TEST_CASE("augmentation factor") {
  const auto one = generate_pairs(1, 20, 2, true, 4);
  CHECK(augment(one).size() == 12);
  const auto many = generate_pairs(7, 20, 50, false, 4);
  REQUIRE(many.size() == 343);
  CHECK(augment(many).size() == 4116);

  // a rotation-invariant pair keeps all 12 outputs
  TrainingPair p;
  p.width = p.height = 5;
  p.before.assign(25, 0);
  p.after.assign(25, 0);
  p.before[12] = 1;
  p.after[12] = 1;
  const std::vector<TrainingPair> in{p};
  CHECK(augment(in).size() == 12);
}

TEST_CASE("augmentation transforms every grid consistently") {
  const auto in = generate_pairs(2, 6, 3, true, 8);
  const auto out = augment(in);
  for (const auto& p : out) {
    REQUIRE(p.quench.has_value());
    for (std::size_t c = 0; c < p.before.size(); ++c) {
      CHECK(((*p.quench)[c] != 0) == (p.before[c] == 2));
      if ((*p.quench)[c]) CHECK(p.after[c] == 0);
    }
  }
}

TEST_CASE("map text round trip") {
  FireMap m = random_map(7, 5, 3, 0.3);
  std::stringstream grid, fuel;
  write_map_text(grid, m);
  write_fuel_text(fuel, m);
  CHECK(grid.str().rfind("7 5\n", 0) == 0);
  const FireMap back = read_map_text(grid, &fuel);
  CHECK(back.fuel == m.fuel);
  for (std::size_t c = 0; c < m.cells(); ++c)
    CHECK(back.intensity[c] == doctest::Approx(m.intensity[c]));
}

TEST_CASE("pairs json lines round trip") {
  const auto pairs = generate_pairs(2, 8, 3, true, 5);
  std::stringstream ss;
  write_pairs_jsonl(ss, pairs);
  CHECK(read_pairs_jsonl(ss) == pairs);
}

TEST_CASE("invalid maps are rejected") {
  FireMap m(3, 3);
  m.intensity[0] = -1.0;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  FireMap n(3, 3);
  n.intensity[1] = 1.0;
  n.fuel[1] = 0;
  CHECK_THROWS_AS(n.validate(), std::invalid_argument);
  CHECK_THROWS(parse_wind_direction("up"));
  CHECK(parse_wind_direction("SW") == WindDirection::SW);
}
