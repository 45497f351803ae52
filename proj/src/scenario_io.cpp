#include "wildfire/scenario_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "wildfire/rng.hpp"

namespace wildfire {

using nlohmann::json;

FireMap make_initial_map(int width, int height, double fuel_density, std::uint64_t fuel_seed,
                         const std::vector<FirePoint>& fires) {
  FireMap map(width, height, false);
  for (std::size_t c = 0; c < map.cells(); ++c)
    map.fuel[c] = uniform01(fuel_seed, c) < fuel_density ? 1 : 0;
  for (const auto& f : fires) {
    if (!map.in_bounds(f.x, f.y)) throw std::invalid_argument("fire outside the grid");
    map.ignite(f.x, f.y, f.intensity);
  }
  return map;
}

namespace {

GridPoint point(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("expected [x, y]");
  return {j[0].get<int>(), j[1].get<int>()};
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  const json j = json::parse(text);
  Scenario s;
  s.name = j.value("name", "");
  s.width = j.value("width", 20);
  s.height = j.value("height", 20);
  for (const auto& b : j.at("bases")) s.bases.push_back(point(b));
  for (const auto& d : j.at("drones")) {
    Drone drone;
    drone.home = d.at("home").get<int>();
    drone.range = d.value("range", drone.range);
    const int count = d.value("count", 1);
    if (count < 1) throw std::invalid_argument("drone count must be positive");
    for (int k = 0; k < count; ++k) s.drones.push_back(drone);
  }
  if (j.contains("weights")) {
    const auto& w = j["weights"];
    s.w1 = w.value("burn", s.w1);
    s.w2 = w.value("base", s.w2);
    s.w3 = w.value("move", s.w3);
  }
  s.period = j.value("period", s.period);
  s.speed = j.value("speed", s.speed);
  s.safe_distance = j.value("safe_distance", s.safe_distance);
  s.reserve = j.value("reserve", s.reserve);
  s.risk = j.value("risk", s.risk);
  s.big_m = j.value("big_m", s.big_m);
  s.tau_max = j.value("tau_max", s.tau_max);
  if (j.contains("robust")) {
    const auto& r = j["robust"];
    s.robust.mean = r.value("mean", s.robust.mean);
    s.robust.mean_per_intensity = r.value("mean_per_intensity", s.robust.mean_per_intensity);
    s.robust.sigma = r.value("sigma", s.robust.sigma);
    s.robust.correlation_length = r.value("correlation_length", s.robust.correlation_length);
    s.robust.nugget = r.value("nugget", s.robust.nugget);
  }
  if (j.contains("weather")) {
    const auto& w = j["weather"];
    s.weather.wind_direction = parse_wind_direction(w.value("wind_direction", std::string("N")));
    s.weather.wind_speed = w.value("wind_speed", 0.0);
    s.weather.moisture = w.value("moisture", 0.0);
  }
  if (j.contains("spread")) {
    const auto& p = j["spread"];
    s.spread.base_p = p.value("base_p", s.spread.base_p);
    s.spread.decay = p.value("decay", s.spread.decay);
    s.spread.intensity_cap = p.value("intensity_cap", s.spread.intensity_cap);
    s.spread.ignition_intensity = p.value("ignition_intensity", s.spread.ignition_intensity);
  }
  if (j.contains("map")) {
    const auto& m = j["map"];
    std::vector<FirePoint> fires;
    for (const auto& f : m.value("fires", json::array())) {
      if (!f.is_array() || f.size() < 2) throw std::invalid_argument("fire entry must be [x, y, g]");
      FirePoint p;
      p.x = f[0].get<int>();
      p.y = f[1].get<int>();
      p.intensity = f.size() > 2 ? f[2].get<double>() : 1.0;
      fires.push_back(p);
    }
    s.initial = make_initial_map(s.width, s.height, m.value("fuel_density", 1.0),
                                 m.value("fuel_seed", std::uint64_t{0}), {});
    if (m.contains("fuel")) {
      // explicit row-major mask overrides the drawn one
      auto fuel = m["fuel"].get<std::vector<std::uint8_t>>();
      if (fuel.size() != s.initial.fuel.size()) throw std::invalid_argument("fuel mask has the wrong size");
      s.initial.fuel = std::move(fuel);
    }
    for (const auto& f : fires) {
      if (!s.initial.in_bounds(f.x, f.y)) throw std::invalid_argument("fire outside the grid");
      s.initial.ignite(f.x, f.y, f.intensity);
    }
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open scenario '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return parse_scenario(ss.str());
  } catch (const std::exception& e) {
    throw std::runtime_error("scenario '" + path + "': " + e.what());
  }
}

std::string dump_scenario(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["width"] = s.width;
  j["height"] = s.height;
  j["bases"] = json::array();
  for (const auto& b : s.bases) j["bases"].push_back({b.x, b.y});
  j["drones"] = json::array();
  for (const auto& d : s.drones) j["drones"].push_back({{"home", d.home}, {"range", d.range}});
  j["weights"] = {{"burn", s.w1}, {"base", s.w2}, {"move", s.w3}};
  j["period"] = s.period;
  j["speed"] = s.speed;
  j["safe_distance"] = s.safe_distance;
  j["reserve"] = s.reserve;
  j["risk"] = s.risk;
  j["big_m"] = s.big_m;
  j["tau_max"] = s.tau_max;
  j["robust"] = {{"mean", s.robust.mean},
                 {"mean_per_intensity", s.robust.mean_per_intensity},
                 {"sigma", s.robust.sigma},
                 {"correlation_length", s.robust.correlation_length},
                 {"nugget", s.robust.nugget}};
  j["weather"] = {{"wind_direction", to_string(s.weather.wind_direction)},
                  {"wind_speed", s.weather.wind_speed},
                  {"moisture", s.weather.moisture}};
  j["spread"] = {{"base_p", s.spread.base_p},
                 {"decay", s.spread.decay},
                 {"intensity_cap", s.spread.intensity_cap},
                 {"ignition_intensity", s.spread.ignition_intensity}};
  if (!s.initial.intensity.empty()) {
    json fires = json::array();
    for (int y = 0; y < s.initial.height; ++y)
      for (int x = 0; x < s.initial.width; ++x) {
        const double g = s.initial.intensity[static_cast<std::size_t>(y) * s.initial.width + x];
        if (g > 0.0) fires.push_back({x, y, g});
      }
    j["map"] = {{"fires", fires}, {"fuel", s.initial.fuel}};
  }
  return j.dump(2);
}

}  // namespace wildfire
