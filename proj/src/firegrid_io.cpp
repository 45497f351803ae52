#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "wildfire/firegrid.hpp"

namespace wildfire {

using nlohmann::json;

namespace {

void write_grid(std::ostream& os, int w, int h, auto value_at) {
  os << w << ' ' << h << '\n';
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x) os << ' ';
      os << value_at(static_cast<std::size_t>(y) * w + x);
    }
    os << '\n';
  }
}

std::vector<double> read_grid(std::istream& is, int& w, int& h) {
  if (!(is >> w >> h) || w <= 0 || h <= 0)
    throw std::runtime_error("map text: bad header, expected 'W H'");
  std::vector<double> v(static_cast<std::size_t>(w) * h);
  for (auto& x : v)
    if (!(is >> x)) throw std::runtime_error("map text: truncated grid");
  return v;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  return f;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  return f;
}

}  // namespace

void write_map_text(std::ostream& os, const FireMap& map) {
  const auto old = os.precision(17);
  write_grid(os, map.width, map.height, [&](std::size_t c) { return map.intensity[c]; });
  os.precision(old);
}

void write_fuel_text(std::ostream& os, const FireMap& map) {
  write_grid(os, map.width, map.height, [&](std::size_t c) { return int(map.fuel[c]); });
}

FireMap read_map_text(std::istream& intensity, std::istream* fuel) {
  int w = 0;
  int h = 0;
  auto g = read_grid(intensity, w, h);
  FireMap map(w, h, true);
  map.intensity = std::move(g);
  if (fuel) {
    int fw = 0;
    int fh = 0;
    auto f = read_grid(*fuel, fw, fh);
    if (fw != w || fh != h) throw std::runtime_error("fuel mask dimensions differ from map");
    for (std::size_t c = 0; c < f.size(); ++c) map.fuel[c] = f[c] != 0.0 ? 1 : 0;
  } else {
    // without a mask, burning cells are the only cells known to carry fuel
    for (std::size_t c = 0; c < map.cells(); ++c) map.fuel[c] = 1;
  }
  map.validate();
  return map;
}

void save_map(const std::string& path, const FireMap& map) {
  auto f = open_out(path);
  write_map_text(f, map);
  auto fuel = open_out(path + ".fuel");
  write_fuel_text(fuel, map);
}

FireMap load_map(const std::string& path, const std::string& fuel_path) {
  auto f = open_in(path);
  if (fuel_path.empty()) return read_map_text(f);
  auto fuel = open_in(fuel_path);
  return read_map_text(f, &fuel);
}

void write_pairs_jsonl(std::ostream& os, std::span<const TrainingPair> pairs) {
  for (const auto& p : pairs) {
    json j;
    j["width"] = p.width;
    j["height"] = p.height;
    j["before"] = p.before;
    j["after"] = p.after;
    j["quench"] = p.quench ? json(*p.quench) : json(nullptr);
    j["next_cost"] = p.next_cost;
    os << j.dump() << '\n';
  }
}

std::vector<TrainingPair> read_pairs_jsonl(std::istream& is) {
  std::vector<TrainingPair> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      TrainingPair p;
      p.width = j.at("width").get<int>();
      p.height = j.at("height").get<int>();
      p.before = j.at("before").get<std::vector<std::uint8_t>>();
      p.after = j.at("after").get<std::vector<std::uint8_t>>();
      if (j.contains("quench") && !j["quench"].is_null())
        p.quench = j["quench"].get<std::vector<std::uint8_t>>();
      p.next_cost = j.value("next_cost", 0.0);
      const auto n = static_cast<std::size_t>(p.width) * p.height;
      if (p.before.size() != n || p.after.size() != n || (p.quench && p.quench->size() != n))
        throw std::runtime_error("grid size mismatch");
      out.push_back(std::move(p));
    } catch (const std::exception& e) {
      throw std::runtime_error("pairs line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void save_pairs(const std::string& path, std::span<const TrainingPair> pairs) {
  auto f = open_out(path);
  write_pairs_jsonl(f, pairs);
}

std::vector<TrainingPair> load_pairs(const std::string& path) {
  auto f = open_in(path);
  return read_pairs_jsonl(f);
}

}  // namespace wildfire
