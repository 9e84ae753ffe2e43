#include "retire/grid.hpp"

#include <cmath>
#include <stdexcept>

#include "retire/core.hpp"

namespace retire {

void GridSpec::validate(const PolicyRules& rules) const {
  auto increasing = [](const std::vector<double>& v) {
    for (size_t i = 1; i < v.size(); ++i)
      if (!(v[i] > v[i - 1])) return false;
    return true;
  };
  if (assets.size() < 2 || !increasing(assets)) throw std::invalid_argument("grid: asset nodes must be >= 2 and strictly increasing");
  if (assets.front() != rules.asset_floor) throw std::invalid_argument("grid: asset grid must start exactly at A_min");
  if (aime.size() < 2 || !increasing(aime)) throw std::invalid_argument("grid: aime nodes must be >= 2 and strictly increasing");
  if (aime.front() < 0) throw std::invalid_argument("grid: aime nodes must be >= 0");
  if (warm_window < 1) throw std::invalid_argument("grid: warm-start window must be >= 1");
  if (consumption_nodes < 2 || consumption_nodes > 255) throw std::invalid_argument("grid: consumption nodes must be in 2..255");
  if (zeta_nodes < 1) throw std::invalid_argument("grid: need at least one zeta node");
  if (!(first_age <= last_labor_age && first_age < terminal_age)) throw std::invalid_argument("grid: inconsistent ages");
}

double GridSpec::consumption_fraction(int k) const {
  return std::pow(double(k) / (consumption_nodes - 1), consumption_power);
}

std::vector<double> asset_nodes(int n, int n_linear, double a_min, double a_split, double a_max) {
  std::vector<double> v;
  for (int i = 0; i < n_linear; ++i) v.push_back(a_min + (a_split - a_min) * i / (n_linear - 1));
  const int n_log = n - n_linear;
  for (int k = 1; k <= n_log; ++k) v.push_back(a_split * std::pow(a_max / a_split, double(k) / n_log));
  return v;
}

GridSpec grid_preset(const std::string& name, const PolicyRules& rules) {
  GridSpec g;
  g.name = name;
  const double b1 = rules.pia_bendpoints[0], b2 = rules.pia_bendpoints[1];
  if (name == "desk") {
    g.assets = asset_nodes(16, 4, rules.asset_floor, 10.0, 3000.0);
    g.aime = {0.0, b1, 15.0, 25.0, b2, 55.0, 85.0, 150.0};
    g.zeta_nodes = 3;
  } else if (name == "full") {
    g.assets = asset_nodes(58, 8, rules.asset_floor, 10.0, 5000.0);
    for (int i = 0; i < 50; ++i) g.aime.push_back(150.0 * i / 49.0);
    g.zeta_nodes = 5;
  } else if (name == "test") {
    g.assets = asset_nodes(6, 3, rules.asset_floor, 10.0, 2000.0);
    g.aime = {0.0, b1, b2, 150.0};
    g.zeta_nodes = 3;
    g.consumption_nodes = 16;
  } else {
    throw std::invalid_argument("unknown grid preset '" + name + "' (expected desk, full or test)");
  }
  return g;
}

long long state_point_count(const GridSpec& g, const PolicyRules& rules, int n_types) {
  long long total = 0;
  const long long inner = (long long)g.assets.size() * g.aime.size() * g.zeta_nodes;
  for (int age = g.first_age; age <= g.terminal_age; ++age) {
    const bool pre = age < rules.medicare_age;
    total += (long long)n_types * kEdu * kOcc * kHealth * (pre ? 3 : 1) * 2 * inner * (pre ? 2 : 1);
  }
  return total;
}

}  // namespace retire
