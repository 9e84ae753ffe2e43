// State-space discretization.
#pragma once

#include <string>
#include <vector>

#include "retire/ssa.hpp"

namespace retire {

struct GridSpec {
  std::string name = "custom";
  std::vector<double> assets;
  std::vector<double> aime;
  int zeta_nodes = 3;
  int consumption_nodes = 64;
  double consumption_power = 2.0;  // fraction f_k = (k/(n-1))^power of [C_min, C_hi]
  int warm_window = 5;
  bool full_search = false;
  int first_age = 51;
  int last_labor_age = 75;
  int terminal_age = 90;

  void validate(const PolicyRules& rules) const;
  double consumption_fraction(int k) const;
};

// n_linear evenly spaced nodes on [a_min, a_split], the rest log-spaced up to a_max.
std::vector<double> asset_nodes(int n, int n_linear, double a_min, double a_split, double a_max);

// "desk", "full" or "test"
GridSpec grid_preset(const std::string& name, const PolicyRules& rules);

// Number of stored (age, discrete state, asset, aime, zeta, ssdi) points.
long long state_point_count(const GridSpec& g, const PolicyRules& rules, int n_types = 1);

}  // namespace retire
