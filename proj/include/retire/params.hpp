// Parameter bundle, shipped presets and JSON round-tripping.
#pragma once

#include <array>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "retire/core.hpp"
#include "retire/processes.hpp"
#include "retire/ssa.hpp"

namespace retire {

inline constexpr int kSchemaVersion = 1;

// Two-type mixture over the work disutility. n_types == 1 is the baseline model.
struct TypeModel {
  int n_types = 1;
  double constant = 0;
  double work_pref = 0;
  std::array<double, 3> edu{};
  double poor_physical = 0;
  double poor_cognitive = 0;
  double log_assets = 0;
};

// Probability of type 2 given the initial state.
double type_probability(const StateVector& init, bool work_pref, const TypeModel& m);

struct ModelParams {
  PreferenceParams prefs;
  WageModel wage;
  HealthTransitionModel health;
  MortalityModel mortality;
  ExpenseModel expense;
  SpousalIncomeModel spouse;
  SsdiModel ssdi;
  PensionCoeffs pension;
  TypeModel types;

  void validate(const PolicyRules& rules) const;
};

// Every preset below except the preference block is synthetic.
HealthTransitionModel synthetic_health_transitions();
MortalityModel synthetic_mortality();
WageModel baseline_wage_model();
ModelParams baseline_estimates();

// Gompertz approximation used for the shipped life table.
std::vector<double> synthetic_life_table(int first_age, int terminal_age);

std::vector<double> read_life_table(const std::string& path, int first_age, int terminal_age);
void write_life_table(const std::string& path, const std::vector<double>& q, int first_age);

nlohmann::json to_json(const ModelParams& p);
ModelParams params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PolicyRules& r);
PolicyRules rules_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

// FNV-1a over a canonical dump; used for manifest hashes.
std::uint64_t fnv1a(const std::string& s);
std::string hex64(std::uint64_t v);

}  // namespace retire
