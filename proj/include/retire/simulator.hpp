// Forward simulation from solved decision tables, synthetic initial
// populations and panel I/O.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "retire/solver.hpp"

namespace retire {

// "point": value a; "normal": mean a, sd b, redrawn below `lower`;
// "lognormal": level mean a and level sd b.
struct ContinuousDist {
  std::string kind = "point";
  double a = 0, b = 0;
  double lower = 0;
};

struct OccupationProfile {
  std::array<double, kEdu> education{0.25, 0.25, 0.25, 0.25};
  double poor_physical = 0;
  double poor_cognitive = 0;
  std::array<double, 3> insurance{1, 0, 0};  // None, Tied, RetireeCovered
  ContinuousDist assets;
  ContinuousDist aime;
};

struct CrossTabCell {
  int occupation, education, health;
  double prob;
};

struct InitialPopulationSpec {
  int n = 1000;
  int age_min = 51, age_max = 61;
  std::vector<double> age_weights;  // empty = uniform
  OccVec occupation{1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::array<OccupationProfile, kOcc> by_occ;
  // optional joint (occupation, education, health) distribution; overrides
  // the occupation shares and the per-occupation education/health marginals
  std::vector<CrossTabCell> cross_tab;
  double worked_last = 1.0;
  double work_pref_share = 0.5;  // only used when types are drawn
  bool draw_types = false;
  TypeModel type_model;

  void validate(double asset_floor) const;
};

struct Individual {
  std::int64_t id = 0;
  StateVector s;
  bool work_pref = false;
};

// Occupation-level calibrated preset (synthetic joint structure).
InitialPopulationSpec calibrated_population(int n);

std::vector<Individual> generate_population(const InitialPopulationSpec& spec, std::uint64_t seed);

nlohmann::json to_json(const InitialPopulationSpec& s);
InitialPopulationSpec population_from_json(const nlohmann::json& j);

struct PanelRow {
  std::int64_t id = 0;
  int age = 0;
  int type = 0;
  int education = 0, occupation = 0;
  int health_p = 0, health_c = 0;
  double assets = 0, aime = 0;
  int insurance = 0;
  int worked_last = 0;
  int claimed_prev = 0;
  int zeta_node = 0;
  double zeta = 0;
  int ssdi_eligible = 0;
  int d = 0;
  double consumption = 0;
  double wage = 0, ss = 0, pension = 0, spousal = 0, ssdi = 0, transfer = 0;
  double income = 0;  // Y, excluding the transfer
  double med = 0;
  double assets_next = 0, aime_next = 0;
  int claimed = 0;           // collecting after this period's decision
  int first_claim_year = 0;  // this row triggered the claim
  int survived = 0;
  double flow_utility = 0;
  double p_work = 0;  // choice probability at the realized transient draws

  StateVector state() const;
};

struct SimDiagnostics {
  std::int64_t rows = 0;
  std::int64_t asset_clamps = 0;  // lookups outside the asset grid hull
  std::int64_t aime_clamps = 0;
  std::int64_t floor_clamps = 0;  // A' rounded up to the asset floor
};

struct Panel {
  std::vector<PanelRow> rows;  // ordered by (id, age)
  SimDiagnostics diag;
};

struct SimOptions {
  bool with_mortality = true;
  int threads = 0;
  int last_age = -1;  // stop after this age (-1 = terminal)
};

Panel simulate_lifecycle(const std::vector<Individual>& init, const DecisionTables& t, const ModelParams& p,
                         const PolicyRules& r, std::uint64_t seed, const SimOptions& opt = {});

// Same draws as simulate_lifecycle, but hands rows to `sink` in chunks (in id
// order) instead of holding the whole panel.
using RowSink = std::function<void(const std::vector<PanelRow>&)>;
SimDiagnostics simulate_stream(const std::vector<Individual>& init, const DecisionTables& t, const ModelParams& p,
                               const PolicyRules& r, std::uint64_t seed, const SimOptions& opt, const RowSink& sink,
                               int chunk = 4096);

struct Prediction {
  double p_work = 0;       // zeta-integrated work probability
  int d = 0;               // drawn decision
  double consumption = 0;  // zeta-integrated consumption under the drawn d
  double assets_next = 0;  // expected A' over zeta and d
  double assets_next_draw = 0;  // A' at the drawn d and a drawn zeta node
};

struct PredictOptions {
  bool integrate_zeta = true;  // false: condition on the row's zeta node
  int threads = 0;
};

std::vector<Prediction> simulate_one_period_ahead(const std::vector<PanelRow>& rows, const DecisionTables& t,
                                                  const ModelParams& p, const PolicyRules& r, std::uint64_t seed,
                                                  const PredictOptions& opt = {});

// Age profiles by (age, group); missing cells are NaN.
struct ProfileCell {
  int age = 0;
  int group = -1;  // -1 = all
  std::int64_t count = 0;
  double lfp = std::nan("");
  double asset_t1 = std::nan(""), asset_t2 = std::nan("");  // lower/upper tertile cut
  double asset_change = std::nan("");
};

enum class ProfileBy { Occupation, Education };

std::vector<ProfileCell> aggregate_profiles(const std::vector<PanelRow>& rows, ProfileBy by, int age_min,
                                            int age_max);

// Nearest-rank quantile: smallest x with at least q*n values <= x.
double nearest_rank(std::vector<double> v, double q);

// ---- panel CSV ----
const std::vector<std::string>& panel_columns();
void write_panel_csv(const std::string& path, const std::vector<PanelRow>& rows);
std::string panel_csv_string(const std::vector<PanelRow>& rows);
std::vector<PanelRow> read_panel_csv(const std::string& path);

// Keep only rows with (age - age0) even, mimicking a biennial survey.
std::vector<PanelRow> biennial(const std::vector<PanelRow>& rows, int age0);

}  // namespace retire
