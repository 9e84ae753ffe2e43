// Counterfactuals: health-channel shutdowns, requirement swaps, FRA reform,
// response types, surplus decomposition and welfare accounting.
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "retire/simulator.hpp"

namespace retire {

// Index 0 = physical, 1 = cognitive.
struct ChannelMask {
  std::array<bool, 2> disutility{};
  std::array<bool, 2> productivity{};
  std::array<bool, 2> expense{};
  std::array<bool, 2> mortality{};
  std::array<bool, 2> ssdi{};

  bool any() const;
  static ChannelMask all();
  static ChannelMask dimension(int dim);  // every channel of one dimension
};

// Accepts names like "disutility_physical", "expense_cognitive",
// "disutility" (both dimensions), "physical", "cognitive" or "all".
ChannelMask parse_mask(const std::vector<std::string>& names);
std::vector<std::string> mask_names(const ChannelMask& m);

ModelParams apply_mask(const ModelParams& p, const ChannelMask& m);

enum class SwapDim { Physical, Cognitive, Both };

// Copy the ability-requirement block (lambda2/kappa5 for physical,
// lambda3/kappa6 for cognitive) of `source` onto `target`.
struct RequirementSwap {
  Occupation source = Occupation::Professional;
  Occupation target = Occupation::Manual;
  SwapDim dims = SwapDim::Physical;
};

ModelParams apply_swap(const ModelParams& p, const RequirementSwap& s);

struct Branch {
  std::string name;
  ChannelMask mask;
  std::optional<PolicyRules> rules;
  std::optional<RequirementSwap> swap;
};

// Branch from a manifest entry; a branch naming both "fra" and "rules" is a
// configuration error.
Branch branch_from_json(const nlohmann::json& j);

struct PairedPanels {
  Panel base, cf;
};

// Re-solves under the branch and simulates the same population with the same
// seed. `base_tables` may be passed to skip the baseline solve.
PairedPanels run_counterfactual(const Branch& b, const ModelParams& p, const PolicyRules& r, const GridSpec& g,
                                const std::vector<Individual>& pop, std::uint64_t seed, const SimOptions& so,
                                const DecisionTables* base_tables = nullptr);

// ---- panel statistics ----

constexpr int kStillWorkingAge = 76;

// Mean retirement age per occupation (index 3 = all) over individuals who
// enter as workers: first age with d = 0, or 76 when still working.
std::array<double, 4> retirement_ages(const std::vector<PanelRow>& rows);

// LFP by age over [age_min, age_max]; occupation -1 = all. NaN for empty ages.
std::vector<double> lfp_profile(const std::vector<PanelRow>& rows, int age_min, int age_max, int occupation = -1);

// (decline_base - decline_cf) / decline_base; nullopt when decline_base <= 0.
std::optional<double> decline_share(double decline_base, double decline_cf);
std::optional<double> employment_decline_share(const std::vector<PanelRow>& base, const std::vector<PanelRow>& cf,
                                               int age0 = 51, int age1 = 70, int occupation = -1);

// (Y_cog - Y) / (Y_phys - Y) per age; NaN where |Y_phys - Y| < 1e-4.
std::vector<double> relative_impact_profile(const std::vector<double>& base, const std::vector<double>& cf_cog,
                                            const std::vector<double>& cf_phys);

enum class ResponseType { AlwaysTaker, NeverTaker, Complier, Defier };
const char* to_string(ResponseType t);
ResponseType classify_response(int d0, int d1);

struct ResponseShares {
  int age = 0;
  std::int64_t n = 0;
  std::array<double, 4> share{};  // indexed by ResponseType
  double disagreement = 0;        // share of rows where d0 != d1
};

// Pairs rows by (id, age); z = 0 is `base`, z = 1 is `reform`.
std::vector<ResponseShares> response_shares(const std::vector<PanelRow>& base, const std::vector<PanelRow>& reform,
                                            int age_min, int age_max, int occupation = -1);

// Work surplus pieces at a table node: v_work - v_retire = PS + NPS + ES.
struct SurplusDecomposition {
  double ps = 0, nps = 0, es = 0;
  double gap = 0;  // v1 - v0 read from the tables
};

SurplusDecomposition work_surplus_decomposition(const DecisionTables& t, int age, int group, int a, int m, int z,
                                                int s, const ModelParams& p, const PolicyRules& r);

// Discounted flow utility from `from_age`, plus the discounted bequest when
// the last row records death.
double pdv_utility(const std::vector<PanelRow>& rows, int from_age, const PreferenceParams& prefs);

// Mean PDV per occupation (index 3 = all) over individuals observed at from_age.
std::array<double, 4> mean_pdv(const std::vector<PanelRow>& rows, int from_age, const PreferenceParams& prefs);

struct CvResult {
  double tau = 0;
  bool bracketed = true;
  int iterations = 0;
};

// Asset transfer at the state's age making the reform value equal the
// baseline value.
CvResult compensating_variation(const StateVector& s, const DecisionTables& base, const ModelParams& pb,
                                const DecisionTables& reform, const ModelParams& pr, const PolicyRules& rules_b,
                                const PolicyRules& rules_r, double tau_max = 2000.0, double tol = 1e-6);

struct CvSummary {
  std::array<double, 4> mean_tau{};
  std::array<std::int64_t, 4> n{};
  std::int64_t unbracketed = 0;
};

// CV for every individual observed at `age` in the baseline panel. Means
// cover bracketed solutions only; the rest are counted in `unbracketed`.
CvSummary compensating_variation_panel(const std::vector<PanelRow>& base_rows, int age, const DecisionTables& base,
                                       const ModelParams& pb, const DecisionTables& reform, const ModelParams& pr,
                                       const PolicyRules& rules_b, const PolicyRules& rules_r);

// sum_j share_j * subsidy_j / sum_j share_j
double subsidy_back_of_envelope(const OccVec& subsidies, const OccVec& shares);

}  // namespace retire
