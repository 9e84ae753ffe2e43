// Social Security retirement rules, SSDI, private pensions, insurance.
#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include "retire/core.hpp"

namespace retire {

struct RuleViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PolicyRules {
  int fra = 66;
  double early_rate_first3 = 1.0 / 15.0;  // 6 2/3 % per year
  double early_rate_rest = 0.05;
  double delayed_credit = 0.08;
  int delayed_credit_max_age = 70;
  int earliest_claim_age = 62;
  std::array<double, 3> pia_percentages{0.90, 0.32, 0.15};
  std::array<double, 2> pia_bendpoints{6.372, 38.424};
  double consumption_floor = 4.0;
  double asset_floor = -5.0;
  double interest_rate = 0.03;
  int medicare_age = 65;
  std::string name = "fra66_baseline";

  void validate() const;
  friend bool operator==(const PolicyRules&, const PolicyRules&) = default;
};

PolicyRules fra66_baseline();
PolicyRules fra70_reform();

struct BenefitState {
  bool claimed = false;
  bool first_claim_year = false;
  bool adjusted = false;
};

double adjustment_factor(int claim_age, const PolicyRules& rules);
double aime_update(double aime, double wage, const PolicyRules& rules);
double pia(double aime, const PolicyRules& rules);

struct BenefitOutcome {
  double benefit = 0.0;
  double aime = 0.0;  // stored AIME after any folding
  BenefitState state{};
};

// In the first claim year the adjustment factor is folded into the stored
// AIME once; afterwards the benefit is pia(stored AIME).
BenefitOutcome ss_benefit(int age, double aime, BenefitState st, const PolicyRules& rules);

double ssdi_benefit(double aime, const PolicyRules& rules);

struct PensionCoeffs {
  OccVec rho{0.2, 0.3, 0.4};
};

double private_pension(Occupation occ, double aime, const PensionCoeffs& c, const PolicyRules& rules);

InsuranceType insurance_transition(InsuranceType current, int age, int d, const PolicyRules& rules);

}  // namespace retire
