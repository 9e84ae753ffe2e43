#include "retire/ssa.hpp"

#include <algorithm>

namespace retire {

void PolicyRules::validate() const {
  const auto& p = pia_percentages;
  for (double x : p)
    if (!(x > 0 && x <= 1)) throw std::invalid_argument("rules: pia percentages must lie in (0,1]");
  if (!(p[0] > p[1] && p[1] > p[2])) throw std::invalid_argument("rules: pia percentages must be strictly decreasing");
  if (!(pia_bendpoints[0] > 0 && pia_bendpoints[1] > pia_bendpoints[0]))
    throw std::invalid_argument("rules: bend points must be positive and increasing");
  if (!(earliest_claim_age <= fra && fra <= delayed_credit_max_age))
    throw std::invalid_argument("rules: need earliest_claim_age <= fra <= delayed_credit_max_age");
  if (!(consumption_floor > 0)) throw std::invalid_argument("rules: consumption floor must be positive");
  if (!(interest_rate > -1)) throw std::invalid_argument("rules: interest rate must exceed -1");
}

PolicyRules fra66_baseline() { return PolicyRules{}; }

PolicyRules fra70_reform() {
  PolicyRules r;
  r.fra = 70;
  r.name = "fra70_reform";
  return r;
}

double adjustment_factor(int claim_age, const PolicyRules& r) {
  if (claim_age < r.earliest_claim_age)
    throw RuleViolation("adjustment_factor: claim age " + std::to_string(claim_age) + " below earliest claim age");
  if (claim_age < r.fra) {
    const int early = r.fra - claim_age;
    return 1.0 - r.early_rate_first3 * std::min(early, 3) - r.early_rate_rest * std::max(early - 3, 0);
  }
  return 1.0 + r.delayed_credit * (std::min(claim_age, r.delayed_credit_max_age) - r.fra);
}

double aime_update(double aime, double wage, const PolicyRules&) {
  return aime + std::max(0.0, wage - aime) / 35.0;
}

double pia(double aime, const PolicyRules& r) {
  const auto& p = r.pia_percentages;
  const double b1 = r.pia_bendpoints[0], b2 = r.pia_bendpoints[1];
  return p[0] * std::min(aime, b1) + p[1] * std::clamp(aime - b1, 0.0, b2 - b1) + p[2] * std::max(aime - b2, 0.0);
}

BenefitOutcome ss_benefit(int age, double aime, BenefitState st, const PolicyRules& r) {
  BenefitOutcome out{0.0, aime, st};
  if (!st.claimed) return out;
  if (!st.adjusted) {
    out.aime = adjustment_factor(age, r) * aime;
    out.state.adjusted = true;
    out.state.first_claim_year = true;
  } else {
    out.state.first_claim_year = false;
  }
  out.benefit = pia(out.aime, r);
  return out;
}

double ssdi_benefit(double aime, const PolicyRules& r) { return pia(aime, r); }

double private_pension(Occupation occ, double aime, const PensionCoeffs& c, const PolicyRules& r) {
  return c.rho[static_cast<int>(occ)] * pia(aime, r);
}

InsuranceType insurance_transition(InsuranceType cur, int age, int d, const PolicyRules& r) {
  if (age + 1 >= r.medicare_age) return InsuranceType::Medicare;
  switch (cur) {
    case InsuranceType::Tied: return d == 1 ? InsuranceType::Tied : InsuranceType::None;
    case InsuranceType::RetireeCovered: return InsuranceType::RetireeCovered;
    case InsuranceType::None: return InsuranceType::None;
    case InsuranceType::Medicare: return InsuranceType::Medicare;
  }
  return cur;
}

}  // namespace retire
