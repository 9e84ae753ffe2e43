// Exogenous laws of motion: health, mortality, wages, medical expense,
// spousal income, SSDI eligibility, income-shock quadrature.
#pragma once

#include <array>
#include <vector>

#include "retire/core.hpp"
#include "retire/ssa.hpp"

namespace retire {

// Health-transition covariates:
// [1, a, a^2, hs, some_college, college_plus, work*manual, work*clerical, work*professional]
// with a = (age - 60) / 10.
inline constexpr int kHealthCov = 9;
using HealthCov = std::array<double, kHealthCov>;

HealthCov health_covariates(int age, Education e, Occupation occ, int d);

struct HealthTransitionModel {
  // coef[current][next][k]; next state 0 (good-good) is the reference and
  // its block is ignored.
  std::array<std::array<HealthCov, kHealth>, kHealth> coef{};
  int min_age = 51;
  int max_age = 90;

  std::array<double, kHealth> probs(int current, const HealthCov& x) const;
};

struct HealthProbs {
  std::array<double, kHealth> p{};
  bool age_clamped = false;
};

HealthProbs health_transition_probs(const StateVector& s, int d, const HealthTransitionModel& m);

struct Quadratic {
  double c0 = 0, c1 = 0, c2 = 0;
  double operator()(double x) const { return c0 + x * (c1 + x * c2); }
};

struct MortalityModel {
  int first_age = 51;
  int terminal_age = 90;
  std::vector<double> q;  // q[age - first_age], one-year death probability
  // Quadratics in x = (age - 70) / 10 for P(h | alive) and P(h | dying);
  // clipped at zero and renormalized across h at every age.
  std::array<Quadratic, kHealth> alive{};
  std::array<Quadratic, kHealth> dying{};
  bool mute_physical = false;
  bool mute_cognitive = false;

  double q_at(int age) const;
  std::array<double, kHealth> p_alive(int age) const;
  std::array<double, kHealth> p_dying(int age) const;
  double shifter(int age, int h) const;
  void validate() const;
};

double survival_prob(int age, JointHealth h, const MortalityModel& m);

struct WageModel {
  // per occupation
  OccVec constant{};  // ln r_j + kappa_1j
  OccVec age{};
  OccVec age2{};
  std::array<OccVec, 3> edu{};  // [level-1][occ] for HS, some college, college+
  OccVec poor_physical{};
  OccVec poor_cognitive{};
};

double wage(int age, Education e, Occupation occ, JointHealth h, const WageModel& m);
inline double wage(const StateVector& s, const WageModel& m) {
  return wage(s.age, s.education, s.occupation, s.health, m);
}

// Tobit latent index xb = b0 + bp*h^p + bc*h^c + bpc*h^p*h^c + ins[type] + bage*(age-65)/10,
// expense = E[max(0, xb + sigma*e)].
struct ExpenseModel {
  double intercept = 0;
  double poor_physical = 0;
  double poor_cognitive = 0;
  double poor_both = 0;
  std::array<double, 4> insurance{};  // loading per InsuranceType, None is the reference
  double age = 0;
  double sigma = 0;
};

double medical_expense(JointHealth h, InsuranceType ins, int age, const ExpenseModel& m);

struct SpousalIncomeModel {
  // cubic in a = (age - 60)/10 plus education dummies (HS, SC, C+)
  std::array<double, 4> prob_poly{};
  std::array<double, 3> prob_edu{};
  std::array<double, 4> amount_poly{};
  std::array<double, 3> amount_edu{};

  double prob_positive(int age, Education e) const;
  double amount(int age, Education e) const;
};

double spousal_income(int age, Education e, const SpousalIncomeModel& m, double u);
double expected_spousal_income(int age, Education e, const SpousalIncomeModel& m);

struct SsdiModel {
  double intercept = 0;
  double poor_physical = 0;
  double poor_cognitive = 0;
  double poor_both = 0;
  double age1 = 0;  // on (age - 55)/10
  double age2 = 0;
  double worked_last = 0;
  OccVec occupation{};
  int last_age = 64;
};

double ssdi_eligibility_prob(int age, JointHealth h, bool worked_last, Occupation occ, const SsdiModel& m);
inline double ssdi_eligibility_prob(const StateVector& s, const SsdiModel& m) {
  return ssdi_eligibility_prob(s.age, s.health, s.worked_last, s.occupation, m);
}

struct ShockSpec {
  double sigma_zeta = 5.0;
  int nodes = 3;
  double ev_scale = 1.0;
};

struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Hermite rule for N(0, sigma^2); a single node when sigma == 0.
Quadrature discretize_income_shock(const ShockSpec& s);

}  // namespace retire
