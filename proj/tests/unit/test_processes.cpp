#include <doctest.h>

#include <cmath>
#include <random>

#include "retire/params.hpp"
#include "retire/processes.hpp"

using namespace retire;

TEST_CASE("health transitions: zero coefficients are uniform") {
  HealthTransitionModel m;
  StateVector s;
  for (int d : {0, 1}) {
    const auto p = health_transition_probs(s, d, m).p;
    for (double v : p) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
  }
}

TEST_CASE("health transitions: saturation toward good-good") {
  HealthTransitionModel m;
  for (int c = 0; c < kHealth; ++c)
    for (int n = 1; n < kHealth; ++n) m.coef[c][n][0] = -40;
  StateVector s;
  s.health = {true, true};
  CHECK(health_transition_probs(s, 1, m).p[0] > 1 - 1e-6);
}

TEST_CASE("health transition rows sum to one over random covariates") {
  const HealthTransitionModel m = synthetic_health_transitions();
  std::mt19937_64 g(11);
  std::uniform_real_distribution<double> u(-3, 3);
  std::uniform_int_distribution<int> bit(0, 1), cur(0, 3), edu(0, 3), occ(0, 2);
  double worst = 0;
  for (int k = 0; k < 100000; ++k) {
    HealthCov x{};
    x[0] = 1;
    x[1] = u(g);
    x[2] = x[1] * x[1];
    const int e = edu(g);
    if (e > 0) x[2 + e] = 1;
    if (bit(g)) x[6 + occ(g)] = 1;
    const auto p = m.probs(cur(g), x);
    double s = 0;
    for (double v : p) {
      CHECK(v > 0);
      CHECK(v < 1);
      s += v;
    }
    worst = std::max(worst, std::abs(s - 1));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("health transitions clamp ages outside the support") {
  const HealthTransitionModel m = synthetic_health_transitions();
  StateVector s;
  s.age = 95;
  const auto a = health_transition_probs(s, 0, m);
  CHECK(a.age_clamped);
  s.age = 90;
  CHECK(health_transition_probs(s, 0, m).p == a.p);
}

TEST_CASE("mortality shifters satisfy the law of total probability") {
  const MortalityModel m = synthetic_mortality();
  for (int age = 51; age < 90; ++age) {
    const auto pa = m.p_alive(age), pd = m.p_dying(age);
    double s = 0, sa = 0, sd = 0;
    for (int h = 0; h < kHealth; ++h) {
      s += pa[h] * m.shifter(age, h);
      sa += pa[h];
      sd += pd[h];
    }
    CHECK(std::abs(s - 1) < 1e-6);
    CHECK(std::abs(sa - 1) < 1e-9);
    CHECK(std::abs(sd - 1) < 1e-9);
  }
}

TEST_CASE("survival probability") {
  MortalityModel m = synthetic_mortality();
  // shifter identically one
  MortalityModel flat = m;
  for (int h = 0; h < kHealth; ++h) flat.alive[h] = flat.dying[h] = Quadratic{0.25, 0, 0};
  for (int h = 0; h < kHealth; ++h)
    CHECK(survival_prob(70, JointHealth::from_index(h), flat) == doctest::Approx(1 - flat.q_at(70)).epsilon(1e-15));
  MortalityModel zero = m;
  std::fill(zero.q.begin(), zero.q.end() - 1, 0.0);
  for (int h = 0; h < kHealth; ++h) CHECK(survival_prob(60, JointHealth::from_index(h), zero) == 1.0);
  CHECK(survival_prob(90, {}, m) == 0.0);

  // two-state Bayes check: P(poor|dying) = 0.6, P(poor|alive) = 0.3, q = 0.02
  MortalityModel two = m;
  two.alive = {Quadratic{0.7, 0, 0}, Quadratic{0, 0, 0}, Quadratic{0.3, 0, 0}, Quadratic{0, 0, 0}};
  two.dying = {Quadratic{0.4, 0, 0}, Quadratic{0, 0, 0}, Quadratic{0.6, 0, 0}, Quadratic{0, 0, 0}};
  two.q[70 - two.first_age] = 0.02;
  CHECK(survival_prob(70, {true, false}, two) == doctest::Approx(0.96).epsilon(1e-14));
  CHECK_THROWS_AS(survival_prob(70, {false, true}, two), std::domain_error);
}

TEST_CASE("muted mortality shifter treats the dimension as good") {
  MortalityModel m = synthetic_mortality();
  m.mute_physical = true;
  CHECK(survival_prob(70, {true, false}, m) == survival_prob(70, {false, false}, m));
  CHECK(survival_prob(70, {true, true}, m) == survival_prob(70, {false, true}, m));
}

TEST_CASE("wage equation") {
  WageModel zero;
  CHECK(wage(60, Education::CollegePlus, Occupation::Clerical, {true, true}, zero) == 1.0);
  const WageModel w = baseline_wage_model();
  const double good = wage(60, Education::HighSchool, Occupation::Professional, {}, w);
  const double poorc = wage(60, Education::HighSchool, Occupation::Professional, {false, true}, w);
  CHECK(poorc / good == doctest::Approx(std::exp(-0.189)).epsilon(1e-14));
  CHECK(poorc / good == doctest::Approx(0.828).epsilon(1e-3));
  const double m0 = wage(55, Education::LessHighSchool, Occupation::Manual, {}, w);
  const double m1 = wage(55, Education::LessHighSchool, Occupation::Manual, {true, false}, w);
  CHECK(m1 / m0 == doctest::Approx(0.929).epsilon(1e-3));
  // log differences across health are age and education free
  for (int age : {51, 63, 75})
    for (int e = 0; e < kEdu; ++e)
      for (int j = 0; j < kOcc; ++j) {
        const double lg = std::log(wage(age, Education(e), Occupation(j), {}, w));
        CHECK(std::log(wage(age, Education(e), Occupation(j), {true, false}, w)) - lg ==
              doctest::Approx(w.poor_physical[j]).epsilon(1e-12));
        CHECK(std::log(wage(age, Education(e), Occupation(j), {false, true}, w)) - lg ==
              doctest::Approx(w.poor_cognitive[j]).epsilon(1e-12));
        CHECK(std::log(wage(age, Education(e), Occupation(j), {}, w)) > -INFINITY);
      }
}

TEST_CASE("medical expense") {
  ExpenseModel zero;
  CHECK(medical_expense({true, true}, InsuranceType::None, 70, zero) == 0.0);
  const ModelParams p = baseline_estimates();
  for (int age : {55, 64, 70, 85}) {
    const double pp = medical_expense({true, true}, InsuranceType::None, age, p.expense);
    const double gg = medical_expense({}, InsuranceType::None, age, p.expense);
    CHECK(pp >= gg);
    for (int h = 0; h < kHealth; ++h) {
      const auto jh = JointHealth::from_index(h);
      const double none = medical_expense(jh, InsuranceType::None, age, p.expense);
      CHECK(medical_expense(jh, InsuranceType::Medicare, age, p.expense) <= none);
      CHECK(medical_expense(jh, InsuranceType::RetireeCovered, age, p.expense) <= none);
      CHECK(none >= 0);
    }
  }
}

TEST_CASE("spousal income") {
  SpousalIncomeModel m;
  m.prob_poly = {-50, 0, 0, 0};
  m.amount_poly = {12, 0, 0, 0};
  for (double u : {0.01, 0.5, 0.99}) CHECK(spousal_income(60, Education::HighSchool, m, u) == 0.0);
  m.prob_poly = {50, 0, 0, 0};
  CHECK(spousal_income(60, Education::LessHighSchool, m, 0.999) == 12.0);

  m.prob_poly = {std::log(0.6 / 0.4), 0, 0, 0};
  m.amount_poly = {10, 0, 0, 0};
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(0, 1);
  double s = 0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) s += spousal_income(60, Education::LessHighSchool, m, u(g));
  CHECK(std::abs(s / n - 6.0) < 0.05);
  CHECK(expected_spousal_income(60, Education::LessHighSchool, m) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("ssdi eligibility") {
  SsdiModel zero;
  CHECK(ssdi_eligibility_prob(66, {true, true}, true, Occupation::Manual, zero) == 0.0);
  CHECK(ssdi_eligibility_prob(60, {}, false, Occupation::Manual, zero) == 0.5);
  const ModelParams p = baseline_estimates();
  for (int j = 0; j < kOcc; ++j)
    for (int age = 51; age <= 64; ++age) CHECK(ssdi_eligibility_prob(age, {}, true, Occupation(j), p.ssdi) < 0.05);
}

TEST_CASE("income shock quadrature") {
  const auto q0 = discretize_income_shock({0.0, 5, 1.0});
  CHECK(q0.nodes == std::vector<double>{0.0});
  CHECK(q0.weights == std::vector<double>{1.0});
  const auto q = discretize_income_shock({2.0, 5, 1.0});
  double s0 = 0, s1 = 0, s2 = 0, s4 = 0;
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    s0 += q.weights[i];
    s1 += q.weights[i] * q.nodes[i];
    s2 += q.weights[i] * q.nodes[i] * q.nodes[i];
    s4 += q.weights[i] * std::pow(q.nodes[i], 4);
  }
  CHECK(std::abs(s0 - 1) < 1e-12);
  CHECK(std::abs(s1) < 1e-12);
  CHECK(std::abs(s2 - 4.0) < 1e-10);
  CHECK(std::abs(s4 - 3 * 16.0) < 1e-9);
  for (int n : {3, 7}) {
    const auto r = discretize_income_shock({5.0, n, 1.0});
    double v = 0;
    for (int i = 0; i < n; ++i) v += r.weights[i] * r.nodes[i] * r.nodes[i];
    CHECK(std::abs(v / 25.0 - 1) < 1e-3);
  }
  CHECK_THROWS(discretize_income_shock({1.0, 2, 1.0}));
}
