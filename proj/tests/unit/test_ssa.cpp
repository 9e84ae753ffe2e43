#include <doctest.h>

#include <random>

#include "retire/ssa.hpp"

using namespace retire;

TEST_CASE("adjustment factor at the reference claim ages") {
  const PolicyRules r66 = fra66_baseline(), r70 = fra70_reform();
  CHECK(adjustment_factor(62, r66) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(adjustment_factor(70, r66) == doctest::Approx(1.32).epsilon(1e-15));
  CHECK(adjustment_factor(66, r66) == 1.0);
  CHECK(adjustment_factor(62, r70) == doctest::Approx(0.55).epsilon(1e-15));
  CHECK(adjustment_factor(70, r70) == 1.0);
  CHECK(adjustment_factor(73, r70) == 1.0);
  CHECK(adjustment_factor(73, r66) == doctest::Approx(1.32).epsilon(1e-15));
  CHECK_THROWS_AS(adjustment_factor(61, r66), RuleViolation);
}

TEST_CASE("adjustment factor is nondecreasing and the reform cuts benefits") {
  const PolicyRules r66 = fra66_baseline(), r70 = fra70_reform();
  for (const auto& r : {r66, r70}) {
    double prev = 0;
    for (int a = 62; a <= 75; ++a) {
      CHECK(adjustment_factor(a, r) >= prev);
      prev = adjustment_factor(a, r);
    }
  }
  for (int a = 62; a <= 70; ++a) {
    CHECK(adjustment_factor(a, r70) <= adjustment_factor(a, r66));
    if (a < 70) CHECK(adjustment_factor(a, r70) < adjustment_factor(a, r66));
  }
}

TEST_CASE("aime update") {
  const PolicyRules r;
  CHECK(aime_update(36, 36, r) == 36);
  CHECK(aime_update(40, 20, r) == 40);
  CHECK(aime_update(30, 65, r) == 31);
}

TEST_CASE("pia schedule") {
  const PolicyRules r;
  CHECK(pia(0, r) == 0);
  CHECK(pia(6.372, r) == doctest::Approx(5.7348).epsilon(1e-14));
  // 5.7348 + 0.32 * 32.052 + 0.15 * 11.576, exact; the 4-decimal rounding is 17.7276
  CHECK(std::abs(pia(50, r) - (0.90 * 6.372 + 0.32 * 32.052 + 0.15 * 11.576)) < 1e-12);
  CHECK(std::abs(pia(50, r) - 17.7276) < 5e-4);
  std::mt19937_64 g(7);
  std::uniform_real_distribution<double> u(0, 150);
  for (int k = 0; k < 2000; ++k) {
    const double a = u(g), b = u(g);
    CHECK(pia(0.5 * (a + b), r) >= 0.5 * (pia(a, r) + pia(b, r)) - 1e-12);
    if (a <= b) CHECK(pia(a, r) <= pia(b, r));
  }
}

TEST_CASE("ss benefit folds the adjustment once") {
  const PolicyRules r;
  const double b1 = r.pia_bendpoints[0];
  const auto first = ss_benefit(62, b1, {true, false, false}, r);
  CHECK(first.benefit == doctest::Approx(4.3011).epsilon(1e-12));
  CHECK(first.aime == doctest::Approx(0.75 * 6.372).epsilon(1e-15));
  CHECK(first.state.first_claim_year);
  CHECK(first.state.adjusted);
  auto next = ss_benefit(63, first.aime, first.state, r);
  CHECK(next.benefit == first.benefit);
  CHECK(next.aime == first.aime);
  CHECK_FALSE(next.state.first_claim_year);
  for (int a = 64; a < 90; ++a) {
    next = ss_benefit(a, next.aime, next.state, r);
    CHECK(next.benefit == first.benefit);
  }
  CHECK(ss_benefit(62, b1, {false, false, false}, r).benefit == 0);
}

TEST_CASE("ssdi and private pension") {
  const PolicyRules r;
  PensionCoeffs c;
  CHECK(ssdi_benefit(0, r) == 0);
  CHECK(ssdi_benefit(6.372, r) == pia(6.372, r));
  CHECK(private_pension(Occupation::Manual, 6.372, c, r) == doctest::Approx(1.14696).epsilon(1e-14));
  CHECK(std::abs(private_pension(Occupation::Professional, 50, c, r) - 0.4 * pia(50, r)) < 1e-14);
  CHECK(std::abs(private_pension(Occupation::Professional, 50, c, r) - 7.091) < 5e-4);
  c.rho = {0, 0, 0};
  CHECK(private_pension(Occupation::Clerical, 50, c, r) == 0);
}

TEST_CASE("insurance transitions") {
  const PolicyRules r;
  CHECK(insurance_transition(InsuranceType::Tied, 58, 0, r) == InsuranceType::None);
  CHECK(insurance_transition(InsuranceType::Tied, 58, 1, r) == InsuranceType::Tied);
  CHECK(insurance_transition(InsuranceType::RetireeCovered, 60, 0, r) == InsuranceType::RetireeCovered);
  for (int d : {0, 1}) CHECK(insurance_transition(InsuranceType::None, 64, d, r) == InsuranceType::Medicare);
  CHECK(insurance_transition(InsuranceType::None, 60, 1, r) == InsuranceType::None);
}

TEST_CASE("rules validation") {
  PolicyRules r;
  CHECK_NOTHROW(r.validate());
  r.pia_percentages = {0.3, 0.32, 0.15};
  CHECK_THROWS(r.validate());
  r = {};
  r.pia_bendpoints = {40, 6};
  CHECK_THROWS(r.validate());
  r = {};
  r.fra = 72;
  CHECK_THROWS(r.validate());
}
