// Domain types and period utility primitives.
// Money is in thousands of 1999 dollars throughout.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace retire {

enum class Occupation : int { Manual = 0, Clerical = 1, Professional = 2 };
enum class Education : int { LessHighSchool = 0, HighSchool = 1, SomeCollege = 2, CollegePlus = 3 };
enum class InsuranceType : int { None = 0, Tied = 1, RetireeCovered = 2, Medicare = 3 };

inline constexpr int kOcc = 3;
inline constexpr int kEdu = 4;
inline constexpr int kHealth = 4;

using OccVec = std::array<double, kOcc>;

const char* to_string(Occupation o);
const char* to_string(Education e);
const char* to_string(InsuranceType i);
Occupation occupation_from_string(const std::string& s);

// Joint health; index = 2*h^p + h^c, so 0..3 <-> {00, 01, 10, 11}.
struct JointHealth {
  bool physical_poor = false;
  bool cognitive_poor = false;

  constexpr int index() const { return (physical_poor ? 2 : 0) + (cognitive_poor ? 1 : 0); }
  static constexpr JointHealth from_index(int i) { return JointHealth{(i & 2) != 0, (i & 1) != 0}; }
  friend constexpr bool operator==(JointHealth a, JointHealth b) {
    return a.physical_poor == b.physical_poor && a.cognitive_poor == b.cognitive_poor;
  }
};

struct StateVector {
  int age = 51;
  Education education = Education::HighSchool;
  Occupation occupation = Occupation::Manual;
  JointHealth health{};
  double assets = 0.0;
  double aime = 0.0;
  InsuranceType insurance = InsuranceType::None;
  bool worked_last = true;
  bool claimed = false;
  bool first_claim_year = false;
  int type_index = 0;
};

// Throws std::invalid_argument describing the first violated invariant.
void validate_state(const StateVector& s, double asset_floor);

// lambda entries are signed: negative values are disutility of work.
struct PreferenceParams {
  double nu = 1.318;
  double beta = 0.97;
  OccVec lambda1{-0.410, 0.085, -0.101};
  OccVec lambda2{-0.633, -0.292, -0.162};
  OccVec lambda3{-0.015, -0.364, -0.437};
  double iota1 = 8.476;
  double iota2 = 10.0;
  double sigma_zeta = 5.0;
  double ev_scale = 1.0;
  // type-2 shift of lambda1 (mixture variant)
  double delta_lambda = 0.0;

  void validate() const;
};

inline constexpr double kEulerGamma = 0.57721566490153286061;

double crra_utility(double c, double nu);
double nonpecuniary_utility(int d, JointHealth h, Occupation occ, const PreferenceParams& p, int type_index = 0);
double bequest_utility(double a_next, const PreferenceParams& p);

inline double logistic(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace retire
