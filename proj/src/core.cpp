#include "retire/core.hpp"

#include <cmath>

namespace retire {

const char* to_string(Occupation o) {
  switch (o) {
    case Occupation::Manual: return "manual";
    case Occupation::Clerical: return "clerical";
    case Occupation::Professional: return "professional";
  }
  return "?";
}

const char* to_string(Education e) {
  switch (e) {
    case Education::LessHighSchool: return "less_high_school";
    case Education::HighSchool: return "high_school";
    case Education::SomeCollege: return "some_college";
    case Education::CollegePlus: return "college_plus";
  }
  return "?";
}

const char* to_string(InsuranceType i) {
  switch (i) {
    case InsuranceType::None: return "none";
    case InsuranceType::Tied: return "tied";
    case InsuranceType::RetireeCovered: return "retiree";
    case InsuranceType::Medicare: return "medicare";
  }
  return "?";
}

Occupation occupation_from_string(const std::string& s) {
  if (s == "manual") return Occupation::Manual;
  if (s == "clerical") return Occupation::Clerical;
  if (s == "professional") return Occupation::Professional;
  throw std::invalid_argument("unknown occupation '" + s + "'");
}

void validate_state(const StateVector& s, double asset_floor) {
  if (s.age < 51 || s.age > 90) throw std::invalid_argument("state: age outside 51..90");
  if (s.assets < asset_floor) throw std::invalid_argument("state: assets below floor");
  if (s.aime < 0) throw std::invalid_argument("state: negative aime");
  if (s.age >= 65 && s.insurance != InsuranceType::Medicare)
    throw std::invalid_argument("state: age >= 65 requires medicare");
  if (s.age < 65 && s.insurance == InsuranceType::Medicare)
    throw std::invalid_argument("state: medicare before 65");
  if (s.claimed && s.age <= 62) throw std::invalid_argument("state: claimed at age <= 62");
  if (s.first_claim_year && !s.claimed) throw std::invalid_argument("state: first_claim_year without claimed");
}

void PreferenceParams::validate() const {
  if (!(nu > 0)) throw std::invalid_argument("prefs: nu must be > 0");
  if (!(beta >= 0 && beta <= 1)) throw std::invalid_argument("prefs: beta outside [0,1]");
  if (!(iota1 >= 0)) throw std::invalid_argument("prefs: iota1 must be >= 0");
  if (!(iota2 >= 0)) throw std::invalid_argument("prefs: iota2 must be >= 0");
  if (!(sigma_zeta >= 0)) throw std::invalid_argument("prefs: sigma_zeta must be >= 0");
  if (!(ev_scale > 0)) throw std::invalid_argument("prefs: ev_scale must be > 0");
}

double crra_utility(double c, double nu) {
  if (!(c > 0)) throw std::domain_error("crra_utility: consumption must be positive");
  if (std::abs(nu - 1.0) < 1e-12) return std::log(c);
  return std::expm1((1.0 - nu) * std::log(c)) / (1.0 - nu);
}

double nonpecuniary_utility(int d, JointHealth h, Occupation occ, const PreferenceParams& p, int type_index) {
  if (d == 0) return 0.0;
  const int j = static_cast<int>(occ);
  double l1 = p.lambda1[j] + (type_index == 1 ? p.delta_lambda : 0.0);
  return l1 + (h.physical_poor ? p.lambda2[j] : 0.0) + (h.cognitive_poor ? p.lambda3[j] : 0.0);
}

double bequest_utility(double a_next, const PreferenceParams& p) {
  if (p.iota1 == 0.0) return 0.0;
  const double x = a_next + p.iota2;
  if (!(x > 0)) throw std::domain_error("bequest_utility: a_next + iota2 must be positive");
  return p.iota1 * crra_utility(x, p.nu);
}

}  // namespace retire
