#include "retire/processes.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace retire {

HealthCov health_covariates(int age, Education e, Occupation occ, int d) {
  const double a = (age - 60) / 10.0;
  const int ei = static_cast<int>(e), j = static_cast<int>(occ);
  HealthCov x{};
  x[0] = 1.0;
  x[1] = a;
  x[2] = a * a;
  for (int k = 1; k < kEdu; ++k) x[2 + k] = ei == k ? 1.0 : 0.0;
  for (int k = 0; k < kOcc; ++k) x[6 + k] = (d == 1 && j == k) ? 1.0 : 0.0;
  return x;
}

std::array<double, kHealth> HealthTransitionModel::probs(int current, const HealthCov& x) const {
  std::array<double, kHealth> eta{};
  eta[0] = 0.0;
  for (int n = 1; n < kHealth; ++n) {
    double s = 0;
    for (int k = 0; k < kHealthCov; ++k) s += coef[current][n][k] * x[k];
    eta[n] = s;
  }
  const double m = *std::max_element(eta.begin(), eta.end());
  double z = 0;
  for (auto& v : eta) z += (v = std::exp(v - m));
  for (auto& v : eta) v /= z;
  return eta;
}

HealthProbs health_transition_probs(const StateVector& s, int d, const HealthTransitionModel& m) {
  HealthProbs out;
  int age = s.age;
  if (age < m.min_age || age > m.max_age) {
    age = std::clamp(age, m.min_age, m.max_age);
    out.age_clamped = true;
  }
  out.p = m.probs(s.health.index(), health_covariates(age, s.education, s.occupation, d));
  return out;
}

double MortalityModel::q_at(int age) const {
  if (age >= terminal_age) return 1.0;
  const int i = age - first_age;
  if (i < 0 || i >= static_cast<int>(q.size())) throw std::out_of_range("mortality: age outside life table");
  return q[i];
}

namespace {
std::array<double, kHealth> normalized(const std::array<Quadratic, kHealth>& f, int age) {
  const double x = (age - 70) / 10.0;
  std::array<double, kHealth> p{};
  double s = 0;
  for (int h = 0; h < kHealth; ++h) s += (p[h] = std::max(0.0, f[h](x)));
  if (!(s > 0)) throw std::domain_error("mortality: health distribution has no mass");
  for (auto& v : p) v /= s;
  return p;
}
}  // namespace

std::array<double, kHealth> MortalityModel::p_alive(int age) const { return normalized(alive, age); }
std::array<double, kHealth> MortalityModel::p_dying(int age) const { return normalized(dying, age); }

double MortalityModel::shifter(int age, int h) const {
  JointHealth jh = JointHealth::from_index(h);
  if (mute_physical) jh.physical_poor = false;
  if (mute_cognitive) jh.cognitive_poor = false;
  const int k = jh.index();
  const double pa = p_alive(age)[k];
  if (pa < 1e-10) throw std::domain_error("mortality: P(h|alive) below 1e-10, degenerate health distribution");
  return p_dying(age)[k] / pa;
}

void MortalityModel::validate() const {
  if (terminal_age <= first_age) throw std::invalid_argument("mortality: terminal age must exceed first age");
  if (static_cast<int>(q.size()) < terminal_age - first_age)
    throw std::invalid_argument("mortality: life table must cover ages " + std::to_string(first_age) + ".." +
                                std::to_string(terminal_age - 1));
  for (double v : q)
    if (!(v >= 0 && v <= 1)) throw std::invalid_argument("mortality: q outside [0,1]");
}

double survival_prob(int age, JointHealth h, const MortalityModel& m) {
  if (age >= m.terminal_age) return 0.0;
  const double p = 1.0 - m.q_at(age) * m.shifter(age, h.index());
  return std::clamp(p, 0.0, 1.0);
}

double wage(int age, Education e, Occupation occ, JointHealth h, const WageModel& m) {
  const int j = static_cast<int>(occ), ei = static_cast<int>(e);
  double x = m.constant[j] + m.age[j] * age + m.age2[j] * double(age) * age;
  if (ei > 0) x += m.edu[ei - 1][j];
  if (h.physical_poor) x += m.poor_physical[j];
  if (h.cognitive_poor) x += m.poor_cognitive[j];
  return std::exp(x);
}

double medical_expense(JointHealth h, InsuranceType ins, int age, const ExpenseModel& m) {
  const double hp = h.physical_poor, hc = h.cognitive_poor;
  const double xb = m.intercept + m.poor_physical * hp + m.poor_cognitive * hc + m.poor_both * hp * hc +
                    m.insurance[static_cast<int>(ins)] + m.age * (age - 65) / 10.0;
  if (m.sigma <= 0) return std::max(0.0, xb);
  const double z = xb / m.sigma;
  const double Phi = 0.5 * std::erfc(-z / std::sqrt(2.0));
  const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  return std::max(0.0, Phi * xb + m.sigma * phi);
}

namespace {
double cubic_edu(const std::array<double, 4>& poly, const std::array<double, 3>& edu, int age, Education e) {
  const double a = (age - 60) / 10.0;
  double x = poly[0] + a * (poly[1] + a * (poly[2] + a * poly[3]));
  const int ei = static_cast<int>(e);
  if (ei > 0) x += edu[ei - 1];
  return x;
}
}  // namespace

double SpousalIncomeModel::prob_positive(int age, Education e) const {
  return logistic(cubic_edu(prob_poly, prob_edu, age, e));
}
double SpousalIncomeModel::amount(int age, Education e) const {
  return std::max(0.0, cubic_edu(amount_poly, amount_edu, age, e));
}

double spousal_income(int age, Education e, const SpousalIncomeModel& m, double u) {
  return u < m.prob_positive(age, e) ? m.amount(age, e) : 0.0;
}

double expected_spousal_income(int age, Education e, const SpousalIncomeModel& m) {
  return m.prob_positive(age, e) * m.amount(age, e);
}

double ssdi_eligibility_prob(int age, JointHealth h, bool worked_last, Occupation occ, const SsdiModel& m) {
  if (age > m.last_age) return 0.0;
  const double hp = h.physical_poor, hc = h.cognitive_poor;
  const double a = (age - 55) / 10.0;
  const double x = m.intercept + m.poor_physical * hp + m.poor_cognitive * hc + m.poor_both * hp * hc +
                   m.age1 * a + m.age2 * a * a + m.worked_last * (worked_last ? 1.0 : 0.0) +
                   m.occupation[static_cast<int>(occ)];
  return logistic(x);
}

Quadrature discretize_income_shock(const ShockSpec& s) {
  if (s.sigma_zeta < 0) throw std::invalid_argument("shock: negative sigma");
  if (s.sigma_zeta == 0) return {{0.0}, {1.0}};
  const int n = s.nodes;
  if (n < 3) throw std::invalid_argument("shock: need at least 3 quadrature nodes");
  // Golub-Welsch for the probabilists' Hermite weight exp(-x^2/2).
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(double(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    x[i] = es.eigenvalues()(i);
    w[i] = es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
  }
  // enforce exact symmetry
  Quadrature q{std::vector<double>(n), std::vector<double>(n)};
  double ws = 0;
  for (int i = 0; i < n; ++i) {
    const int k = n - 1 - i;
    q.nodes[i] = s.sigma_zeta * 0.5 * (x[i] - x[k]);
    q.weights[i] = 0.5 * (w[i] + w[k]);
    ws += q.weights[i];
  }
  if (n % 2 == 1) q.nodes[n / 2] = 0.0;
  for (auto& v : q.weights) v /= ws;
  return q;
}

}  // namespace retire
