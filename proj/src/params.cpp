#include "retire/params.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace retire {

using nlohmann::json;

double type_probability(const StateVector& init, bool work_pref, const TypeModel& m) {
  const int e = static_cast<int>(init.education);
  double x = m.constant + (work_pref ? m.work_pref : 0.0);
  if (e > 0) x += m.edu[e - 1];
  if (init.health.physical_poor) x += m.poor_physical;
  if (init.health.cognitive_poor) x += m.poor_cognitive;
  x += m.log_assets * std::log(std::max(init.assets, 1.0));
  return logistic(x);
}

void ModelParams::validate(const PolicyRules& rules) const {
  prefs.validate();
  mortality.validate();
  if (!(prefs.iota2 + rules.asset_floor > 0) && prefs.iota1 > 0)
    throw std::invalid_argument("params: iota2 + asset_floor must be positive when iota1 > 0");
  if (types.n_types != 1 && types.n_types != 2) throw std::invalid_argument("params: n_types must be 1 or 2");
  for (double r : pension.rho)
    if (!(r >= 0)) throw std::invalid_argument("params: pension replacement factors must be >= 0");
  if (!(expense.sigma >= 0)) throw std::invalid_argument("params: expense sigma must be >= 0");
}

HealthTransitionModel synthetic_health_transitions() {
  HealthTransitionModel m;
  // {const, a, a^2, hs, sc, col, work*M, work*C, work*P}
  m.coef[0][1] = {-3.0, 0.8, 0.1, -0.2, -0.35, -0.5, -0.20, -0.15, -0.10};
  m.coef[0][2] = {-2.8, 0.6, 0.1, -0.2, -0.35, -0.5, -0.25, -0.20, -0.15};
  m.coef[0][3] = {-5.0, 1.0, 0.1, -0.3, -0.50, -0.7, -0.30, -0.25, -0.20};
  m.coef[1][1] = {1.0, 0.5, 0.0, -0.2, -0.3, -0.4, -0.2, -0.2, -0.2};
  m.coef[1][2] = {-1.5, 0.5, 0.0, -0.1, -0.2, -0.3, -0.2, -0.2, -0.2};
  m.coef[1][3] = {-1.0, 0.8, 0.0, -0.2, -0.3, -0.4, -0.3, -0.3, -0.3};
  m.coef[2][1] = {-2.0, 0.5, 0.0, -0.1, -0.2, -0.3, -0.2, -0.2, -0.2};
  m.coef[2][2] = {1.2, 0.4, 0.0, -0.2, -0.3, -0.4, -0.30, -0.25, -0.20};
  m.coef[2][3] = {-0.5, 0.8, 0.0, -0.2, -0.3, -0.4, -0.3, -0.3, -0.3};
  m.coef[3][1] = {0.5, 0.3, 0.0, -0.1, -0.15, -0.2, -0.2, -0.2, -0.2};
  m.coef[3][2] = {1.0, 0.3, 0.0, -0.1, -0.15, -0.2, -0.2, -0.2, -0.2};
  m.coef[3][3] = {2.0, 0.5, 0.0, -0.2, -0.3, -0.4, -0.3, -0.3, -0.3};
  return m;
}

std::vector<double> synthetic_life_table(int first_age, int terminal_age) {
  std::vector<double> q;
  for (int a = first_age; a < terminal_age; ++a) {
    const double v = 0.0056 * std::exp(0.086 * (a - 50));
    q.push_back(std::round(v * 1e6) / 1e6);
  }
  q.push_back(1.0);
  return q;
}

MortalityModel synthetic_mortality() {
  MortalityModel m;
  m.q = synthetic_life_table(m.first_age, m.terminal_age);
  // order 00, 01, 10, 11
  m.alive = {Quadratic{0.68, -0.14, -0.01}, Quadratic{0.12, 0.05, 0.0}, Quadratic{0.10, 0.03, 0.0},
             Quadratic{0.10, 0.06, 0.01}};
  m.dying = {Quadratic{0.30, -0.10, -0.01}, Quadratic{0.15, 0.05, 0.0}, Quadratic{0.22, 0.02, 0.0},
             Quadratic{0.33, 0.03, 0.01}};
  return m;
}

WageModel baseline_wage_model() {
  WageModel w;
  // Constants re-anchored so that good-health workers with the calibrated
  // education mix earn the calibrated mean wage at the mean age (unanchored
  // constants: 0.818, 0.944, 4.334).
  w.constant = {4.6735, 4.9144, 4.5033};
  w.age = {0.156, 0.043, 0.010};
  w.age2 = {-0.0030, -0.0011, -0.0003};
  w.edu[0] = {0.151, 0.232, -0.007};
  w.edu[1] = {0.186, 0.356, 0.155};
  w.edu[2] = {0.259, 0.459, 0.289};
  w.poor_physical = {-0.074, -0.109, -0.042};
  w.poor_cognitive = {-0.073, -0.154, -0.189};
  return w;
}

ModelParams baseline_estimates() {
  ModelParams p;
  p.wage = baseline_wage_model();
  p.health = synthetic_health_transitions();
  p.mortality = synthetic_mortality();
  p.expense.intercept = 1.0;
  p.expense.poor_physical = 2.0;
  p.expense.poor_cognitive = 0.5;
  p.expense.poor_both = 0.5;
  p.expense.insurance = {0.0, -1.0, -1.0, -1.5};
  p.expense.age = 0.5;
  p.expense.sigma = 3.0;
  p.spouse.prob_poly = {1.0, -0.5, -0.1, 0.0};
  p.spouse.prob_edu = {0.1, 0.2, 0.3};
  p.spouse.amount_poly = {18.0, -4.0, 0.0, 0.0};
  p.spouse.amount_edu = {2.0, 4.0, 8.0};
  p.ssdi.intercept = -4.0;
  p.ssdi.poor_physical = 2.5;
  p.ssdi.poor_cognitive = 1.0;
  p.ssdi.poor_both = 0.5;
  p.ssdi.age1 = 0.5;
  p.ssdi.worked_last = -1.0;
  p.ssdi.occupation = {0.0, -0.2, -0.5};
  return p;
}

std::vector<double> read_life_table(const std::string& path, int first_age, int terminal_age) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("life table not found: " + path);
  std::vector<double> q(terminal_age - first_age + 1, -1.0);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      if (line.rfind("age", 0) == 0) continue;
    }
    int age;
    double v;
    if (std::sscanf(line.c_str(), "%d,%lf", &age, &v) != 2)
      throw std::runtime_error("life table " + path + ": cannot parse line '" + line + "'");
    if (age >= first_age && age <= terminal_age) q[age - first_age] = v;
  }
  for (int a = first_age; a < terminal_age; ++a)
    if (q[a - first_age] < 0)
      throw std::runtime_error("life table " + path + ": missing age " + std::to_string(a));
  q.back() = 1.0;
  return q;
}

void write_life_table(const std::string& path, const std::vector<double>& q, int first_age) {
  std::ofstream out(path);
  out << "# schema_version=" << kSchemaVersion << "\nage,q\n";
  char buf[64];
  for (size_t i = 0; i < q.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%d,%.17g\n", first_age + int(i), q[i]);
    out << buf;
  }
}

namespace {

json quad(const Quadratic& q) { return json::array({q.c0, q.c1, q.c2}); }
Quadratic quad(const json& j) { return Quadratic{j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

template <class A>
A arr(const json& j) {
  A a{};
  if (j.size() != a.size()) throw std::invalid_argument("params: array of length " + std::to_string(a.size()) + " expected");
  for (size_t i = 0; i < a.size(); ++i) a[i] = j.at(i).get<typename A::value_type>();
  return a;
}

}  // namespace

json to_json(const ModelParams& p) {
  json j;
  j["schema_version"] = kSchemaVersion;
  const auto& f = p.prefs;
  j["preferences"] = {{"nu", f.nu},         {"beta", f.beta},         {"lambda1", f.lambda1},
                      {"lambda2", f.lambda2}, {"lambda3", f.lambda3},   {"iota1", f.iota1},
                      {"iota2", f.iota2},   {"sigma_zeta", f.sigma_zeta}, {"ev_scale", f.ev_scale},
                      {"delta_lambda", f.delta_lambda}};
  const auto& w = p.wage;
  j["wage"] = {{"constant", w.constant},           {"age", w.age},
               {"age2", w.age2},                   {"edu", w.edu},
               {"poor_physical", w.poor_physical}, {"poor_cognitive", w.poor_cognitive}};
  json h = json::array();
  for (int c = 0; c < kHealth; ++c) {
    json row = json::array();
    for (int n = 0; n < kHealth; ++n) row.push_back(p.health.coef[c][n]);
    h.push_back(row);
  }
  j["health"] = {{"coef", h}, {"min_age", p.health.min_age}, {"max_age", p.health.max_age}};
  json al = json::array(), dy = json::array();
  for (int k = 0; k < kHealth; ++k) {
    al.push_back(quad(p.mortality.alive[k]));
    dy.push_back(quad(p.mortality.dying[k]));
  }
  j["mortality"] = {{"first_age", p.mortality.first_age},
                    {"terminal_age", p.mortality.terminal_age},
                    {"q", p.mortality.q},
                    {"alive", al},
                    {"dying", dy},
                    {"mute_physical", p.mortality.mute_physical},
                    {"mute_cognitive", p.mortality.mute_cognitive}};
  const auto& e = p.expense;
  j["expense"] = {{"intercept", e.intercept},   {"poor_physical", e.poor_physical},
                  {"poor_cognitive", e.poor_cognitive}, {"poor_both", e.poor_both},
                  {"insurance", e.insurance},   {"age", e.age},
                  {"sigma", e.sigma}};
  const auto& s = p.spouse;
  j["spouse"] = {{"prob_poly", s.prob_poly},
                 {"prob_edu", s.prob_edu},
                 {"amount_poly", s.amount_poly},
                 {"amount_edu", s.amount_edu}};
  const auto& d = p.ssdi;
  j["ssdi"] = {{"intercept", d.intercept},   {"poor_physical", d.poor_physical}, {"poor_cognitive", d.poor_cognitive},
               {"poor_both", d.poor_both},   {"age1", d.age1},                   {"age2", d.age2},
               {"worked_last", d.worked_last}, {"occupation", d.occupation},     {"last_age", d.last_age}};
  j["pension"] = {{"rho", p.pension.rho}};
  const auto& t = p.types;
  j["types"] = {{"n_types", t.n_types},           {"constant", t.constant},
                {"work_pref", t.work_pref},       {"edu", t.edu},
                {"poor_physical", t.poor_physical}, {"poor_cognitive", t.poor_cognitive},
                {"log_assets", t.log_assets}};
  return j;
}

ModelParams params_from_json(const json& j) {
  if (j.value("schema_version", 0) != kSchemaVersion)
    throw std::invalid_argument("params: unsupported schema_version");
  ModelParams p;
  const auto& f = j.at("preferences");
  p.prefs.nu = f.at("nu");
  p.prefs.beta = f.at("beta");
  // Table-style positive disutilities may be supplied instead of signed lambdas.
  if (f.contains("disutility1")) {
    for (int k = 0; k < 3; ++k) {
      p.prefs.lambda1[k] = -f.at("disutility1").at(k).get<double>();
      p.prefs.lambda2[k] = -f.at("disutility2").at(k).get<double>();
      p.prefs.lambda3[k] = -f.at("disutility3").at(k).get<double>();
    }
  } else {
    p.prefs.lambda1 = arr<OccVec>(f.at("lambda1"));
    p.prefs.lambda2 = arr<OccVec>(f.at("lambda2"));
    p.prefs.lambda3 = arr<OccVec>(f.at("lambda3"));
  }
  p.prefs.iota1 = f.at("iota1");
  p.prefs.iota2 = f.at("iota2");
  p.prefs.sigma_zeta = f.at("sigma_zeta");
  p.prefs.ev_scale = f.at("ev_scale");
  p.prefs.delta_lambda = f.value("delta_lambda", 0.0);

  const auto& w = j.at("wage");
  p.wage.constant = arr<OccVec>(w.at("constant"));
  p.wage.age = arr<OccVec>(w.at("age"));
  p.wage.age2 = arr<OccVec>(w.at("age2"));
  for (int k = 0; k < 3; ++k) p.wage.edu[k] = arr<OccVec>(w.at("edu").at(k));
  p.wage.poor_physical = arr<OccVec>(w.at("poor_physical"));
  p.wage.poor_cognitive = arr<OccVec>(w.at("poor_cognitive"));

  const auto& h = j.at("health");
  for (int c = 0; c < kHealth; ++c)
    for (int n = 0; n < kHealth; ++n) p.health.coef[c][n] = arr<HealthCov>(h.at("coef").at(c).at(n));
  p.health.min_age = h.value("min_age", 51);
  p.health.max_age = h.value("max_age", 90);

  const auto& m = j.at("mortality");
  p.mortality.first_age = m.at("first_age");
  p.mortality.terminal_age = m.at("terminal_age");
  if (m.contains("q")) p.mortality.q = m.at("q").get<std::vector<double>>();
  for (int k = 0; k < kHealth; ++k) {
    p.mortality.alive[k] = quad(m.at("alive").at(k));
    p.mortality.dying[k] = quad(m.at("dying").at(k));
  }
  p.mortality.mute_physical = m.value("mute_physical", false);
  p.mortality.mute_cognitive = m.value("mute_cognitive", false);

  const auto& e = j.at("expense");
  p.expense.intercept = e.at("intercept");
  p.expense.poor_physical = e.at("poor_physical");
  p.expense.poor_cognitive = e.at("poor_cognitive");
  p.expense.poor_both = e.at("poor_both");
  p.expense.insurance = arr<std::array<double, 4>>(e.at("insurance"));
  p.expense.age = e.at("age");
  p.expense.sigma = e.at("sigma");

  const auto& s = j.at("spouse");
  p.spouse.prob_poly = arr<std::array<double, 4>>(s.at("prob_poly"));
  p.spouse.prob_edu = arr<std::array<double, 3>>(s.at("prob_edu"));
  p.spouse.amount_poly = arr<std::array<double, 4>>(s.at("amount_poly"));
  p.spouse.amount_edu = arr<std::array<double, 3>>(s.at("amount_edu"));

  const auto& d = j.at("ssdi");
  p.ssdi.intercept = d.at("intercept");
  p.ssdi.poor_physical = d.at("poor_physical");
  p.ssdi.poor_cognitive = d.at("poor_cognitive");
  p.ssdi.poor_both = d.at("poor_both");
  p.ssdi.age1 = d.at("age1");
  p.ssdi.age2 = d.at("age2");
  p.ssdi.worked_last = d.at("worked_last");
  p.ssdi.occupation = arr<OccVec>(d.at("occupation"));
  p.ssdi.last_age = d.value("last_age", 64);

  p.pension.rho = arr<OccVec>(j.at("pension").at("rho"));

  if (j.contains("types")) {
    const auto& t = j.at("types");
    p.types.n_types = t.value("n_types", 1);
    p.types.constant = t.value("constant", 0.0);
    p.types.work_pref = t.value("work_pref", 0.0);
    if (t.contains("edu")) p.types.edu = arr<std::array<double, 3>>(t.at("edu"));
    p.types.poor_physical = t.value("poor_physical", 0.0);
    p.types.poor_cognitive = t.value("poor_cognitive", 0.0);
    p.types.log_assets = t.value("log_assets", 0.0);
  }
  return p;
}

json to_json(const PolicyRules& r) {
  return json{{"schema_version", kSchemaVersion},
              {"name", r.name},
              {"fra", r.fra},
              {"early_rate_first3", r.early_rate_first3},
              {"early_rate_rest", r.early_rate_rest},
              {"delayed_credit", r.delayed_credit},
              {"delayed_credit_max_age", r.delayed_credit_max_age},
              {"earliest_claim_age", r.earliest_claim_age},
              {"pia_percentages", r.pia_percentages},
              {"pia_bendpoints", r.pia_bendpoints},
              {"consumption_floor", r.consumption_floor},
              {"asset_floor", r.asset_floor},
              {"interest_rate", r.interest_rate},
              {"medicare_age", r.medicare_age}};
}

PolicyRules rules_from_json(const json& j) {
  if (j.value("schema_version", 0) != kSchemaVersion)
    throw std::invalid_argument("rules: unsupported schema_version");
  PolicyRules r;
  r.name = j.value("name", std::string("custom"));
  r.fra = j.at("fra");
  r.early_rate_first3 = j.at("early_rate_first3");
  r.early_rate_rest = j.at("early_rate_rest");
  r.delayed_credit = j.at("delayed_credit");
  r.delayed_credit_max_age = j.at("delayed_credit_max_age");
  r.earliest_claim_age = j.at("earliest_claim_age");
  r.pia_percentages = arr<std::array<double, 3>>(j.at("pia_percentages"));
  r.pia_bendpoints = arr<std::array<double, 2>>(j.at("pia_bendpoints"));
  r.consumption_floor = j.at("consumption_floor");
  r.asset_floor = j.at("asset_floor");
  r.interest_rate = j.at("interest_rate");
  r.medicare_age = j.value("medicare_age", 65);
  r.validate();
  return r;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace retire
