#include "retire/simulator.hpp"

#include <omp.h>

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "retire/rng.hpp"

namespace retire {

namespace {

enum Purpose : std::uint64_t { kLife = 0, kPredict = 1, kInit = 2 };

template <std::size_t N>
std::array<double, N> normalized(const std::array<double, N>& w, const char* what) {
  double s = 0;
  for (double x : w) {
    if (!(x >= 0) || !std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": negative or non-finite mass");
    s += x;
  }
  if (s <= 0) throw std::invalid_argument(std::string(what) + ": zero total mass");
  std::array<double, N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = w[i] / s;
  return out;
}

template <class W>
int pick(const W& w, double u) {
  double c = 0;
  const int n = static_cast<int>(std::size(w));
  for (int i = 0; i < n; ++i) {
    c += w[i];
    if (u < c) return i;
  }
  for (int i = n - 1; i >= 0; --i)  // rounding: last positive cell
    if (w[i] > 0) return i;
  return n - 1;
}

double draw(const ContinuousDist& d, Stream& rng) {
  if (d.kind == "point") return d.a;
  if (d.kind == "normal") {
    for (int i = 0; i < 1000; ++i) {
      const double x = d.a + d.b * rng.normal();
      if (x >= d.lower) return x;
    }
    return d.lower;
  }
  if (d.kind == "lognormal") {
    const double s2 = std::log1p((d.b / d.a) * (d.b / d.a));
    return std::exp(std::log(d.a) - 0.5 * s2 + std::sqrt(s2) * rng.normal());
  }
  throw std::invalid_argument("unknown distribution kind '" + d.kind + "'");
}

void check_dist(const ContinuousDist& d, const char* what, double floor) {
  if (d.kind == "point") {
    if (!std::isfinite(d.a)) throw std::invalid_argument(std::string(what) + ": non-finite point mass");
    if (d.a < floor) throw std::invalid_argument(std::string(what) + ": point mass below the floor");
  } else if (d.kind == "normal") {
    if (!(d.b >= 0) || d.lower < floor) throw std::invalid_argument(std::string(what) + ": bad normal spec");
  } else if (d.kind == "lognormal") {
    if (!(d.a > 0) || !(d.b >= 0)) throw std::invalid_argument(std::string(what) + ": lognormal needs mean > 0");
  } else {
    throw std::invalid_argument(std::string(what) + ": unknown distribution kind '" + d.kind + "'");
  }
}

}  // namespace

void InitialPopulationSpec::validate(double asset_floor) const {
  if (n <= 0) throw std::invalid_argument("population: n must be positive");
  if (age_min < 0 || age_max < age_min) throw std::invalid_argument("population: bad age range");
  if (!age_weights.empty()) {
    if (int(age_weights.size()) != age_max - age_min + 1)
      throw std::invalid_argument("population: age_weights length must match the age range");
    double s = 0;
    for (double w : age_weights) {
      if (!(w >= 0)) throw std::invalid_argument("population: negative age weight");
      s += w;
    }
    if (s <= 0) throw std::invalid_argument("population: zero-mass age distribution");
  }
  if (cross_tab.empty()) normalized(occupation, "population occupation shares");
  for (int j = 0; j < kOcc; ++j) {
    const auto& o = by_occ[j];
    if (cross_tab.empty()) {
      normalized(o.education, "population education shares");
      if (o.poor_physical < 0 || o.poor_physical > 1 || o.poor_cognitive < 0 || o.poor_cognitive > 1)
        throw std::invalid_argument("population: poor-health shares must lie in [0,1]");
    }
    normalized(o.insurance, "population insurance shares");
    check_dist(o.assets, "population assets", asset_floor);
    check_dist(o.aime, "population aime", 0.0);
  }
  if (!cross_tab.empty()) {
    double s = 0;
    for (const auto& c : cross_tab) {
      if (c.occupation < 0 || c.occupation >= kOcc || c.education < 0 || c.education >= kEdu || c.health < 0 ||
          c.health >= kHealth || !(c.prob >= 0))
        throw std::invalid_argument("population: bad cross-tab cell");
      s += c.prob;
    }
    if (s <= 0) throw std::invalid_argument("population: zero-mass cross-tab");
  }
  if (worked_last < 0 || worked_last > 1 || work_pref_share < 0 || work_pref_share > 1)
    throw std::invalid_argument("population: shares must lie in [0,1]");
}

InitialPopulationSpec calibrated_population(int n) {
  InitialPopulationSpec s;
  s.n = n;
  s.age_min = 51;
  s.age_max = 61;
  // worker observation counts by occupation
  s.occupation = {5532, 1819, 4150};
  auto& m = s.by_occ[0];
  m.education = {0.24, 0.45, 0.24, 0.07};
  m.poor_physical = 0.15;
  m.poor_cognitive = 0.22;
  m.insurance = {0.34, 0.29, 0.37};
  m.assets = {"lognormal", 184.85, 509.30, 0};
  m.aime = {"normal", 34.27, 18.26, 0};
  auto& c = s.by_occ[1];
  c.education = {0.07, 0.27, 0.35, 0.30};
  c.poor_physical = 0.11;
  c.poor_cognitive = 0.13;
  c.insurance = {0.40, 0.24, 0.36};
  c.assets = {"lognormal", 382.41, 979.25, 0};
  c.aime = {"normal", 39.40, 19.13, 0};
  auto& p = s.by_occ[2];
  p.education = {0.02, 0.13, 0.19, 0.66};
  p.poor_physical = 0.06;
  p.poor_cognitive = 0.06;
  p.insurance = {0.26, 0.30, 0.43};
  p.assets = {"lognormal", 628.55, 1444.42, 0};
  p.aime = {"normal", 47.18, 22.14, 0};
  return s;
}

std::vector<Individual> generate_population(const InitialPopulationSpec& spec, std::uint64_t seed) {
  spec.validate(-1e300);
  const std::uint64_t key = derive_seed(seed, "population");
  const auto occ_w = spec.cross_tab.empty() ? normalized(spec.occupation, "occupation") : OccVec{};
  std::vector<double> age_w = spec.age_weights;
  if (age_w.empty()) age_w.assign(spec.age_max - spec.age_min + 1, 1.0);
  const double age_sum = std::accumulate(age_w.begin(), age_w.end(), 0.0);
  for (double& w : age_w) w /= age_sum;
  std::vector<double> ct_w;
  if (!spec.cross_tab.empty()) {
    double s = 0;
    for (const auto& c : spec.cross_tab) s += c.prob;
    for (const auto& c : spec.cross_tab) ct_w.push_back(c.prob / s);
  }

  std::vector<Individual> out(spec.n);
  for (int i = 0; i < spec.n; ++i) {
    Stream rng(key, std::uint64_t(i), 0, kInit);
    Individual& ind = out[i];
    ind.id = i;
    StateVector& s = ind.s;
    s.age = spec.age_min + pick(age_w, rng.uniform());
    int occ, edu, h;
    if (!ct_w.empty()) {
      const auto& c = spec.cross_tab[pick(ct_w, rng.uniform())];
      occ = c.occupation;
      edu = c.education;
      h = c.health;
      for (int k = 0; k < 3; ++k) rng.uniform();  // keep the draw count fixed
    } else {
      occ = pick(occ_w, rng.uniform());
      const auto& o = spec.by_occ[occ];
      edu = pick(normalized(o.education, "education"), rng.uniform());
      const bool pp = rng.uniform() < o.poor_physical;
      const bool pc = rng.uniform() < o.poor_cognitive;
      h = JointHealth{pp, pc}.index();
    }
    const auto& o = spec.by_occ[occ];
    s.occupation = Occupation(occ);
    s.education = Education(edu);
    s.health = JointHealth::from_index(h);
    s.insurance = InsuranceType(pick(normalized(o.insurance, "insurance"), rng.uniform()));
    s.assets = draw(o.assets, rng);
    s.aime = draw(o.aime, rng);
    s.worked_last = rng.uniform() < spec.worked_last;
    s.claimed = !s.worked_last && s.age > 62;
    s.first_claim_year = false;
    ind.work_pref = rng.uniform() < spec.work_pref_share;
    const double u_type = rng.uniform();
    s.type_index = spec.draw_types && spec.type_model.n_types == 2
                       ? (u_type < type_probability(s, ind.work_pref, spec.type_model) ? 1 : 0)
                       : 0;
  }
  return out;
}

StateVector PanelRow::state() const {
  StateVector s;
  s.age = age;
  s.education = Education(education);
  s.occupation = Occupation(occupation);
  s.health = JointHealth{health_p != 0, health_c != 0};
  s.assets = assets;
  s.aime = aime;
  s.insurance = InsuranceType(insurance);
  s.worked_last = worked_last != 0;
  s.claimed = claimed_prev != 0;
  s.type_index = type;
  return s;
}

namespace {

struct Lookup {
  const AgeTable* T;
  int g;
  Locate la, lm;

  double at(const std::vector<double>& v, int z, int s) const {
    const AgeLayout& L = T->lay;
    auto c = [&](int a, int m) { return v[L.cell(g, a, m, z, s)]; };
    return (1 - la.w) * ((1 - lm.w) * c(la.i, lm.i) + lm.w * c(la.i, lm.i + 1)) +
           la.w * ((1 - lm.w) * c(la.i + 1, lm.i) + lm.w * c(la.i + 1, lm.i + 1));
  }
};

Lookup lookup(const DecisionTables& t, const StateVector& s) {
  const AgeTable& T = t.at(s.age);
  const AgeLayout& L = T.lay;
  if (s.type_index >= L.n_types) throw std::invalid_argument("state type index outside the solved tables");
  Lookup k;
  k.T = &T;
  k.g = L.group(s.type_index, int(s.education), int(s.occupation), s.health.index(), L.ins_slot(s.insurance),
                s.worked_last ? 1 : 0);
  k.la = locate(t.grid.assets, s.assets);
  k.lm = locate(t.grid.aime, s.aime);
  return k;
}

struct Realized {
  PanelRow row;
  StateVector next;
  bool alive;
};

// One period for one individual. Draw order is fixed so counterfactual runs
// with the same seed share every shock.
Realized step(const StateVector& s, std::int64_t id, const DecisionTables& t, const ModelParams& p,
              const PolicyRules& r, std::uint64_t key, bool with_mortality, SimDiagnostics& dg) {
  const int age = s.age;
  Stream rng(key, std::uint64_t(id), std::uint64_t(age), kLife);
  const double u_z = rng.uniform(), u_s = rng.uniform(), u_e0 = rng.uniform(), u_e1 = rng.uniform(),
               u_h = rng.uniform(), u_d = rng.uniform();

  const Lookup k = lookup(t, s);
  const AgeLayout& L = k.T->lay;
  const auto& ga = t.grid.assets;
  const auto& gm = t.grid.aime;
  if (s.assets < ga.front() || s.assets > ga.back()) ++dg.asset_clamps;
  if (s.aime < gm.front() || s.aime > gm.back()) ++dg.aime_clamps;

  const int z = pick(t.zeta.weights, u_z);
  const double pi1 = L.n_ssdi == 2 ? ssdi_eligibility_prob(s, p.ssdi) : 0.0;
  const int si = L.n_ssdi == 2 && u_s < pi1 ? 1 : 0;
  const bool two = L.choice_set_has_work(s.worked_last ? 1 : 0);
  const double scale = p.prefs.ev_scale;

  const double v0 = k.at(k.T->v0, z, si);
  const double e0 = -scale * std::log(-std::log(u_e0));
  int d = 0;
  double pw = 0, v1 = 0, e1 = 0;
  if (two) {
    v1 = k.at(k.T->v1, z, si);
    e1 = -scale * std::log(-std::log(u_e1));
    pw = logistic((v1 - v0) / scale);
    d = v1 + e1 > v0 + e0 ? 1 : 0;
  }

  const Budget b = cash_on_hand(s, d, t.zeta.nodes[z], si == 1, p, r);
  const double cmin = r.consumption_floor;
  double C = std::clamp(k.at(d ? k.T->c1 : k.T->c0, z, si), cmin, b.c_hi);
  double an = b.cash + b.transfer - C;
  if (an < r.asset_floor) {
    ++dg.floor_clamps;
    an = r.asset_floor;
    C = b.cash + b.transfer - an;
  }

  Realized out;
  PanelRow& w = out.row;
  w.id = id;
  w.age = age;
  w.type = s.type_index;
  w.education = int(s.education);
  w.occupation = int(s.occupation);
  w.health_p = s.health.physical_poor;
  w.health_c = s.health.cognitive_poor;
  w.assets = s.assets;
  w.aime = s.aime;
  w.insurance = int(s.insurance);
  w.worked_last = s.worked_last;
  w.claimed_prev = s.claimed;
  w.zeta_node = z;
  w.zeta = t.zeta.nodes[z];
  w.ssdi_eligible = si;
  w.d = d;
  w.consumption = C;
  w.wage = b.parts.wage;
  w.ss = b.parts.ss;
  w.pension = b.parts.pension;
  w.spousal = b.parts.spousal;
  w.ssdi = b.ssdi;
  w.transfer = b.transfer;
  w.income = b.income;
  w.med = b.parts.med;
  w.assets_next = an;
  w.aime_next = b.parts.aime_next;
  w.claimed = b.parts.claimed_after;
  w.first_claim_year = b.parts.first_claim;
  w.flow_utility = crra_utility(C, p.prefs.nu) + nonpecuniary_utility(d, s.health, s.occupation, p.prefs, s.type_index) +
                   (d ? e1 : e0);
  w.p_work = pw;

  const auto hp = health_transition_probs(s, d, p.health).p;
  const double ps = age >= t.grid.terminal_age ? 0.0 : survival_prob(age, s.health, p.mortality);
  out.alive = with_mortality ? u_d < ps : age < t.grid.terminal_age;
  w.survived = out.alive;

  StateVector& nx = out.next;
  nx = s;
  nx.age = age + 1;
  nx.health = JointHealth::from_index(pick(hp, u_h));
  nx.assets = an;
  nx.aime = b.parts.aime_next;
  nx.insurance = insurance_transition(s.insurance, age, d, r);
  nx.worked_last = d == 1;
  nx.claimed = b.parts.claimed_after;
  nx.first_claim_year = false;
  return out;
}

}  // namespace

SimDiagnostics simulate_stream(const std::vector<Individual>& init, const DecisionTables& t, const ModelParams& p,
                               const PolicyRules& r, std::uint64_t seed, const SimOptions& opt, const RowSink& sink,
                               int chunk) {
  const int last = opt.last_age < 0 ? t.grid.terminal_age : std::min(opt.last_age, t.grid.terminal_age);
  for (const auto& ind : init) {
    if (ind.s.age < t.grid.first_age || ind.s.age > t.grid.terminal_age)
      throw std::invalid_argument("initial age " + std::to_string(ind.s.age) + " outside the solved age range");
    if (ind.s.assets < r.asset_floor) throw std::invalid_argument("initial assets below the asset floor");
  }
  const std::uint64_t key = derive_seed(seed, "lifecycle");
  const int threads = opt.threads > 0 ? opt.threads : omp_get_max_threads();
  SimDiagnostics total;
  const int n = static_cast<int>(init.size());
  std::vector<std::vector<PanelRow>> per(std::min(chunk, std::max(n, 1)));
  std::vector<PanelRow> out;
  for (int c0 = 0; c0 < n; c0 += chunk) {
    const int c1 = std::min(n, c0 + chunk);
    std::int64_t ac = 0, mc = 0, fc = 0;
#pragma omp parallel for schedule(dynamic, 64) num_threads(threads) reduction(+ : ac, mc, fc)
    for (int i = c0; i < c1; ++i) {
      auto& rows = per[i - c0];
      rows.clear();
      SimDiagnostics dg;
      StateVector s = init[i].s;
      for (;;) {
        Realized x = step(s, init[i].id, t, p, r, key, opt.with_mortality, dg);
        rows.push_back(x.row);
        if (!x.alive || s.age >= last) break;
        s = x.next;
      }
      ac += dg.asset_clamps;
      mc += dg.aime_clamps;
      fc += dg.floor_clamps;
    }
    total.asset_clamps += ac;
    total.aime_clamps += mc;
    total.floor_clamps += fc;
    out.clear();
    for (int i = c0; i < c1; ++i) out.insert(out.end(), per[i - c0].begin(), per[i - c0].end());
    total.rows += static_cast<std::int64_t>(out.size());
    sink(out);
  }
  return total;
}

Panel simulate_lifecycle(const std::vector<Individual>& init, const DecisionTables& t, const ModelParams& p,
                         const PolicyRules& r, std::uint64_t seed, const SimOptions& opt) {
  Panel panel;
  panel.diag = simulate_stream(init, t, p, r, seed, opt,
                               [&](const std::vector<PanelRow>& rows) {
                                 panel.rows.insert(panel.rows.end(), rows.begin(), rows.end());
                               });
  return panel;
}

std::vector<Prediction> simulate_one_period_ahead(const std::vector<PanelRow>& rows, const DecisionTables& t,
                                                  const ModelParams& p, const PolicyRules& r, std::uint64_t seed,
                                                  const PredictOptions& opt) {
  const std::uint64_t key = derive_seed(seed, "one-period-ahead");
  const int threads = opt.threads > 0 ? opt.threads : omp_get_max_threads();
  std::vector<Prediction> out(rows.size());
  const double scale = p.prefs.ev_scale;
  const double cmin = r.consumption_floor;
  const long n = static_cast<long>(rows.size());
  if (t.grid.zeta_nodes > 16) throw std::invalid_argument("one-period-ahead prediction supports at most 16 zeta nodes");
#pragma omp parallel for schedule(static) num_threads(threads)
  for (long i = 0; i < n; ++i) {
    const PanelRow& w = rows[i];
    const StateVector s = w.state();
    const Lookup k = lookup(t, s);
    const AgeLayout& L = k.T->lay;
    const int si = L.n_ssdi == 2 ? w.ssdi_eligible : 0;
    const bool two = L.choice_set_has_work(w.worked_last);
    const int z_lo = opt.integrate_zeta ? 0 : w.zeta_node;
    const int z_hi = opt.integrate_zeta ? L.nz : w.zeta_node + 1;

    std::array<double, 16> pz{}, a0{}, a1{}, cz0{}, cz1{}, wz{};
    double P = 0;
    for (int z = z_lo; z < z_hi; ++z) {
      wz[z] = opt.integrate_zeta ? t.zeta.weights[z] : 1.0;
      pz[z] = two ? logistic((k.at(k.T->v1, z, si) - k.at(k.T->v0, z, si)) / scale) : 0.0;
      P += wz[z] * pz[z];
      for (int d = 0; d <= (two ? 1 : 0); ++d) {
        const Budget b = cash_on_hand(s, d, t.zeta.nodes[z], si == 1, p, r);
        const double C = std::clamp(k.at(d ? k.T->c1 : k.T->c0, z, si), cmin, b.c_hi);
        const double an = std::max(r.asset_floor, b.cash + b.transfer - C);
        (d ? a1 : a0)[z] = an;
        (d ? cz1 : cz0)[z] = C;
      }
    }
    Stream rng(key, std::uint64_t(w.id), std::uint64_t(w.age), kPredict);
    Prediction& pr = out[i];
    pr.p_work = P;
    const double u_d = rng.uniform(), u_z = rng.uniform();
    pr.d = u_d < P ? 1 : 0;
    for (int z = z_lo; z < z_hi; ++z) {
      pr.assets_next += wz[z] * (pz[z] * a1[z] + (1 - pz[z]) * a0[z]);
      pr.consumption += wz[z] * (pr.d ? cz1[z] : cz0[z]);
    }
    const int zd = opt.integrate_zeta ? pick(t.zeta.weights, u_z) : w.zeta_node;
    pr.assets_next_draw = pr.d ? a1[zd] : a0[zd];
  }
  return out;
}

double nearest_rank(std::vector<double> v, double q) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  long rank = static_cast<long>(std::ceil(q * n - 1e-9));
  rank = std::clamp(rank, 1L, static_cast<long>(v.size()));
  return v[rank - 1];
}

std::vector<ProfileCell> aggregate_profiles(const std::vector<PanelRow>& rows, ProfileBy by, int age_min,
                                            int age_max) {
  if (rows.empty()) throw std::invalid_argument("aggregate_profiles: empty panel");
  const int ng = by == ProfileBy::Occupation ? kOcc : kEdu;
  const int na = age_max - age_min + 1;
  // slot 0 = all, 1..ng = groups
  std::vector<std::vector<double>> assets(std::size_t(na) * (ng + 1));
  std::vector<double> work(assets.size(), 0), dA(assets.size(), 0);
  for (const auto& w : rows) {
    if (w.age < age_min || w.age > age_max) continue;
    const int g = by == ProfileBy::Occupation ? w.occupation : w.education;
    for (int slot : {0, g + 1}) {
      const std::size_t c = std::size_t(w.age - age_min) * (ng + 1) + slot;
      assets[c].push_back(w.assets);
      work[c] += w.d;
      dA[c] += w.assets_next - w.assets;
    }
  }
  std::vector<ProfileCell> out;
  for (int a = 0; a < na; ++a)
    for (int slot = 0; slot <= ng; ++slot) {
      const std::size_t c = std::size_t(a) * (ng + 1) + slot;
      ProfileCell pc;
      pc.age = age_min + a;
      pc.group = slot - 1;
      pc.count = static_cast<std::int64_t>(assets[c].size());
      if (pc.count > 0) {
        pc.lfp = work[c] / double(pc.count);
        pc.asset_change = dA[c] / double(pc.count);
        pc.asset_t1 = nearest_rank(assets[c], 1.0 / 3.0);
        pc.asset_t2 = nearest_rank(assets[c], 2.0 / 3.0);
      }
      out.push_back(pc);
    }
  return out;
}

std::vector<PanelRow> biennial(const std::vector<PanelRow>& rows, int age0) {
  std::vector<PanelRow> out;
  for (const auto& w : rows)
    if (((w.age - age0) % 2 + 2) % 2 == 0) out.push_back(w);
  return out;
}

}  // namespace retire
