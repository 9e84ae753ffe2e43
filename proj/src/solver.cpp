#include "retire/solver.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

#include "retire/tables_io.hpp"

namespace retire {

BudgetParts budget_parts(int age, Education e, Occupation occ, JointHealth h, InsuranceType ins, bool claimed_b,
                         double aime, int d, const ModelParams& p, const PolicyRules& r) {
  BudgetParts b;
  double aime_eff = aime;
  if (d == 1) {
    b.wage = wage(age, e, occ, h, p.wage);
    b.aime_next = aime_update(aime, b.wage, r);
    b.claimed_after = claimed_b;
  } else {
    if (age >= r.earliest_claim_age) {
      BenefitState st{true, false, claimed_b};
      const BenefitOutcome o = ss_benefit(age, aime, st, r);
      b.ss = o.benefit;
      aime_eff = o.aime;
      b.first_claim = !claimed_b;
      b.claimed_after = true;
    }
    b.pension = private_pension(occ, aime_eff, p.pension, r);
    b.aime_next = aime_eff;
  }
  b.spousal = expected_spousal_income(age, e, p.spouse);
  b.ssdi_amount = age <= p.ssdi.last_age ? ssdi_benefit(aime, r) : 0.0;
  b.med = medical_expense(h, ins, age, p.expense);
  return b;
}

namespace {

struct Cash {
  double income, cash, c_max, transfer, c_hi;
};

inline Cash cash_from_parts(const BudgetParts& b, double assets, double zeta, int ssdi, const PolicyRules& r) {
  Cash c;
  c.income = b.wage + b.ss + b.pension + b.spousal + (ssdi ? b.ssdi_amount : 0.0) + zeta;
  c.cash = (1.0 + r.interest_rate) * assets + c.income - b.med;
  c.c_max = c.cash - r.asset_floor;
  c.transfer = std::max(0.0, r.consumption_floor - c.c_max);
  c.c_hi = c.c_max + c.transfer;
  return c;
}

}  // namespace

Budget cash_on_hand(const StateVector& s, int d, double zeta, bool ssdi_eligible, const ModelParams& p,
                    const PolicyRules& r) {
  Budget b;
  b.parts = budget_parts(s.age, s.education, s.occupation, s.health, s.insurance, s.claimed, s.aime, d, p, r);
  const Cash c = cash_from_parts(b.parts, s.assets, zeta, ssdi_eligible ? 1 : 0, r);
  b.zeta = zeta;
  b.ssdi = ssdi_eligible ? b.parts.ssdi_amount : 0.0;
  b.income = c.income;
  b.cash = c.cash;
  b.c_max = c.c_max;
  b.transfer = c.transfer;
  b.c_hi = c.c_hi;
  return b;
}

EmaxCcp emax_and_ccp(double v1, double v0, double s) {
  const double m = std::max(v0, v1);
  const double lse = m + s * std::log(std::exp((v0 - m) / s) + std::exp((v1 - m) / s));
  return {lse + s * kEulerGamma, logistic((v1 - v0) / s)};
}

Locate locate(const std::vector<double>& g, double x) {
  const int n = static_cast<int>(g.size());
  if (x <= g.front()) return {0, 0.0};
  if (x >= g.back()) return {n - 2, 1.0};
  const int i = static_cast<int>(std::upper_bound(g.begin(), g.end(), x) - g.begin()) - 1;
  return {i, (x - g[i]) / (g[i + 1] - g[i])};
}

AgeLayout make_layout(int age, const GridSpec& g, const PolicyRules& r, const ModelParams& p) {
  AgeLayout L;
  L.age = age;
  L.n_types = p.types.n_types;
  L.n_ins = age < r.medicare_age ? 3 : 1;
  L.n_ssdi = age <= p.ssdi.last_age ? 2 : 1;
  L.na = static_cast<int>(g.assets.size());
  L.nm = static_cast<int>(g.aime.size());
  L.nz = g.zeta_nodes;
  L.work_allowed = age <= g.last_labor_age;
  return L;
}

namespace {

inline double cell_emax(const AgeTable& t, bool two, std::size_t c, double scale) {
  if (!two) return t.v0[c] + scale * kEulerGamma;
  return emax_and_ccp(t.v1[c], t.v0[c], scale).emax;
}

// EV over zeta and SSDI for every (group, asset, aime).
std::vector<double> integrate_ev(const AgeTable& t, const ModelParams& p, const Quadrature& zq, int threads) {
  const AgeLayout& L = t.lay;
  std::vector<double> ev(std::size_t(L.groups()) * L.na * L.nm);
  const double scale = p.prefs.ev_scale;
#pragma omp parallel for schedule(static) num_threads(threads)
  for (int g = 0; g < L.groups(); ++g) {
    const auto G = L.decode(g);
    const bool two = L.choice_set_has_work(G.wl);
    const double pi1 =
        L.n_ssdi == 2 ? ssdi_eligibility_prob(L.age, JointHealth::from_index(G.h), G.wl == 1, Occupation(G.occ), p.ssdi)
                      : 0.0;
    for (int a = 0; a < L.na; ++a)
      for (int m = 0; m < L.nm; ++m) {
        double s = 0;
        for (int z = 0; z < L.nz; ++z)
          for (int k = 0; k < L.n_ssdi; ++k) {
            const double w = zq.weights[z] * (L.n_ssdi == 1 ? 1.0 : (k ? pi1 : 1.0 - pi1));
            s += w * cell_emax(t, two, L.cell(g, a, m, z, k), scale);
          }
        ev[(std::size_t(g) * L.na + a) * L.nm + m] = s;
      }
  }
  return ev;
}

void allocate(AgeTable& t) {
  const std::size_t n = t.lay.size();
  t.v0.assign(n, 0.0);
  t.v1.assign(n, -std::numeric_limits<double>::infinity());
  t.c0.assign(n, 0.0);
  t.c1.assign(n, std::numeric_limits<double>::quiet_NaN());
  t.p.assign(n, 0.0);
  t.k0.assign(n, 0);
  t.k1.assign(n, 0);
}

void solve_age(AgeTable& T, const AgeTable* next, const std::vector<double>* ev_next, const ModelParams& p,
               const PolicyRules& r, const GridSpec& g, const Quadrature& zq, const std::vector<double>& frac,
               int threads, const AgeTable* reuse) {
  const AgeLayout& L = T.lay;
  const int age = L.age;
  const bool terminal = next == nullptr;
  const double beta = p.prefs.beta, nu = p.prefs.nu, scale = p.prefs.ev_scale;
  const double cmin = r.consumption_floor;
  const int nc = g.consumption_nodes;

  std::array<double, kHealth> surv{};
  for (int h = 0; h < kHealth; ++h) surv[h] = terminal ? 0.0 : survival_prob(age, JointHealth::from_index(h), p.mortality);
  const int hage = std::clamp(age, p.health.min_age, p.health.max_age);

  const int tasks = L.groups() * L.nm;
#pragma omp parallel for schedule(static) num_threads(threads)
  for (int task = 0; task < tasks; ++task) {
    const int gi = task / L.nm, m = task % L.nm;
    const auto G = L.decode(gi);
    const JointHealth h = JointHealth::from_index(G.h);
    const Education edu = Education(G.edu);
    const Occupation occ = Occupation(G.occ);
    const InsuranceType ins = L.insurance(G.ins_slot);
    const bool cb = claimed_before(G.wl == 1, age, r);
    const double aime = g.aime[m];
    const double ps = surv[G.h];
    if (reuse && !L.choice_set_has_work(G.wl)) {
      for (int a = 0; a < L.na; ++a) {
        const std::size_t c0 = L.cell(gi, a, m, 0, 0), c1 = c0 + std::size_t(L.nz) * L.n_ssdi;
        std::copy(reuse->v0.begin() + c0, reuse->v0.begin() + c1, T.v0.begin() + c0);
        std::copy(reuse->c0.begin() + c0, reuse->c0.begin() + c1, T.c0.begin() + c0);
        std::copy(reuse->k0.begin() + c0, reuse->k0.begin() + c1, T.k0.begin() + c0);
      }
      continue;
    }
    std::vector<double> phi(L.na, 0.0);

    for (int d = 0; d <= 1; ++d) {
      if (d == 1 && !L.choice_set_has_work(G.wl)) continue;
      const BudgetParts parts = budget_parts(age, edu, occ, h, ins, cb, aime, d, p, r);
      const double nps = nonpecuniary_utility(d, h, occ, p.prefs, G.type);

      int next_group_same = -1;
      bool next_has_d = false;
      if (!terminal) {
        const AgeLayout& NL = next->lay;
        const InsuranceType ins_n = insurance_transition(ins, age, d, r);
        const auto hp = p.health.probs(G.h, health_covariates(hage, edu, occ, d));
        const Locate lm = locate(g.aime, parts.aime_next);
        std::fill(phi.begin(), phi.end(), 0.0);
        for (int hn = 0; hn < kHealth; ++hn) {
          const int gn = NL.group(G.type, G.edu, G.occ, hn, NL.ins_slot(ins_n), d);
          const double* e = ev_next->data() + std::size_t(gn) * NL.na * NL.nm;
          for (int a = 0; a < L.na; ++a)
            phi[a] += hp[hn] * ((1.0 - lm.w) * e[a * NL.nm + lm.i] + lm.w * e[a * NL.nm + lm.i + 1]);
        }
        next_group_same = NL.group(G.type, G.edu, G.occ, G.h, NL.ins_slot(ins), G.wl);
        next_has_d = d == 0 || NL.choice_set_has_work(G.wl);
      }

      for (int a = 0; a < L.na; ++a)
        for (int z = 0; z < L.nz; ++z)
          for (int s = 0; s < L.n_ssdi; ++s) {
            const Cash c = cash_from_parts(parts, g.assets[a], zq.nodes[z], s, r);
            const double top = c.cash + c.transfer;
            auto value_at = [&](int k) {
              const double C = cmin + frac[k] * (c.c_hi - cmin);
              const double an = top - C;
              double cont = 0.0;
              if (ps > 0) {
                const Locate la = locate(g.assets, an);
                cont = ps * ((1.0 - la.w) * phi[la.i] + la.w * phi[la.i + 1]);
              }
              if (ps < 1) cont += (1.0 - ps) * bequest_utility(an, p.prefs);
              return crra_utility(C, nu) + nps + beta * cont;
            };
            SearchResult best;
            if (terminal || g.full_search || !next_has_d) {
              best = full_search(value_at, nc);
            } else {
              const AgeLayout& NL = next->lay;
              const std::size_t cn = NL.cell(next_group_same, a, m, z, std::min(s, NL.n_ssdi - 1));
              const int center = d == 0 ? next->k0[cn] : next->k1[cn];
              best = warm_start_search(value_at, nc, center, g.warm_window);
            }
            const std::size_t cell = L.cell(gi, a, m, z, s);
            const double C = cmin + frac[best.index] * (c.c_hi - cmin);
            if (d == 0) {
              T.v0[cell] = best.value;
              T.c0[cell] = C;
              T.k0[cell] = static_cast<std::uint8_t>(best.index);
            } else {
              T.v1[cell] = best.value;
              T.c1[cell] = C;
              T.k1[cell] = static_cast<std::uint8_t>(best.index);
            }
          }
    }
    if (L.choice_set_has_work(G.wl)) {
      const std::size_t base = L.cell(gi, 0, m, 0, 0);
      for (int a = 0; a < L.na; ++a)
        for (int zs = 0; zs < L.nz * L.n_ssdi; ++zs) {
          const std::size_t cell = base + std::size_t(a) * L.nm * L.nz * L.n_ssdi + zs;
          T.p[cell] = logistic((T.v1[cell] - T.v0[cell]) / scale);
        }
    }
  }
}

}  // namespace

DecisionTables solve(const ModelParams& p, const PolicyRules& r, const GridSpec& g, const SolveOptions& opt) {
  r.validate();
  g.validate(r);
  p.validate(r);
  if (g.terminal_age > p.mortality.terminal_age)
    throw std::invalid_argument("solve: grid terminal age beyond the life table");
  const int threads = opt.threads > 0 ? opt.threads : omp_get_max_threads();

  DecisionTables t;
  t.grid = g;
  t.zeta = discretize_income_shock(ShockSpec{p.prefs.sigma_zeta, g.zeta_nodes, p.prefs.ev_scale});
  t.grid.zeta_nodes = static_cast<int>(t.zeta.nodes.size());
  t.params_hash = params_hash(p, r, g);
  t.retired_hash = retired_params_hash(p, r, g);
  const bool reuse = opt.reuse && opt.reuse->retired_hash == t.retired_hash && !opt.reuse->retired_hash.empty() &&
                     opt.reuse->ages.size() == std::size_t(g.terminal_age - g.first_age + 1);
  std::vector<double> frac(g.consumption_nodes);
  for (int k = 0; k < g.consumption_nodes; ++k) frac[k] = g.consumption_fraction(k);

  t.ages.resize(g.terminal_age - g.first_age + 1);
  std::vector<double> ev;
  for (int age = g.terminal_age; age >= g.first_age; --age) {
    AgeTable& T = t.ages[age - g.first_age];
    T.lay = make_layout(age, t.grid, r, p);
    allocate(T);
    const AgeTable* next = age == g.terminal_age ? nullptr : &t.ages[age + 1 - g.first_age];
    const AgeTable* old = reuse ? &opt.reuse->ages[age - g.first_age] : nullptr;
    if (old && old->v0.size() != T.v0.size()) old = nullptr;
    solve_age(T, next, next ? &ev : nullptr, p, r, t.grid, t.zeta, frac, threads, old);
    if (age > g.first_age) ev = integrate_ev(T, p, t.zeta, threads);
  }
  return t;
}

double expected_value(const DecisionTables& t, const StateVector& s, const ModelParams& p, const PolicyRules& r) {
  const AgeTable& T = t.at(s.age);
  const AgeLayout& L = T.lay;
  const int g = L.group(s.type_index, int(s.education), int(s.occupation), s.health.index(), L.ins_slot(s.insurance),
                        s.worked_last ? 1 : 0);
  const bool two = L.choice_set_has_work(s.worked_last ? 1 : 0);
  const double pi1 = L.n_ssdi == 2 ? ssdi_eligibility_prob(s, p.ssdi) : 0.0;
  const Locate la = locate(t.grid.assets, s.assets), lm = locate(t.grid.aime, s.aime);
  const double scale = p.prefs.ev_scale;
  (void)r;
  double ev = 0;
  for (int z = 0; z < L.nz; ++z)
    for (int k = 0; k < L.n_ssdi; ++k) {
      const double w = t.zeta.weights[z] * (L.n_ssdi == 1 ? 1.0 : (k ? pi1 : 1.0 - pi1));
      auto e = [&](int a, int m) { return cell_emax(T, two, L.cell(g, a, m, z, k), scale); };
      const double v = (1 - la.w) * ((1 - lm.w) * e(la.i, lm.i) + lm.w * e(la.i, lm.i + 1)) +
                       la.w * ((1 - lm.w) * e(la.i + 1, lm.i) + lm.w * e(la.i + 1, lm.i + 1));
      ev += w * v;
    }
  return ev;
}

}  // namespace retire
