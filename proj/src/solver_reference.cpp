#include <cmath>

#include "retire/solver.hpp"
#include "retire/tables_io.hpp"

namespace retire {

namespace {

double node_emax(const AgeTable& t, int g, int a, int m, int z, int s, double scale) {
  const AgeLayout& L = t.lay;
  const std::size_t c = L.cell(g, a, m, z, s);
  if (!L.choice_set_has_work(L.decode(g).wl)) return t.v0[c] + scale * kEulerGamma;
  return emax_and_ccp(t.v1[c], t.v0[c], scale).emax;
}

double continuation(const AgeTable& nt, const ModelParams& p, const GridSpec& g, const Quadrature& zq, int type,
                    int edu, int occ, int h, int d, InsuranceType ins_n, double a_next, double m_next) {
  const AgeLayout& NL = nt.lay;
  const auto hp = p.health.probs(h, health_covariates(std::clamp(NL.age - 1, p.health.min_age, p.health.max_age),
                                                      Education(edu), Occupation(occ), d));
  const Locate la = locate(g.assets, a_next), lm = locate(g.aime, m_next);
  double total = 0;
  for (int hn = 0; hn < kHealth; ++hn) {
    const int gn = NL.group(type, edu, occ, hn, NL.ins_slot(ins_n), d);
    const double pi1 = NL.n_ssdi == 2 ? ssdi_eligibility_prob(NL.age, JointHealth::from_index(hn), d == 1,
                                                              Occupation(occ), p.ssdi)
                                      : 0.0;
    double e = 0;
    for (int z = 0; z < NL.nz; ++z)
      for (int s = 0; s < NL.n_ssdi; ++s) {
        const double w = zq.weights[z] * (NL.n_ssdi == 1 ? 1.0 : (s ? pi1 : 1.0 - pi1));
        const double sc = p.prefs.ev_scale;
        const double v = (1 - la.w) * (1 - lm.w) * node_emax(nt, gn, la.i, lm.i, z, s, sc) +
                         (1 - la.w) * lm.w * node_emax(nt, gn, la.i, lm.i + 1, z, s, sc) +
                         la.w * (1 - lm.w) * node_emax(nt, gn, la.i + 1, lm.i, z, s, sc) +
                         la.w * lm.w * node_emax(nt, gn, la.i + 1, lm.i + 1, z, s, sc);
        e += w * v;
      }
    total += hp[hn] * e;
  }
  return total;
}

}  // namespace

DecisionTables solve_reference(const ModelParams& p, const PolicyRules& r, const GridSpec& g) {
  r.validate();
  g.validate(r);
  p.validate(r);
  DecisionTables t;
  t.grid = g;
  t.zeta = discretize_income_shock(ShockSpec{p.prefs.sigma_zeta, g.zeta_nodes, p.prefs.ev_scale});
  t.grid.zeta_nodes = static_cast<int>(t.zeta.nodes.size());
  t.params_hash = params_hash(p, r, g);
  t.retired_hash = retired_params_hash(p, r, g);
  t.ages.resize(g.terminal_age - g.first_age + 1);
  const double cmin = r.consumption_floor;

  for (int age = g.terminal_age; age >= g.first_age; --age) {
    AgeTable& T = t.ages[age - g.first_age];
    T.lay = make_layout(age, t.grid, r, p);
    const AgeLayout& L = T.lay;
    const std::size_t n = L.size();
    T.v0.assign(n, 0.0);
    T.v1.assign(n, -std::numeric_limits<double>::infinity());
    T.c0.assign(n, 0.0);
    T.c1.assign(n, std::numeric_limits<double>::quiet_NaN());
    T.p.assign(n, 0.0);
    T.k0.assign(n, 0);
    T.k1.assign(n, 0);
    const AgeTable* next = age == g.terminal_age ? nullptr : &t.ages[age + 1 - g.first_age];

    for (int gi = 0; gi < L.groups(); ++gi) {
      const auto G = L.decode(gi);
      const JointHealth h = JointHealth::from_index(G.h);
      const InsuranceType ins = L.insurance(G.ins_slot);
      const double ps = next ? survival_prob(age, h, p.mortality) : 0.0;
      for (int a = 0; a < L.na; ++a)
        for (int m = 0; m < L.nm; ++m)
          for (int z = 0; z < L.nz; ++z)
            for (int s = 0; s < L.n_ssdi; ++s) {
              const std::size_t cell = L.cell(gi, a, m, z, s);
              for (int d = 0; d <= 1; ++d) {
                if (d == 1 && !L.choice_set_has_work(G.wl)) continue;
                StateVector st;
                st.age = age;
                st.education = Education(G.edu);
                st.occupation = Occupation(G.occ);
                st.health = h;
                st.assets = g.assets[a];
                st.aime = g.aime[m];
                st.insurance = ins;
                st.worked_last = G.wl == 1;
                st.claimed = claimed_before(st.worked_last, age, r);
                st.type_index = G.type;
                const Budget b = cash_on_hand(st, d, t.zeta.nodes[z], s == 1, p, r);
                const InsuranceType ins_n = insurance_transition(ins, age, d, r);
                double best = -std::numeric_limits<double>::infinity(), bestc = 0;
                int bestk = 0;
                for (int k = 0; k < g.consumption_nodes; ++k) {
                  const double C = cmin + g.consumption_fraction(k) * (b.c_hi - cmin);
                  const double an = b.cash + b.transfer - C;
                  double v = crra_utility(C, p.prefs.nu) + nonpecuniary_utility(d, h, st.occupation, p.prefs, G.type);
                  double cont = 0;
                  if (next)
                    cont += ps * continuation(*next, p, t.grid, t.zeta, G.type, G.edu, G.occ, G.h, d, ins_n, an,
                                              b.parts.aime_next);
                  cont += (1 - ps) * bequest_utility(an, p.prefs);
                  v += p.prefs.beta * cont;
                  if (v > best) {
                    best = v;
                    bestc = C;
                    bestk = k;
                  }
                }
                (d == 0 ? T.v0 : T.v1)[cell] = best;
                (d == 0 ? T.c0 : T.c1)[cell] = bestc;
                (d == 0 ? T.k0 : T.k1)[cell] = static_cast<std::uint8_t>(bestk);
              }
              if (L.choice_set_has_work(G.wl)) T.p[cell] = logistic((T.v1[cell] - T.v0[cell]) / p.prefs.ev_scale);
            }
    }
  }
  return t;
}

}  // namespace retire
