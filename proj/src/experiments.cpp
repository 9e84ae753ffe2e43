#include "retire/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace retire {

using nlohmann::json;

bool ChannelMask::any() const {
  for (int k = 0; k < 2; ++k)
    if (disutility[k] || productivity[k] || expense[k] || mortality[k] || ssdi[k]) return true;
  return false;
}

ChannelMask ChannelMask::all() { return {{true, true}, {true, true}, {true, true}, {true, true}, {true, true}}; }

ChannelMask ChannelMask::dimension(int dim) {
  ChannelMask m;
  m.disutility[dim] = m.productivity[dim] = m.expense[dim] = m.mortality[dim] = m.ssdi[dim] = true;
  return m;
}

namespace {

std::array<bool, 2>* channel(ChannelMask& m, const std::string& c) {
  if (c == "disutility") return &m.disutility;
  if (c == "productivity") return &m.productivity;
  if (c == "expense") return &m.expense;
  if (c == "mortality") return &m.mortality;
  if (c == "ssdi") return &m.ssdi;
  return nullptr;
}

const char* kChannels[] = {"disutility", "productivity", "expense", "mortality", "ssdi"};
const char* kDims[] = {"physical", "cognitive"};

}  // namespace

ChannelMask parse_mask(const std::vector<std::string>& names) {
  ChannelMask m;
  for (const auto& n : names) {
    if (n == "all") {
      m = ChannelMask::all();
      continue;
    }
    if (n == "physical" || n == "cognitive") {
      const int d = n == "physical" ? 0 : 1;
      for (const char* c : kChannels) (*channel(m, c))[d] = true;
      continue;
    }
    const auto us = n.find('_');
    const std::string c = n.substr(0, us);
    auto* ch = channel(m, c);
    if (!ch) throw std::invalid_argument("unknown channel '" + n + "'");
    if (us == std::string::npos) {
      (*ch)[0] = (*ch)[1] = true;
    } else {
      const std::string d = n.substr(us + 1);
      if (d == "physical")
        (*ch)[0] = true;
      else if (d == "cognitive")
        (*ch)[1] = true;
      else
        throw std::invalid_argument("unknown health dimension in '" + n + "'");
    }
  }
  return m;
}

std::vector<std::string> mask_names(const ChannelMask& m) {
  std::vector<std::string> out;
  ChannelMask c = m;
  for (const char* ch : kChannels)
    for (int d = 0; d < 2; ++d)
      if ((*channel(c, ch))[d]) out.push_back(std::string(ch) + "_" + kDims[d]);
  return out;
}

ModelParams apply_mask(const ModelParams& p, const ChannelMask& m) {
  ModelParams q = p;
  for (int j = 0; j < kOcc; ++j) {
    if (m.disutility[0]) q.prefs.lambda2[j] = 0;
    if (m.disutility[1]) q.prefs.lambda3[j] = 0;
    if (m.productivity[0]) q.wage.poor_physical[j] = 0;
    if (m.productivity[1]) q.wage.poor_cognitive[j] = 0;
  }
  if (m.expense[0]) q.expense.poor_physical = 0;
  if (m.expense[1]) q.expense.poor_cognitive = 0;
  if (m.expense[0] || m.expense[1]) q.expense.poor_both = 0;
  if (m.ssdi[0]) q.ssdi.poor_physical = 0;
  if (m.ssdi[1]) q.ssdi.poor_cognitive = 0;
  if (m.ssdi[0] || m.ssdi[1]) q.ssdi.poor_both = 0;
  q.mortality.mute_physical = q.mortality.mute_physical || m.mortality[0];
  q.mortality.mute_cognitive = q.mortality.mute_cognitive || m.mortality[1];
  return q;
}

ModelParams apply_swap(const ModelParams& p, const RequirementSwap& s) {
  ModelParams q = p;
  const int a = int(s.source), b = int(s.target);
  if (s.dims != SwapDim::Cognitive) {
    q.prefs.lambda2[b] = p.prefs.lambda2[a];
    q.wage.poor_physical[b] = p.wage.poor_physical[a];
  }
  if (s.dims != SwapDim::Physical) {
    q.prefs.lambda3[b] = p.prefs.lambda3[a];
    q.wage.poor_cognitive[b] = p.wage.poor_cognitive[a];
  }
  return q;
}

Branch branch_from_json(const json& j) {
  Branch b;
  b.name = j.at("name");
  if (j.contains("mute")) b.mask = parse_mask(j.at("mute").get<std::vector<std::string>>());
  if (j.contains("fra") && j.contains("rules"))
    throw std::invalid_argument("branch '" + b.name + "': both 'fra' and 'rules' given (conflicting policy rules)");
  if (j.contains("fra")) {
    const auto& f = j.at("fra");
    if (f.is_array()) throw std::invalid_argument("branch '" + b.name + "': more than one FRA preset selected");
    const int fra = f.get<int>();
    if (fra == 66)
      b.rules = fra66_baseline();
    else if (fra == 70)
      b.rules = fra70_reform();
    else
      throw std::invalid_argument("branch '" + b.name + "': fra must be 66 or 70");
  }
  if (j.contains("rules")) b.rules = rules_from_json(j.at("rules"));
  if (j.contains("swap")) {
    const auto& s = j.at("swap");
    RequirementSwap sw;
    sw.source = occupation_from_string(s.at("from"));
    sw.target = occupation_from_string(s.at("to"));
    const std::string d = s.value("dims", std::string("physical"));
    if (d == "physical")
      sw.dims = SwapDim::Physical;
    else if (d == "cognitive")
      sw.dims = SwapDim::Cognitive;
    else if (d == "both")
      sw.dims = SwapDim::Both;
    else
      throw std::invalid_argument("branch '" + b.name + "': swap dims must be physical, cognitive or both");
    b.swap = sw;
  }
  return b;
}

PairedPanels run_counterfactual(const Branch& b, const ModelParams& p, const PolicyRules& r, const GridSpec& g,
                                const std::vector<Individual>& pop, std::uint64_t seed, const SimOptions& so,
                                const DecisionTables* base_tables) {
  SolveOptions opt;
  opt.threads = so.threads;
  PairedPanels out;
  DecisionTables own;
  if (!base_tables) {
    own = solve(p, r, g, opt);
    base_tables = &own;
  }
  out.base = simulate_lifecycle(pop, *base_tables, p, r, seed, so);
  ModelParams q = apply_mask(p, b.mask);
  if (b.swap) q = apply_swap(q, *b.swap);
  const PolicyRules rr = b.rules ? *b.rules : r;
  if (!b.mask.any() && !b.swap && rr == r) {
    out.cf = out.base;
    return out;
  }
  const DecisionTables t = solve(q, rr, g, opt);
  out.cf = simulate_lifecycle(pop, t, q, rr, seed, so);
  return out;
}

std::array<double, 4> retirement_ages(const std::vector<PanelRow>& rows) {
  std::array<double, 4> sum{}, n{};
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t k = i;
    while (k < rows.size() && rows[k].id == rows[i].id) ++k;
    if (rows[i].worked_last == 1) {
      double ra = kStillWorkingAge;
      for (std::size_t m = i; m < k; ++m)
        if (rows[m].d == 0) {
          ra = rows[m].age;
          break;
        }
      for (int slot : {rows[i].occupation, 3}) {
        sum[slot] += ra;
        n[slot] += 1;
      }
    }
    i = k;
  }
  std::array<double, 4> out;
  for (int j = 0; j < 4; ++j) out[j] = n[j] > 0 ? sum[j] / n[j] : std::nan("");
  return out;
}

std::vector<double> lfp_profile(const std::vector<PanelRow>& rows, int age_min, int age_max, int occupation) {
  std::vector<double> work(age_max - age_min + 1, 0), n(work.size(), 0);
  for (const auto& w : rows) {
    if (w.age < age_min || w.age > age_max) continue;
    if (occupation >= 0 && w.occupation != occupation) continue;
    work[w.age - age_min] += w.d;
    n[w.age - age_min] += 1;
  }
  for (std::size_t k = 0; k < work.size(); ++k) work[k] = n[k] > 0 ? work[k] / n[k] : std::nan("");
  return work;
}

std::optional<double> decline_share(double decline_base, double decline_cf) {
  if (!(decline_base > 0)) return std::nullopt;
  return (decline_base - decline_cf) / decline_base;
}

std::optional<double> employment_decline_share(const std::vector<PanelRow>& base, const std::vector<PanelRow>& cf,
                                               int age0, int age1, int occupation) {
  const auto lb = lfp_profile(base, age0, age1, occupation);
  const auto lc = lfp_profile(cf, age0, age1, occupation);
  return decline_share(lb.front() - lb.back(), lc.front() - lc.back());
}

std::vector<double> relative_impact_profile(const std::vector<double>& base, const std::vector<double>& cf_cog,
                                            const std::vector<double>& cf_phys) {
  if (base.size() != cf_cog.size() || base.size() != cf_phys.size())
    throw std::invalid_argument("relative_impact_profile: profile lengths differ");
  std::vector<double> out(base.size());
  for (std::size_t k = 0; k < base.size(); ++k) {
    const double den = cf_phys[k] - base[k];
    out[k] = std::abs(den) < 1e-4 ? std::nan("") : (cf_cog[k] - base[k]) / den;
  }
  return out;
}

const char* to_string(ResponseType t) {
  switch (t) {
    case ResponseType::AlwaysTaker: return "always_taker";
    case ResponseType::NeverTaker: return "never_taker";
    case ResponseType::Complier: return "complier";
    case ResponseType::Defier: return "defier";
  }
  return "?";
}

ResponseType classify_response(int d0, int d1) {
  if (d0 == 1 && d1 == 1) return ResponseType::AlwaysTaker;
  if (d0 == 0 && d1 == 0) return ResponseType::NeverTaker;
  if (d0 == 0 && d1 == 1) return ResponseType::Complier;
  return ResponseType::Defier;
}

std::vector<ResponseShares> response_shares(const std::vector<PanelRow>& base, const std::vector<PanelRow>& reform,
                                            int age_min, int age_max, int occupation) {
  std::map<std::pair<std::int64_t, int>, int> d1;
  for (const auto& w : reform) d1[{w.id, w.age}] = w.d;
  std::vector<ResponseShares> out(age_max - age_min + 1);
  std::vector<std::array<std::int64_t, 4>> cnt(out.size());
  std::vector<std::int64_t> dis(out.size(), 0);
  for (std::size_t k = 0; k < out.size(); ++k) out[k].age = age_min + int(k);
  for (const auto& w : base) {
    if (w.age < age_min || w.age > age_max) continue;
    if (occupation >= 0 && w.occupation != occupation) continue;
    auto it = d1.find({w.id, w.age});
    if (it == d1.end()) continue;
    const std::size_t k = w.age - age_min;
    ++cnt[k][int(classify_response(w.d, it->second))];
    ++out[k].n;
    if (w.d != it->second) ++dis[k];
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (out[k].n == 0) {
      out[k].share.fill(std::nan(""));
      out[k].disagreement = std::nan("");
      continue;
    }
    for (int t = 0; t < 4; ++t) out[k].share[t] = double(cnt[k][t]) / double(out[k].n);
    out[k].disagreement = double(dis[k]) / double(out[k].n);
  }
  return out;
}

SurplusDecomposition work_surplus_decomposition(const DecisionTables& t, int age, int group, int a, int m, int z,
                                                int s, const ModelParams& p, const PolicyRules& r) {
  const AgeTable& T = t.at(age);
  const AgeLayout& L = T.lay;
  const auto G = L.decode(group);
  if (!L.choice_set_has_work(G.wl)) throw std::invalid_argument("surplus decomposition needs a state with a work choice");
  StateVector st;
  st.age = age;
  st.type_index = G.type;
  st.education = Education(G.edu);
  st.occupation = Occupation(G.occ);
  st.health = JointHealth::from_index(G.h);
  st.insurance = L.insurance(G.ins_slot);
  st.worked_last = true;
  st.claimed = claimed_before(true, age, r);
  st.assets = t.grid.assets[a];
  st.aime = t.grid.aime[m];
  const std::size_t cell = L.cell(group, a, m, z, s);
  const double C[2] = {T.c0[cell], T.c1[cell]};

  SurplusDecomposition out;
  out.gap = T.v1[cell] - T.v0[cell];
  out.ps = crra_utility(C[1], p.prefs.nu) - crra_utility(C[0], p.prefs.nu);
  out.nps = nonpecuniary_utility(1, st.health, st.occupation, p.prefs, st.type_index) -
            nonpecuniary_utility(0, st.health, st.occupation, p.prefs, st.type_index);
  const bool last = age >= t.grid.terminal_age;
  const double ps = last ? 0.0 : survival_prob(age, st.health, p.mortality);
  double cont[2];
  for (int d = 0; d <= 1; ++d) {
    const Budget b = cash_on_hand(st, d, t.zeta.nodes[z], s == 1, p, r);
    const double an = b.cash + b.transfer - C[d];
    double ev = 0;
    if (ps > 0) {
      const int hage = std::clamp(age, p.health.min_age, p.health.max_age);
      const auto hp = p.health.probs(G.h, health_covariates(hage, st.education, st.occupation, d));
      StateVector nx = st;
      nx.age = age + 1;
      nx.assets = an;
      nx.aime = b.parts.aime_next;
      nx.insurance = insurance_transition(st.insurance, age, d, r);
      nx.worked_last = d == 1;
      nx.claimed = b.parts.claimed_after;
      for (int h = 0; h < kHealth; ++h) {
        nx.health = JointHealth::from_index(h);
        ev += hp[h] * expected_value(t, nx, p, r);
      }
    }
    cont[d] = ps * ev + (1 - ps) * bequest_utility(an, p.prefs);
  }
  out.es = p.prefs.beta * (cont[1] - cont[0]);
  return out;
}

double pdv_utility(const std::vector<PanelRow>& rows, int from_age, const PreferenceParams& prefs) {
  double v = 0, disc = 1;
  const PanelRow* last = nullptr;
  for (const auto& w : rows) {
    if (w.age < from_age) continue;
    v += disc * w.flow_utility;
    disc *= prefs.beta;
    last = &w;
  }
  if (last && !last->survived) v += disc * bequest_utility(last->assets_next, prefs);
  return v;
}

std::array<double, 4> mean_pdv(const std::vector<PanelRow>& rows, int from_age, const PreferenceParams& prefs) {
  std::array<double, 4> sum{}, n{};
  std::size_t i = 0;
  std::vector<PanelRow> one;
  while (i < rows.size()) {
    std::size_t k = i;
    while (k < rows.size() && rows[k].id == rows[i].id) ++k;
    bool covers = false;
    for (std::size_t m = i; m < k; ++m) covers = covers || rows[m].age == from_age;
    if (covers) {
      one.assign(rows.begin() + long(i), rows.begin() + long(k));
      const double v = pdv_utility(one, from_age, prefs);
      for (int slot : {rows[i].occupation, 3}) {
        sum[slot] += v;
        n[slot] += 1;
      }
    }
    i = k;
  }
  std::array<double, 4> out;
  for (int j = 0; j < 4; ++j) out[j] = n[j] > 0 ? sum[j] / n[j] : std::nan("");
  return out;
}

CvResult compensating_variation(const StateVector& s, const DecisionTables& base, const ModelParams& pb,
                                const DecisionTables& reform, const ModelParams& pr, const PolicyRules& rules_b,
                                const PolicyRules& rules_r, double tau_max, double tol) {
  const double target = expected_value(base, s, pb, rules_b);
  auto gap = [&](double tau) {
    StateVector x = s;
    x.assets = s.assets + tau;
    return expected_value(reform, x, pr, rules_r) - target;
  };
  CvResult out;
  const double g0 = gap(0.0);
  if (std::abs(g0) < tol) return out;
  double lo, hi;
  if (g0 < 0) {
    lo = 0;
    hi = tau_max;
    if (gap(hi) < 0) {
      out.bracketed = false;
      out.tau = hi;
      return out;
    }
  } else {
    lo = rules_r.asset_floor - s.assets;
    hi = 0;
    if (gap(lo) > 0) {
      out.bracketed = false;
      out.tau = lo;
      return out;
    }
  }
  for (int it = 0; it < 200; ++it) {
    out.iterations = it + 1;
    const double mid = 0.5 * (lo + hi);
    const double g = gap(mid);
    out.tau = mid;
    if (std::abs(g) < tol || hi - lo < 1e-12) break;
    (g < 0 ? lo : hi) = mid;
  }
  return out;
}

CvSummary compensating_variation_panel(const std::vector<PanelRow>& base_rows, int age, const DecisionTables& base,
                                       const ModelParams& pb, const DecisionTables& reform, const ModelParams& pr,
                                       const PolicyRules& rules_b, const PolicyRules& rules_r) {
  CvSummary out;
  std::array<double, 4> sum{};
  for (const auto& w : base_rows) {
    if (w.age != age) continue;
    const CvResult c = compensating_variation(w.state(), base, pb, reform, pr, rules_b, rules_r);
    if (!c.bracketed) {
      ++out.unbracketed;
      continue;
    }
    for (int slot : {w.occupation, 3}) {
      sum[slot] += c.tau;
      ++out.n[slot];
    }
  }
  for (int j = 0; j < 4; ++j) out.mean_tau[j] = out.n[j] > 0 ? sum[j] / double(out.n[j]) : std::nan("");
  return out;
}

double subsidy_back_of_envelope(const OccVec& subsidies, const OccVec& shares) {
  double num = 0, den = 0;
  for (int j = 0; j < kOcc; ++j) {
    if (shares[j] < 0) throw std::invalid_argument("subsidy weights: negative occupation share");
    num += shares[j] * subsidies[j];
    den += shares[j];
  }
  if (den > 1 + 1e-12) throw std::invalid_argument("subsidy weights: shares sum above one");
  if (den <= 0) throw std::invalid_argument("subsidy weights: zero total share");
  return num / den;
}

}  // namespace retire
