// Acceptance checks 1-10. One PASS/FAIL line per criterion; exit status is
// nonzero when any criterion fails. Pass criterion numbers as arguments to
// run a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include "../support/toy.hpp"
#include "retire/estimation.hpp"
#include "retire/experiments.hpp"
#include "retire/rng.hpp"
#include "retire/tables_io.hpp"

using namespace retire;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Detail {
 public:
  template <class T>
  Detail& operator<<(const T& v) {
    os_ << v;
    return *this;
  }
  std::string str() const { return os_.str(); }
  Detail() { os_ << std::setprecision(6); }

 private:
  std::ostringstream os_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

GridSpec desk_grid(const PolicyRules& r) { return grid_preset("desk", r); }

const char* occ_label(int j) { return j == 0 ? "manual" : j == 1 ? "clerical" : "professional"; }

// ---------------------------------------------------------------------------
// 1. claiming adjustment schedule

Outcome schedule_exactness() {
  const PolicyRules r66 = fra66_baseline(), r70 = fra70_reform();
  const double a = adjustment_factor(62, r66), b = adjustment_factor(70, r66), c = adjustment_factor(62, r70);
  Outcome o;
  o.pass = a == 0.75 && b == 1.32 && c == 0.55;
  Detail d;
  d << std::setprecision(17) << "62/FRA66 " << a << ", 70/FRA66 " << b << ", 62/FRA70 " << c;
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------------------
// 2. backward induction vs exhaustive enumeration

Outcome toy_oracle() {
  Outcome o;
  double worst = 0;
  int instances = 0, cells = 0;
  for (std::uint64_t seed = 1001; seed < 1025; ++seed) {
    const toy::Instance t = toy::random_instance(seed);
    const DecisionTables tab = solve(t.p, t.r, t.g);
    int c = 0;
    worst = std::max(worst, toy::max_table_error(t, tab, &c));
    cells += c;
    ++instances;
    if (c == 0) o.pass = false;
  }
  o.pass = o.pass && instances >= 20 && worst <= 1e-10;
  Detail d;
  d << instances << " instances, " << cells << " compared values, max |diff| " << worst;
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------------------
// 3. logit closed form vs Monte Carlo

Outcome logit_monte_carlo() {
  struct Case {
    double v1, v0, s;
  };
  const std::vector<Case> cases = {{1.0, 0.3, 1.0}, {-2.0, 0.5, 1.0}, {0.2, 0.2, 1.0}, {3.0, 1.0, 2.0}};
  const int draws = 1000000;
  Outcome o;
  double worst_e = 0, worst_p = 0;
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const Case& c = cases[k];
    Stream st(derive_seed(20240601, "logit-mc"), k, 0, 0);
    // both taste shocks have known mean gamma*s, so they serve as control
    // variates for the sample maximum (coefficients by least squares)
    std::vector<double> y(draws), e1(draws), e0(draws);
    long work = 0;
    for (int i = 0; i < draws; ++i) {
      e1[i] = st.gumbel(c.s);
      e0[i] = st.gumbel(c.s);
      y[i] = std::max(c.v1 + e1[i], c.v0 + e0[i]);
      work += c.v1 + e1[i] > c.v0 + e0[i];
    }
    const Eigen::Map<Eigen::VectorXd> Y(y.data(), draws);
    Eigen::MatrixXd Z(draws, 2);
    Z.col(0) = Eigen::Map<Eigen::VectorXd>(e1.data(), draws).array() - kEulerGamma * c.s;
    Z.col(1) = Eigen::Map<Eigen::VectorXd>(e0.data(), draws).array() - kEulerGamma * c.s;
    const Eigen::VectorXd Zc = Z.colwise().mean();
    const Eigen::MatrixXd Zd = Z.rowwise() - Zc.transpose();
    const Eigen::VectorXd b = (Zd.transpose() * Zd).ldlt().solve(Zd.transpose() * (Y.array() - Y.mean()).matrix());
    const double mc = Y.mean() - Zc.dot(b);
    const EmaxCcp e = emax_and_ccp(c.v1, c.v0, c.s);
    worst_e = std::max(worst_e, std::abs(mc - e.emax));
    worst_p = std::max(worst_p, std::abs(double(work) / draws - e.p_work));
  }
  o.pass = worst_e <= 3e-3 && worst_p <= 3e-3;
  Detail d;
  d << cases.size() << " cases x " << draws << " draws, max |emax diff| " << worst_e << ", max |ccp diff| "
    << worst_p;
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------------------
// 4. budget identity and panel invariants on 10^5 individuals

Outcome panel_invariants() {
  const ModelParams p = baseline_estimates();
  const PolicyRules r = fra66_baseline();
  const GridSpec g = desk_grid(r);
  const DecisionTables t = solve(p, r, g);
  const auto pop = generate_population(calibrated_population(100000), 4001);

  std::int64_t rows = 0, budget_bad = 0, c_low = 0, c_high = 0, absorb_bad = 0, claim_bad = 0, people = 0;
  double worst = 0;
  std::int64_t cur = -1;
  int prev_d = 1, firsts = 0;
  bool ever_claimed = false;
  auto close_person = [&] {
    if (cur < 0) return;
    ++people;
    if (firsts != (ever_claimed ? 1 : 0)) ++claim_bad;
  };
  const SimDiagnostics diag = simulate_stream(
      pop, t, p, r, 4002, {}, [&](const std::vector<PanelRow>& chunk) {
        for (const auto& w : chunk) {
          if (w.id != cur) {
            close_person();
            cur = w.id;
            prev_d = w.worked_last;
            firsts = 0;
            ever_claimed = false;
          }
          ++rows;
          const double rhs = (1 + r.interest_rate) * w.assets + w.income + w.transfer - w.med - w.consumption;
          const double err = std::abs(w.assets_next - rhs);
          worst = std::max(worst, err);
          if (err > 1e-9) ++budget_bad;
          if (w.consumption < r.consumption_floor) ++c_low;
          // C_max = (1+r)A + Y + transfer - ME - A_min
          const double c_max = (1 + r.interest_rate) * w.assets + w.income + w.transfer - w.med - r.asset_floor;
          if (w.consumption > c_max + 1e-9) ++c_high;
          if (prev_d == 0 && w.d == 1) ++absorb_bad;
          prev_d = w.d;
          firsts += w.first_claim_year;
          ever_claimed = ever_claimed || w.claimed;
        }
      });
  close_person();
  Outcome o;
  o.pass = people == 100000 && rows == diag.rows && budget_bad == 0 && c_low == 0 && c_high == 0 &&
           absorb_bad == 0 && claim_bad == 0;
  Detail d;
  d << people << " people, " << rows << " rows; budget violations " << budget_bad << " (max |err| " << worst
    << "), C<C_min " << c_low << ", C>C_max " << c_high << ", re-entries " << absorb_bad
    << ", first-claim violations " << claim_bad;
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------------------
// 5. mortality shifter and health-transition normalization

Outcome mortality_consistency() {
  const ModelParams base = baseline_estimates();
  // the identity is a property of the jointly normalized shifters; muted
  // shifters are a counterfactual and are not checked here
  double worst_shift = 0, worst_row = 0;
  const MortalityModel& m = base.mortality;
  for (int age = m.first_age; age < m.terminal_age; ++age) {
    const auto pa = m.p_alive(age);
    double s = 0;
    for (int h = 0; h < kHealth; ++h) s += pa[h] * m.shifter(age, h);
    worst_shift = std::max(worst_shift, std::abs(s - 1));
  }
  const HealthTransitionModel& hm = base.health;
  for (int age = hm.min_age; age <= hm.max_age; ++age)
    for (int c = 0; c < kHealth; ++c)
      for (int e = 0; e < kEdu; ++e)
        for (int j = 0; j < kOcc; ++j)
          for (int dd : {0, 1}) {
            StateVector s;
            s.age = age;
            s.health = JointHealth::from_index(c);
            s.education = Education(e);
            s.occupation = Occupation(j);
            const auto hp = health_transition_probs(s, dd, hm).p;
            double sum = 0;
            for (double x : hp) sum += x;
            worst_row = std::max(worst_row, std::abs(sum - 1));
          }
  Outcome o;
  o.pass = worst_shift <= 1e-6 && worst_row <= 1e-12;
  Detail d;
  d << "max |sum P(h|alive) shifter - 1| " << worst_shift << ", max |row sum - 1| " << worst_row;
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------------------
// 6. indirect inference: self-consistency and recovery

Outcome indirect_inference() {
  const auto t0 = std::chrono::steady_clock::now();
  const PolicyRules r = fra66_baseline();
  const GridSpec g = desk_grid(r);
  ModelParams truth = baseline_estimates();
  truth.prefs.lambda2 = {-0.6, -0.3, -0.15};
  const std::vector<std::string> names = {"lambda2[0]", "lambda2[1]", "lambda2[2]",
                                          "lambda3[0]", "lambda3[1]", "lambda3[2]"};
  Eigen::VectorXd phi0(6);
  for (int j = 0; j < 3; ++j) {
    phi0(j) = truth.prefs.lambda2[j];
    phi0(3 + j) = truth.prefs.lambda3[j];
  }

  // observed panel: full life-cycle simulation from the truth
  const DecisionTables tt = solve(truth, r, g);
  const auto pop = generate_population(calibrated_population(6000), 6001);
  SimConfig cfg;
  cfg.base = truth;
  cfg.rules = r;
  cfg.grid = g;
  cfg.rows = simulate_lifecycle(pop, tt, truth, r, 6002).rows;
  cfg.seed = 6003;
  // manual workers in this panel never hold negative assets, so the
  // indicator column is not identified
  cfg.aux.neg_assets = false;

  // self-consistency: targets from the simulator itself at the truth
  AuxSimulator self_sim(cfg, names);
  const Targets self_targets = targets_from(self_sim.run(phi0));
  AuxSimulator self_sim2(cfg, names);
  Objective self_obj(self_sim2, self_targets, {});
  const double self_loss = self_obj(phi0);

  // recovery: targets from the observed panel, search from a displaced start
  const Targets data = targets_from(estimate_auxiliary(cfg.rows, observed_outcomes(cfg.rows), cfg.aux));
  AuxSimulator sim(cfg, names);
  Objective obj(sim, data, {});
  SearchOptions so;
  so.max_evals = 300;
  so.restarts = 1;
  so.tol_x = 1e-3;
  const Eigen::VectorXd start = 0.7 * phi0;
  const EstimationResult est = estimate(obj, start, so, true);
  const double secs = seconds_since(t0);

  Outcome o;
  o.pass = self_loss <= 1e-12;
  Detail d;
  d << "loss at truth " << self_loss << "; recovery (" << est.search.evals << " evals, "
    << (est.search.converged ? "converged" : "not converged") << "):";
  for (int k = 0; k < 6; ++k) {
    const double err = std::abs(est.phi(k) - phi0(k));
    const double se = est.se.size() == 6 ? est.se(k) : std::nan("");
    const bool ok = err <= 0.2 * std::abs(phi0(k)) || (std::isfinite(se) && err <= 2 * se);
    o.pass = o.pass && ok;
    d << " " << names[k] << " " << est.phi(k) << " (true " << phi0(k) << ", se " << se << (ok ? ")" : ", MISS)");
  }
  if (!est.note.empty()) d << "; " << est.note;
  d << "; " << std::setprecision(4) << secs / 60 << " min on " << omp_get_max_threads() << " thread(s)";
  // the runtime target assumes 8 cores
  if (secs > 30 * 60) {
    o.pass = false;
    d << " (over the 30 min target)";
  }
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------------------
// 7. muting work disutility

Outcome mask_monotonicity() {
  const ModelParams p = baseline_estimates();
  const PolicyRules r = fra66_baseline();
  const GridSpec g = desk_grid(r);
  ChannelMask m;
  m.disutility = {true, true};
  const ModelParams q = apply_mask(p, m);
  const DecisionTables tb = solve(p, r, g), tm = solve(q, r, g);
  std::int64_t compared = 0, violations = 0;
  for (std::size_t i = 0; i < tb.ages.size(); ++i) {
    const AgeTable &A = tb.ages[i], &B = tm.ages[i];
    const AgeLayout& L = A.lay;
    for (int gi = 0; gi < L.groups(); ++gi) {
      if (!L.choice_set_has_work(L.decode(gi).wl)) continue;
      for (int c = 0; c < L.cells_per_group(); ++c) {
        const std::size_t k = std::size_t(gi) * L.cells_per_group() + c;
        ++compared;
        if (B.p[k] < A.p[k]) ++violations;
      }
    }
  }
  const auto pop = generate_population(calibrated_population(20000), 7001);
  const Panel pb = simulate_lifecycle(pop, tb, p, r, 7002);
  const Panel pm = simulate_lifecycle(pop, tm, q, r, 7002);
  const auto lb = lfp_profile(pb.rows, 51, 75), lm = lfp_profile(pm.rows, 51, 75);
  double worst_drop = -INFINITY;
  int worst_age = 0, empty = 0;
  for (std::size_t k = 0; k < lb.size(); ++k) {
    if (!std::isfinite(lb[k]) || !std::isfinite(lm[k])) {
      ++empty;
      continue;
    }
    if (lb[k] - lm[k] > worst_drop) {
      worst_drop = lb[k] - lm[k];
      worst_age = 51 + int(k);
    }
  }
  Outcome o;
  o.pass = violations == 0 && compared > 0 && empty == 0 && worst_drop <= 0.002;
  Detail d;
  d << compared << " work-choice cells, " << violations << " decreases; largest LFP drop " << worst_drop
    << " at age " << worst_age;
  if (empty) d << ", " << empty << " empty ages";
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------------------
// 8. FRA 70 reform directions

Outcome reform_suite() {
  const ModelParams p = baseline_estimates();
  const PolicyRules r66 = fra66_baseline(), r70 = fra70_reform();
  const GridSpec g = desk_grid(r66);
  const DecisionTables t66 = solve(p, r66, g), t70 = solve(p, r70, g);
  const auto pop = generate_population(calibrated_population(20000), 8001);
  // welfare and retirement-age comparisons run without attrition
  SimOptions so;
  so.with_mortality = false;
  const Panel b = simulate_lifecycle(pop, t66, p, r66, 8002, so);
  const Panel f = simulate_lifecycle(pop, t70, p, r70, 8002, so);

  const auto ra66 = retirement_ages(b.rows), ra70 = retirement_ages(f.rows);
  const int pdv_age = 56;
  const auto pdv66 = mean_pdv(b.rows, pdv_age, p.prefs), pdv70 = mean_pdv(f.rows, pdv_age, p.prefs);
  const auto shares = response_shares(b.rows, f.rows, 51, 75);
  const CvSummary cv = compensating_variation_panel(b.rows, pdv_age, t66, p, t70, p, r66, r70);

  const bool a = ra66[0] < ra66[1] && ra66[1] < ra66[2];
  bool bb = true;
  for (int j = 0; j < kOcc; ++j) bb = bb && ra70[j] > ra66[j] && pdv70[j] < pdv66[j];
  double worst_share = 0;
  for (const auto& s : shares) {
    if (s.n == 0) continue;
    double sum = 0;
    for (double x : s.share) sum += x;
    worst_share = std::max(worst_share, std::abs(sum - 1));
  }
  const bool c = !shares.empty() && worst_share <= 1e-12;
  bool dd = true;
  for (int j = 0; j < 4; ++j)
    if (pdv70[j] < pdv66[j] && !(cv.mean_tau[j] >= 0)) dd = false;

  // reference levels: retirement ages under each rule and the PDV change
  const double ref66[3] = {64.50, 65.44, 66.94}, ref70[3] = {65.15, 66.08, 67.45};
  const double ref_dpdv[3] = {-0.51, -0.49, -0.22};
  double dist_ra = 0, dist_pdv = 0;
  for (int j = 0; j < kOcc; ++j) {
    dist_ra = std::max({dist_ra, std::abs(ra66[j] - ref66[j]), std::abs(ra70[j] - ref70[j])});
    dist_pdv = std::max(dist_pdv, std::abs((pdv70[j] - pdv66[j]) - ref_dpdv[j]));
  }

  Outcome o;
  o.pass = a && bb && c && dd;
  Detail d;
  d << std::setprecision(4) << "(a) " << (a ? "ok" : "FAIL") << " retirement ages";
  for (int j = 0; j < kOcc; ++j) d << " " << occ_label(j) << " " << ra66[j];
  d << "; (b) " << (bb ? "ok" : "FAIL");
  for (int j = 0; j < kOcc; ++j)
    d << " " << occ_label(j) << " age +" << ra70[j] - ra66[j] << " pdv " << pdv70[j] - pdv66[j];
  d << "; (c) " << (c ? "ok" : "FAIL") << " " << shares.size() << " ages, max |sum-1| " << worst_share;
  d << "; (d) " << (dd ? "ok" : "FAIL") << " mean CV";
  for (int j = 0; j < kOcc; ++j) d << " " << occ_label(j) << " " << cv.mean_tau[j];
  d << " (unbracketed " << cv.unbracketed << ")";
  d << "; diagnostic distance: retirement age " << dist_ra << " yr, pdv change " << dist_pdv;
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------------------
// 9. sandwich algebra

Outcome sandwich_algebra() {
  Eigen::Matrix2d G, W, L, expect;
  G << 1, 0, 1, 1;
  W << 1, 0, 0, 2;
  L << 3, 0, 0, 4;
  // G'WG = [[3,2],[2,2]], inverse [[1,-1],[-1,1.5]]; G'WLWG = [[19,16],[16,16]]
  expect << 3, -3, -3, 7;
  const Eigen::MatrixXd V = sandwich(G, W, L);
  const double err = (V - expect).cwiseAbs().maxCoeff();
  double scale_err = 0;
  for (double s : {0.001, 7.0, 1e6}) scale_err = std::max(scale_err, (sandwich(G, s * W, L) - V).cwiseAbs().maxCoeff());
  Outcome o;
  o.pass = err <= 1e-12 && scale_err <= 1e-12;
  Detail d;
  d << "max |V - hand| " << err << ", max change under weight scaling " << scale_err;
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------------------
// 10. determinism

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const ModelParams p = baseline_estimates();
  const PolicyRules r = fra66_baseline();
  const GridSpec g = desk_grid(r);
  const auto dir = std::filesystem::temp_directory_path() / ("retire_acceptance_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const std::vector<int> threads = {1, 4, 1};
  std::vector<std::string> tables, panels;
  const auto pop = generate_population(calibrated_population(20000), 10001);
  for (std::size_t k = 0; k < threads.size(); ++k) {
    const DecisionTables t = solve(p, r, g, {threads[k]});
    const std::string path = (dir / ("tables_" + std::to_string(k) + ".bin")).string();
    save_tables(path, t);
    tables.push_back(file_bytes(path));
    SimOptions so;
    so.threads = threads[k];
    const std::string csv = (dir / ("panel_" + std::to_string(k) + ".csv")).string();
    write_panel_csv(csv, simulate_lifecycle(pop, t, p, r, 10002, so).rows);
    panels.push_back(file_bytes(csv));
  }
  std::filesystem::remove_all(dir);
  Outcome o;
  const bool tab = tables[0] == tables[1] && tables[0] == tables[2] && !tables[0].empty();
  const bool pan = panels[0] == panels[1] && panels[0] == panels[2] && !panels[0].empty();
  o.pass = tab && pan;
  Detail d;
  d << "tables " << (tab ? "identical" : "DIFFER") << " (" << tables[0].size() << " bytes), panel "
    << (pan ? "identical" : "DIFFER") << " (" << panels[0].size() << " bytes) across threads 1/4 and a rerun";
  o.detail = d.str();
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;  // wall-clock bound, 0 = none
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "claiming adjustment schedule", 1.0, schedule_exactness},
      {2, "solver vs exhaustive enumeration", 10.0, toy_oracle},
      {3, "logit closed form vs Monte Carlo", 5.0, logit_monte_carlo},
      {4, "budget identity and panel invariants", 120.0, panel_invariants},
      {5, "mortality and health-transition normalization", 0, mortality_consistency},
      {6, "indirect inference self-consistency and recovery", 0, indirect_inference},
      {7, "disutility mask monotonicity", 0, mask_monotonicity},
      {8, "FRA 70 reform directions", 0, reform_suite},
      {9, "sandwich algebra", 0, sandwich_algebra},
      {10, "determinism across reruns and threads", 0, determinism},
  };
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!pick.empty() && !pick.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = seconds_since(t0);
    if (c.limit_s > 0 && secs >= c.limit_s) {
      o.pass = false;
      o.detail += " [over the time limit]";
    }
    std::ostringstream line;
    line << "criterion " << std::setw(2) << c.id << " " << (o.pass ? "PASS" : "FAIL") << "  " << c.name << ": "
         << o.detail << std::fixed << std::setprecision(2) << " (" << secs << " s";
    if (c.limit_s > 0) line << ", limit " << c.limit_s << " s";
    line << ")";
    std::cout << line.str() << std::endl;
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
