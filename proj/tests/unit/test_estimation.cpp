#include <doctest.h>

#include <random>

#include "retire/estimation.hpp"

using namespace retire;

namespace {

// Small synthetic DGP: short horizon, a few thousand people.
struct Dgp {
  ModelParams truth = baseline_estimates();
  PolicyRules rules;
  GridSpec grid;
  std::vector<PanelRow> rows;
  AuxSpec aux;
  Dgp() {
    grid = grid_preset("test", rules);
    grid.first_age = 55;
    grid.terminal_age = 68;
    grid.last_labor_age = 68;
    InitialPopulationSpec pop = calibrated_population(2000);
    pop.age_min = 55;
    pop.age_max = 60;
    const auto init = generate_population(pop, 3);
    const DecisionTables t = solve(truth, rules, grid);
    SimOptions so;
    so.last_age = 66;
    rows = simulate_lifecycle(init, t, truth, rules, 4, so).rows;
    aux.age_min = 55;
    aux.age_max = 66;
    aux.neg_assets = false;
  }
  SimConfig config(std::uint64_t seed = 77) const {
    SimConfig c;
    c.base = truth;
    c.rules = rules;
    c.grid = grid;
    c.rows = rows;
    c.aux = aux;
    c.seed = seed;
    return c;
  }
};

const Dgp& dgp() {
  static const Dgp d;
  return d;
}

}  // namespace

TEST_CASE("ols recovers an exact linear function") {
  std::mt19937_64 g(1);
  std::bernoulli_distribution b(0.3);
  const int n = 500;
  Eigen::MatrixXd X(n, 3);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1;
    X(i, 1) = b(g);
    X(i, 2) = b(g);
    y(i) = 0.8 - 0.25 * X(i, 1) - 0.1 * X(i, 2);
  }
  const OlsResult r = ols(X, y, {"const", "hp", "hc"});
  CHECK(std::abs(r.beta(0) - 0.8) < 1e-10);
  CHECK(std::abs(r.beta(1) + 0.25) < 1e-10);
  CHECK(std::abs(r.beta(2) + 0.1) < 1e-10);
  CHECK(r.var.maxCoeff() < 1e-20);
}

TEST_CASE("ols names collinear columns") {
  Eigen::MatrixXd X(6, 3);
  X << 1, 1, 2, 1, 2, 4, 1, 3, 6, 1, 4, 8, 1, 5, 10, 1, 6, 12;
  Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(6, 0, 1);
  try {
    ols(X, y, {"const", "x", "two_x"});
    FAIL("expected a rank error");
  } catch (const RankError& e) {
    REQUIRE(e.columns.size() == 1);
    CHECK((e.columns[0] == "x" || e.columns[0] == "two_x"));
  }
}

TEST_CASE("within transformation absorbs individual-constant regressors") {
  const int people = 200, T = 4;
  Eigen::MatrixXd X(people * T, 2);
  Eigen::VectorXd y(people * T);
  std::vector<std::int64_t> id;
  std::mt19937_64 g(2);
  std::normal_distribution<double> z(0, 1);
  for (int i = 0; i < people; ++i) {
    const double fixed = z(g);
    for (int t = 0; t < T; ++t) {
      X(i * T + t, 0) = z(g);
      X(i * T + t, 1) = fixed;
      y(i * T + t) = z(g);
      id.push_back(i);
    }
  }
  demean_by_group(X, y, id);
  CHECK_THROWS_AS(ols(X, y, {"x", "fixed"}), RankError);

  // through the auxiliary models: health never changes within a person
  std::vector<PanelRow> rows;
  for (int i = 0; i < 60; ++i)
    for (int a = 55; a < 58; ++a) {
      PanelRow w;
      w.id = i;
      w.age = a;
      w.occupation = i % 3;
      w.health_p = i % 2;
      w.health_c = (i / 2) % 2;
      w.assets = 50 + i + a;
      w.worked_last = 1;
      w.d = (i + a) % 2;
      rows.push_back(w);
    }
  AuxSpec s;
  s.age_min = 55;
  s.age_max = 57;
  s.lfp_age = s.asset_change = s.asset_tertiles = false;
  s.neg_assets = false;
  try {
    estimate_auxiliary(rows, observed_outcomes(rows), s);
    FAIL("expected a rank error");
  } catch (const RankError& e) {
    CHECK(std::string(e.what()).find("collinear") != std::string::npos);
    CHECK(!e.columns.empty());
  }
}

TEST_CASE("pooled and fixed-effects slopes differ and FE matches the two-way computation") {
  const int people = 10000, T = 3;
  std::mt19937_64 g(3);
  std::normal_distribution<double> z(0, 1);
  Eigen::MatrixXd Xp(people * T, 2), Xf(people * T, 1);
  Eigen::VectorXd y(people * T);
  std::vector<std::int64_t> id;
  for (int i = 0; i < people; ++i) {
    const double alpha = z(g);
    for (int t = 0; t < T; ++t) {
      const int r = i * T + t;
      const double h = (z(g) + 0.8 * alpha > 0.5) ? 1.0 : 0.0;  // health correlated with the effect
      y(r) = alpha - 0.3 * h + 0.5 * z(g);
      Xp(r, 0) = 1;
      Xp(r, 1) = h;
      Xf(r, 0) = h;
      id.push_back(i);
    }
  }
  // direct within estimator
  double sxy = 0, sxx = 0;
  for (int i = 0; i < people; ++i) {
    double mx = 0, my = 0;
    for (int t = 0; t < T; ++t) {
      mx += Xf(i * T + t, 0) / T;
      my += y(i * T + t) / T;
    }
    for (int t = 0; t < T; ++t) {
      sxy += (Xf(i * T + t, 0) - mx) * (y(i * T + t) - my);
      sxx += (Xf(i * T + t, 0) - mx) * (Xf(i * T + t, 0) - mx);
    }
  }
  const double pooled = ols(Xp, y, {"const", "h"}).beta(1);
  Eigen::VectorXd yf = y;
  demean_by_group(Xf, yf, id);
  const double fe = ols(Xf, yf, {"h"}).beta(0);
  CHECK(std::abs(fe - sxy / sxx) < 1e-10);
  CHECK(std::abs(fe + 0.3) < 0.05);
  CHECK(pooled - fe > 0.3);
}

TEST_CASE("wald loss and weights") {
  Eigen::VectorXd a(2), b(2), w = Eigen::VectorXd::Ones(2);
  a << 1, 2;
  b << 4, -2;
  CHECK(wald_loss(a, b, w) == 25.0);
  Targets t{{"x", "y", "z"}, Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(0.5, 0, 4)};
  std::vector<std::string> dropped;
  const Eigen::VectorXd iv = make_weights(t, {}, &dropped);
  CHECK(iv(0) == 2.0);
  CHECK(iv(1) == 0.0);
  CHECK(iv(2) == 0.25);
  CHECK(dropped == std::vector<std::string>{"y"});
  const Eigen::VectorXd lit = make_weights(t, {WeightRule::Variance, 2.0});
  CHECK(lit(2) == 8.0);
  CHECK_THROWS(make_weights(t, {WeightRule::InverseVariance, 0.0}));
  CHECK_THROWS(wald_loss(a, Eigen::VectorXd::Zero(3), w));
}

TEST_CASE("parameter names") {
  ModelParams p = baseline_estimates();
  CHECK(get_param(p, "lambda2[1]") == -0.292);
  set_param(p, "lambda3[2]", -0.5);
  CHECK(p.prefs.lambda3[2] == -0.5);
  set_param(p, "delta_lambda", 0.231);
  CHECK(p.prefs.delta_lambda == 0.231);
  CHECK_THROWS_AS(get_param(p, "lambda2"), std::invalid_argument);
  CHECK_THROWS_AS(get_param(p, "nu[0]"), std::invalid_argument);
  CHECK_THROWS_AS(get_param(p, "kappa5"), std::invalid_argument);
}

TEST_CASE("nelder-mead finds the minimum of a convex quadratic") {
  Eigen::Vector3d c(1.5, -2.0, 0.25);
  auto f = [&](const Eigen::VectorXd& x) {
    const Eigen::Vector3d d = x - c;
    return d(0) * d(0) + 3 * d(1) * d(1) + 0.5 * d(2) * d(2) + 0.2 * d(0) * d(1);
  };
  SearchOptions o;
  o.tol_x = 1e-9;
  o.tol_f = 1e-16;
  o.max_evals = 5000;
  const SimplexResult r = nelder_mead(f, Eigen::Vector3d(0, 0, 0), o);
  CHECK(r.converged);
  CHECK((r.x - c).cwiseAbs().maxCoeff() < 1e-6);
  for (std::size_t k = 1; k < r.trace.size(); ++k) CHECK(r.trace[k].f <= r.trace[k - 1].f);
  // a tiny budget is reported as non-converged
  o.max_evals = 10;
  CHECK_FALSE(nelder_mead(f, Eigen::Vector3d(0, 0, 0), o).converged);
}

TEST_CASE("sandwich: hand-computed 2x2 case") {
  Eigen::Matrix2d G, W, L;
  G << 1, 0, 1, 1;
  W << 1, 0, 0, 2;
  L << 3, 0, 0, 4;
  // G'WG = [[3,2],[2,2]], inverse [[1,-1],[-1,1.5]]; G'WLWG = [[19,16],[16,16]]
  Eigen::Matrix2d expect;
  expect << 3, -3, -3, 7;
  const Eigen::MatrixXd V = sandwich(G, W, L);
  CHECK((V - expect).cwiseAbs().maxCoeff() < 1e-12);
  // rescaled weights give the same covariance
  const Eigen::MatrixXd V7 = sandwich(G, 7.0 * W, L);
  CHECK((V7 - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sandwich: efficient weighting collapses and covariance is PSD") {
  std::mt19937_64 g(5);
  std::normal_distribution<double> z(0, 1);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd G(6, 2);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 2; ++j) G(i, j) = z(g);
    Eigen::VectorXd lam(6), w(6);
    for (int i = 0; i < 6; ++i) {
      lam(i) = u(g);
      w(i) = u(g);
    }
    const Eigen::MatrixXd L = lam.asDiagonal();
    const Eigen::MatrixXd Li = lam.cwiseInverse().asDiagonal();
    const Eigen::MatrixXd eff = sandwich(G, Li, L);
    const Eigen::MatrixXd direct = (G.transpose() * Li * G).inverse();
    CHECK((eff - direct).cwiseAbs().maxCoeff() < 1e-10 * (1 + direct.cwiseAbs().maxCoeff()));
    const Eigen::MatrixXd V = sandwich(G, Eigen::MatrixXd(w.asDiagonal()), L);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(V);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    const Eigen::MatrixXd Vc = sandwich(G, Eigen::MatrixXd((0.01 * w).asDiagonal()), L);
    CHECK((V - Vc).cwiseAbs().maxCoeff() < 1e-10 * (1 + V.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("sandwich: singular bread reports its condition number") {
  Eigen::MatrixXd G(3, 2);
  G << 1, 2, 2, 4, 3, 6;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  try {
    sandwich(G, I, I);
    FAIL("expected a singular bread error");
  } catch (const SingularBread& e) {
    CHECK(e.condition >= 1e12);
    CHECK(std::string(e.what()).find("condition number") != std::string::npos);
  }
}

TEST_CASE("type probability and the degenerate mixture") {
  StateVector s;
  TypeModel m;
  CHECK(type_probability(s, true, m) == 0.5);
  CHECK(type_probability(s, false, m) == 0.5);
  m.work_pref = 1.0;
  CHECK(type_probability(s, true, m) == doctest::Approx(logistic(1.0)).epsilon(1e-15));
  // type-2 shift from the two manual-worker disutility estimates
  const double type1 = -0.420, type2 = -0.189;
  CHECK(std::abs((type2 - type1) - 0.231) < 1e-12);

  // delta_lambda = 0: both types solve to identical tables
  ModelParams p = baseline_estimates();
  p.types.n_types = 2;
  p.prefs.delta_lambda = 0;
  GridSpec g = grid_preset("test", PolicyRules{});
  g.first_age = 60;
  g.terminal_age = 64;
  const DecisionTables t = solve(p, PolicyRules{}, g);
  for (const auto& T : t.ages) {
    const AgeLayout& L = T.lay;
    for (int gi = 0; gi < L.groups(); ++gi) {
      const auto G = L.decode(gi);
      if (G.type != 1) continue;
      const int g0 = L.group(0, G.edu, G.occ, G.h, G.ins_slot, G.wl);
      for (int c = 0; c < L.cells_per_group(); ++c) {
        CHECK(T.v0[std::size_t(gi) * L.cells_per_group() + c] == T.v0[std::size_t(g0) * L.cells_per_group() + c]);
        CHECK(T.p[std::size_t(gi) * L.cells_per_group() + c] == T.p[std::size_t(g0) * L.cells_per_group() + c]);
      }
    }
  }
}

TEST_CASE("objective: self-consistency, common random numbers, local identification") {
  const Dgp& d = dgp();
  const std::vector<std::string> names = {"lambda2[0]", "lambda3[2]"};
  AuxSimulator truth_sim(d.config(), names);
  const Eigen::Vector2d phi0(d.truth.prefs.lambda2[0], d.truth.prefs.lambda3[2]);
  const Targets data = targets_from(truth_sim.run(phi0));
  AuxSimulator sim(d.config(), names);
  Objective obj(sim, data, {});
  CHECK(obj(phi0) <= 1e-12);
  CHECK(obj(phi0) == obj(phi0));
  const double base = obj(phi0);
  for (int k = 0; k < 2; ++k) {
    Eigen::Vector2d up = phi0;
    up(k) += 0.5;
    const double l = obj(up);
    CHECK(l > base);
    CHECK(l == obj(up));  // deterministic in phi
  }
  // the solver reused the retired groups across evaluations
  CHECK(sim.solves() >= 5);
}

TEST_CASE("search from opposite corners reaches the same loss") {
  const Dgp& d = dgp();
  const std::vector<std::string> names = {"lambda1[0]"};
  AuxSimulator truth_sim(d.config(), names);
  const Targets data = targets_from(truth_sim.run(Eigen::VectorXd::Constant(1, d.truth.prefs.lambda1[0])));
  SearchOptions o;
  o.max_evals = 60;
  o.tol_x = 1e-3;
  o.restarts = 0;
  o.step = Eigen::VectorXd::Constant(1, 0.2);
  AuxSimulator s1(d.config(), names), s2(d.config(), names);
  Objective f1(s1, data, {}), f2(s2, data, {});
  const EstimationResult lo = estimate(f1, Eigen::VectorXd::Constant(1, -1.2), o, false);
  const EstimationResult hi = estimate(f2, Eigen::VectorXd::Constant(1, 0.4), o, false);
  CHECK(std::abs(lo.loss - hi.loss) < 1e-4);
  CHECK(std::abs(lo.phi(0) - d.truth.prefs.lambda1[0]) < 0.01);
  CHECK(std::abs(hi.phi(0) - d.truth.prefs.lambda1[0]) < 0.01);
  // scaling every weight leaves the located argmin in place
  AuxSimulator s3(d.config(), names);
  Objective f3(s3, data, {WeightRule::InverseVariance, 1000.0});
  const EstimationResult sc = estimate(f3, Eigen::VectorXd::Constant(1, -1.2), o, false);
  CHECK(std::abs(sc.phi(0) - lo.phi(0)) < o.tol_x);
}

TEST_CASE("targets round trip through json and csv") {
  Targets t{{"a.occ0.age55", "b.occ1.poor_physical"}, Eigen::Vector2d(0.123456789012345678, -1e-7),
            Eigen::Vector2d(1e-5, 2.5e-9)};
  const Targets j = targets_from_json(to_json(t));
  CHECK(j.names == t.names);
  CHECK(j.theta == t.theta);
  CHECK(j.var == t.var);
  const std::string path = "targets_roundtrip_test.csv";
  write_targets_csv(path, t);
  const Targets c = read_targets_csv(path);
  CHECK(c.names == t.names);
  CHECK(c.theta == t.theta);
  CHECK(c.var == t.var);
  std::remove(path.c_str());
  nlohmann::json bad = to_json(t);
  bad["schema_version"] = 99;
  CHECK_THROWS(targets_from_json(bad));
}
