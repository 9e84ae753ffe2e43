// Indirect inference: auxiliary regressions, Wald-type loss, simplex search
// and sandwich standard errors.
#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "retire/simulator.hpp"

namespace retire {

struct RankError : std::runtime_error {
  std::vector<std::string> columns;
  RankError(const std::string& what, std::vector<std::string> cols)
      : std::runtime_error(what), columns(std::move(cols)) {}
};

struct OlsResult {
  Eigen::VectorXd beta;
  Eigen::VectorXd var;  // HC0 robust variances
  long n = 0;
};

// Least squares with HC0 variances. Throws RankError naming the columns that
// are linear combinations of the others.
OlsResult ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& names);

// Subtract group means (within transformation); groups given per row.
void demean_by_group(Eigen::MatrixXd& X, Eigen::VectorXd& y, const std::vector<std::int64_t>& group);

struct AuxSpec {
  int age_min = 51, age_max = 75;
  bool lfp_age = true;        // (a)
  bool lfp_health = true;     // (b)
  bool fixed_effects = true;  // (b) within-individual
  bool neg_assets = true;     // (b) negative-asset indicator column
  bool asset_change = true;   // (c)
  bool asset_tertiles = true; // (d)
  int tertile_bin = 5;
  bool initial_conditions = false;  // (e)
  bool long_run_gaps = false;       // (f)
};

nlohmann::json to_json(const AuxSpec& s);
AuxSpec aux_spec_from_json(const nlohmann::json& j);

// Per-row outcomes fed to the auxiliary models. For observed data all three
// come from the panel; for one-period-ahead simulation `work` is the smooth
// predicted probability, `anext` the expected A' and `anext_draw` a draw.
struct AuxOutcomes {
  std::vector<double> work, anext, anext_draw;
};

AuxOutcomes observed_outcomes(const std::vector<PanelRow>& rows);
AuxOutcomes predicted_outcomes(const std::vector<Prediction>& pred);

struct AuxResult {
  std::vector<std::string> names;
  Eigen::VectorXd theta, var;
  std::vector<bool> from_draws;  // target depends on drawn (non-smooth) outcomes
};

AuxResult estimate_auxiliary(const std::vector<PanelRow>& rows, const AuxOutcomes& y, const AuxSpec& spec);

struct Targets {
  std::vector<std::string> names;
  Eigen::VectorXd theta, var;
};

Targets targets_from(const AuxResult& a);
nlohmann::json to_json(const Targets& t);
Targets targets_from_json(const nlohmann::json& j);
void write_targets_csv(const std::string& path, const Targets& t);
Targets read_targets_csv(const std::string& path);

enum class WeightRule { InverseVariance, Variance };

struct ObjectiveSpec {
  WeightRule rule = WeightRule::InverseVariance;
  double scale = 1.0;  // multiplies every weight
};

// Diagonal weights; targets with zero or non-finite variance get weight 0 and
// are listed in `dropped`.
Eigen::VectorXd make_weights(const Targets& t, const ObjectiveSpec& s, std::vector<std::string>* dropped = nullptr);

double wald_loss(const Eigen::VectorXd& data, const Eigen::VectorXd& sim, const Eigen::VectorXd& w);

// Named scalar parameters: lambda1[j], lambda2[j], lambda3[j], nu, iota1,
// iota2, beta, delta_lambda.
double get_param(const ModelParams& p, const std::string& name);
void set_param(ModelParams& p, const std::string& name, double v);

struct SimConfig {
  ModelParams base;
  PolicyRules rules;
  GridSpec grid;
  std::vector<PanelRow> rows;  // conditioning panel
  AuxSpec aux;
  std::uint64_t seed = 1;
  int threads = 0;
};

// Solve, predict one period ahead on the conditioning panel and run the
// auxiliary models. Keeps the last solution to reuse no-work-choice groups.
class AuxSimulator {
 public:
  explicit AuxSimulator(SimConfig cfg, std::vector<std::string> param_names);
  AuxResult run(const Eigen::VectorXd& phi);
  ModelParams params_at(const Eigen::VectorXd& phi) const;
  const SimConfig& config() const { return cfg_; }
  const std::vector<std::string>& param_names() const { return names_; }
  long solves() const { return solves_; }

 private:
  SimConfig cfg_;
  std::vector<std::string> names_;
  DecisionTables last_;
  bool have_last_ = false;
  long solves_ = 0;
};

struct SolveFailure : std::runtime_error {
  Eigen::VectorXd phi;
  SolveFailure(const std::string& w, Eigen::VectorXd p) : std::runtime_error(w), phi(std::move(p)) {}
};

class Objective {
 public:
  Objective(AuxSimulator& sim, Targets data, ObjectiveSpec spec);
  double operator()(const Eigen::VectorXd& phi);
  const Eigen::VectorXd& weights() const { return w_; }
  const Targets& data() const { return data_; }
  const std::vector<std::string>& dropped() const { return dropped_; }
  AuxSimulator& simulator() { return sim_; }
  AuxResult last_aux;

 private:
  AuxSimulator& sim_;
  Targets data_;
  Eigen::VectorXd w_;
  std::vector<std::string> dropped_;
};

struct SearchOptions {
  int max_evals = 400;
  double tol_x = 1e-3;  // simplex diameter
  double tol_f = 1e-8;
  int restarts = 2;
  Eigen::VectorXd step;  // initial simplex offsets; empty = 10% of |x0| (min 0.05)
};

struct SearchRecord {
  int evals = 0;
  double f = 0;
  Eigen::VectorXd x;
};

struct SimplexResult {
  Eigen::VectorXd x;
  double f = 0;
  int evals = 0;
  bool converged = false;
  std::vector<SearchRecord> trace;  // best-so-far after each iteration
};

SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                          const SearchOptions& opt);

struct SingularBread : std::runtime_error {
  double condition;
  SingularBread(const std::string& w, double c) : std::runtime_error(w), condition(c) {}
};

// (G'WG)^-1 (G'W Lambda W G) (G'WG)^-1
Eigen::MatrixXd sandwich(const Eigen::MatrixXd& G, const Eigen::MatrixXd& W, const Eigen::MatrixXd& Lambda);

// Central-difference Jacobian of the simulated targets in phi, step
// rel_step * max(|phi_i|, 0.1).
Eigen::MatrixXd aux_jacobian(AuxSimulator& sim, const Eigen::VectorXd& phi, const std::vector<std::string>& names,
                             double rel_step = 1e-3);

struct EstimationResult {
  std::vector<std::string> param_names;
  Eigen::VectorXd phi, se;
  Eigen::MatrixXd cov;
  double loss = 0;
  SimplexResult search;
  Targets data;
  AuxResult fitted;
  Eigen::VectorXd weights;
  std::vector<std::string> dropped;
  std::string note;
};

// Sandwich covariance at phi: Lambda = diag(var) with the variance of
// draw-based targets doubled (one simulated draw per observed row).
Eigen::MatrixXd sandwich_se(Objective& obj, const Eigen::VectorXd& phi, double rel_step = 1e-3);

EstimationResult estimate(Objective& obj, const Eigen::VectorXd& start, const SearchOptions& opt, bool with_se);

nlohmann::json to_json(const EstimationResult& r);
std::string format_report(const EstimationResult& r);

}  // namespace retire
