// Maximum-likelihood fitters for the first-stage models (synthetic data only).
#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "retire/processes.hpp"

namespace retire {

struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitOptions {
  int max_iter = 200;
  double grad_tol = 1e-6;
};

struct MnlFit {
  Eigen::MatrixXd coef;  // K x (J-1), class 0 is the reference
  double loglik = 0;
  double grad_norm = 0;
  int iterations = 0;
  std::vector<double> loglik_trace;
};

// Newton-Raphson with step halving. y holds class labels 0..J-1.
MnlFit fit_mnl(const Eigen::MatrixXd& X, const std::vector<int>& y, int J, const FitOptions& opt = {});

struct TransitionObs {
  int age = 60;
  Education education = Education::HighSchool;
  Occupation occupation = Occupation::Manual;
  int work = 1;
  int current = 0;
  int next = 0;
};

// One multinomial logit per current joint-health state.
HealthTransitionModel fit_multinomial_logit(const std::vector<TransitionObs>& panel, const FitOptions& opt = {});

struct TobitFit {
  Eigen::VectorXd beta;
  double sigma = 0;
  double loglik = 0;
  int iterations = 0;
};

// Left-censored at zero. Olsen reparametrization keeps the likelihood concave.
TobitFit fit_tobit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const FitOptions& opt = {});

}  // namespace retire
