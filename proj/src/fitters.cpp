#include "retire/fitters.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

namespace retire {

namespace {

// rows of X carry outcome counts N (rows x J); one-hot rows give the plain likelihood
double mnl_loglik(const Eigen::MatrixXd& X, const Eigen::MatrixXd& N, const Eigen::MatrixXd& B, Eigen::MatrixXd* P) {
  const long n = X.rows();
  const long J = N.cols();
  Eigen::MatrixXd eta(n, J);
  eta.col(0).setZero();
  eta.rightCols(J - 1) = X * B;
  double ll = 0;
  for (long i = 0; i < n; ++i) {
    const double m = eta.row(i).maxCoeff();
    double z = 0;
    for (long j = 0; j < J; ++j) z += std::exp(eta(i, j) - m);
    const double lz = m + std::log(z);
    for (long j = 0; j < J; ++j) {
      if (N(i, j) != 0) ll += N(i, j) * (eta(i, j) - lz);
      if (P) (*P)(i, j) = std::exp(eta(i, j) - lz);
    }
  }
  return ll;
}

MnlFit fit_grouped(const Eigen::MatrixXd& X, const Eigen::MatrixXd& N, const FitOptions& opt) {
  const long n = X.rows();
  const int K = static_cast<int>(X.cols());
  const int J = static_cast<int>(N.cols());
  const Eigen::VectorXd tot = N.rowwise().sum();
  for (int j = 0; j < J; ++j)
    if (N.col(j).sum() == 0) {
      std::ostringstream os;
      os << "fit_mnl: outcome class " << j << " has no observations (separation)";
      throw ConvergenceError(os.str());
    }

  const int D = K * (J - 1);
  MnlFit fit;
  fit.coef = Eigen::MatrixXd::Zero(K, J - 1);
  Eigen::MatrixXd P(n, J);
  double ll = mnl_loglik(X, N, fit.coef, &P);
  fit.loglik_trace.push_back(ll);

  auto gradient = [&] {
    Eigen::VectorXd g(D);
    for (int a = 1; a < J; ++a)
      g.segment((a - 1) * K, K).noalias() = X.transpose() * (N.col(a) - tot.cwiseProduct(P.col(a)));
    return g;
  };

  for (int it = 0; it < opt.max_iter; ++it) {
    const Eigen::VectorXd g = gradient();
    Eigen::MatrixXd H(D, D);
    for (int a = 1; a < J; ++a)
      for (int b = a; b < J; ++b) {
        Eigen::VectorXd w = -P.col(a).cwiseProduct(P.col(b));
        if (a == b) w += P.col(a);
        w = w.cwiseProduct(tot);
        H.block((a - 1) * K, (b - 1) * K, K, K).noalias() = X.transpose() * (X.array().colwise() * w.array()).matrix();
        if (b != a) H.block((b - 1) * K, (a - 1) * K, K, K) = H.block((a - 1) * K, (b - 1) * K, K, K).transpose();
      }

    fit.grad_norm = g.norm();
    fit.iterations = it;
    if (fit.grad_norm < opt.grad_tol) return fit;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-14) {
      std::ostringstream os;
      os << "fit_mnl: singular information matrix at iteration " << it << " (rcond " << ldlt.rcond()
         << ", |grad| " << fit.grad_norm << ")";
      throw ConvergenceError(os.str());
    }
    Eigen::VectorXd step = ldlt.solve(g);
    // inside the quadratic region the log-likelihood gain is below its own
    // rounding noise, so the full step is taken without the ascent check
    const bool local = g.dot(step) < 1e-12 * std::max(1.0, std::abs(ll));
    double t = 1.0;
    bool improved = false;
    for (int h = 0; h < 40; ++h, t *= 0.5) {
      Eigen::MatrixXd Bn = fit.coef + t * Eigen::Map<Eigen::MatrixXd>(step.data(), K, J - 1);
      Eigen::MatrixXd Pn(n, J);
      const double lln = mnl_loglik(X, N, Bn, &Pn);
      if (lln >= ll || local) {
        fit.coef = Bn;
        P = Pn;
        ll = lln;
        improved = true;
        break;
      }
    }
    fit.loglik_trace.push_back(ll);
    fit.loglik = ll;
    if (!improved) break;
    if (fit.coef.cwiseAbs().maxCoeff() > 60) {
      std::ostringstream os;
      os << "fit_mnl: coefficients diverging (max |b| " << fit.coef.cwiseAbs().maxCoeff()
         << "), likely quasi-separation";
      throw ConvergenceError(os.str());
    }
  }
  fit.loglik = ll;
  if (fit.grad_norm >= opt.grad_tol) {
    // one last gradient check at the final point
    fit.grad_norm = gradient().norm();
    if (fit.grad_norm >= opt.grad_tol) {
      std::ostringstream os;
      os << "fit_mnl: no convergence after " << fit.iterations << " iterations, |grad| " << fit.grad_norm;
      throw ConvergenceError(os.str());
    }
  }
  return fit;
}

}  // namespace

MnlFit fit_mnl(const Eigen::MatrixXd& X, const std::vector<int>& y, int J, const FitOptions& opt) {
  if (X.rows() != static_cast<long>(y.size())) throw std::invalid_argument("fit_mnl: X/y size mismatch");
  Eigen::MatrixXd N = Eigen::MatrixXd::Zero(X.rows(), J);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || y[i] >= J) throw std::invalid_argument("fit_mnl: class label out of range");
    N(static_cast<long>(i), y[i]) = 1.0;
  }
  return fit_grouped(X, N, opt);
}

HealthTransitionModel fit_multinomial_logit(const std::vector<TransitionObs>& panel, const FitOptions& opt) {
  HealthTransitionModel m;
  int lo = 1000, hi = -1000;
  for (int c = 0; c < kHealth; ++c) {
    // covariates are discrete, so identical rows collapse into outcome counts
    std::map<std::tuple<int, int, int, int>, std::array<double, kHealth>> cells;
    for (const auto& o : panel) {
      if (o.current != c) continue;
      if (o.next < 0 || o.next >= kHealth) throw std::invalid_argument("fit_multinomial_logit: health state out of range");
      cells[{o.age, int(o.education), int(o.occupation), o.work == 1 ? 1 : 0}][o.next] += 1.0;
      lo = std::min(lo, o.age);
      hi = std::max(hi, o.age);
    }
    if (cells.empty()) throw ConvergenceError("fit_multinomial_logit: no transitions from state " + std::to_string(c));
    Eigen::MatrixXd X(cells.size(), kHealthCov), N(cells.size(), kHealth);
    long i = 0;
    for (const auto& [key, cnt] : cells) {
      const auto& [age, e, j, d] = key;
      const auto x = health_covariates(age, Education(e), Occupation(j), d);
      for (int k = 0; k < kHealthCov; ++k) X(i, k) = x[k];
      for (int n = 0; n < kHealth; ++n) N(i, n) = cnt[n];
      ++i;
    }
    const MnlFit f = fit_grouped(X, N, opt);
    for (int n = 1; n < kHealth; ++n)
      for (int k = 0; k < kHealthCov; ++k) m.coef[c][n][k] = f.coef(k, n - 1);
  }
  m.min_age = lo;
  m.max_age = hi;
  return m;
}

namespace {

double log_Phi(double z) {
  if (z > -30) return std::log(0.5 * std::erfc(-z / std::sqrt(2.0)));
  return -0.5 * z * z - std::log(-z) - 0.5 * std::log(2 * M_PI);
}

// phi(z) / Phi(z)
double mills(double z) {
  if (z > -30) return std::exp(-0.5 * z * z) / std::sqrt(2 * M_PI) / (0.5 * std::erfc(-z / std::sqrt(2.0)));
  return -z;
}

double tobit_ll(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& g, double th) {
  double ll = 0;
  for (long i = 0; i < X.rows(); ++i) {
    const double xg = X.row(i).dot(g);
    if (y(i) > 0) {
      const double e = th * y(i) - xg;
      ll += std::log(th) - 0.5 * e * e - 0.5 * std::log(2 * M_PI);
    } else {
      ll += log_Phi(-xg);
    }
  }
  return ll;
}

}  // namespace

TobitFit fit_tobit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const FitOptions& opt) {
  const long n = X.rows();
  const int K = static_cast<int>(X.cols());
  long pos = 0;
  for (long i = 0; i < n; ++i) pos += y(i) > 0;
  if (pos < K + 1) throw ConvergenceError("fit_tobit: too few uncensored observations");

  // OLS start on the positive part
  Eigen::VectorXd g = (X.transpose() * X).ldlt().solve(X.transpose() * y);
  double s2 = (y - X * g).squaredNorm() / n;
  double th = 1.0 / std::sqrt(std::max(s2, 1e-8));
  g *= th;
  double ll = tobit_ll(X, y, g, th);

  TobitFit out;
  for (int it = 0; it < opt.max_iter; ++it) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(K + 1);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(K + 1, K + 1);
    for (long i = 0; i < n; ++i) {
      const auto xi = X.row(i).transpose();
      const double xg = xi.dot(g);
      if (y(i) > 0) {
        const double e = th * y(i) - xg;
        grad.head(K) += e * xi;
        grad(K) += 1.0 / th - e * y(i);
        H.topLeftCorner(K, K).noalias() -= xi * xi.transpose();
        H.col(K).head(K) += y(i) * xi;
        H(K, K) += -1.0 / (th * th) - y(i) * y(i);
      } else {
        const double z = -xg, lam = mills(z);
        grad.head(K) -= lam * xi;
        H.topLeftCorner(K, K).noalias() -= lam * (z + lam) * (xi * xi.transpose());
      }
    }
    H.row(K).head(K) = H.col(K).head(K).transpose();
    out.iterations = it;
    if (grad.norm() < opt.grad_tol) break;
    Eigen::VectorXd step = (-H).ldlt().solve(grad);
    double t = 1.0;
    bool improved = false;
    for (int h = 0; h < 40; ++h, t *= 0.5) {
      Eigen::VectorXd gn = g + t * step.head(K);
      const double thn = th + t * step(K);
      if (!(thn > 0)) continue;
      const double lln = tobit_ll(X, y, gn, thn);
      if (lln >= ll) {
        g = gn;
        th = thn;
        ll = lln;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  out.sigma = 1.0 / th;
  out.beta = g / th;
  out.loglik = ll;
  return out;
}

}  // namespace retire
