#include "retire/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <regex>
#include <unordered_map>

namespace retire {

using nlohmann::json;

Eigen::VectorXd make_weights(const Targets& t, const ObjectiveSpec& s, std::vector<std::string>* dropped) {
  if (!(s.scale > 0) || !std::isfinite(s.scale)) throw std::invalid_argument("objective: weight scale must be positive");
  Eigen::VectorXd w(t.var.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    const double v = t.var(k);
    if (!(v > 0) || !std::isfinite(v)) {
      w(k) = 0;
      if (dropped) dropped->push_back(t.names[k]);
      continue;
    }
    w(k) = s.scale * (s.rule == WeightRule::InverseVariance ? 1.0 / v : v);
  }
  return w;
}

double wald_loss(const Eigen::VectorXd& data, const Eigen::VectorXd& sim, const Eigen::VectorXd& w) {
  if (data.size() != sim.size() || data.size() != w.size()) throw std::invalid_argument("wald_loss: size mismatch");
  double l = 0;
  for (Eigen::Index k = 0; k < w.size(); ++k)
    if (w(k) != 0) l += w(k) * (data(k) - sim(k)) * (data(k) - sim(k));
  return l;
}

namespace {

struct ParamRef {
  std::string field;
  int index = -1;
};

ParamRef parse_param(const std::string& name) {
  static const std::regex re(R"(^([a-z_0-9]+)(\[([0-2])\])?$)");
  std::smatch m;
  if (!std::regex_match(name, m, re)) throw std::invalid_argument("unknown parameter '" + name + "'");
  ParamRef r{m[1], m[3].matched ? std::stoi(m[3]) : -1};
  const bool vec = r.field == "lambda1" || r.field == "lambda2" || r.field == "lambda3";
  const bool scal = r.field == "nu" || r.field == "iota1" || r.field == "iota2" || r.field == "beta" ||
                    r.field == "delta_lambda";
  if ((vec && r.index < 0) || (scal && r.index >= 0) || (!vec && !scal))
    throw std::invalid_argument("unknown parameter '" + name + "'");
  return r;
}

double& param_slot(ModelParams& p, const ParamRef& r) {
  auto& pr = p.prefs;
  if (r.field == "lambda1") return pr.lambda1[r.index];
  if (r.field == "lambda2") return pr.lambda2[r.index];
  if (r.field == "lambda3") return pr.lambda3[r.index];
  if (r.field == "nu") return pr.nu;
  if (r.field == "iota1") return pr.iota1;
  if (r.field == "iota2") return pr.iota2;
  if (r.field == "beta") return pr.beta;
  return pr.delta_lambda;
}

}  // namespace

double get_param(const ModelParams& p, const std::string& name) {
  ModelParams q = p;
  return param_slot(q, parse_param(name));
}

void set_param(ModelParams& p, const std::string& name, double v) { param_slot(p, parse_param(name)) = v; }

AuxSimulator::AuxSimulator(SimConfig cfg, std::vector<std::string> names) : cfg_(std::move(cfg)), names_(std::move(names)) {
  for (const auto& n : names_) parse_param(n);
  if (cfg_.rows.empty()) throw std::invalid_argument("estimation: empty conditioning panel");
}

ModelParams AuxSimulator::params_at(const Eigen::VectorXd& phi) const {
  if (phi.size() != static_cast<Eigen::Index>(names_.size())) throw std::invalid_argument("phi has the wrong length");
  ModelParams p = cfg_.base;
  for (std::size_t k = 0; k < names_.size(); ++k) set_param(p, names_[k], phi(k));
  return p;
}

AuxResult AuxSimulator::run(const Eigen::VectorXd& phi) {
  const ModelParams p = params_at(phi);
  DecisionTables t;
  try {
    SolveOptions so;
    so.threads = cfg_.threads;
    so.reuse = have_last_ ? &last_ : nullptr;
    t = solve(p, cfg_.rules, cfg_.grid, so);
  } catch (const std::exception& e) {
    std::string at;
    for (Eigen::Index k = 0; k < phi.size(); ++k) at += (k ? ", " : "") + names_[k] + "=" + std::to_string(phi(k));
    throw SolveFailure(std::string("solve failed at (") + at + "): " + e.what(), phi);
  }
  ++solves_;
  PredictOptions po;
  po.threads = cfg_.threads;
  const auto pred = simulate_one_period_ahead(cfg_.rows, t, p, cfg_.rules, cfg_.seed, po);
  AuxResult a = estimate_auxiliary(cfg_.rows, predicted_outcomes(pred), cfg_.aux);
  last_ = std::move(t);
  have_last_ = true;
  return a;
}

Objective::Objective(AuxSimulator& sim, Targets data, ObjectiveSpec spec) : sim_(sim), data_(std::move(data)) {
  w_ = make_weights(data_, spec, &dropped_);
}

namespace {

Eigen::VectorXd align(const AuxResult& a, const std::vector<std::string>& names) {
  std::unordered_map<std::string, Eigen::Index> pos;
  for (std::size_t k = 0; k < a.names.size(); ++k) pos[a.names[k]] = Eigen::Index(k);
  Eigen::VectorXd out(Eigen::Index(names.size()));
  for (std::size_t k = 0; k < names.size(); ++k) {
    auto it = pos.find(names[k]);
    if (it == pos.end()) throw std::invalid_argument("simulated auxiliary set lacks target '" + names[k] + "'");
    out(k) = a.theta(it->second);
  }
  return out;
}

}  // namespace

double Objective::operator()(const Eigen::VectorXd& phi) {
  last_aux = sim_.run(phi);
  return wald_loss(data_.theta, align(last_aux, data_.names), w_);
}

SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                          const SearchOptions& opt) {
  const Eigen::Index n = x0.size();
  SimplexResult res;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++res.evals;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  Eigen::VectorXd step = opt.step;
  if (step.size() != n) {
    step.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) step(i) = std::max(0.05, 0.1 * std::abs(x0(i)));
  }

  Eigen::VectorXd best = x0;
  double fbest = eval(x0);
  if (!std::isfinite(fbest)) throw std::invalid_argument("nelder_mead: objective not finite at the start point");

  double f_round = fbest;
  for (int round = 0; round <= opt.restarts; ++round) {
    std::vector<Eigen::VectorXd> xs(n + 1, best);
    std::vector<double> fs(n + 1, fbest);
    for (Eigen::Index i = 0; i < n; ++i) {
      xs[i + 1](i) += step(i);
      fs[i + 1] = eval(xs[i + 1]);
    }
    bool met = false;
    std::vector<int> ord(n + 1);
    while (res.evals < opt.max_evals) {
      std::iota(ord.begin(), ord.end(), 0);
      std::stable_sort(ord.begin(), ord.end(), [&](int a, int b) { return fs[a] < fs[b]; });
      const int lo = ord[0], hi = ord[n], nh = ord[n - 1];
      double diam = 0;
      for (int k = 1; k <= n; ++k) diam = std::max(diam, (xs[ord[k]] - xs[lo]).cwiseAbs().maxCoeff());
      if (fs[lo] < fbest) {
        fbest = fs[lo];
        best = xs[lo];
      }
      res.trace.push_back({res.evals, fbest, best});
      if (diam < opt.tol_x) {
        met = true;
        break;
      }
      Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
      for (int k = 0; k < n; ++k) c += xs[ord[k]];
      c /= double(n);
      const Eigen::VectorXd xr = c + (c - xs[hi]);
      const double fr = eval(xr);
      if (fr < fs[lo]) {
        const Eigen::VectorXd xe = c + 2.0 * (c - xs[hi]);
        const double fe = eval(xe);
        if (fe < fr) {
          xs[hi] = xe;
          fs[hi] = fe;
        } else {
          xs[hi] = xr;
          fs[hi] = fr;
        }
        continue;
      }
      if (fr < fs[nh]) {
        xs[hi] = xr;
        fs[hi] = fr;
        continue;
      }
      const bool outside = fr < fs[hi];
      const Eigen::VectorXd xc = outside ? Eigen::VectorXd(c + 0.5 * (xr - c)) : Eigen::VectorXd(c + 0.5 * (xs[hi] - c));
      const double fc = eval(xc);
      if (fc < (outside ? fr : fs[hi])) {
        xs[hi] = xc;
        fs[hi] = fc;
        continue;
      }
      for (int k = 1; k <= n; ++k) {  // shrink toward the best vertex
        xs[ord[k]] = xs[lo] + 0.5 * (xs[ord[k]] - xs[lo]);
        fs[ord[k]] = eval(xs[ord[k]]);
      }
    }
    for (int k = 0; k <= n; ++k)
      if (fs[k] < fbest) {
        fbest = fs[k];
        best = xs[k];
      }
    res.converged = met;
    if (!met) break;
    // restart from the best point; stop when a fresh simplex gains nothing
    if (round > 0 && f_round - fbest < opt.tol_f) break;
    if (res.evals + n + 1 > opt.max_evals) break;
    f_round = fbest;
  }
  res.x = best;
  res.f = fbest;
  return res;
}

Eigen::MatrixXd sandwich(const Eigen::MatrixXd& G, const Eigen::MatrixXd& W, const Eigen::MatrixXd& Lambda) {
  if (W.rows() != G.rows() || W.cols() != G.rows() || Lambda.rows() != G.rows() || Lambda.cols() != G.rows())
    throw std::invalid_argument("sandwich: dimension mismatch");
  const Eigen::MatrixXd B = G.transpose() * W * G;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B);
  const auto& sv = svd.singularValues();
  const double cond = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
  if (!(cond < 1e12)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "sandwich: singular bread matrix G'WG (condition number %.3g)", cond);
    throw SingularBread(buf, cond);
  }
  const Eigen::MatrixXd Bi = B.inverse();
  const Eigen::MatrixXd meat = G.transpose() * W * Lambda * W * G;
  Eigen::MatrixXd V = Bi * meat * Bi;
  return 0.5 * (V + V.transpose());
}

Eigen::MatrixXd aux_jacobian(AuxSimulator& sim, const Eigen::VectorXd& phi, const std::vector<std::string>& names,
                             double rel_step) {
  Eigen::MatrixXd G(Eigen::Index(names.size()), phi.size());
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    const double h = rel_step * std::max(std::abs(phi(i)), 0.1);
    Eigen::VectorXd up = phi, dn = phi;
    up(i) += h;
    dn(i) -= h;
    const Eigen::VectorXd fu = align(sim.run(up), names);
    const Eigen::VectorXd fd = align(sim.run(dn), names);
    G.col(i) = (fu - fd) / (2 * h);
  }
  return G;
}

Eigen::MatrixXd sandwich_se(Objective& obj, const Eigen::VectorXd& phi, double rel_step) {
  const Targets& d = obj.data();
  const AuxResult at = obj.simulator().run(phi);
  std::unordered_map<std::string, bool> drawn;
  for (std::size_t k = 0; k < at.names.size(); ++k) drawn[at.names[k]] = at.from_draws[k];
  const Eigen::MatrixXd G = aux_jacobian(obj.simulator(), phi, d.names, rel_step);
  const Eigen::Index K = G.rows();
  Eigen::MatrixXd W = obj.weights().asDiagonal();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(K, K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const double v = std::isfinite(d.var(k)) ? d.var(k) : 0.0;
    L(k, k) = v * (drawn[d.names[k]] ? 2.0 : 1.0);
  }
  return sandwich(G, W, L);
}

EstimationResult estimate(Objective& obj, const Eigen::VectorXd& start, const SearchOptions& opt, bool with_se) {
  EstimationResult r;
  r.param_names = obj.simulator().param_names();
  r.search = nelder_mead([&](const Eigen::VectorXd& x) { return obj(x); }, start, opt);
  r.phi = r.search.x;
  r.loss = obj(r.phi);
  r.fitted = obj.last_aux;
  r.data = obj.data();
  r.weights = obj.weights();
  r.dropped = obj.dropped();
  if (!r.search.converged) r.note = "evaluation budget exhausted before the simplex met the tolerance";
  if (with_se) {
    try {
      r.cov = sandwich_se(obj, r.phi);
      r.se = r.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    } catch (const SingularBread& e) {
      r.note += (r.note.empty() ? "" : "; ") + std::string(e.what());
    }
  }
  return r;
}

json to_json(const EstimationResult& r) {
  json params = json::array();
  for (std::size_t k = 0; k < r.param_names.size(); ++k) {
    json e{{"name", r.param_names[k]}, {"estimate", r.phi(k)}};
    if (r.se.size() == r.phi.size()) e["se"] = r.se(k);
    params.push_back(e);
  }
  json fit = json::array();
  std::unordered_map<std::string, Eigen::Index> pos;
  for (std::size_t k = 0; k < r.fitted.names.size(); ++k) pos[r.fitted.names[k]] = Eigen::Index(k);
  for (std::size_t k = 0; k < r.data.names.size(); ++k) {
    auto it = pos.find(r.data.names[k]);
    const double sim = it == pos.end() ? std::nan("") : r.fitted.theta(it->second);
    fit.push_back(json{{"name", r.data.names[k]},
                       {"data", r.data.theta(k)},
                       {"sim", sim},
                       {"weight", r.weights(k)},
                       {"contribution", r.weights(k) * (r.data.theta(k) - sim) * (r.data.theta(k) - sim)}});
  }
  json cov = json::array();
  for (Eigen::Index i = 0; i < r.cov.rows(); ++i) {
    std::vector<double> row(r.cov.cols());
    for (Eigen::Index j = 0; j < r.cov.cols(); ++j) row[j] = r.cov(i, j);
    cov.push_back(row);
  }
  json trace = json::array();
  for (const auto& t : r.search.trace) trace.push_back(json{{"evals", t.evals}, {"loss", t.f}});
  return json{{"schema_version", kSchemaVersion},
              {"parameters", params},
              {"loss", r.loss},
              {"converged", r.search.converged},
              {"evaluations", r.search.evals},
              {"covariance", cov},
              {"dropped_targets", r.dropped},
              {"note", r.note},
              {"fit", fit},
              {"trace", trace}};
}

std::string format_report(const EstimationResult& r) {
  std::string s;
  char buf[256];
  std::snprintf(buf, sizeof buf, "loss %.6g after %d evaluations (%s)\n", r.loss, r.search.evals,
                r.search.converged ? "converged" : "not converged");
  s += buf;
  s += "parameter            estimate        se\n";
  for (std::size_t k = 0; k < r.param_names.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%-18s %10.4f %10.4f\n", r.param_names[k].c_str(), r.phi(k),
                  r.se.size() == r.phi.size() ? r.se(k) : std::nan(""));
    s += buf;
  }
  if (!r.dropped.empty()) s += "dropped targets (zero variance): " + std::to_string(r.dropped.size()) + "\n";
  if (!r.note.empty()) s += "note: " + r.note + "\n";
  return s;
}

}  // namespace retire
