#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "retire/estimation.hpp"

namespace retire {

using nlohmann::json;

OlsResult ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& names) {
  if (X.rows() != y.size()) throw std::invalid_argument("ols: X and y row counts differ");
  if (X.cols() != static_cast<Eigen::Index>(names.size())) throw std::invalid_argument("ols: names/columns mismatch");
  if (X.rows() < X.cols()) throw RankError("ols: fewer rows than columns", names);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < X.cols()) {
    // pivots past the rank are the columns spanned by the others
    std::vector<std::string> bad;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = qr.rank(); k < X.cols(); ++k) bad.push_back(names[perm[k]]);
    std::string msg = "rank-deficient design; collinear columns:";
    for (const auto& b : bad) msg += " " + b;
    throw RankError(msg, bad);
  }
  OlsResult r;
  r.n = X.rows();
  r.beta = qr.solve(y);
  const Eigen::VectorXd e = y - X * r.beta;
  const Eigen::MatrixXd XtXi = (X.transpose() * X).inverse();
  const Eigen::MatrixXd meat = X.transpose() * e.array().square().matrix().asDiagonal() * X;
  r.var = (XtXi * meat * XtXi).diagonal();
  return r;
}

void demean_by_group(Eigen::MatrixXd& X, Eigen::VectorXd& y, const std::vector<std::int64_t>& group) {
  std::unordered_map<std::int64_t, std::pair<Eigen::VectorXd, long>> acc;
  const Eigen::Index k = X.cols();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    auto& a = acc[group[i]];
    if (a.second == 0) a.first = Eigen::VectorXd::Zero(k + 1);
    a.first.head(k) += X.row(i).transpose();
    a.first(k) += y(i);
    ++a.second;
  }
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const auto& a = acc[group[i]];
    const Eigen::VectorXd m = a.first / double(a.second);
    X.row(i) -= m.head(k).transpose();
    y(i) -= m(k);
  }
}

json to_json(const AuxSpec& s) {
  return json{{"age_min", s.age_min},
              {"age_max", s.age_max},
              {"lfp_age", s.lfp_age},
              {"lfp_health", s.lfp_health},
              {"fixed_effects", s.fixed_effects},
              {"neg_assets", s.neg_assets},
              {"asset_change", s.asset_change},
              {"asset_tertiles", s.asset_tertiles},
              {"tertile_bin", s.tertile_bin},
              {"initial_conditions", s.initial_conditions},
              {"long_run_gaps", s.long_run_gaps}};
}

AuxSpec aux_spec_from_json(const json& j) {
  AuxSpec s;
  s.age_min = j.value("age_min", s.age_min);
  s.age_max = j.value("age_max", s.age_max);
  s.lfp_age = j.value("lfp_age", s.lfp_age);
  s.lfp_health = j.value("lfp_health", s.lfp_health);
  s.fixed_effects = j.value("fixed_effects", s.fixed_effects);
  s.neg_assets = j.value("neg_assets", s.neg_assets);
  s.asset_change = j.value("asset_change", s.asset_change);
  s.asset_tertiles = j.value("asset_tertiles", s.asset_tertiles);
  s.tertile_bin = j.value("tertile_bin", s.tertile_bin);
  s.initial_conditions = j.value("initial_conditions", s.initial_conditions);
  s.long_run_gaps = j.value("long_run_gaps", s.long_run_gaps);
  return s;
}

AuxOutcomes observed_outcomes(const std::vector<PanelRow>& rows) {
  AuxOutcomes o;
  for (const auto& w : rows) {
    o.work.push_back(w.d);
    o.anext.push_back(w.assets_next);
    o.anext_draw.push_back(w.assets_next);
  }
  return o;
}

AuxOutcomes predicted_outcomes(const std::vector<Prediction>& pred) {
  AuxOutcomes o;
  for (const auto& p : pred) {
    o.work.push_back(p.p_work);
    o.anext.push_back(p.assets_next);
    o.anext_draw.push_back(p.assets_next_draw);
  }
  return o;
}

namespace {

struct Acc {
  AuxResult r;
  void add(const std::string& name, double theta, double var, bool drawn) {
    r.names.push_back(name);
    th.push_back(theta);
    va.push_back(var);
    r.from_draws.push_back(drawn);
  }
  std::vector<double> th, va;
  AuxResult done() {
    r.theta = Eigen::Map<Eigen::VectorXd>(th.data(), Eigen::Index(th.size()));
    r.var = Eigen::Map<Eigen::VectorXd>(va.data(), Eigen::Index(va.size()));
    return r;
  }
};

void mean_and_var(const std::vector<double>& v, double& mean, double& var_of_mean) {
  const double n = double(v.size());
  mean = 0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  var_of_mean = ss / (n * n);
}

// Sampling variance of a quantile with a difference-quotient sparsity estimate.
double quantile_var(const std::vector<double>& v, double q) {
  const double n = double(v.size());
  const double h = std::min({std::pow(n, -1.0 / 3.0), q * 0.999, (1 - q) * 0.999});
  const double s = (nearest_rank(v, q + h) - nearest_rank(v, q - h)) / (2 * h);
  return q * (1 - q) / n * s * s;
}

std::string occ_tag(int j) { return std::string("occ") + std::to_string(j); }

}  // namespace

AuxResult estimate_auxiliary(const std::vector<PanelRow>& rows, const AuxOutcomes& y, const AuxSpec& spec) {
  if (y.work.size() != rows.size() || y.anext.size() != rows.size() || y.anext_draw.size() != rows.size())
    throw std::invalid_argument("estimate_auxiliary: outcome length differs from the panel");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].age >= spec.age_min && rows[i].age <= spec.age_max) idx.push_back(i);
  if (idx.empty()) throw std::invalid_argument("estimate_auxiliary: no rows in the age window");
  Acc acc;

  if (spec.lfp_age) {  // (a)
    for (int j = 0; j < kOcc; ++j)
      for (int a = spec.age_min; a <= spec.age_max; ++a) {
        std::vector<double> v;
        for (auto i : idx)
          if (rows[i].occupation == j && rows[i].age == a) v.push_back(y.work[i]);
        const std::string name = "a." + occ_tag(j) + ".age" + std::to_string(a);
        if (v.empty()) throw RankError("auxiliary (a): no observations for " + name, {name});
        double m, var;
        mean_and_var(v, m, var);
        acc.add(name, m, var, false);
      }
  }

  if (spec.lfp_health) {  // (b)
    std::vector<std::string> cols = {"poor_physical", "poor_cognitive", "age", "log_assets"};
    if (spec.neg_assets) cols.push_back("neg_assets");
    if (!spec.fixed_effects) cols.push_back("const");
    for (int j = 0; j < kOcc; ++j) {
      std::vector<std::size_t> sub;
      for (auto i : idx)
        if (rows[i].occupation == j && rows[i].worked_last == 1) sub.push_back(i);
      Eigen::MatrixXd X(Eigen::Index(sub.size()), Eigen::Index(cols.size()));
      Eigen::VectorXd Y(Eigen::Index(sub.size()));
      std::vector<std::int64_t> ids;
      for (std::size_t r = 0; r < sub.size(); ++r) {
        const PanelRow& w = rows[sub[r]];
        int c = 0;
        X(r, c++) = w.health_p;
        X(r, c++) = w.health_c;
        X(r, c++) = w.age;
        X(r, c++) = std::log(std::max(w.assets, 1.0));
        if (spec.neg_assets) X(r, c++) = w.assets < 0 ? 1.0 : 0.0;
        if (!spec.fixed_effects) X(r, c++) = 1.0;
        Y(r) = y.work[sub[r]];
        ids.push_back(w.id);
      }
      if (spec.fixed_effects) demean_by_group(X, Y, ids);
      std::vector<std::string> names;
      for (const auto& c : cols) names.push_back("b." + occ_tag(j) + "." + c);
      const OlsResult o = ols(X, Y, names);
      for (std::size_t k = 0; k < cols.size(); ++k) acc.add(names[k], o.beta(k), o.var(k), false);
    }
  }

  if (spec.asset_change) {  // (c)
    for (int a = spec.age_min; a <= spec.age_max; ++a) {
      std::vector<double> v;
      for (auto i : idx)
        if (rows[i].age == a) v.push_back(y.anext[i] - rows[i].assets);
      const std::string name = "c.age" + std::to_string(a);
      if (v.empty()) throw RankError("auxiliary (c): no observations for " + name, {name});
      double m, var;
      mean_and_var(v, m, var);
      acc.add(name, m, var, false);
    }
  }

  if (spec.asset_tertiles) {  // (d)
    for (int b0 = spec.age_min; b0 <= spec.age_max; b0 += spec.tertile_bin) {
      const int b1 = std::min(spec.age_max, b0 + spec.tertile_bin - 1);
      std::vector<double> v;
      for (auto i : idx)
        if (rows[i].age >= b0 && rows[i].age <= b1) v.push_back(y.anext_draw[i]);
      const std::string tag = "d.ages" + std::to_string(b0) + "_" + std::to_string(b1);
      if (v.empty()) throw RankError("auxiliary (d): no observations for " + tag, {tag});
      std::sort(v.begin(), v.end());
      acc.add(tag + ".t1", nearest_rank(v, 1.0 / 3.0), quantile_var(v, 1.0 / 3.0), true);
      acc.add(tag + ".t2", nearest_rank(v, 2.0 / 3.0), quantile_var(v, 2.0 / 3.0), true);
    }
  }

  if (spec.initial_conditions || spec.long_run_gaps) {
    std::unordered_map<std::int64_t, std::size_t> first;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto it = first.find(rows[i].id);
      if (it == first.end() || rows[i].age < rows[it->second].age) first[rows[i].id] = i;
    }
    if (spec.initial_conditions) {  // (e)
      const std::vector<std::string> cols = {"const", "init_poor_physical", "init_poor_cognitive", "init_edu1",
                                             "init_edu2", "init_edu3", "init_log_assets"};
      std::vector<std::size_t> sub;
      for (auto i : idx)
        if (rows[i].age >= 60) sub.push_back(i);
      Eigen::MatrixXd X(Eigen::Index(sub.size()), Eigen::Index(cols.size()));
      Eigen::VectorXd Y(Eigen::Index(sub.size()));
      for (std::size_t r = 0; r < sub.size(); ++r) {
        const PanelRow& f = rows[first[rows[sub[r]].id]];
        X.row(r) << 1.0, f.health_p, f.health_c, f.education == 1, f.education == 2, f.education == 3,
            std::log(std::max(f.assets, 1.0));
        Y(r) = y.work[sub[r]];
      }
      std::vector<std::string> names;
      for (const auto& c : cols) names.push_back("e." + c);
      const OlsResult o = ols(X, Y, names);
      for (std::size_t k = 0; k < cols.size(); ++k) acc.add(names[k], o.beta(k), o.var(k), false);
    }
    if (spec.long_run_gaps) {  // (f)
      std::vector<double> init_assets;
      for (const auto& [id, i] : first) init_assets.push_back(rows[i].assets);
      const double med = nearest_rank(init_assets, 0.5);
      auto gap = [&](const std::string& name, auto&& top) {
        std::vector<double> g1, g0;
        for (auto i : idx) {
          if (rows[i].age < 62 || rows[i].age > 70) continue;
          (top(rows[first[rows[i].id]]) ? g1 : g0).push_back(y.work[i]);
        }
        if (g1.empty() || g0.empty()) throw RankError("auxiliary (f): empty comparison group for " + name, {name});
        double m1, v1, m0, v0;
        mean_and_var(g1, m1, v1);
        mean_and_var(g0, m0, v0);
        acc.add(name, m1 - m0, v1 + v0, false);
      };
      gap("f.gap_good_physical", [](const PanelRow& f) { return f.health_p == 0; });
      gap("f.gap_good_cognitive", [](const PanelRow& f) { return f.health_c == 0; });
      gap("f.gap_high_assets", [&](const PanelRow& f) { return f.assets > med; });
    }
  }
  return acc.done();
}

Targets targets_from(const AuxResult& a) { return Targets{a.names, a.theta, a.var}; }

json to_json(const Targets& t) {
  json arr = json::array();
  for (std::size_t k = 0; k < t.names.size(); ++k)
    arr.push_back(json{{"name", t.names[k]}, {"theta", t.theta(k)}, {"var", t.var(k)}});
  return json{{"schema_version", kSchemaVersion}, {"targets", arr}};
}

Targets targets_from_json(const json& j) {
  if (j.value("schema_version", 0) != kSchemaVersion) throw std::runtime_error("targets: unsupported schema_version");
  Targets t;
  const auto& arr = j.at("targets");
  t.theta.resize(Eigen::Index(arr.size()));
  t.var.resize(Eigen::Index(arr.size()));
  for (std::size_t k = 0; k < arr.size(); ++k) {
    t.names.push_back(arr[k].at("name"));
    t.theta(k) = arr[k].at("theta");
    t.var(k) = arr[k].at("var");
  }
  return t;
}

void write_targets_csv(const std::string& path, const Targets& t) {
  std::ofstream o(path);
  if (!o) throw std::runtime_error("cannot write " + path);
  o << "# schema_version=" << kSchemaVersion << "\nname,theta,var\n";
  char buf[128];
  for (std::size_t k = 0; k < t.names.size(); ++k) {
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", t.theta(k), t.var(k));
    o << t.names[k] << buf;
  }
}

Targets read_targets_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("targets not found: " + path);
  std::string line;
  bool header = false;
  std::vector<std::string> names;
  std::vector<double> th, va;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line.rfind("name,theta,var", 0) != 0) throw std::runtime_error(path + ": expected header name,theta,var");
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string n, a, b;
    if (!std::getline(ss, n, ',') || !std::getline(ss, a, ',') || !std::getline(ss, b, ','))
      throw std::runtime_error(path + ": malformed row '" + line + "'");
    names.push_back(n);
    th.push_back(std::stod(a));
    va.push_back(std::stod(b));
  }
  Targets t;
  t.names = names;
  t.theta = Eigen::Map<Eigen::VectorXd>(th.data(), Eigen::Index(th.size()));
  t.var = Eigen::Map<Eigen::VectorXd>(va.data(), Eigen::Index(va.size()));
  return t;
}

}  // namespace retire
