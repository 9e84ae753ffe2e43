// retire: solve, simulate, estimate and run counterfactuals from the shell.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "retire/estimation.hpp"
#include "retire/experiments.hpp"
#include "retire/rng.hpp"
#include "retire/tables_io.hpp"

#ifndef RETIRE_DATA_DIR
#define RETIRE_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace retire;

namespace {

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string env_or(const char* var, const std::string& fallback) {
  const char* v = std::getenv(var);
  return v && *v ? std::string(v) : fallback;
}

std::string data_dir() { return env_or("RETIRE_DATA_DIR", RETIRE_DATA_DIR); }

// flag > environment > shipped default
std::string resolve(const std::string& flag, const char* var, const std::string& file) {
  if (!flag.empty()) return flag;
  return env_or(var, (fs::path(data_dir()) / file).string());
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw ValidationError(what + " not found: " + path);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string file_hash(const std::string& path) { return hex64(fnv1a(slurp(path))); }

json load_json(const std::string& path, const std::string& what) {
  require_file(path, what);
  try {
    return read_json_file(path);
  } catch (const std::exception& e) {
    throw ValidationError(e.what());
  }
}

// Shared model inputs.
struct ModelInputs {
  std::string params_path, rules_path, life_path;
  int fra = 0;
  std::string grid_preset = "desk";
  std::string grid_path;

  void add(CLI::App* c, bool with_grid = true) {
    c->add_option("--params", params_path, "parameter JSON (env RETIRE_PARAMS)");
    c->add_option("--rules", rules_path, "policy rules JSON (env RETIRE_RULES)");
    c->add_option("--life-table", life_path, "life table CSV (env RETIRE_LIFE_TABLE)");
    c->add_option("--fra", fra, "use the shipped FRA 66 or FRA 70 rules")->check(CLI::IsMember({66, 70}));
    if (with_grid) {
      c->add_option("--grid-preset", grid_preset, "desk, full or test")->check(CLI::IsMember({"desk", "full", "test"}));
      c->add_option("--grid", grid_path, "grid JSON (overrides --grid-preset)");
    }
  }
};

struct Loaded {
  ModelParams params;
  PolicyRules rules;
  GridSpec grid;
  json inputs;  // path + content hash per input file
};

Loaded load_inputs(ModelInputs m) {
  if (m.fra && !m.rules_path.empty()) throw ValidationError("--fra and --rules both given");
  m.params_path = resolve(m.params_path, "RETIRE_PARAMS", "params_baseline.json");
  m.life_path = resolve(m.life_path, "RETIRE_LIFE_TABLE", "life_table.csv");
  if (m.fra == 70)
    m.rules_path = (fs::path(data_dir()) / "rules_fra70.json").string();
  else if (m.fra == 66)
    m.rules_path = (fs::path(data_dir()) / "rules_fra66.json").string();
  else
    m.rules_path = resolve(m.rules_path, "RETIRE_RULES", "rules_fra66.json");

  // every file is checked before anything is computed
  require_file(m.params_path, "parameter file");
  require_file(m.rules_path, "rules file");
  require_file(m.life_path, "life table");
  if (!m.grid_path.empty()) require_file(m.grid_path, "grid file");

  Loaded out;
  try {
    out.params = params_from_json(read_json_file(m.params_path));
    out.rules = rules_from_json(read_json_file(m.rules_path));
    out.params.mortality.q =
        read_life_table(m.life_path, out.params.mortality.first_age, out.params.mortality.terminal_age);
    out.grid = m.grid_path.empty() ? grid_preset(m.grid_preset, out.rules) : grid_from_json(read_json_file(m.grid_path));
    out.params.validate(out.rules);
    out.grid.validate(out.rules);
  } catch (const std::exception& e) {
    throw ValidationError(e.what());
  }
  for (auto [k, v] : {std::pair{"params", m.params_path}, {"rules", m.rules_path}, {"life_table", m.life_path}})
    out.inputs[k] = json{{"path", v}, {"hash", file_hash(v)}};
  if (!m.grid_path.empty()) out.inputs["grid"] = json{{"path", m.grid_path}, {"hash", file_hash(m.grid_path)}};
  return out;
}

struct PopulationInputs {
  std::string path;
  int n = 0;
  void add(CLI::App* c) {
    c->add_option("--population", path, "initial-population JSON (env RETIRE_POPULATION)");
    c->add_option("--n", n, "number of individuals (overrides the file)")->check(CLI::PositiveNumber);
  }
};

InitialPopulationSpec load_population(const PopulationInputs& in, const PolicyRules& r, json& inputs) {
  const std::string path = resolve(in.path, "RETIRE_POPULATION", "population_baseline.json");
  InitialPopulationSpec spec;
  try {
    spec = population_from_json(load_json(path, "population file"));
    if (in.n > 0) spec.n = in.n;
    spec.validate(r.asset_floor);
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  inputs["population"] = json{{"path", path}, {"hash", file_hash(path)}, {"n", spec.n}};
  return spec;
}

void ensure_dir(const std::string& d) {
  std::error_code ec;
  fs::create_directories(d, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + d + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& s) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw std::runtime_error("cannot write " + path);
  o << s;
}

json manifest(const std::string& command, const Loaded& in, std::uint64_t seed) {
  return json{{"schema_version", kSchemaVersion},
              {"command", command},
              {"inputs", in.inputs},
              {"grid", to_json(in.grid)},
              {"params_hash", params_hash(in.params, in.rules, in.grid)},
              {"seed", seed}};
}

void finish_manifest(json& m, const std::string& dir, const std::vector<std::string>& files) {
  json out;
  for (const auto& f : files) out[f] = file_hash((fs::path(dir) / f).string());
  m["outputs"] = out;
  write_json_file((fs::path(dir) / "manifest.json").string(), m);
}

DecisionTables load_checked_tables(const std::string& path, const Loaded& in, bool force) {
  require_file(path, "decision tables");
  DecisionTables t = load_tables(path);
  const std::string want = params_hash(in.params, in.rules, t.grid);
  if (t.params_hash != want && !force)
    throw ValidationError("stale tables " + path + ": solved with params hash " + t.params_hash +
                          " but the current inputs hash to " + want + " (use --force to override)");
  return t;
}

// ---------------------------------------------------------------- solve

int cmd_solve(const ModelInputs& mi, const std::string& out, int threads, bool dry_run) {
  Loaded in = load_inputs(mi);
  if (dry_run) {
    const long long n = state_point_count(in.grid, in.rules, in.params.types.n_types);
    std::cout << json{{"grid", in.grid.name}, {"state_points", n}}.dump() << "\n";
    return 0;
  }
  ensure_dir(out);
  SolveOptions so;
  so.threads = threads;
  const DecisionTables t = solve(in.params, in.rules, in.grid, so);
  save_tables((fs::path(out) / "tables.bin").string(), t);
  json m = manifest("solve", in, 0);
  m["state_points"] = state_point_count(in.grid, in.rules, in.params.types.n_types);
  finish_manifest(m, out, {"tables.bin"});
  std::cout << json{{"tables", (fs::path(out) / "tables.bin").string()}, {"params_hash", t.params_hash}}.dump() << "\n";
  return 0;
}

// ------------------------------------------------------------- simulate

void write_profiles(const std::string& path, const std::vector<PanelRow>& rows, int age_min, int age_max) {
  std::string s = "# schema_version=1\nby,group,age,count,lfp,asset_t1,asset_t2,asset_change\n";
  char buf[256];
  for (auto [by, tag] : {std::pair{ProfileBy::Occupation, "occupation"}, {ProfileBy::Education, "education"}})
    for (const auto& c : aggregate_profiles(rows, by, age_min, age_max)) {
      std::snprintf(buf, sizeof buf, "%s,%d,%d,%lld,%.17g,%.17g,%.17g,%.17g\n", tag, c.group, c.age,
                    static_cast<long long>(c.count), c.lfp, c.asset_t1, c.asset_t2, c.asset_change);
      s += buf;
    }
  write_text(path, s);
}

int cmd_simulate(const ModelInputs& mi, const PopulationInputs& pi, const std::string& tables, const std::string& out,
                 std::uint64_t seed, int threads, bool no_mortality, int last_age, bool force) {
  Loaded in = load_inputs(mi);
  const InitialPopulationSpec spec = load_population(pi, in.rules, in.inputs);
  require_file(tables, "decision tables");
  const DecisionTables t = load_checked_tables(tables, in, force);
  in.grid = t.grid;
  in.inputs["tables"] = json{{"path", tables}, {"hash", file_hash(tables)}};
  ensure_dir(out);

  const auto pop = generate_population(spec, derive_seed(seed, "population"));
  SimOptions so;
  so.with_mortality = !no_mortality;
  so.threads = threads;
  so.last_age = last_age;
  const Panel panel = simulate_lifecycle(pop, t, in.params, in.rules, derive_seed(seed, "simulate"), so);
  write_panel_csv((fs::path(out) / "panel.csv").string(), panel.rows);
  write_profiles((fs::path(out) / "profiles.csv").string(), panel.rows, t.grid.first_age, t.grid.last_labor_age);

  json m = manifest("simulate", in, seed);
  m["with_mortality"] = so.with_mortality;
  m["last_age"] = last_age;
  m["diagnostics"] = json{{"rows", panel.diag.rows},
                          {"asset_clamps", panel.diag.asset_clamps},
                          {"aime_clamps", panel.diag.aime_clamps},
                          {"floor_clamps", panel.diag.floor_clamps}};
  finish_manifest(m, out, {"panel.csv", "profiles.csv"});
  std::cout << json{{"rows", panel.rows.size()}, {"panel", (fs::path(out) / "panel.csv").string()}}.dump() << "\n";
  return 0;
}

// -------------------------------------------------------------- targets

AuxSpec load_aux(const std::string& path) {
  if (path.empty()) return {};
  try {
    return aux_spec_from_json(load_json(path, "auxiliary-model file"));
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::vector<PanelRow> load_panel(const std::string& path) {
  require_file(path, "panel");
  try {
    return read_panel_csv(path);
  } catch (const std::exception& e) {
    throw ValidationError(e.what());
  }
}

int cmd_targets(const std::string& panel, const std::string& aux, const std::string& out) {
  const AuxSpec spec = load_aux(aux);
  const auto rows = load_panel(panel);
  const Targets t = targets_from(estimate_auxiliary(rows, observed_outcomes(rows), spec));
  json j = to_json(t);
  j["aux"] = to_json(spec);
  j["panel"] = json{{"path", panel}, {"hash", file_hash(panel)}};
  write_json_file(out, j);
  std::cout << json{{"targets", t.names.size()}, {"file", out}}.dump() << "\n";
  return 0;
}

// ------------------------------------------------------------- estimate

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

int cmd_estimate(const ModelInputs& mi, const std::string& targets_path, const std::string& panel,
                 const std::string& aux, const std::string& names_csv, const std::vector<double>& start_in,
                 const std::string& out, std::uint64_t seed, int threads, int max_evals, int restarts, bool no_se,
                 const std::string& weighting) {
  Loaded in = load_inputs(mi);
  require_file(targets_path, "targets file");
  Targets data;
  AuxSpec spec = load_aux(aux);
  try {
    if (fs::path(targets_path).extension() == ".csv") {
      data = read_targets_csv(targets_path);
    } else {
      const json j = read_json_file(targets_path);
      data = targets_from_json(j);
      if (aux.empty() && j.contains("aux")) spec = aux_spec_from_json(j.at("aux"));
    }
  } catch (const std::exception& e) {
    throw ValidationError(targets_path + ": " + e.what());
  }
  SimConfig cfg;
  cfg.base = in.params;
  cfg.rules = in.rules;
  cfg.grid = in.grid;
  cfg.rows = load_panel(panel);
  cfg.aux = spec;
  cfg.seed = derive_seed(seed, "estimate");
  cfg.threads = threads;

  const auto names = split(names_csv, ',');
  Eigen::VectorXd x0(Eigen::Index(names.size()));
  try {
    for (std::size_t k = 0; k < names.size(); ++k) x0(k) = get_param(in.params, names[k]);
  } catch (const std::exception& e) {
    throw ValidationError(e.what());
  }
  if (!start_in.empty()) {
    if (start_in.size() != names.size()) throw ValidationError("--start needs one value per estimated parameter");
    for (std::size_t k = 0; k < names.size(); ++k) x0(k) = start_in[k];
  }
  AuxSimulator sim(cfg, names);
  ObjectiveSpec os;
  os.rule = weighting == "variance" ? WeightRule::Variance : WeightRule::InverseVariance;
  Objective obj(sim, data, os);
  SearchOptions so;
  so.max_evals = max_evals;
  so.restarts = restarts;
  const EstimationResult r = estimate(obj, x0, so, !no_se);

  ensure_dir(out);
  json j = to_json(r);
  j["solves"] = sim.solves();
  write_json_file((fs::path(out) / "estimate.json").string(), j);
  write_text((fs::path(out) / "report.txt").string(), format_report(r));
  in.inputs["targets"] = json{{"path", targets_path}, {"hash", file_hash(targets_path)}};
  in.inputs["panel"] = json{{"path", panel}, {"hash", file_hash(panel)}};
  json m = manifest("estimate", in, seed);
  m["estimated"] = names;
  finish_manifest(m, out, {"estimate.json", "report.txt"});
  std::cout << format_report(r);
  return 0;
}

// ----------------------------------------------------------- experiment

json shares_json(const std::vector<ResponseShares>& v) {
  json a = json::array();
  for (const auto& s : v) {
    json e{{"age", s.age}, {"n", s.n}, {"disagreement", s.disagreement}};
    double sum = 0;
    for (int t = 0; t < 4; ++t) {
      e[to_string(ResponseType(t))] = s.share[t];
      sum += s.share[t];
    }
    e["sum"] = sum;
    a.push_back(e);
  }
  return a;
}

json occ_json(const std::array<double, 4>& v) {
  json j;
  for (int k = 0; k < kOcc; ++k) j[to_string(Occupation(k))] = v[k];
  j["All"] = v[3];
  return j;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

int cmd_experiment(const ModelInputs& mi, const PopulationInputs& pi, const std::string& manifest_path,
                   std::vector<std::string> mute, int cli_fra, const std::string& swap, const std::string& out,
                   std::uint64_t seed, int threads, bool with_mortality, bool cv, bool write_panels) {
  ModelInputs base_mi = mi;
  base_mi.fra = 0;
  Loaded in = load_inputs(base_mi);
  const InitialPopulationSpec spec = load_population(pi, in.rules, in.inputs);

  std::vector<Branch> branches;
  try {
    if (!manifest_path.empty()) {
      const json j = load_json(manifest_path, "experiment manifest");
      for (const auto& b : j.at("branches")) branches.push_back(branch_from_json(b));
      in.inputs["manifest"] = json{{"path", manifest_path}, {"hash", file_hash(manifest_path)}};
    } else {
      json b{{"name", "cli"}};
      if (!mute.empty()) b["mute"] = mute;
      if (cli_fra) b["fra"] = cli_fra;
      if (!swap.empty()) {
        const auto parts = split(swap, ':');
        if (parts.size() < 2 || parts.size() > 3)
          throw ValidationError("--swap-requirements expects <from>:<to>[:physical|cognitive|both]");
        b["swap"] = json{{"from", parts[0]}, {"to", parts[1]}, {"dims", parts.size() == 3 ? parts[2] : "physical"}};
      }
      branches.push_back(branch_from_json(b));
    }
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    throw ValidationError(e.what());
  }
  ensure_dir(out);

  SolveOptions sopt;
  sopt.threads = threads;
  const DecisionTables base_t = solve(in.params, in.rules, in.grid, sopt);
  const auto pop = generate_population(spec, derive_seed(seed, "population"));
  SimOptions so;
  so.with_mortality = with_mortality;
  so.threads = threads;
  const std::uint64_t sim_seed = derive_seed(seed, "simulate");
  const int a0 = in.grid.first_age, a1 = in.grid.last_labor_age;
  const int pdv_age = 56;

  json summary{{"schema_version", kSchemaVersion}, {"seed", seed}, {"n", spec.n}, {"with_mortality", with_mortality}};
  std::string lfp_csv = "# schema_version=1\nbranch,scenario,occupation,age,lfp\n";
  std::string rt_csv = "# schema_version=1\nbranch,age,always_taker,never_taker,complier,defier\n";
  char buf[256];
  json jb = json::array();
  std::vector<std::string> files;
  for (const Branch& b : branches) {
    ModelParams q = apply_mask(in.params, b.mask);
    if (b.swap) q = apply_swap(q, *b.swap);
    const PolicyRules rr = b.rules ? *b.rules : in.rules;
    const PairedPanels pp = run_counterfactual(b, in.params, in.rules, in.grid, pop, sim_seed, so, &base_t);
    const auto& B = pp.base.rows;
    const auto& C = pp.cf.rows;

    json e{{"name", b.name}, {"mute", mask_names(b.mask)}, {"rules", rr.name}};
    if (b.swap)
      e["swap"] = json{{"from", to_string(b.swap->source)}, {"to", to_string(b.swap->target)},
                       {"dims", b.swap->dims == SwapDim::Physical    ? "physical"
                                : b.swap->dims == SwapDim::Cognitive ? "cognitive"
                                                                     : "both"}};
    e["retirement_age"] = json{{"base", occ_json(retirement_ages(B))}, {"counterfactual", occ_json(retirement_ages(C))}};
    json share;
    for (int k = -1; k < kOcc; ++k)
      share[k < 0 ? "All" : to_string(Occupation(k))] = opt_json(employment_decline_share(B, C, 51, 70, k));
    e["employment_decline_share"] = share;
    e["pdv_age"] = pdv_age;
    e["pdv"] = json{{"base", occ_json(mean_pdv(B, pdv_age, in.params.prefs))},
                    {"counterfactual", occ_json(mean_pdv(C, pdv_age, q.prefs))}};
    const auto rs = response_shares(B, C, a0, a1);
    e["response_shares"] = shares_json(rs);
    for (const auto& s : rs) {
      std::snprintf(buf, sizeof buf, "%s,%d,%.17g,%.17g,%.17g,%.17g\n", b.name.c_str(), s.age, s.share[0], s.share[1],
                    s.share[2], s.share[3]);
      rt_csv += buf;
    }
    for (int k = -1; k < kOcc; ++k)
      for (auto [tag, rows] : {std::pair{"base", &B}, {"counterfactual", &C}}) {
        const auto prof = lfp_profile(*rows, a0, a1, k);
        for (int a = a0; a <= a1; ++a) {
          std::snprintf(buf, sizeof buf, "%s,%s,%s,%d,%.17g\n", b.name.c_str(), tag,
                        k < 0 ? "All" : to_string(Occupation(k)), a, prof[a - a0]);
          lfp_csv += buf;
        }
      }
    if (cv) {
      const DecisionTables cf_t = solve(q, rr, in.grid, sopt);
      const CvSummary s = compensating_variation_panel(B, pdv_age, base_t, in.params, cf_t, q, in.rules, rr);
      e["compensating_variation"] = json{{"age", pdv_age}, {"mean_tau", occ_json(s.mean_tau)},
                                         {"unbracketed", s.unbracketed}};
    }
    if (write_panels) {
      const std::string f = "panel_" + b.name + ".csv";
      write_panel_csv((fs::path(out) / f).string(), C);
      files.push_back(f);
    }
    jb.push_back(e);
  }
  if (write_panels) {
    write_panel_csv((fs::path(out) / "panel_base.csv").string(),
                    simulate_lifecycle(pop, base_t, in.params, in.rules, sim_seed, so).rows);
    files.push_back("panel_base.csv");
  }
  summary["branches"] = jb;
  write_json_file((fs::path(out) / "summary.json").string(), summary);
  write_text((fs::path(out) / "lfp_profiles.csv").string(), lfp_csv);
  write_text((fs::path(out) / "response_shares.csv").string(), rt_csv);
  files.insert(files.begin(), {"summary.json", "lfp_profiles.csv", "response_shares.csv"});
  json m = manifest("experiment", in, seed);
  finish_manifest(m, out, files);
  std::cout << json{{"summary", (fs::path(out) / "summary.json").string()}, {"branches", branches.size()}}.dump() << "\n";
  return 0;
}

// ------------------------------------------------------- export-presets

int cmd_export(const std::string& out) {
  ensure_dir(out);
  const ModelParams p = baseline_estimates();
  json pj = to_json(p);
  pj["mortality"].erase("q");  // the life table ships separately
  write_json_file((fs::path(out) / "params_baseline.json").string(), pj);
  write_json_file((fs::path(out) / "rules_fra66.json").string(), to_json(fra66_baseline()));
  write_json_file((fs::path(out) / "rules_fra70.json").string(), to_json(fra70_reform()));
  write_life_table((fs::path(out) / "life_table.csv").string(), p.mortality.q, p.mortality.first_age);
  write_json_file((fs::path(out) / "population_baseline.json").string(), to_json(calibrated_population(100000)));
  write_json_file((fs::path(out) / "aux_default.json").string(), to_json(AuxSpec{}));
  const json ex{{"schema_version", kSchemaVersion},
                {"branches",
                 {{{"name", "mute_all"}, {"mute", {"all"}}},
                  {{"name", "mute_physical"}, {"mute", {"physical"}}},
                  {{"name", "mute_cognitive"}, {"mute", {"cognitive"}}},
                  {{"name", "fra70"}, {"fra", 70}},
                  {{"name", "manual_prof_physical"},
                   {"swap", {{"from", "professional"}, {"to", "manual"}, {"dims", "physical"}}}}}}};
  write_json_file((fs::path(out) / "experiment_example.json").string(), ex);
  std::cout << json{{"exported", out}}.dump() << "\n";
  return 0;
}

void print_error(int code, const std::string& kind, const std::string& msg) {
  std::cerr << json{{"error", {{"code", code}, {"kind", kind}, {"message", msg}}}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retirement and health: life-cycle solver, simulator, estimator and counterfactuals"};
  app.require_subcommand(1);
  std::uint64_t seed = 20240101;
  int threads = 0;
  app.add_option("--seed", seed, "master seed; every subsystem seed is derived from it");
  app.add_option("--threads", threads, "cap on worker threads (0 = all)")->check(CLI::NonNegativeNumber);

  // solve
  auto* s_solve = app.add_subcommand("solve", "solve the decision tables");
  ModelInputs solve_in;
  solve_in.add(s_solve);
  std::string solve_out = "out/solve";
  bool dry_run = false;
  s_solve->add_option("--out", solve_out, "output directory");
  s_solve->add_flag("--dry-run", dry_run, "print the state-point count and exit");

  // simulate
  auto* s_sim = app.add_subcommand("simulate", "simulate a panel from solved tables");
  ModelInputs sim_in;
  sim_in.add(s_sim, false);
  PopulationInputs sim_pop;
  sim_pop.add(s_sim);
  std::string sim_tables = "out/solve/tables.bin", sim_out = "out/simulate";
  bool no_mortality = false, force = false;
  int last_age = -1;
  s_sim->add_option("--tables", sim_tables, "tables from `solve`");
  s_sim->add_option("--out", sim_out, "output directory");
  s_sim->add_flag("--no-mortality", no_mortality, "keep everyone alive to the terminal age");
  s_sim->add_option("--last-age", last_age, "stop after this age");
  s_sim->add_flag("--force", force, "accept tables solved under different inputs");

  // targets
  auto* s_tg = app.add_subcommand("targets", "auxiliary-model estimates from an observed panel");
  std::string tg_panel, tg_aux, tg_out = "out/targets.json";
  s_tg->add_option("--panel", tg_panel, "panel CSV")->required();
  s_tg->add_option("--aux", tg_aux, "auxiliary-model JSON");
  s_tg->add_option("--out", tg_out, "output JSON");

  // estimate
  auto* s_est = app.add_subcommand("estimate", "indirect-inference estimation");
  ModelInputs est_in;
  est_in.add(s_est);
  std::string est_targets, est_panel, est_aux, est_out = "out/estimate", weighting = "inverse-variance";
  std::string est_names = "lambda2[0],lambda2[1],lambda2[2],lambda3[0],lambda3[1],lambda3[2]";
  std::vector<double> est_start;
  int max_evals = 400, restarts = 2;
  bool no_se = false;
  s_est->add_option("--targets", est_targets, "targets JSON or CSV")->required();
  s_est->add_option("--panel", est_panel, "conditioning panel CSV")->required();
  s_est->add_option("--aux", est_aux, "auxiliary-model JSON (default: taken from the targets file)");
  s_est->add_option("--estimate", est_names, "comma-separated parameter names");
  s_est->add_option("--start", est_start, "start values (default: the parameter file)");
  s_est->add_option("--max-evals", max_evals, "objective evaluation budget");
  s_est->add_option("--restarts", restarts, "simplex restarts");
  s_est->add_option("--weighting", weighting, "inverse-variance or variance")
      ->check(CLI::IsMember({"inverse-variance", "variance"}));
  s_est->add_flag("--no-se", no_se, "skip the sandwich standard errors");
  s_est->add_option("--out", est_out, "output directory");

  // experiment
  auto* s_exp = app.add_subcommand("experiment", "counterfactual branches against the baseline");
  ModelInputs exp_in;
  exp_in.add(s_exp);
  PopulationInputs exp_pop;
  exp_pop.add(s_exp);
  std::string exp_manifest, swap, exp_out = "out/experiment";
  std::vector<std::string> mute;
  bool with_mortality = false, cv = false, write_panels = false;
  s_exp->add_option("--manifest", exp_manifest, "experiment manifest JSON");
  s_exp->add_option("--mute", mute, "channels to shut down: physical, cognitive, all, or <channel>[_<dimension>]");
  s_exp->add_option("--swap-requirements", swap, "<from>:<to>[:physical|cognitive|both]");
  s_exp->add_flag("--with-mortality", with_mortality, "simulate with attrition (default: none)");
  s_exp->add_flag("--cv", cv, "compute compensating variation at age 56");
  s_exp->add_flag("--write-panels", write_panels, "write per-branch panel CSVs");
  s_exp->add_option("--out", exp_out, "output directory");

  auto* s_exp_presets = app.add_subcommand("export-presets", "write the shipped parameter and data files");
  std::string preset_out = "data";
  s_exp_presets->add_option("--out", preset_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error(2, "usage", e.what());
    return 2;
  }

  try {
    if (*s_solve) return cmd_solve(solve_in, solve_out, threads, dry_run);
    if (*s_sim)
      return cmd_simulate(sim_in, sim_pop, sim_tables, sim_out, seed, threads, no_mortality, last_age, force);
    if (*s_tg) return cmd_targets(tg_panel, tg_aux, tg_out);
    if (*s_est)
      return cmd_estimate(est_in, est_targets, est_panel, est_aux, est_names, est_start, est_out, seed, threads,
                          max_evals, restarts, no_se, weighting);
    if (*s_exp) {
      if (exp_in.fra && !exp_manifest.empty()) throw ValidationError("--fra cannot be combined with --manifest");
      return cmd_experiment(exp_in, exp_pop, exp_manifest, mute, exp_in.fra, swap, exp_out, seed, threads,
                            with_mortality, cv, write_panels);
    }
    if (*s_exp_presets) return cmd_export(preset_out);
  } catch (const ValidationError& e) {
    print_error(2, "validation", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    print_error(2, "validation", e.what());
    return 2;
  } catch (const RuleViolation& e) {
    print_error(2, "validation", e.what());
    return 2;
  } catch (const std::exception& e) {
    print_error(1, "runtime", e.what());
    return 1;
  }
  return 0;
}
