#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <variant>

#include "retire/simulator.hpp"

namespace retire {

using nlohmann::json;

namespace {

using Field = std::variant<std::int64_t PanelRow::*, int PanelRow::*, double PanelRow::*>;

struct Column {
  const char* name;
  Field f;
  bool required;  // needed to rebuild the conditioning state
};

const std::vector<Column>& columns() {
  static const std::vector<Column> c = {
      {"id", &PanelRow::id, true},
      {"age", &PanelRow::age, true},
      {"type", &PanelRow::type, true},
      {"education", &PanelRow::education, true},
      {"occupation", &PanelRow::occupation, true},
      {"health_p", &PanelRow::health_p, true},
      {"health_c", &PanelRow::health_c, true},
      {"assets", &PanelRow::assets, true},
      {"aime", &PanelRow::aime, true},
      {"insurance", &PanelRow::insurance, true},
      {"worked_last", &PanelRow::worked_last, true},
      {"claimed_prev", &PanelRow::claimed_prev, true},
      {"zeta_node", &PanelRow::zeta_node, false},
      {"zeta", &PanelRow::zeta, false},
      {"ssdi_eligible", &PanelRow::ssdi_eligible, true},
      {"d", &PanelRow::d, true},
      {"consumption", &PanelRow::consumption, false},
      {"wage", &PanelRow::wage, false},
      {"ss", &PanelRow::ss, false},
      {"pension", &PanelRow::pension, false},
      {"spousal", &PanelRow::spousal, false},
      {"ssdi", &PanelRow::ssdi, false},
      {"transfer", &PanelRow::transfer, false},
      {"income", &PanelRow::income, false},
      {"med", &PanelRow::med, false},
      {"assets_next", &PanelRow::assets_next, true},
      {"aime_next", &PanelRow::aime_next, false},
      {"claimed", &PanelRow::claimed, false},
      {"first_claim_year", &PanelRow::first_claim_year, false},
      {"survived", &PanelRow::survived, false},
      {"flow_utility", &PanelRow::flow_utility, false},
      {"p_work", &PanelRow::p_work, false},
  };
  return c;
}

void append_row(std::string& out, const PanelRow& w) {
  char buf[40];
  bool first = true;
  for (const auto& c : columns()) {
    if (!first) out += ',';
    first = false;
    std::visit(
        [&](auto m) {
          using T = std::remove_reference_t<decltype(w.*m)>;
          if constexpr (std::is_same_v<T, double>)
            std::snprintf(buf, sizeof buf, "%.17g", w.*m);
          else
            std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(w.*m));
        },
        c.f);
    out += buf;
  }
  out += '\n';
}

}  // namespace

const std::vector<std::string>& panel_columns() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& c : columns()) v.emplace_back(c.name);
    return v;
  }();
  return names;
}

std::string panel_csv_string(const std::vector<PanelRow>& rows) {
  std::string out = "# schema_version=" + std::to_string(kSchemaVersion) + "\n";
  for (std::size_t i = 0; i < columns().size(); ++i) {
    if (i) out += ',';
    out += columns()[i].name;
  }
  out += '\n';
  for (const auto& w : rows) append_row(out, w);
  return out;
}

void write_panel_csv(const std::string& path, const std::vector<PanelRow>& rows) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw std::runtime_error("cannot write " + path);
  const std::string s = panel_csv_string(rows);
  o.write(s.data(), std::streamsize(s.size()));
}

std::vector<PanelRow> read_panel_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("panel not found: " + path);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      while (!tok.empty() && (tok.back() == '\r' || tok.back() == ' ')) tok.pop_back();
      header.push_back(tok);
    }
    break;
  }
  std::map<std::string, int> pos;
  for (int i = 0; i < int(header.size()); ++i) pos[header[i]] = i;
  std::string missing;
  std::vector<int> idx;
  for (const auto& c : columns()) {
    auto it = pos.find(c.name);
    idx.push_back(it == pos.end() ? -1 : it->second);
    if (it == pos.end() && c.required) missing += (missing.empty() ? "" : ", ") + std::string(c.name);
  }
  if (!missing.empty()) throw std::runtime_error(path + ": missing panel columns: " + missing);

  std::vector<PanelRow> rows;
  std::vector<const char*> cells;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    cells.clear();
    cells.push_back(line.c_str());
    for (char& ch : line)
      if (ch == ',') {
        ch = '\0';
        cells.push_back(&ch + 1);
      }
    if (cells.size() != header.size())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                               " fields");
    PanelRow w;
    for (std::size_t k = 0; k < columns().size(); ++k) {
      if (idx[k] < 0) continue;
      const char* s = cells[idx[k]];
      char* end = nullptr;
      const double v = std::strtod(s, &end);
      if (end == s) throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad number in column " +
                                             columns()[k].name);
      std::visit(
          [&](auto m) {
            using T = std::remove_reference_t<decltype(w.*m)>;
            w.*m = static_cast<T>(v);
          },
          columns()[k].f);
    }
    rows.push_back(w);
  }
  return rows;
}

// ---- population spec JSON ----

namespace {

json dist_json(const ContinuousDist& d) { return json{{"kind", d.kind}, {"a", d.a}, {"b", d.b}, {"lower", d.lower}}; }

ContinuousDist dist_from(const json& j) {
  ContinuousDist d;
  d.kind = j.at("kind");
  d.a = j.value("a", 0.0);
  d.b = j.value("b", 0.0);
  d.lower = j.value("lower", 0.0);
  return d;
}

}  // namespace

json to_json(const InitialPopulationSpec& s) {
  json occ = json::array();
  for (const auto& o : s.by_occ)
    occ.push_back(json{{"education", o.education},
                       {"poor_physical", o.poor_physical},
                       {"poor_cognitive", o.poor_cognitive},
                       {"insurance", o.insurance},
                       {"assets", dist_json(o.assets)},
                       {"aime", dist_json(o.aime)}});
  json ct = json::array();
  for (const auto& c : s.cross_tab)
    ct.push_back(json{{"occupation", c.occupation}, {"education", c.education}, {"health", c.health}, {"prob", c.prob}});
  return json{{"schema_version", kSchemaVersion},
              {"n", s.n},
              {"age_min", s.age_min},
              {"age_max", s.age_max},
              {"age_weights", s.age_weights},
              {"occupation", s.occupation},
              {"by_occupation", occ},
              {"cross_tab", ct},
              {"worked_last", s.worked_last},
              {"work_pref_share", s.work_pref_share},
              {"draw_types", s.draw_types}};
}

InitialPopulationSpec population_from_json(const json& j) {
  if (j.value("schema_version", 0) != kSchemaVersion)
    throw std::runtime_error("population: unsupported schema_version");
  InitialPopulationSpec s;
  s.n = j.at("n");
  s.age_min = j.at("age_min");
  s.age_max = j.at("age_max");
  s.age_weights = j.value("age_weights", std::vector<double>{});
  s.occupation = j.at("occupation").get<OccVec>();
  const auto& occ = j.at("by_occupation");
  if (occ.size() != kOcc) throw std::runtime_error("population: by_occupation needs 3 entries");
  for (int k = 0; k < kOcc; ++k) {
    auto& o = s.by_occ[k];
    o.education = occ[k].at("education").get<std::array<double, kEdu>>();
    o.poor_physical = occ[k].at("poor_physical");
    o.poor_cognitive = occ[k].at("poor_cognitive");
    o.insurance = occ[k].at("insurance").get<std::array<double, 3>>();
    o.assets = dist_from(occ[k].at("assets"));
    o.aime = dist_from(occ[k].at("aime"));
  }
  for (const auto& c : j.value("cross_tab", json::array()))
    s.cross_tab.push_back({c.at("occupation"), c.at("education"), c.at("health"), c.at("prob")});
  s.worked_last = j.value("worked_last", 1.0);
  s.work_pref_share = j.value("work_pref_share", 0.5);
  s.draw_types = j.value("draw_types", false);
  return s;
}

}  // namespace retire
