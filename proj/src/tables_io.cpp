#include "retire/tables_io.hpp"

#include <cstring>
#include <fstream>

namespace retire {

using nlohmann::json;

json to_json(const GridSpec& g) {
  return json{{"schema_version", kSchemaVersion},
              {"name", g.name},
              {"assets", g.assets},
              {"aime", g.aime},
              {"zeta_nodes", g.zeta_nodes},
              {"consumption_nodes", g.consumption_nodes},
              {"consumption_power", g.consumption_power},
              {"warm_window", g.warm_window},
              {"full_search", g.full_search},
              {"first_age", g.first_age},
              {"last_labor_age", g.last_labor_age},
              {"terminal_age", g.terminal_age}};
}

GridSpec grid_from_json(const json& j) {
  GridSpec g;
  g.name = j.value("name", std::string("custom"));
  g.assets = j.at("assets").get<std::vector<double>>();
  g.aime = j.at("aime").get<std::vector<double>>();
  g.zeta_nodes = j.at("zeta_nodes");
  g.consumption_nodes = j.at("consumption_nodes");
  g.consumption_power = j.at("consumption_power");
  g.warm_window = j.at("warm_window");
  g.full_search = j.at("full_search");
  g.first_age = j.at("first_age");
  g.last_labor_age = j.at("last_labor_age");
  g.terminal_age = j.at("terminal_age");
  return g;
}

std::string params_hash(const ModelParams& p, const PolicyRules& r, const GridSpec& g) {
  return hex64(fnv1a(to_json(p).dump() + "|" + to_json(r).dump() + "|" + to_json(g).dump()));
}

std::string retired_params_hash(const ModelParams& p, const PolicyRules& r, const GridSpec& g) {
  ModelParams q = p;
  q.prefs.lambda1 = q.prefs.lambda2 = q.prefs.lambda3 = OccVec{};
  q.prefs.delta_lambda = 0;
  return params_hash(q, r, g);
}

namespace {

constexpr char kMagic[8] = {'R', 'E', 'T', 'D', 'P', 'T', 'B', 'L'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& o, const T& v) {
  o.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <class T>
void get(std::istream& i, T& v) {
  i.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!i) throw std::runtime_error("tables: truncated file");
}
template <class T>
void put_vec(std::ostream& o, const std::vector<T>& v) {
  const std::uint64_t n = v.size();
  put(o, n);
  o.write(reinterpret_cast<const char*>(v.data()), std::streamsize(n * sizeof(T)));
}
template <class T>
void get_vec(std::istream& i, std::vector<T>& v) {
  std::uint64_t n;
  get(i, n);
  v.resize(n);
  i.read(reinterpret_cast<char*>(v.data()), std::streamsize(n * sizeof(T)));
  if (!i) throw std::runtime_error("tables: truncated file");
}

}  // namespace

void save_tables(const std::string& path, const DecisionTables& t) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw std::runtime_error("cannot write " + path);
  o.write(kMagic, 8);
  put(o, kVersion);
  const std::string header = json{{"grid", to_json(t.grid)}, {"params_hash", t.params_hash},
                                  {"retired_hash", t.retired_hash},
                                  {"zeta_nodes", t.zeta.nodes}, {"zeta_weights", t.zeta.weights}}
                                 .dump();
  put_vec(o, std::vector<char>(header.begin(), header.end()));
  const std::uint64_t nages = t.ages.size();
  put(o, nages);
  for (const auto& a : t.ages) {
    const auto& L = a.lay;
    const std::int32_t hdr[8] = {L.age, L.n_types, L.n_ins, L.n_ssdi, L.na, L.nm, L.nz, L.work_allowed ? 1 : 0};
    o.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
    put_vec(o, a.v0);
    put_vec(o, a.v1);
    put_vec(o, a.c0);
    put_vec(o, a.c1);
    put_vec(o, a.p);
    put_vec(o, a.k0);
    put_vec(o, a.k1);
  }
}

DecisionTables load_tables(const std::string& path) {
  std::ifstream i(path, std::ios::binary);
  if (!i) throw std::runtime_error("tables not found: " + path);
  char magic[8];
  i.read(magic, 8);
  if (!i || std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error(path + ": not a decision-table file");
  std::uint32_t ver;
  get(i, ver);
  if (ver != kVersion) throw std::runtime_error(path + ": unsupported table version " + std::to_string(ver));
  std::vector<char> hb;
  get_vec(i, hb);
  const json h = json::parse(std::string(hb.begin(), hb.end()));
  DecisionTables t;
  t.grid = grid_from_json(h.at("grid"));
  t.params_hash = h.at("params_hash");
  t.retired_hash = h.value("retired_hash", std::string());
  t.zeta.nodes = h.at("zeta_nodes").get<std::vector<double>>();
  t.zeta.weights = h.at("zeta_weights").get<std::vector<double>>();
  std::uint64_t nages;
  get(i, nages);
  t.ages.resize(nages);
  for (auto& a : t.ages) {
    std::int32_t hdr[8];
    i.read(reinterpret_cast<char*>(hdr), sizeof hdr);
    if (!i) throw std::runtime_error(path + ": truncated file");
    a.lay.age = hdr[0];
    a.lay.n_types = hdr[1];
    a.lay.n_ins = hdr[2];
    a.lay.n_ssdi = hdr[3];
    a.lay.na = hdr[4];
    a.lay.nm = hdr[5];
    a.lay.nz = hdr[6];
    a.lay.work_allowed = hdr[7] != 0;
    get_vec(i, a.v0);
    get_vec(i, a.v1);
    get_vec(i, a.c0);
    get_vec(i, a.c1);
    get_vec(i, a.p);
    get_vec(i, a.k0);
    get_vec(i, a.k1);
    if (a.v0.size() != a.lay.size()) throw std::runtime_error(path + ": layout/size mismatch");
  }
  return t;
}

}  // namespace retire
