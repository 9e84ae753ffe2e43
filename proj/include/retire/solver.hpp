// Backward induction over the discretized state space.
#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "retire/grid.hpp"
#include "retire/params.hpp"

namespace retire {

// Income and budget pieces that do not depend on assets or transient draws.
struct BudgetParts {
  double wage = 0, ss = 0, pension = 0, spousal = 0, ssdi_amount = 0, med = 0;
  double aime_next = 0;
  bool first_claim = false;
  bool claimed_after = false;
};

BudgetParts budget_parts(int age, Education e, Occupation occ, JointHealth h, InsuranceType ins, bool claimed_before,
                         double aime, int d, const ModelParams& p, const PolicyRules& r);

struct Budget {
  BudgetParts parts;
  double zeta = 0;
  double ssdi = 0;      // realized SSDI income
  double income = 0;    // Y
  double cash = 0;      // (1+r)A + Y - ME
  double c_max = 0;     // cash - A_min, before any transfer
  double transfer = 0;  // max(0, C_min - c_max)
  double c_hi = 0;      // upper end of the feasible consumption range
};

Budget cash_on_hand(const StateVector& s, int d, double zeta, bool ssdi_eligible, const ModelParams& p,
                    const PolicyRules& r);

// Claiming status implied by the absorbing-retirement structure.
inline bool claimed_before(bool worked_last, int age, const PolicyRules& r) {
  return !worked_last && age > r.earliest_claim_age;
}

struct EmaxCcp {
  double emax;
  double p_work;
};

EmaxCcp emax_and_ccp(double v_work, double v_retire, double scale);

struct SearchResult {
  int index = 0;
  double value = -std::numeric_limits<double>::infinity();
  int evaluations = 0;
};

// Local grid search around `center`; re-centers when the best point sits on a
// window edge or when both window ends beat the center (non-concave bracket).
// window >= n degenerates to a full search. Ties go to the lowest index.
template <class F>
SearchResult warm_start_search(F&& value_at, int n, int center, int window);

template <class F>
SearchResult full_search(F&& value_at, int n) {
  SearchResult r;
  for (int k = 0; k < n; ++k) {
    const double v = value_at(k);
    ++r.evaluations;
    if (v > r.value) {
      r.value = v;
      r.index = k;
    }
  }
  return r;
}

// Discrete-state layout of one age's table. Transient dimensions (zeta, ssdi)
// are innermost.
struct AgeLayout {
  int age = 0;
  int n_types = 1;
  int n_ins = 3;   // 3 before Medicare age, 1 after
  int n_ssdi = 2;  // 2 while SSDI possible, 1 after
  int na = 0, nm = 0, nz = 0;
  bool work_allowed = true;

  int groups() const { return n_types * kEdu * kOcc * kHealth * n_ins * 2; }
  int cells_per_group() const { return na * nm * nz * n_ssdi; }
  std::size_t size() const { return std::size_t(groups()) * cells_per_group(); }
  int ins_slot(InsuranceType t) const { return n_ins == 1 ? 0 : static_cast<int>(t); }
  int group(int type, int edu, int occ, int h, int ins_slot, int wl) const {
    return ((((type * kEdu + edu) * kOcc + occ) * kHealth + h) * n_ins + ins_slot) * 2 + wl;
  }
  std::size_t cell(int g, int a, int m, int z, int s) const {
    return ((std::size_t(g) * na + a) * nm + m) * nz * n_ssdi + std::size_t(z) * n_ssdi + s;
  }
  struct Group {
    int type, edu, occ, h, ins_slot, wl;
  };
  Group decode(int g) const {
    Group out;
    out.wl = g % 2; g /= 2;
    out.ins_slot = g % n_ins; g /= n_ins;
    out.h = g % kHealth; g /= kHealth;
    out.occ = g % kOcc; g /= kOcc;
    out.edu = g % kEdu; g /= kEdu;
    out.type = g;
    return out;
  }
  InsuranceType insurance(int slot) const { return n_ins == 1 ? InsuranceType::Medicare : InsuranceType(slot); }
  bool choice_set_has_work(int wl) const { return work_allowed && wl == 1; }
};

AgeLayout make_layout(int age, const GridSpec& g, const PolicyRules& r, const ModelParams& p);

struct AgeTable {
  AgeLayout lay;
  std::vector<double> v0, v1, c0, c1, p;
  std::vector<std::uint8_t> k0, k1;
};

struct DecisionTables {
  GridSpec grid;
  Quadrature zeta;
  std::vector<AgeTable> ages;  // index age - grid.first_age
  std::string params_hash;
  // hash of everything that determines the no-work-choice groups
  std::string retired_hash;

  const AgeTable& at(int age) const { return ages.at(age - grid.first_age); }
};

struct SolveOptions {
  int threads = 0;  // 0 = OpenMP default
  // Groups without a work choice do not depend on the work-disutility
  // parameters; when `reuse` was solved with the same retired_hash their
  // cells are copied instead of recomputed.
  const DecisionTables* reuse = nullptr;
};

DecisionTables solve(const ModelParams& p, const PolicyRules& r, const GridSpec& g, const SolveOptions& opt = {});

// Serial, deliberately naive reference: full consumption search and a direct
// bilinear interpolation per candidate. Slow; for tests and benchmarks.
DecisionTables solve_reference(const ModelParams& p, const PolicyRules& r, const GridSpec& g);

std::string params_hash(const ModelParams& p, const PolicyRules& r, const GridSpec& g);
std::string retired_params_hash(const ModelParams& p, const PolicyRules& r, const GridSpec& g);

// Linear location on a sorted grid, clamped to the hull.
struct Locate {
  int i;
  double w;  // weight of node i+1
};
Locate locate(const std::vector<double>& grid, double x);

// Integrated value at a start-of-period state: expectation over zeta and SSDI
// draws of the Emax (or v0 when only retirement is available).
double expected_value(const DecisionTables& t, const StateVector& s, const ModelParams& p, const PolicyRules& r);

// ---- template implementation ----

template <class F>
SearchResult warm_start_search(F&& value_at, int n, int center, int window) {
  if (window * 2 + 1 >= n) return full_search(value_at, n);
  std::array<double, 256> val;
  for (int k = 0; k < n; ++k) val[k] = std::numeric_limits<double>::quiet_NaN();
  SearchResult r;
  auto eval = [&](int k) {
    if (val[k] != val[k]) {
      val[k] = value_at(k);
      ++r.evaluations;
    }
    return val[k];
  };
  int c = std::min(std::max(center, 0), n - 1);
  for (int iter = 0; iter < n; ++iter) {
    const int lo = std::max(0, c - window), hi = std::min(n - 1, c + window);
    int b = lo;
    for (int k = lo; k <= hi; ++k)
      if (eval(k) > eval(b)) b = k;
    int next = -1;
    if (b == lo && lo > 0)
      next = lo;
    else if (b == hi && hi < n - 1)
      next = hi;
    else if (eval(lo) > eval(c) && eval(hi) > eval(c)) {
      const int e = eval(lo) >= eval(hi) ? lo : hi;
      if ((e == lo && lo > 0) || (e == hi && hi < n - 1)) next = e;
    }
    if (next < 0 || next == c) break;
    // stop once the new window holds nothing unexplored
    const int nlo = std::max(0, next - window), nhi = std::min(n - 1, next + window);
    bool fresh = false;
    for (int k = nlo; k <= nhi && !fresh; ++k) fresh = val[k] != val[k];
    if (!fresh) break;
    c = next;
  }
  for (int k = 0; k < n; ++k)
    if (val[k] == val[k] && val[k] > r.value) {
      r.value = val[k];
      r.index = k;
    }
  return r;
}

}  // namespace retire
