#include "qproj/lp.hpp"

#include <string>

namespace qproj {

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    default: return "unbounded";
  }
}

LinearProgram::LinearProgram(int vars, Sense s) : sense(s), objective(vars), bounds(vars) {}

void LinearProgram::add(std::vector<Rational> coeffs, Relation rel, Rational rhs) {
  if (static_cast<int>(coeffs.size()) != num_vars())
    throw std::invalid_argument("constraint row has " + std::to_string(coeffs.size()) + " entries, program has " +
                                std::to_string(num_vars()) + " variables");
  constraints.push_back({std::move(coeffs), rel, std::move(rhs)});
}

bool satisfies(const LinearProgram& p, const std::vector<Rational>& x) {
  if (static_cast<int>(x.size()) != p.num_vars()) return false;
  for (int j = 0; j < p.num_vars(); ++j) {
    if (p.bounds[j].lower && x[j] < *p.bounds[j].lower) return false;
    if (p.bounds[j].upper && x[j] > *p.bounds[j].upper) return false;
  }
  for (const auto& c : p.constraints) {
    Rational lhs = 0;
    for (int j = 0; j < p.num_vars(); ++j)
      if (c.coeffs[j] != 0) lhs += c.coeffs[j] * x[j];
    if (c.rel == Relation::Le && lhs > c.rhs) return false;
    if (c.rel == Relation::Ge && lhs < c.rhs) return false;
    if (c.rel == Relation::Eq && lhs != c.rhs) return false;
  }
  return true;
}

namespace {

struct Row {
  std::vector<Rational> a;
  Relation rel;
  Rational b;
};

// x_j = offset + sum sign * z_var over the nonnegative standard variables z.
struct VarMap {
  Rational offset;
  std::vector<std::pair<int, int>> terms;
};

struct StandardForm {
  int nz = 0;
  std::vector<Rational> cost;  // minimized
  std::vector<Row> rows;
  std::vector<VarMap> map;
};

StandardForm standardize(const LinearProgram& p) {
  StandardForm sf;
  const int n = p.num_vars();
  sf.map.resize(n);
  std::vector<std::pair<int, Rational>> upper_rows;
  for (int j = 0; j < n; ++j) {
    const auto& bd = p.bounds[j];
    auto& vm = sf.map[j];
    if (bd.lower) {
      vm.offset = *bd.lower;
      vm.terms.push_back({sf.nz, 1});
      if (bd.upper) upper_rows.push_back({sf.nz, *bd.upper - *bd.lower});
      ++sf.nz;
    } else if (bd.upper) {
      vm.offset = *bd.upper;
      vm.terms.push_back({sf.nz++, -1});
    } else {
      vm.terms.push_back({sf.nz++, 1});
      vm.terms.push_back({sf.nz++, -1});
    }
  }

  const Rational sign = p.sense == Sense::Max ? -1 : 1;
  sf.cost.assign(sf.nz, Rational(0));
  for (int j = 0; j < n; ++j)
    for (auto [z, s] : sf.map[j].terms) sf.cost[z] += sign * s * p.objective[j];

  for (const auto& c : p.constraints) {
    Row r{std::vector<Rational>(sf.nz), c.rel, c.rhs};
    for (int j = 0; j < n; ++j) {
      if (c.coeffs[j] == 0) continue;
      r.b -= c.coeffs[j] * sf.map[j].offset;
      for (auto [z, s] : sf.map[j].terms) r.a[z] += s * c.coeffs[j];
    }
    sf.rows.push_back(std::move(r));
  }
  for (auto& [z, cap] : upper_rows) {
    Row r{std::vector<Rational>(sf.nz), Relation::Le, cap};
    r.a[z] = 1;
    sf.rows.push_back(std::move(r));
  }
  return sf;
}

std::size_t bit_size(const Rational& q) {
  const auto* raw = q.backend().data();
  return mpz_sizeinbase(mpq_numref(raw), 2) + mpz_sizeinbase(mpq_denref(raw), 2);
}

// Dense tableau for: min cost.z subject to rows, z >= 0.
class Tableau {
 public:
  Tableau(std::vector<Row> rows, int nz, unsigned max_bits) : nz_(nz), max_bits_(max_bits) {
    const int m = static_cast<int>(rows.size());
    for (auto& r : rows) {
      if (r.b < 0) {
        for (auto& v : r.a) v = -v;
        r.b = -r.b;
        if (r.rel == Relation::Le) r.rel = Relation::Ge;
        else if (r.rel == Relation::Ge) r.rel = Relation::Le;
      }
    }
    slack_.assign(m, -1);
    int col = nz;
    for (int i = 0; i < m; ++i)
      if (rows[i].rel != Relation::Eq) slack_[i] = col++;
    first_art_ = col;
    std::vector<int> art(m, -1);
    for (int i = 0; i < m; ++i)
      if (rows[i].rel != Relation::Le) art[i] = col++;
    ncol_ = col;

    t_.assign(m, std::vector<Rational>(ncol_ + 1));
    basis_.assign(m, -1);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < nz; ++j) t_[i][j] = rows[i].a[j];
      if (slack_[i] >= 0) t_[i][slack_[i]] = rows[i].rel == Relation::Le ? 1 : -1;
      if (art[i] >= 0) t_[i][art[i]] = 1;
      t_[i][ncol_] = rows[i].b;
      basis_[i] = art[i] >= 0 ? art[i] : slack_[i];
    }
    enterable_.assign(ncol_, true);
  }

  LpStatus run(const std::vector<Rational>& cost) {
    if (first_art_ < ncol_) {
      std::vector<Rational> c1(ncol_);
      for (int j = first_art_; j < ncol_; ++j) c1[j] = 1;
      load_objective(c1);
      iterate();
      if (obj_[ncol_] != 0) return LpStatus::Infeasible;
      drive_out_artificials();
      for (int j = first_art_; j < ncol_; ++j) enterable_[j] = false;
    }
    std::vector<Rational> c2(ncol_);
    for (int j = 0; j < nz_; ++j) c2[j] = cost[j];
    load_objective(c2);
    return iterate() ? LpStatus::Optimal : LpStatus::Unbounded;
  }

  std::vector<Rational> primal() const {
    std::vector<Rational> z(nz_);
    for (std::size_t i = 0; i < basis_.size(); ++i)
      if (basis_[i] < nz_) z[basis_[i]] = t_[i][ncol_];
    return z;
  }

  const Rational& reduced_cost(int col) const { return obj_[col]; }
  // Minus the current objective value.
  const Rational& objective_entry() const { return obj_[ncol_]; }
  int slack_column(int row) const { return slack_[row]; }

 private:
  void load_objective(const std::vector<Rational>& c) {
    obj_.assign(ncol_ + 1, Rational(0));
    for (int j = 0; j < ncol_; ++j) obj_[j] = c[j];
    for (std::size_t i = 0; i < basis_.size(); ++i) {
      const Rational& cb = c[basis_[i]];
      if (cb == 0) continue;
      for (int j = 0; j <= ncol_; ++j)
        if (t_[i][j] != 0) obj_[j] -= cb * t_[i][j];
    }
  }

  // Bland's rule. Returns false when unbounded.
  bool iterate() {
    for (;;) {
      int enter = -1;
      for (int j = 0; j < ncol_; ++j)
        if (enterable_[j] && obj_[j] < 0) {
          enter = j;
          break;
        }
      if (enter < 0) return true;
      int leave = -1;
      Rational best;
      for (std::size_t i = 0; i < t_.size(); ++i) {
        if (t_[i][enter] <= 0) continue;
        Rational ratio = t_[i][ncol_] / t_[i][enter];
        if (leave < 0 || ratio < best || (ratio == best && basis_[i] < basis_[leave])) {
          leave = static_cast<int>(i);
          best = std::move(ratio);
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  }

  void drive_out_artificials() {
    for (std::size_t i = 0; i < t_.size();) {
      if (basis_[i] < first_art_) {
        ++i;
        continue;
      }
      int col = -1;
      for (int j = 0; j < first_art_; ++j)
        if (t_[i][j] != 0) {
          col = j;
          break;
        }
      if (col >= 0) {
        pivot(static_cast<int>(i), col);
        ++i;
      } else {
        // Redundant equality.
        t_.erase(t_.begin() + static_cast<std::ptrdiff_t>(i));
        basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(i));
      }
    }
  }

  void pivot(int r, int c) {
    auto& row = t_[r];
    const Rational piv = row[c];
    std::vector<int> nonzero;
    for (int j = 0; j <= ncol_; ++j)
      if (row[j] != 0) {
        if (piv != 1) row[j] /= piv;
        nonzero.push_back(j);
        if (bit_size(row[j]) > max_bits_)
          throw lp_resource_error("rational entry exceeds " + std::to_string(max_bits_) + " bits");
      }
    auto eliminate = [&](std::vector<Rational>& target) {
      if (target[c] == 0) return;
      const Rational f = target[c];
      for (int j : nonzero) target[j] -= f * row[j];
    };
    for (std::size_t i = 0; i < t_.size(); ++i)
      if (static_cast<int>(i) != r) eliminate(t_[i]);
    eliminate(obj_);
    basis_[r] = c;
  }

  int nz_;
  unsigned max_bits_;
  int ncol_ = 0;
  int first_art_ = 0;
  std::vector<std::vector<Rational>> t_;
  std::vector<Rational> obj_;
  std::vector<int> basis_;
  std::vector<int> slack_;
  std::vector<bool> enterable_;
};

bool nonnegative_costs(const StandardForm& sf) {
  for (const auto& c : sf.cost)
    if (c < 0) return false;
  return true;
}

// Rows rewritten as a.z >= b.
std::vector<Row> as_ge_rows(const std::vector<Row>& rows) {
  std::vector<Row> out;
  for (const auto& r : rows) {
    if (r.rel != Relation::Le) out.push_back({r.a, Relation::Ge, r.b});
    if (r.rel != Relation::Ge) {
      Row neg{r.a, Relation::Ge, -r.b};
      for (auto& v : neg.a) v = -v;
      out.push_back(std::move(neg));
    }
  }
  return out;
}

// min c.z s.t. A z >= b, z >= 0 with c >= 0, via max b.y s.t. A^T y <= c, y >= 0.
LpStatus solve_by_dual(const StandardForm& sf, unsigned max_bits, std::vector<Rational>& z) {
  const auto ge = as_ge_rows(sf.rows);
  const int m = static_cast<int>(ge.size());
  std::vector<Row> dual_rows;
  dual_rows.reserve(sf.nz);
  for (int k = 0; k < sf.nz; ++k) {
    Row r{std::vector<Rational>(m), Relation::Le, sf.cost[k]};
    for (int i = 0; i < m; ++i) r.a[i] = ge[i].a[k];
    dual_rows.push_back(std::move(r));
  }
  std::vector<Rational> dual_cost(m);
  for (int i = 0; i < m; ++i) dual_cost[i] = -ge[i].b;
  Tableau tab(std::move(dual_rows), m, max_bits);
  auto st = tab.run(dual_cost);
  if (st == LpStatus::Unbounded) return LpStatus::Infeasible;
  if (st == LpStatus::Infeasible) throw std::logic_error("dual with nonnegative costs reported infeasible");
  z.assign(sf.nz, Rational(0));
  Rational primal_value = 0;
  for (int k = 0; k < sf.nz; ++k) {
    z[k] = tab.reduced_cost(tab.slack_column(k));
    primal_value += sf.cost[k] * z[k];
  }
  // Strong duality: c.z must equal b.y = -(dual minimum).
  if (primal_value != tab.objective_entry()) throw std::logic_error("dual route: primal and dual values differ");
  return LpStatus::Optimal;
}

}  // namespace

LpSolution solve(const LinearProgram& p, const LpOptions& opts) {
  if (p.num_vars() < 1) throw std::invalid_argument("linear program needs at least one variable");
  if (static_cast<int>(p.bounds.size()) != p.num_vars())
    throw std::invalid_argument("bounds vector does not match variable count");
  for (const auto& b : p.bounds)
    if (b.lower && b.upper && *b.lower > *b.upper) return {LpStatus::Infeasible, 0, {}};

  const auto sf = standardize(p);
  bool use_dual = false;
  if (opts.route == LpRoute::Dual) {
    if (!nonnegative_costs(sf)) throw std::invalid_argument("dual route needs nonnegative standardized costs");
    use_dual = true;
  } else if (opts.route == LpRoute::Auto) {
    use_dual = nonnegative_costs(sf) && sf.rows.size() > 2 * static_cast<std::size_t>(sf.nz);
  }

  std::vector<Rational> z;
  LpStatus st;
  if (use_dual) {
    st = solve_by_dual(sf, opts.max_bits, z);
  } else {
    Tableau tab(sf.rows, sf.nz, opts.max_bits);
    st = tab.run(sf.cost);
    if (st == LpStatus::Optimal) z = tab.primal();
  }
  if (st != LpStatus::Optimal) return {st, 0, {}};

  LpSolution sol;
  sol.status = LpStatus::Optimal;
  sol.assignment.resize(p.num_vars());
  for (int j = 0; j < p.num_vars(); ++j) {
    Rational v = sf.map[j].offset;
    for (auto [k, s] : sf.map[j].terms) v += s * z[k];
    sol.assignment[j] = v;
  }
  for (int j = 0; j < p.num_vars(); ++j) sol.value += p.objective[j] * sol.assignment[j];
  if (!satisfies(p, sol.assignment)) throw std::logic_error("simplex returned a point violating the program");
  return sol;
}

}  // namespace qproj
