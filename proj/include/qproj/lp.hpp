#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "qproj/rational.hpp"

namespace qproj {

enum class Sense { Min, Max };
enum class Relation { Le, Ge, Eq };
enum class LpStatus { Optimal, Infeasible, Unbounded };

const char* to_string(LpStatus s);

struct Constraint {
  std::vector<Rational> coeffs;
  Relation rel = Relation::Le;
  Rational rhs;
};

// nullopt means unbounded on that side.
struct VarBounds {
  std::optional<Rational> lower = Rational(0);
  std::optional<Rational> upper;
};

struct LinearProgram {
  explicit LinearProgram(int vars = 0, Sense s = Sense::Min);

  void add(std::vector<Rational> coeffs, Relation rel, Rational rhs);
  void set_free(int j) { bounds[j] = VarBounds{std::nullopt, std::nullopt}; }
  int num_vars() const { return static_cast<int>(objective.size()); }

  Sense sense = Sense::Min;
  std::vector<Rational> objective;
  std::vector<Constraint> constraints;
  std::vector<VarBounds> bounds;
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Rational value;
  std::vector<Rational> assignment;
};

// Primal runs two-phase simplex on the program as stated. Dual solves the
// LP dual and reads the primal point off the dual's final reduced costs; it
// applies only when every standardized cost is nonnegative. Auto picks Dual
// for tall programs where it applies.
enum class LpRoute { Auto, Primal, Dual };

struct LpOptions {
  LpRoute route = LpRoute::Auto;
  // Cap on numerator plus denominator bits of any tableau entry.
  unsigned max_bits = 1u << 15;
};

class lp_resource_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

LpSolution solve(const LinearProgram& p, const LpOptions& opts = {});

bool satisfies(const LinearProgram& p, const std::vector<Rational>& x);

}  // namespace qproj
