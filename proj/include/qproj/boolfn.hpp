#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace qproj {

constexpr int kMaxArity = 24;

// Thrown for malformed arguments: arity mismatches, bad shapes, bad files.
class usage_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Cell : std::uint8_t { Zero = 0, One = 1, Star = 2 };
enum class Value : std::uint8_t { Zero = 0, One = 1, Bottom = 2 };
enum class Gate : std::uint8_t { And, Or };

// Packed input: bit i holds x_{i+1}.
using Input = std::uint32_t;

char cell_char(Cell c);
Cell cell_from_char(char c);

class Assignment {
 public:
  Assignment() = default;
  explicit Assignment(std::vector<std::uint8_t> bits);
  static Assignment from_index(int n, Input x);
  // "0110" lists x_1 first.
  static Assignment parse(const std::string& text);

  int size() const { return static_cast<int>(bits_.size()); }
  std::uint8_t operator[](int i) const { return bits_[i]; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }
  Input index() const;
  std::string str() const;

  bool operator==(const Assignment&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

class PartialFn {
 public:
  PartialFn() = default;
  // Zero function with full domain.
  explicit PartialFn(int n);
  PartialFn(int n, std::vector<std::uint64_t> values, std::vector<std::uint64_t> domain);

  template <class F>
  static PartialFn tabulate(int n, F&& fn) {
    PartialFn f(n);
    for (Input x = 0; x < f.size(); ++x) f.put(x, fn(x));
    return f;
  }
  static PartialFn constant(int n, bool v);

  int arity() const { return n_; }
  Input size() const { return Input{1} << n_; }

  bool defined(Input x) const { return (domain_[x >> 6] >> (x & 63)) & 1u; }
  bool bit(Input x) const { return (values_[x >> 6] >> (x & 63)) & 1u; }
  Value at(Input x) const {
    if (!defined(x)) return Value::Bottom;
    return bit(x) ? Value::One : Value::Zero;
  }
  Value evaluate(const Assignment& x) const;

  bool is_total() const;
  std::size_t domain_size() const;
  // True when all defined points share one value (or none are defined).
  bool is_constant() const;

  const std::vector<std::uint64_t>& value_words() const { return values_; }
  const std::vector<std::uint64_t>& domain_words() const { return domain_; }

  bool operator==(const PartialFn&) const = default;

 private:
  void put(Input x, Value v);
  void put(Input x, bool v) { put(x, v ? Value::One : Value::Zero); }

  int n_ = 0;
  std::vector<std::uint64_t> values_{0};
  std::vector<std::uint64_t> domain_{1};
};

void check_arity(int n);

PartialFn make_or(int n);
PartialFn make_and(int n);
PartialFn make_xor(int n);
PartialFn make_maj(int n);
// OR, AND, XOR, MAJ by name (case-insensitive).
PartialFn make_builtin(const std::string& name, int n);

class Restriction {
 public:
  Restriction() = default;
  explicit Restriction(std::vector<Cell> cells);
  // Stars on free_mask, x elsewhere.
  static Restriction from_free_set(const Assignment& x, Input free_mask);
  static Restriction parse(const std::string& text);

  int size() const { return static_cast<int>(cells_.size()); }
  Cell operator[](int i) const { return cells_[i]; }
  const std::vector<Cell>& cells() const { return cells_; }
  // Original indices of the stars, ascending; variable j of f_rho is free_vars()[j].
  std::vector<int> free_vars() const;
  int free_count() const;
  std::string str() const;

  bool operator==(const Restriction&) const = default;

 private:
  std::vector<Cell> cells_;
};

// inner acts on the free variables of outer, in ascending order.
Restriction compose(const Restriction& outer, const Restriction& inner);

PartialFn restrict(const PartialFn& f, const Restriction& rho);

// N blocks of length l, block-major: cell (i,j) sits at i*l + j.
class BlockRestriction {
 public:
  BlockRestriction() = default;
  BlockRestriction(int blocks, int block_len, std::vector<Cell> cells);

  int blocks() const { return blocks_; }
  int block_len() const { return block_len_; }
  int size() const { return blocks_ * block_len_; }
  Cell at(int i, int j) const { return cells_[static_cast<std::size_t>(i) * block_len_ + j]; }
  const std::vector<Cell>& cells() const { return cells_; }

  bool operator==(const BlockRestriction&) const = default;

 private:
  int blocks_ = 0;
  int block_len_ = 0;
  std::vector<Cell> cells_;
};

PartialFn project(const PartialFn& f, const BlockRestriction& rho);

Cell lift_block(const Cell* block, int len, Gate gate);
std::vector<Cell> lift(const BlockRestriction& tau, Gate gate);

Assignment flip_block(const Assignment& x, const std::vector<int>& block);

// Text format: "n=<k>", "values=<hex>", optional "domain=<hex>". The hex
// string is the integer sum_x f(x) 2^x, zero-padded to ceil(2^k/4) digits.
PartialFn read_truth_table(std::istream& in);
PartialFn read_truth_table_file(const std::string& path);
std::string format_truth_table(const PartialFn& f);

}  // namespace qproj
