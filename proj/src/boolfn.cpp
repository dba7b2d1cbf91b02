#include "qproj/boolfn.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <fstream>
#include <istream>
#include <sstream>

namespace qproj {

namespace {

std::size_t word_count(int n) { return std::max<std::size_t>(1, (std::size_t{1} << n) / 64); }

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::uint64_t> parse_hex_bits(const std::string& hex, int n, const char* field) {
  std::vector<std::uint64_t> words(word_count(n), 0);
  const std::size_t bits = std::size_t{1} << n;
  std::size_t pos = 0;
  for (auto it = hex.rbegin(); it != hex.rend(); ++it, pos += 4) {
    char c = static_cast<char>(std::tolower(static_cast<unsigned char>(*it)));
    int v;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else throw usage_error(std::string("bad hex digit in ") + field);
    for (int b = 0; b < 4; ++b) {
      if (!((v >> b) & 1)) continue;
      std::size_t idx = pos + b;
      if (idx >= bits) throw usage_error(std::string(field) + " has bits beyond 2^n");
      words[idx >> 6] |= std::uint64_t{1} << (idx & 63);
    }
  }
  return words;
}

std::string format_hex_bits(const std::vector<std::uint64_t>& words, int n) {
  const std::size_t bits = std::size_t{1} << n;
  const std::size_t digits = std::max<std::size_t>(1, (bits + 3) / 4);
  std::string out(digits, '0');
  for (std::size_t d = 0; d < digits; ++d) {
    int v = 0;
    for (int b = 0; b < 4; ++b) {
      std::size_t idx = 4 * d + b;
      if (idx < bits && ((words[idx >> 6] >> (idx & 63)) & 1u)) v |= 1 << b;
    }
    out[digits - 1 - d] = "0123456789abcdef"[v];
  }
  return out;
}

}  // namespace

char cell_char(Cell c) {
  switch (c) {
    case Cell::Zero: return '0';
    case Cell::One: return '1';
    default: return '*';
  }
}

Cell cell_from_char(char c) {
  switch (c) {
    case '0': return Cell::Zero;
    case '1': return Cell::One;
    case '*': return Cell::Star;
    default: throw usage_error(std::string("bad restriction cell '") + c + "'");
  }
}

Assignment::Assignment(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto b : bits_)
    if (b > 1) throw usage_error("assignment bits must be 0 or 1");
}

Assignment Assignment::from_index(int n, Input x) {
  std::vector<std::uint8_t> bits(n);
  for (int i = 0; i < n; ++i) bits[i] = (x >> i) & 1u;
  return Assignment(std::move(bits));
}

Assignment Assignment::parse(const std::string& text) {
  std::vector<std::uint8_t> bits;
  for (char c : text) {
    if (c == '0' || c == '1') bits.push_back(static_cast<std::uint8_t>(c - '0'));
    else if (c == ',' || c == ' ') continue;
    else throw usage_error("bad assignment '" + text + "'");
  }
  return Assignment(std::move(bits));
}

Input Assignment::index() const {
  if (size() > kMaxArity) throw usage_error("assignment longer than 24 bits");
  Input x = 0;
  for (int i = 0; i < size(); ++i) x |= Input{bits_[i]} << i;
  return x;
}

std::string Assignment::str() const {
  std::string s;
  for (auto b : bits_) s.push_back(static_cast<char>('0' + b));
  return s;
}

void check_arity(int n) {
  if (n < 0 || n > kMaxArity)
    throw usage_error("arity " + std::to_string(n) + " outside supported range 0..24");
}

PartialFn::PartialFn(int n) : n_(n) {
  check_arity(n);
  values_.assign(word_count(n), 0);
  domain_.assign(word_count(n), 0);
  for (Input x = 0; x < size(); ++x) domain_[x >> 6] |= std::uint64_t{1} << (x & 63);
}

PartialFn::PartialFn(int n, std::vector<std::uint64_t> values, std::vector<std::uint64_t> domain)
    : n_(n), values_(std::move(values)), domain_(std::move(domain)) {
  check_arity(n);
  if (values_.size() != word_count(n) || domain_.size() != word_count(n))
    throw usage_error("truth table length does not match 2^n");
  if (n < 6) {
    std::uint64_t mask = (std::uint64_t{1} << size()) - 1;
    values_[0] &= mask;
    domain_[0] &= mask;
  }
  for (std::size_t w = 0; w < values_.size(); ++w) values_[w] &= domain_[w];
}

PartialFn PartialFn::constant(int n, bool v) {
  return tabulate(n, [v](Input) { return v; });
}

void PartialFn::put(Input x, Value v) {
  const std::uint64_t m = std::uint64_t{1} << (x & 63);
  values_[x >> 6] &= ~m;
  domain_[x >> 6] &= ~m;
  if (v == Value::Bottom) return;
  domain_[x >> 6] |= m;
  if (v == Value::One) values_[x >> 6] |= m;
}

Value PartialFn::evaluate(const Assignment& x) const {
  if (x.size() != n_)
    throw usage_error("assignment has " + std::to_string(x.size()) + " bits, function has arity " +
                      std::to_string(n_));
  return at(x.index());
}

bool PartialFn::is_total() const { return domain_size() == size(); }

std::size_t PartialFn::domain_size() const {
  std::size_t c = 0;
  for (auto w : domain_) c += std::popcount(w);
  return c;
}

bool PartialFn::is_constant() const {
  bool any0 = false, any1 = false;
  for (std::size_t w = 0; w < values_.size(); ++w) {
    any1 |= (values_[w] & domain_[w]) != 0;
    any0 |= (~values_[w] & domain_[w]) != 0;
  }
  return !(any0 && any1);
}

PartialFn make_or(int n) {
  return PartialFn::tabulate(n, [](Input x) { return x != 0; });
}

PartialFn make_and(int n) {
  const Input all = n == 32 ? ~Input{0} : (Input{1} << n) - 1;
  return PartialFn::tabulate(n, [all](Input x) { return x == all; });
}

PartialFn make_xor(int n) {
  return PartialFn::tabulate(n, [](Input x) { return (std::popcount(x) & 1) != 0; });
}

PartialFn make_maj(int n) {
  if (n % 2 == 0) throw usage_error("MAJ needs odd arity");
  return PartialFn::tabulate(n, [n](Input x) { return 2 * std::popcount(x) > n; });
}

PartialFn make_builtin(const std::string& name, int n) {
  const auto key = lower(name);
  if (key == "or") return make_or(n);
  if (key == "and") return make_and(n);
  if (key == "xor") return make_xor(n);
  if (key == "maj") return make_maj(n);
  throw usage_error("unknown builtin function '" + name + "'");
}

Restriction::Restriction(std::vector<Cell> cells) : cells_(std::move(cells)) {}

Restriction Restriction::from_free_set(const Assignment& x, Input free_mask) {
  std::vector<Cell> cells(x.size());
  for (int i = 0; i < x.size(); ++i)
    cells[i] = ((free_mask >> i) & 1u) ? Cell::Star : static_cast<Cell>(x[i]);
  return Restriction(std::move(cells));
}

Restriction Restriction::parse(const std::string& text) {
  std::vector<Cell> cells;
  for (char c : text)
    if (c != ',' && c != ' ') cells.push_back(cell_from_char(c));
  return Restriction(std::move(cells));
}

std::vector<int> Restriction::free_vars() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i)
    if (cells_[i] == Cell::Star) out.push_back(i);
  return out;
}

int Restriction::free_count() const {
  return static_cast<int>(std::count(cells_.begin(), cells_.end(), Cell::Star));
}

std::string Restriction::str() const {
  std::string s;
  for (auto c : cells_) s.push_back(cell_char(c));
  return s;
}

Restriction compose(const Restriction& outer, const Restriction& inner) {
  if (inner.size() != outer.free_count())
    throw usage_error("inner restriction has " + std::to_string(inner.size()) + " cells, outer has " +
                      std::to_string(outer.free_count()) + " stars");
  std::vector<Cell> cells = outer.cells();
  int j = 0;
  for (auto& c : cells)
    if (c == Cell::Star) c = inner[j++];
  return Restriction(std::move(cells));
}

PartialFn restrict(const PartialFn& f, const Restriction& rho) {
  if (rho.size() != f.arity())
    throw usage_error("restriction has " + std::to_string(rho.size()) + " cells, function has arity " +
                      std::to_string(f.arity()));
  const auto free = rho.free_vars();
  Input base = 0;
  for (int i = 0; i < rho.size(); ++i)
    if (rho[i] == Cell::One) base |= Input{1} << i;
  return PartialFn::tabulate(static_cast<int>(free.size()), [&](Input y) {
    Input x = base;
    for (std::size_t j = 0; j < free.size(); ++j) x |= ((y >> j) & 1u) << free[j];
    return f.at(x);
  });
}

BlockRestriction::BlockRestriction(int blocks, int block_len, std::vector<Cell> cells)
    : blocks_(blocks), block_len_(block_len), cells_(std::move(cells)) {
  if (blocks < 0 || block_len < 1 ||
      cells_.size() != static_cast<std::size_t>(blocks) * static_cast<std::size_t>(block_len))
    throw usage_error("block restriction shape mismatch");
}

PartialFn project(const PartialFn& f, const BlockRestriction& rho) {
  if (f.arity() != rho.size())
    throw usage_error("projection layout: function arity " + std::to_string(f.arity()) + " != " +
                      std::to_string(rho.blocks()) + " blocks x " + std::to_string(rho.block_len()));
  Input base = 0;
  std::vector<Input> block_star_mask(rho.blocks(), 0);
  for (int i = 0; i < rho.blocks(); ++i)
    for (int j = 0; j < rho.block_len(); ++j) {
      const int idx = i * rho.block_len() + j;
      if (rho.at(i, j) == Cell::One) base |= Input{1} << idx;
      if (rho.at(i, j) == Cell::Star) block_star_mask[i] |= Input{1} << idx;
    }
  return PartialFn::tabulate(rho.blocks(), [&](Input y) {
    Input x = base;
    for (int i = 0; i < rho.blocks(); ++i)
      if ((y >> i) & 1u) x |= block_star_mask[i];
    return f.at(x);
  });
}

Cell lift_block(const Cell* block, int len, Gate gate) {
  // Under AND a 0 forces the gate; under OR a 1 does.
  const Cell controlling = gate == Gate::And ? Cell::Zero : Cell::One;
  bool star = false;
  for (int j = 0; j < len; ++j) {
    if (block[j] == controlling) return controlling;
    if (block[j] == Cell::Star) star = true;
  }
  if (star) return Cell::Star;
  return gate == Gate::And ? Cell::One : Cell::Zero;
}

std::vector<Cell> lift(const BlockRestriction& tau, Gate gate) {
  std::vector<Cell> out(tau.blocks());
  for (int i = 0; i < tau.blocks(); ++i)
    out[i] = lift_block(tau.cells().data() + static_cast<std::size_t>(i) * tau.block_len(), tau.block_len(), gate);
  return out;
}

Assignment flip_block(const Assignment& x, const std::vector<int>& block) {
  auto bits = x.bits();
  for (int i : block) {
    if (i < 0 || i >= x.size()) throw usage_error("block index " + std::to_string(i) + " out of range");
    bits[i] ^= 1u;
  }
  return Assignment(std::move(bits));
}

PartialFn read_truth_table(std::istream& in) {
  int n = -1;
  std::string values, domain;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw usage_error("truth table line without '=': " + line);
    auto key = lower(trim(line.substr(0, eq)));
    auto val = trim(line.substr(eq + 1));
    if (key == "n") {
      try {
        n = std::stoi(val);
      } catch (const std::exception&) {
        throw usage_error("bad arity '" + val + "'");
      }
    } else if (key == "values") {
      values = val;
    } else if (key == "domain") {
      domain = val;
    } else {
      throw usage_error("unknown truth table field '" + key + "'");
    }
  }
  if (n < 0) throw usage_error("truth table missing n=");
  check_arity(n);
  if (values.empty()) throw usage_error("truth table missing values=");
  auto vw = parse_hex_bits(values, n, "values");
  std::vector<std::uint64_t> dw;
  if (domain.empty()) dw = PartialFn(n).domain_words();
  else dw = parse_hex_bits(domain, n, "domain");
  return PartialFn(n, std::move(vw), std::move(dw));
}

PartialFn read_truth_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw usage_error("cannot open truth table file '" + path + "'");
  return read_truth_table(in);
}

std::string format_truth_table(const PartialFn& f) {
  std::ostringstream os;
  os << "n=" << f.arity() << "\nvalues=" << format_hex_bits(f.value_words(), f.arity()) << "\n";
  if (!f.is_total()) os << "domain=" << format_hex_bits(f.domain_words(), f.arity()) << "\n";
  return os.str();
}

}  // namespace qproj
