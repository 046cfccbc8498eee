// SPDX-License-Identifier: Apache-2.0
//
// Symbolic integer expressions and the per-dimension analysis lattice.
//
// SymExpr is kept in a canonical sum-of-products form: each term is an
// integer coefficient times a sorted multiset of factors, where a factor is
// either a named symbol or an opaque floor-div/max/min node. Symbols are
// assumed to take integer values >= 1 (tensor dimensions are positive).

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace dyndag {

class Error : public std::runtime_error {
 public:
  enum class Kind { Input, Analysis, PlanCheck, Internal };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

enum class SymOp { Add, Sub, Mul, FloorDiv, Max, Min };

enum class Sign { AlwaysNonNegative, AlwaysNonPositive, Indeterminate };

class SymExpr {
 public:
  struct Opaque;

  struct Factor {
    std::string symbol;                    // nonempty iff this is a symbol factor
    std::shared_ptr<const Opaque> opaque;  // set iff this is an opaque factor

    bool is_symbol() const { return opaque == nullptr; }
  };

  struct Term {
    std::int64_t coeff = 0;
    std::vector<Factor> factors;  // sorted; empty for the constant term
  };

  struct Opaque {
    SymOp kind;  // FloorDiv, Max or Min only
    std::vector<SymExpr> args;
  };

  SymExpr() = default;  // the literal 0

  static SymExpr literal(std::int64_t v);
  static SymExpr symbol(const std::string& name);
  static SymExpr apply(SymOp op, const SymExpr& a, const SymExpr& b);

  bool is_literal() const;
  std::int64_t literal_value() const;  // pre: is_literal()

  std::int64_t evaluate(const std::map<std::string, std::int64_t>& env) const;
  Sign sign() const;

  void collect_symbols(std::set<std::string>& out) const;
  std::set<std::string> symbols() const;

  std::string render() const;
  static SymExpr parse(const std::string& text);

  // Re-runs canonicalization from scratch; used to test idempotence.
  SymExpr renormalized() const;

  bool operator==(const SymExpr& other) const;
  bool operator!=(const SymExpr& other) const { return !(*this == other); }

  const std::vector<Term>& terms() const { return terms_; }

 private:
  std::vector<Term> terms_;

  void normalize();
};

// One lattice element for a single dimension or tracked scalar.
// Undef is top, Nac is bottom; Sym never holds a literal-only expression.
class DimValue {
 public:
  enum class Tag { Undef, Known, Sym, Nac };

  DimValue() : tag_(Tag::Undef) {}

  static DimValue undef() { return DimValue(); }
  static DimValue nac();
  static DimValue known(std::int64_t v);
  static DimValue sym(const SymExpr& e);  // folds literal-only expressions to Known
  static DimValue sym(const std::string& name) { return sym(SymExpr::symbol(name)); }

  Tag tag() const { return tag_; }
  bool is_undef() const { return tag_ == Tag::Undef; }
  bool is_known() const { return tag_ == Tag::Known; }
  bool is_sym() const { return tag_ == Tag::Sym; }
  bool is_nac() const { return tag_ == Tag::Nac; }

  std::int64_t known_value() const;
  const SymExpr& expr() const;

  // The expression view of a Known or Sym value.
  SymExpr as_expr() const;

  std::string render() const;
  static DimValue parse(const std::string& text);

  bool operator==(const DimValue& other) const;
  bool operator!=(const DimValue& other) const { return !(*this == other); }

 private:
  Tag tag_;
  std::int64_t known_ = 0;
  SymExpr expr_;
};

// Greatest lower bound in the lattice of Fig-style {Undef > values > Nac}.
DimValue meet(const DimValue& a, const DimValue& b);

// Arithmetic over lattice elements. Known op Known folds; Nac and Undef
// are absorbing in that order of priority (Nac wins over Undef).
DimValue apply(SymOp op, const DimValue& a, const DimValue& b);

// true iff a is lower than or equal to b in the lattice order.
bool lattice_le(const DimValue& a, const DimValue& b);

class SymbolTable {
 public:
  enum class Role { GraphInput, Generated };

  void declare(const std::string& name, Role role);
  bool contains(const std::string& name) const;
  Role role(const std::string& name) const;

  // Returns a name of the form "$<stem>" guaranteed not to collide with
  // declared symbols; registers it as Generated.
  std::string fresh(const std::string& stem);

  const std::map<std::string, Role>& all() const { return symbols_; }

 private:
  std::map<std::string, Role> symbols_;
  std::uint64_t counter_ = 0;
};

}  // namespace dyndag
