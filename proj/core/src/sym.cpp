// SPDX-License-Identifier: Apache-2.0

#include "dyndag/sym.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace dyndag {

namespace {

std::int64_t floordiv_i64(std::int64_t a, std::int64_t b) {
  if (b == 0) throw Error(Error::Kind::Analysis, "division by zero in symbolic expression");
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::string render_factor(const SymExpr::Factor& f);

std::string factor_key(const SymExpr::Factor& f) { return render_factor(f); }

bool factor_equal(const SymExpr::Factor& a, const SymExpr::Factor& b) {
  return factor_key(a) == factor_key(b);
}

std::vector<std::string> term_key(const SymExpr::Term& t) {
  std::vector<std::string> k;
  k.reserve(t.factors.size());
  for (const auto& f : t.factors) k.push_back(factor_key(f));
  return k;
}

// Non-constant terms sorted by factor key; the constant term goes last.
bool term_before(const SymExpr::Term& a, const SymExpr::Term& b) {
  if (a.factors.empty() != b.factors.empty()) return b.factors.empty();
  return term_key(a) < term_key(b);
}

std::string render_term(const SymExpr::Term& t, bool use_abs) {
  std::int64_t c = use_abs ? std::abs(t.coeff) : t.coeff;
  std::vector<std::string> parts;
  if (c != 1 || t.factors.empty()) parts.push_back(std::to_string(c));
  for (const auto& f : t.factors) parts.push_back(render_factor(f));
  std::string r = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) r = "(" + r + "*" + parts[i] + ")";
  return r;
}

std::string render_factor(const SymExpr::Factor& f) {
  if (f.is_symbol()) return f.symbol;
  const auto& op = *f.opaque;
  switch (op.kind) {
    case SymOp::FloorDiv:
      return "(" + op.args[0].render() + "/" + op.args[1].render() + ")";
    case SymOp::Max:
      return "max(" + op.args[0].render() + "," + op.args[1].render() + ")";
    case SymOp::Min:
      return "min(" + op.args[0].render() + "," + op.args[1].render() + ")";
    default:
      throw Error(Error::Kind::Internal, "bad opaque kind");
  }
}

}  // namespace

void SymExpr::normalize() {
  for (auto& t : terms_) {
    std::sort(t.factors.begin(), t.factors.end(),
              [](const Factor& a, const Factor& b) { return factor_key(a) < factor_key(b); });
  }
  std::sort(terms_.begin(), terms_.end(), term_before);
  std::vector<Term> out;
  for (auto& t : terms_) {
    if (t.coeff == 0) continue;
    if (!out.empty() && term_key(out.back()) == term_key(t) &&
        out.back().factors.empty() == t.factors.empty()) {
      out.back().coeff += t.coeff;
      if (out.back().coeff == 0) out.pop_back();
    } else {
      out.push_back(std::move(t));
    }
  }
  terms_ = std::move(out);
}

SymExpr SymExpr::literal(std::int64_t v) {
  SymExpr e;
  if (v != 0) e.terms_.push_back(Term{v, {}});
  return e;
}

SymExpr SymExpr::symbol(const std::string& name) {
  SymExpr e;
  e.terms_.push_back(Term{1, {Factor{name, nullptr}}});
  return e;
}

bool SymExpr::is_literal() const {
  return terms_.empty() || (terms_.size() == 1 && terms_[0].factors.empty());
}

std::int64_t SymExpr::literal_value() const {
  if (terms_.empty()) return 0;
  return terms_[0].coeff;
}

bool SymExpr::operator==(const SymExpr& other) const { return render() == other.render(); }

SymExpr SymExpr::renormalized() const {
  SymExpr e = *this;
  e.normalize();
  return e;
}

namespace {

// Multiset subset test on sorted factor lists; fills `extras` with what is in
// big but not in small.
bool factors_subset(const std::vector<SymExpr::Factor>& small,
                    const std::vector<SymExpr::Factor>& big,
                    std::vector<SymExpr::Factor>* extras) {
  std::size_t i = 0, j = 0;
  if (extras) extras->clear();
  while (i < small.size() && j < big.size()) {
    const std::string ka = factor_key(small[i]), kb = factor_key(big[j]);
    if (ka == kb) {
      ++i;
      ++j;
    } else if (kb < ka) {
      if (extras) extras->push_back(big[j]);
      ++j;
    } else {
      return false;
    }
  }
  if (i < small.size()) return false;
  if (extras) {
    for (; j < big.size(); ++j) extras->push_back(big[j]);
  }
  return true;
}

bool opaque_known_nonneg(const SymExpr::Opaque& op) {
  switch (op.kind) {
    case SymOp::Max:
    case SymOp::Min:
      return op.args[0].sign() == Sign::AlwaysNonNegative &&
             op.args[1].sign() == Sign::AlwaysNonNegative;
    case SymOp::FloorDiv:
      return op.args[0].sign() == Sign::AlwaysNonNegative &&
             op.args[1].sign() == Sign::AlwaysNonNegative;
    default:
      return false;
  }
}

// Sound check that the sum of `terms` is >= 0 for all symbol values >= 1.
// Negative terms must be dominated by positive terms whose factor multiset is
// a superset with symbol-only extras (each extra factor is >= 1).
bool always_nonneg(const std::vector<SymExpr::Term>& terms) {
  // Every opaque factor in play must itself be provably nonnegative,
  // otherwise a term's sign is not forced by its coefficient.
  for (const auto& t : terms) {
    for (const auto& f : t.factors) {
      if (!f.is_symbol() && !opaque_known_nonneg(*f.opaque)) return false;
    }
  }
  std::vector<SymExpr::Term> neg;
  struct Donor {
    const SymExpr::Term* term;
    std::int64_t avail;
  };
  std::vector<Donor> donors;
  std::int64_t const_avail = 0;
  for (const auto& t : terms) {
    if (t.coeff < 0) {
      neg.push_back(t);
    } else if (t.factors.empty()) {
      const_avail = t.coeff;
    } else {
      donors.push_back({&t, t.coeff});
    }
  }
  // Larger factor multisets first so specific needs grab their donors early.
  std::sort(neg.begin(), neg.end(), [](const SymExpr::Term& a, const SymExpr::Term& b) {
    return a.factors.size() > b.factors.size();
  });
  for (const auto& n : neg) {
    std::int64_t need = -n.coeff;
    if (n.factors.empty()) {
      std::int64_t take = std::min(need, const_avail);
      need -= take;
      const_avail -= take;
      for (auto& d : donors) {
        if (need == 0) break;
        bool all_sym = true;
        for (const auto& f : d.term->factors) all_sym &= f.is_symbol();
        if (!all_sym) continue;  // value >= coeff only holds for symbol factors
        take = std::min(need, d.avail);
        need -= take;
        d.avail -= take;
      }
    } else {
      std::vector<SymExpr::Factor> extras;
      for (auto& d : donors) {
        if (need == 0) break;
        if (!factors_subset(n.factors, d.term->factors, &extras)) continue;
        bool extras_ok = !extras.empty();
        for (const auto& f : extras) extras_ok &= f.is_symbol();
        if (!extras_ok) continue;
        std::int64_t take = std::min(need, d.avail);
        need -= take;
        d.avail -= take;
      }
    }
    if (need > 0) return false;
  }
  return true;
}

}  // namespace

Sign SymExpr::sign() const {
  if (always_nonneg(terms_)) return Sign::AlwaysNonNegative;
  std::vector<Term> negated = terms_;
  for (auto& t : negated) t.coeff = -t.coeff;
  if (always_nonneg(negated)) return Sign::AlwaysNonPositive;
  return Sign::Indeterminate;
}

std::int64_t SymExpr::evaluate(const std::map<std::string, std::int64_t>& env) const {
  std::int64_t total = 0;
  for (const auto& t : terms_) {
    std::int64_t v = t.coeff;
    for (const auto& f : t.factors) {
      if (f.is_symbol()) {
        auto it = env.find(f.symbol);
        if (it == env.end())
          throw Error(Error::Kind::Input, "unbound symbol: " + f.symbol);
        v *= it->second;
      } else {
        const auto& op = *f.opaque;
        std::int64_t a = op.args[0].evaluate(env), b = op.args[1].evaluate(env);
        switch (op.kind) {
          case SymOp::FloorDiv: v *= floordiv_i64(a, b); break;
          case SymOp::Max: v *= std::max(a, b); break;
          case SymOp::Min: v *= std::min(a, b); break;
          default: throw Error(Error::Kind::Internal, "bad opaque kind");
        }
      }
    }
    total += v;
  }
  return total;
}

void SymExpr::collect_symbols(std::set<std::string>& out) const {
  for (const auto& t : terms_) {
    for (const auto& f : t.factors) {
      if (f.is_symbol()) {
        out.insert(f.symbol);
      } else {
        for (const auto& a : f.opaque->args) a.collect_symbols(out);
      }
    }
  }
}

std::set<std::string> SymExpr::symbols() const {
  std::set<std::string> s;
  collect_symbols(s);
  return s;
}

std::string SymExpr::render() const {
  if (terms_.empty()) return "0";
  std::string r = render_term(terms_[0], /*use_abs=*/false);
  for (std::size_t i = 1; i < terms_.size(); ++i) {
    const char* join = terms_[i].coeff < 0 ? "-" : "+";
    r = "(" + r + join + render_term(terms_[i], /*use_abs=*/true) + ")";
  }
  return r;
}

SymExpr SymExpr::apply(SymOp op, const SymExpr& a, const SymExpr& b) {
  switch (op) {
    case SymOp::Add: {
      SymExpr e;
      e.terms_ = a.terms_;
      e.terms_.insert(e.terms_.end(), b.terms_.begin(), b.terms_.end());
      e.normalize();
      return e;
    }
    case SymOp::Sub: {
      SymExpr nb = b;
      for (auto& t : nb.terms_) t.coeff = -t.coeff;
      return apply(SymOp::Add, a, nb);
    }
    case SymOp::Mul: {
      SymExpr e;
      for (const auto& ta : a.terms_) {
        for (const auto& tb : b.terms_) {
          Term t;
          t.coeff = ta.coeff * tb.coeff;
          t.factors = ta.factors;
          t.factors.insert(t.factors.end(), tb.factors.begin(), tb.factors.end());
          e.terms_.push_back(std::move(t));
        }
      }
      e.normalize();
      return e;
    }
    case SymOp::FloorDiv: {
      if (b.is_literal() && b.literal_value() == 0)
        throw Error(Error::Kind::Analysis, "division by known zero");
      if (a.is_literal() && b.is_literal())
        return literal(floordiv_i64(a.literal_value(), b.literal_value()));
      if (b.is_literal() && b.literal_value() == 1) return a;
      // Exact division by a single-term divisor: every dividend term's
      // coefficient divisible and divisor factors a sub-multiset.
      if (b.terms_.size() == 1 && b.terms_[0].coeff != 0) {
        const Term& d = b.terms_[0];
        SymExpr e;
        bool exact = true;
        for (const auto& t : a.terms_) {
          std::vector<Factor> rest;
          if (t.coeff % d.coeff != 0 || !factors_subset(d.factors, t.factors, &rest)) {
            exact = false;
            break;
          }
          e.terms_.push_back(Term{t.coeff / d.coeff, std::move(rest)});
        }
        if (exact) {
          e.normalize();
          return e;
        }
      }
      break;
    }
    case SymOp::Max:
    case SymOp::Min: {
      if (a.is_literal() && b.is_literal()) {
        std::int64_t av = a.literal_value(), bv = b.literal_value();
        return literal(op == SymOp::Max ? std::max(av, bv) : std::min(av, bv));
      }
      if (a == b) return a;
      Sign s = apply(SymOp::Sub, a, b).sign();
      if (s == Sign::AlwaysNonNegative) return op == SymOp::Max ? a : b;
      if (s == Sign::AlwaysNonPositive) return op == SymOp::Max ? b : a;
      break;
    }
  }
  // Opaque residue.
  SymExpr e;
  auto node = std::make_shared<Opaque>();
  node->kind = op;
  if ((op == SymOp::Max || op == SymOp::Min) && b.render() < a.render()) {
    node->args = {b, a};
  } else {
    node->args = {a, b};
  }
  Term t;
  t.coeff = 1;
  t.factors.push_back(Factor{"", std::move(node)});
  e.terms_.push_back(std::move(t));
  return e;
}

// ---------------------------------------------------------------------------
// Parsing: expr := term (('+'|'-') term)* ; term := unary (('*'|'/') unary)* ;
// unary := '-' unary | primary ; primary := int | ident | '(' expr ')'
//        | ('max'|'min') '(' expr ',' expr ')'
// ---------------------------------------------------------------------------

namespace {

struct Parser {
  const std::string& s;
  std::size_t pos = 0;

  explicit Parser(const std::string& text) : s(text) {}

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c))
      throw Error(Error::Kind::Input,
                  std::string("expected '") + c + "' in expression: " + s);
  }

  static bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
  }
  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$' || c == '\'';
  }

  SymExpr parse_expr() {
    SymExpr e = parse_term();
    for (;;) {
      skip_ws();
      if (eat('+')) {
        e = SymExpr::apply(SymOp::Add, e, parse_term());
      } else if (eat('-')) {
        e = SymExpr::apply(SymOp::Sub, e, parse_term());
      } else {
        return e;
      }
    }
  }

  SymExpr parse_term() {
    SymExpr e = parse_unary();
    for (;;) {
      skip_ws();
      if (eat('*')) {
        e = SymExpr::apply(SymOp::Mul, e, parse_unary());
      } else if (eat('/')) {
        e = SymExpr::apply(SymOp::FloorDiv, e, parse_unary());
      } else {
        return e;
      }
    }
  }

  SymExpr parse_unary() {
    skip_ws();
    if (eat('-')) return SymExpr::apply(SymOp::Sub, SymExpr::literal(0), parse_unary());
    return parse_primary();
  }

  SymExpr parse_primary() {
    skip_ws();
    if (pos >= s.size()) throw Error(Error::Kind::Input, "unexpected end of expression: " + s);
    char c = s[pos];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::int64_t v = 0;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
        v = v * 10 + (s[pos] - '0');
        ++pos;
      }
      return SymExpr::literal(v);
    }
    if (c == '(') {
      ++pos;
      SymExpr e = parse_expr();
      expect(')');
      return e;
    }
    if (ident_start(c)) {
      std::size_t start = pos;
      while (pos < s.size() && ident_char(s[pos])) ++pos;
      std::string name = s.substr(start, pos - start);
      if (name == "max" || name == "min") {
        expect('(');
        SymExpr a = parse_expr();
        expect(',');
        SymExpr b = parse_expr();
        expect(')');
        return SymExpr::apply(name == "max" ? SymOp::Max : SymOp::Min, a, b);
      }
      return SymExpr::symbol(name);
    }
    throw Error(Error::Kind::Input, "bad character in expression: " + s);
  }
};

}  // namespace

SymExpr SymExpr::parse(const std::string& text) {
  Parser p(text);
  SymExpr e = p.parse_expr();
  p.skip_ws();
  if (p.pos != text.size())
    throw Error(Error::Kind::Input, "trailing characters in expression: " + text);
  return e;
}

// ---------------------------------------------------------------------------
// DimValue
// ---------------------------------------------------------------------------

DimValue DimValue::nac() {
  DimValue v;
  v.tag_ = Tag::Nac;
  return v;
}

DimValue DimValue::known(std::int64_t x) {
  DimValue v;
  v.tag_ = Tag::Known;
  v.known_ = x;
  return v;
}

DimValue DimValue::sym(const SymExpr& e) {
  if (e.is_literal()) return known(e.literal_value());
  DimValue v;
  v.tag_ = Tag::Sym;
  v.expr_ = e;
  return v;
}

std::int64_t DimValue::known_value() const {
  if (tag_ != Tag::Known) throw Error(Error::Kind::Internal, "known_value on non-Known");
  return known_;
}

const SymExpr& DimValue::expr() const {
  if (tag_ != Tag::Sym) throw Error(Error::Kind::Internal, "expr on non-Sym");
  return expr_;
}

SymExpr DimValue::as_expr() const {
  if (tag_ == Tag::Known) return SymExpr::literal(known_);
  if (tag_ == Tag::Sym) return expr_;
  throw Error(Error::Kind::Internal, "as_expr on Undef/Nac");
}

std::string DimValue::render() const {
  switch (tag_) {
    case Tag::Undef: return "undef";
    case Tag::Nac: return "nac";
    case Tag::Known: return std::to_string(known_);
    case Tag::Sym: return expr_.render();
  }
  return "?";
}

DimValue DimValue::parse(const std::string& text) {
  if (text == "undef") return undef();
  if (text == "nac") return nac();
  return sym(SymExpr::parse(text));
}

bool DimValue::operator==(const DimValue& other) const {
  if (tag_ != other.tag_) return false;
  if (tag_ == Tag::Known) return known_ == other.known_;
  if (tag_ == Tag::Sym) return expr_ == other.expr_;
  return true;
}

DimValue meet(const DimValue& a, const DimValue& b) {
  if (a.is_undef()) return b;
  if (b.is_undef()) return a;
  if (a.is_nac() || b.is_nac()) return DimValue::nac();
  if (a == b) return a;
  return DimValue::nac();
}

DimValue apply(SymOp op, const DimValue& a, const DimValue& b) {
  if (op == SymOp::FloorDiv && b.is_known() && b.known_value() == 0)
    throw Error(Error::Kind::Analysis, "division by known zero");
  if (a.is_nac() || b.is_nac()) return DimValue::nac();
  if (a.is_undef() || b.is_undef()) return DimValue::undef();
  return DimValue::sym(SymExpr::apply(op, a.as_expr(), b.as_expr()));
}

bool lattice_le(const DimValue& a, const DimValue& b) {
  return a.is_nac() || b.is_undef() || a == b;
}

// ---------------------------------------------------------------------------
// SymbolTable
// ---------------------------------------------------------------------------

void SymbolTable::declare(const std::string& name, Role role) {
  auto [it, inserted] = symbols_.emplace(name, role);
  if (!inserted && it->second != role)
    throw Error(Error::Kind::Input, "symbol declared twice with different roles: " + name);
}

bool SymbolTable::contains(const std::string& name) const { return symbols_.count(name) > 0; }

SymbolTable::Role SymbolTable::role(const std::string& name) const {
  auto it = symbols_.find(name);
  if (it == symbols_.end()) throw Error(Error::Kind::Internal, "unknown symbol: " + name);
  return it->second;
}

std::string SymbolTable::fresh(const std::string& stem) {
  std::string name = "$" + stem;
  while (symbols_.count(name) > 0) name = "$" + stem + "_" + std::to_string(counter_++);
  symbols_.emplace(name, Role::Generated);
  return name;
}

}  // namespace dyndag
