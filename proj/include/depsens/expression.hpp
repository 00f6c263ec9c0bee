#pragma once
// Arithmetic expression language for user-defined model outputs: +,-,*,/,^
// (right-associative), unary minus, abs/exp/sqrt/log, literals, and variables
// x1..xd.  Parse errors carry line/column; evaluation errors carry the
// operator position.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace depsens {

struct source_pos {
  int line = 1;
  int col = 1;
};

class parse_error : public std::runtime_error {
 public:
  parse_error(const std::string& msg, source_pos p)
      : std::runtime_error(msg + " at line " + std::to_string(p.line) + ", column " +
                           std::to_string(p.col)),
        pos(p) {}
  source_pos pos;
};

class expr_eval_error : public std::runtime_error {
 public:
  expr_eval_error(const std::string& msg, source_pos p)
      : std::runtime_error(msg + " at line " + std::to_string(p.line) + ", column " +
                           std::to_string(p.col)),
        pos(p) {}
  source_pos pos;
};

class expr {
 public:
  enum class op {
    number, variable, add, sub, mul, div, pow, neg, f_abs, f_exp, f_sqrt, f_log
  };

  expr(op o, source_pos p) : op_(o), pos_(p) {}
  static expr number(double v, source_pos p = {}) {
    expr e(op::number, p);
    e.value_ = v;
    return e;
  }
  static expr variable(int index0, source_pos p = {}) {
    expr e(op::variable, p);
    e.var_ = index0;
    return e;
  }
  static expr unary(op o, expr a, source_pos p = {}) {
    expr e(o, p);
    e.kids_.push_back(std::move(a));
    return e;
  }
  static expr binary(op o, expr a, expr b, source_pos p = {}) {
    expr e(o, p);
    e.kids_.push_back(std::move(a));
    e.kids_.push_back(std::move(b));
    return e;
  }

  op kind() const { return op_; }
  double value() const { return value_; }
  int var_index() const { return var_; }
  const expr& child(std::size_t i) const { return kids_[i]; }
  source_pos pos() const { return pos_; }

  // Largest 0-based variable index referenced, or -1.
  int max_variable() const {
    int m = op_ == op::variable ? var_ : -1;
    for (const auto& k : kids_) m = std::max(m, k.max_variable());
    return m;
  }

  bool operator==(const expr& o) const {
    if (op_ != o.op_) return false;
    if (op_ == op::number) return value_ == o.value_;
    if (op_ == op::variable) return var_ == o.var_;
    if (kids_.size() != o.kids_.size()) return false;
    for (std::size_t i = 0; i < kids_.size(); ++i)
      if (!(kids_[i] == o.kids_[i])) return false;
    return true;
  }

  double evaluate(std::span<const double> x) const {
    switch (op_) {
      case op::number:
        return value_;
      case op::variable:
        if (var_ < 0 || static_cast<std::size_t>(var_) >= x.size())
          throw expr_eval_error("variable index out of range", pos_);
        return x[static_cast<std::size_t>(var_)];
      case op::add:
        return kids_[0].evaluate(x) + kids_[1].evaluate(x);
      case op::sub:
        return kids_[0].evaluate(x) - kids_[1].evaluate(x);
      case op::mul:
        return kids_[0].evaluate(x) * kids_[1].evaluate(x);
      case op::div: {
        const double den = kids_[1].evaluate(x);
        if (den == 0.0) throw expr_eval_error("division by zero", pos_);
        return kids_[0].evaluate(x) / den;
      }
      case op::pow: {
        const double r = std::pow(kids_[0].evaluate(x), kids_[1].evaluate(x));
        if (!std::isfinite(r)) throw expr_eval_error("power out of domain", pos_);
        return r;
      }
      case op::neg:
        return -kids_[0].evaluate(x);
      case op::f_abs:
        return std::abs(kids_[0].evaluate(x));
      case op::f_exp: {
        const double r = std::exp(kids_[0].evaluate(x));
        if (!std::isfinite(r)) throw expr_eval_error("exp overflow", pos_);
        return r;
      }
      case op::f_sqrt: {
        const double a = kids_[0].evaluate(x);
        if (a < 0.0) throw expr_eval_error("sqrt of negative value", pos_);
        return std::sqrt(a);
      }
      case op::f_log: {
        const double a = kids_[0].evaluate(x);
        if (a <= 0.0) throw expr_eval_error("log of non-positive value", pos_);
        return std::log(a);
      }
    }
    throw std::logic_error("expr::evaluate: unknown node");
  }

  // Minimal-parenthesis rendering; re-parsing the result reproduces the tree.
  std::string print() const { return print_prec(0); }

 private:
  // precedence: add/sub 1, mul/div 2, neg 3, pow 4, atoms 5
  int prec() const {
    switch (op_) {
      case op::add:
      case op::sub:
        return 1;
      case op::mul:
      case op::div:
        return 2;
      case op::neg:
        return 3;
      case op::pow:
        return 4;
      default:
        return 5;
    }
  }

  std::string print_prec(int need) const {
    std::string s;
    switch (op_) {
      case op::number: {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", value_);
        s = buf;
        break;
      }
      case op::variable:
        s = "x" + std::to_string(var_ + 1);
        break;
      case op::add:
        s = kids_[0].print_prec(1) + " + " + kids_[1].print_prec(2);
        break;
      case op::sub:
        s = kids_[0].print_prec(1) + " - " + kids_[1].print_prec(2);
        break;
      case op::mul:
        s = kids_[0].print_prec(2) + "*" + kids_[1].print_prec(3);
        break;
      case op::div:
        s = kids_[0].print_prec(2) + "/" + kids_[1].print_prec(3);
        break;
      case op::neg:
        s = "-" + kids_[0].print_prec(4);
        break;
      case op::pow:
        s = kids_[0].print_prec(5) + "^" + kids_[1].print_prec(3);
        break;
      case op::f_abs:
        return "abs(" + kids_[0].print_prec(0) + ")";
      case op::f_exp:
        return "exp(" + kids_[0].print_prec(0) + ")";
      case op::f_sqrt:
        return "sqrt(" + kids_[0].print_prec(0) + ")";
      case op::f_log:
        return "log(" + kids_[0].print_prec(0) + ")";
    }
    if (prec() < need) return "(" + s + ")";
    return s;
  }

  op op_;
  source_pos pos_;
  double value_ = 0.0;
  int var_ = -1;
  std::vector<expr> kids_;
};

namespace detail {

class expr_parser {
 public:
  explicit expr_parser(std::string_view src) : src_(src) {}

  expr parse() {
    skip_ws();
    expr e = parse_sum();
    skip_ws();
    if (!at_end()) fail("unexpected trailing input");
    return e;
  }

 private:
  std::string_view src_;
  std::size_t i_ = 0;
  source_pos pos_;

  bool at_end() const { return i_ >= src_.size(); }
  char peek() const { return at_end() ? '\0' : src_[i_]; }
  char advance() {
    char c = src_[i_++];
    if (c == '\n') {
      ++pos_.line;
      pos_.col = 1;
    } else {
      ++pos_.col;
    }
    return c;
  }
  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) advance();
  }
  [[noreturn]] void fail(const std::string& msg) const { throw parse_error(msg, pos_); }

  bool consume(char c) {
    skip_ws();
    if (peek() == c) {
      advance();
      return true;
    }
    return false;
  }

  expr parse_sum() {
    expr lhs = parse_term();
    for (;;) {
      skip_ws();
      source_pos p = pos_;
      if (consume('+'))
        lhs = expr::binary(expr::op::add, std::move(lhs), parse_term(), p);
      else if (consume('-'))
        lhs = expr::binary(expr::op::sub, std::move(lhs), parse_term(), p);
      else
        return lhs;
    }
  }

  expr parse_term() {
    expr lhs = parse_unary();
    for (;;) {
      skip_ws();
      source_pos p = pos_;
      if (consume('*'))
        lhs = expr::binary(expr::op::mul, std::move(lhs), parse_unary(), p);
      else if (consume('/'))
        lhs = expr::binary(expr::op::div, std::move(lhs), parse_unary(), p);
      else
        return lhs;
    }
  }

  expr parse_unary() {
    skip_ws();
    source_pos p = pos_;
    if (consume('-')) return expr::unary(expr::op::neg, parse_unary(), p);
    return parse_power();
  }

  expr parse_power() {
    expr base = parse_atom();
    skip_ws();
    source_pos p = pos_;
    if (consume('^')) return expr::binary(expr::op::pow, std::move(base), parse_unary(), p);
    return base;
  }

  expr parse_atom() {
    skip_ws();
    if (at_end()) fail("unexpected end of input");
    source_pos p = pos_;
    char c = peek();
    if (c == '(') {
      advance();
      expr e = parse_sum();
      if (!consume(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number(p);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident(p);
    fail(std::string("unexpected character '") + c + "'");
  }

  expr parse_number(source_pos p) {
    std::string tok;
    while (!at_end() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.'))
      tok += advance();
    if (!at_end() && (peek() == 'e' || peek() == 'E')) {
      std::string mant = tok;
      std::size_t save_i = i_;
      source_pos save_p = pos_;
      tok += advance();
      if (!at_end() && (peek() == '+' || peek() == '-')) tok += advance();
      if (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
        while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) tok += advance();
      } else {  // not an exponent after all
        tok = mant;
        i_ = save_i;
        pos_ = save_p;
      }
    }
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument("");
      return expr::number(v, p);
    } catch (const std::exception&) {
      throw parse_error("malformed number '" + tok + "'", p);
    }
  }

  expr parse_ident(source_pos p) {
    std::string name;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_'))
      name += advance();
    if (name.size() >= 2 && name[0] == 'x' &&
        std::all_of(name.begin() + 1, name.end(),
                    [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
      int idx = std::stoi(name.substr(1));
      if (idx < 1) throw parse_error("variable index must be >= 1", p);
      return expr::variable(idx - 1, p);
    }
    expr::op fn;
    if (name == "abs")
      fn = expr::op::f_abs;
    else if (name == "exp")
      fn = expr::op::f_exp;
    else if (name == "sqrt")
      fn = expr::op::f_sqrt;
    else if (name == "log")
      fn = expr::op::f_log;
    else
      throw parse_error("unknown identifier '" + name + "'", p);
    if (!consume('(')) throw parse_error("expected '(' after function name", p);
    expr arg = parse_sum();
    skip_ws();
    if (peek() == ',') throw parse_error("function '" + name + "' takes one argument", pos_);
    if (!consume(')')) fail("expected ')'");
    return expr::unary(fn, std::move(arg), p);
  }
};

}  // namespace detail

inline expr parse_expression(std::string_view source) {
  detail::expr_parser p(source);
  return p.parse();
}

}  // namespace depsens
