#include "oplab/expression.hpp"

#include <cctype>
#include <cmath>
#include <vector>

namespace oplab {

struct Expression::Node {
  enum class Op {
    constant, var_x, var_y, var_z,
    add, sub, mul, div, neg,
    abs, log, exp, sqrt, min, max
  };
  Op op = Op::constant;
  double value = 0.0;
  std::shared_ptr<const Node> a, b;

  double eval(const std::array<double, 3>& p) const {
    switch (op) {
      case Op::constant: return value;
      case Op::var_x: return p[0];
      case Op::var_y: return p[1];
      case Op::var_z: return p[2];
      case Op::add: return a->eval(p) + b->eval(p);
      case Op::sub: return a->eval(p) - b->eval(p);
      case Op::mul: return a->eval(p) * b->eval(p);
      case Op::div: return a->eval(p) / b->eval(p);
      case Op::neg: return -a->eval(p);
      case Op::abs: return std::abs(a->eval(p));
      case Op::log: return std::log(a->eval(p));
      case Op::exp: return std::exp(a->eval(p));
      case Op::sqrt: return std::sqrt(a->eval(p));
      case Op::min: return std::min(a->eval(p), b->eval(p));
      case Op::max: return std::max(a->eval(p), b->eval(p));
    }
    return 0.0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Op = Expression::Node::Op;

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr, double v = 0.0) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->value = v;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr run() {
    auto e = expr();
    skip_ws();
    if (pos_ != s_.size())
      throw ParseError("unexpected character '" + std::string(1, s_[pos_]) +
                       "' at position " + std::to_string(pos_));
    return e;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    auto lhs = term();
    for (;;) {
      if (eat('+')) lhs = make(Op::add, lhs, term());
      else if (eat('-')) lhs = make(Op::sub, lhs, term());
      else return lhs;
    }
  }
  NodePtr term() {
    auto lhs = unary();
    for (;;) {
      if (eat('*')) lhs = make(Op::mul, lhs, unary());
      else if (eat('/')) lhs = make(Op::div, lhs, unary());
      else return lhs;
    }
  }
  NodePtr unary() {
    if (eat('-')) return make(Op::neg, unary());
    return primary();
  }
  NodePtr primary() {
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of expression");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      auto e = expr();
      if (!eat(')')) throw ParseError("missing ')' at position " + std::to_string(pos_));
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      const double v = std::stod(s_.substr(pos_), &used);
      pos_ += used;
      return make(Op::constant, nullptr, nullptr, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t e = pos_;
      while (e < s_.size() && std::isalnum(static_cast<unsigned char>(s_[e]))) ++e;
      const std::string name = s_.substr(pos_, e - pos_);
      pos_ = e;
      if (name == "x") return make(Op::var_x);
      if (name == "y") return make(Op::var_y);
      if (name == "z") return make(Op::var_z);
      if (name == "pi") return make(Op::constant, nullptr, nullptr, M_PI);
      // function call
      if (!eat('(')) throw ParseError("unknown symbol '" + name + "'");
      auto a = expr();
      NodePtr b;
      if (name == "min" || name == "max") {
        if (!eat(',')) throw ParseError(name + " takes two arguments");
        b = expr();
      }
      if (!eat(')')) throw ParseError("missing ')' after " + name);
      if (name == "abs") return make(Op::abs, a);
      if (name == "log") return make(Op::log, a);
      if (name == "exp") return make(Op::exp, a);
      if (name == "sqrt") return make(Op::sqrt, a);
      if (name == "min") return make(Op::min, a, b);
      if (name == "max") return make(Op::max, a, b);
      throw ParseError("unknown function '" + name + "'");
    }
    throw ParseError("unexpected character '" + std::string(1, c) + "' at position " +
                     std::to_string(pos_));
  }
};

}  // namespace

Expression Expression::parse(const std::string& text) {
  Expression e;
  e.root_ = Parser(text).run();
  e.text_ = text;
  return e;
}

double Expression::eval(const std::array<double, 3>& xyz) const {
  if (!root_) throw ArgumentError("empty expression");
  return root_->eval(xyz);
}

}  // namespace oplab
