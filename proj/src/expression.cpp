#include "fisherq/expression.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace fisherq {

namespace {
enum class Kind { constant, var, add, sub, mul, div, pow, neg, sin, cos, exp };
}  // namespace

struct Expr::Node {
  Kind kind;
  double value = 0.0;  // constant
  int var = 0;         // 0:x 1:y 2:z 3:t
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make_const(double v) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = Kind::constant;
  n->value = v;
  return n;
}

NodePtr make_var(int idx) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = Kind::var;
  n->var = idx;
  return n;
}

bool is_const(const NodePtr& n, double v) {
  return n->kind == Kind::constant && n->value == v;
}

NodePtr make_node(Kind k, NodePtr a, NodePtr b = nullptr) {
  // light constant folding keeps symbolic derivatives compact
  if (a && a->kind == Kind::constant && (!b || b->kind == Kind::constant)) {
    double x = a->value, y = b ? b->value : 0.0;
    switch (k) {
      case Kind::add: return make_const(x + y);
      case Kind::sub: return make_const(x - y);
      case Kind::mul: return make_const(x * y);
      case Kind::div: return make_const(x / y);
      case Kind::pow: return make_const(std::pow(x, y));
      case Kind::neg: return make_const(-x);
      case Kind::sin: return make_const(std::sin(x));
      case Kind::cos: return make_const(std::cos(x));
      case Kind::exp: return make_const(std::exp(x));
      default: break;
    }
  }
  switch (k) {
    case Kind::add:
      if (is_const(a, 0.0)) return b;
      if (is_const(b, 0.0)) return a;
      break;
    case Kind::sub:
      if (is_const(b, 0.0)) return a;
      break;
    case Kind::mul:
      if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
      if (is_const(a, 1.0)) return b;
      if (is_const(b, 1.0)) return a;
      break;
    case Kind::div:
      if (is_const(a, 0.0)) return make_const(0.0);
      if (is_const(b, 1.0)) return a;
      break;
    case Kind::pow:
      if (is_const(b, 1.0)) return a;
      if (is_const(b, 0.0)) return make_const(1.0);
      break;
    default:
      break;
  }
  auto n = std::make_shared<Expr::Node>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

double eval_node(const Expr::Node* n, double x, double y, double z, double t) {
  switch (n->kind) {
    case Kind::constant: return n->value;
    case Kind::var:
      switch (n->var) {
        case 0: return x;
        case 1: return y;
        case 2: return z;
        default: return t;
      }
    case Kind::add:
      return eval_node(n->a.get(), x, y, z, t) +
             eval_node(n->b.get(), x, y, z, t);
    case Kind::sub:
      return eval_node(n->a.get(), x, y, z, t) -
             eval_node(n->b.get(), x, y, z, t);
    case Kind::mul:
      return eval_node(n->a.get(), x, y, z, t) *
             eval_node(n->b.get(), x, y, z, t);
    case Kind::div:
      return eval_node(n->a.get(), x, y, z, t) /
             eval_node(n->b.get(), x, y, z, t);
    case Kind::pow:
      return std::pow(eval_node(n->a.get(), x, y, z, t),
                      eval_node(n->b.get(), x, y, z, t));
    case Kind::neg: return -eval_node(n->a.get(), x, y, z, t);
    case Kind::sin: return std::sin(eval_node(n->a.get(), x, y, z, t));
    case Kind::cos: return std::cos(eval_node(n->a.get(), x, y, z, t));
    case Kind::exp: return std::exp(eval_node(n->a.get(), x, y, z, t));
  }
  return 0.0;
}

NodePtr diff_node(const NodePtr& n, int var) {
  switch (n->kind) {
    case Kind::constant: return make_const(0.0);
    case Kind::var: return make_const(n->var == var ? 1.0 : 0.0);
    case Kind::add:
      return make_node(Kind::add, diff_node(n->a, var), diff_node(n->b, var));
    case Kind::sub:
      return make_node(Kind::sub, diff_node(n->a, var), diff_node(n->b, var));
    case Kind::mul:
      return make_node(Kind::add,
                       make_node(Kind::mul, diff_node(n->a, var), n->b),
                       make_node(Kind::mul, n->a, diff_node(n->b, var)));
    case Kind::div:
      return make_node(
          Kind::div,
          make_node(Kind::sub,
                    make_node(Kind::mul, diff_node(n->a, var), n->b),
                    make_node(Kind::mul, n->a, diff_node(n->b, var))),
          make_node(Kind::mul, n->b, n->b));
    case Kind::pow: {
      if (n->b->kind != Kind::constant)
        throw ConfigError(
            "expression: d/dx of u^v supported for constant exponents only");
      const double p = n->b->value;
      // p * u^(p-1) * u'
      return make_node(
          Kind::mul, make_const(p),
          make_node(Kind::mul,
                    make_node(Kind::pow, n->a, make_const(p - 1.0)),
                    diff_node(n->a, var)));
    }
    case Kind::neg: return make_node(Kind::neg, diff_node(n->a, var));
    case Kind::sin:
      return make_node(Kind::mul, make_node(Kind::cos, n->a),
                       diff_node(n->a, var));
    case Kind::cos:
      return make_node(Kind::neg,
                       make_node(Kind::mul, make_node(Kind::sin, n->a),
                                 diff_node(n->a, var)));
    case Kind::exp:
      return make_node(Kind::mul, make_node(Kind::exp, n->a),
                       diff_node(n->a, var));
  }
  return make_const(0.0);
}

bool depends_node(const Expr::Node* n, int var) {
  switch (n->kind) {
    case Kind::constant: return false;
    case Kind::var: return n->var == var;
    default:
      if (n->a && depends_node(n->a.get(), var)) return true;
      if (n->b && depends_node(n->b.get(), var)) return true;
      return false;
  }
}

std::string str_node(const Expr::Node* n) {
  std::ostringstream os;
  auto bin = [&](const char* op) {
    os << "(" << str_node(n->a.get()) << op << str_node(n->b.get()) << ")";
  };
  switch (n->kind) {
    case Kind::constant: os << n->value; break;
    case Kind::var: os << "xyzt"[n->var]; break;
    case Kind::add: bin("+"); break;
    case Kind::sub: bin("-"); break;
    case Kind::mul: bin("*"); break;
    case Kind::div: bin("/"); break;
    case Kind::pow: bin("^"); break;
    case Kind::neg: os << "(-" << str_node(n->a.get()) << ")"; break;
    case Kind::sin: os << "sin(" << str_node(n->a.get()) << ")"; break;
    case Kind::cos: os << "cos(" << str_node(n->a.get()) << ")"; break;
    case Kind::exp: os << "exp(" << str_node(n->a.get()) << ")"; break;
  }
  return os.str();
}

class Parser {
 public:
  explicit Parser(const std::string& src) : src_(src) {}

  NodePtr parse() {
    NodePtr e = parse_expr();
    skip_ws();
    if (pos_ != src_.size())
      throw ConfigError("expression: trailing input at '" +
                        src_.substr(pos_) + "'");
    return e;
  }

 private:
  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      skip_ws();
      if (consume('+'))
        lhs = make_node(Kind::add, lhs, parse_term());
      else if (consume('-'))
        lhs = make_node(Kind::sub, lhs, parse_term());
      else
        return lhs;
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_factor();
    for (;;) {
      skip_ws();
      if (consume('*'))
        lhs = make_node(Kind::mul, lhs, parse_factor());
      else if (consume('/'))
        lhs = make_node(Kind::div, lhs, parse_factor());
      else
        return lhs;
    }
  }

  NodePtr parse_factor() {
    NodePtr base = parse_unary();
    skip_ws();
    if (consume('^')) return make_node(Kind::pow, base, parse_factor());
    return base;
  }

  NodePtr parse_unary() {
    skip_ws();
    if (consume('-')) return make_node(Kind::neg, parse_unary());
    if (consume('+')) return parse_unary();
    return parse_primary();
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= src_.size())
      throw ConfigError("expression: unexpected end of input");
    char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t used = 0;
      double v = std::stod(src_.substr(pos_), &used);
      pos_ += used;
      return make_const(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_'))
        ++pos_;
      std::string name = src_.substr(start, pos_ - start);
      skip_ws();
      if (name == "sin" || name == "cos" || name == "exp") {
        if (!consume('('))
          throw ConfigError("expression: expected '(' after " + name);
        NodePtr arg = parse_expr();
        expect(')');
        Kind k = name == "sin" ? Kind::sin
                               : (name == "cos" ? Kind::cos : Kind::exp);
        return make_node(k, arg);
      }
      if (name == "x") return make_var(0);
      if (name == "y") return make_var(1);
      if (name == "z") return make_var(2);
      if (name == "t") return make_var(3);
      if (name == "pi") return make_const(kPi);
      throw ConfigError("expression: unknown identifier '" + name + "'");
    }
    if (consume('(')) {
      NodePtr e = parse_expr();
      expect(')');
      return e;
    }
    throw ConfigError(std::string("expression: unexpected character '") + c +
                      "'");
  }

  void skip_ws() {
    while (pos_ < src_.size() &&
           std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
  }
  bool consume(char c) {
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    skip_ws();
    if (!consume(c))
      throw ConfigError(std::string("expression: expected '") + c + "'");
  }

  const std::string& src_;
  size_t pos_ = 0;
};

int var_index(const std::string& var) {
  if (var == "x") return 0;
  if (var == "y") return 1;
  if (var == "z") return 2;
  if (var == "t") return 3;
  throw ConfigError("expression: unknown variable '" + var + "'");
}

}  // namespace

Expr::Expr() : node_(make_const(0.0)) {}

Expr Expr::parse(const std::string& source) { return Expr(Parser(source).parse()); }

Expr Expr::constant(double v) { return Expr(make_const(v)); }

double Expr::eval(double x, double y, double z, double t) const {
  return eval_node(node_.get(), x, y, z, t);
}

Expr Expr::derivative(const std::string& var) const {
  return Expr(diff_node(node_, var_index(var)));
}

bool Expr::depends_on(const std::string& var) const {
  return depends_node(node_.get(), var_index(var));
}

bool Expr::is_zero() const { return is_const(node_, 0.0); }

std::string Expr::str() const { return str_node(node_.get()); }

Expr operator+(const Expr& a, const Expr& b) {
  return Expr(make_node(Kind::add, a.node_, b.node_));
}
Expr operator-(const Expr& a, const Expr& b) {
  return Expr(make_node(Kind::sub, a.node_, b.node_));
}
Expr operator*(const Expr& a, const Expr& b) {
  return Expr(make_node(Kind::mul, a.node_, b.node_));
}

RealField sample(const Expr& e, const Grid& grid, double t) {
  return sample_mapped(e, grid, t, 0, grid.ndim);
}

RealField sample_mapped(const Expr& e, const Grid& grid, double t, int axis0,
                        int dims) {
  RealField f(grid);
  const int n = grid.size();
  for (int i = 0; i < n; ++i) {
    auto idx = grid.unflatten(i);
    double q[3] = {0.0, 0.0, 0.0};
    for (int d = 0; d < dims; ++d) {
      const int axis = axis0 + d;
      if (axis < grid.ndim) q[d] = grid.coord(axis, idx[axis]);
    }
    f.values[i] = e.eval(q[0], q[1], q[2], t);
  }
  return f;
}

}  // namespace fisherq
