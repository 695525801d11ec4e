#pragma once

#include <memory>
#include <string>

#include "fisherq/field.hpp"

namespace fisherq {

// Closed-form scalar expressions over the coordinates x, y, z and time t.
// Supported: + - * / ^, sin, cos, exp, numeric literals and the constant pi.
// Expressions are immutable; derivative() differentiates symbolically, which
// keeps gauge transformations and field strengths exact.
class Expr {
 public:
  Expr();  // the zero expression

  static Expr parse(const std::string& source);
  static Expr constant(double v);

  double eval(double x, double y, double z, double t) const;
  double eval(const Vec3& x, double t) const {
    return eval(x[0], x[1], x[2], t);
  }

  // var is one of "x","y","z","t"
  Expr derivative(const std::string& var) const;
  bool depends_on(const std::string& var) const;
  bool is_zero() const;

  std::string str() const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);

  struct Node;

 private:
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

// Samples the expression on a grid at time t. Axes beyond grid.ndim read 0.
RealField sample(const Expr& e, const Grid& grid, double t);

// Samples with the expression coordinates bound to a window of grid axes:
// variable x reads grid axis `axis0`, y reads axis0+1, ... Axes outside the
// window (or beyond ndim) read 0. Used to evaluate single-particle potentials
// at particle I's block of configuration-space coordinates.
RealField sample_mapped(const Expr& e, const Grid& grid, double t, int axis0,
                        int dims);

}  // namespace fisherq
