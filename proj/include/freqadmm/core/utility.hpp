#pragma once

#include <string>

namespace freqadmm {

enum class UtilityKind {
  // h(y) = constant - (scale*y + offset)^2 - cubic*y^3
  QuadCubic,
  // convex form f(y) = exp(y - center)
  Exp,
  // convex form f(y) = 1 / (y - center); pole at y == center
  Reciprocal,
  // convex form f(y) = log(1 + exp(y - center))
  Softplus,
};

// Which sign convention an evaluation uses. Devices maximize the utility h;
// the optimality analysis works with the convex form f = -h.
enum class Form { Utility, Convex };

/// A device's private utility of its transmission frequency x (Hz).
///
/// Every evaluation is taken at y = x + shift. The shift is zero for an
/// untampered device and carries the input factor of an input manipulation.
struct UtilityFunction {
  UtilityKind kind = UtilityKind::QuadCubic;
  double scale = 1.0;
  double offset = 0.0;
  double cubic = 0.0;
  double constant = 0.0;
  double center = 9.0;
  double shift = 0.0;

  static UtilityFunction quad_cubic(double scale, double offset, double cubic,
                                    double constant);
  // h(y) = constant - (y - vertex)^2
  static UtilityFunction neg_quad(double vertex, double constant);
  static UtilityFunction exp(double center);
  static UtilityFunction reciprocal(double center);
  static UtilityFunction softplus(double center);

  [[nodiscard]] UtilityFunction shifted(double delta) const;

  friend bool operator==(const UtilityFunction&,
                         const UtilityFunction&) = default;
};

double eval_utility(const UtilityFunction& f, double x,
                    Form form = Form::Utility);
double eval_derivative(const UtilityFunction& f, double x,
                       Form form = Form::Utility);
double eval_second_derivative(const UtilityFunction& f, double x,
                              Form form = Form::Utility);

// Lowest x at which the function is defined on the branch devices operate
// on. For Reciprocal this is the pole (exclusive); -inf otherwise.
double domain_lower_bound(const UtilityFunction& f);

const char* kind_name(UtilityKind kind);
UtilityKind kind_from_name(const std::string& name);
std::string describe(const UtilityFunction& f);

}  // namespace freqadmm
