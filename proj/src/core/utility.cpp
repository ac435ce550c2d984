#include "freqadmm/core/utility.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "freqadmm/core/errors.hpp"

namespace freqadmm {

namespace {

double logistic(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double softplus_value(double t) {
  return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double pole_distance(const UtilityFunction& f, double y) {
  const double t = y - f.center;
  if (t == 0.0) {
    throw DomainError("reciprocal utility evaluated at its pole x = " +
                      std::to_string(f.center - f.shift));
  }
  return t;
}

// Convex-form value and derivatives at y = x + shift.
double convex_value(const UtilityFunction& f, double y) {
  switch (f.kind) {
    case UtilityKind::QuadCubic: {
      const double q = f.scale * y + f.offset;
      return q * q + f.cubic * y * y * y - f.constant;
    }
    case UtilityKind::Exp:
      return std::exp(y - f.center);
    case UtilityKind::Reciprocal:
      return 1.0 / pole_distance(f, y);
    case UtilityKind::Softplus:
      return softplus_value(y - f.center);
  }
  throw std::logic_error("unknown utility kind");
}

double convex_first(const UtilityFunction& f, double y) {
  switch (f.kind) {
    case UtilityKind::QuadCubic:
      return 2.0 * f.scale * (f.scale * y + f.offset) + 3.0 * f.cubic * y * y;
    case UtilityKind::Exp:
      return std::exp(y - f.center);
    case UtilityKind::Reciprocal: {
      const double t = pole_distance(f, y);
      return -1.0 / (t * t);
    }
    case UtilityKind::Softplus:
      return logistic(y - f.center);
  }
  throw std::logic_error("unknown utility kind");
}

double convex_second(const UtilityFunction& f, double y) {
  switch (f.kind) {
    case UtilityKind::QuadCubic:
      return 2.0 * f.scale * f.scale + 6.0 * f.cubic * y;
    case UtilityKind::Exp:
      return std::exp(y - f.center);
    case UtilityKind::Reciprocal: {
      const double t = pole_distance(f, y);
      return 2.0 / (t * t * t);
    }
    case UtilityKind::Softplus: {
      const double s = logistic(y - f.center);
      return s * (1.0 - s);
    }
  }
  throw std::logic_error("unknown utility kind");
}

double signed_for(Form form, double convex) {
  return form == Form::Convex ? convex : -convex;
}

}  // namespace

UtilityFunction UtilityFunction::quad_cubic(double scale, double offset,
                                            double cubic, double constant) {
  UtilityFunction f;
  f.kind = UtilityKind::QuadCubic;
  f.scale = scale;
  f.offset = offset;
  f.cubic = cubic;
  f.constant = constant;
  return f;
}

UtilityFunction UtilityFunction::neg_quad(double vertex, double constant) {
  return quad_cubic(1.0, -vertex, 0.0, constant);
}

UtilityFunction UtilityFunction::exp(double center) {
  UtilityFunction f;
  f.kind = UtilityKind::Exp;
  f.center = center;
  return f;
}

UtilityFunction UtilityFunction::reciprocal(double center) {
  UtilityFunction f;
  f.kind = UtilityKind::Reciprocal;
  f.center = center;
  return f;
}

UtilityFunction UtilityFunction::softplus(double center) {
  UtilityFunction f;
  f.kind = UtilityKind::Softplus;
  f.center = center;
  return f;
}

UtilityFunction UtilityFunction::shifted(double delta) const {
  UtilityFunction out = *this;
  out.shift += delta;
  return out;
}

double eval_utility(const UtilityFunction& f, double x, Form form) {
  return signed_for(form, convex_value(f, x + f.shift));
}

double eval_derivative(const UtilityFunction& f, double x, Form form) {
  return signed_for(form, convex_first(f, x + f.shift));
}

double eval_second_derivative(const UtilityFunction& f, double x, Form form) {
  return signed_for(form, convex_second(f, x + f.shift));
}

double domain_lower_bound(const UtilityFunction& f) {
  if (f.kind == UtilityKind::Reciprocal) return f.center - f.shift;
  return -std::numeric_limits<double>::infinity();
}

const char* kind_name(UtilityKind kind) {
  switch (kind) {
    case UtilityKind::QuadCubic: return "quad_cubic";
    case UtilityKind::Exp: return "exp";
    case UtilityKind::Reciprocal: return "reciprocal";
    case UtilityKind::Softplus: return "softplus";
  }
  return "?";
}

UtilityKind kind_from_name(const std::string& name) {
  if (name == "quad_cubic") return UtilityKind::QuadCubic;
  if (name == "exp") return UtilityKind::Exp;
  if (name == "reciprocal") return UtilityKind::Reciprocal;
  if (name == "softplus") return UtilityKind::Softplus;
  throw std::invalid_argument("unknown utility kind '" + name + "'");
}

std::string describe(const UtilityFunction& f) {
  std::ostringstream os;
  const std::string y =
      f.shift == 0.0 ? "x" : "(x" + std::string(f.shift < 0 ? " - " : " + ") +
                                 std::to_string(std::abs(f.shift)) + ")";
  switch (f.kind) {
    case UtilityKind::QuadCubic:
      os << "h(x) = " << f.constant << " - (" << f.scale << "*" << y << " + "
         << f.offset << ")^2 - " << f.cubic << "*" << y << "^3";
      break;
    case UtilityKind::Exp:
      os << "f(x) = exp(" << y << " - " << f.center << ")";
      break;
    case UtilityKind::Reciprocal:
      os << "f(x) = 1/(" << y << " - " << f.center << ")";
      break;
    case UtilityKind::Softplus:
      os << "f(x) = log(1 + exp(" << y << " - " << f.center << "))";
      break;
  }
  return os.str();
}

}  // namespace freqadmm
