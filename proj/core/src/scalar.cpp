#include "pbwpcn/scalar.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <fmt/core.h>

#include "pbwpcn/errors.hpp"

namespace pbwpcn {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kInvE = 1.0 / std::numbers::e;

// Branch-point series for v = W + 1 in p = sqrt(2 (e x + 1)).
double branch_series(double q) {
  const double p = std::sqrt(2.0 * q);
  return p * (1.0 + p * (-1.0 / 3.0 +
                         p * (11.0 / 72.0 +
                              p * (-43.0 / 540.0 + p * (769.0 / 17280.0 + p * (-221.0 / 8505.0))))));
}

// (v - 1) e^v + 1 without cancellation for small v.
double shifted_residual_core(double v) {
  if (std::abs(v) < 0.5) {
    // sum_{k>=2} (k-1)/k! v^k
    double term = v;  // v^k / k! running, starting at k = 1
    double sum = 0.0;
    for (int k = 2; k < 30; ++k) {
      term *= v / k;
      const double add = (k - 1) * term;
      sum += add;
      if (std::abs(add) <= kEps * std::abs(sum)) break;
    }
    return sum;
  }
  return (v - 1.0) * std::exp(v) + 1.0;
}

// v = W0((q - 1)/e) + 1 for 0 <= q < 1, by Halley on
// h(v) = (v - 1) e^v + 1 - q, whose root is exactly W + 1.
double lambert_v_below_zero(double q, const RootConfig& cfg) {
  if (q <= 0.0) return 0.0;
  double v = branch_series(q);
  // Far from the branch point the truncated series over-shoots; clamp into
  // the valid range v in (0, 1).
  if (!(v > 0.0) || v >= 1.0) v = 0.5;
  if (q < 1e-10) return v;  // series error ~ q^{7/2}
  for (int it = 0; it < cfg.max_iter; ++it) {
    const double ev = std::exp(v);
    const double h = shifted_residual_core(v) - q;
    const double d1 = v * ev;
    const double d2 = (v + 1.0) * ev;
    const double step = 2.0 * h * d1 / (2.0 * d1 * d1 - h * d2);
    double next = v - step;
    if (!(next > 0.0)) next = 0.5 * v;
    if (next >= 1.0) next = 0.5 * (v + 1.0);
    if (std::abs(next - v) <= 4.0 * kEps * next) return next;
    v = next;
  }
  throw ConvergenceError(fmt::format("lambert_w0: no convergence for q={}", q));
}

// W0(x) for x >= 0 by Halley on w e^w - x.
double lambert_nonnegative(double x, const RootConfig& cfg) {
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return x;
  double w;
  if (x < 3.0) {
    w = std::log1p(x);
    w *= 1.0 - std::log1p(w) / (2.0 + w);
  } else {
    const double l1 = std::log(x);
    const double l2 = std::log(l1);
    w = l1 - l2 + l2 / l1;
  }
  for (int it = 0; it < cfg.max_iter; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    const double step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
    const double next = w - step;
    if (std::abs(step) <= 4.0 * kEps * (1.0 + std::abs(next))) return next;
    w = next;
  }
  throw ConvergenceError(fmt::format("lambert_w0: no convergence for x={}", x));
}

// (1 + u) log1p(u) - u, accurate for small u.
double entropy_gap(double u) {
  if (u < 1e-3) {
    return u * u * (0.5 + u * (-1.0 / 6.0 + u * (1.0 / 12.0 + u * (-1.0 / 20.0 + u / 30.0))));
  }
  return (1.0 + u) * std::log1p(u) - u;
}

}  // namespace

void RootConfig::validate() const {
  if (!(step_tol > 0.0)) throw std::invalid_argument("RootConfig: step_tol must be > 0");
  if (max_iter < 1) throw std::invalid_argument("RootConfig: max_iter must be >= 1");
}

double lambert_w0(double x, const RootConfig& cfg) {
  if (std::isnan(x)) throw DomainError("lambert_w0: NaN argument");
  if (x >= 0.0) return lambert_nonnegative(x, cfg);
  // Arguments within rounding of the branch point are treated as on it.
  const double q = std::fma(std::numbers::e, x, 1.0);
  if (q < 0.0) {
    if (q > -8.0 * kEps) return -1.0;
    throw DomainError(fmt::format("lambert_w0: x={} is below the branch point -1/e", x));
  }
  return lambert_v_below_zero(q, cfg) - 1.0;
}

double lambert_z_minus_one(double a, const RootConfig& cfg) {
  if (!(a >= 0.0)) throw DomainError(fmt::format("lambert_z_minus_one: a={} must be >= 0", a));
  if (a < 1.0) return std::expm1(lambert_v_below_zero(a, cfg));
  const double w = lambert_nonnegative((a - 1.0) * kInvE, cfg);
  return std::exp(w + 1.0) - 1.0;
}

double solve_z_minus_one(double x, double y, const RootConfig& cfg) {
  if (!(y >= 0.0)) throw DomainError(fmt::format("solve_z: Y={} must be >= 0", y));
  if (!(x > y)) throw DomainError(fmt::format("solve_z: need X > Y (X={}, Y={})", x, y));
  if (std::isinf(x)) throw DomainError("solve_z: X must be finite");

  // r(u) = h(u) + Y u - (X - Y), z = 1 + u; r is convex and increasing on u > 0.
  const double gap = x - y;
  auto residual = [&](double u) { return entropy_gap(u) + y * u - gap; };

  double lo = 0.0;
  double hi = x + 1.0;
  // h(u) <= u^2/2, so the root of u^2/2 + Y u = X - Y is a lower bound.
  double u = 2.0 * gap / (y + std::sqrt(y * y + 2.0 * gap));

  // Stop on the step, not the residual: with Y = 0 the slope vanishes as
  // u -> 0, so a small residual says little about the error in u.
  for (int it = 0; it < cfg.max_iter; ++it) {
    const double r = residual(u);
    if (r == 0.0) return u;
    if (r < 0.0) lo = u; else hi = u;
    const double slope = std::log1p(u) + y;
    double next = slope > 0.0 ? u - r / slope : 0.5 * (lo + hi);
    const bool newton = next > lo && next < hi;
    if (!newton) next = 0.5 * (lo + hi);
    const double step = std::abs(next - u);
    if (step <= 4.0 * kEps * next || (newton && step <= cfg.step_tol * next)) return next;
    u = next;
  }
  throw ConvergenceError(
      fmt::format("solve_z: no convergence for X={}, Y={} (bracket z in [{}, {}])", x, y, 1.0 + lo, 1.0 + hi));
}

double solve_z(double x, double y, const RootConfig& cfg) {
  return 1.0 + solve_z_minus_one(x, y, cfg);
}

}  // namespace pbwpcn
