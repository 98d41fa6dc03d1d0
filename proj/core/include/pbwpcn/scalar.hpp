#pragma once

// Scalar root-finders behind every closed form in the allocator:
//   * the principal branch W0 of the Lambert W function;
//   * the monotone family  z ln z + (Y - 1) z + 1 = X  on z > 1.
// With Y = 0 the second is solved in closed form by
//   z = exp(W((X - 1) / e) + 1),
// which the tests use as an independent cross-check of solve_z.

namespace pbwpcn {

struct RootConfig {
  double step_tol = 1e-13;  ///< Newton stops once |step| <= step_tol * iterate
  int max_iter = 100;

  void validate() const;
};

/// Principal branch of Lambert W: the w >= -1 with w * exp(w) == x.
/// Throws DomainError for x < -1/e.
double lambert_w0(double x, const RootConfig& cfg = {});

/// Returns z - 1 where z = exp(W0((a - 1) / e) + 1), i.e. the root z > 1 of
/// z ln z - z + 1 = a. Takes `a` directly rather than the Lambert argument so
/// that arguments near the branch point (small a) keep full precision.
double lambert_z_minus_one(double a, const RootConfig& cfg = {});

/// Unique z > 1 with z ln z + (Y - 1) z + 1 = X. Requires Y >= 0 and X > Y.
/// Safeguarded Newton on the bracket [1, X + 2].
double solve_z(double x, double y, const RootConfig& cfg = {});

/// Same root as solve_z, returned as z - 1 (no cancellation for z near 1).
double solve_z_minus_one(double x, double y, const RootConfig& cfg = {});

}  // namespace pbwpcn
