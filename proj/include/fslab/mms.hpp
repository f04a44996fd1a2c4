#pragma once

#include "fslab/march.hpp"

namespace fslab {

// Manufactured solution u = x^{-1} g(eta), g = eta e^{-eta}, eta = y x^{-(1-m)/2}.
// The forcing makes it an exact solution of the perturbation system.
struct Manufactured {
  double m = 0.0;
  double epsilon = 1e-2;

  double q() const { return 0.5 * (1.0 - m); }
  double u(double x, double y) const;
  double v(double x, double y) const;
  double u_x(double x, double y) const;
  // d_x^k u for k <= 2
  double u_xk(int k, double x, double y) const;
  Vec source(const MarchCoefficients &c, double x, const Vec &y) const;
};

// Max error at x_end after marching the manufactured solution from x = 1.
double manufactured_error(const BackgroundModel &model, double epsilon, Scheme scheme,
                          double dx, const GeometricGrid &grid, double x_end = 2.0);

} // namespace fslab
