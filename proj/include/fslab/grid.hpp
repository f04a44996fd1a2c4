#pragma once

#include <cstddef>
#include <vector>

namespace fslab {

using Vec = std::vector<double>;

// y_j = y_max (r^j - 1)/(r^n - 1), j = 0..n. Refinement (sqrt r, 2n) nests.
struct GeometricGrid {
  double y_max = 12.0;
  double ratio = 1.02;
  int n_cells = 0;

  // smallest n so that the first spacing does not exceed first_spacing
  static GeometricGrid fit(double first_spacing, double ratio, double y_max);
  GeometricGrid refined() const;
  Vec points() const;
  double first_spacing() const;
};

// Fornberg weights: w[d][i] approximates the d-th derivative at z from nodes x[i].
std::vector<Vec> fd_weights(double z, const Vec &x, int max_order);

// Precomputed derivative operator of a given order on a fixed grid.
class DiffOp {
public:
  DiffOp() = default;
  DiffOp(const Vec &y, int order, int width);
  Vec apply(const Vec &f) const;
  double at(const Vec &f, int i) const;
  int size() const { return static_cast<int>(start_.size()); }

private:
  int width_ = 0;
  std::vector<int> start_;
  Vec w_;
};

// One-sided derivative of order d at the first node from the first `width` points.
double wall_derivative(const Vec &y, const Vec &f, int order, int width);

double trapz(const Vec &y, const Vec &f);
// trapezoid over the first n points
double trapz_n(const Vec &y, const Vec &f, size_t n);
Vec cumtrapz(const Vec &y, const Vec &f);
// cumulative integral of the local cubic interpolant, fourth order
Vec cumint4(const Vec &y, const Vec &f);

// Thomas algorithm; a sub, b diag, c super. Inputs are consumed.
void solve_tridiagonal(Vec &a, Vec &b, Vec &c, Vec &d, Vec &x);

double max_abs(const Vec &f);

} // namespace fslab
