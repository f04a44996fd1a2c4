#include "fslab/grid.hpp"

#include <algorithm>
#include <cmath>

#include "fslab/errors.hpp"

namespace fslab {

GeometricGrid GeometricGrid::fit(double first_spacing, double ratio, double y_max) {
  if (!(first_spacing > 0 && y_max > first_spacing && ratio >= 1.0))
    throw Error(ErrorKind::InvalidParams, "bad grid spec");
  GeometricGrid g;
  g.y_max = y_max;
  g.ratio = ratio;
  if (ratio == 1.0) {
    g.n_cells = static_cast<int>(std::ceil(y_max / first_spacing));
  } else {
    double n = std::log1p(y_max * (ratio - 1.0) / first_spacing) / std::log(ratio);
    g.n_cells = static_cast<int>(std::ceil(n - 1e-9));
  }
  return g;
}

GeometricGrid GeometricGrid::refined() const {
  return GeometricGrid{y_max, std::sqrt(ratio), 2 * n_cells};
}

Vec GeometricGrid::points() const {
  Vec y(n_cells + 1);
  if (ratio == 1.0) {
    for (int j = 0; j <= n_cells; ++j) y[j] = y_max * j / n_cells;
  } else {
    double den = std::expm1(n_cells * std::log(ratio));
    for (int j = 0; j <= n_cells; ++j) y[j] = y_max * std::expm1(j * std::log(ratio)) / den;
  }
  y[n_cells] = y_max;
  return y;
}

double GeometricGrid::first_spacing() const {
  Vec y = points();
  return y[1];
}

std::vector<Vec> fd_weights(double z, const Vec &x, int m) {
  const int n = static_cast<int>(x.size()) - 1;
  std::vector<Vec> c(m + 1, Vec(n + 1, 0.0));
  double c1 = 1.0, c4 = x[0] - z;
  c[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    int mn = std::min(i, m);
    double c2 = 1.0, c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j < i; ++j) {
      double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

DiffOp::DiffOp(const Vec &y, int order, int width) : width_(width) {
  const int n = static_cast<int>(y.size());
  if (width > n || width <= order)
    throw Error(ErrorKind::InvalidParams, "stencil width incompatible with grid");
  start_.resize(n);
  w_.resize(static_cast<size_t>(n) * width);
  Vec nodes(width);
  for (int i = 0; i < n; ++i) {
    int s = std::clamp(i - width / 2, 0, n - width);
    start_[i] = s;
    for (int k = 0; k < width; ++k) nodes[k] = y[s + k];
    auto w = fd_weights(y[i], nodes, order);
    for (int k = 0; k < width; ++k) w_[static_cast<size_t>(i) * width + k] = w[order][k];
  }
}

double DiffOp::at(const Vec &f, int i) const {
  const double *w = &w_[static_cast<size_t>(i) * width_];
  const double *g = &f[start_[i]];
  double s = 0.0;
  for (int k = 0; k < width_; ++k) s += w[k] * g[k];
  return s;
}

Vec DiffOp::apply(const Vec &f) const {
  Vec out(start_.size());
  for (int i = 0; i < size(); ++i) out[i] = at(f, i);
  return out;
}

double wall_derivative(const Vec &y, const Vec &f, int order, int width) {
  Vec nodes(y.begin(), y.begin() + width);
  auto w = fd_weights(y[0], nodes, order);
  double s = 0.0;
  for (int k = 0; k < width; ++k) s += w[order][k] * f[k];
  return s;
}

double trapz(const Vec &y, const Vec &f) {
  double s = 0.0;
  for (size_t i = 1; i < y.size(); ++i) s += 0.5 * (y[i] - y[i - 1]) * (f[i] + f[i - 1]);
  return s;
}

double trapz_n(const Vec &y, const Vec &f, size_t n) {
  double s = 0.0;
  for (size_t j = 1; j < n; ++j) s += 0.5 * (y[j] - y[j - 1]) * (f[j] + f[j - 1]);
  return s;
}

Vec cumtrapz(const Vec &y, const Vec &f) {
  Vec out(y.size(), 0.0);
  for (size_t i = 1; i < y.size(); ++i)
    out[i] = out[i - 1] + 0.5 * (y[i] - y[i - 1]) * (f[i] + f[i - 1]);
  return out;
}

Vec cumint4(const Vec &y, const Vec &f) {
  const size_t n = y.size();
  if (n < 4) return cumtrapz(y, f);
  Vec out(n, 0.0), nodes(4);
  const double g = 0.5 / std::sqrt(3.0);
  for (size_t i = 0; i + 1 < n; ++i) {
    size_t s = std::min(i > 0 ? i - 1 : 0, n - 4);
    for (int k = 0; k < 4; ++k) nodes[k] = y[s + k];
    const double h = y[i + 1] - y[i], mid = 0.5 * (y[i] + y[i + 1]);
    double acc = 0.0;
    for (double z : {mid - g * h, mid + g * h}) {
      auto w = fd_weights(z, nodes, 0)[0];
      for (int k = 0; k < 4; ++k) acc += w[k] * f[s + k];
    }
    out[i + 1] = out[i] + 0.5 * h * acc;
  }
  return out;
}

void solve_tridiagonal(Vec &a, Vec &b, Vec &c, Vec &d, Vec &x) {
  const size_t n = b.size();
  for (size_t i = 1; i < n; ++i) {
    double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    d[i] -= w * d[i - 1];
  }
  x.resize(n);
  x[n - 1] = d[n - 1] / b[n - 1];
  for (size_t i = n - 1; i-- > 0;) x[i] = (d[i] - c[i] * x[i + 1]) / b[i];
}

double max_abs(const Vec &f) {
  double m = 0.0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

} // namespace fslab
