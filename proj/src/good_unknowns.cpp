#include "fslab/good_unknowns.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "fslab/errors.hpp"
#include "fslab/io.hpp"

namespace fslab {

namespace {

double binom(int n, int k) {
  double b = 1.0;
  for (int i = 0; i < k; ++i) b = b * (n - i) / (i + 1);
  return b;
}

Vec neg(Vec v) {
  for (double &a : v) a = -a;
  return v;
}

const DiffOp &d1_op(const Vec &y) {
  thread_local Vec key;
  thread_local DiffOp op;
  if (key != y) {
    op = DiffOp(y, 1, 5);
    key = y;
  }
  return op;
}

const DiffOp &d2_op(const Vec &y) {
  thread_local Vec key;
  thread_local DiffOp op;
  if (key != y) {
    op = DiffOp(y, 2, 7);
    key = y;
  }
  return op;
}

Vec d1(const Vec &y, const Vec &f) { return d1_op(y).apply(f); }
Vec d2(const Vec &y, const Vec &f) { return d2_op(y).apply(f); }

void require_u(const GoodUnknownStack &st, int k) {
  if (!st.has_u(k))
    throw Error(ErrorKind::OrderUnavailable, "u^(" + std::to_string(k) + ") not in stack");
}

void require_v(const GoodUnknownStack &st, int k) {
  if (!st.has_v(k))
    throw Error(ErrorKind::OrderUnavailable, "v^(" + std::to_string(k) + ") not in stack");
}

void fill_stack(GoodUnknownStack &st, const BackgroundFields &bg) {
  const Vec &y = st.y;
  const size_t n = y.size();
  const double eps = st.epsilon;
  const Vec &ub = bg.u_bar, &uby = bg.du_bar_dy[1];
  for (const auto &u : st.uk) st.psik.push_back(cumtrapz(y, u));
  const Vec uy = d1(y, st.uk[0]);
  st.mu.resize(n);
  st.mu_y.resize(n);
  st.nu.resize(n);
  for (size_t j = 0; j < n; ++j) {
    st.mu[j] = ub[j] + eps * st.uk[0][j];
    st.mu_y[j] = uby[j] + eps * uy[j];
    st.nu[j] = bg.v_bar[j] + eps * st.vk[0][j];
  }
  for (int k = 0; k <= st.k_max; ++k) {
    const Vec &u = st.uk[k], &psi = st.psik[k];
    Vec Q(n), cQ(n);
    for (size_t j = 1; j < n; ++j) {
      Q[j] = psi[j] / ub[j];
      cQ[j] = psi[j] / st.mu[j];
    }
    Q[0] = cQ[0] = 0.0;
    st.Q.push_back(std::move(Q));
    st.calQ.push_back(std::move(cQ));
    st.U.push_back(good_unknown(y, u, psi, ub, uby));
    st.calU.push_back(good_unknown(y, u, psi, st.mu, st.mu_y));
  }
  if (st.has_u(1)) {
    const Vec u1y = d1(y, st.uk[1]), uyy = d2(y, st.uk[0]);
    const Vec &ubx = bg.u(1, 0), &ubxy = bg.u(1, 1), &ubyy = bg.u(0, 2);
    st.a.resize(n);
    st.b.resize(n);
    st.c.resize(n);
    for (size_t j = 0; j < n; ++j) {
      double mux = ubx[j] + eps * st.uk[1][j];
      double muxy = ubxy[j] + eps * u1y[j];
      double muyy = ubyy[j] + eps * uyy[j];
      st.a[j] = st.mu[j] * mux + ubx[j] * st.mu[j] + 2.0 * bg.v_bar[j] * st.mu_y[j];
      st.b[j] = st.mu[j] * muxy + bg.v_bar[j] * muyy - (mux - ubx[j]) * st.mu_y[j];
      st.c[j] = bg.v_bar[j] * st.mu[j];
    }
  }
}

// least-squares polynomial through (y, f) on the index range [lo, hi)
Eigen::VectorXd poly_fit(const Vec &y, const Vec &f, size_t lo, size_t hi, int deg) {
  const int rows = static_cast<int>(hi - lo);
  Eigen::MatrixXd A(rows, deg + 1);
  Eigen::VectorXd b(rows);
  for (int r = 0; r < rows; ++r) {
    double p = 1.0;
    for (int d = 0; d <= deg; ++d, p *= y[lo + r]) A(r, d) = p;
    b(r) = f[lo + r];
  }
  return A.colPivHouseholderQr().solve(b);
}

double poly_eval(const Eigen::VectorXd &c, double y) {
  double s = 0.0;
  for (int d = static_cast<int>(c.size()) - 1; d >= 0; --d) s = s * y + c(d);
  return s;
}

} // namespace

Vec good_unknown(const Vec &y, const Vec &f, const Vec &psi, const Vec &d, const Vec &d_y) {
  const size_t n = y.size();
  Vec U(n);
  for (size_t j = 1; j < n; ++j) U[j] = (f[j] - d_y[j] / d[j] * psi[j]) / d[j];
  U[0] = wall_derivative(y, f, 1, 3) / (2.0 * d_y[0]);
  return U;
}

Vec rayleigh(const BackgroundFields &bg, const Vec &U) {
  Vec I = cumtrapz(bg.y, U);
  Vec out(U.size());
  for (size_t j = 0; j < U.size(); ++j) out[j] = bg.u_bar[j] * U[j] + bg.du_bar_dy[1][j] * I[j];
  return out;
}

RatioDerivs ratio_derivatives(const std::vector<Vec> &n, const std::vector<Vec> &d) {
  const size_t N = n[0].size();
  RatioDerivs R{Vec(N), Vec(N), Vec(N)};
  for (size_t j = 1; j < N; ++j) {
    double r = n[0][j] / d[0][j];
    double r1 = (n[1][j] - r * d[1][j]) / d[0][j];
    R.r[j] = r;
    R.r_y[j] = r1;
    R.r_yy[j] = (n[2][j] - 2.0 * r1 * d[1][j] - r * d[2][j]) / d[0][j];
  }
  // both vanish at the wall: divide the Taylor series
  double a1 = n[1][0], a2 = n[2][0] / 2.0, a3 = n[3][0] / 6.0;
  double b1 = d[1][0], b2 = d[2][0] / 2.0, b3 = d[3][0] / 6.0;
  double r0 = a1 / b1;
  double r1 = (a2 - r0 * b2) / b1;
  double r2 = (a3 - r1 * b2 - r0 * b3) / b1;
  R.r[0] = r0;
  R.r_y[0] = r1;
  R.r_yy[0] = 2.0 * r2;
  return R;
}

RatioDerivs shift_ratio(const BackgroundFields &bg) {
  std::vector<Vec> n{bg.u(1, 0), bg.u(1, 1), bg.u(1, 2), bg.u(1, 3)};
  std::vector<Vec> d{bg.u(0, 0), bg.u(0, 1), bg.u(0, 2), bg.u(0, 3)};
  return ratio_derivatives(n, d);
}

int available_order(const PerturbationState &s) {
  return std::min(5, static_cast<int>(s.history.size()) - 1);
}

GoodUnknownStack stack_from_fields(const std::vector<Vec> &uk, const Vec &v0,
                                   const BackgroundFields &bg, int k_max, double epsilon) {
  if (k_max < 0 || k_max > 5) throw Error(ErrorKind::InvalidParams, "k_max must lie in [0,5]");
  if (static_cast<int>(uk.size()) < k_max + 1)
    throw Error(ErrorKind::InsufficientHistory, "fields do not reach k_max");
  if (!(bg.wall_shear > 0.0))
    throw Error(ErrorKind::DegenerateBackground, "u_bar_y(x,0) <= 0");
  GoodUnknownStack st;
  st.k_max = k_max;
  st.x = bg.x;
  st.epsilon = epsilon;
  st.y = bg.y;
  const int top = std::min<int>(static_cast<int>(uk.size()), k_max + 2);
  st.uk.assign(uk.begin(), uk.begin() + top);
  st.vk.push_back(v0);
  for (int k = 1; k + 1 < top; ++k) st.vk.push_back(neg(cumtrapz(st.y, st.uk[k + 1])));
  fill_stack(st, bg);
  return st;
}

GoodUnknownStack build_stack(const PerturbationState &s, const BackgroundFields &bg, int k_max,
                             double epsilon) {
  if (k_max > available_order(s))
    throw Error(ErrorKind::InsufficientHistory,
                "history supports k_max <= " + std::to_string(available_order(s)));
  const int top = std::min(available_order(s), k_max + 1);
  std::vector<Vec> uk;
  for (int k = 0; k <= top; ++k) uk.push_back(x_derivatives(s, k));
  return stack_from_fields(uk, s.v, bg, k_max, epsilon);
}

CommutatorTerms commutator_forcing(const GoodUnknownStack &st, const BackgroundFields &bg,
                                   int k) {
  if (k < 1 || k > 5) throw Error(ErrorKind::OrderUnavailable, "commutator needs 1 <= k <= 5");
  require_u(st, k);
  require_v(st, k - 1);
  const size_t n = st.y.size();
  CommutatorTerms T;
  for (auto &s : T.sum) s.assign(n, 0.0);
  for (int kp = 0; kp < k; ++kp) {
    const double w = binom(k, kp);
    const Vec uy = d1(st.y, st.uk[kp]);
    const Vec &a = bg.u(k - kp, 0), &b = bg.u(k - kp + 1, 0), &c = bg.dv.at(k - kp),
              &d = bg.u(k - kp, 1);
    for (size_t j = 0; j < n; ++j) {
      T.sum[0][j] += w * a[j] * st.uk[kp + 1][j];
      T.sum[1][j] += w * b[j] * st.uk[kp][j];
      T.sum[2][j] += w * c[j] * uy[j];
      T.sum[3][j] += w * d[j] * st.vk[kp][j];
    }
  }
  T.forcing.assign(n, 0.0);
  for (size_t j = 0; j < n; ++j)
    T.forcing[j] = -(T.sum[0][j] + T.sum[1][j] + T.sum[2][j] + T.sum[3][j]);
  return T;
}

Vec quadratic_lower(const GoodUnknownStack &st, int k) {
  if (k < 1) throw Error(ErrorKind::OrderUnavailable, "quadratic_lower needs k >= 1");
  require_u(st, k);
  require_v(st, k - 1);
  const size_t n = st.y.size();
  Vec q(n, 0.0);
  for (int kp = 0; kp < k; ++kp) {
    const double w = binom(k, kp);
    const Vec uy = d1(st.y, st.uk[k - kp]);
    for (size_t j = 0; j < n; ++j)
      q[j] += w * (st.uk[k - kp][j] * st.uk[kp + 1][j] + uy[j] * st.vk[kp][j]);
  }
  return q;
}

Vec source_H(const GoodUnknownStack &st, const BackgroundFields &bg, int k) {
  if (k == 0) return Vec(st.y.size(), 0.0);
  Vec h = commutator_forcing(st, bg, k).forcing;
  Vec q = quadratic_lower(st, k);
  for (size_t j = 0; j < h.size(); ++j) h[j] -= st.epsilon * q[j];
  return h;
}

Vec source_G(const GoodUnknownStack &st, const BackgroundFields &bg, int k) {
  require_u(st, k + 1);
  require_v(st, k);
  Vec g = source_H(st, bg, k);
  const Vec uy = d1(st.y, st.uk[0]);
  for (size_t j = 0; j < g.size(); ++j)
    g[j] -= st.epsilon * (st.uk[0][j] * st.uk[k + 1][j] + uy[j] * st.vk[k][j]);
  return g;
}

std::string stack_csv(const GoodUnknownStack &st, int k) {
  if (k < 0 || k > st.k_max) throw Error(ErrorKind::MissingOrder, "order not in stack");
  CsvTable t;
  t.header = {"y", "Q", "U", "calQ", "calU"};
  for (size_t j = 0; j < st.y.size(); ++j)
    t.rows.push_back({st.y[j], st.Q[k][j], st.U[k][j], st.calQ[k][j], st.calU[k][j]});
  return t.str();
}

double CompatReport::max_residual() const {
  double r = 0.0;
  for (double a : cc1) r = std::max(r, std::abs(a));
  for (double a : cc2) r = std::max(r, std::abs(a));
  return r;
}

CompatReport iterate_cauchy_data(const Vec &u_in, const BackgroundFields &bg, int k_max,
                                 const CauchyOptions &opt) {
  const Vec &y = bg.y;
  const size_t n = y.size();
  if (u_in.size() != n) throw Error(ErrorKind::InvalidParams, "data does not match the grid");
  if (k_max < 0 || k_max > 4) throw Error(ErrorKind::InvalidParams, "k_max must lie in [0,4]");
  if (!(bg.wall_shear > 0.0))
    throw Error(ErrorKind::DegenerateBackground, "u_bar_y(x,0) <= 0");
  CompatReport rep;
  rep.cc0_ok = u_in[0] == 0.0;
  if (!rep.cc0_ok) throw Error(ErrorKind::IncompatibleData, "u_IN(0) != 0");

  const Vec &ub = bg.u_bar;
  const auto shift = shift_ratio(bg);
  Vec ub2(n), uv(n), curv(n);
  for (size_t j = 0; j < n; ++j) {
    ub2[j] = ub[j] * ub[j];
    uv[j] = ub[j] * bg.v_bar[j];
    curv[j] = 2.0 * (bg.u(0, 2)[j] - bg.dpdx);
  }
  size_t jw = 0, jf = 0;
  while (jw < n && bg.eta[jw] < opt.wall_eta) ++jw;
  while (jf < n && bg.eta[jf] < opt.fit_eta) ++jf;
  size_t jb = 0;
  while (jb < n && bg.eta[jb] < opt.wall_fit_eta) ++jb;
  if (jf < jw + static_cast<size_t>(opt.fit_degree) + 2 ||
      jb < static_cast<size_t>(opt.wall_fit_degree) + 2)
    throw Error(ErrorKind::InvalidParams, "grid too coarse for the wall fit");

  GoodUnknownStack st;
  st.y = y;
  st.epsilon = opt.epsilon;
  st.uk.push_back(u_in);
  Vec psi0 = cumint4(y, u_in);
  rep.data_stack.push_back(good_unknown(y, u_in, psi0, ub, bg.du_bar_dy[1]));
  rep.data_u.push_back(u_in);

  for (int k = 0; k < k_max; ++k) {
    const Vec &U = rep.data_stack[k];
    const Vec Uy = d1(y, U), IU = cumint4(y, U), uyy = d2(y, st.uk[k]);
    Vec lin(n);
    for (size_t j = 0; j < n; ++j)
      lin[j] = uyy[j] - uv[j] * Uy[j] - bg.u(0, 3)[j] * IU[j] - curv[j] * U[j];

    Vec next(n, 0.0), Unext(n), B(n);
    double b0 = 0.0, b1 = 0.0;
    bool converged = false;
    for (int it = 0; it < opt.fixed_point_iters; ++it) {
      GoodUnknownStack trial = st;
      trial.uk.push_back(next);
      trial.vk.push_back(neg(cumint4(y, next)));
      Vec G = source_G(trial, bg, k);
      for (size_t j = 0; j < n; ++j) B[j] = G[j] + lin[j];
      auto wb = poly_fit(y, B, 0, jb, opt.wall_fit_degree);
      b0 = wb(0);
      b1 = wb(1);
      Vec J(n);
      for (size_t j = 1; j < n; ++j) J[j] = (B[j] - b0 - b1 * y[j]) / ub2[j];
      auto c = poly_fit(y, J, jw, jf, opt.fit_degree);
      for (size_t j = 0; j < jw; ++j) J[j] = poly_eval(c, y[j]);
      for (size_t j = 0; j < n; ++j) Unext[j] = J[j] + shift.r[j] * U[j] + shift.r_y[j] * IU[j];
      Vec IUn = cumint4(y, Unext), u_new(n);
      for (size_t j = 0; j < n; ++j) u_new[j] = ub[j] * Unext[j] + bg.du_bar_dy[1][j] * IUn[j];
      double delta = 0.0, scale = 1e-300;
      for (size_t j = 0; j < n; ++j) {
        delta = std::max(delta, std::abs(u_new[j] - next[j]));
        scale = std::max(scale, std::abs(u_new[j]));
      }
      next = std::move(u_new);
      if (delta <= 1e-11 * std::max(1.0, scale)) { // roundoff floor on tall grids is ~1e-12
        converged = true;
        break;
      }
    }
    if (!converged)
      throw Error(ErrorKind::NonConvergence, "Cauchy data self-reference did not settle");
    rep.cc1.push_back(b0);
    rep.cc2.push_back(b1);
    st.vk.push_back(neg(cumint4(y, next)));
    st.uk.push_back(next);
    rep.data_stack.push_back(Unext);
    rep.data_u.push_back(std::move(next));
  }
  return rep;
}

Projection project_compatible(const Vec &u_in, const BackgroundFields &bg, int k_max,
                              const ProjectionOptions &opt) {
  const Vec &y = bg.y;
  const size_t n = y.size();
  const int nc = 2 * k_max;
  std::vector<Vec> basis;
  for (int p = 2; p < 2 + nc; ++p) {
    Vec b(n);
    for (size_t j = 0; j < n; ++j) {
      double t = y[j] / opt.cutoff;
      b[j] = std::pow(y[j], p) * std::exp(-std::pow(t, 6));
    }
    basis.push_back(std::move(b));
  }
  auto corrected = [&](const Eigen::VectorXd &c) {
    Vec u = u_in;
    for (int i = 0; i < nc; ++i)
      for (size_t j = 0; j < n; ++j) u[j] -= c(i) * basis[i][j];
    return u;
  };
  auto residual = [&](const Eigen::VectorXd &c, CompatReport *keep) {
    auto rep = iterate_cauchy_data(corrected(c), bg, k_max, opt.cauchy);
    Eigen::VectorXd r(nc);
    for (int k = 0; k < k_max; ++k) {
      r(2 * k) = rep.cc1[k];
      r(2 * k + 1) = rep.cc2[k];
    }
    if (keep) *keep = std::move(rep);
    return r;
  };

  Projection out;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(nc);
  Eigen::VectorXd r = residual(c, &out.report);
  Eigen::VectorXd best_c = c;
  CompatReport best_rep = out.report;
  double best = nc > 0 ? r.lpNorm<Eigen::Infinity>() : 0.0;
  int it = 0;
  if (best <= opt.tol) best = 0.0; // already compatible: leave the data alone
  // Newton with a finite-difference Jacobian; stops at the target or once the
  // residual sits at the discretisation noise floor below tol
  while (nc > 0 && best > opt.target && it < opt.max_iters) {
    ++it;
    Eigen::MatrixXd J(nc, nc);
    for (int i = 0; i < nc; ++i) {
      Eigen::VectorXd cp = c;
      double h = 1e-4 * (1.0 + std::abs(c(i)));
      cp(i) += h;
      J.col(i) = (residual(cp, nullptr) - r) / h;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto &sv = svd.singularValues();
    if (!(sv(nc - 1) > 0.0) || sv(0) / sv(nc - 1) > opt.max_condition)
      throw Error(ErrorKind::IllConditionedCorrection, "corrector Jacobian is singular");
    c -= svd.solve(r);
    r = residual(c, &out.report);
    double now = r.lpNorm<Eigen::Infinity>();
    if (now < best) {
      bool stalled = best <= opt.tol && now > 0.5 * best;
      best = now;
      best_c = c;
      best_rep = out.report;
      if (stalled) break;
    } else if (best <= opt.tol) {
      break;
    }
  }
  if (best > opt.tol)
    throw Error(ErrorKind::IllConditionedCorrection,
                "compatibility residual stuck at " + num(best));
  c = best_c;
  if (it > 0) out.report = best_rep;
  out.newton_iters = it;
  out.u = corrected(c);
  out.coeffs.assign(c.data(), c.data() + nc);
  double corr = 0.0;
  for (size_t j = 0; j < n; ++j) corr = std::max(corr, std::abs(out.u[j] - u_in[j]));
  const double base = max_abs(u_in);
  out.correction_ratio = base > 0.0 ? corr / base : 0.0;
  return out;
}

} // namespace fslab
