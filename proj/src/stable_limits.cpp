#include "alrd/stable_limits.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include <Eigen/Dense>

#include "alrd/axis_rule.hpp"
#include "alrd/errors.hpp"
#include "alrd/fft.hpp"
#include "alrd/quadrature.hpp"
#include "alrd/specfun.hpp"

namespace alrd {

MixingLaw MixingLaw::standard(double beta) {
  MixingLaw m;
  m.beta = beta;
  m.phi1 = 1.0 + beta;
  return m;
}

double MixingLaw::phi_eps(double eps) const {
  if (density) return density(1.0 - eps);
  return (1.0 + beta) * std::pow(eps, beta);
}

double MixingLaw::phi(double a) const { return density ? density(a) : (1.0 + beta) * std::pow(1.0 - a, beta); }

void MixingLaw::validate() const {
  if (!(beta > 0)) throw DomainError("MixingLaw: beta must be positive");
  if (!(phi1 > 0)) throw DomainError("MixingLaw: phi1 must be positive");
  if (!density) return;
  QuadOptions o;
  o.rel_tol = 1e-12;
  auto f = [this](double l) {
    const double e = std::exp(l);
    return e * phi_eps(e);
  };
  const double lo = -60.0;
  const double mass = integrate(f, lo, 0.0, o).value + std::exp(lo) * phi_eps(std::exp(lo)) / (1 + beta);
  if (std::fabs(mass - 1.0) > 1e-10) throw DomainError("MixingLaw: density does not integrate to 1");
  const double e = 1e-8;
  if (std::fabs(phi_eps(e) / (phi1 * std::pow(e, beta)) - 1.0) > 0.05)
    throw DomainError("MixingLaw: density is not ~ phi1 (1-a)^beta near a = 1");
}

namespace {

bool excluded(double alpha, double beta) { return std::fabs(beta - 0.5 * (alpha - 1.0)) <= 1e-12; }

enum class Case { Full, VInd, UInd, ULow, VLow };
// Full: rectangle integral of h; VInd: 1(v in box) times a t-integral; UInd: mirror;
// ULow: y * int h(t-u, v) dt (depends on raw v); VLow: x * int h(u, s-v) ds (raw u).

Case kernel_case(const StableLimitSpec& sp) {
  const double g0 = sp.gamma0();
  const bool low = sp.mixing.beta < 0.5 * (sp.alpha - 1.0);
  if (std::fabs(sp.gamma - g0) <= 1e-12) return Case::Full;
  if (sp.gamma > g0) {
    if (sp.model.variant == Walk::FourN && low) return Case::VLow;
    return Case::VInd;
  }
  return low ? Case::ULow : Case::UInd;
}

// erf(a) + erf(b) without cancellation when a and b have opposite signs
double erf_sum(double a, double b) {
  if (a < 0 && b > 0) return std::erfc(-a) - std::erfc(b);
  if (a > 0 && b < 0) return std::erfc(-b) - std::erfc(a);
  return std::erf(a) + std::erf(b);
}

// int_0^L e^{-k|w - c|} dw * k
double exp_box(double k, double L, double c) {
  auto S = [k](double w) { return w >= 0 ? -std::expm1(-k * w) : std::expm1(k * w); };
  return S(L - c) - S(-c);
}

QuadOptions inner_opts() {
  QuadOptions o;
  o.rel_tol = 1e-8;
  o.abs_tol = 1e-300;
  o.max_intervals = 400;
  return o;
}

// int_{tau0}^{tau1} (3/(2 sqrt(pi tau))) e^{-3 z tau - v^2/(4 tau)} dtau
double h3_t_integral(double tau0, double tau1, double v, double z) {
  if (!(tau1 > tau0)) return 0.0;
  const double te = std::min(tau1, tau0 + 45.0 / (3.0 * z));
  const double s0 = std::sqrt(tau0), s1 = std::sqrt(te);
  const double c = 3.0 / std::sqrt(kPi);
  auto f = [=](double s) { return s == 0.0 ? 0.0 : c * std::exp(-3.0 * z * s * s - v * v / (4.0 * s * s)); };
  std::vector<double> br;
  const double sp = std::sqrt(std::fabs(v) / (2.0 * std::sqrt(3.0 * z)));
  for (double b : {sp, 0.5 * sp, 2 * sp, 1.0 / std::sqrt(3.0 * z)})
    if (b > s0 && b < s1) br.push_back(b);
  return integrate(f, s0, s1, inner_opts(), br).value;
}

double F3_full(double X, double Y, double u, double v, double z) {
  const double tau0 = std::max(0.0, -u), tau1 = X - u;
  if (!(tau1 > tau0)) return 0.0;
  const double te = std::min(tau1, tau0 + 45.0 / (3.0 * z));
  const double s0 = std::sqrt(tau0), s1 = std::sqrt(te);
  auto f = [=](double s) {
    if (s == 0.0) return 0.0;
    const double r = 0.5 / s;
    return 3.0 * s * std::exp(-3.0 * z * s * s) * erf_sum((Y - v) * r, v * r);
  };
  std::vector<double> br;
  for (double b : {0.5 * std::fabs(v), 0.5 * std::fabs(Y - v), 1.0 / std::sqrt(3.0 * z)})
    if (b > s0 && b < s1) br.push_back(b);
  return integrate(f, s0, s1, inner_opts(), br).value;
}

// log-w integral helper: int_0^inf g(w) dw = int g(e^l) e^l dl
template <class G>
double log_w_integral(G&& g, double z, std::vector<double> scales) {
  const double whi = 45.0 / z;
  const double wlo = whi * 1e-22;
  auto f = [&](double l) {
    const double w = std::exp(l);
    return w * g(w);
  };
  std::vector<double> br;
  const double lo = std::log(wlo), hi = std::log(whi);
  for (double s : scales)
    if (s > 0) {
      const double l = std::log(s);
      if (l > lo && l < hi) br.push_back(l);
    }
  return integrate(f, lo, hi, inner_opts(), br).value;
}

double F4_full(double X, double Y, double u, double v, double z) {
  auto g = [=](double w) {
    const double r = 1.0 / std::sqrt(w);
    return 0.25 * std::exp(-z * w) * erf_sum((X - u) * r, u * r) * erf_sum((Y - v) * r, v * r);
  };
  const double du = u < 0 ? -u : (u > X ? u - X : 0.0);
  const double dv = v < 0 ? -v : (v > Y ? v - Y : 0.0);
  return log_w_integral(g, z, {du * du, dv * dv, X * X, Y * Y, du * du + dv * dv});
}

// int_0^X h4(t - u, v, z) dt
double F4_line(double X, double u, double v, double z) {
  const double c = 1.0 / (2.0 * std::sqrt(kPi));
  auto g = [=](double w) {
    const double r = 1.0 / std::sqrt(w);
    return c * r * std::exp(-z * w - v * v / w) * erf_sum((X - u) * r, u * r);
  };
  const double du = u < 0 ? -u : (u > X ? u - X : 0.0);
  return log_w_integral(g, z, {du * du, v * v, X * X, du * du + v * v});
}

double kernel_impl(const StableLimitSpec& sp, Case cs, const Box& K, double u, double v, double z) {
  if (!(z > 0)) return 0.0;
  const double X = K.x1 - K.x0, Y = K.y1 - K.y0;
  const double ut = u - K.x0, vt = v - K.y0;
  if (sp.model.variant == Walk::ThreeN) {
    switch (cs) {
      case Case::Full: return F3_full(X, Y, ut, vt, z);
      case Case::VInd: {
        if (!(vt > 0 && vt < Y)) return 0.0;
        const double tau0 = std::max(0.0, -ut), tau1 = X - ut;
        if (!(tau1 > tau0)) return 0.0;
        return -std::exp(-3.0 * z * tau0) * std::expm1(-3.0 * z * (tau1 - tau0)) / z;
      }
      case Case::UInd:
        if (!(ut > 0 && ut < X)) return 0.0;
        return exp_box(std::sqrt(3.0 * z), Y, vt) / (2.0 * z);
      case Case::ULow: return Y * h3_t_integral(std::max(0.0, -ut), X - ut, v, z);
      case Case::VLow: break;
    }
  } else {
    switch (cs) {
      case Case::Full: return F4_full(X, Y, ut, vt, z);
      case Case::VInd:
        if (!(vt > 0 && vt < Y)) return 0.0;
        return exp_box(2.0 * std::sqrt(z), X, ut) / (2.0 * z);
      case Case::UInd:
        if (!(ut > 0 && ut < X)) return 0.0;
        return exp_box(2.0 * std::sqrt(z), Y, vt) / (2.0 * z);
      case Case::ULow: return Y * F4_line(X, ut, v, z);
      case Case::VLow: return X * F4_line(Y, vt, u, z);
    }
  }
  throw DomainError("F kernel: case not available for this walk");
}

}  // namespace

void StableLimitSpec::validate() const {
  if (!(alpha > 1 && alpha <= 2)) throw DomainError("alpha must lie in (1,2]");
  mixing.validate();
  if (!(mixing.beta > 0 && mixing.beta < alpha - 1)) throw DomainError("beta must lie in (0, alpha-1)");
  if (!(gamma > 0)) throw DomainError("gamma must be positive");
  const double g0 = gamma0();
  if (excluded(alpha, mixing.beta)) {
    if (model.variant == Walk::ThreeN && gamma < g0 - 1e-12)
      throw DomainError("excluded case: beta = (alpha-1)/2 with gamma < 1/2");
    if (model.variant == Walk::FourN && std::fabs(gamma - 1.0) > 1e-12)
      throw DomainError("excluded case: beta = (alpha-1)/2 with gamma != 1");
  }
}

double F_kernel(const StableLimitSpec& spec, const Box& K, double u, double v, double z) {
  spec.validate();
  return kernel_impl(spec, kernel_case(spec), K, u, v, z);
}

double F3_kernel(const StableLimitSpec& spec, double x, double y, double u, double v, double z) {
  if (spec.model.variant != Walk::ThreeN) throw DomainError("F3_kernel: model must be 3n");
  if (!(x > 0 && y > 0 && z > 0)) throw DomainError("F3_kernel: x, y, z must be positive");
  return F_kernel(spec, Box{0, 0, x, y}, u, v, z);
}

double F4_kernel(const StableLimitSpec& spec, double x, double y, double u, double v, double z) {
  if (spec.model.variant != Walk::FourN) throw DomainError("F4_kernel: model must be 4n");
  if (!(x > 0 && y > 0 && z > 0)) throw DomainError("F4_kernel: x, y, z must be positive");
  return F_kernel(spec, Box{0, 0, x, y}, u, v, z);
}

ScalingLaw H_table(Walk model, double alpha, double beta, double gamma) {
  if (!(alpha > 1 && alpha <= 2)) throw DomainError("H_table: alpha must lie in (1,2]");
  if (!(beta > 0 && beta < alpha - 1)) throw DomainError("H_table: beta must lie in (0, alpha-1)");
  if (!(gamma > 0)) throw DomainError("H_table: gamma must be positive");
  ScalingLaw L;
  L.gamma = gamma;
  const bool ex = excluded(alpha, beta), high = beta > 0.5 * (alpha - 1.0);
  if (model == Walk::ThreeN) {
    L.gamma0 = 0.5;
    if (gamma >= 0.5 - 1e-12) {
      L.H = (gamma + alpha - beta) / alpha;
      L.regime = Regime::N3_Above;
    } else if (ex) {
      throw DomainError("H_table: excluded case beta = (alpha-1)/2 with gamma < 1/2");
    } else if (high) {
      L.H = (1 - gamma + 2 * gamma * (alpha - beta)) / alpha;
      L.regime = Regime::N3_BelowBetaHigh;
    } else {
      L.H = (alpha * gamma + (alpha + 1) / 2 - beta) / alpha;
      L.regime = Regime::N3_BelowBetaLow;
    }
  } else {
    L.gamma0 = 1.0;
    const bool at = std::fabs(gamma - 1.0) <= 1e-12;
    if (!at && ex) throw DomainError("H_table: excluded case beta = (alpha-1)/2 with gamma != 1");
    if (at || (gamma > 1 && high)) {
      L.H = (gamma - 1 + 2 * (alpha - beta)) / alpha;
      L.regime = Regime::N4_Above;
    } else if (gamma > 1) {
      L.H = (alpha + alpha * gamma - 2 * beta * gamma) / alpha;
      L.regime = Regime::N4_AboveBetaLow;
    } else if (high) {
      L.H = (1 - gamma + 2 * gamma * (alpha - beta)) / alpha;
      L.regime = Regime::N4_BelowBetaHigh;
    } else {
      L.H = (alpha * gamma + alpha - 2 * beta) / alpha;
      L.regime = Regime::N4_BelowBetaLow;
    }
  }
  return L;
}

namespace {

using MuParams = JQuadrature;

// Rule for one spatial axis. `pts` are kink locations; `scale` is the decay length of the kernel.
AxisRule space_rule(std::vector<double> pts, double scale, bool indicator, bool left_tail, bool right_tail,
                    const MuParams& p) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (indicator) return panel_rule(pts, 1, [](double) { return 1.0; });
  std::vector<double> br = pts;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double a = pts[i], b = pts[i + 1], half = 0.5 * (b - a);
    br.push_back(a + half);
    double h = std::min(half, scale);
    for (int k = 0; k <= p.levels; ++k, h *= 0.5) {
      br.push_back(a + h);
      br.push_back(b - h);
    }
    for (double h2 = 2 * scale; h2 < half; h2 *= 2) {
      br.push_back(a + h2);
      br.push_back(b - h2);
    }
  }
  auto tail = [&](double e, double dir) {
    double h = scale;
    for (int k = 0; k <= p.levels; ++k, h *= 0.5) br.push_back(e + dir * h);
    for (double h2 = 2 * scale; h2 <= 64 * scale; h2 *= 2) br.push_back(e + dir * h2);
  };
  if (left_tail) tail(pts.front(), -1.0);
  if (right_tail) tail(pts.back(), 1.0);
  return panel_rule(br, p.order, [](double) { return 1.0; });
}

struct AxisSetup {
  std::vector<double> u_pts, v_pts;
  bool u_ind = false, v_ind = false;
  bool u_right = true;
};

AxisSetup axis_setup(const StableLimitSpec& sp, Case cs, const std::vector<Box>& boxes) {
  AxisSetup a;
  for (const Box& b : boxes) {
    a.u_pts.insert(a.u_pts.end(), {b.x0, b.x1});
    a.v_pts.insert(a.v_pts.end(), {b.y0, b.y1});
  }
  if (cs == Case::VInd) a.v_ind = true;
  if (cs == Case::UInd) a.u_ind = true;
  if (cs == Case::ULow) a.v_pts = {0.0};
  if (cs == Case::VLow) a.u_pts = {0.0};
  a.u_right = sp.model.variant == Walk::FourN;
  return a;
}

// Panels in l = log(tau) (or log w) with Gauss-Legendre nodes; supports exact cumulative weights up to any L.
struct LogGrid {
  int n = 6;
  std::vector<double> edges;  // panel boundaries
  std::vector<double> l, w;   // nodes and weights (in l)
  Eigen::MatrixXd C;          // monomial coefficients of the Lagrange basis on [-1,1]
  std::vector<double> xi;     // reference nodes

  LogGrid(double lo, double hi, double width, int order) : n(order) {
    const GaussRule g = gauss_legendre(order);
    xi = g.x;
    const int np = std::max(1, static_cast<int>(std::ceil((hi - lo) / width)));
    const double h = (hi - lo) / np;
    for (int k = 0; k <= np; ++k) edges.push_back(lo + k * h);
    for (int k = 0; k < np; ++k)
      for (int j = 0; j < n; ++j) {
        l.push_back(edges[k] + 0.5 * h * (1.0 + g.x[j]));
        w.push_back(0.5 * h * g.w[j]);
      }
    Eigen::MatrixXd V(n, n);
    for (int i = 0; i < n; ++i)
      for (int m = 0; m < n; ++m) V(i, m) = std::pow(xi[i], m);
    C = V.inverse();  // column k: coefficients of the k-th basis polynomial
  }
  std::size_t size() const { return l.size(); }

  // row += sign * (weights of int_{lo}^{L} on this grid)
  void add_cumulative(double L, double sign, double* row) const {
    if (L <= edges.front()) return;
    const std::size_t np = edges.size() - 1;
    std::size_t k = 0;
    for (; k < np && edges[k + 1] <= L; ++k)
      for (int j = 0; j < n; ++j) row[k * n + j] += sign * w[k * n + j];
    if (k == np) return;
    const double h = edges[k + 1] - edges[k];
    const double xe = 2.0 * (L - edges[k]) / h - 1.0;
    for (int j = 0; j < n; ++j) {
      double acc = 0.0, pe = xe, pm = -1.0;
      for (int m = 0; m < n; ++m) {
        acc += C(m, j) * (pe - pm) / (m + 1);
        pe *= xe;
        pm *= -1.0;
      }
      row[k * n + j] += sign * 0.5 * h * acc;
    }
  }
};

bool has_batch(Walk wk, Case cs) {
  if (cs == Case::Full || cs == Case::ULow) return true;
  return wk == Walk::FourN && cs == Case::VLow;
}

// F on the tensor grid (us x vs) for a fixed z, as a product of two factor matrices.
Eigen::MatrixXd kernel_batch(const StableLimitSpec& sp, Case cs, const Box& K, const std::vector<double>& us,
                             const std::vector<double>& vs, double z) {
  const double X = K.x1 - K.x0, Y = K.y1 - K.y0;
  const std::size_t nu = us.size(), nv = vs.size();
  if (sp.model.variant == Walk::ThreeN) {
    const double thi = 45.0 / (3.0 * z), tlo = 1e-13 * std::min(1.0, thi);
    const LogGrid g(std::log(tlo), std::log(thi), 0.5, 6);
    const std::size_t nw = g.size();
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> W =
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(nu, nw);
    Eigen::MatrixXd Fv(nw, nv);
    for (std::size_t i = 0; i < nu; ++i) {
      const double ut = us[i] - K.x0, t1 = X - ut;
      if (!(t1 > 0)) continue;
      g.add_cumulative(std::log(t1), 1.0, &W(i, 0));
      if (ut < 0) g.add_cumulative(std::log(-ut), -1.0, &W(i, 0));
    }
    for (std::size_t k = 0; k < nw; ++k) {
      const double tau = std::exp(g.l[k]), e = std::exp(-3.0 * z * tau), r = 0.5 / std::sqrt(tau);
      for (std::size_t j = 0; j < nv; ++j) {
        if (cs == Case::Full) {
          const double vt = vs[j] - K.y0;
          Fv(k, j) = 1.5 * tau * e * erf_sum((Y - vt) * r, vt * r);
        } else {
          const double v = vs[j];
          Fv(k, j) = Y * tau * 3.0 * r / std::sqrt(kPi) * e * std::exp(-v * v / (4.0 * tau));
        }
      }
    }
    return W * Fv;
  }
  const double whi = 45.0 / z, wlo = 1e-13 * std::min(1.0, whi);
  const LogGrid g(std::log(wlo), std::log(whi), 0.5, 6);
  const std::size_t nw = g.size();
  Eigen::MatrixXd A(nu, nw), B(nw, nv);
  const double c = 1.0 / (2.0 * std::sqrt(kPi));
  for (std::size_t k = 0; k < nw; ++k) {
    const double w = std::exp(g.l[k]), r = 1.0 / std::sqrt(w), e = std::exp(-z * w), gw = g.w[k];
    for (std::size_t i = 0; i < nu; ++i) {
      const double ut = us[i] - K.x0;
      switch (cs) {
        case Case::Full: A(i, k) = 0.25 * gw * w * e * erf_sum((X - ut) * r, ut * r); break;
        case Case::ULow: A(i, k) = Y * c * gw * std::sqrt(w) * e * erf_sum((X - ut) * r, ut * r); break;
        default: A(i, k) = std::exp(-us[i] * us[i] / w); break;
      }
    }
    for (std::size_t j = 0; j < nv; ++j) {
      const double vt = vs[j] - K.y0;
      switch (cs) {
        case Case::Full: B(k, j) = erf_sum((Y - vt) * r, vt * r); break;
        case Case::ULow: B(k, j) = std::exp(-vs[j] * vs[j] / w); break;
        default: B(k, j) = X * c * gw * std::sqrt(w) * e * erf_sum((Y - vt) * r, vt * r); break;
      }
    }
  }
  return A * B;
}

// int over (u,v,z) of G(F_1, ..., F_k) against phi1 z^beta du dv dz
template <class Comb>
double mu_integral(const StableLimitSpec& sp, const std::vector<Box>& boxes, Comb&& comb, const MuParams& p) {
  const Case cs = kernel_case(sp);
  const AxisSetup ax = axis_setup(sp, cs, boxes);
  const bool three = sp.model.variant == Walk::ThreeN;
  const double beta = sp.mixing.beta;
  std::vector<double> F(boxes.size());
  auto inner = [&](double z) {
    const double Lu = three ? 1.0 / (3.0 * z) : 0.5 / std::sqrt(z);
    const double Lv = three ? 1.0 / std::sqrt(3.0 * z) : 0.5 / std::sqrt(z);
    const AxisRule ru = space_rule(ax.u_pts, Lu, ax.u_ind, true, ax.u_right, p);
    const AxisRule rv = space_rule(ax.v_pts, Lv, ax.v_ind, true, true, p);
    std::vector<Eigen::MatrixXd> M;
    if (has_batch(sp.model.variant, cs))
      for (const Box& b : boxes) M.push_back(kernel_batch(sp, cs, b, ru.x, rv.x, z));
    double tot = 0.0;
    for (std::size_t i = 0; i < ru.x.size(); ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < rv.x.size(); ++j) {
        for (std::size_t b = 0; b < boxes.size(); ++b)
          F[b] = M.empty() ? kernel_impl(sp, cs, boxes[b], ru.x[i], rv.x[j], z) : M[b](i, j);
        row += rv.w[j] * comb(F);
      }
      tot += ru.w[i] * row;
    }
    return tot;
  };
  // s = log z
  auto I = [&](double s) {
    const double z = std::exp(s);
    return std::pow(z, beta + 1.0) * inner(z);
  };
  std::vector<double> br;
  for (double s = -p.zspan; s <= p.zspan + 1e-9; s += p.zpanel) br.push_back(s);
  const AxisRule rz = panel_rule(br, p.order, [](double) { return 1.0; });
  double tot = 0.0;
  for (std::size_t k = 0; k < rz.x.size(); ++k) tot += rz.w[k] * I(rz.x[k]);
  // power-law tails beyond the s-window
  auto tail = [&](double s_end, double s_in) {
    const double a = I(s_end), b = I(s_in);
    if (a == 0.0) return 0.0;
    const double c = std::log(a / b) / std::fabs(s_end - s_in);
    if (!(c < 0)) {
      // cancellation noise in difference functionals; harmless if far below the bulk
      if (std::fabs(a) <= 1e-10 * std::fabs(tot)) return 0.0;
      throw NumericalError("J integral: control-measure integrand does not decay in z");
    }
    return a / (-c);
  };
  tot += tail(p.zspan, p.zspan - 1.0) + tail(-p.zspan, -p.zspan + 1.0);
  return sp.mixing.phi1 * tot;
}

}  // namespace

JResult J_gamma_detail(const StableLimitSpec& spec, double x, double y, const JQuadrature& fine,
                       const JQuadrature& coarse) {
  spec.validate();
  if (!(x > 0 && y > 0)) throw DomainError("J_gamma: x, y must be positive");
  const double al = spec.alpha;
  auto comb = [al](const std::vector<double>& F) { return F[0] > 0 ? std::pow(F[0], al) : 0.0; };
  const std::vector<Box> boxes{Box{0, 0, x, y}};
  JResult r;
  r.coarse = mu_integral(spec, boxes, comb, coarse);
  r.value = mu_integral(spec, boxes, comb, fine);
  if (!std::isfinite(r.value) || std::fabs(r.value - r.coarse) > 1e-3 * std::fabs(r.value)) {
    std::ostringstream os;
    os << "J_gamma: quadrature not converged (coarse " << r.coarse << ", fine " << r.value << ")";
    throw NumericalError(os.str());
  }
  return r;
}

double J_gamma(const StableLimitSpec& spec, double x, double y) { return J_gamma_detail(spec, x, y).value; }

double F_overlap(const StableLimitSpec& spec, const Box& K, const Box& K2, double p, double q) {
  spec.validate();
  auto comb = [p, q](const std::vector<double>& F) {
    return (F[0] > 0 && F[1] > 0) ? std::pow(F[0], p) * std::pow(F[1], q) : 0.0;
  };
  const MuParams mp;
  return mu_integral(spec, {K, K2}, comb, mp);
}

double F_distance(const StableLimitSpec& spec, const Box& K, const Box& K2) {
  spec.validate();
  const double al = spec.alpha;
  auto comb = [al](const std::vector<double>& F) { return std::pow(std::fabs(F[0] - F[1]), al); };
  const MuParams mp;
  return mu_integral(spec, {K, K2}, comb, mp);
}

namespace {

// Psi(x,y) = int_0^1 phi(a) |1 - a p_hat|^{-2} da
double psi_node(const WalkModel& m, const MixingLaw& mix, double x, double y) {
  const std::complex<double> q = one_minus_a_phat(m, 1.0, x, y), ph = p_hat(m, x, y);
  const double A = std::norm(q), B = (q * std::conj(ph)).real(), C = std::norm(ph);
  const double ls = std::log(std::sqrt(A) / std::max(std::sqrt(C), 1e-300));
  const double lo = std::min(ls, 0.0) - 20.0;
  static thread_local GaussRule g = gauss_legendre(8);
  // coarse panels on the power-law stretches, fine ones around the crossover at ls
  std::vector<double> br{lo, 0.0};
  if (ls < 6.0)
    for (double l = ls - 6.0; l <= ls + 6.0; l += 1.5)
      if (l > lo && l < 0.0) br.push_back(l);
  for (double l = std::min(ls - 11.0, 0.0) ; l > lo; l -= 5.0) br.push_back(l);
  for (double l = std::max(ls + 11.0, lo); l < 0.0; l += 5.0) br.push_back(l);
  std::sort(br.begin(), br.end());
  double tot = 0.0;
  for (std::size_t k = 0; k + 1 < br.size(); ++k) {
    const double h = br[k + 1] - br[k], c = br[k] + 0.5 * h;
    for (std::size_t j = 0; j < g.x.size(); ++j) {
      const double l = c + 0.5 * h * g.x[j];
      const double e = std::exp(l);
      tot += 0.5 * h * g.w[j] * e * mix.phi_eps(e) / (A + e * (2 * B + e * C));
    }
  }
  const double el = std::exp(lo);
  tot += el * mix.phi_eps(el) / ((mix.beta + 1.0) * A);
  return tot;
}

AxisRule lag_rule(long long t, int order, int levels) {
  const long long at = std::max<long long>(1, std::llabs(t));
  const double q = kPi / (2.0 * double(at));
  std::vector<double> br{-kPi, kPi};
  for (long long k = 1; k * q < kPi; ++k) {
    br.push_back(k * q);
    br.push_back(-k * q);
  }
  add_singular_breaks(br, {0.0}, -kPi, kPi, std::min(q, 0.5), levels);
  return panel_rule(br, order, [](double) { return 1.0; });
}

double cov_once(const WalkModel& m, const MixingLaw& mix, long long t, long long s, int order, int levels) {
  const AxisRule rx = lag_rule(t, order, levels), ry = lag_rule(s, order, levels);
  double tot = 0.0;
  for (std::size_t i = 0; i < rx.x.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < ry.x.size(); ++j)
      row += ry.w[j] * std::cos(double(t) * rx.x[i] + double(s) * ry.x[j]) * psi_node(m, mix, rx.x[i], ry.x[j]);
    tot += rx.w[i] * row;
  }
  return tot / (4.0 * kPi * kPi);
}

}  // namespace

double aggregated_cov(const WalkModel& m, const MixingLaw& mix, long long t, long long s) {
  mix.validate();
  if (std::max(std::llabs(t), std::llabs(s)) > 4096) throw ResourceError("aggregated_cov: lag beyond the quadrature cap");
  const double c1 = cov_once(m, mix, t, s, 6, 30);
  const double c2 = cov_once(m, mix, t, s, 8, 40);
  if (std::fabs(c1 - c2) > 1e-4 * std::fabs(c2)) {
    std::ostringstream os;
    os << "aggregated_cov: quadrature not converged at lag (" << t << "," << s << "): " << c1 << " vs " << c2;
    throw NumericalError(os.str());
  }
  return c2;
}

double cov_limit(Walk model, const MixingLaw& mix, double t, double s) {
  const double b = mix.beta, p1 = mix.phi1;
  if (t == 0.0 && s == 0.0) throw DomainError("cov_limit: (t,s) = (0,0)");
  if (model == Walk::FourN)
    return p1 * std::exp(log_gamma(b + 1) + log_gamma(b)) / kPi * std::pow(t * t + s * s, -b);
  const double C3 = std::pow(kPi, -0.5) * std::pow(2.0, 2 * b - 1) * std::pow(3.0, 1 - b) * p1 * std::exp(log_gamma(b + 1));
  if (s == 0.0) return std::pow(4.0, -0.5 - b) / (0.5 + b) * C3 * std::pow(std::fabs(t), -b - 0.5);
  if (t == 0.0) return C3 * std::pow(std::fabs(s), -2 * b - 1) * std::exp(log_gamma(b + 0.5));
  return C3 * std::pow(std::fabs(s), -2 * b - 1) * lower_incomplete_gamma(b + 0.5, s * s / (4 * std::fabs(t)));
}

std::vector<CovRow> cov_asymptotics(Walk model, const MixingLaw& mix, double t, double s,
                                    const std::vector<double>& lambdas) {
  if (t == 0.0 && s == 0.0) throw DomainError("cov_asymptotics: (t,s) = (0,0)");
  const WalkModel m = WalkModel::of(model);
  const double lim = cov_limit(model, mix, t, s);
  std::vector<CovRow> rows;
  for (double lam : lambdas) {
    if (!(lam >= 1)) throw DomainError("cov_asymptotics: lambda must be >= 1");
    CovRow r;
    r.lambda = lam;
    double p;
    if (model == Walk::ThreeN) {
      r.t = static_cast<long long>(std::floor(lam * t));
      r.s = static_cast<long long>(std::floor(std::sqrt(lam) * s));
      p = mix.beta + 0.5;
    } else {
      r.t = static_cast<long long>(std::floor(lam * t));
      r.s = static_cast<long long>(std::floor(lam * s));
      p = 2 * mix.beta;
    }
    r.cov = aggregated_cov(m, mix, r.t, r.s);
    r.scaled = std::pow(lam, p) * r.cov;
    r.limit = lim;
    r.rel_err = std::fabs(r.scaled / lim - 1.0);
    rows.push_back(r);
  }
  return rows;
}

namespace {

double jn_parseval(const StableLimitSpec& sp, long long n, long long mm, const RuleParams& p) {
  const AxisRule rx = fejer_rule(n, p), ry = fejer_rule(mm, p);
  double tot = 0.0;
  for (std::size_t i = 0; i < rx.x.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < ry.x.size(); ++j) row += ry.w[j] * psi_node(sp.model, sp.mixing, rx.x[i], ry.x[j]);
    tot += rx.w[i] * row;
  }
  return tot / (4.0 * kPi * kPi);
}

double jn_lattice(const StableLimitSpec& sp, long long n, long long mm) {
  const int nodes = 24;
  const GaussRule gj = gauss_jacobi_unit(nodes, sp.mixing.beta);
  double tot = 0.0;
  for (int k = 0; k < nodes; ++k) {
    const double eps = gj.x[k], a = 1.0 - eps;
    int Mt = 0, Ms = 0;
    fft_grid_size(sp.model, a, 1e-9, int(n), int(mm), Mt, Ms);
    std::vector<std::complex<double>> buf(std::size_t(Mt) * Ms);
    std::vector<std::complex<double>> bt(Mt), bs(Ms);
    for (int i = 0; i < Mt; ++i) {
      const double x = 2.0 * kPi * i / Mt;
      std::complex<double> acc = 0.0;
      for (long long t = 1; t <= n; ++t) acc += std::polar(1.0, double(t) * x);
      bt[i] = acc;
    }
    for (int j = 0; j < Ms; ++j) {
      const double y = 2.0 * kPi * j / Ms;
      std::complex<double> acc = 0.0;
      for (long long s = 1; s <= mm; ++s) acc += std::polar(1.0, double(s) * y);
      bs[j] = acc;
    }
    for (int i = 0; i < Mt; ++i)
      for (int j = 0; j < Ms; ++j) {
        const double x = 2.0 * kPi * i / Mt, y = 2.0 * kPi * j / Ms;
        const std::complex<double> den = one_minus_a_phat(sp.model, 1.0, x, y) + eps * p_hat(sp.model, x, y);
        buf[std::size_t(i) * Ms + j] = bt[i] * bs[j] / den;
      }
    fft2d(buf, Mt, Ms, -1);
    const double norm = 1.0 / (double(Mt) * Ms);
    double S = 0.0;
    for (const auto& c : buf) {
      const double G = c.real() * norm;
      if (G > 0) S += std::pow(G, sp.alpha);
    }
    tot += gj.w[k] * (sp.mixing.phi_eps(eps) / std::pow(eps, sp.mixing.beta)) * S;
  }
  return tot;
}

}  // namespace

double J_n_gamma(const StableLimitSpec& spec, long long n, JnMethod method) {
  spec.validate();
  if (n < 1) throw DomainError("J_n_gamma: n must be >= 1");
  if (n > kJnCap) throw ResourceError("J_n_gamma: n exceeds the configured cap");
  const long long mm = std::max<long long>(1, static_cast<long long>(std::floor(std::pow(double(n), spec.gamma) * (1 + 1e-12))));
  const double H = H_table(spec.model.variant, spec.alpha, spec.mixing.beta, spec.gamma).H;
  double sum;
  if (method == JnMethod::Parseval && spec.alpha != 2.0) throw DomainError("J_n_gamma: Parseval route needs alpha = 2");
  if (method == JnMethod::Parseval || (method == JnMethod::Auto && spec.alpha == 2.0)) {
    const double r1 = jn_parseval(spec, n, mm, RuleParams{6, 24, 30});
    sum = jn_parseval(spec, n, mm, RuleParams{8, 32, 40});
    if (std::fabs(r1 - sum) > 1e-5 * std::fabs(sum)) throw NumericalError("J_n_gamma: quadrature not converged");
  } else {
    sum = jn_lattice(spec, n, mm);
  }
  return std::pow(double(n), -H * spec.alpha) * sum;
}

}  // namespace alrd
