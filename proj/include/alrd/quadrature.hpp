#pragma once
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

namespace alrd {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  long evals = 0;
  bool converged = true;
};

struct QuadOptions {
  double abs_tol = 0.0;
  double rel_tol = 1e-10;
  int max_intervals = 4000;
};

struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

// Legendre nodes/weights on [-1,1].
GaussRule gauss_legendre(int n);
// Nodes/weights on [0,1] for weight w^beta (w = 1-a in callers).
GaussRule gauss_jacobi_unit(int n, double beta);

namespace detail {
extern const double kXgk[11];
extern const double kWgk[11];
extern const double kWg[5];

template <class F>
inline void gk21(F& f, double a, double b, double& val, double& err) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double rk = fc * kWgk[10], rg = 0.0;
  for (int j = 0; j < 10; ++j) {
    const double dx = h * kXgk[j];
    const double f1 = f(c - dx), f2 = f(c + dx);
    rk += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) rg += kWg[j / 2] * (f1 + f2);
  }
  val = rk * h;
  err = std::fabs((rk - rg) * h);
}
}  // namespace detail

// Adaptive 21-point Gauss-Kronrod with global bisection, optional interior breakpoints.
template <class F>
QuadResult integrate(F&& f, double a, double b, const QuadOptions& opt = {}, const std::vector<double>& breaks = {}) {
  struct Seg {
    double a, b, v, e;
    bool operator<(const Seg& o) const { return e < o.e; }
  };
  QuadResult r;
  if (a == b) return r;
  double sgn = 1.0;
  if (b < a) {
    std::swap(a, b);
    sgn = -1.0;
  }
  std::vector<double> pts{a};
  for (double p : breaks)
    if (p > a && p < b) pts.push_back(p);
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  std::priority_queue<Seg> q;
  double tot = 0.0, terr = 0.0;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    Seg s{pts[i], pts[i + 1], 0, 0};
    if (s.b <= s.a) continue;
    detail::gk21(f, s.a, s.b, s.v, s.e);
    r.evals += 21;
    tot += s.v;
    terr += s.e;
    q.push(s);
  }
  int nint = static_cast<int>(q.size());
  while (terr > std::max(opt.abs_tol, opt.rel_tol * std::fabs(tot)) && !q.empty()) {
    if (nint >= opt.max_intervals) {
      r.converged = false;
      break;
    }
    Seg s = q.top();
    q.pop();
    const double m = 0.5 * (s.a + s.b);
    if (!(m > s.a && m < s.b)) {  // interval exhausted at machine precision
      r.converged = false;
      q.push({s.a, s.b, s.v, 0.0});
      terr -= s.e;
      continue;
    }
    Seg l{s.a, m, 0, 0}, rr{m, s.b, 0, 0};
    detail::gk21(f, l.a, l.b, l.v, l.e);
    detail::gk21(f, rr.a, rr.b, rr.v, rr.e);
    r.evals += 42;
    tot += l.v + rr.v - s.v;
    terr += l.e + rr.e - s.e;
    q.push(l);
    q.push(rr);
    ++nint;
  }
  // Recompute totals from leaves to avoid drift.
  tot = 0.0;
  terr = 0.0;
  while (!q.empty()) {
    tot += q.top().v;
    terr += q.top().e;
    q.pop();
  }
  r.value = sgn * tot;
  r.error = terr;
  return r;
}

// Integral over [a, inf) via x = a + t/(1-t).
template <class F>
QuadResult integrate_to_inf(F&& f, double a, const QuadOptions& opt = {}, double scale = 1.0) {
  auto g = [&](double t) {
    if (t >= 1.0) return 0.0;
    const double om = 1.0 - t;
    const double v = f(a + scale * t / om);
    return std::isfinite(v) ? v * scale / (om * om) : 0.0;
  };
  std::vector<double> br{0.5, 0.9, 0.99};
  return integrate(g, 0.0, 1.0, opt, br);
}

// Breakpoints a + (b-a)*2^-k (toward a) or b - (b-a)*2^-k (toward b), k = 1..levels.
std::vector<double> geometric_breaks(double a, double b, bool toward_a, int levels);

}  // namespace alrd
