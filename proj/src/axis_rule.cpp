#include "alrd/axis_rule.hpp"

#include <algorithm>
#include <cmath>

#include "alrd/quadrature.hpp"
#include "alrd/specfun.hpp"
#include "alrd/spectra.hpp"

namespace alrd {

AxisRule panel_rule(std::vector<double> breaks, int order, const std::function<double(double)>& W) {
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  static thread_local std::vector<GaussRule> cache(64);
  GaussRule& g = cache.at(order);
  if (g.x.empty()) g = gauss_legendre(order);
  AxisRule r;
  r.x.reserve(order * breaks.size());
  r.w.reserve(order * breaks.size());
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i], b = breaks[i + 1];
    if (!(b > a)) continue;
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    for (int j = 0; j < order; ++j) {
      const double x = c + h * g.x[j];
      r.x.push_back(x);
      r.w.push_back(h * g.w[j] * W(x));
    }
  }
  return r;
}

void add_singular_breaks(std::vector<double>& breaks, const std::vector<double>& sing, double lo, double hi,
                         double width, int levels) {
  for (double s : sing) {
    if (s < lo || s > hi) continue;
    breaks.push_back(s);
    double h = width;
    for (int k = 0; k < levels; ++k) {
      if (s - h > lo) breaks.push_back(s - h);
      if (s + h < hi) breaks.push_back(s + h);
      h *= 0.5;
    }
  }
}

AxisRule fejer_rule(long long n, const RuleParams& p, const std::vector<double>& sing) {
  const double T = 2.0 * kPi / double(n);
  const double X = std::min(kPi, p.periods * T);
  std::vector<double> br{-kPi, kPi};
  if (X < kPi) {
    br.push_back(-X);
    br.push_back(X);
    for (double y = X * 1.5; y < kPi; y *= 1.5) {
      br.push_back(y);
      br.push_back(-y);
    }
  }
  const long long nh = static_cast<long long>(std::ceil(X / (0.5 * T)));
  for (long long k = 1; k < nh; ++k) {
    br.push_back(k * 0.5 * T);
    br.push_back(-k * 0.5 * T);
  }
  add_singular_breaks(br, sing, -kPi, kPi, std::min(0.5 * T, 0.5), p.levels);
  return panel_rule(br, p.order, [n, X](double x) {
    return std::fabs(x) <= X ? fejer_sq(n, x) : 0.5 / std::pow(std::sin(0.5 * x), 2);
  });
}

AxisRule continuum_rule(double len, const RuleParams& p, const std::vector<double>& sing) {
  const double T = 2.0 * kPi / len;
  const double X = p.periods * T;
  std::vector<double> br{-X, X};
  for (int k = 1; k < 2 * p.periods; ++k) {
    br.push_back(k * 0.5 * T);
    br.push_back(-k * 0.5 * T);
  }
  double y = X;
  for (int k = 0; k < 120; ++k) {  // ratio 1.5 out to ~1e21 X
    y *= 1.5;
    br.push_back(y);
    br.push_back(-y);
  }
  const double ymax = y;
  add_singular_breaks(br, sing, -ymax, ymax, std::min(0.5 * T, 0.5), p.levels);
  return panel_rule(br, p.order, [len, X](double u) {
    if (std::fabs(u) > X) return 2.0 / (u * u);
    const double s = std::sin(0.5 * u * len);
    if (u == 0.0) return len * len;
    return 4.0 * s * s / (u * u);
  });
}

}  // namespace alrd
