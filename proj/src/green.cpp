#include "alrd/green.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "alrd/errors.hpp"
#include "alrd/fft.hpp"
#include "alrd/quadrature.hpp"
#include "alrd/specfun.hpp"

namespace alrd {

WalkModel WalkModel::three_n() {
  const double p = 1.0 / 3.0;
  return {Walk::ThreeN, {{1, 0, p}, {0, 1, p}, {0, -1, p}}};
}

WalkModel WalkModel::four_n() { return {Walk::FourN, {{1, 0, 0.25}, {-1, 0, 0.25}, {0, 1, 0.25}, {0, -1, 0.25}}}; }

Walk parse_walk(const std::string& s) {
  if (s == "3n" || s == "3N" || s == "ThreeN") return Walk::ThreeN;
  if (s == "4n" || s == "4N" || s == "FourN") return Walk::FourN;
  throw ConfigError("unknown walk model '" + s + "' (expected 3n or 4n)");
}

std::complex<double> p_hat(const WalkModel& m, double x, double y) {
  std::complex<double> r = 0.0;
  for (const auto& st : m.steps) r += st.prob * std::polar(1.0, -(st.dt * x + st.ds * y));
  return r;
}

std::complex<double> one_minus_a_phat(const WalkModel& m, double a, double x, double y) {
  double re = 1.0 - a, im = 0.0;
  for (const auto& st : m.steps) {
    const double th = st.dt * x + st.ds * y;
    const double sh = std::sin(0.5 * th);
    re += a * st.prob * 2.0 * sh * sh;
    im += a * st.prob * std::sin(th);
  }
  return {re, im};
}

double walk_q(const WalkModel& m) {
  double q1 = 0.0;
  for (const auto& st : m.steps)
    if (st.dt == 0) q1 += st.prob;
  return std::min(q1, 1.0 - q1);
}

void GreenKernel::validate() const {
  if (!(a >= 0.0 && a < 1.0)) throw DomainError("GreenKernel: a must lie in [0,1)");
  if (!(truncation_tol > 0.0 && truncation_tol <= 1e-3)) throw DomainError("GreenKernel: truncation_tol must lie in (0,1e-3]");
}

double pk(const WalkModel& m, std::int64_t k, std::int64_t t, std::int64_t s) {
  if (k < 0) return 0.0;
  if (m.variant == Walk::ThreeN) {
    if (t < 0 || t > k) return 0.0;
    const std::int64_t r = k - t;
    if (std::llabs(s) > r || ((r + s) & 1)) return 0.0;
    return binom_pmf({t, k, 1.0 / 3.0}) * rw1d_pmf(r, s);
  }
  if (std::llabs(t) + std::llabs(s) > k || ((k + t + s) & 1)) return 0.0;
  return rw1d_pmf(k, t + s) * rw1d_pmf(k, t - s);
}

std::int64_t series_terms(double a, double tol) {
  if (a == 0.0) return 0;
  const double K = std::ceil(std::log(tol * (1.0 - a)) / std::log(a));
  if (!(K < 9e18)) return std::numeric_limits<std::int64_t>::max();
  return std::max<std::int64_t>(0, static_cast<std::int64_t>(K));
}

namespace {

struct Neumaier {
  double s = 0.0, c = 0.0;
  void add(double v) {
    const double t = s + v;
    if (std::fabs(s) >= std::fabs(v)) c += (s - t) + v;
    else c += (v - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

double log_rw1d(std::int64_t u, std::int64_t v) { return log_binom_pmf({(u + v) / 2, u, 0.5}); }

}  // namespace

GreenValue green_series(const GreenKernel& kern, std::int64_t t, std::int64_t s, std::int64_t term_cap) {
  kern.validate();
  GreenValue out;
  if (kern.a == 0.0) {
    out.value = (t == 0 && s == 0) ? 1.0 : 0.0;
    out.terms = 1;
    return out;
  }
  const std::int64_t K = series_terms(kern.a, kern.truncation_tol);
  if (K > term_cap)
    throw ResourceError("green_series: " + std::to_string(K) + " terms needed (cap " + std::to_string(term_cap) +
                        "); use the FFT or line-integral backend");
  const double la = std::log(kern.a);
  Neumaier acc;
  std::int64_t k0, terms = 0;
  if (kern.model.variant == Walk::ThreeN) {
    if (t < 0) {
      out.tail_bound = 0.0;
      return out;
    }
    k0 = t + std::llabs(s);
    for (std::int64_t k = k0; k <= K; k += 2) {
      const double lt = k * la + log_binom_pmf({t, k, 1.0 / 3.0}) + log_rw1d(k - t, s);
      acc.add(std::exp(lt));
      ++terms;
    }
  } else {
    k0 = std::llabs(t) + std::llabs(s);
    for (std::int64_t k = k0; k <= K; k += 2) {
      const double lt = k * la + log_rw1d(k, t + s) + log_rw1d(k, t - s);
      acc.add(std::exp(lt));
      ++terms;
    }
  }
  out.value = acc.value();
  out.terms = terms;
  out.tail_bound = std::pow(kern.a, double(std::max(K, k0 - 1) + 1)) / (1.0 - kern.a);
  return out;
}

double green_tail_mass(const WalkModel& m, double a, double R, int dir) {
  auto comp = [&](const Step& st) {
    switch (dir) {
      case 0: return double(st.dt);
      case 1: return double(-st.dt);
      case 2: return double(st.ds);
      default: return double(-st.ds);
    }
  };
  if (R <= 0.0) return 1.0 / (1.0 - a);
  double cmax = -1.0;
  for (const auto& st : m.steps) cmax = std::max(cmax, comp(st));
  if (cmax <= 0.0) return 0.0;
  if (a == 0.0) return 0.0;
  auto mgf = [&](double th) {
    double v = 0.0;
    for (const auto& st : m.steps) v += st.prob * std::exp(th * comp(st));
    return v;
  };
  // theta_max solves a*m(theta) = 1.
  double lo = 0.0, hi = 1.0;
  while (a * mgf(hi) < 1.0 && hi < 700.0) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (a * mgf(mid) < 1.0 ? lo : hi) = mid;
  }
  const double thmax = lo;
  auto logb = [&](double th) {
    const double d = 1.0 - a * mgf(th);
    if (d <= 0.0) return std::numeric_limits<double>::infinity();
    return -th * R - std::log(d);
  };
  // Golden-section search on a convex objective.
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x0 = 0.0, x3 = thmax;
  double x1 = x3 - g * (x3 - x0), x2 = x0 + g * (x3 - x0);
  double f1 = logb(x1), f2 = logb(x2);
  for (int i = 0; i < 200; ++i) {
    if (f1 < f2) {
      x3 = x2;
      x2 = x1;
      f2 = f1;
      x1 = x3 - g * (x3 - x0);
      f1 = logb(x1);
    } else {
      x0 = x1;
      x1 = x2;
      f1 = f2;
      x2 = x0 + g * (x3 - x0);
      f2 = logb(x2);
    }
  }
  const double best = std::min({f1, f2, logb(0.0)});
  return std::exp(best);
}

std::int64_t green_tail_radius(const WalkModel& m, double a, double tol, int dir) {
  if (green_tail_mass(m, a, 1.0, dir) <= tol) return 1;
  std::int64_t hi = 2;
  while (green_tail_mass(m, a, double(hi), dir) > tol) {
    hi *= 2;
    if (hi > (std::int64_t(1) << 40)) throw ResourceError("green_tail_radius: tolerance unreachable");
  }
  std::int64_t lo = hi / 2;
  while (hi - lo > 1) {
    const std::int64_t mid = (lo + hi) / 2;
    (green_tail_mass(m, a, double(mid), dir) > tol ? lo : hi) = mid;
  }
  return hi;
}

namespace {
int next_pow2(std::int64_t v) {
  std::int64_t p = 1;
  while (p < v) p <<= 1;
  if (p > (std::int64_t(1) << 30)) throw ResourceError("FFT grid dimension overflow");
  return static_cast<int>(p);
}
}  // namespace

void fft_grid_size(const WalkModel& m, double a, double tol, int reach_t, int reach_s, int& Mt, int& Ms) {
  const double q = 0.25 * tol;
  const std::int64_t rt = std::max(green_tail_radius(m, a, q, 0), green_tail_radius(m, a, q, 1));
  const std::int64_t rs = std::max(green_tail_radius(m, a, q, 2), green_tail_radius(m, a, q, 3));
  Mt = next_pow2(std::max<std::int64_t>(2 * reach_t + 1, rt + reach_t));
  Ms = next_pow2(std::max<std::int64_t>(2 * reach_s + 1, rs + reach_s));
  if (std::int64_t(Mt) * Ms > kFftCellCap)
    throw ResourceError("FFT grid " + std::to_string(Mt) + "x" + std::to_string(Ms) + " exceeds the cell cap " +
                        std::to_string(kFftCellCap) + " for the requested tolerance");
}

std::vector<double> green_periodic(const WalkModel& m, double a, int Mt, int Ms) {
  std::vector<std::complex<double>> buf(std::size_t(Mt) * Ms);
  for (int j = 0; j < Mt; ++j) {
    const double x = 2.0 * kPi * j / Mt;
    for (int l = 0; l < Ms; ++l) {
      const double y = 2.0 * kPi * l / Ms;
      buf[std::size_t(j) * Ms + l] = 1.0 / one_minus_a_phat(m, a, x, y);
    }
  }
  fft2d(buf, Mt, Ms, +1);
  std::vector<double> out(buf.size());
  const double norm = 1.0 / (double(Mt) * Ms);
  for (std::size_t i = 0; i < buf.size(); ++i) out[i] = buf[i].real() * norm;
  return out;
}

double GreenGrid::at(int t, int s) const {
  const int i = ((t % Mt) + Mt) % Mt, j = ((s % Ms) + Ms) % Ms;
  return periodic[std::size_t(i) * Ms + j];
}

double GreenGrid::total() const {
  Neumaier acc;
  for (double v : periodic) acc.add(v);
  return acc.value();
}

GreenGrid green_fft(const GreenKernel& kern, int half_width) {
  kern.validate();
  if (half_width < 1 || (half_width & (half_width - 1)))
    throw DomainError("green_fft: half_width must be a power of two");
  GreenGrid g;
  g.half_width = half_width;
  fft_grid_size(kern.model, kern.a, kern.truncation_tol, half_width, half_width, g.Mt, g.Ms);
  g.periodic = green_periodic(kern.model, kern.a, g.Mt, g.Ms);
  g.alias_bound = green_tail_mass(kern.model, kern.a, g.Mt - half_width, 0) +
                  green_tail_mass(kern.model, kern.a, g.Mt - half_width, 1) +
                  green_tail_mass(kern.model, kern.a, g.Ms - half_width, 2) +
                  green_tail_mass(kern.model, kern.a, g.Ms - half_width, 3);
  return g;
}

std::complex<double> green_hat_s(const WalkModel& m, double a, std::int64_t t, double y) {
  using C = std::complex<double>;
  if (m.variant == Walk::ThreeN) {
    if (t < 0) return 0.0;
    const double sh = std::sin(0.5 * y);
    const double den = (1.0 - 2.0 * a / 3.0) + (4.0 * a / 3.0) * sh * sh;  // 1 - (2a/3) cos y
    return C(std::exp(t * std::log(a / 3.0 / den) - std::log(den)), 0.0);
  }
  const double sh = std::sin(0.5 * y);
  const double cmb = (1.0 - a) + a * sh * sh;  // c - b with c = 1 - (a/2) cos y, b = a/2
  const double cpb = cmb + a;
  const double r = std::sqrt(cmb * cpb);
  const double rho = 0.5 * a / (0.5 * (cmb + cpb) + r);
  return C(std::pow(rho, double(std::llabs(t))) / r, 0.0);
}

GreenValue green_line(const GreenKernel& kern, std::int64_t t, std::int64_t s) {
  kern.validate();
  GreenValue out;
  const double a = kern.a;
  if (a == 0.0) {
    out.value = (t == 0 && s == 0) ? 1.0 : 0.0;
    return out;
  }
  if (kern.model.variant == Walk::ThreeN && t < 0) return out;
  const double as = double(std::llabs(s));
  std::function<double(double)> f;
  if (kern.model.variant == Walk::FourN) {
    f = [=](double x) {
      const double sh = std::sin(0.5 * x);
      const double cmb = (1.0 - a) + a * sh * sh;
      const double cpb = cmb + a;
      const double r = std::sqrt(cmb * cpb);
      const double rho = 0.5 * a / (0.5 * (cmb + cpb) + r);
      return std::cos(double(t) * x) * std::pow(rho, as) / r / kPi;
    };
  } else {
    using C = std::complex<double>;
    f = [=](double x) {
      const double sh = std::sin(0.5 * x);
      const C e = std::polar(1.0, -x);
      const C cmb = C((1.0 - a) + (a / 3.0) * 2.0 * sh * sh, (a / 3.0) * std::sin(x));
      const C c = 1.0 - (a / 3.0) * e;
      const C cpb = c + 2.0 * a / 3.0;
      C r = std::sqrt(cmb * cpb);
      if ((std::conj(c) * r).real() < 0.0) r = -r;
      const C rho = (2.0 * a / 3.0) / (c + r);
      const C v = std::polar(1.0, double(t) * x) * std::pow(rho, as) / r;
      return v.real() / kPi;
    };
  }
  std::vector<double> br = geometric_breaks(0.0, kPi, true, 50);
  const std::int64_t at = std::llabs(t);
  if (at >= 1) {
    const std::int64_t nb = std::min<std::int64_t>(at, 200000);
    for (std::int64_t k = 1; k < nb; ++k) br.push_back(kPi * double(k) / double(nb));
  }
  QuadOptions opt;
  opt.rel_tol = 1e-12;
  opt.abs_tol = kern.truncation_tol * 1e-3;
  opt.max_intervals = 2000000;
  const QuadResult q = integrate(f, 0.0, kPi, opt, br);
  out.value = q.value;
  out.tail_bound = q.error;
  out.terms = q.evals;
  if (!q.converged && !(q.error <= 1e-10 * std::fabs(q.value) + opt.abs_tol))
    throw NumericalError("green_line: quadrature did not converge (error estimate " + std::to_string(q.error) + ")");
  return out;
}

double green_eval(const GreenKernel& kern, std::int64_t t, std::int64_t s) {
  switch (kern.backend) {
    case GreenBackend::Series: return green_series(kern, t, s).value;
    case GreenBackend::LineIntegral: return green_line(kern, t, s).value;
    case GreenBackend::FftInversion: {
      int hw = 1;
      while (hw < std::max(std::llabs(t), std::llabs(s))) hw <<= 1;
      return green_fft(kern, hw).at(int(t), int(s));
    }
  }
  return 0.0;
}

double h3(double t, double s, double z) {
  if (t <= 0.0) return 0.0;
  if (!(z > 0.0)) throw DomainError("h3: z must be positive");
  return 1.5 / std::sqrt(kPi * t) * std::exp(-3.0 * z * t - s * s / (4.0 * t));
}

double h4(double t, double s, double z) {
  if (t == 0.0 && s == 0.0) throw DomainError("h4: logarithmic singularity at the origin");
  if (!(z > 0.0)) throw DomainError("h4: z must be positive");
  return 2.0 / kPi * bessel_k0(2.0 * std::sqrt(z * (t * t + s * s)));
}

double h3_bound(double t, double s, double z) {
  if (t <= 0.0) return 0.0;
  return std::exp(-z * t - s * s / (16.0 * t)) / std::sqrt(t);
}

double h4_bound(double t, double s, double z, double lambda, double c) {
  return h4(t, s, z) + std::exp(-c * std::sqrt(lambda) * (std::sqrt(std::fabs(t)) + std::sqrt(std::fabs(s))));
}

std::vector<ProbeRow> scaling_limit_probe(const WalkModel& m, double t, double s, double z,
                                          const std::vector<double>& lambdas) {
  if (!(z > 0.0)) throw DomainError("scaling_limit_probe: z must be positive");
  if (m.variant == Walk::ThreeN && !(t > 0.0)) throw DomainError("scaling_limit_probe: 3N requires t > 0");
  if (m.variant == Walk::FourN && t == 0.0 && s == 0.0)
    throw DomainError("scaling_limit_probe: 4N requires (t,s) != (0,0)");
  std::vector<ProbeRow> rows;
  for (double lam : lambdas) {
    ProbeRow r;
    r.lambda = lam;
    GreenKernel k;
    k.model = m;
    k.truncation_tol = 1e-13;
    std::int64_t T, S;
    double scale;
    if (m.variant == Walk::ThreeN) {
      k.a = 1.0 - z / lam;
      T = std::int64_t(std::floor(lam * t));
      S = std::int64_t(std::floor(std::sqrt(lam) * s));
      scale = std::sqrt(lam);
      r.limit_kernel = h3(t, s, z);
    } else {
      k.a = 1.0 - z / (lam * lam);
      T = std::int64_t(std::floor(lam * t));
      S = std::int64_t(std::floor(lam * s));
      scale = 1.0;
      r.limit_kernel = h4(t, s, z);
    }
    if (!(k.a > 0.0 && k.a < 1.0))
      throw DomainError("scaling_limit_probe: lambda=" + std::to_string(lam) + " gives a outside (0,1)");
    if (series_terms(k.a, k.truncation_tol) <= 2'000'000) {
      k.backend = GreenBackend::Series;
      r.backend = "series";
    } else {
      k.backend = GreenBackend::LineIntegral;
      r.backend = "line";
    }
    r.rescaled_green = scale * green_eval(k, T, S);
    r.rel_err = std::fabs(r.rescaled_green / r.limit_kernel - 1.0);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace alrd
