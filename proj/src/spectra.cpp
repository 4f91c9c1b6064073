#include "alrd/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include "alrd/axis_rule.hpp"
#include "alrd/errors.hpp"
#include "alrd/quadrature.hpp"
#include "alrd/specfun.hpp"

namespace alrd {

SpectralModel SpectralModel::type_i(double H1, double H2, double c) {
  SpectralModel m;
  m.kind = SpectralKind::TypeI;
  m.H1 = H1;
  m.H2 = H2;
  m.c = c;
  m.validate();
  return m;
}

SpectralModel SpectralModel::type_ii(double d1, double d2) {
  SpectralModel m;
  m.kind = SpectralKind::TypeII;
  m.d1 = d1;
  m.d2 = d2;
  m.validate();
  return m;
}

SpectralModel SpectralModel::lavancier(double theta1, double theta2, double d) {
  SpectralModel m;
  m.kind = SpectralKind::Lavancier;
  m.theta1 = theta1;
  m.theta2 = theta2;
  m.d = d;
  m.validate();
  return m;
}

void SpectralModel::validate() const {
  switch (kind) {
    case SpectralKind::TypeI:
      if (!(H1 > 0 && H1 < 2 && H2 > 0 && H2 < 2 && H1 <= H2)) throw DomainError("TypeI: need 0 < H1 <= H2 < 2");
      if (!(c > 0)) throw DomainError("TypeI: c must be positive");
      break;
    case SpectralKind::TypeII:
      if (!(d1 >= 0 && d1 < 0.5 && d2 >= 0 && d2 < 0.5)) throw DomainError("TypeII: need d1, d2 in [0, 1/2)");
      break;
    case SpectralKind::Lavancier:
      if (!(d > 0 && d < 0.5)) throw DomainError("Lavancier: need d in (0, 1/2)");
      if (theta1 == 0.0 && theta2 == 0.0) throw DomainError("Lavancier: theta1 and theta2 both zero");
      break;
  }
}

std::string SpectralModel::name() const {
  std::ostringstream os;
  switch (kind) {
    case SpectralKind::TypeI: os << "typeI(H1=" << H1 << ",H2=" << H2 << ",c=" << c << ")"; break;
    case SpectralKind::TypeII: os << "typeII(d1=" << d1 << ",d2=" << d2 << ")"; break;
    case SpectralKind::Lavancier: os << "lavancier(theta1=" << theta1 << ",theta2=" << theta2 << ",d=" << d << ")"; break;
  }
  return os.str();
}

double SpectralModel::gamma0() const {
  switch (kind) {
    case SpectralKind::TypeI: return H1 / H2;
    case SpectralKind::Lavancier: return 1.0;
    default: return std::numeric_limits<double>::quiet_NaN();
  }
}

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::TypeI_Gamma0: return "typeI_gamma0";
    case Regime::TypeI_AboveH1Lt1: return "typeI_above_H1lt1";
    case Regime::TypeI_AboveH1Gt1: return "typeI_above_H1gt1";
    case Regime::TypeI_BelowH2Lt1: return "typeI_below_H2lt1";
    case Regime::TypeI_BelowH2Gt1: return "typeI_below_H2gt1";
    case Regime::TypeII_Affine: return "typeII_affine";
    case Regime::Lav_Gamma1: return "lavancier_gamma1";
    case Regime::Lav_Above: return "lavancier_above";
    case Regime::Lav_Below: return "lavancier_below";
    case Regime::N3_Above: return "3n_above";
    case Regime::N3_BelowBetaHigh: return "3n_below_beta_high";
    case Regime::N3_BelowBetaLow: return "3n_below_beta_low";
    case Regime::N4_Above: return "4n_above";
    case Regime::N4_AboveBetaLow: return "4n_above_beta_low";
    case Regime::N4_BelowBetaHigh: return "4n_below_beta_high";
    case Regime::N4_BelowBetaLow: return "4n_below_beta_low";
  }
  return "?";
}

namespace {

constexpr double kGammaEps = 1e-12;

double gfac(const SpectralModel& m, double x, double y) { return m.g_factor ? m.g_factor(x, y) : 1.0; }

double powabs(double v, double e) { return e == 0.0 ? 1.0 : std::pow(std::fabs(v), e); }

double type_i_h(const SpectralModel& m, double x, double y) {
  return std::pow(x * x + m.c * std::pow(std::fabs(y), 2.0 * m.H2 / m.H1), -0.5 * m.H1);
}

// Increment covariance of a process with stationary increments and variance scale*|t|^{2H}.
double incr1(double scale, double H, double u, double x, double u2, double x2) {
  auto p = [H](double v) { return v == 0.0 ? 0.0 : std::pow(std::fabs(v), 2.0 * H); };
  return scale * 0.5 * (p(x - u2) + p(u - x2) - p(x - x2) - p(u - u2));
}

}  // namespace

double density(const SpectralModel& m, double x, double y) {
  if (std::fabs(x) > kPi || std::fabs(y) > kPi) throw DomainError("density: (x,y) outside [-pi,pi]^2");
  double f = 0.0;
  switch (m.kind) {
    case SpectralKind::TypeI:
      if (x == 0.0 && y == 0.0) throw DomainError("density: TypeI singular at the origin");
      f = type_i_h(m, x, y);
      break;
    case SpectralKind::TypeII:
      if ((x == 0.0 && m.d1 > 0) || (y == 0.0 && m.d2 > 0)) throw DomainError("density: TypeII singular on the axes");
      f = powabs(x, -2.0 * m.d1) * powabs(y, -2.0 * m.d2);
      break;
    case SpectralKind::Lavancier: {
      const double l = m.theta1 * x + m.theta2 * y;
      if (l == 0.0) throw DomainError("density: Lavancier singular on its line");
      f = std::pow(std::fabs(l), -2.0 * m.d);
      break;
    }
  }
  return f * gfac(m, x, y);
}

double rho1_sq(double H1) {
  if (!(H1 > 1 && H1 < 2)) throw DomainError("rho1_sq: need 1 < H1 < 2");
  const double b = (H1 - 1.0) / 2.0;
  return std::exp(log_gamma(0.5) + log_gamma(b) - log_gamma(0.5 + b));
}

double rho2_sq(double H1, double H2) {
  if (!(H2 > 1 && H2 < 2 && H1 > 0)) throw DomainError("rho2_sq: need 1 < H2 < 2");
  const double a = H1 / (2.0 * H2), b = (H1 * H2 - H1) / (2.0 * H2);
  return (H1 / H2) * std::exp(log_gamma(a) + log_gamma(b) - log_gamma(a + b));
}

double limit_function(const SpectralModel& m, double x, double y, double gamma) {
  if (x == 0.0 && y == 0.0) throw DomainError("limit_function: origin");
  if (!(gamma > 0)) throw DomainError("limit_function: gamma must be positive");
  switch (m.kind) {
    case SpectralKind::TypeI: {
      const double g0 = m.gamma0();
      if (std::fabs(gamma - g0) <= kGammaEps) return type_i_h(m, x, y);
      if (gamma > g0) {
        if (m.H1 < 1) return std::pow(std::fabs(x), -m.H1);
        if (m.H1 > 1)  // v-density of the line measure on u = 0
          return rho1_sq(m.H1) * std::pow(m.c, (1 - m.H1) / 2) *
                 std::pow(std::fabs(y), -(m.H1 * m.H2 - m.H2) / m.H1);
        throw DomainError("limit_function: H1 = 1 boundary");
      }
      if (m.H2 < 1) return std::pow(std::fabs(y), -m.H2);
      if (m.H2 > 1)
        return rho2_sq(m.H1, m.H2) * std::pow(m.c, -m.H1 / (2 * m.H2)) *
               std::pow(std::fabs(x), -(m.H1 * m.H2 - m.H1) / m.H2);
      throw DomainError("limit_function: H2 = 1 boundary");
    }
    case SpectralKind::TypeII: return powabs(x, -2.0 * m.d1) * powabs(y, -2.0 * m.d2);
    case SpectralKind::Lavancier:
      if (std::fabs(gamma - 1.0) <= kGammaEps) return std::pow(std::fabs(m.theta1 * x + m.theta2 * y), -2.0 * m.d);
      if (gamma > 1.0) return std::pow(std::fabs(m.theta1 * x), -2.0 * m.d);
      return std::pow(std::fabs(m.theta2 * y), -2.0 * m.d);
  }
  return 0.0;
}

double fejer_sq(long long n, double u) {
  const double two_pi = 2.0 * kPi;
  double r = std::remainder(u, two_pi);
  const double s = std::sin(0.5 * r);
  if (s == 0.0) return double(n) * double(n);
  const double num = std::sin(0.5 * double(n) * r);
  return num * num / (s * s);
}

double kappa_sq(double d) {
  if (!(d > 0 && d < 0.5)) throw DomainError("kappa_sq: d must lie in (0, 1/2)");
  return kPi / ((d + 0.5) * std::exp(log_gamma(2 * d + 1)) * std::cos(kPi * d));
}

double kappa_sq_integral(double d) {
  if (!(d > 0 && d < 0.5)) throw DomainError("kappa_sq_integral: d must lie in (0, 1/2)");
  const double p = 2.0 + 2.0 * d;
  auto f = [p](double x) {
    const double s = std::sin(0.5 * x);
    return 2.0 * s * s * std::pow(x, -p);
  };
  const int N = 400;
  const double X = 2.0 * kPi * N;
  std::vector<double> br = geometric_breaks(0.0, kPi, true, 60);
  for (int k = 1; k < 2 * N; ++k) br.push_back(kPi * k);
  QuadOptions o;
  o.rel_tol = 1e-13;
  o.max_intervals = 200000;
  const QuadResult q = integrate(f, 0.0, X, o, br);
  // tail: int_X^inf (1 - cos x) x^{-p}, with sin X = 0, cos X = 1
  const double tail = std::pow(X, 1 - p) / (p - 1) - (p * std::pow(X, -p - 1) - p * (p + 1) * (p + 2) * std::pow(X, -p - 3));
  return 4.0 * (q.value + tail);
}

ScalingLaw H_of_gamma(const SpectralModel& m, double gamma) {
  if (!(gamma > 0)) throw DomainError("H_of_gamma: gamma must be positive");
  ScalingLaw L;
  L.gamma = gamma;
  switch (m.kind) {
    case SpectralKind::TypeI: {
      const double H1 = m.H1, H2 = m.H2;
      if (H1 == 1.0 || H2 == 1.0) throw DomainError("H_of_gamma: boundary H1 = 1 or H2 = 1 excluded");
      const double g0 = H1 / H2;
      L.gamma0 = g0;
      if (std::fabs(gamma - g0) <= kGammaEps) {
        L.H = (H1 + H2 + H1 * H2) / (2 * H2);
        L.regime = Regime::TypeI_Gamma0;
      } else if (gamma > g0) {
        if (H1 < 1) {
          L.H = (1 + gamma + H1) / 2;
          L.regime = Regime::TypeI_AboveH1Lt1;
        } else {
          L.H = (gamma * H1 + gamma * H1 * H2 - gamma * H2 + 2 * H1) / (2 * H1);
          L.regime = Regime::TypeI_AboveH1Gt1;
        }
      } else {
        if (H2 < 1) {
          L.H = (1 + gamma + gamma * H2) / 2;
          L.regime = Regime::TypeI_BelowH2Lt1;
        } else {
          L.H = (H2 + H1 * H2 - H1 + 2 * gamma * H2) / (2 * H2);
          L.regime = Regime::TypeI_BelowH2Gt1;
        }
      }
      break;
    }
    case SpectralKind::TypeII:
      L.gamma0 = std::numeric_limits<double>::quiet_NaN();
      L.H = (1 + gamma) / 2 + m.d1 + m.d2 * gamma;
      L.regime = Regime::TypeII_Affine;
      break;
    case SpectralKind::Lavancier:
      L.gamma0 = 1.0;
      if (std::fabs(gamma - 1.0) <= kGammaEps) {
        L.H = 1.0 + m.d;
        L.regime = Regime::Lav_Gamma1;
      } else if (gamma > 1.0) {
        L.H = (1 + gamma) / 2 + m.d;
        L.regime = Regime::Lav_Above;
      } else {
        L.H = (1 + gamma) / 2 + m.d * gamma;
        L.regime = Regime::Lav_Below;
      }
      break;
  }
  return L;
}

namespace {

long long side_count(long long n, double gamma) {
  const double v = std::pow(double(n), gamma);
  return std::max<long long>(1, static_cast<long long>(std::floor(v * (1 + 1e-12))));
}

double tensor(const AxisRule& rx, const AxisRule& ry, const std::function<double(double, double)>& F) {
  double tot = 0.0;
  for (std::size_t i = 0; i < rx.x.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < ry.x.size(); ++j) row += ry.w[j] * F(rx.x[i], ry.x[j]);
    tot += rx.w[i] * row;
  }
  return tot;
}

double vps_once(const SpectralModel& m, long long n, long long mm, const RuleParams& p) {
  const bool separable = m.kind == SpectralKind::TypeII && !m.g_factor;
  if (separable) {
    const AxisRule rx = fejer_rule(n, p), ry = fejer_rule(mm, p);
    double ix = 0.0, iy = 0.0;
    for (std::size_t i = 0; i < rx.x.size(); ++i) ix += rx.w[i] * powabs(rx.x[i], -2 * m.d1);
    for (std::size_t j = 0; j < ry.x.size(); ++j) iy += ry.w[j] * powabs(ry.x[j], -2 * m.d2);
    return ix * iy;
  }
  if (m.kind == SpectralKind::Lavancier && m.theta1 != 0.0 && m.theta2 != 0.0) {
    const AxisRule rx = fejer_rule(n, p);
    double tot = 0.0;
    for (std::size_t i = 0; i < rx.x.size(); ++i) {
      const double x = rx.x[i];
      const AxisRule ry = fejer_rule(mm, p, {0.0, -m.theta1 * x / m.theta2});
      double row = 0.0;
      for (std::size_t j = 0; j < ry.x.size(); ++j) row += ry.w[j] * density(m, x, ry.x[j]);
      tot += rx.w[i] * row;
    }
    return tot;
  }
  const AxisRule rx = fejer_rule(n, p), ry = fejer_rule(mm, p);
  return tensor(rx, ry, [&m](double x, double y) { return density(m, x, y); });
}

}  // namespace

double variance_partial_sum(const SpectralModel& m, long long n, double gamma, double rel_tol) {
  m.validate();
  if (n < 1) throw DomainError("variance_partial_sum: n must be >= 1");
  if (!(gamma > 0)) throw DomainError("variance_partial_sum: gamma must be positive");
  const long long mm = side_count(n, gamma);
  const RuleParams p1{8, 32, 40}, p2{12, 64, 50};
  const double r1 = vps_once(m, n, mm, p1);
  const double r2 = vps_once(m, n, mm, p2);
  if (!(std::fabs(r1 - r2) <= rel_tol * std::fabs(r2)) || !std::isfinite(r2)) {
    std::ostringstream os;
    os << "variance_partial_sum: quadrature not converged for " << m.name() << " n=" << n << " gamma=" << gamma
       << " (coarse " << r1 << ", fine " << r2 << ")";
    throw NumericalError(os.str());
  }
  return r2;
}

double limit_variance(const SpectralModel& m, double gamma, double x, double y) {
  m.validate();
  if (x < 0 || y < 0) throw DomainError("limit_variance: x, y must be nonnegative");
  if (!(gamma > 0)) throw DomainError("limit_variance: gamma must be positive");
  if (x == 0.0 || y == 0.0) return 0.0;
  switch (m.kind) {
    case SpectralKind::TypeII: {
      auto k = [](double d) { return d == 0.0 ? 2.0 * kPi : kappa_sq(d); };
      return k(m.d1) * k(m.d2) * std::pow(x, 1 + 2 * m.d1) * std::pow(y, 1 + 2 * m.d2);
    }
    case SpectralKind::TypeI: {
      const ScalingLaw L = H_of_gamma(m, gamma);
      const double H1 = m.H1, H2 = m.H2;
      switch (L.regime) {
        case Regime::TypeI_AboveH1Lt1: return kappa_sq(H1 / 2) * std::pow(x, 1 + H1) * 2 * kPi * y;
        case Regime::TypeI_BelowH2Lt1: return 2 * kPi * x * kappa_sq(H2 / 2) * std::pow(y, 1 + H2);
        case Regime::TypeI_AboveH1Gt1: {
          const double dd = H2 * (H1 - 1) / (2 * H1);
          return x * x * rho1_sq(H1) * std::pow(m.c, (1 - H1) / 2) * kappa_sq(dd) * std::pow(y, 1 + 2 * dd);
        }
        case Regime::TypeI_BelowH2Gt1: {
          const double dd = H1 * (H2 - 1) / (2 * H2);
          return y * y * rho2_sq(H1, H2) * std::pow(m.c, -H1 / (2 * H2)) * kappa_sq(dd) * std::pow(x, 1 + 2 * dd);
        }
        default: break;
      }
      auto run = [&](const RuleParams& p) {
        const AxisRule ru = continuum_rule(x, p), rv = continuum_rule(y, p);
        return tensor(ru, rv, [&m](double u, double v) { return type_i_h(m, u, v); });
      };
      const double r1 = run({8, 32, 40}), r2 = run({12, 64, 50});
      if (!(std::fabs(r1 - r2) <= 1e-4 * std::fabs(r2)))
        throw NumericalError("limit_variance: TypeI quadrature not converged");
      return r2;
    }
    case SpectralKind::Lavancier: {
      const double d = m.d;
      const ScalingLaw L = H_of_gamma(m, gamma);
      if (L.regime == Regime::Lav_Above || (L.regime == Regime::Lav_Gamma1 && m.theta2 == 0.0))
        return std::pow(std::fabs(m.theta1), -2 * d) * kappa_sq(d) * std::pow(x, 1 + 2 * d) * 2 * kPi * y;
      if (L.regime == Regime::Lav_Below || (L.regime == Regime::Lav_Gamma1 && m.theta1 == 0.0))
        return std::pow(std::fabs(m.theta2), -2 * d) * 2 * kPi * x * kappa_sq(d) * std::pow(y, 1 + 2 * d);
      auto run = [&](const RuleParams& p) {
        const AxisRule ru = continuum_rule(x, p);
        double tot = 0.0;
        for (std::size_t i = 0; i < ru.x.size(); ++i) {
          const double u = ru.x[i];
          const AxisRule rv = continuum_rule(y, p, {0.0, -m.theta1 * u / m.theta2});
          double row = 0.0;
          for (std::size_t j = 0; j < rv.x.size(); ++j) {
            const double l = m.theta1 * u + m.theta2 * rv.x[j];
            row += rv.w[j] * (l == 0.0 ? 0.0 : std::pow(std::fabs(l), -2 * d));
          }
          tot += ru.w[i] * row;
        }
        return tot;
      };
      const double r1 = run({8, 16, 30}), r2 = run({10, 32, 40});
      if (!(std::fabs(r1 - r2) <= 1e-3 * std::fabs(r2)))
        throw NumericalError("limit_variance: Lavancier quadrature not converged");
      return r2;
    }
  }
  return 0.0;
}

double fbs_increment_cov(double H1, double H2, const Rectangle& K, const Rectangle& K2) {
  if (!(H1 > 0 && H1 <= 1 && H2 > 0 && H2 <= 1)) throw DomainError("fbs_increment_cov: need H1, H2 in (0,1]");
  return incr1(1.0, H1, K.u, K.x, K2.u, K2.x) * incr1(1.0, H2, K.v, K.y, K2.v, K2.y);
}

namespace {

using Cx = std::complex<double>;

struct CxRule {
  std::vector<double> x;
  std::vector<Cx> w;
};

// e(u) = int_lo^hi e^{iut} dt
Cx interval_ft(double u, double lo, double hi) {
  const double L = hi - lo, h = 0.5 * u * L;
  const double sinc = h == 0.0 ? 1.0 : std::sin(h) / h;
  return std::polar(L * sinc, 0.5 * u * (hi + lo));
}

// int_p^q e^{i a u} / u^2 du for 0 < p < q (q may be +inf)
Cx tail_moment(double a, double p, double q) {
  const bool inf = std::isinf(q);
  if (a == 0.0) return Cx(1.0 / p - (inf ? 0.0 : 1.0 / q), 0.0);
  const double b = std::fabs(a), sg = a > 0 ? 1.0 : -1.0;
  double sip, cip, siq = 0.5 * kPi, ciq = 0.0;
  sine_cosine_integral(b * p, sip, cip);
  if (!inf) sine_cosine_integral(b * q, siq, ciq);
  const double cq = inf ? 0.0 : std::cos(b * q) / q, sq = inf ? 0.0 : std::sin(b * q) / q;
  const double re = std::cos(b * p) / p - cq - b * (siq - sip);
  const double im = std::sin(b * p) / p - sq + b * (ciq - cip);
  return Cx(re, sg * im);
}

struct AxisFreqs {
  double freqs[4];
  double coef[4] = {1.0, -1.0, -1.0, 1.0};
  double X, T;
};

AxisFreqs axis_freqs(double lo1, double hi1, double lo2, double hi2, const RuleParams& p) {
  AxisFreqs a{{hi1 - hi2, hi1 - lo2, lo1 - hi2, lo1 - lo2}, {1.0, -1.0, -1.0, 1.0}, 0.0, 0.0};
  double amax = 0.0;
  for (double f : a.freqs) amax = std::max(amax, std::fabs(f));
  if (amax == 0.0) amax = 1.0;
  a.T = 2.0 * kPi / amax;
  a.X = p.periods * a.T;
  return a;
}

// Panels on [-X, X] with geometric refinement at 0 and at the extra singular points.
CxRule increment_axis_core(double lo1, double hi1, double lo2, double hi2, const AxisFreqs& af, const RuleParams& p,
                           const std::vector<double>& sing) {
  const double T = af.T, X = af.X;
  std::vector<double> br{-X, X};
  for (int k = 1; k < 2 * p.periods; ++k) {
    br.push_back(k * 0.5 * T);
    br.push_back(-k * 0.5 * T);
  }
  std::vector<double> pts{0.0};
  for (double v : sing)
    if (std::fabs(v) < X) pts.push_back(v);
  add_singular_breaks(br, pts, -X, X, std::min(0.5 * T, 0.5), p.levels);
  const AxisRule base = panel_rule(br, p.order, [](double) { return 1.0; });
  CxRule r;
  for (std::size_t i = 0; i < base.x.size(); ++i) {
    const double u = base.x[i];
    r.x.push_back(u);
    r.w.push_back(base.w[i] * interval_ft(u, lo1, hi1) * std::conj(interval_ft(u, lo2, hi2)));
  }
  return r;
}

// |u| > X: oscillating factor integrated exactly against 1/u^2, the rest sampled at band midpoints.
CxRule increment_axis_tail(const AxisFreqs& af) {
  CxRule r;
  const double ratio = std::pow(2.0, 0.25);
  double a = af.X;
  for (int j = 0; j < 4 * 64; ++j) {
    const double b = a * ratio;
    const bool last = j == 4 * 64 - 1;
    Cx mom = 0.0;
    for (int k = 0; k < 4; ++k) mom += af.coef[k] * tail_moment(af.freqs[k], a, last ? INFINITY : b);
    const double mid = std::sqrt(a * b);
    r.x.push_back(mid);
    r.w.push_back(mom);
    r.x.push_back(-mid);
    r.w.push_back(std::conj(mom));
    a = b;
  }
  return r;
}

CxRule increment_axis_rule(double lo1, double hi1, double lo2, double hi2, const RuleParams& p) {
  const AxisFreqs af = axis_freqs(lo1, hi1, lo2, hi2, p);
  CxRule r = increment_axis_core(lo1, hi1, lo2, hi2, af, p, {});
  const CxRule t = increment_axis_tail(af);
  r.x.insert(r.x.end(), t.x.begin(), t.x.end());
  r.w.insert(r.w.end(), t.w.begin(), t.w.end());
  return r;
}

// Lavancier limit at gamma = 1: k = |theta1 u + theta2 v|^{-2d}, singular on a line. The inner rule
// is rebuilt per outer node with refinement at the crossing point.
double lavancier_line_cov(const SpectralModel& m, const Rectangle& K, const Rectangle& K2, const RuleParams& p) {
  const CxRule ru = increment_axis_rule(K.u, K.x, K2.u, K2.x, p);
  const AxisFreqs av = axis_freqs(K.v, K.y, K2.v, K2.y, p);
  const CxRule tail = increment_axis_tail(av);
  const double d = m.d;
  auto k = [&](double u, double v) {
    const double l = m.theta1 * u + m.theta2 * v;
    return l == 0.0 ? 0.0 : std::pow(std::fabs(l), -2 * d);
  };
  Cx tot = 0.0;
  for (std::size_t i = 0; i < ru.x.size(); ++i) {
    const double u = ru.x[i];
    const CxRule rv = increment_axis_core(K.v, K.y, K2.v, K2.y, av, p, {-m.theta1 * u / m.theta2});
    Cx row = 0.0;
    for (std::size_t j = 0; j < rv.x.size(); ++j) row += rv.w[j] * k(u, rv.x[j]);
    for (std::size_t j = 0; j < tail.x.size(); ++j) row += tail.w[j] * k(u, tail.x[j]);
    tot += ru.w[i] * row;
  }
  return tot.real();
}

void check_kfin(const std::function<double(double, double)>& k) {
  auto val = [&](double u, double v) {
    const double r = k(u, v);
    if (!std::isfinite(r) || r < 0) throw DomainError("increment_cov_functional: k must be finite and nonnegative");
    return r;
  };
  auto slope = [](double a, double b, double ratio) { return std::log(b / a) / std::log(ratio); };
  const double e1 = 1e-3, e2 = 1e-6;
  // growth near the axes and the origin
  const double pu = slope(val(e1, 1.0), val(e2, 1.0), e1 / e2);
  const double pv = slope(val(1.0, e1), val(1.0, e2), e1 / e2);
  const double po = slope(val(e1, e1), val(e2, e2), e1 / e2);
  const double R1 = 1e3, R2 = 1e6;
  const double qu = slope(val(R1, 1.0), val(R2, 1.0), R2 / R1);
  const double qv = slope(val(1.0, R1), val(1.0, R2), R2 / R1);
  if (pu >= 0.99 || pv >= 0.99 || po >= 1.99 || qu >= 0.99 || qv >= 0.99)
    throw DomainError("increment_cov_functional: k violates the integrability condition on the probe grid");
}

}  // namespace

double increment_cov_functional(const std::function<double(double, double)>& k, const Rectangle& K,
                                const Rectangle& K2) {
  if (!(K.u < K.x && K.v < K.y && K2.u < K2.x && K2.v < K2.y)) throw DomainError("increment_cov_functional: bad rectangle");
  check_kfin(k);
  const RuleParams p{10, 48, 40};
  const CxRule ru = increment_axis_rule(K.u, K.x, K2.u, K2.x, p);
  const CxRule rv = increment_axis_rule(K.v, K.y, K2.v, K2.y, p);
  Cx tot = 0.0;
  for (std::size_t i = 0; i < ru.x.size(); ++i) {
    Cx row = 0.0;
    for (std::size_t j = 0; j < rv.x.size(); ++j) row += rv.w[j] * k(ru.x[i], rv.x[j]);
    tot += ru.w[i] * row;
  }
  if (!(std::fabs(tot.imag()) <= 1e-9 * std::fabs(tot.real()) + 1e-12))
    throw NumericalError("increment_cov_functional: imaginary residue " + std::to_string(tot.imag()));
  return tot.real();
}

double limit_increment_cov(const SpectralModel& m, double gamma, const Rectangle& K, const Rectangle& K2) {
  m.validate();
  if (m.kind == SpectralKind::TypeII) {
    auto k = [](double d) { return d == 0.0 ? 2.0 * kPi : kappa_sq(d); };
    return incr1(k(m.d1), m.d1 + 0.5, K.u, K.x, K2.u, K2.x) * incr1(k(m.d2), m.d2 + 0.5, K.v, K.y, K2.v, K2.y);
  }
  const ScalingLaw L = H_of_gamma(m, gamma);
  const double H1 = m.H1, H2 = m.H2, d = m.d;
  auto bm_u = [&] { return incr1(2 * kPi, 0.5, K.u, K.x, K2.u, K2.x); };
  auto bm_v = [&] { return incr1(2 * kPi, 0.5, K.v, K.y, K2.v, K2.y); };
  switch (L.regime) {
    case Regime::TypeI_AboveH1Lt1: return incr1(kappa_sq(H1 / 2), (1 + H1) / 2, K.u, K.x, K2.u, K2.x) * bm_v();
    case Regime::TypeI_BelowH2Lt1: return bm_u() * incr1(kappa_sq(H2 / 2), (1 + H2) / 2, K.v, K.y, K2.v, K2.y);
    case Regime::TypeI_AboveH1Gt1: {
      const double dd = H2 * (H1 - 1) / (2 * H1);
      return (K.x - K.u) * (K2.x - K2.u) * rho1_sq(H1) * std::pow(m.c, (1 - H1) / 2) *
             incr1(kappa_sq(dd), dd + 0.5, K.v, K.y, K2.v, K2.y);
    }
    case Regime::TypeI_BelowH2Gt1: {
      const double dd = H1 * (H2 - 1) / (2 * H2);
      return (K.y - K.v) * (K2.y - K2.v) * rho2_sq(H1, H2) * std::pow(m.c, -H1 / (2 * H2)) *
             incr1(kappa_sq(dd), dd + 0.5, K.u, K.x, K2.u, K2.x);
    }
    case Regime::Lav_Above:
      return std::pow(std::fabs(m.theta1), -2 * d) * incr1(kappa_sq(d), d + 0.5, K.u, K.x, K2.u, K2.x) * bm_v();
    case Regime::Lav_Below:
      return std::pow(std::fabs(m.theta2), -2 * d) * bm_u() * incr1(kappa_sq(d), d + 0.5, K.v, K.y, K2.v, K2.y);
    default: break;
  }
  if (L.regime == Regime::Lav_Gamma1) {
    if (m.theta2 == 0.0)
      return std::pow(std::fabs(m.theta1), -2 * d) * incr1(kappa_sq(d), d + 0.5, K.u, K.x, K2.u, K2.x) * bm_v();
    if (m.theta1 == 0.0)
      return std::pow(std::fabs(m.theta2), -2 * d) * bm_u() * incr1(kappa_sq(d), d + 0.5, K.v, K.y, K2.v, K2.y);
    const double r1 = lavancier_line_cov(m, K, K2, {8, 24, 30}), r2 = lavancier_line_cov(m, K, K2, {10, 48, 40});
    const double scale = std::sqrt(std::fabs(lavancier_line_cov(m, K, K, {8, 24, 30}) * lavancier_line_cov(m, K2, K2, {8, 24, 30})));
    if (!(std::fabs(r1 - r2) <= 1e-3 * scale))
      throw NumericalError("limit_increment_cov: Lavancier line quadrature not converged");
    return r2;
  }
  return increment_cov_functional([&m, gamma](double u, double v) { return limit_function(m, u, v, gamma); }, K, K2);
}

}  // namespace alrd
