#include "alrd/fields.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include <Eigen/Dense>

#include "alrd/axis_rule.hpp"
#include "alrd/errors.hpp"
#include "alrd/fft.hpp"
#include "alrd/quadrature.hpp"
#include "alrd/specfun.hpp"

namespace alrd {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

int fft_size(std::int64_t n) {
  std::int64_t p = 1;
  while (p < n) p <<= 1;
  if (p > (std::int64_t(1) << 30)) throw ResourceError("FFT dimension overflow");
  return int(p);
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed) : key_(mix64(seed ^ kGolden)) {}

CounterRng CounterRng::child(std::uint64_t id) const {
  CounterRng r;
  r.key_ = mix64(key_ ^ mix64(id + 0xD1B54A32D192ED03ull));
  return r;
}

std::uint64_t CounterRng::bits(std::uint64_t counter) const { return mix64(key_ + (counter + 1) * kGolden); }

double CounterRng::uniform(std::uint64_t counter) const {
  return (double(bits(counter) >> 11) + 0.5) * 0x1p-53;
}

double CounterRng::next_normal() {
  const double u1 = next_uniform(), u2 = next_uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

double CounterRng::next_exponential() { return -std::log(next_uniform()); }

std::uint64_t cell_id(std::int64_t u, std::int64_t v) {
  return (std::uint64_t(u + (std::int64_t(1) << 31)) << 32) ^ std::uint64_t(v + (std::int64_t(1) << 31));
}

std::uint64_t field_seed(std::uint64_t master, std::uint64_t i) { return CounterRng(master).child(i).bits(0); }

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = unsigned(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(mu);
          if (!err) err = std::current_exception();
          next = n;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

double LatticeField::total() const {
  long double acc = 0;
  for (double v : values) acc += v;
  return double(acc);
}

void LatticeField::validate() const {
  if (width <= 0 || height <= 0) throw DomainError("LatticeField: width and height must be positive");
  if (values.size() != std::size_t(width) * height) throw DomainError("LatticeField: value count mismatch");
  for (double v : values)
    if (!std::isfinite(v)) throw NumericalError("LatticeField: non-finite value");
}

// ---------------------------------------------------------------- innovations

InnovationLaw InnovationLaw::gaussian(double sigma) { return {2.0, InnovationFlavor::Gaussian, sigma}; }
InnovationLaw InnovationLaw::stable(double alpha, double scale) { return {alpha, InnovationFlavor::ExactStable, scale}; }
InnovationLaw InnovationLaw::pareto(double alpha, double scale) { return {alpha, InnovationFlavor::ParetoTail, scale}; }
InnovationLaw InnovationLaw::for_alpha(double alpha) { return alpha == 2.0 ? gaussian() : stable(alpha); }

void InnovationLaw::validate() const {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw DomainError("InnovationLaw: alpha must lie in (1,2]");
  if (flavor == InnovationFlavor::Gaussian && alpha != 2.0) throw DomainError("InnovationLaw: Gaussian needs alpha = 2");
  if (!(scale > 0)) throw DomainError("InnovationLaw: scale must be positive");
}

std::string InnovationLaw::name() const {
  switch (flavor) {
    case InnovationFlavor::Gaussian: return "gaussian";
    case InnovationFlavor::ExactStable: return "stable";
    case InnovationFlavor::ParetoTail: return "pareto";
  }
  return "?";
}

double sample_innovation(const InnovationLaw& law, CounterRng& rng) {
  switch (law.flavor) {
    case InnovationFlavor::Gaussian: return law.scale * rng.next_normal();
    case InnovationFlavor::ExactStable: {
      const double al = law.alpha;
      const double U = kPi * (rng.next_uniform() - 0.5), E = rng.next_exponential();
      const double S = std::sin(al * U) / std::pow(std::cos(U), 1.0 / al) *
                       std::pow(std::cos((1.0 - al) * U) / E, (1.0 - al) / al);
      return law.scale * S;
    }
    case InnovationFlavor::ParetoTail: {
      const double R = std::pow(rng.next_uniform(), -1.0 / law.alpha);
      return law.scale * (rng.next_uniform() < 0.5 ? -R : R);
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------- mixing

MixingSampler::MixingSampler(const MixingLaw& law) : law_(law) {
  law_.validate();
  if (!law_.density) return;
  const double lo = -60.0, step = 0.1;
  const int n = int(-lo / step + 0.5);
  auto f = [this](double l) {
    const double e = std::exp(l);
    return e * law_.phi_eps(e);
  };
  logeps_.resize(n + 1);
  cdf_.resize(n + 1);
  logeps_[0] = lo;
  cdf_[0] = std::exp(lo) * law_.phi_eps(std::exp(lo)) / (1.0 + law_.beta);
  QuadOptions o;
  o.rel_tol = 1e-13;
  for (int j = 1; j <= n; ++j) {
    logeps_[j] = lo + j * step;
    cdf_[j] = cdf_[j - 1] + integrate(f, logeps_[j - 1], logeps_[j], o).value;
  }
  const double tot = cdf_.back();
  for (double& c : cdf_) c /= tot;
  norm_ = tot;
}

double MixingSampler::eps_cdf(double le) const {
  auto it = std::upper_bound(logeps_.begin(), logeps_.end(), le);
  const std::size_t j = std::max<std::ptrdiff_t>(it - logeps_.begin() - 1, 0);
  auto f = [this](double l) {
    const double e = std::exp(l);
    return e * law_.phi_eps(e);
  };
  if (le <= logeps_[0]) return cdf_[0] * std::exp((1.0 + law_.beta) * (le - logeps_[0]));
  QuadOptions o;
  o.rel_tol = 1e-13;
  return cdf_[j] + integrate(f, logeps_[j], le, o).value / norm_;
}

double MixingSampler::quantile(double U) const {
  if (!(U >= 0.0 && U < 1.0)) throw DomainError("MixingSampler: U must lie in [0,1)");
  if (!law_.density) return -std::expm1(std::log1p(-U) / (1.0 + law_.beta));
  // P(A <= a) = U  <=>  P(1-A < eps) = 1-U
  const double target = 1.0 - U;
  if (target >= 1.0) return 0.0;
  double lo, hi;
  if (target <= cdf_[0]) {
    lo = logeps_[0] - 800.0;
    hi = logeps_[0];
  } else {
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
    const std::size_t j = std::min<std::size_t>(it - cdf_.begin(), cdf_.size() - 1);
    lo = logeps_[j - 1];
    hi = logeps_[j];
  }
  for (int k = 0; k < 200 && hi - lo > 1e-14; ++k) {
    const double mid = 0.5 * (lo + hi);
    (eps_cdf(mid) < target ? lo : hi) = mid;
  }
  return -std::expm1(0.5 * (lo + hi));
}

double sample_mixing(const MixingLaw& law, CounterRng& rng) { return MixingSampler(law).quantile(rng.next_uniform()); }

// ---------------------------------------------------------------- AR fields

LatticeField convolve_green(const WalkModel& m, double a, int width, int height,
                            const std::function<double(std::int64_t, std::int64_t)>& eps, const FieldBudget& budget) {
  if (width <= 0 || height <= 0) throw DomainError("convolve_green: width and height must be positive");
  if (!(a >= 0.0 && a < 1.0)) throw DomainError("convolve_green: need 0 <= a < 1");
  LatticeField out(width, height);
  if (a == 0.0) {
    for (int s = 0; s < height; ++s)
      for (int t = 0; t < width; ++t) out.at(t, s) = eps(t, s);
    return out;
  }
  const double q = 0.25 * budget.tol;
  const std::int64_t Rp = green_tail_radius(m, a, q, 0), Rm = green_tail_radius(m, a, q, 1);
  const std::int64_t Sp = green_tail_radius(m, a, q, 2), Sm = green_tail_radius(m, a, q, 3);
  const std::int64_t Nt = width + Rp + Rm, Ns = height + Sp + Sm;
  if (Nt * Ns > budget.max_cells)
    throw ResourceError("convolve_green: padded grid " + std::to_string(Nt) + "x" + std::to_string(Ns) +
                        " exceeds the budget of " + std::to_string(budget.max_cells) + " cells");
  const int Mt = fft_size(Nt), Ms = fft_size(Ns);
  if (std::int64_t(Mt) * Ms > 2 * budget.max_cells)
    throw ResourceError("convolve_green: FFT grid exceeds the cell budget");
  std::vector<std::complex<double>> buf(std::size_t(Mt) * Ms);
  for (std::int64_t i = 0; i < Nt; ++i)
    for (std::int64_t j = 0; j < Ns; ++j) buf[std::size_t(i) * Ms + j] = eps(i - Rp, j - Sp);
  fft2d(buf, Mt, Ms, -1);
  for (int i = 0; i < Mt; ++i) {
    const double x = 2.0 * kPi * i / Mt;
    for (int j = 0; j < Ms; ++j) buf[std::size_t(i) * Ms + j] /= one_minus_a_phat(m, a, x, 2.0 * kPi * j / Ms);
  }
  fft2d(buf, Mt, Ms, +1);
  const double norm = 1.0 / (double(Mt) * Ms);
  for (int s = 0; s < height; ++s)
    for (int t = 0; t < width; ++t) out.at(t, s) = buf[std::size_t(t + Rp) * Ms + (s + Sp)].real() * norm;
  return out;
}

LatticeField simulate_ar_field(const WalkModel& m, double a, const InnovationLaw& law, int width, int height,
                               std::uint64_t seed, const FieldBudget& budget) {
  law.validate();
  const CounterRng root(seed);
  LatticeField f = convolve_green(
      m, a, width, height,
      [&](std::int64_t u, std::int64_t v) {
        CounterRng r = root.child(cell_id(u, v));
        return sample_innovation(law, r);
      },
      budget);
  f.meta.seed = seed;
  f.meta.generator = "ar_field";
  f.meta.params = {{"model", m.name()}, {"a", a},         {"innovation", law.name()},
                   {"alpha", law.alpha}, {"scale", law.scale}, {"tol", budget.tol}};
  return f;
}

LatticeField aggregate_field(const StableLimitSpec& spec, long long n_components, int width, int height,
                             std::uint64_t seed, const FieldBudget& budget) {
  spec.validate();
  if (n_components < 1) throw DomainError("aggregate_field: need at least one component");
  const InnovationLaw law = InnovationLaw::for_alpha(spec.alpha);
  const MixingSampler sampler(spec.mixing);
  const CounterRng root(seed);
  LatticeField out(width, height);
  std::vector<long double> acc(out.values.size(), 0.0L);
  for (long long i = 0; i < n_components; ++i) {
    const CounterRng ci = root.child(std::uint64_t(i));
    const double a = sampler.quantile(ci.uniform(0));
    const CounterRng ce = ci.child(1);
    const LatticeField x = convolve_green(
        spec.model, a, width, height,
        [&](std::int64_t u, std::int64_t v) {
          CounterRng r = ce.child(cell_id(u, v));
          return sample_innovation(law, r);
        },
        budget);
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += x.values[k];
  }
  const double norm = std::pow(double(n_components), -1.0 / spec.alpha);
  for (std::size_t k = 0; k < acc.size(); ++k) out.values[k] = double(acc[k]) * norm;
  out.meta.seed = seed;
  out.meta.generator = "aggregate";
  out.meta.params = {{"model", spec.model.name()}, {"alpha", spec.alpha},  {"beta", spec.mixing.beta},
                     {"N", n_components},          {"innovation", law.name()}, {"tol", budget.tol}};
  return out;
}

// ---------------------------------------------------------------- Gaussian fields

double CovGrid::at(int t, int s) const {
  if (std::abs(t) > T || std::abs(s) > S) throw DomainError("CovGrid: lag outside the computed range");
  return v[std::size_t(t + T) * (2 * S + 1) + (s + S)];
}

namespace {

// The singular sets have measure zero; a node landing exactly on one contributes nothing.
double dens(const SpectralModel& m, double x, double y) {
  switch (m.kind) {
    case SpectralKind::TypeI:
      if (x == 0.0 && y == 0.0) return 0.0;
      break;
    case SpectralKind::TypeII:
      if ((x == 0.0 && m.d1 > 0) || (y == 0.0 && m.d2 > 0)) return 0.0;
      break;
    case SpectralKind::Lavancier:
      if (m.theta1 * x + m.theta2 * y == 0.0) return 0.0;
      break;
  }
  return density(m, x, y);
}

std::vector<double> grid_breaks(double h, const std::vector<double>& sing, int levels) {
  const int n = std::max(2, int(std::ceil(2.0 * kPi / h)));
  std::vector<double> br;
  for (int k = 0; k <= n; ++k) br.push_back(-kPi + 2.0 * kPi * k / n);
  add_singular_breaks(br, sing, -kPi, kPi, 2.0 * kPi / n, levels);
  return br;
}

// int_{-pi}^{pi} |x|^{-2d} cos(t x) dx for t = 0..T
std::vector<double> power_cov_1d(double d, int T) {
  const double h = std::min(0.25, kPi / (2.0 * std::max(T, 1)));
  const AxisRule r = panel_rule(grid_breaks(h, {0.0}, 60), 10, [d](double x) { return std::pow(std::fabs(x), -2 * d); });
  std::vector<double> out(T + 1, 0.0);
  for (std::size_t i = 0; i < r.x.size(); ++i) {
    const std::complex<double> e = std::polar(1.0, r.x[i]);
    std::complex<double> p = 1.0;
    for (int t = 0; t <= T; ++t) {
      out[t] += r.w[i] * p.real();
      p *= e;
    }
  }
  return out;
}

}  // namespace

CovGrid spectral_covariance(const SpectralModel& m, int T, int S) {
  m.validate();
  if (T < 0 || S < 0) throw DomainError("spectral_covariance: negative lag range");
  CovGrid g;
  g.T = T;
  g.S = S;
  g.v.assign(std::size_t(2 * T + 1) * (2 * S + 1), 0.0);
  if (m.kind == SpectralKind::TypeII && !m.g_factor) {
    const std::vector<double> r1 = power_cov_1d(m.d1, T), r2 = power_cov_1d(m.d2, S);
    for (int t = -T; t <= T; ++t)
      for (int s = -S; s <= S; ++s) g.v[std::size_t(t + T) * (2 * S + 1) + (s + S)] = r1[std::abs(t)] * r2[std::abs(s)];
    return g;
  }
  const double hx = std::min(0.25, kPi / (2.0 * std::max(T, 1)));
  const double hy = std::min(0.25, kPi / (2.0 * std::max(S, 1)));
  const int order = 8, levels = 36;
  std::vector<double> xs{0.0};
  const bool lav = m.kind == SpectralKind::Lavancier;
  if (lav && m.theta1 != 0.0 && m.theta2 != 0.0) {
    const double xb = std::fabs(kPi * m.theta2 / m.theta1);
    if (xb < kPi) {
      xs.push_back(xb);
      xs.push_back(-xb);
    }
  }
  const AxisRule rx = panel_rule(grid_breaks(hx, xs, levels), order, [](double) { return 1.0; });
  AxisRule ry_fixed;
  if (!lav || m.theta2 == 0.0)
    ry_fixed = panel_rule(grid_breaks(hy, (lav && m.theta1 != 0.0) ? std::vector<double>{} : std::vector<double>{0.0},
                                      levels),
                          order, [](double) { return 1.0; });
  // G(i,s) = sum_j w_j f(x_i,y_j) e^{i s y_j}, then r(t,s) = Re sum_i w_i e^{i t x_i} G(i,s)
  std::vector<std::complex<double>> acc(std::size_t(T + 1) * (2 * S + 1), 0.0);
  std::vector<std::complex<double>> G(S + 1);
  for (std::size_t i = 0; i < rx.x.size(); ++i) {
    const double x = rx.x[i];
    AxisRule ry_local;
    const AxisRule* ry = &ry_fixed;
    if (lav && m.theta2 != 0.0) {
      const double ys = -m.theta1 * x / m.theta2;
      std::vector<double> sing;
      if (std::fabs(ys) < kPi) sing.push_back(ys);
      ry_local = panel_rule(grid_breaks(hy, sing, levels), order, [](double) { return 1.0; });
      ry = &ry_local;
    }
    std::fill(G.begin(), G.end(), 0.0);
    for (std::size_t j = 0; j < ry->x.size(); ++j) {
      const double y = ry->x[j];
      const double fw = ry->w[j] * dens(m, x, y);
      const std::complex<double> e = std::polar(1.0, y);
      std::complex<double> p = fw;
      for (int s = 0; s <= S; ++s) {
        G[s] += p;
        p *= e;
      }
    }
    const std::complex<double> ex = std::polar(1.0, x);
    std::complex<double> p = rx.w[i];
    for (int t = 0; t <= T; ++t) {
      std::complex<double>* row = &acc[std::size_t(t) * (2 * S + 1)];
      for (int s = 0; s <= S; ++s) {
        row[S + s] += p * G[s];
        if (s > 0) row[S - s] += p * std::conj(G[s]);
      }
      p *= ex;
    }
  }
  for (int t = 0; t <= T; ++t)
    for (int s = -S; s <= S; ++s) {
      const double r = acc[std::size_t(t) * (2 * S + 1) + (s + S)].real();
      g.v[std::size_t(t + T) * (2 * S + 1) + (s + S)] = r;
      g.v[std::size_t(-t + T) * (2 * S + 1) + (-s + S)] = r;
    }
  return g;
}

namespace {

double wrap_pi(double x) { return x - 2.0 * kPi * std::round(x / (2.0 * kPi)); }

// int_lo^hi |x|^p dx with -pi <= lo < hi <= pi, p > -1
double pow_integral(double lo, double hi, double p) {
  auto F = [p](double x) { return (x < 0 ? -1.0 : 1.0) * std::pow(std::fabs(x), p + 1) / (p + 1); };
  return F(hi) - F(lo);
}

// Cell [c-h/2, c+h/2] on the circle, split where it crosses +-pi.
double pow_cell_mean(double c, double h, double p) {
  const double lo = c - 0.5 * h, hi = c + 0.5 * h;
  double v;
  if (lo < -kPi) v = pow_integral(-kPi, hi, p) + pow_integral(lo + 2 * kPi, kPi, p);
  else if (hi > kPi) v = pow_integral(lo, kPi, p) + pow_integral(-kPi, hi - 2 * kPi, p);
  else v = pow_integral(lo, hi, p);
  return v / h;
}

double cell_mean_adaptive(const SpectralModel& m, double xc, double yc, double hx, double hy) {
  QuadOptions o;
  o.rel_tol = 1e-9;
  auto f = [&](double x, double y) { return dens(m, wrap_pi(x), wrap_pi(y)); };
  std::vector<double> bx, by;
  const double x0 = xc - 0.5 * hx, x1 = xc + 0.5 * hx;
  bx.push_back(wrap_pi(0.0) + 0.0);
  if (x0 < -kPi) bx.push_back(-kPi);
  if (x1 > kPi) bx.push_back(kPi);
  auto inner = [&](double x) {
    std::vector<double> br{0.0, -kPi, kPi};
    if (m.kind == SpectralKind::Lavancier && m.theta2 != 0.0) {
      const double xw = wrap_pi(x);
      const double ys = -m.theta1 * xw / m.theta2;
      for (int k = -1; k <= 1; ++k) br.push_back(ys + 2 * kPi * k);
    }
    return integrate([&](double y) { return f(x, y); }, yc - 0.5 * hy, yc + 0.5 * hy, o, br).value;
  };
  if (m.kind == SpectralKind::Lavancier && m.theta2 == 0.0) bx.push_back(0.0);
  return integrate(inner, x0, x1, o, bx).value / (hx * hy);
}

double cell_mean_gl(const SpectralModel& m, double xc, double yc, double hx, double hy) {
  static const GaussRule g = gauss_legendre(4);
  double acc = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      acc += g.w[i] * g.w[j] * dens(m, wrap_pi(xc + 0.5 * hx * g.x[i]), wrap_pi(yc + 0.5 * hy * g.x[j]));
  return 0.25 * acc;
}

}  // namespace

GaussianFieldSampler::GaussianFieldSampler(const SpectralModel& m, int width, int height, GaussMethod method,
                                           int refine)
    : model_(m), width_(width), height_(height), method_(method), refine_(refine) {
  m.validate();
  if (width <= 0 || height <= 0) throw DomainError("GaussianFieldSampler: width and height must be positive");
  if (method == GaussMethod::ExactCholesky) {
    const int n = width * height;
    if (n > kCholeskyCellCap)
      throw ResourceError("ExactCholesky: " + std::to_string(n) + " cells exceed the cap of " +
                          std::to_string(kCholeskyCellCap));
    cov_ = spectral_covariance(m, width - 1, height - 1);
    Eigen::MatrixXd C(n, n);
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) C(p, q) = cov_.at(p % width - q % width, p / width - q / width);
    const double r0 = cov_.at(0, 0);
    for (double jit : {0.0, 1e-12, 1e-10, 1e-8}) {
      Eigen::MatrixXd Cj = C;
      Cj.diagonal().array() += jit * r0;
      Eigen::LLT<Eigen::MatrixXd> llt(Cj);
      if (llt.info() == Eigen::Success) {
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> L = llt.matrixL();
        L_.assign(L.data(), L.data() + std::size_t(n) * n);
        return;
      }
    }
    throw NumericalError("ExactCholesky: covariance matrix not positive definite after jitter");
  }
  if (refine < 1) throw DomainError("SpectralFFT: refinement factor must be at least 1");
  Mt_ = fft_size(std::int64_t(refine) * width);
  Ms_ = fft_size(std::int64_t(refine) * height);
  const double hx = 2.0 * kPi / Mt_, hy = 2.0 * kPi / Ms_;
  amp_.assign(std::size_t(Mt_) * Ms_, 0.0);
  auto freq = [](int k, int M) { return 2.0 * kPi * (k < M / 2 ? k : k - M) / M; };
  std::vector<double> fbar(amp_.size());
  for (int k = 0; k < Mt_; ++k) {
    const double xc = freq(k, Mt_);
    for (int l = 0; l < Ms_; ++l) {
      const double yc = freq(l, Ms_);
      double v;
      if (m.kind == SpectralKind::TypeII) {
        v = pow_cell_mean(xc, hx, -2 * m.d1) * pow_cell_mean(yc, hy, -2 * m.d2);
        if (m.g_factor) v *= m.g_factor(xc, yc);
      } else {
        bool near;
        if (m.kind == SpectralKind::TypeI) {
          near = std::fabs(xc) <= 1.5 * hx && std::fabs(yc) <= 1.5 * hy;
        } else {
          const double band = 1.5 * (std::fabs(m.theta1) * hx + std::fabs(m.theta2) * hy);
          near = std::fabs(m.theta1 * xc + m.theta2 * yc) <= band;
        }
        v = near ? cell_mean_adaptive(m, xc, yc, hx, hy) : cell_mean_gl(m, xc, yc, hx, hy);
      }
      fbar[std::size_t(k) * Ms_ + l] = v * hx * hy;
    }
  }
  for (std::size_t i = 0; i < fbar.size(); ++i) amp_[i] = std::sqrt(fbar[i]);
  std::vector<std::complex<double>> buf(fbar.begin(), fbar.end());
  fft2d(buf, Mt_, Ms_, +1);
  synth_cov_.resize(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) synth_cov_[i] = buf[i].real();
}

double GaussianFieldSampler::field_covariance(int t, int s) const {
  if (method_ == GaussMethod::ExactCholesky) return cov_.at(t, s);
  const int i = ((t % Mt_) + Mt_) % Mt_, j = ((s % Ms_) + Ms_) % Ms_;
  return synth_cov_[std::size_t(i) * Ms_ + j];
}

LatticeField GaussianFieldSampler::sample(std::uint64_t seed) const {
  const CounterRng root(seed);
  LatticeField f(width_, height_);
  if (method_ == GaussMethod::ExactCholesky) {
    const int n = width_ * height_;
    std::vector<double> z(n);
    for (int p = 0; p < n; ++p) {
      CounterRng r = root.child(cell_id(p % width_, p / width_));
      z[p] = r.next_normal();
    }
    for (int p = 0; p < n; ++p) {
      const double* row = &L_[std::size_t(p) * n];
      double acc = 0.0;
      for (int q = 0; q <= p; ++q) acc += row[q] * z[q];
      f.values[p] = acc;
    }
  } else {
    std::vector<std::complex<double>> buf(amp_.size());
    for (int k = 0; k < Mt_; ++k)
      for (int l = 0; l < Ms_; ++l) {
        CounterRng r = root.child(cell_id(k, l));
        const double a = r.next_normal(), b = r.next_normal();
        buf[std::size_t(k) * Ms_ + l] = amp_[std::size_t(k) * Ms_ + l] * std::complex<double>(a, b) * std::sqrt(0.5);
      }
    fft2d(buf, Mt_, Ms_, +1);
    for (int s = 0; s < height_; ++s)
      for (int t = 0; t < width_; ++t) f.at(t, s) = std::sqrt(2.0) * buf[std::size_t(t) * Ms_ + s].real();
  }
  f.meta.seed = seed;
  f.meta.generator = method_ == GaussMethod::ExactCholesky ? "gauss_cholesky" : "gauss_spectral_fft";
  f.meta.params = {{"model", model_.name()}, {"refine", refine_}};
  return f;
}

LatticeField simulate_gaussian_spectral(const SpectralModel& m, int width, int height, std::uint64_t seed,
                                        GaussMethod method, int refine) {
  return GaussianFieldSampler(m, width, height, method, refine).sample(seed);
}

LatticeField white_noise_field(int width, int height, std::uint64_t seed, double sigma) {
  if (width <= 0 || height <= 0) throw DomainError("white_noise_field: width and height must be positive");
  const CounterRng root(seed);
  LatticeField f(width, height);
  for (int s = 0; s < height; ++s)
    for (int t = 0; t < width; ++t) {
      CounterRng r = root.child(cell_id(t, s));
      f.at(t, s) = sigma * r.next_normal();
    }
  f.meta.seed = seed;
  f.meta.generator = "white_noise";
  f.meta.params = {{"sigma", sigma}};
  return f;
}

// ---------------------------------------------------------------- partial sums

PrefixSums::PrefixSums(const LatticeField& f) : w_(f.width), h_(f.height), P_(std::size_t(f.width + 1) * (f.height + 1), 0.0) {
  for (int s = 0; s < h_; ++s) {
    double row = 0.0;
    for (int t = 0; t < w_; ++t) {
      row += f.at(t, s);
      P_[std::size_t(s + 1) * (w_ + 1) + (t + 1)] = P_[std::size_t(s) * (w_ + 1) + (t + 1)] + row;
    }
  }
}

double PrefixSums::rect(int t0, int s0, int w, int h) const {
  if (t0 < 0 || s0 < 0 || w < 0 || h < 0 || t0 + w > w_ || s0 + h > h_)
    throw DomainError("partial sum: rectangle exceeds the field extent");
  auto P = [this](int t, int s) { return P_[std::size_t(s) * (w_ + 1) + t]; };
  return P(t0 + w, s0 + h) - P(t0, s0 + h) - P(t0 + w, s0) + P(t0, s0);
}

long long side_length(long long n, double gamma, double x) {
  if (n < 1 || !(gamma > 0) || !(x > 0)) throw DomainError("side_length: need n >= 1, gamma > 0, x > 0");
  const double v = std::pow(double(n), gamma) * x;
  return static_cast<long long>(std::floor(v * (1.0 + 1e-12)));
}

double PrefixSums::partial_sum(long long n, double gamma, double x, double y) const {
  const long long w = side_length(n, 1.0, x), h = side_length(n, gamma, y);
  if (w > w_ || h > h_) throw DomainError("partial sum: rectangle exceeds the field extent");
  return rect(0, 0, int(w), int(h));
}

double partial_sum(const LatticeField& f, long long n, double gamma, double x, double y) {
  return PrefixSums(f).partial_sum(n, gamma, x, y);
}

HEstimate estimate_H(const std::vector<LatticeField>& fields, double gamma, const std::vector<long long>& ladder) {
  if (ladder.size() < 3) throw DomainError("estimate_H: need at least 3 ladder points");
  if (fields.empty()) throw DomainError("estimate_H: no fields");
  const std::size_t K = ladder.size(), F = fields.size();
  std::vector<std::vector<double>> ss(K, std::vector<double>(F, 0.0));
  std::vector<std::vector<long long>> cnt(K, std::vector<long long>(F, 0));
  HEstimate out;
  for (std::size_t f = 0; f < F; ++f) {
    const PrefixSums P(fields[f]);
    for (std::size_t k = 0; k < K; ++k) {
      const long long n = ladder[k], m = side_length(n, gamma, 1.0);
      if (m < 1) throw DomainError("estimate_H: empty rectangle side");
      const int nt = int(P.width() / n), ns = int(P.height() / m);
      for (int i = 0; i < nt; ++i)
        for (int j = 0; j < ns; ++j) {
          const double S = P.rect(int(i * n), int(j * m), int(n), int(m));
          ss[k][f] += S * S;
          ++cnt[k][f];
        }
    }
  }
  auto fit = [&](long long skip, std::vector<HRow>* rows) {
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < K; ++k) {
      double a = 0.0;
      long long c = 0;
      for (std::size_t f = 0; f < F; ++f)
        if (static_cast<long long>(f) != skip) {
          a += ss[k][f];
          c += cnt[k][f];
        }
      if (c == 0) throw DomainError("estimate_H: rectangle for n = " + std::to_string(ladder[k]) + " exceeds the field extent");
      const double v = a / double(c);
      xs.push_back(2.0 * std::log(double(ladder[k])));
      ys.push_back(std::log(v));
      if (rows) rows->push_back({ladder[k], side_length(ladder[k], gamma, 1.0), c, v, std::log(v)});
    }
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < K; ++k) {
      mx += xs[k];
      my += ys[k];
    }
    mx /= K;
    my /= K;
    double sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < K; ++k) {
      sxx += (xs[k] - mx) * (xs[k] - mx);
      sxy += (xs[k] - mx) * (ys[k] - my);
    }
    const double b = sxy / sxx;
    double rss = 0;
    for (std::size_t k = 0; k < K; ++k) rss += std::pow(ys[k] - my - b * (xs[k] - mx), 2);
    return std::pair<double, double>(b, K > 2 ? std::sqrt(rss / double(K - 2) / sxx) : 0.0);
  };
  const auto [H, res_se] = fit(-1, &out.rows);
  out.H = H;
  if (F < 2) {
    out.se = res_se;
    return out;
  }
  std::vector<double> jk(F);
  double mean = 0;
  for (std::size_t f = 0; f < F; ++f) {
    jk[f] = fit(static_cast<long long>(f), nullptr).first;
    mean += jk[f];
  }
  mean /= F;
  double acc = 0;
  for (double v : jk) acc += (v - mean) * (v - mean);
  out.se = std::sqrt(double(F - 1) / F * acc);
  return out;
}

CFEstimate empirical_cf(const std::vector<double>& sample, double theta) {
  if (sample.size() < 2) throw DomainError("empirical_cf: need at least two observations");
  double m = 0, m2 = 0;
  for (double x : sample) {
    const double c = std::cos(theta * x);
    m += c;
    m2 += c * c;
  }
  const double n = double(sample.size());
  m /= n;
  const double var = std::max(0.0, m2 / n - m * m) * n / (n - 1);
  return {m, std::sqrt(var / n)};
}

// ---------------------------------------------------------------- IO

nlohmann::json meta_to_json(const LatticeField& f) {
  return {{"width", f.width},       {"height", f.height},  {"dtype", "float64"},
          {"seed", f.meta.seed},     {"generator", f.meta.generator}, {"params", f.meta.params}};
}

namespace {
void apply_meta(LatticeField& f, const nlohmann::json& j) {
  if (j.contains("seed")) f.meta.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("generator")) f.meta.generator = j.at("generator").get<std::string>();
  if (j.contains("params")) f.meta.params = j.at("params");
}

constexpr char kMagic[8] = {'A', 'L', 'R', 'D', 'F', 'L', 'D', '1'};

template <class T>
void put_le(std::ostream& os, T v) {
  unsigned char b[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>((std::uint64_t(v) >> (8 * i)) & 0xFF);
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char b[sizeof(T)];
  is.read(reinterpret_cast<char*>(b), sizeof(T));
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return T(v);
}
}  // namespace

void write_field_csv(const std::filesystem::path& p, const LatticeField& f) {
  std::ofstream os(p);
  if (!os) throw ConfigError("cannot write " + p.string());
  os << "t,s,value\n";
  char buf[64];
  for (int s = 0; s < f.height; ++s)
    for (int t = 0; t < f.width; ++t) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g\n", t, s, f.at(t, s));
      os << buf;
    }
  std::ofstream js(p.string() + ".json");
  js << meta_to_json(f).dump(2) << "\n";
}

LatticeField read_field_csv(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw ConfigError("cannot read " + p.string());
  std::string line;
  std::getline(is, line);
  if (line.rfind("t,s,value", 0) != 0) throw ConfigError(p.string() + ": expected header t,s,value");
  std::vector<std::tuple<int, int, double>> rows;
  int W = 0, H = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    int t, s;
    double v;
    if (std::sscanf(line.c_str(), "%d,%d,%lf", &t, &s, &v) != 3 || t < 0 || s < 0)
      throw ConfigError(p.string() + ": malformed row '" + line + "'");
    rows.emplace_back(t, s, v);
    W = std::max(W, t + 1);
    H = std::max(H, s + 1);
  }
  if (rows.size() != std::size_t(W) * H) throw ConfigError(p.string() + ": rows do not fill a rectangle");
  LatticeField f(W, H);
  for (auto& [t, s, v] : rows) f.at(t, s) = v;
  std::ifstream js(p.string() + ".json");
  if (js) apply_meta(f, nlohmann::json::parse(js));
  return f;
}

void write_field_binary(const std::filesystem::path& p, const LatticeField& f) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + p.string());
  os.write(kMagic, 8);
  put_le<std::uint64_t>(os, std::uint64_t(f.width));
  put_le<std::uint64_t>(os, std::uint64_t(f.height));
  put_le<std::uint32_t>(os, 1u);  // float64
  put_le<std::uint32_t>(os, 0u);
  for (double v : f.values) {
    std::uint64_t b;
    std::memcpy(&b, &v, 8);
    put_le<std::uint64_t>(os, b);
  }
  std::ofstream js(p.string() + ".json");
  js << meta_to_json(f).dump(2) << "\n";
}

LatticeField read_field_binary(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw ConfigError("cannot read " + p.string());
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) throw ConfigError(p.string() + ": bad magic");
  const auto W = get_le<std::uint64_t>(is), H = get_le<std::uint64_t>(is);
  const auto dtype = get_le<std::uint32_t>(is);
  get_le<std::uint32_t>(is);
  if (dtype != 1u) throw ConfigError(p.string() + ": unsupported dtype");
  if (W == 0 || H == 0 || W > (1u << 30) || H > (1u << 30)) throw ConfigError(p.string() + ": bad dimensions");
  LatticeField f(static_cast<int>(W), static_cast<int>(H));
  for (double& v : f.values) {
    const auto b = get_le<std::uint64_t>(is);
    std::memcpy(&v, &b, 8);
  }
  if (!is) throw ConfigError(p.string() + ": truncated");
  std::ifstream js(p.string() + ".json");
  if (js) apply_meta(f, nlohmann::json::parse(js));
  return f;
}

std::filesystem::path scratch_dir() {
  if (const char* e = std::getenv("ALRD_SCRATCH"); e && *e) return e;
  return std::filesystem::temp_directory_path();
}

}  // namespace alrd
