#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "alrd/errors.hpp"
#include "alrd/fields.hpp"

using namespace alrd;

namespace {
std::filesystem::path tmp(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / "alrd_unit";
  std::filesystem::create_directories(d);
  return d / name;
}
}  // namespace

TEST_SUITE("fields") {
  TEST_CASE("counter rng is deterministic and stream-separated") {
    const CounterRng r(42);
    CHECK(r.bits(7) == CounterRng(42).bits(7));
    CHECK(r.child(1).bits(0) != r.child(2).bits(0));
    CHECK(cell_id(1, 2) != cell_id(2, 1));
    CounterRng a(5);
    double m = 0, v = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const double x = a.next_normal();
      m += x;
      v += x * x;
    }
    m /= n;
    v = v / n - m * m;
    CHECK(std::fabs(m) < 5 / std::sqrt(double(n)));
    CHECK(std::fabs(v - 1) < 5 * std::sqrt(2.0 / n));
    CHECK(field_seed(3, 0) != field_seed(3, 1));
  }

  TEST_CASE("mixing sampler") {
    const MixingLaw law = MixingLaw::standard(0.3);
    const MixingSampler smp(law);
    // closed-form quantile of the density (1+beta)(1-a)^beta: 1 - (1-U)^{1/(1+beta)}
    for (double U : {0.1, 0.5, 0.99}) CHECK(smp.quantile(U) == doctest::Approx(1 - std::pow(1 - U, 1 / 1.3)));
    CounterRng r(9);
    double m = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) m += sample_mixing(law, r);
    m /= n;
    // E A = 1/(2+beta); sd of A is below 0.3
    CHECK(std::fabs(m - 1 / 2.3) < 4 * 0.3 / std::sqrt(double(n)));
    MixingLaw custom = law;
    custom.density = [](double a) { return 1.3 * std::pow(1 - a, 0.3); };
    const MixingSampler cs(custom);
    CHECK(cs.quantile(0.7) == doctest::Approx(smp.quantile(0.7)).epsilon(1e-6));
  }

  TEST_CASE("stable innovations match the characteristic function") {
    CounterRng r(11);
    std::vector<double> x(100000);
    const InnovationLaw law = InnovationLaw::stable(1.5);
    for (double& v : x) v = sample_innovation(law, r);
    const CFEstimate cf = empirical_cf(x, 1.0);
    CHECK(std::fabs(cf.value - std::exp(-1.0)) < 4 * cf.se);
    const InnovationLaw p = InnovationLaw::pareto(1.5);
    long long big = 0;
    for (int i = 0; i < 200000; ++i) big += std::fabs(sample_innovation(p, r)) > 100;
    CHECK(std::pow(100.0, 1.5) * big / 200000.0 == doctest::Approx(1.0).epsilon(0.15));
    CHECK_THROWS_AS(InnovationLaw::stable(1.0).validate(), DomainError);
  }

  TEST_CASE("Green convolution") {
    const WalkModel m = WalkModel::four_n();
    GreenKernel k;
    k.model = m;
    k.a = 0.8;
    // unit impulse at (10,12)
    const LatticeField f = convolve_green(m, 0.8, 24, 24, [](std::int64_t u, std::int64_t v) {
      return u == 10 && v == 12 ? 1.0 : 0.0;
    });
    for (int t : {10, 13, 20})
      for (int s : {12, 9, 0}) CHECK(std::fabs(f.at(t, s) - green_eval(k, t - 10, s - 12)) < 1e-11);
    const LatticeField c = convolve_green(m, 0.9, 8, 8, [](std::int64_t, std::int64_t) { return 1.0; });
    for (double v : c.values) CHECK(v == doctest::Approx(10.0).epsilon(1e-9));
    FieldBudget tiny;
    tiny.max_cells = 1 << 12;
    CHECK_THROWS_AS(simulate_ar_field(m, 0.999, InnovationLaw::gaussian(), 32, 32, 1, tiny), ResourceError);
  }

  TEST_CASE("spectral covariance against the separable oracle") {
    // r1(k) = 2 int_0^pi cos(kx) x^{-0.4} dx, mpmath
    const double r1[] = {6.624737416460717, 1.8831119897460589, 1.1173723635866428, 0.922887973013979};
    const CovGrid c = spectral_covariance(SpectralModel::type_ii(0.2, 0.2), 3, 3);
    for (int t = 0; t <= 3; ++t)
      for (int s = -3; s <= 3; ++s) CHECK(c.at(t, s) == doctest::Approx(r1[t] * r1[std::abs(s)]).epsilon(1e-7));
  }

  TEST_CASE("FFT synthesis reproduces the covariance") {
    const SpectralModel m = SpectralModel::type_ii(0.2, 0.2);
    const GaussianFieldSampler smp(m, 32, 32, GaussMethod::SpectralFFT, 4);
    const CovGrid c = spectral_covariance(m, 3, 2);
    for (auto [t, s] : {std::pair{0, 0}, {1, 0}, {0, 1}, {3, 2}})
      CHECK(smp.field_covariance(t, s) == doctest::Approx(c.at(t, s)).epsilon(2e-3));
    const LatticeField a = smp.sample(3), b = smp.sample(3), d = smp.sample(4);
    CHECK(a.values == b.values);
    CHECK(a.values != d.values);
  }

  TEST_CASE("Cholesky sampler") {
    const SpectralModel m = SpectralModel::type_i(0.8, 1.5);
    const GaussianFieldSampler smp(m, 8, 8, GaussMethod::ExactCholesky);
    CHECK(smp.field_covariance(1, 0) == doctest::Approx(spectral_covariance(m, 1, 0).at(1, 0)));
    double acc = 0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
      const LatticeField f = smp.sample(field_seed(1, i));
      acc += f.at(3, 3) * f.at(4, 3);
    }
    const double r10 = smp.field_covariance(1, 0), r00 = smp.field_covariance(0, 0);
    CHECK(std::fabs(acc / n - r10) < 5 * std::sqrt((r00 * r00 + r10 * r10) / n));
    CHECK_THROWS_AS(GaussianFieldSampler(m, 80, 80, GaussMethod::ExactCholesky), ResourceError);
  }

  TEST_CASE("prefix sums and rectangle sides") {
    LatticeField f(7, 5);
    for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = double(i % 11) - 3.5;
    const PrefixSums P(f);
    double brute = 0;
    for (int s = 1; s < 4; ++s)
      for (int t = 2; t < 7; ++t) brute += f.at(t, s);
    CHECK(P.rect(2, 1, 5, 3) == doctest::Approx(brute));
    CHECK(side_length(4, 0.5, 1) == 2);
    CHECK(side_length(1000, 1.0 / 3.0, 1) == 10);
    CHECK(side_length(81, 0.25, 1) == 3);
  }

  TEST_CASE("white noise scales with H = (1+gamma)/2") {
    std::vector<LatticeField> fs;
    for (int i = 0; i < 16; ++i) fs.push_back(white_noise_field(128, 128, field_seed(8, i)));
    const HEstimate e = estimate_H(fs, 1.0, {2, 4, 8, 16, 32});
    CHECK(e.H == doctest::Approx(1.0).epsilon(0.05));
    CHECK(e.se > 0);
    CHECK(e.rows.size() == 5);
  }

  TEST_CASE("field IO round trip") {
    LatticeField f(5, 3);
    for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = std::sin(double(i)) * 1e-3 + 1.0 / 3.0;
    f.meta.seed = 77;
    f.meta.generator = "unit";
    write_field_csv(tmp("f.csv"), f);
    write_field_binary(tmp("f.bin"), f);
    const LatticeField a = read_field_csv(tmp("f.csv")), b = read_field_binary(tmp("f.bin"));
    CHECK(a.values == f.values);
    CHECK(b.values == f.values);
    CHECK(a.meta.seed == 77);
    CHECK(b.meta.generator == "unit");
    std::ifstream in(tmp("f.bin"), std::ios::binary);
    char hdr[32];
    in.read(hdr, 32);
    CHECK(std::string(hdr, 8) == "ALRDFLD1");
    std::uint64_t w;
    std::memcpy(&w, hdr + 8, 8);
    CHECK(w == 5);
    CHECK(std::filesystem::file_size(tmp("f.bin")) == 32 + 15 * 8);
  }

  TEST_CASE("parallel_for matches the serial loop") {
    std::vector<double> a(50), b(50);
    parallel_for(50, 1, [&](std::size_t i) { a[i] = CounterRng(field_seed(2, i)).uniform(0); });
    parallel_for(50, 4, [&](std::size_t i) { b[i] = CounterRng(field_seed(2, i)).uniform(0); });
    CHECK(a == b);
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) { if (i == 5) throw DomainError("x"); }), DomainError);
  }
}
