#include <doctest.h>

#include <cmath>

#include "alrd/errors.hpp"
#include "alrd/spectra.hpp"

using namespace alrd;

TEST_SUITE("spectra") {
  TEST_CASE("kappa^2 closed form against the defining integral") {
    // mpmath quadosc of the defining integral
    const double ds[] = {0.1, 0.25, 0.4};
    const double ref[] = {5.996112781623312, 6.684342065682668, 12.128199521080816};
    for (int i = 0; i < 3; ++i) {
      CAPTURE(ds[i]);
      CHECK(kappa_sq(ds[i]) == doctest::Approx(ref[i]).epsilon(1e-12));
      CHECK(kappa_sq_integral(ds[i]) == doctest::Approx(ref[i]).epsilon(1e-6));
    }
    CHECK_THROWS_AS(kappa_sq(0.5), DomainError);
  }

  TEST_CASE("TypeII exponent is affine in gamma") {
    const SpectralModel m = SpectralModel::type_ii(0.2, 0.3);
    for (double g : {0.25, 0.5, 1.0, 2.0, 3.0}) CHECK(H_of_gamma(m, g).H == doctest::Approx((1 + g) / 2 + 0.2 + 0.3 * g));
  }

  TEST_CASE("TypeII partial-sum variance against the separable covariance") {
    // r1(k) = 2 int_0^pi cos(kx) x^{-0.4} dx (mpmath); Var = prod_i sum_{|k|<n_i} (n_i - |k|) r1(k)
    const SpectralModel m = SpectralModel::type_ii(0.2, 0.2);
    CHECK(variance_partial_sum(m, 16, 1.0) == doctest::Approx(92350.52116769335).epsilon(2e-4));
    CHECK(variance_partial_sum(m, 16, 0.5) == doctest::Approx(13405.56605050093).epsilon(2e-4));
    CHECK(variance_partial_sum(m, 8, 2.0) == doctest::Approx(244057.72087897378).epsilon(2e-4));
  }

  TEST_CASE("limit variance and self-similarity") {
    const SpectralModel m = SpectralModel::type_ii(0.2, 0.1);
    CHECK(limit_variance(m, 1.0, 1, 1) == doctest::Approx(kappa_sq(0.2) * kappa_sq(0.1)).epsilon(1e-6));
    for (const SpectralModel& mm : {m, SpectralModel::type_i(0.8, 1.5), SpectralModel::lavancier(1, 0.5, 0.3)})
      for (double g : {0.5, 2.0}) {
        if (mm.kind == SpectralKind::Lavancier && g != 0.5) continue;  // keep the runtime short
        const double H = H_of_gamma(mm, g).H, lam = 2.0;
        const double v1 = limit_variance(mm, g, 1, 1), v2 = limit_variance(mm, g, lam, std::pow(lam, g));
        CAPTURE(mm.name());
        CAPTURE(g);
        CHECK(v2 / v1 == doctest::Approx(std::pow(lam, 2 * H)).epsilon(1e-4));
      }
  }

  TEST_CASE("rho constants") {
    CHECK(rho1_sq(1.5) == doctest::Approx(5.244115108584239).epsilon(1e-12));
    CHECK(rho2_sq(0.8, 1.5) == doctest::Approx(5.733134089093982).epsilon(1e-9));
  }

  TEST_CASE("fractional Brownian sheet increments factorize") {
    const Rectangle K{0, 0, 1, 1};
    CHECK(fbs_increment_cov(0.7, 0.3, K, K) == doctest::Approx(1.0));
    const Rectangle K2{0, 0, 2, 3};
    CHECK(fbs_increment_cov(0.7, 0.3, K2, K2) == doctest::Approx(std::pow(2.0, 1.4) * std::pow(3.0, 0.6)));
    // disjoint increments of Brownian sheet are uncorrelated
    CHECK(std::fabs(fbs_increment_cov(0.5, 0.5, K, Rectangle{1, 0, 2, 1})) < 1e-14);
  }

  TEST_CASE("increment orthogonality for kernels depending on one coordinate") {
    auto k = [](double, double v) { return std::pow(std::fabs(v), -0.4); };
    const Rectangle K{0, 0, 1, 1}, Kh{2, 0, 3, 1};
    CHECK(std::fabs(increment_cov_functional(k, K, Kh)) <= 1e-8);
    const SpectralModel t1 = SpectralModel::type_i(0.8, 1.5);
    CHECK(std::fabs(limit_increment_cov(t1, t1.gamma0(), K, Rectangle{1, 0, 2, 1})) > 1e-4);
  }

  TEST_CASE("density domain") {
    const SpectralModel m = SpectralModel::type_ii(0.2, 0.2);
    CHECK(density(m, 0.5, -1.0) == doctest::Approx(std::pow(0.5, -0.4) * std::pow(1.0, -0.4)));
    CHECK_THROWS_AS(density(m, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(density(m, 4.0, 1.0), DomainError);
    CHECK_THROWS_AS(SpectralModel::type_ii(0.6, 0.2).validate(), DomainError);
  }
}
