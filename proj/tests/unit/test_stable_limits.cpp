#include <doctest.h>

#include <cmath>

#include "alrd/errors.hpp"
#include "alrd/stable_limits.hpp"

using namespace alrd;

namespace {
StableLimitSpec spec(Walk w, double alpha, double beta, double gamma) {
  StableLimitSpec s;
  s.model = WalkModel::of(w);
  s.alpha = alpha;
  s.mixing = MixingLaw::standard(beta);
  s.gamma = gamma;
  return s;
}
}  // namespace

TEST_SUITE("stable_limits") {
  TEST_CASE("H tables") {
    CHECK(H_table(Walk::FourN, 2, 0.4, 1).H == doctest::Approx(1.6));
    CHECK(H_table(Walk::ThreeN, 2, 0.3, 0.5).H == doctest::Approx((0.5 + 2 - 0.3) / 2));
    CHECK(H_table(Walk::ThreeN, 1.5, 0.3, 2).H == doctest::Approx((2 + 1.5 - 0.3) / 1.5));
    // continuity at gamma0 for 3N
    const double lo = H_table(Walk::ThreeN, 1.5, 0.4, 0.5 - 1e-9).H, hi = H_table(Walk::ThreeN, 1.5, 0.4, 0.5).H;
    CHECK(lo == doctest::Approx(hi).epsilon(1e-8));
    CHECK_THROWS_AS(H_table(Walk::FourN, 2, 0.5, 2), DomainError);  // beta = (alpha-1)/2
    CHECK_THROWS_AS(H_table(Walk::FourN, 1.0, 0.5, 1), DomainError);
  }

  TEST_CASE("mixing law") {
    const MixingLaw m = MixingLaw::standard(0.3);
    CHECK(m.phi(0.5) == doctest::Approx(1.3 * std::pow(0.5, 0.3)));
    CHECK(m.phi_eps(1e-6) == doctest::Approx(1.3 * std::pow(1e-6, 0.3)));
    CHECK(m.phi1 == doctest::Approx(1.3));
  }

  TEST_CASE("J_gamma at alpha = 2 against Gaussian oracles" * doctest::timeout(300)) {
    // 4N: spectral identity with a TypeI density; 3N: tensor continuum rule
    CHECK(J_gamma(spec(Walk::FourN, 2, 0.3, 1), 1, 1) == doctest::Approx(1.9630327).epsilon(1e-4));
    CHECK(J_gamma(spec(Walk::ThreeN, 2, 0.3, 0.5), 1, 1) == doctest::Approx(1.8933232).epsilon(1e-4));
  }

  TEST_CASE("lattice and Parseval routes for J_n agree at alpha = 2" * doctest::timeout(300)) {
    const StableLimitSpec s = spec(Walk::ThreeN, 2, 0.3, 0.5);
    const double p = J_n_gamma(s, 16, JnMethod::Parseval), l = J_n_gamma(s, 16, JnMethod::Lattice);
    CHECK(p == doctest::Approx(1.7421751223229058).epsilon(1e-6));
    // fixed Gauss-Jacobi rule in a is biased low by a few percent at this n
    CHECK(l / p == doctest::Approx(1.0).epsilon(0.05));
    CHECK_THROWS(J_n_gamma(s, kJnCap + 1));
  }

  TEST_CASE("covariance asymptotics converge") {
    const auto rows = cov_asymptotics(Walk::FourN, MixingLaw::standard(0.3), 1, 1, {8, 16});
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].rel_err < rows[0].rel_err);
    CHECK(rows[1].rel_err < 0.01);
  }
}
