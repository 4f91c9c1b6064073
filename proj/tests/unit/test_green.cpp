#include <doctest.h>

#include <cmath>

#include "alrd/errors.hpp"
#include "alrd/green.hpp"

using namespace alrd;

namespace {
// sum_k a^k p_k(t,s) by direct transition-matrix iteration (numpy), 60 / 420 terms
struct Ref {
  const char* model;
  double a;
  double v[6];
};
const int kPts[6][2] = {{0, 0}, {1, 0}, {2, 1}, {3, -2}, {5, 0}, {0, 3}};
const Ref kRefs[] = {
    {"3n", 0.5, {1.0606601717798212, 0.19887378220871646, 0.018644417082067176, 0.0019421267793819964,
                 0.0003880460342398014, 0.005357006202307373}},
    {"3n", 0.9, {1.2499999999999998, 0.5859374999999999, 0.24719238281250003, 0.1158714294433594,
                 0.0860831933096051, 0.04629629629629631}},
    {"4n", 0.5, {1.0731820071493645, 0.14636401429872872, 0.007837540517262036, 0.0004676282328327915,
                 6.798581216724915e-05, 0.002995543326509046}},
    {"4n", 0.9, {1.4518426733757879, 0.5020474148619858, 0.14498073127242558, 0.04700987100057145,
                 0.017622298531423337, 0.08423040674557208}},
};
GreenKernel kern(const char* m, double a, GreenBackend b) {
  GreenKernel k;
  k.model = WalkModel::of(parse_walk(m));
  k.a = a;
  k.backend = b;
  return k;
}
}  // namespace

TEST_SUITE("green") {
  TEST_CASE("series against transition-matrix oracle") {
    for (const Ref& r : kRefs)
      for (int i = 0; i < 6; ++i) {
        CAPTURE(r.model);
        CAPTURE(r.a);
        CAPTURE(i);
        const GreenKernel k = kern(r.model, r.a, GreenBackend::Series);
        CHECK(green_series(k, kPts[i][0], kPts[i][1]).value == doctest::Approx(r.v[i]).epsilon(1e-12));
      }
  }

  TEST_CASE("backends agree") {
    for (const char* m : {"3n", "4n"})
      for (double a : {0.5, 0.9}) {
        const GreenGrid g = green_fft(kern(m, a, GreenBackend::FftInversion), 8);
        const GreenKernel ks = kern(m, a, GreenBackend::Series), kl = kern(m, a, GreenBackend::LineIntegral);
        for (int t = -8; t <= 8; t += 2)
          for (int s = -8; s <= 8; s += 3) {
            const double v = green_series(ks, t, s).value;
            CHECK(std::fabs(g.at(t, s) - v) <= 1e-8);
            CHECK(std::fabs(green_line(kl, t, s).value - v) <= 1e-10 * std::max(1.0, v) + 1e-14);
          }
        CHECK(g.total() * (1 - a) == doctest::Approx(1.0).epsilon(1e-6));
      }
  }

  TEST_CASE("3N is one-sided in t") {
    const GreenKernel k = kern("3n", 0.7, GreenBackend::Series);
    CHECK(green_series(k, -1, 0).value == 0.0);
    CHECK(green_series(k, 2, 0).value > 0.0);
  }

  TEST_CASE("characteristic function and tails") {
    const WalkModel m = WalkModel::four_n();
    CHECK(std::abs(p_hat(m, 0, 0) - 1.0) < 1e-15);
    CHECK(std::abs(one_minus_a_phat(m, 0.9, 0.3, -0.2) - (1.0 - 0.9 * p_hat(m, 0.3, -0.2))) < 1e-14);
    double prev = 1e300;
    for (double R : {2.0, 8.0, 32.0}) {
      const double t = green_tail_mass(m, 0.95, R, 0);
      CHECK(t < prev);
      prev = t;
    }
    const auto R = green_tail_radius(m, 0.95, 1e-10, 0);
    CHECK(green_tail_mass(m, 0.95, double(R), 0) <= 1e-10);
  }

  TEST_CASE("limit kernels") {
    CHECK(h3(1, 1, 1) == doctest::Approx(0.032814006253460086).epsilon(1e-12));
    CHECK(h4(1, 1, 1) == doctest::Approx(0.026987441513120315).epsilon(1e-10));
    CHECK(h4(1, 0, 1) == doctest::Approx(0.07250709134387025).epsilon(1e-10));
    CHECK(h3(-1, 0, 1) == 0.0);
    CHECK_THROWS_AS(h4(0, 0, 1), DomainError);
  }

  TEST_CASE("near-unit-root ladder improves") {
    const auto rows = scaling_limit_probe(WalkModel::four_n(), 1, 0, 1, {100, 400});
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].rel_err < rows[0].rel_err);
    CHECK(rows[1].rel_err < 0.05);
  }

  TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(kern("3n", 1.0, GreenBackend::Series).validate(), DomainError);
    CHECK_THROWS_AS(kern("3n", -0.1, GreenBackend::Series).validate(), DomainError);
    CHECK_THROWS_AS(parse_walk("5n"), ConfigError);
  }
}
