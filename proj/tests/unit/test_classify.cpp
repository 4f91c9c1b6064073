#include <doctest.h>

#include <cmath>

#include "alrd/classify.hpp"
#include "alrd/errors.hpp"

using namespace alrd;

namespace {
LadderPoint point(double g, Direction h, Direction v, double H = 1.0) {
  LadderPoint p;
  p.gamma = g;
  p.H_theory = H;
  p.horizontal.state = h;
  p.vertical.state = v;
  return p;
}
constexpr auto Dep = Direction::Dependent, Ind = Direction::Independent, Inv = Direction::Invariant;
}  // namespace

TEST_SUITE("classify") {
  TEST_CASE("direction thresholds") {
    CHECK(classify_direction(0.2, 0.5) == Dep);
    CHECK(classify_direction(1e-9, 0.5) == Ind);
    CHECK(classify_direction(0.2, 1e-9) == Inv);
    CHECK(classify_direction(1e-5, 0.5) == Direction::Inconclusive);
    CHECK(classify_direction(NAN, 0.5) == Direction::Inconclusive);
  }

  TEST_CASE("verdicts from synthetic ladders") {
    CHECK(classify("m", {point(0.5, Dep, Dep), point(1, Dep, Dep)}).verdict == Verdict::TypeII);
    const auto iso = classify("m", {point(0.5, Dep, Inv), point(1, Dep, Dep), point(2, Dep, Ind)});
    CHECK(iso.verdict == Verdict::TypeI_isotropic);
    CHECK(iso.gamma0 == 1.0);
    const auto an = classify("m", {point(0.25, Dep, Inv), point(0.5, Dep, Dep), point(1, Dep, Ind)});
    CHECK(an.verdict == Verdict::TypeI_anisotropic);
    CHECK(an.gamma0 == 0.5);
    CHECK(classify("m", {point(0.5, Dep, Inv), point(1, Dep, Ind)}).verdict == Verdict::Undetermined);
    CHECK(classify("m", {point(0.5, Ind, Inv), point(1, Dep, Dep)}).verdict == Verdict::Undetermined);
    CHECK(classify("m", {point(0.5, Direction::Inconclusive, Dep), point(1, Dep, Dep)}).verdict ==
          Verdict::Undetermined);
    CHECK(classify("m", {point(1, Dep, Dep)}).verdict == Verdict::Undetermined);
  }

  TEST_CASE("an H confidence interval excluding theory forces Undetermined") {
    auto p = point(1, Dep, Dep, 1.4);
    p.H_hat = 1.30;
    p.H_se = 0.01;
    CHECK(classify("m", {point(0.5, Dep, Dep), p}).verdict == Verdict::Undetermined);
    p.H_hat = 1.38;
    CHECK(classify("m", {point(0.5, Dep, Dep), p}).verdict == Verdict::TypeII);
    p.H_sys = 0.05;
    p.H_hat = 1.30;
    CHECK(classify("m", {point(0.5, Dep, Dep), p}).verdict == Verdict::TypeII);
  }

  TEST_CASE("n ladders keep n^gamma integral") {
    CHECK(feasible_ladder(512, 512, 0.5) == std::vector<long long>{4, 16, 64, 256});
    CHECK(feasible_ladder(512, 512, 0.25) == std::vector<long long>{16, 81, 256});
    CHECK(feasible_ladder(512, 512, 2.0) == std::vector<long long>{2, 4, 8, 16});
    for (long long n : feasible_ladder(512, 512, 0.7)) CHECK(side_length(n, 0.7, 1) >= 2);
    CHECK_THROWS_AS(feasible_ladder(64, 64, 0.0), DomainError);
  }

  TEST_CASE("Gaussian spectral models from probes") {
    const auto t2 = classify("t2", probe_ladder(SpectralModel::type_ii(0.2, 0.2), {0.25, 0.5, 1, 2}));
    CHECK(t2.verdict == Verdict::TypeII);
    const auto t1 = probe_ladder(SpectralModel::type_i(0.8, 1.5), {0.5, 1, 2});
    CHECK(classify("t1", t1).verdict == Verdict::Undetermined);  // gamma0 = 8/15 is not probed
    CHECK(t2.to_json().at("verdict") == "TypeII");
    CHECK(parse_verdict("TypeI_isotropic") == Verdict::TypeI_isotropic);
    CHECK_THROWS_AS(parse_verdict("typeIII"), ConfigError);
  }
}
