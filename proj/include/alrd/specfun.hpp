#pragma once
#include <cstdint>

namespace alrd {

struct BinomialQuery {
  std::int64_t t = 0;
  std::int64_t k = 0;
  double p = 0.5;
};

double log_gamma(double x);
double log_binom_pmf(const BinomialQuery& q);
double binom_pmf(const BinomialQuery& q);
// p(u,v) = b((u+v)/2; u, 1/2) for |v| <= u and u+v even.
double rw1d_pmf(std::int64_t u, std::int64_t v);
double bessel_k0(double x);
double lower_incomplete_gamma(double a, double x);
// Sine and cosine integrals Si(x), Ci(x) for x > 0.
void sine_cosine_integral(double x, double& si, double& ci);

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace alrd
