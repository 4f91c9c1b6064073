#pragma once
#include <functional>
#include <string>

namespace alrd {

enum class SpectralKind { TypeI, TypeII, Lavancier };

struct SpectralModel {
  SpectralKind kind = SpectralKind::TypeII;
  double H1 = 0.5, H2 = 0.5, c = 1.0;     // TypeI
  double d1 = 0.2, d2 = 0.2;              // TypeII
  double theta1 = 1.0, theta2 = 1.0, d = 0.2;  // Lavancier
  std::function<double(double, double)> g_factor;  // empty means constant 1

  static SpectralModel type_i(double H1, double H2, double c = 1.0);
  static SpectralModel type_ii(double d1, double d2);
  static SpectralModel lavancier(double theta1, double theta2, double d);
  void validate() const;
  std::string name() const;
  double gamma0() const;  // H1/H2 for TypeI, 1 for Lavancier, NaN for TypeII
};

struct Rectangle {
  double u = 0.0, v = 0.0;  // lower corner
  double x = 1.0, y = 1.0;  // upper corner
};

enum class Regime {
  TypeI_Gamma0,
  TypeI_AboveH1Lt1,
  TypeI_AboveH1Gt1,
  TypeI_BelowH2Lt1,
  TypeI_BelowH2Gt1,
  TypeII_Affine,
  Lav_Gamma1,
  Lav_Above,
  Lav_Below,
  N3_Above,
  N3_BelowBetaHigh,
  N3_BelowBetaLow,
  N4_Above,
  N4_AboveBetaLow,
  N4_BelowBetaHigh,
  N4_BelowBetaLow
};
std::string regime_name(Regime r);

struct ScalingLaw {
  double gamma = 1.0;
  double H = 1.0;
  Regime regime = Regime::TypeII_Affine;
  double gamma0 = 1.0;
};

double density(const SpectralModel& m, double x, double y);
double limit_function(const SpectralModel& m, double x, double y, double gamma);
double fejer_sq(long long n, double u);
double variance_partial_sum(const SpectralModel& m, long long n, double gamma, double rel_tol = 1e-4);
double kappa_sq(double d);
double kappa_sq_integral(double d);  // defining integral by quadrature
ScalingLaw H_of_gamma(const SpectralModel& m, double gamma);
double rho1_sq(double H1);
double rho2_sq(double H1, double H2);
double limit_variance(const SpectralModel& m, double gamma, double x, double y);
double fbs_increment_cov(double H1, double H2, const Rectangle& K, const Rectangle& K2);
double increment_cov_functional(const std::function<double(double, double)>& k, const Rectangle& K,
                                const Rectangle& K2);
// Covariance of increments of the limit field V_gamma, covering the line-measure regimes.
double limit_increment_cov(const SpectralModel& m, double gamma, const Rectangle& K, const Rectangle& K2);

}  // namespace alrd
