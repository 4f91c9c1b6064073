#pragma once
#include <functional>
#include <string>
#include <vector>

#include "alrd/green.hpp"
#include "alrd/spectra.hpp"

namespace alrd {

struct MixingLaw {
  double beta = 0.3;
  double phi1 = 1.3;
  std::function<double(double)> density;  // phi on [0,1); empty means (1+beta)(1-a)^beta
  static MixingLaw standard(double beta);
  double phi(double a) const;
  // phi(1 - eps), evaluated without forming a when eps is tiny
  double phi_eps(double eps) const;
  void validate() const;
};

struct StableLimitSpec {
  WalkModel model = WalkModel::three_n();
  double alpha = 2.0;
  MixingLaw mixing;
  double gamma = 0.5;
  double gamma0() const { return model.variant == Walk::ThreeN ? 0.5 : 1.0; }
  void validate() const;
};

// Rectangle [x0,x1] x [y0,y1]; the kernels below take x0 = y0 = 0 unless a rectangle is given.
struct Box {
  double x0 = 0, y0 = 0, x1 = 1, y1 = 1;
};

double F3_kernel(const StableLimitSpec& spec, double x, double y, double u, double v, double z);
double F4_kernel(const StableLimitSpec& spec, double x, double y, double u, double v, double z);
// Kernel of the increment V(K) for either walk.
double F_kernel(const StableLimitSpec& spec, const Box& K, double u, double v, double z);

struct JResult {
  double value = 0;
  double coarse = 0;  // lower-resolution estimate used for the convergence check
};

// Tensor rule resolution for the control-measure integrals: Gauss-Legendre order per panel,
// geometric refinement levels near kinks, panel width and half-span in log z.
struct JQuadrature {
  int order = 4;
  int levels = 6;
  double zpanel = 3.0;
  double zspan = 30.0;
};

JResult J_gamma_detail(const StableLimitSpec& spec, double x, double y, const JQuadrature& fine = {},
                       const JQuadrature& coarse = {3, 4, 3.0, 30.0});
double J_gamma(const StableLimitSpec& spec, double x, double y);

// Integral of F_K^p F_K2^q against the control measure.
double F_overlap(const StableLimitSpec& spec, const Box& K, const Box& K2, double p, double q);
// Integral of |F_K - F_K2|^alpha against the control measure.
double F_distance(const StableLimitSpec& spec, const Box& K, const Box& K2);

inline constexpr long long kJnCap = 256;
enum class JnMethod { Auto, Parseval, Lattice };
// Auto: Parseval identity when alpha = 2, lattice sums otherwise.
double J_n_gamma(const StableLimitSpec& spec, long long n, JnMethod method = JnMethod::Auto);

ScalingLaw H_table(Walk model, double alpha, double beta, double gamma);

struct CovRow {
  double lambda;
  long long t, s;  // lattice lag
  double cov;      // r(t,s)
  double scaled;   // lambda^p * r
  double limit;
  double rel_err;
};

// r(t,s) of the aggregated Gaussian field (sigma^2 = 1).
double aggregated_cov(const WalkModel& m, const MixingLaw& mix, long long t, long long s);
double cov_limit(Walk model, const MixingLaw& mix, double t, double s);
std::vector<CovRow> cov_asymptotics(Walk model, const MixingLaw& mix, double t, double s,
                                    const std::vector<double>& lambdas);

}  // namespace alrd
