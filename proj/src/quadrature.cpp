#include "alrd/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "alrd/errors.hpp"
#include "alrd/specfun.hpp"

namespace alrd {
namespace detail {
const double kXgk[11] = {0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
                         0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
                         0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
                         0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
                         0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
                         0.000000000000000000000000000000000};
const double kWgk[11] = {0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
                         0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
                         0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
                         0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
                         0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
                         0.149445554002916905664936468389821};
const double kWg[5] = {0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
                       0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
                       0.295524224714752870173892994651338};
}  // namespace detail

GaussRule gauss_legendre(int n) {
  if (n < 1) throw DomainError("gauss_legendre: n must be >= 1");
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5)), pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::fabs(z - z1) < 1e-16) break;
    }
    r.x[i] = -z;
    r.x[n - 1 - i] = z;
    r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
  return r;
}

GaussRule gauss_jacobi_unit(int n, double beta) {
  if (n < 1 || !(beta > -1.0)) throw DomainError("gauss_jacobi_unit: need n >= 1, beta > -1");
  // Golub-Welsch for weight w^beta on [0,1], i.e. Jacobi (0, beta) on [-1,1] mapped.
  const double al = 0.0, be = beta;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const double s = 2.0 * k + al + be;
    const double ak = (k == 0 && s == 0.0) ? (be - al) / (al + be + 2.0) : (be * be - al * al) / (s * (s + 2.0));
    J(k, k) = ak;
    if (k + 1 < n) {
      const double k1 = k + 1.0, s1 = 2.0 * k1 + al + be;
      const double b2 = 4.0 * k1 * (k1 + al) * (k1 + be) * (k1 + al + be) / (s1 * s1 * (s1 + 1.0) * (s1 - 1.0));
      J(k, k + 1) = J(k + 1, k) = std::sqrt(b2);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  const double mu0 = std::exp((al + be + 1.0) * std::log(2.0) + log_gamma(al + 1.0) + log_gamma(be + 1.0) -
                              log_gamma(al + be + 2.0));
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    const double xi = es.eigenvalues()(i);  // in [-1,1], weight (1-x)^al (1+x)^be
    const double v0 = es.eigenvectors()(0, i);
    // w = (1+x)/2 carries the beta weight.
    r.x[i] = 0.5 * (1.0 + xi);
    r.w[i] = mu0 * v0 * v0 / std::pow(2.0, al + be + 1.0);
  }
  return r;
}

std::vector<double> geometric_breaks(double a, double b, bool toward_a, int levels) {
  std::vector<double> out;
  double h = b - a;
  for (int k = 0; k < levels; ++k) {
    h *= 0.5;
    out.push_back(toward_a ? a + h : b - h);
  }
  return out;
}

}  // namespace alrd
