#pragma once
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace alrd {

enum class Walk { ThreeN, FourN };

struct Step {
  int dt, ds;
  double prob;
};

struct WalkModel {
  Walk variant = Walk::ThreeN;
  std::vector<Step> steps;
  static WalkModel three_n();
  static WalkModel four_n();
  static WalkModel of(Walk w) { return w == Walk::ThreeN ? three_n() : four_n(); }
  std::string name() const { return variant == Walk::ThreeN ? "3n" : "4n"; }
};

Walk parse_walk(const std::string& s);

// Characteristic function p_hat(x,y) = sum_{steps} e^{-i(dt x + ds y)} prob.
std::complex<double> p_hat(const WalkModel& m, double x, double y);
// 1 - a p_hat, with the real part assembled from (1-a) + a*sum p(1-cos) to avoid cancellation.
std::complex<double> one_minus_a_phat(const WalkModel& m, double a, double x, double y);
// q = min(q1, q2) of the walk.
double walk_q(const WalkModel& m);

enum class GreenBackend { Series, FftInversion, LineIntegral };

struct GreenKernel {
  WalkModel model;
  double a = 0.5;
  double truncation_tol = 1e-10;
  GreenBackend backend = GreenBackend::Series;
  void validate() const;
};

struct GreenValue {
  double value = 0.0;
  double tail_bound = 0.0;  // certified bound on the truncated remainder
  std::int64_t terms = 0;
};

inline constexpr std::int64_t kSeriesTermCap = 10'000'000;

double pk(const WalkModel& m, std::int64_t k, std::int64_t t, std::int64_t s);
// Number of series terms needed for a^{K+1}/(1-a) <= tol.
std::int64_t series_terms(double a, double tol);
GreenValue green_series(const GreenKernel& kern, std::int64_t t, std::int64_t s,
                        std::int64_t term_cap = kSeriesTermCap);

// Certified bound on sum of g over {(t,s): dir-coordinate >= R} (dir 0:+t, 1:-t, 2:+s, 3:-s).
double green_tail_mass(const WalkModel& m, double a, double R, int dir);
// Smallest R with green_tail_mass(dir) <= tol.
std::int64_t green_tail_radius(const WalkModel& m, double a, double tol, int dir);

struct GreenGrid {
  int half_width = 0;
  int Mt = 0, Ms = 0;              // periodic FFT grid sizes
  std::vector<double> periodic;    // Mt x Ms, index (t mod Mt)*Ms + (s mod Ms)
  double alias_bound = 0.0;
  double at(int t, int s) const;   // |t|,|s| <= half_width
  double total() const;            // sum over the whole periodic grid
};

inline constexpr std::int64_t kFftCellCap = std::int64_t(1) << 26;

// Grid sizes chosen from the certified tail; throws ResourceError if over the cell cap.
void fft_grid_size(const WalkModel& m, double a, double tol, int reach_t, int reach_s, int& Mt, int& Ms);
GreenGrid green_fft(const GreenKernel& kern, int half_width);
// Periodic Green grid of given size (no half-width restriction).
std::vector<double> green_periodic(const WalkModel& m, double a, int Mt, int Ms);

// 1D Fourier integral after closing the y-integral in closed form.
GreenValue green_line(const GreenKernel& kern, std::int64_t t, std::int64_t s);
// Fourier transform of g in s only: sum_s e^{-isy} g(t,s) as a function of t, closed form.
std::complex<double> green_hat_s(const WalkModel& m, double a, std::int64_t t, double y);

double green_eval(const GreenKernel& kern, std::int64_t t, std::int64_t s);

double h3(double t, double s, double z);
double h4(double t, double s, double z);
double h3_bound(double t, double s, double z);
double h4_bound(double t, double s, double z, double lambda, double c = 0.05);

struct ProbeRow {
  double lambda = 0.0;
  double rescaled_green = 0.0;
  double limit_kernel = 0.0;
  double rel_err = 0.0;
  std::string backend;
};

std::vector<ProbeRow> scaling_limit_probe(const WalkModel& m, double t, double s, double z,
                                          const std::vector<double>& lambdas);

}  // namespace alrd
