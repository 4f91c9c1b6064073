#pragma once
#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "alrd/green.hpp"
#include "alrd/spectra.hpp"
#include "alrd/stable_limits.hpp"

namespace alrd {

// Stateless counter-based generator: every draw is a hash of (key, counter), so streams can be
// derived per component and per cell without any shared state.
class CounterRng {
 public:
  CounterRng() = default;
  explicit CounterRng(std::uint64_t seed);
  CounterRng child(std::uint64_t id) const;
  std::uint64_t bits(std::uint64_t counter) const;
  double uniform(std::uint64_t counter) const;  // in (0,1)
  std::uint64_t key() const { return key_; }

  double next_uniform() { return uniform(ctr_++); }
  double next_normal();
  double next_exponential();

 private:
  std::uint64_t key_ = 0;
  std::uint64_t ctr_ = 0;
};

std::uint64_t cell_id(std::int64_t u, std::int64_t v);
// Seed of the i-th field in a batch generated from one master seed.
std::uint64_t field_seed(std::uint64_t master, std::uint64_t i);

// fn(i) for i in [0,n) on up to `threads` workers (0: hardware concurrency). Results must not depend
// on the schedule; the first exception is rethrown after all workers stop.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

struct FieldMeta {
  std::uint64_t seed = 0;
  std::string generator;
  nlohmann::json params = nlohmann::json::object();
};

struct LatticeField {
  int width = 0, height = 0;    // t in [0,width), s in [0,height)
  std::vector<double> values;   // index s*width + t
  FieldMeta meta;

  LatticeField() = default;
  LatticeField(int w, int h) : width(w), height(h), values(std::size_t(w) * h, 0.0) {}
  double& at(int t, int s) { return values[std::size_t(s) * width + t]; }
  double at(int t, int s) const { return values[std::size_t(s) * width + t]; }
  double total() const;
  void validate() const;
};

enum class InnovationFlavor { Gaussian, ExactStable, ParetoTail };

struct InnovationLaw {
  double alpha = 2.0;
  InnovationFlavor flavor = InnovationFlavor::Gaussian;
  double scale = 1.0;  // sigma for Gaussian, stable scale, multiplier of the Pareto variable
  static InnovationLaw gaussian(double sigma = 1.0);
  static InnovationLaw stable(double alpha, double scale = 1.0);
  static InnovationLaw pareto(double alpha, double scale = 1.0);
  // Gaussian at alpha = 2, exact stable otherwise.
  static InnovationLaw for_alpha(double alpha);
  void validate() const;
  std::string name() const;
};

// Inverse-CDF sampler for A. The default density has a closed-form inverse; a custom density is
// tabulated once in log(1-a).
class MixingSampler {
 public:
  explicit MixingSampler(const MixingLaw& law);
  double quantile(double U) const;  // a with P(A <= a) = U
 private:
  MixingLaw law_;
  std::vector<double> logeps_, cdf_;  // P(1-A < eps) on a log grid
  double norm_ = 1.0;
  double eps_cdf(double le) const;
};

double sample_mixing(const MixingLaw& law, CounterRng& rng);
double sample_innovation(const InnovationLaw& law, CounterRng& rng);

struct FieldBudget {
  std::int64_t max_cells = std::int64_t(1) << 23;  // padded FFT grid
  double tol = 1e-10;                              // Green tail mass left out of the convolution
};

// X(t,s) = sum_{u,v} g(t-u,s-v,a) eps(u,v) on [0,width) x [0,height), with eps given on global
// lattice coordinates. Throws ResourceError when the padded grid exceeds the budget.
LatticeField convolve_green(const WalkModel& m, double a, int width, int height,
                            const std::function<double(std::int64_t, std::int64_t)>& eps,
                            const FieldBudget& budget = {});

// Innovation at (u,v) is drawn from CounterRng(seed).child(cell_id(u,v)).
LatticeField simulate_ar_field(const WalkModel& m, double a, const InnovationLaw& law, int width, int height,
                               std::uint64_t seed, const FieldBudget& budget = {});

LatticeField aggregate_field(const StableLimitSpec& spec, long long n_components, int width, int height,
                             std::uint64_t seed, const FieldBudget& budget = {});

enum class GaussMethod { ExactCholesky, SpectralFFT };

inline constexpr int kCholeskyCellCap = 4096;

// Covariance r(t,s) = int_{[-pi,pi]^2} e^{i(tx+sy)} f(x,y) dx dy for |t| <= T, |s| <= S.
struct CovGrid {
  int T = 0, S = 0;
  std::vector<double> v;  // (t+T)*(2S+1) + (s+S)
  double at(int t, int s) const;
};
CovGrid spectral_covariance(const SpectralModel& m, int T, int S);

// Reusable Gaussian generator: the factorization or the frequency grid is built once.
class GaussianFieldSampler {
 public:
  GaussianFieldSampler(const SpectralModel& m, int width, int height, GaussMethod method, int refine = 4);
  LatticeField sample(std::uint64_t seed) const;
  // Exact covariance of the generated field at lag (t,s) (the synthesized one for SpectralFFT).
  double field_covariance(int t, int s) const;
  int Mt() const { return Mt_; }
  int Ms() const { return Ms_; }

 private:
  SpectralModel model_;
  int width_, height_;
  GaussMethod method_;
  int refine_;
  int Mt_ = 0, Ms_ = 0;
  std::vector<double> amp_;     // sqrt(cell-mean f * dx * dy), FFT index order
  std::vector<double> L_;       // dense lower Cholesky factor, row-major
  CovGrid cov_;
  std::vector<double> synth_cov_;
};

LatticeField simulate_gaussian_spectral(const SpectralModel& m, int width, int height, std::uint64_t seed,
                                        GaussMethod method, int refine = 4);
LatticeField white_noise_field(int width, int height, std::uint64_t seed, double sigma = 1.0);

class PrefixSums {
 public:
  explicit PrefixSums(const LatticeField& f);
  // Sum over t0 <= t < t0+w, s0 <= s < s0+h.
  double rect(int t0, int s0, int w, int h) const;
  // Sum over K_{[nx],[n^gamma y]} anchored at the origin cell.
  double partial_sum(long long n, double gamma, double x, double y) const;
  int width() const { return w_; }
  int height() const { return h_; }

 private:
  int w_, h_;
  std::vector<double> P_;  // (w+1) x (h+1)
};

double partial_sum(const LatticeField& f, long long n, double gamma, double x, double y);
long long side_length(long long n, double gamma, double x);  // floor(n^gamma x) guarded against rounding

struct HRow {
  long long n = 0, m = 0;
  long long count = 0;  // rectangles pooled
  double var = 0.0;
  double log_var = 0.0;
};

struct HEstimate {
  double H = 0.0;
  double se = 0.0;
  std::vector<HRow> rows;
};

// OLS slope of log Var S_n against 2 log n over disjoint rectangle translates pooled across fields.
// The standard error is a delete-one-field jackknife (regression residual error for one field).
HEstimate estimate_H(const std::vector<LatticeField>& fields, double gamma, const std::vector<long long>& ladder);

struct CFEstimate {
  double value = 0.0;
  double se = 0.0;
};
// Real part of the empirical characteristic function (the sample is symmetric).
CFEstimate empirical_cf(const std::vector<double>& sample, double theta);

void write_field_csv(const std::filesystem::path& p, const LatticeField& f);
LatticeField read_field_csv(const std::filesystem::path& p);
// Little-endian binary: 32-byte header {magic[8], width u64, height u64, dtype u32, reserved u32},
// float64 values, plus <path>.json with the metadata.
void write_field_binary(const std::filesystem::path& p, const LatticeField& f);
LatticeField read_field_binary(const std::filesystem::path& p);
nlohmann::json meta_to_json(const LatticeField& f);

// $ALRD_SCRATCH if set, otherwise the system temporary directory.
std::filesystem::path scratch_dir();

}  // namespace alrd
