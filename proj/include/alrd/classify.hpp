#pragma once
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "alrd/fields.hpp"
#include "alrd/spectra.hpp"
#include "alrd/stable_limits.hpp"

namespace alrd {

enum class Verdict { TypeI_isotropic, TypeI_anisotropic, TypeII, Undetermined };
std::string verdict_name(Verdict v);
Verdict parse_verdict(const std::string& s);

enum class Direction { Dependent, Independent, Invariant, Inconclusive };
std::string direction_name(Direction d);

// Rectangles shifted by one side length along a direction. overlap = normalized dependence of the
// two increments (zero iff independent), distance = normalized size of their difference (zero iff
// invariant).
struct DirectionProbe {
  double overlap = 0.0;
  double distance = 0.0;
  Direction state = Direction::Inconclusive;
};

struct ProbeThresholds {
  double zero = 1e-6;     // below: degenerate
  double nonzero = 1e-3;  // above: non-degenerate; in between the probe is inconclusive
};

Direction classify_direction(double overlap, double distance, const ProbeThresholds& th = {});

struct LadderPoint {
  double gamma = 1.0;
  double H_theory = 0.0;
  std::string regime;
  double H_hat = std::numeric_limits<double>::quiet_NaN();
  double H_se = std::numeric_limits<double>::quiet_NaN();
  double H_sys = 0.0;  // finite-size allowance: spread of the local log-log slopes
  DirectionProbe horizontal, vertical;
  bool dependent() const {
    return horizontal.state == Direction::Dependent && vertical.state == Direction::Dependent;
  }
  bool has_estimate() const { return std::isfinite(H_hat); }
};

struct ClassificationReport {
  std::string model_id;
  std::vector<LadderPoint> ladder;
  double gamma0 = std::numeric_limits<double>::quiet_NaN();
  double ci_z = 3.0;
  Verdict verdict = Verdict::Undetermined;
  std::string reason;
  nlohmann::json to_json() const;
};

// Probes and theory values on a gamma ladder.
std::vector<LadderPoint> probe_ladder(const StableLimitSpec& base, const std::vector<double>& gammas,
                                      const ProbeThresholds& th = {});
std::vector<LadderPoint> probe_ladder(const SpectralModel& m, const std::vector<double>& gammas,
                                      const ProbeThresholds& th = {});

// Fills H_hat/H_se where a usable n-ladder fits into the fields; points without one are left empty.
void attach_estimates(std::vector<LadderPoint>& pts, const std::vector<LatticeField>& fields);
// n = b^q for gamma = p/q (q <= 8) so that n^gamma = b^p is an integer, b a power of two (3*2^j added
// when fewer than three fit);
// powers of two with distinct floor(n^gamma) otherwise. Each side fits `min_tiles` times.
std::vector<long long> feasible_ladder(int width, int height, double gamma, int min_tiles = 2);

ClassificationReport classify(const std::string& model_id, const std::vector<LadderPoint>& pts, double ci_z = 3.0);

}  // namespace alrd
