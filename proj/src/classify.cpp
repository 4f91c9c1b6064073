#include "alrd/classify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "alrd/errors.hpp"

namespace alrd {

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::TypeI_isotropic: return "TypeI_isotropic";
    case Verdict::TypeI_anisotropic: return "TypeI_anisotropic";
    case Verdict::TypeII: return "TypeII";
    case Verdict::Undetermined: return "Undetermined";
  }
  return "?";
}

Verdict parse_verdict(const std::string& s) {
  for (Verdict v : {Verdict::TypeI_isotropic, Verdict::TypeI_anisotropic, Verdict::TypeII, Verdict::Undetermined})
    if (verdict_name(v) == s) return v;
  throw ConfigError("unknown verdict '" + s + "'");
}

std::string direction_name(Direction d) {
  switch (d) {
    case Direction::Dependent: return "dependent";
    case Direction::Independent: return "independent";
    case Direction::Invariant: return "invariant";
    case Direction::Inconclusive: return "inconclusive";
  }
  return "?";
}

Direction classify_direction(double overlap, double distance, const ProbeThresholds& th) {
  const double o = std::fabs(overlap), d = std::fabs(distance);
  if (!std::isfinite(o) || !std::isfinite(d)) return Direction::Inconclusive;
  if (o <= th.zero && d >= th.nonzero) return Direction::Independent;
  if (d <= th.zero && o >= th.nonzero) return Direction::Invariant;
  if (o >= th.nonzero && d >= th.nonzero) return Direction::Dependent;
  return Direction::Inconclusive;
}

namespace {

DirectionProbe make_probe(double self, double self2, double cross, double dist, const ProbeThresholds& th) {
  DirectionProbe p;
  const double scale = 0.5 * (self + self2);
  p.overlap = cross / scale;
  p.distance = dist / scale;
  p.state = classify_direction(p.overlap, p.distance, th);
  return p;
}

}  // namespace

std::vector<LadderPoint> probe_ladder(const StableLimitSpec& base, const std::vector<double>& gammas,
                                      const ProbeThresholds& th) {
  std::vector<LadderPoint> out;
  const Box K{0, 0, 1, 1}, Kh{1, 0, 2, 1}, Kv{0, 1, 1, 2};
  for (double g : gammas) {
    StableLimitSpec sp = base;
    sp.gamma = g;
    sp.validate();
    const double al = sp.alpha;
    LadderPoint p;
    p.gamma = g;
    const ScalingLaw law = H_table(sp.model.variant, al, sp.mixing.beta, g);
    p.H_theory = law.H;
    p.regime = regime_name(law.regime);
    // translation invariance of the control measure: every unit square has the same norm
    const double n0 = F_overlap(sp, K, K, al / 2, al / 2);
    p.horizontal = make_probe(n0, n0, F_overlap(sp, K, Kh, al / 2, al / 2), F_distance(sp, K, Kh), th);
    p.vertical = make_probe(n0, n0, F_overlap(sp, K, Kv, al / 2, al / 2), F_distance(sp, K, Kv), th);
    out.push_back(p);
  }
  return out;
}

std::vector<LadderPoint> probe_ladder(const SpectralModel& m, const std::vector<double>& gammas,
                                      const ProbeThresholds& th) {
  m.validate();
  std::vector<LadderPoint> out;
  const Rectangle K{0, 0, 1, 1}, Kh{1, 0, 2, 1}, Kv{0, 1, 1, 2};
  for (double g : gammas) {
    LadderPoint p;
    p.gamma = g;
    const ScalingLaw law = H_of_gamma(m, g);
    p.H_theory = law.H;
    p.regime = regime_name(law.regime);
    const double c00 = limit_increment_cov(m, g, K, K);
    auto probe = [&](const Rectangle& K2) {
      const double c22 = limit_increment_cov(m, g, K2, K2), c02 = limit_increment_cov(m, g, K, K2);
      return make_probe(c00, c22, c02, c00 + c22 - 2 * c02, th);
    };
    p.horizontal = probe(Kh);
    p.vertical = probe(Kv);
    out.push_back(p);
  }
  return out;
}

std::vector<long long> feasible_ladder(int width, int height, double gamma, int min_tiles) {
  if (!(gamma > 0)) throw DomainError("feasible_ladder: gamma must be positive");
  int q = 0, p = 0;
  for (int d = 1; d <= 8 && q == 0; ++d) {
    const double num = gamma * d;
    if (std::fabs(num - std::round(num)) < 1e-9) {
      q = d;
      p = int(std::round(num));
    }
  }
  std::vector<long long> out;
  auto fits = [&](long long n, long long m) { return m >= 2 && n * min_tiles <= width && m * min_tiles <= height; };
  if (q > 0) {
    // powers of two first; the 3*2^j bases only when the ladder would be too short
    for (int pass = 0; pass < 2 && out.size() < 3; ++pass) {
      out.clear();
      for (long long b2 = 2; std::pow(double(b2), q) * min_tiles <= width; b2 *= 2)
        for (long long b : {b2, 3 * b2 / 2}) {
          if (b < 2 || (pass == 0 && b != b2)) continue;
          const double nn = std::pow(double(b), q), mm = std::pow(double(b), p);
          if (nn * min_tiles > width || mm * min_tiles > height) continue;
          if (fits((long long)nn, (long long)mm) && (out.empty() || (long long)nn > out.back()))
            out.push_back((long long)nn);
        }
    }
    if (!out.empty()) return out;
  }
  long long last_m = 0;
  for (long long n = 2; n * min_tiles <= width; n *= 2) {
    const long long m = side_length(n, gamma, 1.0);
    if (!fits(n, m) || m == last_m) continue;
    out.push_back(n);
    last_m = m;
  }
  return out;
}

void attach_estimates(std::vector<LadderPoint>& pts, const std::vector<LatticeField>& fields) {
  if (fields.empty()) return;
  for (LadderPoint& p : pts) {
    const auto lad = feasible_ladder(fields.front().width, fields.front().height, p.gamma);
    if (lad.size() < 3) continue;
    const HEstimate e = estimate_H(fields, p.gamma, lad);
    p.H_hat = e.H;
    p.H_se = e.se;
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t k = 0; k + 1 < e.rows.size(); ++k) {
      const double sl = (e.rows[k + 1].log_var - e.rows[k].log_var) /
                        (2.0 * std::log(double(e.rows[k + 1].n) / double(e.rows[k].n)));
      lo = std::min(lo, sl);
      hi = std::max(hi, sl);
    }
    p.H_sys = hi - lo;
  }
}

ClassificationReport classify(const std::string& model_id, const std::vector<LadderPoint>& pts, double ci_z) {
  ClassificationReport r;
  r.model_id = model_id;
  r.ladder = pts;
  r.ci_z = ci_z;
  r.verdict = Verdict::Undetermined;
  if (pts.size() < 2) {
    r.reason = "ladder needs at least two gamma values";
    return r;
  }
  std::vector<double> dep;
  for (const LadderPoint& p : pts) {
    std::ostringstream os;
    os << "gamma=" << p.gamma << ": ";
    if (p.horizontal.state == Direction::Inconclusive || p.vertical.state == Direction::Inconclusive) {
      r.reason = os.str() + "inconclusive dependence probe";
      return r;
    }
    const double half = ci_z * std::hypot(p.H_se, p.H_sys);
    if (p.has_estimate() && !(std::fabs(p.H_hat - p.H_theory) <= half)) {
      os << "H estimate " << p.H_hat << " +- " << half << " excludes theory " << p.H_theory;
      r.reason = os.str();
      return r;
    }
    if (p.dependent()) dep.push_back(p.gamma);
    else if (p.horizontal.state != Direction::Dependent && p.vertical.state != Direction::Dependent) {
      r.reason = os.str() + "degenerate in both directions (neither Type I nor Type II)";
      return r;
    }
  }
  if (dep.size() == pts.size()) {
    r.verdict = Verdict::TypeII;
    r.reason = "dependent rectangular increments at every probed gamma";
  } else if (dep.size() == 1) {
    r.gamma0 = dep.front();
    r.verdict = r.gamma0 == 1.0 ? Verdict::TypeI_isotropic : Verdict::TypeI_anisotropic;
    r.reason = "dependent increments only at gamma0, semi-dependent elsewhere";
  } else {
    std::ostringstream os;
    os << dep.size() << " of " << pts.size() << " probed gamma values are fully dependent";
    r.reason = os.str();
  }
  return r;
}

nlohmann::json ClassificationReport::to_json() const {
  nlohmann::json lad = nlohmann::json::array();
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  for (const LadderPoint& p : ladder) {
    lad.push_back({{"gamma", p.gamma},
                   {"H_theory", p.H_theory},
                   {"regime", p.regime},
                   {"H_hat", num(p.H_hat)},
                   {"H_se", num(p.H_se)},
                   {"H_sys", p.H_sys},
                   {"horizontal",
                    {{"overlap", p.horizontal.overlap},
                     {"distance", p.horizontal.distance},
                     {"state", direction_name(p.horizontal.state)}}},
                   {"vertical",
                    {{"overlap", p.vertical.overlap},
                     {"distance", p.vertical.distance},
                     {"state", direction_name(p.vertical.state)}}},
                   {"dependent", p.dependent()}});
  }
  return {{"model", model_id}, {"ladder", lad},      {"gamma0", num(gamma0)},
          {"ci_z", ci_z},      {"verdict", verdict_name(verdict)}, {"reason", reason}};
}

}  // namespace alrd
