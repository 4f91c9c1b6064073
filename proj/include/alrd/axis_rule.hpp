#pragma once
#include <functional>
#include <vector>

namespace alrd {

// A 1D rule sum_i w_i F(x_i) that already carries a kernel weight.
struct AxisRule {
  std::vector<double> x;
  std::vector<double> w;
  void append(const AxisRule& o) {
    x.insert(x.end(), o.x.begin(), o.x.end());
    w.insert(w.end(), o.w.begin(), o.w.end());
  }
};

// Gauss-Legendre panels between consecutive sorted breakpoints, node weights multiplied by W(x).
AxisRule panel_rule(std::vector<double> breaks, int order, const std::function<double(double)>& W);

// Breakpoints on [lo,hi] refined geometrically (ratio 2, `levels` steps) on both sides of each point in `sing`.
void add_singular_breaks(std::vector<double>& breaks, const std::vector<double>& sing, double lo, double hi,
                         double width, int levels);

struct RuleParams {
  int order = 8;     // Gauss-Legendre points per panel
  int periods = 32;  // oscillation periods resolved before switching to the averaged kernel
  int levels = 40;   // geometric refinement steps toward singular points
};

// Rule on [-pi,pi] for weight D_n^2(x), with the oscillation averaged beyond `periods` periods.
AxisRule fejer_rule(long long n, const RuleParams& p, const std::vector<double>& sing = {0.0});
// Rule on R for weight |1 - e^{iux}|^2/u^2, averaged to 2/u^2 beyond `periods` periods.
AxisRule continuum_rule(double len, const RuleParams& p, const std::vector<double>& sing = {0.0});

}  // namespace alrd
