#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "alrd/classify.hpp"
#include "alrd/errors.hpp"
#include "alrd/fields.hpp"
#include "alrd/green.hpp"
#include "alrd/spectra.hpp"
#include "alrd/stable_limits.hpp"

#ifndef ALRD_VERSION
#define ALRD_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace alrd;

namespace {

constexpr int kExitConfig = 2, kExitDomain = 3, kExitResource = 4, kExitCheck = 5;

struct CheckFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 1;
  std::string out = "out";
  bool check = false;
  double tol = std::numeric_limits<double>::quiet_NaN();
  unsigned threads = 0;
  double tol_or(double d) const { return std::isnan(tol) ? d : tol; }
};

// Every option is registered together with a getter so the resolved value can go into the manifest.
struct Registry {
  struct Entry {
    CLI::App* sub;
    std::string flag;
    std::function<json()> get;
    bool is_flag = false;
  };
  std::vector<Entry> entries;

  template <class T>
  CLI::Option* opt(CLI::App* sub, const std::string& flag, T& var, const std::string& desc) {
    entries.push_back({sub, flag, [&var] { return json(var); }});
    CLI::Option* o = sub->add_option(flag, var, desc);
    if constexpr (requires { var.begin(); } && !std::is_same_v<T, std::string>) o->delimiter(',');
    return o;
  }
  CLI::Option* flag(CLI::App* sub, const std::string& name, bool& var, const std::string& desc) {
    entries.push_back({sub, name, [&var] { return json(var); }, true});
    return sub->add_flag(name, var, desc);
  }
};

// ---------- model parameters shared by several subcommands ----------

struct SpectralArgs {
  std::string kind = "typeII";
  double H1 = 0.8, H2 = 1.5, c = 1.0;
  double d1 = 0.2, d2 = 0.2;
  double theta1 = 1.0, theta2 = 1.0, d = 0.2;

  void add(Registry& r, CLI::App* sub) {
    r.opt(sub, "--kind", kind, "typeI | typeII | lavancier");
    r.opt(sub, "--H1", H1, "TypeI exponent H1");
    r.opt(sub, "--H2", H2, "TypeI exponent H2");
    r.opt(sub, "--c", c, "TypeI constant");
    r.opt(sub, "--d1", d1, "TypeII memory parameter d1");
    r.opt(sub, "--d2", d2, "TypeII memory parameter d2");
    r.opt(sub, "--theta1", theta1, "Lavancier theta1");
    r.opt(sub, "--theta2", theta2, "Lavancier theta2");
    r.opt(sub, "--d", d, "Lavancier memory parameter");
  }
  SpectralModel model() const {
    SpectralModel m;
    if (kind == "typeI" || kind == "typei")
      m = SpectralModel::type_i(H1, H2, c);
    else if (kind == "typeII" || kind == "typeii")
      m = SpectralModel::type_ii(d1, d2);
    else if (kind == "lavancier")
      m = SpectralModel::lavancier(theta1, theta2, d);
    else
      throw ConfigError("unknown spectral kind '" + kind + "'");
    m.validate();
    return m;
  }
};

struct WalkArgs {
  std::string model = "3n";
  double alpha = 2.0, beta = 0.3;
  void add(Registry& r, CLI::App* sub, bool with_alpha = true) {
    r.opt(sub, "--model", model, "3n | 4n");
    if (with_alpha) r.opt(sub, "--alpha", alpha, "stability index in (0,2]");
    r.opt(sub, "--beta", beta, "mixing exponent");
  }
  Walk walk() const {
    try {
      return parse_walk(model);
    } catch (const std::exception&) {
      throw ConfigError("unknown walk model '" + model + "'");
    }
  }
  StableLimitSpec spec(double gamma) const {
    StableLimitSpec s;
    s.model = WalkModel::of(walk());
    s.alpha = alpha;
    s.mixing = MixingLaw::standard(beta);
    s.gamma = gamma;
    s.validate();
    return s;
  }
};

// ---------- output helpers ----------

std::string fmt(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
 public:
  Csv(const fs::path& p, const std::string& header) : f_(p) {
    if (!f_) throw ResourceError("cannot write " + p.string());
    f_ << header << '\n';
  }
  template <class... A>
  void row(const A&... a) {
    bool first = true;
    ((f_ << (first ? "" : ",") << cell(a), first = false), ...);
    f_ << '\n';
  }

 private:
  static std::string cell(double v) { return fmt(v); }
  static std::string cell(long long v) { return std::to_string(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }
  std::ofstream f_;
};

void write_json(const fs::path& p, const json& j) {
  std::ofstream f(p);
  if (!f) throw ResourceError("cannot write " + p.string());
  f << j.dump(2) << '\n';
}

void require(bool ok, const std::string& what) {
  if (!ok) throw CheckFailed(what);
}

double last(const std::vector<double>& v) { return v.empty() ? std::numeric_limits<double>::quiet_NaN() : v.back(); }

bool non_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1]) return false;
  return true;
}
bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------- the application ----------

struct Cli {
  CLI::App app{"Anisotropic long-range dependence toolkit", "alrd"};
  Registry reg;
  Globals g;
  std::string config_file;
  std::map<CLI::App*, std::function<void()>> actions;
  std::string summary;

  // green
  std::string g_model = "3n", g_backend = "series";
  double g_a = 0.9;
  long long g_t = 1, g_s = 1;
  int g_radius = 8;
  double gl_t = 1, gl_s = 1, gl_z = 1;
  std::vector<double> gl_lambdas{100, 400, 1600, 6400};
  // spectra
  SpectralArgs sv_model;
  std::vector<long long> sv_ns{64, 256, 1024, 4096};
  std::vector<double> sv_gammas{0.5, 1, 2};
  std::vector<double> sk_ds{0.1, 0.25, 0.4};
  SpectralArgs sd_model;
  int sd_grid = 64;
  // limits
  WalkArgs jg;
  double jg_gamma = std::numeric_limits<double>::quiet_NaN();
  std::vector<long long> jg_ns{16, 32, 64, 128};
  std::string jg_method = "auto";
  bool jg_matched = false;
  WalkArgs ht;
  std::vector<double> ht_gammas{0.5, 1, 2};
  // cov
  WalkArgs ca{"4n", 2.0, 0.3};
  double ca_t = 1, ca_s = 1;
  std::vector<double> ca_lambdas{8, 16, 32};
  // sim
  SpectralArgs sg_model;
  int sg_w = 64, sg_h = 64, sg_refine = 4, sg_count = 1;
  std::string sg_method = "fft", sg_format = "csv";
  WalkArgs sa;
  long long sa_N = 100;
  int sa_w = 64, sa_h = 64, sa_count = 1;
  std::string sa_format = "csv";
  // estimate
  std::vector<std::string> eh_inputs;
  SpectralArgs eh_model;
  bool eh_white = false;
  int eh_fields = 0, eh_w = 512, eh_h = 512, eh_refine = 2;
  double eh_gamma = 1.0;
  std::vector<long long> eh_ladder;
  double eh_expect = std::numeric_limits<double>::quiet_NaN();
  // report
  std::string rc_model = "typeII";
  SpectralArgs rc_spec;
  WalkArgs rc_walk;
  std::vector<double> rc_gammas{0.25, 0.5, 1, 2};
  int rc_fields = 0, rc_w = 512, rc_h = 512, rc_refine = 2;
  double rc_ci_z = 3.0;
  std::string rc_expect;
  // rerun
  std::string rr_manifest;

  CLI::App* rerun_cmd = nullptr;

  Cli() {
    app.fallthrough();
    app.require_subcommand(1);
    app.set_version_flag("--version", ALRD_VERSION);
    app.set_config("--config", "", "INI file with one section per subcommand, e.g. [green.limit]");
    reg.opt(&app, "--seed", g.seed, "master seed");
    reg.opt(&app, "--out", g.out, "output directory");
    reg.flag(&app, "--check", g.check, "exit 5 when the acceptance threshold is not met");
    reg.opt(&app, "--tol", g.tol, "override the check tolerance");
    reg.opt(&app, "--threads", g.threads, "worker threads for simulation (0: all cores)");
    build_green();
    build_spectra();
    build_limits();
    build_cov();
    build_sim();
    build_estimate();
    build_report();
    rerun_cmd = app.add_subcommand("rerun", "repeat a run from its manifest.json");
    rerun_cmd->add_option("manifest", rr_manifest, "manifest path")->required();
  }

  CLI::App* group(const std::string& name, const std::string& desc) {
    CLI::App* s = app.add_subcommand(name, desc);
    s->fallthrough();
    s->require_subcommand(1);
    return s;
  }
  CLI::App* leaf(CLI::App* parent, const std::string& name, const std::string& desc, std::function<void()> fn) {
    CLI::App* s = parent->add_subcommand(name, desc);
    s->fallthrough();
    actions[s] = std::move(fn);
    return s;
  }

  fs::path out_dir() const {
    fs::create_directories(g.out);
    return fs::path(g.out);
  }

  // ----- green -----
  void build_green() {
    CLI::App* gr = group("green", "lattice Green functions");
    CLI::App* ev = leaf(gr, "eval", "Green function values on a grid", [this] { green_eval(); });
    reg.opt(ev, "--model", g_model, "3n | 4n");
    reg.opt(ev, "--a", g_a, "AR coefficient in (0,1)");
    reg.opt(ev, "--t", g_t, "point reported in the summary");
    reg.opt(ev, "--s", g_s, "point reported in the summary");
    reg.opt(ev, "--radius", g_radius, "dump |t|,|s| <= radius");
    reg.opt(ev, "--backend", g_backend, "series | fft | line");
    CLI::App* li = leaf(gr, "limit", "near-unit-root scaling ladder", [this] { green_limit(); });
    reg.opt(li, "--model", g_model, "3n | 4n");
    reg.opt(li, "--t", gl_t, "limit coordinate t");
    reg.opt(li, "--s", gl_s, "limit coordinate s");
    reg.opt(li, "--z", gl_z, "limit coordinate z");
    reg.opt(li, "--lambdas", gl_lambdas, "ladder of lambda values");
  }

  WalkModel walk_of(const std::string& s) const {
    try {
      return WalkModel::of(parse_walk(s));
    } catch (const std::exception&) {
      throw ConfigError("unknown walk model '" + s + "'");
    }
  }

  void green_eval() {
    GreenKernel k;
    k.model = walk_of(g_model);
    k.a = g_a;
    k.validate();
    if (g_radius < 0) throw ConfigError("--radius must be non-negative");
    const int R = g_radius;
    std::vector<double> vals;
    GreenGrid grid;
    bool have_grid = false;
    if (g_backend == "fft") {
      int hw = 1;
      while (hw < R) hw *= 2;
      k.backend = GreenBackend::FftInversion;
      grid = green_fft(k, hw);
      have_grid = true;
    } else if (g_backend == "series") {
      k.backend = GreenBackend::Series;
    } else if (g_backend == "line") {
      k.backend = GreenBackend::LineIntegral;
    } else {
      throw ConfigError("unknown backend '" + g_backend + "'");
    }
    auto value = [&](long long t, long long s) {
      if (have_grid) return grid.at(int(t), int(s));
      return k.backend == GreenBackend::Series ? green_series(k, t, s).value : green_line(k, t, s).value;
    };
    Csv csv(out_dir() / "green_eval.csv", "t,s,value");
    for (int t = -R; t <= R; ++t)
      for (int s = -R; s <= R; ++s) csv.row(t, s, value(t, s));
    const double v = value(g_t, g_s);
    std::ostringstream os;
    os << "green eval " << k.model.name() << " a=" << g_a << " g(" << g_t << "," << g_s << ")=" << fmt(v) << " ["
       << g_backend << "]";
    if (g.check) {
      // series vs FFT inversion on the grid, and the total mass of the periodic grid
      int hw = 1;
      while (hw < R) hw *= 2;
      GreenKernel kf = k;
      kf.backend = GreenBackend::FftInversion;
      const GreenGrid fg = green_fft(kf, hw);
      GreenKernel ks = k;
      ks.backend = GreenBackend::Series;
      double maxdiff = 0;
      for (int t = -R; t <= R; ++t)
        for (int s = -R; s <= R; ++s)
          maxdiff = std::max(maxdiff, std::fabs(fg.at(t, s) - green_series(ks, t, s).value));
      const double mass_err = std::fabs(fg.total() * (1 - g_a) - 1.0);
      os << " max|series-fft|=" << fmt(maxdiff) << " mass_rel_err=" << fmt(mass_err);
      summary = os.str();
      require(maxdiff <= g.tol_or(1e-8), "series and FFT backends differ by " + fmt(maxdiff));
      require(mass_err <= 1e-6, "grid mass misses 1/(1-a) by " + fmt(mass_err));
    }
    summary = os.str();
  }

  void green_limit() {
    const WalkModel m = walk_of(g_model);
    const auto rows = scaling_limit_probe(m, gl_t, gl_s, gl_z, gl_lambdas);
    Csv csv(out_dir() / "green_limit.csv", "lambda,rescaled_green,limit_kernel,rel_err,backend");
    std::vector<double> errs;
    for (const auto& r : rows) {
      csv.row(r.lambda, r.rescaled_green, r.limit_kernel, r.rel_err, r.backend);
      errs.push_back(r.rel_err);
    }
    std::ostringstream os;
    os << "green limit " << m.name() << " (t,s,z)=(" << gl_t << "," << gl_s << "," << gl_z << ") rel_err:";
    for (double e : errs) os << ' ' << fmt(e);
    summary = os.str();
    if (g.check) {
      require(strictly_decreasing(errs), "error ladder is not strictly decreasing");
      require(!errs.empty() && errs.back() < g.tol_or(0.05), "final relative error " + fmt(last(errs)));
    }
  }

  // ----- spectra -----
  void build_spectra() {
    CLI::App* sp = group("spectra", "spectral densities and partial-sum variances");
    CLI::App* va = leaf(sp, "var", "partial-sum variance ladder", [this] { spectra_var(); });
    sv_model.add(reg, va);
    reg.opt(va, "--ns", sv_ns, "n values");
    reg.opt(va, "--gammas", sv_gammas, "gamma values");
    CLI::App* ka = leaf(sp, "kappa", "kappa^2(d), closed form vs integral", [this] { spectra_kappa(); });
    reg.opt(ka, "--ds", sk_ds, "d values in (0,1/2)");
    CLI::App* de = leaf(sp, "density", "density on a frequency grid", [this] { spectra_density(); });
    sd_model.add(reg, de);
    reg.opt(de, "--grid", sd_grid, "points per axis on (-pi,pi)");
  }

  void spectra_var() {
    const SpectralModel m = sv_model.model();
    if (sv_ns.empty() || sv_gammas.empty()) throw ConfigError("--ns and --gammas must be non-empty");
    Csv csv(out_dir() / "spectra_var.csv", "n,gamma,raw_variance,normalized");
    json laws = json::array();
    std::ostringstream os;
    os << "spectra var " << m.name();
    std::vector<std::string> fails;
    for (double gm : sv_gammas) {
      const ScalingLaw law = H_of_gamma(m, gm);
      const double lim = limit_variance(m, gm, 1, 1);
      double last = NAN;
      for (long long n : sv_ns) {
        const double raw = variance_partial_sum(m, n, gm);
        last = raw * std::pow(double(n), -2 * law.H);
        csv.row(n, gm, raw, last);
      }
      const double rel = std::fabs(last / lim - 1);
      laws.push_back({{"gamma", gm}, {"H", law.H}, {"regime", regime_name(law.regime)}, {"limit_variance", lim},
                      {"n_max", sv_ns.back()}, {"normalized_at_n_max", last}, {"rel_err", rel}});
      os << " | gamma=" << gm << " H=" << law.H << " rel_err=" << fmt(rel);
      if (rel > g.tol_or(0.02)) fails.push_back("gamma=" + fmt(gm) + " rel_err=" + fmt(rel));
    }
    write_json(out_dir() / "spectra_var.json", {{"model", m.name()}, {"laws", laws}});
    summary = os.str();
    if (g.check && !fails.empty()) throw CheckFailed("normalized variance off the limit: " + fails.front());
  }

  void spectra_kappa() {
    Csv csv(out_dir() / "spectra_kappa.csv", "d,closed_form,integral,rel_err");
    double worst = 0;
    for (double d : sk_ds) {
      const double a = kappa_sq(d), b = kappa_sq_integral(d);
      const double rel = std::fabs(a / b - 1);
      worst = std::max(worst, rel);
      csv.row(d, a, b, rel);
    }
    summary = "spectra kappa max rel_err=" + fmt(worst);
    if (g.check) require(worst <= g.tol_or(1e-6), "closed form vs integral rel_err " + fmt(worst));
  }

  void spectra_density() {
    const SpectralModel m = sd_model.model();
    if (sd_grid < 2) throw ConfigError("--grid must be at least 2");
    Csv csv(out_dir() / "spectra_density.csv", "x,y,f");
    const double h = 2 * M_PI / sd_grid;
    for (int i = 0; i < sd_grid; ++i)
      for (int j = 0; j < sd_grid; ++j) {
        const double x = -M_PI + (i + 0.5) * h, y = -M_PI + (j + 0.5) * h;
        csv.row(x, y, density(m, x, y));
      }
    summary = "spectra density " + m.name() + " grid=" + std::to_string(sd_grid);
  }

  // ----- limits -----
  void build_limits() {
    CLI::App* li = group("limits", "stable scaling limits");
    CLI::App* jgc = leaf(li, "jgamma", "J_gamma and the J_n ladder", [this] { limits_jgamma(); });
    jg.add(reg, jgc);
    reg.opt(jgc, "--gamma", jg_gamma, "gamma (default: the walk's gamma0)");
    reg.opt(jgc, "--ns", jg_ns, "n ladder");
    reg.opt(jgc, "--method", jg_method, "auto | parseval | lattice");
    reg.flag(jgc, "--matched", jg_matched, "also report gaps against J_gamma(1, m/n^gamma)");
    CLI::App* htc = leaf(li, "htable", "H(gamma) table", [this] { limits_htable(); });
    ht.add(reg, htc);
    reg.opt(htc, "--gammas", ht_gammas, "gamma values");
  }

  void limits_jgamma() {
    StableLimitSpec probe = jg.spec(0.5);
    const double gm = std::isnan(jg_gamma) ? probe.gamma0() : jg_gamma;
    const StableLimitSpec sp = jg.spec(gm);
    JnMethod meth;
    if (jg_method == "auto") meth = JnMethod::Auto;
    else if (jg_method == "parseval") meth = JnMethod::Parseval;
    else if (jg_method == "lattice") meth = JnMethod::Lattice;
    else throw ConfigError("unknown --method '" + jg_method + "'");
    const ScalingLaw law = H_table(sp.model.variant, sp.alpha, sp.mixing.beta, gm);
    const double J = J_gamma(sp, 1, 1);
    json jn = json::array();
    Csv csv(out_dir() / "limits_jgamma.csv", jg_matched ? "n,value,rel_gap,matched_gap" : "n,value,rel_gap");
    std::vector<double> gaps;
    for (long long n : jg_ns) {
      const double v = J_n_gamma(sp, n, meth);
      const double gap = std::fabs(v / J - 1);
      gaps.push_back(gap);
      json row = {{"n", n}, {"value", v}, {"rel_gap", gap}};
      if (jg_matched) {
        const double y = double(side_length(n, gm, 1.0)) / std::pow(double(n), gm);
        const double mg = std::fabs(v / J_gamma(sp, 1, y) - 1);
        row["matched_gap"] = mg;
        csv.row(n, v, gap, mg);
      } else {
        csv.row(n, v, gap);
      }
      jn.push_back(row);
    }
    write_json(out_dir() / "limits_jgamma.json", {{"model", sp.model.name()},
                                                  {"alpha", sp.alpha},
                                                  {"beta", sp.mixing.beta},
                                                  {"gamma", gm},
                                                  {"H", law.H},
                                                  {"J_gamma", J},
                                                  {"J_n", jn}});
    std::ostringstream os;
    os << "limits jgamma " << sp.model.name() << " alpha=" << sp.alpha << " beta=" << sp.mixing.beta
       << " gamma=" << gm << " J_gamma=" << fmt(J) << " gaps:";
    for (double x : gaps) os << ' ' << fmt(x);
    summary = os.str();
    if (g.check) {
      require(!gaps.empty() && gaps.back() <= g.tol_or(0.10), "final gap " + fmt(last(gaps)));
      require(non_increasing(gaps), "gap is not non-increasing in n");
    }
  }

  void limits_htable() {
    const Walk w = ht.walk();
    Csv csv(out_dir() / "limits_htable.csv", "gamma,H,regime");
    json rows = json::array();
    std::ostringstream os;
    os << "limits htable " << ht.model << " alpha=" << ht.alpha << " beta=" << ht.beta << ":";
    for (double gm : ht_gammas) {
      const ScalingLaw law = H_table(w, ht.alpha, ht.beta, gm);
      csv.row(gm, law.H, regime_name(law.regime));
      rows.push_back({{"gamma", gm}, {"H", law.H}, {"regime", regime_name(law.regime)}});
      os << " H(" << gm << ")=" << law.H;
    }
    write_json(out_dir() / "limits_htable.json",
               {{"model", ht.model}, {"alpha", ht.alpha}, {"beta", ht.beta}, {"table", rows}});
    summary = os.str();
  }

  // ----- cov -----
  void build_cov() {
    CLI::App* co = group("cov", "covariance of the aggregated field");
    CLI::App* as = leaf(co, "asym", "covariance asymptotics ladder", [this] { cov_asym(); });
    ca.add(reg, as, false);
    reg.opt(as, "--t", ca_t, "lag direction t");
    reg.opt(as, "--s", ca_s, "lag direction s");
    reg.opt(as, "--lambdas", ca_lambdas, "lambda ladder");
  }

  void cov_asym() {
    const MixingLaw mix = MixingLaw::standard(ca.beta);
    mix.validate();
    const auto rows = cov_asymptotics(ca.walk(), mix, ca_t, ca_s, ca_lambdas);
    Csv csv(out_dir() / "cov_asym.csv", "lambda,t,s,cov,scaled,limit,rel_err");
    std::vector<double> errs;
    for (const auto& r : rows) {
      csv.row(r.lambda, r.t, r.s, r.cov, r.scaled, r.limit, r.rel_err);
      errs.push_back(r.rel_err);
    }
    std::ostringstream os;
    os << "cov asym " << ca.model << " beta=" << ca.beta << " rel_err:";
    for (double e : errs) os << ' ' << fmt(e);
    summary = os.str();
    if (g.check) {
      require(!errs.empty() && errs.back() <= g.tol_or(0.10), "final rel_err " + fmt(last(errs)));
      require(non_increasing(errs), "errors are not non-increasing");
    }
  }

  // ----- sim -----
  void build_sim() {
    CLI::App* si = group("sim", "field simulation");
    CLI::App* ga = leaf(si, "gauss", "Gaussian fields with a spectral density", [this] { sim_gauss(); });
    sg_model.add(reg, ga);
    reg.opt(ga, "--width", sg_w, "field width");
    reg.opt(ga, "--height", sg_h, "field height");
    reg.opt(ga, "--method", sg_method, "fft | cholesky");
    reg.opt(ga, "--refine", sg_refine, "frequency refinement of the FFT synthesis");
    reg.opt(ga, "--count", sg_count, "number of fields");
    reg.opt(ga, "--format", sg_format, "csv | bin");
    CLI::App* ag = leaf(si, "aggregate", "aggregated random-coefficient AR fields", [this] { sim_aggregate(); });
    sa.add(reg, ag);
    reg.opt(ag, "--N", sa_N, "number of aggregated components");
    reg.opt(ag, "--width", sa_w, "field width");
    reg.opt(ag, "--height", sa_h, "field height");
    reg.opt(ag, "--count", sa_count, "number of fields");
    reg.opt(ag, "--format", sa_format, "csv | bin");
  }

  static GaussMethod method_of(const std::string& s) {
    if (s == "fft") return GaussMethod::SpectralFFT;
    if (s == "cholesky") return GaussMethod::ExactCholesky;
    throw ConfigError("unknown --method '" + s + "'");
  }

  void save_fields(const std::vector<LatticeField>& fs_, const std::string& stem, const std::string& format) {
    if (format != "csv" && format != "bin") throw ConfigError("unknown --format '" + format + "'");
    const fs::path dir = out_dir();
    for (std::size_t i = 0; i < fs_.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof name, "%s_%04zu.%s", stem.c_str(), i, format.c_str());
      if (format == "csv") write_field_csv(dir / name, fs_[i]);
      else write_field_binary(dir / name, fs_[i]);
    }
  }

  std::vector<LatticeField> gauss_batch(const SpectralModel& m, int w, int h, GaussMethod meth, int refine, int count) {
    if (count < 0) throw ConfigError("field count must be non-negative");
    const GaussianFieldSampler smp(m, w, h, meth, refine);
    std::vector<LatticeField> out(count);
    parallel_for(count, g.threads, [&](std::size_t i) { out[i] = smp.sample(field_seed(g.seed, i)); });
    return out;
  }

  void sim_gauss() {
    const SpectralModel m = sg_model.model();
    const auto t0 = std::chrono::steady_clock::now();
    const auto fields = gauss_batch(m, sg_w, sg_h, method_of(sg_method), sg_refine, sg_count);
    save_fields(fields, "gauss", sg_format);
    std::ostringstream os;
    os << "sim gauss " << m.name() << " " << sg_count << " x " << sg_w << "x" << sg_h << " [" << sg_method << "] in "
       << fmt(seconds_since(t0)) << " s";
    summary = os.str();
  }

  void sim_aggregate() {
    const StableLimitSpec sp = sa.spec(0.5);
    if (sa_count < 0) throw ConfigError("--count must be non-negative");
    std::vector<LatticeField> out(sa_count);
    parallel_for(sa_count, g.threads,
                 [&](std::size_t i) { out[i] = aggregate_field(sp, sa_N, sa_w, sa_h, field_seed(g.seed, i)); });
    save_fields(out, "aggregate", sa_format);
    std::ostringstream os;
    os << "sim aggregate " << sp.model.name() << " alpha=" << sp.alpha << " beta=" << sp.mixing.beta << " N=" << sa_N
       << " " << sa_count << " x " << sa_w << "x" << sa_h;
    summary = os.str();
  }

  // ----- estimate -----
  void build_estimate() {
    CLI::App* es = group("estimate", "scaling exponent estimation");
    CLI::App* hu = leaf(es, "hurst", "H(gamma) from pooled partial-sum variances", [this] { estimate_hurst(); });
    reg.opt(hu, "--inputs", eh_inputs, "field files (.csv or .bin)");
    eh_model.add(reg, hu);
    reg.flag(hu, "--white", eh_white, "simulate white noise instead of the spectral model");
    reg.opt(hu, "--fields", eh_fields, "number of fields to simulate when no inputs are given");
    reg.opt(hu, "--width", eh_w, "simulated field width");
    reg.opt(hu, "--height", eh_h, "simulated field height");
    reg.opt(hu, "--refine", eh_refine, "frequency refinement of the FFT synthesis");
    reg.opt(hu, "--gamma", eh_gamma, "anisotropy exponent of the rectangles");
    reg.opt(hu, "--ladder", eh_ladder, "n ladder (default: chosen from the field size)");
    reg.opt(hu, "--expect", eh_expect, "reference H for --check (default: theory)");
  }

  static LatticeField load_field(const std::string& p) {
    const fs::path path(p);
    if (!fs::exists(path)) throw ConfigError("input not found: " + p);
    return path.extension() == ".bin" ? read_field_binary(path) : read_field_csv(path);
  }

  void estimate_hurst() {
    std::vector<LatticeField> fields;
    double theory = std::numeric_limits<double>::quiet_NaN();
    std::string source;
    const auto t0 = std::chrono::steady_clock::now();
    if (!eh_inputs.empty()) {
      for (const auto& p : eh_inputs) fields.push_back(load_field(p));
      source = "files";
    } else {
      if (eh_fields <= 0) throw ConfigError("give --inputs or --fields > 0");
      fields.resize(eh_fields);
      if (eh_white) {
        parallel_for(eh_fields, g.threads,
                     [&](std::size_t i) { fields[i] = white_noise_field(eh_w, eh_h, field_seed(g.seed, i)); });
        theory = 0.5 * (1 + eh_gamma);
        source = "white_noise";
      } else {
        const SpectralModel m = eh_model.model();
        fields = gauss_batch(m, eh_w, eh_h, GaussMethod::SpectralFFT, eh_refine, eh_fields);
        theory = H_of_gamma(m, eh_gamma).H;
        source = m.name();
      }
    }
    const auto lad = eh_ladder.empty() ? feasible_ladder(fields.front().width, fields.front().height, eh_gamma)
                                       : eh_ladder;
    if (lad.size() < 2) throw ConfigError("n ladder needs at least two points for these fields");
    const HEstimate e = estimate_H(fields, eh_gamma, lad);
    Csv csv(out_dir() / "estimate_hurst.csv", "n,m,count,var,log_var");
    for (const auto& r : e.rows) csv.row(r.n, r.m, r.count, r.var, r.log_var);
    const double expect = std::isnan(eh_expect) ? theory : eh_expect;
    json j = {{"source", source}, {"fields", fields.size()}, {"gamma", eh_gamma}, {"ladder", lad},
              {"H", e.H},         {"se", e.se},              {"seconds", seconds_since(t0)}};
    j["H_theory"] = std::isnan(expect) ? json(nullptr) : json(expect);
    write_json(out_dir() / "estimate_hurst.json", j);
    std::ostringstream os;
    os << "estimate hurst " << source << " " << fields.size() << " fields gamma=" << eh_gamma << " H=" << fmt(e.H)
       << " se=" << fmt(e.se);
    if (!std::isnan(expect)) os << " expected=" << expect;
    summary = os.str();
    if (g.check) {
      if (std::isnan(expect)) throw ConfigError("--check needs --expect for file inputs");
      require(std::fabs(e.H - expect) <= g.tol_or(0.05), "H=" + fmt(e.H) + " vs " + fmt(expect));
    }
  }

  // ----- report -----
  void build_report() {
    CLI::App* re = group("report", "reports");
    CLI::App* cl = leaf(re, "classify", "Type I / Type II classification", [this] { report_classify(); });
    reg.opt(cl, "--model", rc_model, "3n | 4n | typeI | typeII | lavancier");
    rc_spec.add(reg, cl);
    reg.opt(cl, "--alpha", rc_walk.alpha, "stability index (3n/4n)");
    reg.opt(cl, "--beta", rc_walk.beta, "mixing exponent (3n/4n)");
    reg.opt(cl, "--gammas", rc_gammas, "probed gamma ladder");
    reg.opt(cl, "--fields", rc_fields, "simulated Gaussian fields for H estimates (0: none)");
    reg.opt(cl, "--width", rc_w, "simulated field width");
    reg.opt(cl, "--height", rc_h, "simulated field height");
    reg.opt(cl, "--refine", rc_refine, "frequency refinement of the FFT synthesis");
    reg.opt(cl, "--ci-z", rc_ci_z, "CI half-width in standard errors");
    reg.opt(cl, "--expect", rc_expect, "expected verdict for --check");
  }

  void report_classify() {
    std::vector<LadderPoint> pts;
    std::string id;
    if (rc_gammas.empty()) throw ConfigError("--gammas must be non-empty");
    if (rc_model == "3n" || rc_model == "4n") {
      rc_walk.model = rc_model;
      const StableLimitSpec sp = rc_walk.spec(rc_gammas.front());
      pts = probe_ladder(sp, rc_gammas);
      std::ostringstream os;
      os << rc_model << "(alpha=" << sp.alpha << ",beta=" << sp.mixing.beta << ")";
      id = os.str();
      if (rc_fields > 0) throw ConfigError("--fields is only available for the Gaussian spectral models");
    } else {
      rc_spec.kind = rc_model;
      const SpectralModel m = rc_spec.model();
      pts = probe_ladder(m, rc_gammas);
      id = m.name();
      if (rc_fields > 0) {
        const auto fields = gauss_batch(m, rc_w, rc_h, GaussMethod::SpectralFFT, rc_refine, rc_fields);
        attach_estimates(pts, fields);
      }
    }
    const ClassificationReport r = classify(id, pts, rc_ci_z);
    write_json(out_dir() / "report_classify.json", r.to_json());
    std::ostringstream os;
    os << "report classify " << id << " verdict=" << verdict_name(r.verdict);
    if (std::isfinite(r.gamma0)) os << " gamma0=" << r.gamma0;
    os << " (" << r.reason << ")";
    summary = os.str();
    if (g.check) {
      if (rc_expect.empty()) throw ConfigError("--check needs --expect");
      require(r.verdict == parse_verdict(rc_expect), "verdict " + verdict_name(r.verdict) + ", expected " + rc_expect);
    }
  }

  // ----- manifest -----
  std::vector<CLI::App*> chain() {
    std::vector<CLI::App*> c;
    for (CLI::App* s = &app;;) {
      auto subs = s->get_subcommands();
      if (subs.empty()) break;
      s = subs.front();
      c.push_back(s);
    }
    return c;
  }

  json manifest(const std::vector<CLI::App*>& c) {
    json cmd = json::array(), opts = json::object(), glob = json::object();
    for (CLI::App* s : c) cmd.push_back(s->get_name());
    for (const auto& e : reg.entries) {
      if (e.sub == &app) glob[e.flag] = e.get();
      else if (!c.empty() && e.sub == c.back()) opts[e.flag] = e.get();
    }
    return {{"tool", "alrd"}, {"version", ALRD_VERSION}, {"command", cmd}, {"globals", glob}, {"options", opts}};
  }
};

std::string arg_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return fmt(v.get<double>());
  if (v.is_array()) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + arg_text(v[i]);
    return s;
  }
  return v.dump();
}

// argv reconstructed from a manifest; a later --out on the command line wins.
std::vector<std::string> manifest_args(const std::string& path, const std::vector<std::string>& extra) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read manifest " + path);
  json m;
  try {
    f >> m;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
  if (m.value("tool", "") != "alrd") throw ConfigError("not an alrd manifest: " + path);
  std::vector<std::string> args{"alrd"};
  for (const auto& c : m.at("command")) args.push_back(c.get<std::string>());
  std::set<std::string> overridden;
  for (const auto& e : extra)
    if (e.rfind("--", 0) == 0) overridden.insert(e.substr(0, e.find('=')));
  auto emit = [&](const json& obj) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      const json& v = it.value();
      if (overridden.count(it.key())) {
        continue;
      } else if (v.is_boolean()) {
        if (v.get<bool>()) args.push_back(it.key());
      } else if (v.is_array() && v.empty()) {
        continue;
      } else if (v.is_number_float() && std::isnan(v.get<double>())) {
        continue;
      } else if (!v.is_null()) {
        args.push_back(it.key());
        args.push_back(arg_text(v));
      }
    }
  };
  emit(m.at("globals"));
  emit(m.at("options"));
  for (const auto& e : extra) args.push_back(e);
  return args;
}

int run(std::vector<std::string> args) {
  // rerun: rebuild the original command line from the manifest and run it in a fresh parser
  if (args.size() >= 3 && args[1] == "rerun") {
    std::vector<std::string> extra(args.begin() + 3, args.end());
    try {
      return run(manifest_args(args[2], extra));
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kExitConfig;
    }
  }
  auto cli = std::make_unique<Cli>();
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    cli->app.parse(int(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return cli->app.exit(e);
  } catch (const CLI::ParseError& e) {
    cli->app.exit(e);
    return kExitConfig;
  }
  const auto c = cli->chain();
  if (c.empty() || !cli->actions.count(c.back())) {
    std::cerr << "config error: incomplete command\n";
    return kExitConfig;
  }
  try {
    write_json(cli->out_dir() / "manifest.json", cli->manifest(c));
    cli->actions[c.back()]();
    std::cout << cli->summary << '\n';
    return 0;
  } catch (const CheckFailed& e) {
    if (!cli->summary.empty()) std::cout << cli->summary << '\n';
    std::cerr << "check failed: " << e.what() << '\n';
    return kExitCheck;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const ResourceError& e) {
    std::cerr << "resource error: " << e.what() << '\n';
    return kExitResource;
  } catch (const std::bad_alloc&) {
    std::cerr << "resource error: out of memory\n";
    return kExitResource;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc)); }
