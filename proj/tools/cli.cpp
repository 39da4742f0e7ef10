#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hurstsense/density.hpp"
#include "hurstsense/fbm.hpp"
#include "hurstsense/hitting.hpp"
#include "hurstsense/pde.hpp"
#include "hurstsense/sde.hpp"
#include "hurstsense/sensitivity.hpp"

namespace fs = std::filesystem;
using namespace hurstsense;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    s += fmt(xs[i]);
  }
  return s;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

using Cfg = std::map<std::string, std::string>;

Cfg load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  Cfg cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key=value, got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": empty key");
    cfg[key] = val;
  }
  return cfg;
}

std::vector<double> parse_list(const std::string& s, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw std::runtime_error("config key '" + key + "': bad number '" +
                               item + "'");
    }
  }
  if (out.empty())
    throw std::runtime_error("config key '" + key + "': empty list");
  return out;
}

// Precedence: built-in default < config file < command line. Each bound
// option records a fixup that pulls the config value only when the flag was
// not given explicitly.
struct Binder {
  CLI::App* cmd;
  std::vector<std::function<void(const Cfg&)>> fixups;
  std::vector<std::function<std::pair<std::string, std::string>()>> echo;

  template <typename T>
  void number(const std::string& flag, const std::string& key, T& var,
              const std::string& desc) {
    auto* o = cmd->add_option(flag, var, desc);
    fixups.push_back([o, key, &var](const Cfg& cfg) {
      auto it = cfg.find(key);
      if (o->count() == 0 && it != cfg.end()) {
        try {
          var = static_cast<T>(std::stod(it->second));
        } catch (const std::exception&) {
          throw std::runtime_error("config key '" + key + "': bad number '" +
                                   it->second + "'");
        }
      }
    });
    echo.push_back([key, &var] {
      return std::make_pair(key, fmt(static_cast<double>(var)));
    });
  }

  void text(const std::string& flag, const std::string& key, std::string& var,
            const std::string& desc) {
    auto* o = cmd->add_option(flag, var, desc);
    fixups.push_back([o, key, &var](const Cfg& cfg) {
      auto it = cfg.find(key);
      if (o->count() == 0 && it != cfg.end()) var = it->second;
    });
    echo.push_back([key, &var] { return std::make_pair(key, var); });
  }

  void list(const std::string& flag, const std::string& key,
            std::vector<double>& var, const std::string& desc) {
    auto* o = cmd->add_option(flag, var, desc)->delimiter(',');
    fixups.push_back([o, key, &var](const Cfg& cfg) {
      auto it = cfg.find(key);
      if (o->count() == 0 && it != cfg.end())
        var = parse_list(it->second, key);
    });
    echo.push_back([key, &var] { return std::make_pair(key, join(var)); });
  }

  void toggle(const std::string& flag, const std::string& key, bool& var,
              const std::string& desc) {
    auto* o = cmd->add_flag(flag, var, desc);
    fixups.push_back([o, key, &var](const Cfg& cfg) {
      auto it = cfg.find(key);
      if (o->count() == 0 && it != cfg.end()) {
        const std::string& v = it->second;
        if (v == "1" || v == "true")
          var = true;
        else if (v == "0" || v == "false")
          var = false;
        else
          throw std::runtime_error("config key '" + key +
                                   "': expected true/false, got '" + v + "'");
      }
    });
    echo.push_back(
        [key, &var] { return std::make_pair(key, var ? "true" : "false"); });
  }

  void apply(const Cfg& cfg) {
    for (auto& f : fixups) f(cfg);
  }
};

struct Common {
  std::string config_path;
  std::string out = "hurstsense-out";
  std::uint64_t seed = 42;
  long threads = 0; // 0: HURSTSENSE_THREADS, then OpenMP default
};

void bind_common(Binder& b, Common& c) {
  b.text("--config", "config", c.config_path, "key=value config file");
  b.text("--out", "out", c.out, "output directory");
  b.number("--seed", "seed", c.seed, "master seed");
  b.number("--threads", "threads", c.threads, "OpenMP thread count");
}

void setup_threads(long threads) {
  if (threads == 0)
    if (const char* env = std::getenv("HURSTSENSE_THREADS"))
      threads = std::strtol(env, nullptr, 10);
  if (threads > 0) omp_set_num_threads(static_cast<int>(threads));
}

ScalarFn phi_from_name(const std::string& name) {
  if (name == "x") return [](double x) { return x; };
  if (name == "x2") return [](double x) { return x * x; };
  if (name == "x3") return [](double x) { return x * x * x; };
  if (name == "cos") return [](double x) { return std::cos(x); };
  if (name == "sin") return [](double x) { return std::sin(x); };
  throw std::runtime_error("unknown phi '" + name +
                           "' (expected x, x2, x3, cos, sin)");
}

class Run {
public:
  Run(const Common& common, const std::string& experiment, Binder& binder)
      : common_(common),
        experiment_(experiment),
        binder_(binder),
        start_(std::chrono::steady_clock::now()) {
    fs::create_directories(common.out);
  }

  std::ofstream open_csv(const std::string& name, const std::string& header) {
    fs::path p = fs::path(common_.out) / name;
    std::ofstream out(p, std::ios::binary); // fixed newlines on any platform
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << header << "\n";
    files_.push_back(name);
    return out;
  }

  // config_echo.txt re-runs the experiment exactly: every resolved knob.
  void finish() {
    {
      std::ofstream echo(fs::path(common_.out) / "config_echo.txt",
                         std::ios::binary);
      echo << "experiment=" << experiment_ << "\n";
      for (auto& e : binder_.echo) {
        auto [k, v] = e();
        if (k == "config") continue; // resolved settings replace the file
        echo << k << "=" << v << "\n";
      }
    }
    double wall = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start_)
                      .count();
    std::ofstream man(fs::path(common_.out) / "manifest.txt",
                      std::ios::binary);
    man << "experiment=" << experiment_ << "\n"
        << "version=" << kVersion << "\n"
        << "seed=" << common_.seed << "\n"
        << "wall_time_s=" << fmt(wall) << "\n";
    for (const auto& f : files_) man << "file=" << f << "\n";
  }

private:
  const Common& common_;
  std::string experiment_;
  Binder& binder_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> files_;
};

struct Opts {
  Common common;
  std::string model = "pure-fbm";
  std::string phi = "cos";
  std::string sampler = "circulant";
  double x0 = 0.0;
  double t = 1.0;
  double T_max = 50.0;
  double threshold = 1.0;
  double eta = -1.0;
  double eps = 0.05;
  double gamma = 0.25;
  double window_a = 0.0;
  double window_b = 1.0;
  double tau_power = 1.0;
  double domain_half = 12.0;
  long n_paths = 10000;
  long n_steps = 256;
  long n_bins = 80;
  long n_x = 960;
  long n_s = 400;
  bool bridge = false;
  std::vector<double> h_list{0.7};
  std::vector<double> lambda_list{1.0};
  std::vector<double> t_list{0.5, 1.0, 2.0};
  std::vector<double> x_list{2.0, 4.0, 6.0, 8.0};
};

int run_simulate(const Opts& o, Run& run) {
  TimeGrid grid(o.t, static_cast<int>(o.n_steps));
  ModelSpec model = model_preset(o.model, o.x0);
  if (o.h_list.size() != 1)
    throw std::runtime_error("simulate: exactly one H");
  HurstParam H(o.h_list[0]);
  auto csv = run.open_csv("simulate.csv", "path,t,value");
  auto emit = [&](long p, const FbmPath& driver) {
    SdePath x = euler_solve(model, driver);
    for (int k = 0; k <= grid.n_steps; ++k)
      csv << p << ',' << fmt(grid.node(k)) << ',' << fmt(x.values[k]) << "\n";
  };
  if (o.sampler == "cholesky") {
    CholeskySampler sampler(H, grid);
    for (long p = 0; p < o.n_paths; ++p)
      emit(p, sampler.sample(
                  SeedStream{o.common.seed, static_cast<std::uint64_t>(p)}));
  } else if (o.sampler == "circulant") {
    CirculantSampler sampler(H, grid);
    for (long p = 0; p < o.n_paths; ++p)
      emit(p, sampler.sample(
                  SeedStream{o.common.seed, static_cast<std::uint64_t>(p)}));
  } else {
    throw std::runtime_error("simulate: unknown sampler '" + o.sampler + "'");
  }
  return 0;
}

int run_fpt(const Opts& o, Run& run) {
  TimeGrid grid(o.T_max, static_cast<int>(o.n_steps));
  ModelSpec model = model_preset(o.model, o.x0);
  LaplaceConfig cfg;
  cfg.threshold = o.threshold;
  cfg.T_max = o.T_max;
  cfg.pure_fbm = o.model == "pure-fbm";
  cfg.tau_power = o.tau_power;
  auto csv = run.open_csv("fpt.csv",
                          "lambda,H,value,std_err,trunc_bound,n_paths,dt");
  for (double h : o.h_list) {
    LaplaceConfig c = cfg;
    c.bridge_correction = o.bridge && h == 0.5;
    auto ests = laplace_mc(model, HurstParam(h), o.lambda_list, o.n_paths,
                           grid, c, o.common.seed);
    for (const auto& e : ests)
      csv << fmt(e.lambda) << ',' << fmt(h) << ',' << fmt(e.value) << ','
          << fmt(e.std_err) << ',' << fmt(e.truncation_bound) << ','
          << o.n_paths << ',' << fmt(grid.dt()) << "\n";
  }
  return 0;
}

int run_marginal(const Opts& o, Run& run) {
  TimeGrid grid(o.t, static_cast<int>(o.n_steps));
  ModelSpec model = model_preset(o.model, o.x0);
  auto rep = marginal_gap(model, phi_from_name(o.phi), o.t, o.h_list,
                          o.n_paths, grid, o.common.seed);
  auto csv = run.open_csv("sensitivity_marginal.csv",
                          "H,gap,std_err,used_in_fit");
  for (const auto& p : rep.points)
    csv << fmt(p.h) << ',' << fmt(p.gap) << ',' << fmt(p.std_err) << ','
        << (p.used_in_fit ? 1 : 0) << "\n";
  auto sum = run.open_csv("sensitivity_marginal_summary.csv",
                          "slope,slope_ci_lo,slope_ci_hi");
  sum << fmt(rep.slope.slope) << ',' << fmt(rep.slope.slope_ci_lo) << ','
      << fmt(rep.slope.slope_ci_hi) << "\n";
  return rep.inconclusive ? 2 : 0;
}

int run_laplace(const Opts& o, Run& run) {
  TimeGrid grid(o.T_max, static_cast<int>(o.n_steps));
  ModelSpec model = model_preset(o.model, o.x0);
  EnvelopeConfig cfg;
  cfg.threshold = o.threshold;
  cfg.T_max = o.T_max;
  cfg.eta = o.eta;
  cfg.eps = o.eps;
  cfg.pure_fbm = o.model == "pure-fbm";
  auto rep = laplace_gap(model, o.lambda_list, o.h_list, o.n_paths, grid, cfg,
                         o.common.seed);
  auto csv = run.open_csv("sensitivity_laplace.csv",
                          "lambda,H,gap,std_err,used_in_fit");
  for (const auto& c : rep.cells)
    csv << fmt(c.lambda) << ',' << fmt(c.h) << ',' << fmt(c.gap) << ','
        << fmt(c.std_err) << ',' << (c.used_in_fit ? 1 : 0) << "\n";
  auto sum = run.open_csv("sensitivity_laplace_summary.csv",
                          "alpha_fit,hurst_exp_fit");
  sum << fmt(rep.alpha_fit.slope) << ',' << fmt(rep.hurst_fit.slope) << "\n";
  return rep.inconclusive ? 2 : 0;
}

int run_density(const Opts& o, Run& run) {
  if (o.h_list.size() != 1)
    throw std::runtime_error("density-bound: exactly one H");
  if (o.t_list.size() < 2)
    throw std::runtime_error("density-bound: need at least two times");
  HurstParam H(o.h_list[0]);
  ModelSpec model = model_preset(o.model, o.x0);
  double horizon = *std::max_element(o.t_list.begin(), o.t_list.end());
  TimeGrid grid(horizon, static_cast<int>(o.n_steps));
  std::vector<DensityEstimate> ests;
  for (double t : o.t_list)
    ests.push_back(estimate_density(model, H, t, o.n_paths, grid,
                                    o.common.seed,
                                    static_cast<int>(o.n_bins)));
  auto fit = fit_min_C(ests, H, model.sigma_sup, model.x0);
  auto csv = run.open_csv("density_bound.csv",
                          "t,bin_lo,bin_hi,density,std_err,bound,margin");
  for (const auto& e : ests)
    for (int b = 0; b < e.n_bins(); ++b) {
      double mid = 0.5 * (e.edges[b] + e.edges[b + 1]);
      double bound =
          gaussian_bound(mid, e.t, H, model.x0, model.sigma_sup, fit.C);
      csv << fmt(e.t) << ',' << fmt(e.edges[b]) << ',' << fmt(e.edges[b + 1])
          << ',' << fmt(e.density(b)) << ',' << fmt(e.std_err(b)) << ','
          << fmt(bound) << ',' << fmt(bound - e.density(b)) << "\n";
    }
  auto sum = run.open_csv("density_bound_summary.csv", "C_fit");
  sum << fmt(fit.C) << "\n";
  return std::isfinite(fit.C) ? 0 : 2;
}

int run_holder(const Opts& o, Run& run) {
  if (o.h_list.size() != 1)
    throw std::runtime_error("holder-tail: exactly one H");
  HurstParam H(o.h_list[0]);
  TimeGrid grid(o.window_b, static_cast<int>(o.n_steps));
  CirculantSampler sampler(H, grid);
  std::vector<double> norms(o.n_paths);
#pragma omp parallel for schedule(static)
  for (long p = 0; p < o.n_paths; ++p) {
    auto path =
        sampler.sample(SeedStream{o.common.seed, static_cast<std::uint64_t>(p)});
    norms[p] =
        holder_norm(path.values, grid, o.gamma, o.window_a, o.window_b).value;
  }
  auto csv = run.open_csv("holder_tail.csv", "x,empirical_exceedance,bound");
  for (double x : o.x_list) {
    long exceed = 0;
    for (double v : norms)
      if (v > x) ++exceed;
    csv << fmt(x) << ',' << fmt(static_cast<double>(exceed) / o.n_paths)
        << ','
        << fmt(holder_tail_bound(o.gamma, o.eps, H, o.window_a, o.window_b, x))
        << "\n";
  }
  return 0;
}

int run_decomposition(const Opts& o, Run& run) {
  ModelSpec model = model_preset(o.model, o.x0);
  TimeGrid grid(o.t, static_cast<int>(o.n_steps));
  ScalarFn phi = phi_from_name(o.phi);
  auto u = solve_backward_pde(model.b, phi, o.t, o.x0 - o.domain_half,
                              o.x0 + o.domain_half, static_cast<int>(o.n_x),
                              static_cast<int>(o.n_s));
  auto csv = run.open_csv("decomposition.csv",
                          "H,lhs,delta1,delta2,residual,combined_err");
  bool warned = false;
  for (double h : o.h_list) {
    auto rep = delta_decomposition(model, phi, o.t, HurstParam(h), o.n_paths,
                                   grid, u, o.common.seed);
    warned = warned || rep.clamp_warning;
    csv << fmt(rep.h) << ',' << fmt(rep.lhs) << ',' << fmt(rep.delta1) << ','
        << fmt(rep.delta2) << ',' << fmt(rep.residual) << ','
        << fmt(rep.combined_err) << "\n";
  }
  return warned ? 2 : 0;
}

int run_validate(const Opts& o) {
  int rejects = 0;
  for (double h : o.h_list)
    if (!(h >= 0.5 && h < 1.0)) {
      std::cout << "reject: H=" << fmt(h)
                << " outside the supported range [0.5, 1)\n";
      ++rejects;
    }
  try {
    ModelSpec model = model_preset(o.model, o.x0);
    if (model.sigma0 <= 0.0) {
      std::cout << "reject: ellipticity constant sigma0 must be positive\n";
      ++rejects;
    }
    if (o.x0 >= o.threshold)
      std::cout << "warning: x0 >= threshold; tau = 0 degenerate case\n";
  } catch (const std::exception& e) {
    std::cout << "reject: " << e.what() << "\n";
    ++rejects;
  }
  if (o.n_steps >= (1L << 20) && o.sampler == "cholesky")
    std::cout << "warning: cholesky factorization at n_steps=" << o.n_steps
              << " needs ~"
              << fmt(static_cast<double>(o.n_steps) * o.n_steps * 8.0 / 1e9)
              << " GB; consider sampler=circulant\n";
  double mem_gb = (o.sampler == "cholesky"
                       ? static_cast<double>(o.n_steps) * o.n_steps * 8.0
                       : o.n_steps * 32.0) /
                  1e9;
  std::cout << "estimate: per-sampler memory ~" << fmt(mem_gb) << " GB, "
            << o.n_paths << " paths x " << o.n_steps << " steps\n";
  std::cout << (rejects == 0 ? "ok: configuration accepted\n"
                             : "invalid: configuration rejected\n");
  return rejects == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"fBm-driven SDE sensitivity experiments"};
  app.require_subcommand(1);

  Opts o;
  struct Sub {
    Binder binder;
    std::function<int(const Opts&, Run&)> fn;
    std::string name;
  };
  std::vector<Sub> subs;
  auto add = [&](const std::string& name, const std::string& desc,
                 std::function<int(const Opts&, Run&)> fn) -> Binder& {
    subs.push_back(Sub{Binder{app.add_subcommand(name, desc)}, std::move(fn),
                       name});
    Binder& b = subs.back().binder;
    bind_common(b, o.common);
    b.text("--model", "model", o.model,
           "model preset: pure-fbm, ou, cos-drift");
    b.number("--x0", "x0", o.x0, "initial condition");
    b.list("--H", "H", o.h_list, "Hurst parameters (comma separated)");
    b.number("--n-paths", "n_paths", o.n_paths, "Monte Carlo paths");
    b.number("--n-steps", "n_steps", o.n_steps, "time steps");
    return b;
  };

  {
    auto& b = add("simulate", "sample SDE paths", run_simulate);
    b.number("--t", "t", o.t, "horizon");
    b.text("--sampler", "sampler", o.sampler, "circulant or cholesky");
  }
  {
    auto& b = add("fpt", "first-passage Laplace transform", run_fpt);
    b.list("--lambda", "lambda", o.lambda_list, "Laplace arguments");
    b.number("--T-max", "T_max", o.T_max, "censoring horizon");
    b.number("--threshold", "threshold", o.threshold, "barrier level");
    b.number("--tau-power", "tau_power", o.tau_power, "exponent p in tau^p");
    b.toggle("--bridge", "bridge", o.bridge,
             "Brownian-bridge sub-grid correction (H = 1/2 members)");
  }
  {
    auto& b = add("sensitivity-marginal", "marginal-law gaps vs H",
                  run_marginal);
    b.number("--t", "t", o.t, "observation time");
    b.text("--phi", "phi", o.phi, "test function: x, x2, x3, cos, sin");
  }
  {
    auto& b = add("sensitivity-laplace", "first-passage Laplace-gap envelope",
                  run_laplace);
    b.list("--lambda", "lambda", o.lambda_list, "Laplace arguments");
    b.number("--T-max", "T_max", o.T_max, "censoring horizon");
    b.number("--threshold", "threshold", o.threshold, "barrier level");
    b.number("--eta", "eta", o.eta, "truncation margin (< 0: default)");
    b.number("--eps", "eps", o.eps, "Holder slack");
  }
  {
    auto& b = add("density-bound", "Gaussian density envelope fit",
                  run_density);
    b.list("--t", "t", o.t_list, "observation times (need >= 2)");
    b.number("--n-bins", "n_bins", o.n_bins, "histogram bins");
  }
  {
    auto& b = add("holder-tail", "Holder-norm tail bound", run_holder);
    b.number("--gamma", "gamma", o.gamma, "Holder exponent");
    b.number("--eps", "eps", o.eps, "Holder slack");
    b.number("--a", "a", o.window_a, "window start");
    b.number("--b", "b", o.window_b, "window end");
    b.list("--x", "x", o.x_list, "exceedance levels");
  }
  {
    auto& b = add("decomposition", "Delta1 + Delta2 error decomposition",
                  run_decomposition);
    b.number("--t", "t", o.t, "observation time");
    b.text("--phi", "phi", o.phi, "test function: x, x2, x3, cos, sin");
    b.number("--domain-half", "domain_half", o.domain_half,
             "PDE domain half width");
    b.number("--n-x", "n_x", o.n_x, "PDE space cells");
    b.number("--n-s", "n_s", o.n_s, "PDE time cells");
  }
  {
    auto& b = add("validate", "check a configuration, no side effects",
                  [](const Opts&, Run&) { return 0; });
    b.number("--threshold", "threshold", o.threshold, "barrier level");
    b.text("--sampler", "sampler", o.sampler, "circulant or cholesky");
  }

  try {
    app.parse(argc, argv);
    for (auto& sub : subs) {
      if (!sub.binder.cmd->parsed()) continue;
      Cfg cfg;
      if (sub.binder.cmd->get_option("--config")->count() > 0)
        cfg = load_config(o.common.config_path);
      sub.binder.apply(cfg);
      setup_threads(o.common.threads);
      if (sub.name == "validate") return run_validate(o);
      Run run(o.common, sub.name, sub.binder);
      int rc = sub.fn(o, run);
      run.finish();
      return rc;
    }
    return 1; // unreachable: a subcommand is required
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
