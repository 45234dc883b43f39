#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <titerlab/titerlab.hpp>

namespace fs = std::filesystem;
using namespace titerlab;

namespace {

const ModelSpec& need_model(const RunConfig& cfg) {
  if (!cfg.model)
    throw std::invalid_argument("this command needs a 'model' section in the config");
  return *cfg.model;
}

fs::path ensure_outdir(const RunConfig& cfg) {
  fs::path dir(cfg.output.directory);
  fs::create_directories(dir);
  return dir;
}

std::string time_label(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

// One ensemble pass: checkpoint moments, jump counts, final-time histogram,
// and the stored skeletons, all from the same derived streams so the
// artifacts describe the same realization.
int run_simulate(const RunConfig& cfg) {
  const ModelSpec& model = need_model(cfg);
  Grid grid(cfg.grid.x_max, cfg.grid.n_cells);
  const auto init = initial_distribution(cfg.initial);

  std::vector<double> times = cfg.sim.checkpoints;
  if (std::find(times.begin(), times.end(), cfg.sim.t_end) == times.end()) {
    times.push_back(cfg.sim.t_end);
    std::sort(times.begin(), times.end());
  }
  const double T = times.back();
  const std::size_t nt = times.size();
  const std::size_t hist_idx =
      std::size_t(std::find(times.begin(), times.end(), cfg.sim.t_end) - times.begin());

  const long N = cfg.sim.n_paths;
  const long n_store = std::min<long>(cfg.sim.n_store_paths, N);
  std::vector<double> sum(nt, 0.0), sum2(nt, 0.0);
  std::vector<long> counts(grid.n_cells(), 0);
  long out_count = 0;
  double jumps_total = 0.0;
  std::vector<TrajectoryPath> stored;
  stored.reserve(std::size_t(n_store));

  for (long p = 0; p < N; ++p) {
    RngStream rng = RngStream::derive(cfg.sim.seed, std::uint64_t(p));
    const double x0 = init.sample(rng);
    std::vector<JumpEvent> events;
    double t = 0.0, x = x0, x_hist = x0;
    std::size_t k = 0;
    long n_jumps = 0;
    for (;;) {
      const double gap = rng.exponential(model.lambda);
      const double t_next = t + gap;
      while (k < nt && times[k] < t_next) {
        const double v = model.flow.advance(x, times[k] - t);
        sum[k] += v;
        sum2[k] += v * v;
        if (k == hist_idx) x_hist = v;
        ++k;
      }
      if (t_next >= T) break;
      const double pre = model.flow.advance(x, gap);
      const double post = model.boost.apply(pre);
      if (p < n_store) events.push_back({t_next, pre, post});
      ++n_jumps;
      t = t_next;
      x = post;
    }
    while (k < nt) {
      const double v = model.flow.advance(x, times[k] - t);
      sum[k] += v;
      sum2[k] += v * v;
      if (k == hist_idx) x_hist = v;
      ++k;
    }
    const int c = grid.cell_of(x_hist);
    if (c >= grid.n_cells())
      ++out_count;
    else
      ++counts[c];
    jumps_total += double(n_jumps);
    if (p < n_store) stored.emplace_back(model.flow, x0, T, cfg.sim.seed, std::move(events));
  }

  std::vector<MomentPoint> moments(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    const double mean = sum[k] / double(N);
    const double var = std::max(0.0, sum2[k] / double(N) - mean * mean);
    moments[k] = {times[k], mean, std::sqrt(var / double(N))};
  }
  HistogramResult hist{DensityVector(grid), std::vector<double>(grid.n_cells(), 0.0)};
  for (int i = 0; i < grid.n_cells(); ++i) {
    const double p = double(counts[i]) / double(N);
    hist.density.values[i] = p / grid.dx();
    hist.std_error[i] = std::sqrt(p * (1.0 - p) / double(N)) / grid.dx();
  }
  hist.density.escaped = double(out_count) / double(N);

  const std::string meta = run_metadata(cfg.hash, cfg.sim.seed);
  const fs::path dir = ensure_outdir(cfg);
  if (cfg.output.csv) {
    write_paths_csv((dir / "paths.csv").string(), stored, meta);
    write_histogram_csv((dir / "histogram.csv").string(), hist, meta);
    write_moments_csv((dir / "moments.csv").string(), moments, meta);
  }

  std::printf("simulate: %ld paths of %s\n", N, model.describe().c_str());
  std::printf("mean jumps per path: %.6g\n", jumps_total / double(N));
  const auto& fin = moments[hist_idx];
  std::printf("state at t=%g: mean %.6g +- %.6g (se), escaped fraction %.6g\n", fin.t,
              fin.value, fin.std_error, hist.density.escaped);
  if (cfg.output.csv)
    std::printf("wrote %s, %s, %s\n", (dir / "paths.csv").c_str(),
                (dir / "histogram.csv").c_str(), (dir / "moments.csv").c_str());
  return 0;
}

int run_evolve(const RunConfig& cfg) {
  const ModelSpec& model = need_model(cfg);
  Grid grid(cfg.grid.x_max, cfg.grid.n_cells);
  GeneratorMatrix A(model, grid, cfg.solver.cfl_safety);
  EvolveOptions eopts;
  eopts.mass_tol = cfg.solver.mass_tol;

  DensityVector f = initial_density(cfg.initial, grid);
  std::optional<DensityVector> f2;
  if (cfg.initial2) f2 = initial_density(*cfg.initial2, grid);

  const std::string meta = run_metadata(cfg.hash, cfg.sim.seed);
  const fs::path dir = ensure_outdir(cfg);
  const auto snapshot = [&](const DensityVector& d, const std::string& stem, double t) {
    if (cfg.output.csv)
      write_density_csv((dir / (stem + "_t" + time_label(t) + ".csv")).string(), d, meta);
  };

  snapshot(f, "density", 0.0);
  if (f2) snapshot(*f2, "density2", 0.0);
  std::printf("evolve: %s on [0, %g], %d cells\n", model.describe().c_str(), grid.x_max(),
              grid.n_cells());
  std::printf("t=0 mass=%.12g escaped=%.3g\n", f.mass(), f.escaped);

  std::vector<double> tv_times, tv_values;
  double t_prev = 0.0;
  for (double t : cfg.sim.checkpoints) {
    DensityVector prev = f;
    f = evolve(A, f, t - t_prev, eopts);
    double tv;
    if (f2) {
      *f2 = evolve(A, *f2, t - t_prev, eopts);
      tv = total_variation(f, *f2);
    } else {
      tv = total_variation(f, prev);
    }
    t_prev = t;
    snapshot(f, "density", t);
    if (f2) snapshot(*f2, "density2", t);
    tv_times.push_back(t);
    tv_values.push_back(tv);
    std::printf("t=%g mass=%.12g escaped=%.3g tv=%.6g\n", t, f.mass(), f.escaped, tv);
  }
  if (cfg.output.csv)
    write_series_csv((dir / "tv_series.csv").string(), "tv", tv_times, tv_values, meta);
  return 0;
}

int run_stationary(const RunConfig& cfg) {
  const ModelSpec& model = need_model(cfg);
  Grid grid(cfg.grid.x_max, cfg.grid.n_cells);
  GeneratorMatrix A(model, grid, cfg.solver.cfl_safety);
  const auto res = stationary_density(A, cfg.solver.stationary_residual,
                                      cfg.solver.max_iterations);
  if (!res.message.empty() && !res.converged && res.iterations == 0)
    throw std::runtime_error("stationary: " + res.message);

  const fs::path dir = ensure_outdir(cfg);
  const std::string meta = run_metadata(cfg.hash, cfg.sim.seed) +
                           " residual=" + render_num(res.residual) +
                           " converged=" + (res.converged ? "1" : "0");
  if (cfg.output.csv)
    write_density_csv((dir / "stationary.csv").string(), res.density, meta);

  std::printf("stationary: %s\n", model.describe().c_str());
  std::printf("residual %.3g after %d iterations, mass %.12g\n", res.residual,
              res.iterations, res.density.mass());
  if (!res.converged)
    std::fprintf(stderr,
                 "warning: residual tolerance not reached (consistent with a model that "
                 "has no stationary density)\n");
  if (!res.unique_ok)
    std::fprintf(stderr, "warning: a second start found a different vector; the "
                         "discretization looks degenerate\n");
  return 0;
}

int run_classify(const RunConfig& cfg) {
  const ModelSpec& model = need_model(cfg);
  const Verdict v = foguel_verdict(model, cfg.analysis);
  std::printf("model: %s\n", model.describe().c_str());
  std::printf("verdict: %s\n", to_string(v.stability));
  if (std::isfinite(v.gamma_witness))
    std::printf("gamma_witness: %.6g  c_gamma: %.6g  drift_coefficient: %.6g\n",
                v.gamma_witness, v.c_gamma, v.drift_coefficient);
  for (const auto& e : v.evidence)
    std::printf("  [%s] %s\n", e.source.c_str(), e.detail.c_str());

  if (cfg.output.json_out) {
    const fs::path dir = ensure_outdir(cfg);
    std::ofstream out(dir / "verdict.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot open verdict.json for writing");
    nlohmann::json jv = verdict_to_json(v, model.describe());
    jv["config_hash"] = cfg.hash;
    out << jv.dump(2) << "\n";
    std::printf("wrote %s\n", (dir / "verdict.json").c_str());
  }
  return 0;
}

int run_sweep(const RunConfig& cfg) {
  if (!cfg.sweep.present)
    throw std::invalid_argument("sweep needs a 'sweep' section in the config");
  const auto axis_values = [](const SweepAxis& ax) {
    if (ax.fixed) return std::vector<double>{ax.value};
    return detail::linspace(ax.lo, ax.hi, ax.steps);
  };
  const auto as = axis_values(cfg.sweep.a);
  const auto bs = axis_values(cfg.sweep.b);

  const fs::path dir = ensure_outdir(cfg);
  CsvWriter w((dir / "sweep.csv").string());
  w.comment(run_metadata(cfg.hash, cfg.sim.seed));
  w.header({"a", "b", "lambda", "verdict", "gamma_witness", "c_gamma"});
  for (double a : as)
    for (double b : bs) {
      const Verdict v = classify_power_law(a, b, cfg.sweep.lambda, cfg.analysis.classify_tol);
      w.line({render_num(a), render_num(b), render_num(cfg.sweep.lambda),
              to_string(v.stability), render_num(v.gamma_witness), render_num(v.c_gamma)});
    }
  std::printf("sweep: %zu points -> %s\n", as.size() * bs.size(),
              (dir / "sweep.csv").c_str());
  return 0;
}

int run_verify(const RunConfig& cfg, double jacobian_fault) {
  const ModelSpec& model = need_model(cfg);
  VerifyOptions opts;
  opts.seed = cfg.sim.seed;
  opts.jacobian_fault = jacobian_fault;
  const auto checks = run_verification(model, opts);

  bool all = true;
  for (const auto& c : checks) {
    all = all && c.passed;
    std::printf("[%s] %s: error=%.3g tolerance=%.3g (%s)\n", c.passed ? "pass" : "FAIL",
                c.name.c_str(), c.error, c.tolerance, c.detail.c_str());
  }
  if (cfg.output.csv) {
    const fs::path dir = ensure_outdir(cfg);
    CsvWriter w((dir / "verify.csv").string());
    w.comment(run_metadata(cfg.hash, cfg.sim.seed));
    w.header({"check", "passed", "error", "tolerance"});
    for (const auto& c : checks)
      w.line({c.name, c.passed ? "1" : "0", render_num(c.error), render_num(c.tolerance)});
  }
  std::printf(all ? "verification passed\n" : "verification FAILED\n");
  return all ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"titerlab: lab bench for a decay-and-boost jump process"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  double jacobian_fault = 0.0;

  const char* names[] = {"simulate", "evolve", "stationary", "classify", "verify", "sweep"};
  const char* blurbs[] = {
      "Monte Carlo ensemble: paths, checkpoint moments, final-time histogram",
      "density evolution under the discretized generator, snapshots at checkpoints",
      "stationary density by inverse power iteration",
      "combined analytic + drift + mass-audit long-run verdict",
      "internal consistency battery with measured errors",
      "phase-diagram sweep of the power-law classification"};
  for (int i = 0; i < 6; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], blurbs[i]);
    sub->add_option("-c,--config", config_path, "JSON run configuration")->required();
    sub->add_option("--set", sets, "override a config key, e.g. --set sim.seed=7");
    sub->allow_extras();
    if (std::string(names[i]) == "verify")
      sub->add_option("--inject-jacobian-fault", jacobian_fault,
                      "offset added to the Jacobian (failure-path test hook)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    nlohmann::json root = load_json_file(config_path);
    for (const auto& s : sets) apply_override(root, s);
    for (const auto& tok : sub->remaining()) {
      if (tok.rfind("--", 0) == 0 && tok.find('=') != std::string::npos)
        apply_override(root, tok.substr(2));
      else
        throw std::invalid_argument("unrecognized argument '" + tok + "'");
    }
    const RunConfig cfg = parse_config(root);

    const std::string name = sub->get_name();
    if (name == "simulate") return run_simulate(cfg);
    if (name == "evolve") return run_evolve(cfg);
    if (name == "stationary") return run_stationary(cfg);
    if (name == "classify") return run_classify(cfg);
    if (name == "verify") return run_verify(cfg, jacobian_fault);
    return run_sweep(cfg);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
