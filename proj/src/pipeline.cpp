#include "qpt/pipeline.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

namespace qpt {

namespace fs = std::filesystem;

namespace {

void check_keys(const Json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, std::string(where) + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) throw Error(ErrorCode::ConfigError, "unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("bad value for '") + key + "': " + e.what());
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path q(p);
  return q.is_absolute() || base.empty() ? q : base / q;
}

CMatrix channel_from_json(const Json& j, const fs::path& base, ChannelDims& dims) {
  check_keys(j, "simulation.channel", {"kind", "d", "p", "choi", "file"});
  const auto kind = get_or<std::string>(j, "kind", "");
  if (kind == "depolarizing" || kind == "identity") {
    const int d = get_or<int>(j, "d", 2);
    dims = ChannelDims(d, d);
    return kind == "identity" ? identity_choi(d) : depolarizing(get_or<double>(j, "p", 1.0), d);
  }
  if (kind == "choi") {
    const Json c = j.contains("file") ? read_json(resolve(base, j.at("file").get<std::string>())) : j.at("choi");
    CMatrix m = choi_from_json(c, &dims);
    require_choi(m, dims, 1e-8);
    return m;
  }
  throw Error(ErrorCode::ConfigError, "simulation.channel.kind must be depolarizing, identity or choi");
}

SimulationSpec simulation_from_json(const Json& j, const fs::path& base) {
  check_keys(j, "simulation",
             {"channel", "scheme", "settings", "n_qubits", "sigma_a", "shots_per_setting", "seed"});
  SimulationSpec s;
  if (!j.contains("channel")) throw Error(ErrorCode::ConfigError, "simulation.channel is required");
  s.true_choi = channel_from_json(j.at("channel"), base, s.dims);
  s.scheme = scheme_from_string(get_or<std::string>(j, "scheme", "ancilla-assisted"));
  try {
    s.settings = settings_kind_from_string(get_or<std::string>(j, "settings", "pauli-qubit"));
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  s.n_qubits = get_or<int>(j, "n_qubits", 1);
  if (j.contains("sigma_a")) s.sigma_a = matrix_from_json(j.at("sigma_a"));
  s.shots_per_setting = get_or<std::int64_t>(j, "shots_per_setting", 0);
  s.seed = get_or<std::uint64_t>(j, "seed", 0);
  if (s.shots_per_setting < 0) throw Error(ErrorCode::ConfigError, "shots_per_setting must be >= 0");
  return s;
}

WalkerConfig walker_from_json(const Json& j, int& chains) {
  check_keys(j, "walker",
             {"method", "jump", "step_size", "n_inner_iter", "n_therm_sweeps", "sweep_size", "n_samples", "seed",
              "target_acceptance", "tune", "max_step", "start", "chains"});
  WalkerConfig w;
  w.method = walk_method_from_string(get_or<std::string>(j, "method", "channel"));
  const std::string default_jump = w.method == WalkMethod::State ? "sphere-gaussian" : "elementary-rotation";
  w.jump = jump_kind_from_string(get_or<std::string>(j, "jump", default_jump));
  w.step_size = get_or<double>(j, "step_size", w.step_size);
  w.n_inner_iter = get_or<int>(j, "n_inner_iter", w.n_inner_iter);
  w.n_therm_sweeps = get_or<int>(j, "n_therm_sweeps", w.n_therm_sweeps);
  w.sweep_size = get_or<int>(j, "sweep_size", w.sweep_size);
  w.n_samples = get_or<int>(j, "n_samples", w.n_samples);
  w.seed = get_or<std::uint64_t>(j, "seed", w.seed);
  w.target_acceptance = get_or<double>(j, "target_acceptance", w.target_acceptance);
  w.tune = get_or<bool>(j, "tune", w.tune);
  w.max_step = get_or<double>(j, "max_step", w.max_step);
  w.start = start_point_from_string(get_or<std::string>(j, "start", "identity"));
  chains = get_or<int>(j, "chains", 0);
  if (chains < 0) throw Error(ErrorCode::ConfigError, "walker.chains must be >= 0");
  try {
    w.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return w;
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + p.parent_path().string() + ": " + ec.message());
  }
  std::ofstream f(p);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  f << text;
  if (!f) throw Error(ErrorCode::IoError, "write failed for " + p.string());
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

}  // namespace

RunConfig parse_run_config(const Json& j, const fs::path& base_dir) {
  try {
    check_keys(j, "config",
               {"version", "dataset", "simulation", "histogram", "fit", "figure", "walker", "histogram_bins", "region",
                "alpha_sweep", "output", "description"});
    if (get_or<int>(j, "version", 0) != 1) throw Error(ErrorCode::ConfigError, "config version must be 1");
    RunConfig c;
    if (j.contains("dataset")) c.dataset = resolve(base_dir, j.at("dataset").get<std::string>());
    if (j.contains("simulation")) c.simulation = simulation_from_json(j.at("simulation"), base_dir);
    if (j.contains("histogram")) c.histogram = resolve(base_dir, j.at("histogram").get<std::string>());
    if (j.contains("fit")) c.fit = resolve(base_dir, j.at("fit").get<std::string>());
    if (j.contains("figure")) {
      const Json& f = j.at("figure");
      check_keys(f, "figure", {"kind", "reference"});
      c.figure.kind = figure_kind_from_string(get_or<std::string>(f, "kind", "diamond-distance"));
      if (f.contains("reference")) c.figure.reference = choi_from_json(f.at("reference"));
    }
    if (j.contains("walker")) c.walker = walker_from_json(j.at("walker"), c.chains);
    if (j.contains("histogram_bins")) {
      const Json& h = j.at("histogram_bins");
      check_keys(h, "histogram_bins", {"bins", "lo", "hi"});
      c.histogram_spec.bins = get_or<int>(h, "bins", 50);
      if (h.contains("lo")) c.histogram_spec.lo = h.at("lo").get<double>();
      if (h.contains("hi")) c.histogram_spec.hi = h.at("hi").get<double>();
      if (c.histogram_spec.bins < 1) throw Error(ErrorCode::ConfigError, "histogram_bins.bins must be >= 1");
    }
    if (j.contains("region")) {
      const Json& r = j.at("region");
      check_keys(r, "region", {"eps", "binom_mode", "paper_compat", "tail_model", "n", "d_a", "d_b"});
      c.region.eps = get_or<double>(r, "eps", 0.01);
      c.region.binom_mode = binom_mode_from_string(get_or<std::string>(r, "binom_mode", "exact"));
      c.region.paper_compat = get_or<bool>(r, "paper_compat", false);
      c.region.tail_model = fit_model_from_string(get_or<std::string>(r, "tail_model", "one"));
      if (r.contains("n")) c.region_n = r.at("n").get<std::int64_t>();
      if (r.contains("d_a") || r.contains("d_b")) {
        c.region_dims = ChannelDims(get_or<int>(r, "d_a", 2), get_or<int>(r, "d_b", get_or<int>(r, "d_a", 2)));
      }
      if (!(c.region.eps > 0 && c.region.eps < 1)) throw Error(ErrorCode::ConfigError, "region.eps must lie in (0, 1)");
    }
    if (j.contains("alpha_sweep")) c.alpha_sweep = j.at("alpha_sweep").get<std::vector<double>>();
    for (double a : c.alpha_sweep) {
      if (!(a > 0 && a <= 1)) throw Error(ErrorCode::ConfigError, "alpha_sweep values must lie in (0, 1]");
    }
    if (j.contains("output")) c.output = j.at("output").get<std::string>();
    if (c.walker.method == WalkMethod::State && c.simulation && c.simulation->scheme != Scheme::AncillaAssisted) {
      throw Error(ErrorCode::ConfigError, "the state method needs an ancilla-assisted scheme");
    }
    return c;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
}

RunConfig load_run_config(const fs::path& p) {
  const Json j = read_json(p);
  return parse_run_config(j, p.parent_path());
}

Dataset build_dataset(const RunConfig& cfg) {
  if (cfg.dataset) return read_dataset(*cfg.dataset);
  if (!cfg.simulation) throw Error(ErrorCode::ConfigError, "config needs a dataset path or a simulation");
  const SimulationSpec& s = *cfg.simulation;
  const Dataset templ = standard_settings(s.settings, s.scheme, s.n_qubits, s.sigma_a);
  if (!(templ.dims == s.dims)) throw Error(ErrorCode::ConfigError, "channel dimensions do not match the settings");
  Rng rng(s.seed);
  return simulate(s.true_choi, templ, s.shots_per_setting, rng);
}

int chain_count(const RunConfig& cfg) { return cfg.chains > 0 ? cfg.chains : std::max(1, omp_get_max_threads()); }

SampleOutcome sample_stage(const RunConfig& cfg, const Dataset& ds) {
  if (cfg.walker.method == WalkMethod::State && ds.scheme != Scheme::AncillaAssisted) {
    throw Error(ErrorCode::ConfigError, "the state method needs an ancilla-assisted dataset");
  }
  const int n = chain_count(cfg);
  SampleOutcome out;
  std::vector<std::exception_ptr> errs;
  out.chains = run_chains(ds, cfg.figure, cfg.walker, n, &errs);
  out.failures.resize(n);
  std::vector<ChainResult> good;
  for (int i = 0; i < n; ++i) {
    if (!errs[i]) {
      good.push_back(out.chains[i]);
      continue;
    }
    try {
      std::rethrow_exception(errs[i]);
    } catch (const std::exception& e) {
      out.failures[i] = e.what();
    }
  }
  if (good.empty()) std::rethrow_exception(errs.front());
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& c : good)
    for (double v : c.fom_samples) lo = std::min(lo, v), hi = std::max(hi, v);
  lo = cfg.histogram_spec.lo.value_or(lo);
  hi = cfg.histogram_spec.hi.value_or(hi);
  if (!(hi > lo)) hi = lo + 1e-6;
  out.histogram = make_histogram(good, cfg.histogram_spec.bins, lo, hi);
  return out;
}

FitOutcome fit_stage(const Histogram& h, const FigureSpec& figure) {
  const bool mirrored = figure.larger_better();
  FitOutcome f;
  f.one = fit_histogram(h, FitModel::One, mirrored);
  f.qeb = quantum_error_bars(f.one);
  try {
    f.two = fit_histogram(h, FitModel::Two, mirrored);
  } catch (const Error& e) {
    f.two_error = e.what();
  }
  return f;
}

ConfidenceReport region_stage(const FitParams& fp, const RunConfig& cfg, std::int64_t n, const ChannelDims& dims) {
  RegionParams rp;
  rp.n = n;
  rp.eps = cfg.region.eps;
  rp.d2ab = dims.d_choi() * dims.d_choi();
  rp.method = cfg.walker.method;
  rp.binom_mode = cfg.region.binom_mode;
  rp.paper_compat = cfg.region.paper_compat;
  return assemble_report(fp, rp, cfg.figure.kind, dims.d_a);
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorCode::BadParameter, "slope needs two or more points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += std::log(x[i]), my += std::log(y[i]);
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

void write_chain_csv(const fs::path& p, const ChainResult& c) {
  std::ostringstream os;
  os << "sample_index,fom_value,accepted_count_since_last\n";
  for (std::size_t i = 0; i < c.fom_samples.size(); ++i) {
    os << i << "," << format_double(c.fom_samples[i]) << "," << c.accepted_since_last[i] << "\n";
  }
  write_text(p, os.str());
}

void write_histogram_csv(const fs::path& p, const Histogram& h) {
  std::ostringstream os;
  os << "bin_lo,bin_hi,count,error,density\n";
  for (int i = 0; i < h.bins(); ++i) {
    os << format_double(h.lo + i * h.width()) << "," << format_double(h.lo + (i + 1) * h.width()) << ","
       << format_double(h.counts[i]) << "," << format_double(h.errors[i]) << "," << format_double(h.density(i))
       << "\n";
  }
  write_text(p, os.str());
}

Histogram read_histogram_csv(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + p.string());
  std::string line;
  if (!std::getline(f, line) || line.rfind("bin_lo,bin_hi,count,error", 0) != 0) {
    throw Error(ErrorCode::IoError, p.string() + " is not a histogram CSV");
  }
  Histogram h;
  std::vector<double> los, his;
  double total = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    double v[5];
    char comma;
    is >> v[0] >> comma >> v[1] >> comma >> v[2] >> comma >> v[3];
    if (!is) throw Error(ErrorCode::IoError, "malformed histogram row in " + p.string() + ": " + line);
    los.push_back(v[0]);
    his.push_back(v[1]);
    h.counts.push_back(v[2]);
    h.errors.push_back(v[3]);
    total += v[2];
  }
  if (los.empty()) throw Error(ErrorCode::InsufficientBins, p.string() + " has no bins");
  h.lo = los.front();
  h.hi = his.back();
  h.total = static_cast<std::int64_t>(std::llround(total));
  return h;
}

Json fit_params_to_json(const FitParams& fp) {
  Json j{{"model", to_string(fp.model)}, {"a2", fp.a2},   {"a1", fp.a1}, {"m", fp.m}, {"c", fp.c},
         {"reduced_chi2", fp.reduced_chi2}, {"bins_used", fp.bins_used}, {"mirrored", fp.mirrored}, {"bound_active", fp.constrained}};
  if (fp.model == FitModel::Two) j["p"] = fp.p;
  return j;
}

FitParams fit_params_from_json(const Json& j) {
  try {
    FitParams fp;
    fp.model = fit_model_from_string(j.at("model").get<std::string>());
    fp.a2 = j.at("a2").get<double>();
    fp.a1 = j.at("a1").get<double>();
    fp.m = j.at("m").get<double>();
    fp.c = j.value("c", 0.0);
    fp.p = j.value("p", 1.0);
    fp.reduced_chi2 = j.value("reduced_chi2", 0.0);
    fp.bins_used = j.value("bins_used", 0);
    fp.mirrored = j.value("mirrored", false);
    fp.constrained = j.value("bound_active", false);
    return fp;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("bad fit parameters: ") + e.what());
  }
}

Json qeb_to_json(const QuantumErrorBars& q) { return {{"v0", q.v0}, {"delta", q.delta}, {"gamma", q.gamma}}; }

Json report_to_json(const ConfidenceReport& r) {
  Json j{{"figure", to_string(r.figure)},
         {"method", to_string(r.region.method)},
         {"n", r.region.n},
         {"eps", r.region.eps},
         {"binom_mode", to_string(r.region.paper_compat ? BinomMode::UpperBound : r.region.binom_mode)},
         {"paper_compat", r.region.paper_compat},
         {"delta", r.delta},
         {"threshold_log10", r.threshold_log10},
         {"gamma_E", r.gamma_e},
         {"interval", {r.lo, r.hi}},
         {"fit", fit_params_to_json(r.fit)}};
  if (r.qeb) j["qeb"] = qeb_to_json(*r.qeb);
  return j;
}

namespace {

enum class Stage { Config, Simulate, Sample, Fit, Region };

int exit_code(Stage stage, ErrorCode code) {
  if (code == ErrorCode::IoError) return kExitIo;
  if (code == ErrorCode::ConfigError) return kExitConfig;
  switch (stage) {
    case Stage::Config:
    case Stage::Simulate: return kExitConfig;
    case Stage::Sample: return code == ErrorCode::Unsupported ? kExitConfig : kExitWalker;
    case Stage::Fit: return kExitFit;
    case Stage::Region: return kExitDegenerate;
  }
  return 1;
}

struct Runner {
  RunConfig cfg;
  Stage stage = Stage::Config;

  fs::path out(const std::string& name) const { return cfg.output / name; }

  Dataset dataset() {
    stage = Stage::Simulate;
    return build_dataset(cfg);
  }

  Json simulate() {
    if (!cfg.simulation) throw Error(ErrorCode::ConfigError, "simulate needs a simulation section");
    const Dataset ds = dataset();
    write_dataset(out("dataset.json"), ds);
    std::cout << "total_n " << ds.total_n() << "\n";
    for (std::size_t i = 0; i < ds.settings.size(); ++i) {
      std::cout << "setting " << i;
      for (auto c : ds.settings[i].counts) std::cout << " " << c;
      std::cout << "\n";
    }
    return Json{{"total_n", ds.total_n()}, {"settings", ds.settings.size()}};
  }

  // Writes chain files, the histogram and the sampling log; throws after
  // writing when some chain failed.
  Json sample(const Dataset& ds, const fs::path& dir) {
    stage = Stage::Sample;
    const SampleOutcome s = sample_stage(cfg, ds);
    Json chains = Json::array();
    std::string first_failure;
    for (std::size_t i = 0; i < s.chains.size(); ++i) {
      const auto& c = s.chains[i];
      Json cj{{"seed", cfg.walker.seed + i}};
      if (!s.failures[i].empty()) {
        cj["error"] = s.failures[i];
        if (first_failure.empty()) first_failure = s.failures[i];
      } else {
        std::ostringstream name;
        name << "chains/chain_" << std::setw(3) << std::setfill('0') << i << ".csv";
        write_chain_csv(dir / name.str(), c);
        cj.update({{"acceptance_rate", c.acceptance_rate},
                   {"final_step", c.final_step},
                   {"tuning_windows", c.tuning_windows},
                   {"clamp_events", c.clamp_events},
                   {"rank_deficient_resamples", c.rank_deficient},
                   {"sdp",
                    {{"solves", c.sdp.solves},
                     {"iterations", c.sdp.iterations},
                     {"retries", c.sdp.retries},
                     {"max_gap", c.sdp.max_gap}}}});
        std::cerr << "chain " << i << ": acceptance " << c.acceptance_rate << ", step " << c.final_step
                  << ", clamps " << c.clamp_events << ", rank rejects " << c.rank_deficient << "\n";
      }
      chains.push_back(cj);
    }
    write_histogram_csv(dir / "histogram.csv", s.histogram);
    Json log{{"n", ds.total_n()}, {"chains", chains}, {"peak", s.histogram.center(s.histogram.peak_bin())}};
    if (cfg.simulation) {
      FigureEvaluator fe(cfg.figure, ds.dims);
      log["true_value"] = fe(cfg.simulation->true_choi);
    }
    write_json(dir / "sample.json", log);
    if (!first_failure.empty()) throw Error(ErrorCode::TuningFailed, "chain failure: " + first_failure);
    return log;
  }

  Json fit(const Histogram& h, const fs::path& dir) {
    stage = Stage::Fit;
    const FitOutcome f = fit_stage(h, cfg.figure);
    Json j{{"figure", to_string(cfg.figure.kind)}, {"fits", {{"one", fit_params_to_json(f.one)}}},
           {"qeb", qeb_to_json(f.qeb)}};
    if (f.two) {
      j["fits"]["two"] = fit_params_to_json(*f.two);
    } else {
      j["fits"]["two_error"] = f.two_error;
    }
    write_json(dir / "fit.json", j);
    std::cout << "v0 " << f.qeb.v0 << " delta " << f.qeb.delta << " gamma " << f.qeb.gamma << "\n";
    return j;
  }

  FitParams tail_fit(const Json& fit) const {
    const bool mirrored = cfg.figure.larger_better();
    const std::string key = to_string(cfg.region.tail_model);
    if (fit.contains("fits") && fit.at("fits").contains(key)) return fit_params_from_json(fit.at("fits").at(key));
    if (cfg.region.tail_model == FitModel::One && fit.contains("qeb")) {
      QuantumErrorBars q;
      q.v0 = fit.at("qeb").at("v0").get<double>();
      q.delta = fit.at("qeb").at("delta").get<double>();
      q.gamma = fit.at("qeb").at("gamma").get<double>();
      if (mirrored) q.v0 = 1 - q.v0, q.gamma = -q.gamma;
      FitParams fp = fit_from_error_bars(q);
      fp.mirrored = mirrored;
      return fp;
    }
    throw Error(ErrorCode::DegenerateFit, "fit file has no model-" + key + " fit");
  }

  Json region(const Json& fit, std::int64_t n, const ChannelDims& dims, const fs::path& dir) {
    stage = Stage::Region;
    const ConfidenceReport r = region_stage(tail_fit(fit), cfg, n, dims);
    const Json j = report_to_json(r);
    write_json(dir / "report.json", j);
    std::cout << "gamma_E " << r.gamma_e << " delta " << r.delta << " interval [" << r.lo << ", " << r.hi << "]\n";
    return j;
  }

  std::pair<std::int64_t, ChannelDims> region_inputs() {
    if (cfg.region_n && cfg.region_dims) return {*cfg.region_n, *cfg.region_dims};
    const Dataset ds = dataset();
    return {cfg.region_n.value_or(ds.total_n()), cfg.region_dims.value_or(ds.dims)};
  }

  Json analyze() {
    Dataset ds = dataset();
    if (cfg.simulation) write_dataset(out("dataset.json"), ds);
    Json summary{{"n", ds.total_n()}};
    summary["sample"] = sample(ds, cfg.output);
    const Histogram h = read_histogram_csv(out("histogram.csv"));
    summary["fit"] = fit(h, cfg.output);
    summary["report"] = region(summary["fit"], ds.total_n(), ds.dims, cfg.output);
    if (!cfg.alpha_sweep.empty()) {
      Json sweep = Json::array();
      std::vector<double> ns, deltas;
      for (std::size_t i = 0; i < cfg.alpha_sweep.size(); ++i) {
        const double a = cfg.alpha_sweep[i];
        stage = Stage::Simulate;
        const Dataset scaled = rescale_counts(ds, a);
        const fs::path dir = cfg.output / ("alpha_" + std::to_string(i));
        const Json s = sample(scaled, dir);
        const Json f = fit(read_histogram_csv(dir / "histogram.csv"), dir);
        sweep.push_back({{"alpha", a}, {"n", scaled.total_n()}, {"peak", s.at("peak")}, {"qeb", f.at("qeb")}});
        ns.push_back(double(scaled.total_n()));
        deltas.push_back(f.at("qeb").at("delta").get<double>());
      }
      summary["alpha_sweep"] = sweep;
      if (ns.size() >= 2) summary["delta_slope"] = log_log_slope(ns, deltas);
    }
    write_json(out("summary.json"), summary);
    return summary;
  }
};

}  // namespace

int run_command(const std::string& command, const CliOptions& opts) {
  Runner r;
  try {
    r.cfg = load_run_config(opts.config);
    if (opts.out) r.cfg.output = *opts.out;
    if (opts.seed) r.cfg.walker.seed = *opts.seed;
    if (opts.paper_compat) r.cfg.region.paper_compat = true;

    if (command == "simulate") {
      r.simulate();
    } else if (command == "sample") {
      const Dataset ds = r.dataset();
      r.sample(ds, r.cfg.output);
    } else if (command == "fit") {
      r.stage = Stage::Fit;
      r.fit(read_histogram_csv(r.cfg.histogram.value_or(r.out("histogram.csv"))), r.cfg.output);
    } else if (command == "region") {
      r.stage = Stage::Region;
      const Json fit = read_json(r.cfg.fit.value_or(r.out("fit.json")));
      const auto [n, dims] = r.region_inputs();
      r.region(fit, n, dims, r.cfg.output);
    } else if (command == "analyze") {
      r.analyze();
    } else {
      std::cerr << "unknown command '" << command << "'\n";
      return kExitConfig;
    }
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(r.stage, e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return r.stage == Stage::Config ? kExitConfig : exit_code(r.stage, ErrorCode::SolverFailure);
  }
}

}  // namespace qpt
