#include "qpt/walkers.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

namespace qpt {

namespace {

std::string strip_code(const Error& e) {
  const std::string w = e.what();
  const auto p = w.find(": ");
  return p == std::string::npos ? w : w.substr(p + 2);
}

CMatrix hermitian_exp_i(const CMatrix& h) {
  const auto e = eigh(h);
  const CVector ph = e.values.unaryExpr([](double x) { return std::polar(1.0, x); }).cast<cplx>();
  return e.vectors * ph.asDiagonal() * e.vectors.adjoint();
}

CMatrix identity_isometry(const ChannelDims& dims) {
  CMatrix v = CMatrix::Zero(dims.d_u(), dims.d_a);
  for (int i = 0; i < dims.d_a; ++i) v(reference_column(dims, i), i) = 1;
  return v;
}

void reorthonormalize(CMatrix& v) {
  const CMatrix g = v.adjoint() * v;
  v = v * mat_inv_sqrt(0.5 * (g + g.adjoint()), 0.0);
}

// Coefficient matrix K with |psi> = (K (x) 1)|Phi~> on reference (x) input.
CMatrix reference_coefficients(const Dataset& ds) {
  const int d = ds.dims.d_a;
  CMatrix k(d, d);
  for (int a = 0; a < d; ++a)
    for (int p = 0; p < d; ++p) k(p, a) = ds.input_entangled(a * d + p);
  return k;
}

CMatrix state_from_vector(const CVector& psi, int dim) {
  const CMatrix x = Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      psi.data(), dim, dim);
  return x * x.adjoint();
}

CVector vector_from_state(const CMatrix& rho) {
  const int dim = static_cast<int>(rho.rows());
  const CMatrix x = mat_sqrt(rho);
  CVector psi(dim * dim);
  for (int i = 0; i < dim; ++i)
    for (int e = 0; e < dim; ++e) psi(i * dim + e) = x(i, e);
  return psi / psi.norm();
}

void require_channel_jump(const WalkerConfig& cfg) {
  if (cfg.jump == JumpKind::SphereGaussian) {
    throw Error(ErrorCode::ConfigError, "the channel walker needs an eiH or elementary-rotation jump");
  }
}

}  // namespace

JumpKind jump_kind_from_string(const std::string& s) {
  if (s == "eiH") return JumpKind::EiH;
  if (s == "elementary-rotation") return JumpKind::ElementaryRotation;
  if (s == "sphere-gaussian") return JumpKind::SphereGaussian;
  throw Error(ErrorCode::ConfigError, "unknown jump '" + s + "'");
}

std::string to_string(JumpKind k) {
  switch (k) {
    case JumpKind::EiH: return "eiH";
    case JumpKind::ElementaryRotation: return "elementary-rotation";
    case JumpKind::SphereGaussian: return "sphere-gaussian";
  }
  return "unknown";
}

WalkMethod walk_method_from_string(const std::string& s) {
  if (s == "channel") return WalkMethod::Channel;
  if (s == "state") return WalkMethod::State;
  throw Error(ErrorCode::ConfigError, "unknown walk method '" + s + "'");
}

std::string to_string(WalkMethod m) { return m == WalkMethod::Channel ? "channel" : "state"; }

void StepTuner::record(bool accepted) {
  acc_ += accepted ? 1 : 0;
  if (++n_ < kWindow) return;
  const double rate = double(acc_) / n_;
  acc_ = n_ = 0;
  ++windows_;
  if (rate >= 0.05 && rate <= 0.95) seen_range_ = true;
  if (rate > target_ + 0.1) {
    step_ = std::min(step_ * 1.1, max_step_);
  } else if (rate < target_ - 0.1) {
    step_ /= 1.1;
  }
  if (windows_ == kMaxWindows && !seen_range_ && step_ < max_step_) {
    std::ostringstream os;
    os << "acceptance " << rate << " outside [0.05, 0.95] after " << windows_ << " windows (step " << step_ << ")";
    throw Error(ErrorCode::TuningFailed, os.str());
  }
}

StartPoint start_point_from_string(const std::string& s) {
  if (s == "identity") return StartPoint::Identity;
  if (s == "estimate") return StartPoint::Estimate;
  throw Error(ErrorCode::ConfigError, "unknown start point '" + s + "'");
}

void WalkerConfig::validate() const {
  if (!(step_size > 0) || !std::isfinite(step_size)) throw Error(ErrorCode::BadParameter, "step_size must be > 0");
  if (!(max_step >= step_size)) throw Error(ErrorCode::BadParameter, "max_step must be >= step_size");
  if (n_samples < 1) throw Error(ErrorCode::BadParameter, "n_samples must be >= 1");
  if (n_inner_iter < 1) throw Error(ErrorCode::BadParameter, "n_inner_iter must be >= 1");
  if (n_therm_sweeps < 0) throw Error(ErrorCode::BadParameter, "n_therm_sweeps must be >= 0");
  if (sweep_size < 1) throw Error(ErrorCode::BadParameter, "sweep_size must be >= 1");
  if (!(target_acceptance > 0 && target_acceptance < 1)) {
    throw Error(ErrorCode::BadParameter, "target_acceptance must lie in (0, 1)");
  }
  const bool sphere = jump == JumpKind::SphereGaussian;
  if (sphere != (method == WalkMethod::State)) {
    throw Error(ErrorCode::ConfigError, "jump '" + to_string(jump) + "' does not fit the " + to_string(method) +
                                            " walker");
  }
}

bool mh_accept(double ll_current, double ll_proposed, Rng& rng) {
  const double diff = ll_proposed - ll_current;
  if (diff >= 0) return true;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng) < std::exp(diff);
}

CMatrix eih_unitary(int d, double step, Rng& rng) {
  const CMatrix n = complex_gaussian(d, d, step, rng);
  return hermitian_exp_i(n + n.adjoint());
}

CMatrix propose_eiH(const CMatrix& u, double step, Rng& rng) {
  const CMatrix n = complex_gaussian(static_cast<int>(u.rows()), static_cast<int>(u.rows()), step, rng);
  const CMatrix h = n + n.adjoint();
  if (h.cwiseAbs().colwise().sum().maxCoeff() > 0.5) return hermitian_exp_i(h) * u;
  // Taylor series of e^{iH} applied to the columns; terms shrink at least 2x
  CMatrix out = u, term = u;
  const double stop = 1e-17 * u.norm();
  for (int k = 1; k < 60 && term.norm() > stop; ++k) {
    term = (h * term) * cplx(0, 1.0 / k);
    out += term;
  }
  return out;
}

void apply_elementary_rotations(CMatrix& u, double step, int n_inner, Rng& rng) {
  const int d = static_cast<int>(u.rows());
  if (d < 2) return;
  std::uniform_int_distribution<int> pick(0, d - 1), axis(0, 2);
  std::normal_distribution<double> g(0.0, step);
  for (int t = 0; t < n_inner; ++t) {
    const int i = pick(rng);
    int j = pick(rng);
    while (j == i) j = pick(rng);
    const int lo = std::min(i, j), hi = std::max(i, j);
    const int m = axis(rng);
    double s = g(rng);
    while (std::abs(s) > 1) s = g(rng);
    const double c = std::sqrt(1 - s * s);
    // exp(i a n.sigma) = cos a + i sin a (n.sigma)
    cplx r00, r01, r10, r11;
    switch (m) {
      case 0: r00 = c, r01 = cplx(0, s), r10 = cplx(0, s), r11 = c; break;
      case 1: r00 = c, r01 = s, r10 = -s, r11 = c; break;
      default: r00 = cplx(c, s), r01 = 0, r10 = 0, r11 = cplx(c, -s); break;
    }
    for (Eigen::Index k = 0; k < u.cols(); ++k) {
      const cplx a = u(lo, k), b = u(hi, k);
      u(lo, k) = r00 * a + r01 * b;
      u(hi, k) = r10 * a + r11 * b;
    }
  }
}

CMatrix propose_elementary_rotation(const CMatrix& u, double step, int n_inner, Rng& rng) {
  CMatrix out = u;
  apply_elementary_rotations(out, step, n_inner, rng);
  return out;
}

CVector propose_sphere(const CVector& psi, double step, Rng& rng) {
  const CVector g = complex_gaussian(static_cast<int>(psi.size()), 1, std::sqrt(0.5), rng);
  CVector out = psi + step * g;
  return out / out.norm();
}

CMatrix isometry_for_choi(const CMatrix& choi, const ChannelDims& dims) {
  require_choi(choi, dims, 1e-8);
  const int da = dims.d_a, db = dims.d_b, de = dims.d_env();
  const CMatrix y = mat_sqrt(static_cast<double>(da) * choi);
  CMatrix v(dims.d_u(), da);
  for (int i = 0; i < da; ++i)
    for (int b = 0; b < db; ++b)
      for (int e = 0; e < de; ++e) v(b * de + e, i) = y(i * db + b, e);
  reorthonormalize(v);
  return v;
}

ChainResult run_channel_chain(const Dataset& ds, const LikelihoodModel& like, FigureEvaluator& fom,
                              const WalkerConfig& cfg, const SampleObserver& observe) {
  cfg.validate();
  require_channel_jump(cfg);
  if (!(like.dims() == ds.dims)) throw Error(ErrorCode::DimensionMismatch, "likelihood model and dataset differ");
  const ChannelDims dims = ds.dims;
  Rng rng(cfg.seed);

  CMatrix v = cfg.start == StartPoint::Estimate ? isometry_for_choi(linear_inversion_estimate(ds), dims)
                                                : identity_isometry(dims);
  CMatrix choi = isometry_to_choi(v, dims);
  ChainResult res;
  auto l0 = like(choi);
  double ll = l0.value;
  res.clamp_events += l0.clamps;

  StepTuner tuner(cfg);
  double step = cfg.step_size;
  auto move = [&](bool tuning) {
    CMatrix prop = cfg.jump == JumpKind::EiH ? propose_eiH(v, step, rng)
                                              : propose_elementary_rotation(v, step, cfg.n_inner_iter, rng);
    const CMatrix pc = isometry_to_choi(prop, dims);
    const auto lp = like(pc);
    res.clamp_events += lp.clamps;
    const bool acc = mh_accept(ll, lp.value, rng);
    if (acc) {
      v = std::move(prop);
      choi = pc;
      ll = lp.value;
    }
    if (tuning && cfg.tune) {
      tuner.record(acc);
      step = tuner.step();
    }
    return acc;
  };

  for (int s = 0; s < cfg.n_therm_sweeps; ++s) {
    for (int k = 0; k < cfg.sweep_size; ++k) move(true);
    reorthonormalize(v);
    choi = isometry_to_choi(v, dims);
  }

  res.fom_samples.reserve(cfg.n_samples);
  res.accepted_since_last.reserve(cfg.n_samples);
  std::int64_t accepted = 0;
  for (int i = 0; i < cfg.n_samples; ++i) {
    std::int64_t acc = 0;
    for (int k = 0; k < cfg.sweep_size; ++k) acc += move(false) ? 1 : 0;
    reorthonormalize(v);
    choi = isometry_to_choi(v, dims);
    if (observe) observe(choi);
    try {
      res.fom_samples.push_back(fom(choi));
    } catch (const Error& e) {
      std::ostringstream os;
      os << "sample " << i << ": " << strip_code(e);
      throw Error(e.code(), os.str());
    }
    res.accepted_since_last.push_back(acc);
    accepted += acc;
  }
  res.acceptance_rate = double(accepted) / (double(cfg.n_samples) * cfg.sweep_size);
  res.final_step = step;
  res.tuning_windows = tuner.windows();
  res.sdp = fom.stats();
  return res;
}

ChainResult run_state_chain(const Dataset& ds, const LikelihoodModel& like, FigureEvaluator& fom,
                            const WalkerConfig& cfg, const SampleObserver& observe) {
  cfg.validate();
  if (ds.scheme != Scheme::AncillaAssisted) {
    throw Error(ErrorCode::Unsupported, "the state walker needs an ancilla-assisted dataset");
  }
  if (!(like.dims() == ds.dims)) throw Error(ErrorCode::DimensionMismatch, "likelihood model and dataset differ");
  const int dim = ds.dims.d_choi();
  Rng rng(cfg.seed);

  CVector psi;
  if (cfg.start == StartPoint::Estimate) {
    const CMatrix k = kron(reference_coefficients(ds), CMatrix::Identity(ds.dims.d_b, ds.dims.d_b));
    CMatrix rho = static_cast<double>(ds.dims.d_a) * k * linear_inversion_estimate(ds) * k.adjoint();
    rho = 0.5 * (rho + rho.adjoint());
    psi = vector_from_state(rho / rho.trace().real());
  } else {
    psi = vector_from_state(CMatrix::Identity(dim, dim) / double(dim));
  }
  CMatrix sigma = state_from_vector(psi, dim);
  ChainResult res;
  auto l0 = like.of_bipartite(sigma);
  double ll = l0.value;
  res.clamp_events += l0.clamps;

  StepTuner tuner(cfg);
  double step = cfg.step_size;
  auto move = [&](bool tuning) {
    CVector prop = propose_sphere(psi, step, rng);
    CMatrix ps = state_from_vector(prop, dim);
    const auto lp = like.of_bipartite(ps);
    res.clamp_events += lp.clamps;
    const bool acc = mh_accept(ll, lp.value, rng);
    if (acc) {
      psi = std::move(prop);
      sigma = std::move(ps);
      ll = lp.value;
    }
    if (tuning && cfg.tune) {
      tuner.record(acc);
      step = tuner.step();
    }
    return acc;
  };

  for (int s = 0; s < cfg.n_therm_sweeps; ++s)
    for (int k = 0; k < cfg.sweep_size; ++k) move(true);

  res.fom_samples.reserve(cfg.n_samples);
  res.accepted_since_last.reserve(cfg.n_samples);
  std::int64_t accepted = 0, steps = 0;
  for (int i = 0; i < cfg.n_samples; ++i) {
    std::int64_t acc = 0;
    for (;;) {
      for (int k = 0; k < cfg.sweep_size; ++k) acc += move(false) ? 1 : 0;
      steps += cfg.sweep_size;
      try {
        res.fom_samples.push_back(fom.of_bipartite(sigma));
        if (observe) observe(sigma);
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::RankDeficient) {
          std::ostringstream os;
          os << "sample " << i << ": " << strip_code(e);
          throw Error(e.code(), os.str());
        }
        ++res.rank_deficient;
      }
    }
    res.accepted_since_last.push_back(acc);
    accepted += acc;
  }
  res.acceptance_rate = double(accepted) / double(steps);
  res.final_step = step;
  res.tuning_windows = tuner.windows();
  res.sdp = fom.stats();
  return res;
}

namespace {

ChainResult run_one(const Dataset& ds, const LikelihoodModel& like, const FigureSpec& spec, const WalkerConfig& cfg,
                    int index) {
  WalkerConfig c = cfg;
  c.seed = cfg.seed + static_cast<std::uint64_t>(index);
  FigureEvaluator fe(spec, ds.dims);
  return cfg.method == WalkMethod::Channel ? run_channel_chain(ds, like, fe, c) : run_state_chain(ds, like, fe, c);
}

void check_chain_count(int n_chains) {
  if (n_chains < 1) throw Error(ErrorCode::BadParameter, "need at least one chain");
}

}  // namespace

std::vector<ChainResult> run_chains(const Dataset& ds, const FigureSpec& spec, const WalkerConfig& cfg,
                                    int n_chains, std::vector<std::exception_ptr>* failures) {
  check_chain_count(n_chains);
  cfg.validate();
  const LikelihoodModel like(ds);
  std::vector<ChainResult> out(n_chains);
  std::vector<std::exception_ptr> errors(n_chains);
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n_chains; ++i) {
    try {
      out[i] = run_one(ds, like, spec, cfg, i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  if (failures) {
    *failures = std::move(errors);
    return out;
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::vector<ChainResult> run_chains_serial(const Dataset& ds, const FigureSpec& spec, const WalkerConfig& cfg,
                                           int n_chains) {
  check_chain_count(n_chains);
  cfg.validate();
  const LikelihoodModel like(ds);
  std::vector<ChainResult> out;
  out.reserve(n_chains);
  for (int i = 0; i < n_chains; ++i) out.push_back(run_one(ds, like, spec, cfg, i));
  return out;
}

double binning_error(const std::vector<double>& stream) {
  const auto n = stream.size();
  if (n < 128) throw Error(ErrorCode::TooFewSamples, "binning needs at least 128 samples");
  const int max_level = static_cast<int>(std::floor(std::log2(double(n)))) - 4;
  std::vector<double> x = stream, errs;
  for (int l = 0; l <= max_level; ++l) {
    const double m = double(x.size());
    double mean = 0;
    for (double v : x) mean += v;
    mean /= m;
    double var = 0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= (m - 1);
    errs.push_back(std::sqrt(var / m));
    if (x.size() % 2 == 1) x.pop_back();
    std::vector<double> y(x.size() / 2);
    for (std::size_t k = 0; k < y.size(); ++k) y[k] = 0.5 * (x[2 * k] + x[2 * k + 1]);
    x = std::move(y);
  }
  if (errs.front() == 0) return 0.0;
  for (std::size_t l = 0; l + 1 < errs.size(); ++l) {
    if (errs[l] > 0 && std::abs(errs[l + 1] - errs[l]) / errs[l] < 0.05) return errs[l + 1];
  }
  return errs.back();
}

int Histogram::peak_bin() const {
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

Histogram make_histogram(const std::vector<ChainResult>& chains, int bins, double lo, double hi) {
  if (bins < 1 || !(hi > lo)) throw Error(ErrorCode::BadParameter, "histogram needs bins >= 1 and hi > lo");
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(bins, 0.0);
  h.errors.assign(bins, 0.0);
  const double w = (hi - lo) / bins;
  auto bin_of = [&](double v) {
    if (v < lo - 1e-12 || v > hi + 1e-12 || !std::isfinite(v)) return -1;
    return std::clamp(static_cast<int>(std::floor((v - lo) / w)), 0, bins - 1);
  };
  std::vector<double> var(bins, 0.0);
  for (const auto& c : chains) {
    std::vector<int> idx(c.fom_samples.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      idx[k] = bin_of(c.fom_samples[k]);
      if (idx[k] >= 0) {
        h.counts[idx[k]] += 1;
        ++h.total;
      }
    }
    const double n = double(idx.size());
    std::vector<double> ind(idx.size());
    for (int b = 0; b < bins; ++b) {
      for (std::size_t k = 0; k < idx.size(); ++k) ind[k] = idx[k] == b ? 1.0 : 0.0;
      const double e = n * binning_error(ind);
      var[b] += e * e;
    }
  }
  for (int b = 0; b < bins; ++b) h.errors[b] = std::sqrt(var[b]);
  return h;
}

}  // namespace qpt
