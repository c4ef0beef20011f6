#pragma once

// Metropolis-Hastings walks targeting  likelihood x prior  where the prior is
// either the Stinespring-Haar measure on channels (channel walker) or the
// purified-Haar measure on bipartite states (state walker).

#include <cstdint>
#include <exception>
#include <functional>
#include <string>
#include <vector>

#include "qpt/fom.hpp"
#include "qpt/tomodata.hpp"

namespace qpt {

enum class JumpKind { EiH, ElementaryRotation, SphereGaussian };
enum class WalkMethod { Channel, State };
enum class StartPoint { Identity, Estimate };

JumpKind jump_kind_from_string(const std::string& s);
std::string to_string(JumpKind k);
WalkMethod walk_method_from_string(const std::string& s);
std::string to_string(WalkMethod m);
StartPoint start_point_from_string(const std::string& s);

struct WalkerConfig {
  WalkMethod method = WalkMethod::Channel;
  JumpKind jump = JumpKind::ElementaryRotation;
  double step_size = 0.001;
  int n_inner_iter = 1;
  int n_therm_sweeps = 2048;
  int sweep_size = 1000;
  int n_samples = 32768;
  std::uint64_t seed = 0;
  double target_acceptance = 0.30;
  bool tune = true;
  double max_step = 1.0;
  StartPoint start = StartPoint::Identity;

  void validate() const;
};

struct ChainResult {
  std::vector<double> fom_samples;
  std::vector<std::int64_t> accepted_since_last;
  double acceptance_rate = 0;          // recorded phase
  double final_step = 0;
  std::int64_t clamp_events = 0;
  std::int64_t rank_deficient = 0;     // state walker resamples
  int tuning_windows = 0;
  SdpStats sdp;
};

/// Multiplicative step control over probe windows of kWindow steps:
/// x1.1 above target + 0.1, /1.1 below target - 0.1, capped at max_step.
/// Throws TuningFailed when no window of the first kMaxWindows had an
/// acceptance in [0.05, 0.95], unless the step sits at max_step (a flat
/// likelihood accepts everything).
class StepTuner {
 public:
  static constexpr int kWindow = 256;
  static constexpr int kMaxWindows = 100;

  explicit StepTuner(const WalkerConfig& cfg)
      : step_(cfg.step_size), max_step_(cfg.max_step), target_(cfg.target_acceptance) {}

  void record(bool accepted);
  double step() const { return step_; }
  int windows() const { return windows_; }

 private:
  double step_, max_step_, target_;
  int acc_ = 0, n_ = 0, windows_ = 0;
  bool seen_range_ = false;
};

/// Accept x' with probability min(1, exp(ll' - ll)).
bool mh_accept(double ll_current, double ll_proposed, Rng& rng);

/// exp(iH) with H = N + N^dagger, N complex Gaussian (entry parts with
/// standard deviation step).
CMatrix eih_unitary(int d, double step, Rng& rng);
CMatrix propose_eiH(const CMatrix& u, double step, Rng& rng);

/// Product of n_inner two-level rotations exp(i a (e_m . sigma)) on random
/// index pairs i < j, sin a ~ N(0, step) truncated to [-1, 1]. Acts on rows,
/// so it can be applied to any set of columns of the unitary.
void apply_elementary_rotations(CMatrix& u, double step, int n_inner, Rng& rng);
CMatrix propose_elementary_rotation(const CMatrix& u, double step, int n_inner, Rng& rng);

/// normalize(psi + step g), g complex Gaussian.
CVector propose_sphere(const CVector& psi, double step, Rng& rng);

/// Isometry columns of a Stinespring unitary whose Choi matrix is `choi`.
CMatrix isometry_for_choi(const CMatrix& choi, const ChannelDims& dims);

/// Sees each recorded point: the Choi matrix (channel walker) or the
/// reference-output state (state walker).
using SampleObserver = std::function<void(const CMatrix&)>;

ChainResult run_channel_chain(const Dataset& ds, const LikelihoodModel& like, FigureEvaluator& fom,
                              const WalkerConfig& cfg, const SampleObserver& observe = {});
ChainResult run_state_chain(const Dataset& ds, const LikelihoodModel& like, FigureEvaluator& fom,
                            const WalkerConfig& cfg, const SampleObserver& observe = {});

/// n_chains chains with seeds cfg.seed + i, OpenMP-parallel over chains.
/// Without `failures` the first chain error is rethrown; with it, failed
/// chains leave an empty result and their exception in failures[i].
std::vector<ChainResult> run_chains(const Dataset& ds, const FigureSpec& spec, const WalkerConfig& cfg,
                                    int n_chains, std::vector<std::exception_ptr>* failures = nullptr);
/// Serial reference; must produce results identical to run_chains.
std::vector<ChainResult> run_chains_serial(const Dataset& ds, const FigureSpec& spec, const WalkerConfig& cfg,
                                           int n_chains);

/// Standard error of the mean of a correlated stream from the plateau of
/// the blocked standard errors (block doubling up to log2(N) - 4).
double binning_error(const std::vector<double>& stream);

struct Histogram {
  double lo = 0, hi = 1;
  std::vector<double> counts;
  std::vector<double> errors;
  std::int64_t total = 0;

  int bins() const { return static_cast<int>(counts.size()); }
  double width() const { return (hi - lo) / bins(); }
  double center(int i) const { return lo + (i + 0.5) * width(); }
  double density(int i) const { return total > 0 ? counts[i] / (double(total) * width()) : 0.0; }
  int peak_bin() const;
};

/// Counts per bin merged over chains; per-bin errors from the binning
/// analysis of each chain's indicator stream, combined in quadrature.
/// Values outside [lo, hi) go to the nearest edge bin only when within
/// 1e-12 of it, and are otherwise dropped from the counts.
Histogram make_histogram(const std::vector<ChainResult>& chains, int bins, double lo, double hi);

}  // namespace qpt
