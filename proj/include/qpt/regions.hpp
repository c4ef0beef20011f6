#pragma once

// From a figure-of-merit histogram to a confidence interval: log-density
// fits, quantum error bars, the symmetric-subspace counting behind the
// enlargement delta and the weight threshold, and tail quantiles of the fit.
// Everything tiny is kept in log space.

#include <optional>
#include <string>
#include <utility>

#include "qpt/fom.hpp"
#include "qpt/walkers.hpp"

namespace qpt {

enum class BinomMode { Exact, UpperBound };
enum class FitModel { One, Two };

BinomMode binom_mode_from_string(const std::string& s);
std::string to_string(BinomMode m);
FitModel fit_model_from_string(const std::string& s);
std::string to_string(FitModel m);

/// ln of s_{n,d} = binom(n + d - 1, d - 1); the bound is (d - 1) ln(n + 1).
double log_sym_dim(std::int64_t n, std::int64_t d, BinomMode mode);

struct RegionParams {
  std::int64_t n = 0;
  double eps = 0.01;
  int d2ab = 16;  // (d_A d_B)^2
  WalkMethod method = WalkMethod::Channel;
  BinomMode binom_mode = BinomMode::Exact;
  // Reproduces the published worked example: upper-bound counting and
  // base-10 logarithms inside delta.
  bool paper_compat = false;

  void validate() const;
  double delta() const;
  /// log10(1 - required weight).
  double weight_threshold_log10_gap() const;
};

double enlargement_delta(const RegionParams& rp);
double weight_threshold(const RegionParams& rp);

/// ln mu(u) = -a2 u^2 - a1 u + m g(ln u) + c with g(x) = x (model one) or
/// sign(x)|x|^p (model two). A mirrored fit lives in u = 1 - v, so that a
/// larger-is-better figure is fitted near u = 0 like a distance. The least
/// squares runs under a2 >= 0 and m >= 0; with a2 = 0 the tail needs a1 > 0.
struct FitParams {
  FitModel model = FitModel::One;
  double a2 = 0, a1 = 0, m = 0, c = 0;
  double p = 1;
  double reduced_chi2 = 0;
  int bins_used = 0;
  bool mirrored = false;
  bool constrained = false;  // a bound on a2 or m was active

  double log_density(double u) const;
};

FitParams fit_histogram(const Histogram& h, FitModel model, bool mirrored = false);

struct QuantumErrorBars {
  double v0 = 0;
  double delta = 0;
  double gamma = 0;
};

/// Peak, width and skewness of a model-one fit, in the figure's own variable.
QuantumErrorBars quantum_error_bars(const FitParams& fp);
/// Model-one fit with the given error bars (c = 0, the tail is normalized).
FitParams fit_from_error_bars(const QuantumErrorBars& q);

/// ln of the normalized fit weight beyond u in the fit variable.
double log_upper_tail(const FitParams& fp, double u);

/// Figure value gamma_E with log10(weight outside) <= target_log10: the upper
/// tail [gamma_E, inf) for a distance, the lower tail (-inf, gamma_E] for a
/// mirrored fit. Bisection to 1e-4 absolute, searched inside [0, 1].
double tail_quantile(const FitParams& fp, double target_log10);

struct ConfidenceReport {
  FigureKind figure = FigureKind::DiamondDistance;
  RegionParams region;
  double delta = 0;
  double threshold_log10 = 0;
  double gamma_e = 0;
  double lo = 0, hi = 1;
  FitParams fit;
  std::optional<QuantumErrorBars> qeb;
};

/// Diamond: [0, gamma_E + d_A delta / 2]; fidelities: [gamma_E - d_A delta, 1].
/// The entanglement fidelity uses the worst-case fidelity bound. Clipped to [0, 1].
std::pair<double, double> confidence_interval(FigureKind figure, double gamma_e, double delta, int d_a);

ConfidenceReport assemble_report(const FitParams& fp, const RegionParams& rp, FigureKind figure, int d_a);

}  // namespace qpt
