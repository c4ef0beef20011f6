#include "qpt/regions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

#include <boost/math/quadrature/tanh_sinh.hpp>

namespace qpt {

namespace {

constexpr double kLn10 = 2.302585092994046;
// Integration stops once the integrand is this far (in ln) below its maximum.
constexpr double kLogCut = 800.0;

double model_g(double lnu, FitModel model, double p) {
  if (model == FitModel::One) return lnu;
  return std::copysign(std::pow(std::abs(lnu), p), lnu);
}

// a2 = 0 is the boundary of the constrained fit; it needs a1 > 0 instead.
void require_integrable(const FitParams& fp) {
  std::ostringstream os;
  if (!std::isfinite(fp.a2) || !std::isfinite(fp.a1) || !std::isfinite(fp.m)) {
    throw Error(ErrorCode::DegenerateFit, "non-finite fit parameters");
  }
  if (!(fp.a2 > 0 || (fp.a2 == 0 && fp.a1 > 0))) {
    os << "a2 = " << fp.a2 << ", a1 = " << fp.a1 << " give no integrable tail";
    throw Error(ErrorCode::DegenerateFit, os.str());
  }
  const double p = fp.model == FitModel::One ? 1.0 : fp.p;
  const bool ok = p < 1 ? true : p == 1 ? fp.m > -1 : fp.m >= 0;
  if (!ok) {
    os << "m = " << fp.m << " (p = " << p << ") is not integrable at 0";
    throw Error(ErrorCode::DegenerateFit, os.str());
  }
}

// Fit log-density without the constant c.
struct LogShape {
  const FitParams& fp;
  double operator()(double u) const {
    if (u <= 0) return fp.m > 0 || (fp.model == FitModel::Two && fp.p > 1) ? -INFINITY : INFINITY;
    return -fp.a2 * u * u - fp.a1 * u + fp.m * model_g(std::log(u), fp.model, fp.p);
  }
  double slope(double u) const {
    const double h = 1e-7 * std::max(u, 1e-12);
    return ((*this)(u + h) - (*this)(u - h)) / (2 * h);
  }
};

// Location of the maximum of the shape on (0, inf).
double shape_peak(const LogShape& f) {
  const FitParams& fp = f.fp;
  const double range =
      fp.a2 > 0 ? 10 * (std::abs(fp.a1) / fp.a2 + std::sqrt(std::abs(fp.m) / fp.a2) + 1 / std::sqrt(fp.a2)) + 1e-300
                : 10 * (std::abs(fp.m) + std::sqrt(std::abs(fp.m)) + 1) / fp.a1;
  const int n = 4000;
  double best = range, fbest = f(range);
  for (int i = 0; i <= n; ++i) {
    const double u = range * std::pow(1e-14, double(n - i) / n);
    const double v = f(u);
    if (v > fbest) best = u, fbest = v;
  }
  // golden-section refinement between the grid neighbours
  const double ratio = std::pow(1e-14, 1.0 / n);
  double lo = best * ratio, hi = best / ratio;
  const double g = 0.5 * (std::sqrt(5.0) - 1);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    if (f1 < f2) {
      lo = x1, x1 = x2, f1 = f2, x2 = lo + g * (hi - lo), f2 = f(x2);
    } else {
      hi = x2, x2 = x1, f2 = f1, x1 = hi - g * (hi - lo), f1 = f(x1);
    }
  }
  const double mid = 0.5 * (lo + hi);
  return f(mid) >= fbest ? mid : best;
}

// ln of the integral of exp(shape) over [a, inf).
double log_integral_from(const LogShape& f, double a, double peak) {
  const double start = std::max(a, peak);
  const double ref = start > 0 ? f(start) : f(peak);
  const FitParams& fp = f.fp;
  const double curv = fp.a2 + std::abs(fp.m) / (2 * std::max(start, 1e-300) * std::max(start, 1e-300));
  double h = curv > 0 ? 1 / std::sqrt(curv) : 1 / fp.a1;
  const double sl = std::abs(f.slope(std::max(start, 1e-300)));
  if (sl > 0) h = std::min(h, 1 / sl);
  double b = start + h;
  while (f(b) > ref - kLogCut) b = start + 2 * (b - start);

  boost::math::quadrature::tanh_sinh<double> q;
  auto integrand = [&](double u) {
    const double v = f(u) - ref;
    return v < -kLogCut ? 0.0 : std::exp(v);
  };
  double total = 0;
  if (a < start) total += q.integrate(integrand, a, start, 1e-12);
  total += q.integrate(integrand, start, b, 1e-12);
  if (!(total > 0) || !std::isfinite(total)) throw Error(ErrorCode::DegenerateFit, "tail integral is not finite");
  return ref + std::log(total);
}

}  // namespace

BinomMode binom_mode_from_string(const std::string& s) {
  if (s == "exact") return BinomMode::Exact;
  if (s == "upper-bound") return BinomMode::UpperBound;
  throw Error(ErrorCode::ConfigError, "unknown binom_mode '" + s + "'");
}

std::string to_string(BinomMode m) { return m == BinomMode::Exact ? "exact" : "upper-bound"; }

FitModel fit_model_from_string(const std::string& s) {
  if (s == "one") return FitModel::One;
  if (s == "two") return FitModel::Two;
  throw Error(ErrorCode::ConfigError, "unknown fit model '" + s + "'");
}

std::string to_string(FitModel m) { return m == FitModel::One ? "one" : "two"; }

double log_sym_dim(std::int64_t n, std::int64_t d, BinomMode mode) {
  if (n < 0 || d < 1) throw Error(ErrorCode::BadParameter, "log_sym_dim needs n >= 0 and d >= 1");
  if (mode == BinomMode::UpperBound) return double(d - 1) * std::log1p(double(n));
  return std::lgamma(double(n + d)) - std::lgamma(double(d)) - std::lgamma(double(n + 1));
}

void RegionParams::validate() const {
  if (n < 1) throw Error(ErrorCode::BadParameter, "region needs n >= 1");
  if (!(eps > 0 && eps < 1)) throw Error(ErrorCode::BadParameter, "eps must lie in (0, 1)");
  if (d2ab < 1) throw Error(ErrorCode::BadParameter, "d2ab must be >= 1");
}

double RegionParams::delta() const {
  validate();
  const double k = method == WalkMethod::State ? 2 : 3;
  if (paper_compat) {
    const double log10_s = log_sym_dim(2 * n, d2ab, BinomMode::UpperBound) / kLn10;
    return std::sqrt(2.0 / double(n) * (std::log10(2 / eps) + k * log10_s));
  }
  return std::sqrt(2.0 / double(n) * (std::log(2 / eps) + k * log_sym_dim(2 * n, d2ab, binom_mode)));
}

double RegionParams::weight_threshold_log10_gap() const {
  if (!(eps > 0) || n < 0 || d2ab < 1) throw Error(ErrorCode::BadParameter, "invalid region parameters");
  const double j = method == WalkMethod::State ? 1 : 2;
  const BinomMode mode = paper_compat ? BinomMode::UpperBound : binom_mode;
  return std::log10(eps / 2) - j * log_sym_dim(2 * n, d2ab, mode) / kLn10;
}

double enlargement_delta(const RegionParams& rp) { return rp.delta(); }
double weight_threshold(const RegionParams& rp) { return rp.weight_threshold_log10_gap(); }

double FitParams::log_density(double u) const {
  return -a2 * u * u - a1 * u + m * model_g(std::log(u), model, p) + c;
}

namespace {

struct LinearFit {
  RVector beta;
  double chi2 = INFINITY;
};

LinearFit weighted_fit(const RVector& u, const RVector& y, const RVector& w, FitModel model, double p) {
  const auto n = u.size();
  RMatrix x(n, 4);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = -u(i) * u(i);
    x(i, 1) = -u(i);
    x(i, 2) = model_g(std::log(u(i)), model, p);
    x(i, 3) = 1;
  }
  const RMatrix xw = w.asDiagonal() * x;
  const RVector yw = w.cwiseProduct(y);
  // least squares under a2 >= 0 and m >= 0: the optimum is the best feasible
  // unconstrained optimum over the four faces of the bounds
  LinearFit f;
  for (int face = 0; face < 4; ++face) {
    std::vector<int> cols;
    for (int c = 0; c < 4; ++c) {
      if ((c == 0 && (face & 1)) || (c == 2 && (face & 2))) continue;
      cols.push_back(c);
    }
    RMatrix sub(xw.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = xw.col(cols[c]);
    const RVector part = sub.colPivHouseholderQr().solve(yw);
    RVector beta = RVector::Zero(4);
    for (std::size_t c = 0; c < cols.size(); ++c) beta(cols[c]) = part(static_cast<Eigen::Index>(c));
    if (beta(0) < 0 || beta(2) < 0) continue;
    const double chi2 = (xw * beta - yw).squaredNorm();
    if (chi2 < f.chi2) f.beta = beta, f.chi2 = chi2;
  }
  return f;
}

}  // namespace

FitParams fit_histogram(const Histogram& h, FitModel model, bool mirrored) {
  const int need = model == FitModel::One ? 6 : 8;
  int populated = 0;
  std::vector<double> us, ys, ws;
  for (int i = 0; i < h.bins(); ++i) {
    if (h.counts[i] >= 10) ++populated;
    if (h.counts[i] <= 0) continue;
    const double u = mirrored ? 1 - h.center(i) : h.center(i);
    if (u <= 0) continue;
    const double sigma = h.errors[i] > 0 ? h.errors[i] / h.counts[i] : 1 / std::sqrt(h.counts[i]);
    us.push_back(u);
    ys.push_back(std::log(h.density(i)));
    ws.push_back(1 / sigma);
  }
  const int k = model == FitModel::One ? 4 : 5;
  if (populated < need || int(us.size()) <= k) {
    std::ostringstream os;
    os << populated << " bins with at least 10 counts, model " << to_string(model) << " needs " << need;
    throw Error(ErrorCode::InsufficientBins, os.str());
  }
  const RVector u = Eigen::Map<RVector>(us.data(), us.size());
  const RVector y = Eigen::Map<RVector>(ys.data(), ys.size());
  const RVector w = Eigen::Map<RVector>(ws.data(), ws.size());

  double p = 1;
  LinearFit best;
  if (model == FitModel::One) {
    best = weighted_fit(u, y, w, model, 1);
  } else {
    const double g = 0.5 * (std::sqrt(5.0) - 1);
    double lo = 0.5, hi = 3;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    LinearFit f1 = weighted_fit(u, y, w, model, x1), f2 = weighted_fit(u, y, w, model, x2);
    while (hi - lo > 1e-6) {
      if (f1.chi2 < f2.chi2) {
        hi = x2, x2 = x1, f2 = f1, x1 = hi - g * (hi - lo), f1 = weighted_fit(u, y, w, model, x1);
      } else {
        lo = x1, x1 = x2, f1 = f2, x2 = lo + g * (hi - lo), f2 = weighted_fit(u, y, w, model, x2);
      }
    }
    p = f1.chi2 < f2.chi2 ? x1 : x2;
    best = f1.chi2 < f2.chi2 ? f1 : f2;
  }

  FitParams fp;
  fp.model = model;
  fp.constrained = best.beta(0) == 0 || best.beta(2) == 0;
  fp.a2 = best.beta(0);
  fp.a1 = best.beta(1);
  fp.m = best.beta(2);
  fp.c = best.beta(3);
  fp.p = p;
  fp.bins_used = static_cast<int>(us.size());
  fp.reduced_chi2 = best.chi2 / double(us.size() - k);
  fp.mirrored = mirrored;
  require_integrable(fp);
  return fp;
}

QuantumErrorBars quantum_error_bars(const FitParams& fp) {
  if (fp.model != FitModel::One) throw Error(ErrorCode::BadParameter, "quantum error bars need a model-one fit");
  require_integrable(fp);
  const double disc = fp.a1 * fp.a1 + 8 * fp.a2 * fp.m;
  if (disc < 0) throw Error(ErrorCode::DegenerateFit, "a1^2 + 8 a2 m < 0");
  // stationary point of the shape, in the cancellation-free form for a1 >= 0
  // (which also covers a2 = 0)
  const double u0 = fp.a1 >= 0 ? 2 * fp.m / (fp.a1 + std::sqrt(disc)) : (-fp.a1 + std::sqrt(disc)) / (4 * fp.a2);
  if (!(u0 > 0)) throw Error(ErrorCode::DegenerateFit, "fitted peak is not positive");
  const double width2 = fp.a2 + fp.m / (2 * u0 * u0);
  if (!(width2 > 0)) throw Error(ErrorCode::DegenerateFit, "non-positive curvature at the peak");
  QuantumErrorBars q;
  q.delta = 1 / std::sqrt(width2);
  q.gamma = fp.m * std::pow(q.delta, 4) / (6 * u0 * u0 * u0);
  q.v0 = u0;
  if (fp.mirrored) {
    q.v0 = 1 - u0;
    q.gamma = -q.gamma;
  }
  return q;
}

FitParams fit_from_error_bars(const QuantumErrorBars& q) {
  if (!(q.v0 > 0) || !(q.delta > 0)) throw Error(ErrorCode::BadParameter, "need v0 > 0 and delta > 0");
  FitParams fp;
  fp.m = 6 * q.gamma * std::pow(q.v0, 3) / std::pow(q.delta, 4);
  fp.a2 = 1 / (q.delta * q.delta) - fp.m / (2 * q.v0 * q.v0);
  fp.a1 = fp.m / q.v0 - 2 * fp.a2 * q.v0;
  if (fp.a2 < 0) throw Error(ErrorCode::DegenerateFit, "error bars imply a2 < 0");
  return fp;
}

double log_upper_tail(const FitParams& fp, double u) {
  require_integrable(fp);
  const LogShape f{fp};
  const double peak = shape_peak(f);
  const double lz = log_integral_from(f, 0.0, peak);
  if (u <= 0) return 0.0;
  return std::min(0.0, log_integral_from(f, u, peak) - lz);
}

double tail_quantile(const FitParams& fp, double target_log10) {
  if (!(target_log10 <= 0)) throw Error(ErrorCode::BadParameter, "target_log10 must be <= 0");
  require_integrable(fp);
  const LogShape f{fp};
  const double peak = shape_peak(f);
  const double lz = log_integral_from(f, 0.0, peak);
  const double target = target_log10 * kLn10;
  auto tail = [&](double u) { return u <= 0 ? 0.0 : log_integral_from(f, u, peak) - lz; };
  auto to_figure = [&](double u) { return fp.mirrored ? 1 - u : u; };
  if (target_log10 == 0) return to_figure(0.0);
  double lo = 0, hi = 1;
  if (tail(hi) > target) {
    std::ostringstream os;
    os << "log10 weight beyond the end of the codomain is " << tail(hi) / kLn10 << " > " << target_log10;
    throw Error(ErrorCode::TargetUnreachable, os.str());
  }
  while (hi - lo > 1e-7) {
    const double mid = 0.5 * (lo + hi);
    (tail(mid) > target ? lo : hi) = mid;
  }
  return to_figure(hi);
}

std::pair<double, double> confidence_interval(FigureKind figure, double gamma_e, double delta, int d_a) {
  if (figure == FigureKind::DiamondDistance) return {0.0, std::min(1.0, gamma_e + d_a * delta / 2)};
  return {std::max(0.0, gamma_e - d_a * delta), 1.0};
}

ConfidenceReport assemble_report(const FitParams& fp, const RegionParams& rp, FigureKind figure, int d_a) {
  if (d_a < 1) throw Error(ErrorCode::BadParameter, "d_A must be >= 1");
  const bool distance = figure == FigureKind::DiamondDistance;
  if (fp.mirrored == distance) {
    throw Error(ErrorCode::BadParameter, "a distance needs a direct fit, a fidelity a mirrored fit");
  }
  ConfidenceReport r;
  r.figure = figure;
  r.region = rp;
  r.fit = fp;
  r.delta = rp.delta();
  r.threshold_log10 = rp.weight_threshold_log10_gap();
  r.gamma_e = tail_quantile(fp, r.threshold_log10);
  std::tie(r.lo, r.hi) = confidence_interval(figure, r.gamma_e, r.delta, d_a);
  if (fp.model == FitModel::One) r.qeb = quantum_error_bars(fp);
  return r;
}

}  // namespace qpt
