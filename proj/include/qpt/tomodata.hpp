#pragma once

// Tomography datasets and their likelihood. Both schemes are reduced to the
// same form p_k = tr(J E~_k) on the Choi matrix J:
//
//   prepare-measure   E~ = d_A sigma^T (x) E
//   ancilla-assisted  E~ = d_A (K (x) 1)^dagger E (K (x) 1),  K = C^T
//
// where psi_AP = sum C[a, p] |a>|p>. Ancilla-assisted effects act on
// reference (x) output, i.e. H_P (x) H_B.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qpt/channels.hpp"

namespace qpt {

enum class Scheme { PrepareMeasure, AncillaAssisted };

struct Setting {
  std::optional<CMatrix> input;  // prepare-measure only
  std::vector<CMatrix> effects;
  std::vector<std::int64_t> counts;
};

struct Dataset {
  Scheme scheme = Scheme::PrepareMeasure;
  ChannelDims dims;
  CVector input_entangled;  // ancilla-assisted only, ordered A (x) P
  std::vector<Setting> settings;

  std::int64_t total_n() const;
};

/// Checks completeness, shapes, counts and the Schmidt rank of psi_AP.
void validate(const Dataset& ds);

/// psi_AP = sqrt(d_A) (sigma^{1/2} (x) 1)|Phi>, a purification of sigma.
CVector entangled_input(const CMatrix& sigma_a);

inline constexpr double kProbabilityFloor = 1e-300;

struct LogLikelihood {
  double value = 0;
  std::int64_t clamps = 0;  // effects with nonzero count and p < floor
};

/// Precomputed linear map from hvec(J) to outcome probabilities; the
/// per-evaluation cost is one dense mat-vec.
class LikelihoodModel {
 public:
  explicit LikelihoodModel(const Dataset& ds);

  LogLikelihood operator()(const CMatrix& choi) const;
  RVector probabilities(const CMatrix& choi) const;

  /// Same likelihood for raw bipartite states rho_PB with the
  /// ancilla-assisted effects (no channel normalization).
  LogLikelihood of_bipartite(const CMatrix& rho_ref_out) const;

  const ChannelDims& dims() const { return dims_; }
  std::int64_t total_n() const { return total_n_; }

 private:
  LogLikelihood evaluate(const RVector& x, const RMatrix& r) const;

  ChannelDims dims_;
  RMatrix r_;      // rows: effects with nonzero count
  RMatrix raw_;    // AA only: rows hvec(E) for of_bipartite
  RMatrix all_;    // every effect, for probabilities()
  RVector n_;
  std::int64_t total_n_ = 0;
  bool ancilla_ = false;
};

LogLikelihood log_likelihood(const Dataset& ds, const CMatrix& choi);

/// Draws counts for every setting of the template; existing counts are
/// replaced. Multinomial via sequential conditional binomials.
Dataset simulate(const CMatrix& true_choi, const Dataset& templ, std::int64_t shots, Rng& rng);

enum class SettingsKind { PauliQubit, GellMannQutrit, PauliNQubit };

SettingsKind settings_kind_from_string(const std::string& s);
std::string to_string(SettingsKind k);

/// Projective single-system measurements: each inner list is the rank-1
/// eigenprojectors of one observable.
std::vector<std::vector<CMatrix>> single_system_povms(SettingsKind kind, int n_qubits = 1);

/// Template dataset with zero counts. Prepare-measure templates use every
/// eigenstate of every observable as a preparation; ancilla-assisted
/// templates measure all products of observables on P and B and use
/// input_sigma (default maximally mixed) for psi_AP.
Dataset standard_settings(SettingsKind kind, Scheme scheme, int n_qubits = 1,
                          const std::optional<CMatrix>& input_sigma = std::nullopt);

/// Least-squares fit of the Born probabilities to the observed frequencies,
/// made positive, mixed with a little of the maximally mixed channel and
/// renormalized onto the Choi constraints. Used as a chain starting point.
CMatrix linear_inversion_estimate(const Dataset& ds, double mix = 1e-3);

/// Every count n -> floor(alpha n).
Dataset rescale_counts(const Dataset& ds, double alpha);

}  // namespace qpt
