#pragma once

// Figures of merit on channels (Choi matrices in input (x) output order)
// and the induced figure on bipartite reference (x) output states.

#include <memory>
#include <optional>
#include <string>

#include "qpt/channels.hpp"
#include "qpt/sdpcore.hpp"

namespace qpt {

enum class FigureKind { DiamondDistance, EntanglementFidelity, WorstEntanglementFidelity };

FigureKind figure_kind_from_string(const std::string& s);
std::string to_string(FigureKind k);

struct FigureSpec {
  FigureKind kind = FigureKind::DiamondDistance;
  std::optional<CMatrix> reference;  // diamond distance only; identity when absent

  bool larger_better() const { return kind != FigureKind::DiamondDistance; }
};

struct SdpStats {
  long solves = 0;
  long iterations = 0;
  long retries = 0;
  double max_gap = 0;  // largest |primal - dual| over all solves
};

/// ½||L - L_ref||_diamond through the dual program
///   minimize t  s.t.  Z >= 0,  Z >= d_A (J - J_ref),  t 1 - tr_B Z >= 0.
/// The constraint matrix depends only on the dimensions, so one factorization
/// serves every call and consecutive calls warm start.
class DiamondDistance {
 public:
  explicit DiamondDistance(ChannelDims dims, SolverSettings settings = {});

  double operator()(const CMatrix& choi, const CMatrix& ref);
  const SdpStats& stats() const { return stats_; }

 private:
  ChannelDims dims_;
  ConicSolver solver_;
  RVector c_;
  SdpStats stats_;
};

/// <Phi|J|Phi>.
double entanglement_fidelity(const CMatrix& choi, const ChannelDims& dims);

/// min over input states rho of the squared fidelity between a purification
/// of rho and its image, as the program
///   minimize mu  s.t.  tr rho = 1,  rho >= 0,  [[1, v], [v^dagger, mu]] >= 0,
/// with v = M^dagger (rho (x) 1)|Phi~> and M = (d_A J)^{1/2}.
class WorstEntanglementFidelity {
 public:
  explicit WorstEntanglementFidelity(ChannelDims dims, SolverSettings settings = {});

  double operator()(const CMatrix& choi);
  const SdpStats& stats() const { return stats_; }

 private:
  ChannelDims dims_;
  SolverSettings settings_;
  SdpStats stats_;
  std::optional<ConicSolution> last_;
};

double diamond_distance(const CMatrix& choi, const CMatrix& ref, const ChannelDims& dims);
double worst_entanglement_fidelity(const CMatrix& choi, const ChannelDims& dims);

/// A figure bound to its solver state. One instance per chain.
class FigureEvaluator {
 public:
  FigureEvaluator(FigureSpec spec, ChannelDims dims, SolverSettings settings = {});

  double operator()(const CMatrix& choi);

  /// Figure of the channel T(rho) = d_A^{-1} rho_P^{-1/2} rho rho_P^{-1/2};
  /// throws RankDeficient when the reference marginal is below floor.
  double of_bipartite(const CMatrix& rho_ref_out, double floor = kRankFloor);

  const FigureSpec& spec() const { return spec_; }
  const ChannelDims& dims() const { return dims_; }
  SdpStats stats() const;

 private:
  FigureSpec spec_;
  ChannelDims dims_;
  CMatrix reference_;
  std::unique_ptr<DiamondDistance> diamond_;
  std::unique_ptr<WorstEntanglementFidelity> worst_;
};

}  // namespace qpt
