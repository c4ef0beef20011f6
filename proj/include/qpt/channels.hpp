#pragma once

// Channel representations. Choi matrices are stored on H_in (x) H_out
// ("input-output" ordering), row-major index a * d_out + b, normalized to
// unit trace:  J(L) = (id (x) L)(|Phi><Phi|),  tr_out J = 1/d_in.
//
// The channel-space walker parametrizes channels through a unitary U acting
// on B A' B' applied to a fixed purification |Psi0> of the maximally mixed
// input marginal.

#include <vector>

#include "qpt/qmat.hpp"

namespace qpt {

struct ChannelDims {
  int d_a = 1;
  int d_b = 1;

  ChannelDims() = default;
  ChannelDims(int a, int b);

  int d_env() const { return d_a * d_b; }         // A'B'
  int d_u() const { return d_b * d_env(); }       // B A'B'
  int d_choi() const { return d_a * d_b; }        // A B

  bool operator==(const ChannelDims&) const = default;
};

/// A channel drawn from the Stinespring parametrization; immutable.
class ChannelSample {
 public:
  ChannelSample(ChannelDims dims, CMatrix u);

  const ChannelDims& dims() const { return dims_; }
  const CMatrix& u() const { return u_; }
  const CMatrix& choi() const { return choi_; }

 private:
  ChannelDims dims_;
  CMatrix u_;
  CMatrix choi_;
};

/// |Psi0> = d_A^{-1/2} sum_i |i>_A |0>_B |i>_A' |0>_B', ordered A,B,A',B'.
CVector reference_state(const ChannelDims& dims);

/// Index in the B A' B' space of the reference vector v_i.
inline int reference_column(const ChannelDims& dims, int i) { return i * dims.d_b; }

/// Choi matrix of tr_{A'B'} (1 (x) u)|Psi0><Psi0|(1 (x) u^dagger).
CMatrix sample_to_choi(const CMatrix& u, const ChannelDims& dims);

/// Same map but only the d_A columns of u that touch |Psi0> are given
/// (as a d_u x d_A isometry). Used in the walker's inner loop.
CMatrix isometry_to_choi(const CMatrix& columns, const ChannelDims& dims);

/// L(rho) = d_A tr_A(J (rho^T (x) 1_B)); linear, so rho need not be a state.
CMatrix apply_channel(const CMatrix& choi, const CMatrix& rho, const ChannelDims& dims);

/// Choi matrix of rho -> sum_k K rho K^dagger.
CMatrix choi_of_kraus(const std::vector<CMatrix>& kraus, int d_in);

/// Choi matrix of p rho + (1 - p) tr(rho) 1/d.
CMatrix depolarizing(double p, int d);

/// Projector onto the maximally entangled state on d (x) d.
CMatrix identity_choi(int d);

/// Structural checks: PSD, trace 1 and uniform input marginal within tol.
double choi_constraint_residual(const CMatrix& choi, const ChannelDims& dims);
void require_choi(const CMatrix& choi, const ChannelDims& dims, double tol = 1e-8);

inline constexpr double kRankFloor = 1e-12;

/// Inverts rho = d_A (rho_P^{1/2} (x) 1) J (rho_P^{1/2} (x) 1) for a bipartite
/// state ordered reference (x) output. Throws RankDeficient when the reference
/// marginal has an eigenvalue below floor.
CMatrix bipartite_to_channel(const CMatrix& rho_ref_out, const ChannelDims& dims,
                             double floor = kRankFloor);

/// Forward map used by the round-trip tests and the factorization check.
CMatrix channel_to_bipartite(const CMatrix& choi, const CMatrix& sigma_ref,
                             const ChannelDims& dims);

}  // namespace qpt
