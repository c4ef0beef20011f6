#pragma once

// Dense complex linear algebra and the handful of quantum-information
// primitives (partial trace, fidelity, Haar unitaries) the rest of the
// library is written against.

#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "qpt/error.hpp"

namespace qpt {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Rng = std::mt19937_64;

struct HermitianEigen {
  RVector values;   // ascending
  CMatrix vectors;  // columns are eigenvectors
};

/// Largest entry of |m - m^dagger|.
double hermitian_residual(const CMatrix& m);

/// Largest entry of |u^dagger u - 1|.
double unitarity_residual(const CMatrix& u);

/// Hermitian eigendecomposition. The input is symmetrized before solving;
/// throws NonHermitian if the asymmetry exceeds 1e-8.
HermitianEigen eigh(const CMatrix& m);

/// Rebuild V f(diag) V^dagger from a decomposition.
template <typename F>
CMatrix spectral_apply(const HermitianEigen& e, F&& f) {
  RVector mapped(e.values.size());
  for (Eigen::Index i = 0; i < e.values.size(); ++i) mapped(i) = f(e.values(i));
  return e.vectors * mapped.asDiagonal() * e.vectors.adjoint();
}

/// Eigenvalues below zero but above this are treated as round-off.
inline constexpr double kPsdTolerance = 1e-10;

CMatrix mat_sqrt(const CMatrix& m);
CMatrix mat_inv_sqrt(const CMatrix& m, double floor);

enum class Keep { First, Second };

/// Partial trace of an operator on H_X (x) H_Y, keeping one factor.
CMatrix partial_trace(const CMatrix& m, int d_x, int d_y, Keep keep);

CMatrix kron(const CMatrix& a, const CMatrix& b);

/// Uhlmann fidelity tr sqrt(sqrt(s) t sqrt(s)) (not squared).
double fidelity(const CMatrix& s, const CMatrix& t);

/// sqrt(1 - F^2).
double purified_distance(const CMatrix& s, const CMatrix& t);

double trace_norm(const CMatrix& m);
double op_norm(const CMatrix& m);

/// Haar-distributed unitary from a Ginibre matrix by QR with the phases of
/// R's diagonal absorbed into Q.
CMatrix haar_unitary(int d, Rng& rng);

/// Matrix with i.i.d. complex normal entries, E|z|^2 = 2 sigma^2
/// (real and imaginary parts each have standard deviation sigma).
CMatrix complex_gaussian(int rows, int cols, double sigma, Rng& rng);

/// Random density matrix from the partial trace of a Haar pure state on
/// H_d (x) H_env (Hilbert-Schmidt measure when env == d).
CMatrix random_density(int d, int env, Rng& rng);

/// |Phi> = d^{-1/2} sum_k |k>|k>.
CVector max_entangled(int d);

/// Throws NotState unless m is PSD with unit trace within tol.
void require_state(const CMatrix& m, double tol = 1e-8);

}  // namespace qpt
