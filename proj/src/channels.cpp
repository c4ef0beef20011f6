#include "qpt/channels.hpp"

#include <cmath>
#include <sstream>

namespace qpt {

ChannelDims::ChannelDims(int a, int b) : d_a(a), d_b(b) {
  if (a < 1 || b < 1) throw Error(ErrorCode::BadParameter, "channel dimensions must be >= 1");
}

ChannelSample::ChannelSample(ChannelDims dims, CMatrix u)
    : dims_(dims), u_(std::move(u)), choi_(sample_to_choi(u_, dims_)) {}

CVector reference_state(const ChannelDims& dims) {
  const int du = dims.d_u();
  CVector psi = CVector::Zero(static_cast<Eigen::Index>(dims.d_a) * du);
  const double s = 1.0 / std::sqrt(static_cast<double>(dims.d_a));
  for (int i = 0; i < dims.d_a; ++i) psi(i * du + reference_column(dims, i)) = s;
  return psi;
}

CMatrix isometry_to_choi(const CMatrix& columns, const ChannelDims& dims) {
  const int da = dims.d_a, db = dims.d_b, de = dims.d_env();
  // Row (i, b) of y holds the B-slice b of column i, reshaped over A'B'.
  CMatrix y(da * db, de);
  for (int i = 0; i < da; ++i)
    for (int b = 0; b < db; ++b)
      for (int e = 0; e < de; ++e) y(i * db + b, e) = columns(b * de + e, i);
  CMatrix choi = y * y.adjoint();
  choi /= static_cast<double>(da);
  return choi;
}

CMatrix sample_to_choi(const CMatrix& u, const ChannelDims& dims) {
  if (u.rows() != dims.d_u() || u.cols() != dims.d_u()) {
    throw Error(ErrorCode::DimensionMismatch, "sample_to_choi: u is not d_u x d_u");
  }
  if (unitarity_residual(u) > 1e-10) throw Error(ErrorCode::NotUnitary, "sample_to_choi");
  CMatrix cols(dims.d_u(), dims.d_a);
  for (int i = 0; i < dims.d_a; ++i) cols.col(i) = u.col(reference_column(dims, i));
  return isometry_to_choi(cols, dims);
}

CMatrix apply_channel(const CMatrix& choi, const CMatrix& rho, const ChannelDims& dims) {
  const int da = dims.d_a, db = dims.d_b;
  if (choi.rows() != da * db || choi.cols() != da * db || rho.rows() != da || rho.cols() != da) {
    throw Error(ErrorCode::DimensionMismatch, "apply_channel");
  }
  // d_A sum_{a,a'} rho^T(a', a) J[(a, .), (a', .)] = d_A sum rho(a, a') J_block(a, a')
  CMatrix out = CMatrix::Zero(db, db);
  for (int a = 0; a < da; ++a)
    for (int ap = 0; ap < da; ++ap) out += rho(a, ap) * choi.block(a * db, ap * db, db, db);
  return static_cast<double>(da) * out;
}

CMatrix choi_of_kraus(const std::vector<CMatrix>& kraus, int d_in) {
  if (kraus.empty()) throw Error(ErrorCode::BadParameter, "no Kraus operators");
  const int d_out = static_cast<int>(kraus.front().rows());
  const CVector phi = max_entangled(d_in);
  CMatrix choi = CMatrix::Zero(d_in * d_out, d_in * d_out);
  for (const auto& k : kraus) {
    if (k.cols() != d_in || k.rows() != d_out) {
      throw Error(ErrorCode::DimensionMismatch, "Kraus operator shape");
    }
    const CVector v = kron(CMatrix::Identity(d_in, d_in), k) * phi;
    choi += v * v.adjoint();
  }
  return choi;
}

CMatrix identity_choi(int d) {
  const CVector phi = max_entangled(d);
  return phi * phi.adjoint();
}

CMatrix depolarizing(double p, int d) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::BadParameter, "depolarizing: p outside [0,1]");
  if (d < 1) throw Error(ErrorCode::BadParameter, "depolarizing: d < 1");
  const int n = d * d;
  return p * identity_choi(d) + (1.0 - p) / n * CMatrix::Identity(n, n);
}

double choi_constraint_residual(const CMatrix& choi, const ChannelDims& dims) {
  const int n = dims.d_choi();
  if (choi.rows() != n || choi.cols() != n) return INFINITY;
  double r = hermitian_residual(choi);
  r = std::max(r, std::abs(choi.trace().real() - 1.0));
  const CMatrix marg = partial_trace(choi, dims.d_a, dims.d_b, Keep::First);
  r = std::max(r, (marg - CMatrix::Identity(dims.d_a, dims.d_a) / dims.d_a).cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (choi + choi.adjoint()), Eigen::EigenvaluesOnly);
  r = std::max(r, -es.eigenvalues()(0));
  return r;
}

void require_choi(const CMatrix& choi, const ChannelDims& dims, double tol) {
  const double r = choi_constraint_residual(choi, dims);
  if (!(r <= tol)) {
    std::ostringstream os;
    os << "not a valid Choi matrix (residual " << r << ")";
    throw Error(ErrorCode::BadParameter, os.str());
  }
}

CMatrix bipartite_to_channel(const CMatrix& rho, const ChannelDims& dims, double floor) {
  const int dp = dims.d_a, db = dims.d_b;
  if (rho.rows() != dp * db || rho.cols() != dp * db) {
    throw Error(ErrorCode::DimensionMismatch, "bipartite_to_channel");
  }
  const CMatrix marg = partial_trace(rho, dp, db, Keep::First);
  const CMatrix inv = kron(mat_inv_sqrt(marg, floor), CMatrix::Identity(db, db));
  CMatrix choi = inv * rho * inv / static_cast<double>(dp);
  return 0.5 * (choi + choi.adjoint());
}

CMatrix channel_to_bipartite(const CMatrix& choi, const CMatrix& sigma_ref, const ChannelDims& dims) {
  const CMatrix s = kron(mat_sqrt(sigma_ref), CMatrix::Identity(dims.d_b, dims.d_b));
  CMatrix rho = static_cast<double>(dims.d_a) * s * choi * s;
  return 0.5 * (rho + rho.adjoint());
}

}  // namespace qpt
