#include "qpt/qmat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qpt {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonHermitian: return "NonHermitian";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotState: return "NotState";
    case ErrorCode::NotUnitary: return "NotUnitary";
    case ErrorCode::BadParameter: return "BadParameter";
    case ErrorCode::BadPOVM: return "BadPOVM";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::TuningFailed: return "TuningFailed";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::InsufficientBins: return "InsufficientBins";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::TargetUnreachable: return "TargetUnreachable";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

double hermitian_residual(const CMatrix& m) {
  if (m.rows() != m.cols()) return INFINITY;
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

double unitarity_residual(const CMatrix& u) {
  if (u.rows() != u.cols()) return INFINITY;
  const auto n = u.rows();
  return (u.adjoint() * u - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
}

HermitianEigen eigh(const CMatrix& m) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "eigh needs a square matrix");
  }
  const double asym = hermitian_residual(m);
  if (asym > 1e-8) {
    std::ostringstream os;
    os << "asymmetry " << asym;
    throw Error(ErrorCode::NonHermitian, os.str());
  }
  const CMatrix sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::NoConvergence, "Hermitian eigensolver did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

CMatrix mat_sqrt(const CMatrix& m) {
  const auto e = eigh(m);
  if (e.values.size() > 0 && e.values(0) < -kPsdTolerance) {
    std::ostringstream os;
    os << "min eigenvalue " << e.values(0);
    throw Error(ErrorCode::NotPSD, os.str());
  }
  return spectral_apply(e, [](double x) { return std::sqrt(std::max(x, 0.0)); });
}

CMatrix mat_inv_sqrt(const CMatrix& m, double floor) {
  const auto e = eigh(m);
  if (e.values.size() > 0 && e.values(0) < -kPsdTolerance) {
    std::ostringstream os;
    os << "min eigenvalue " << e.values(0);
    throw Error(ErrorCode::NotPSD, os.str());
  }
  if (e.values.size() > 0 && e.values(0) < floor) {
    std::ostringstream os;
    os << "min eigenvalue " << e.values(0) << " below floor " << floor;
    throw Error(ErrorCode::RankDeficient, os.str());
  }
  return spectral_apply(e, [](double x) { return 1.0 / std::sqrt(x); });
}

CMatrix partial_trace(const CMatrix& m, int d_x, int d_y, Keep keep) {
  if (d_x < 1 || d_y < 1 || m.rows() != m.cols() || m.rows() != d_x * d_y) {
    throw Error(ErrorCode::DimensionMismatch, "partial_trace: operator is not on d_x*d_y");
  }
  if (keep == Keep::First) {
    CMatrix out = CMatrix::Zero(d_x, d_x);
    for (int i = 0; i < d_x; ++i)
      for (int j = 0; j < d_x; ++j) {
        cplx s = 0;
        for (int k = 0; k < d_y; ++k) s += m(i * d_y + k, j * d_y + k);
        out(i, j) = s;
      }
    return out;
  }
  CMatrix out = CMatrix::Zero(d_y, d_y);
  for (int k = 0; k < d_x; ++k) out += m.block(k * d_y, k * d_y, d_y, d_y);
  return out;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

void require_state(const CMatrix& m, double tol) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorCode::NotState, "not a square matrix");
  }
  if (hermitian_residual(m) > tol) throw Error(ErrorCode::NotState, "not Hermitian");
  if (std::abs(m.trace().real() - 1.0) > tol) throw Error(ErrorCode::NotState, "trace != 1");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  if (es.eigenvalues()(0) < -tol) throw Error(ErrorCode::NotState, "negative eigenvalue");
}

double fidelity(const CMatrix& s, const CMatrix& t) {
  require_state(s);
  require_state(t);
  if (s.rows() != t.rows()) throw Error(ErrorCode::DimensionMismatch, "fidelity: size mismatch");
  const CMatrix rs = mat_sqrt(s);
  const CMatrix inner = rs * t * rs;
  const auto e = eigh(0.5 * (inner + inner.adjoint()));
  // eigenvalues at round-off level would contribute their square root
  const double cutoff = 64 * std::numeric_limits<double>::epsilon() * static_cast<double>(s.rows()) *
                        std::max(1.0, e.values.cwiseAbs().maxCoeff());
  double f = 0;
  for (Eigen::Index i = 0; i < e.values.size(); ++i) {
    if (e.values(i) > cutoff) f += std::sqrt(e.values(i));
  }
  return std::clamp(f, 0.0, 1.0);
}

double purified_distance(const CMatrix& s, const CMatrix& t) {
  const double f = fidelity(s, t);
  return std::sqrt(std::max(0.0, 1.0 - f * f));
}

double trace_norm(const CMatrix& m) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::DimensionMismatch, "trace_norm: not square");
  if (hermitian_residual(m) <= 1e-12) return eigh(m).values.cwiseAbs().sum();
  return Eigen::JacobiSVD<CMatrix>(m).singularValues().sum();
}

double op_norm(const CMatrix& m) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::DimensionMismatch, "op_norm: not square");
  if (m.size() == 0) return 0.0;
  if (hermitian_residual(m) <= 1e-12) return eigh(m).values.cwiseAbs().maxCoeff();
  return Eigen::JacobiSVD<CMatrix>(m).singularValues()(0);
}

CMatrix complex_gaussian(int rows, int cols, double sigma, Rng& rng) {
  std::normal_distribution<double> n(0.0, sigma);
  CMatrix g(rows, cols);
  // column-major fill order is part of the determinism contract
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) {
      const double re = n(rng);
      const double im = n(rng);
      g(i, j) = cplx(re, im);
    }
  return g;
}

CMatrix haar_unitary(int d, Rng& rng) {
  if (d < 1) throw Error(ErrorCode::BadParameter, "haar_unitary: d < 1");
  const CMatrix g = complex_gaussian(d, d, std::sqrt(0.5), rng);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ() * CMatrix::Identity(d, d);
  const CMatrix& r = qr.matrixQR();
  for (int j = 0; j < d; ++j) {
    const cplx diag = r(j, j);
    const double a = std::abs(diag);
    const cplx phase = a > 0 ? diag / a : cplx(1.0, 0.0);
    q.col(j) *= phase;
  }
  return q;
}

CMatrix random_density(int d, int env, Rng& rng) {
  const CMatrix g = complex_gaussian(d, env, 1.0, rng);
  CMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return rho;
}

CVector max_entangled(int d) {
  CVector v = CVector::Zero(static_cast<Eigen::Index>(d) * d);
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  for (int k = 0; k < d; ++k) v(k * d + k) = s;
  return v;
}

}  // namespace qpt
