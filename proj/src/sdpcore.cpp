#include "qpt/sdpcore.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace qpt {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

void check_cones(const std::vector<Cone>& cones, Eigen::Index rows) {
  Eigen::Index total = 0;
  for (const auto& c : cones) {
    if (c.size < 0) throw Error(ErrorCode::BadParameter, "negative cone size");
    total += c.vector_length();
  }
  if (total != rows) throw Error(ErrorCode::DimensionMismatch, "cone sizes do not match rows of A");
}

}  // namespace

int Cone::vector_length() const {
  switch (kind) {
    case ConeKind::Zero:
    case ConeKind::NonNegative: return size;
    case ConeKind::PsdReal: return size * (size + 1) / 2;
    case ConeKind::PsdHermitian: return size * size;
  }
  return 0;
}

RVector hvec(const CMatrix& h) {
  const auto k = h.rows();
  RVector v(k * k);
  Eigen::Index p = 0;
  for (Eigen::Index i = 0; i < k; ++i) {
    v(p++) = h(i, i).real();
    for (Eigen::Index j = i + 1; j < k; ++j) {
      const cplx z = 0.5 * (h(i, j) + std::conj(h(j, i)));
      v(p++) = kSqrt2 * z.real();
      v(p++) = kSqrt2 * z.imag();
    }
  }
  return v;
}

CMatrix hmat(const RVector& v, int k) {
  if (v.size() != static_cast<Eigen::Index>(k) * k) {
    throw Error(ErrorCode::DimensionMismatch, "hmat: wrong vector length");
  }
  CMatrix h(k, k);
  Eigen::Index p = 0;
  for (int i = 0; i < k; ++i) {
    h(i, i) = v(p++);
    for (int j = i + 1; j < k; ++j) {
      const cplx z(v(p) / kSqrt2, v(p + 1) / kSqrt2);
      p += 2;
      h(i, j) = z;
      h(j, i) = std::conj(z);
    }
  }
  return h;
}

RVector svec(const RMatrix& s) {
  const auto k = s.rows();
  RVector v(k * (k + 1) / 2);
  Eigen::Index p = 0;
  for (Eigen::Index i = 0; i < k; ++i) {
    v(p++) = s(i, i);
    for (Eigen::Index j = i + 1; j < k; ++j) v(p++) = kSqrt2 * 0.5 * (s(i, j) + s(j, i));
  }
  return v;
}

RMatrix smat(const RVector& v, int k) {
  if (v.size() != static_cast<Eigen::Index>(k) * (k + 1) / 2) {
    throw Error(ErrorCode::DimensionMismatch, "smat: wrong vector length");
  }
  RMatrix s(k, k);
  Eigen::Index p = 0;
  for (int i = 0; i < k; ++i) {
    s(i, i) = v(p++);
    for (int j = i + 1; j < k; ++j) s(i, j) = s(j, i) = v(p++) / kSqrt2;
  }
  return s;
}

RMatrix embed_hermitian(const CMatrix& h) {
  const auto k = h.rows();
  RMatrix r(2 * k, 2 * k);
  r.topLeftCorner(k, k) = h.real();
  r.topRightCorner(k, k) = -h.imag();
  r.bottomLeftCorner(k, k) = h.imag();
  r.bottomRightCorner(k, k) = h.real();
  return r;
}

CMatrix extract_hermitian(const RMatrix& r) {
  if (r.rows() != r.cols() || r.rows() % 2 != 0) {
    throw Error(ErrorCode::DimensionMismatch, "extract_hermitian: need a 2k x 2k matrix");
  }
  const auto k = r.rows() / 2;
  CMatrix h(k, k);
  // average the two copies so that a slightly asymmetric iterate still maps sensibly
  h.real() = 0.5 * (r.topLeftCorner(k, k) + r.bottomRightCorner(k, k));
  h.imag() = 0.5 * (r.bottomLeftCorner(k, k) - r.topRightCorner(k, k));
  return h;
}

CMatrix psd_project(const CMatrix& m) {
  const auto e = eigh(m);
  return spectral_apply(e, [](double x) { return std::max(x, 0.0); });
}

void project_cone(std::vector<Cone> const& cones, Eigen::Ref<RVector> v, bool dual) {
  Eigen::Index p = 0;
  for (const auto& c : cones) {
    const int len = c.vector_length();
    auto seg = v.segment(p, len);
    switch (c.kind) {
      case ConeKind::Zero:
        if (!dual) seg.setZero();
        break;
      case ConeKind::NonNegative: seg = seg.cwiseMax(0.0); break;
      case ConeKind::PsdReal: {
        if (c.size == 0) break;
        Eigen::SelfAdjointEigenSolver<RMatrix> es(smat(seg, c.size));
        const RVector lam = es.eigenvalues().cwiseMax(0.0);
        seg = svec(es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose());
        break;
      }
      case ConeKind::PsdHermitian: {
        if (c.size == 0) break;
        Eigen::SelfAdjointEigenSolver<CMatrix> es(hmat(seg, c.size));
        const RVector lam = es.eigenvalues().cwiseMax(0.0);
        seg = hvec(es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint());
        break;
      }
    }
    p += len;
  }
}

ConicSolver::ConicSolver(RMatrix a, std::vector<Cone> cones, SolverSettings settings)
    : a_(std::move(a)), cones_(std::move(cones)), settings_(settings) {
  check_cones(cones_, a_.rows());
  if (settings_.tol <= 0 || settings_.max_iter < 1 || settings_.relaxation <= 0 ||
      settings_.relaxation >= 2 || settings_.check_every < 1) {
    throw Error(ErrorCode::BadParameter, "invalid solver settings");
  }
  const auto n = a_.cols();
  RMatrix g = RMatrix::Identity(n, n);
  g.noalias() += a_.transpose() * a_;
  chol_.compute(g);
  if (chol_.info() != Eigen::Success) throw Error(ErrorCode::SolverFailure, "factorization failed");
}

void ConicSolver::set_warm_start(const ConicSolution& previous) {
  if (previous.ok() && previous.x.size() == a_.cols() && previous.y.size() == a_.rows()) {
    warm_ = Warm{previous.x, previous.y, previous.s};
  }
}

void ConicSolver::solve_m(const RVector& rx, const RVector& ry, RVector& x, RVector& y) const {
  x = chol_.solve(rx - a_.transpose() * ry);
  y = ry;
  y.noalias() += a_ * x;
}

ConicSolution ConicSolver::solve(const RVector& b, const RVector& c) {
  const auto m = a_.rows(), n = a_.cols();
  if (b.size() != m || c.size() != n) throw Error(ErrorCode::DimensionMismatch, "solve: b or c size");

  RVector px, py;
  solve_m(c, b, px, py);
  const double denom = 1.0 + c.dot(px) + b.dot(py);

  RVector ux = RVector::Zero(n), uy = RVector::Zero(m), vs = RVector::Zero(m);
  double ut = 1.0, vt = 1.0;
  RVector vx = RVector::Zero(n);
  if (warm_ && warm_->x.size() == n && warm_->y.size() == m) {
    ux = warm_->x;
    uy = warm_->y;
    vs = warm_->s;
    vt = 0.0;
  }

  const double alpha = settings_.relaxation;
  const double nb = b.norm(), nc = c.norm();
  ConicSolution sol;
  RVector tx, ty, wx, wy;
  RVector ax(m), aty(n);

  for (int it = 1; it <= settings_.max_iter; ++it) {
    // linear step: (I + Q) u~ = u + v
    wx = ux + vx;
    wy = uy + vs;
    const double wt = ut + vt;
    solve_m(wx, wy, tx, ty);
    const double tt = (wt + c.dot(tx) + b.dot(ty)) / denom;
    tx -= tt * px;
    ty -= tt * py;

    // over-relaxation
    const RVector rx = alpha * tx + (1 - alpha) * ux;
    const RVector ry = alpha * ty + (1 - alpha) * uy;
    const double rt = alpha * tt + (1 - alpha) * ut;

    // cone step
    ux = rx - vx;
    uy = ry - vs;
    ut = std::max(rt - vt, 0.0);
    project_cone(cones_, uy, true);

    // dual update
    vx += ux - rx;
    vs += uy - ry;
    vt += ut - rt;

    if (it % settings_.check_every != 0 && it != settings_.max_iter) continue;

    sol.iterations = it;
    if (ut > 1e-12 * std::max(1.0, vt)) {
      const RVector x = ux / ut, y = uy / ut, s = vs / ut;
      ax.noalias() = a_ * x;
      aty.noalias() = a_.transpose() * y;
      const double pobj = c.dot(x), dobj = -b.dot(y);
      sol.primal_residual = (ax + s - b).norm() / (1.0 + nb);
      sol.dual_residual = (aty + c).norm() / (1.0 + nc);
      sol.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
      sol.primal_value = pobj;
      sol.dual_value = dobj;
      if (sol.primal_residual <= settings_.tol && sol.dual_residual <= settings_.tol &&
          sol.gap <= settings_.tol) {
        sol.status = SolveStatus::Solved;
        sol.x = x;
        sol.y = y;
        sol.s = s;
        warm_ = Warm{x, y, s};
        return sol;
      }
    } else if (vt > 0) {
      // tau -> 0 with kappa > 0: look for an infeasibility certificate
      const double by = b.dot(uy), cx = c.dot(ux);
      aty.noalias() = a_.transpose() * uy;
      ax.noalias() = a_ * ux;
      const bool primal_inf = by < 0 && aty.norm() <= settings_.tol * -by * 1e3;
      const bool dual_inf = cx < 0 && (ax + vs).norm() <= settings_.tol * -cx * 1e3;
      if (primal_inf || dual_inf) {
        sol.status = SolveStatus::Infeasible;
        warm_.reset();
        return sol;
      }
    }
  }
  sol.status = SolveStatus::NoConvergence;
  warm_.reset();
  return sol;
}

ConicSolution solve(const ConicProblem& p, double tol, int max_iter) {
  SolverSettings s;
  s.tol = tol;
  s.max_iter = max_iter;
  ConicSolver solver(p.a, p.cones, s);
  return solver.solve(p.b, p.c);
}

void write_problem_text(std::ostream& os, const ConicProblem& p) {
  os << "rows " << p.a.rows() << " cols " << p.a.cols() << "\n";
  os << "cones";
  for (const auto& c : p.cones) {
    const char* name = c.kind == ConeKind::Zero          ? "zero"
                       : c.kind == ConeKind::NonNegative ? "nonneg"
                       : c.kind == ConeKind::PsdReal     ? "psd"
                                                         : "hpsd";
    os << " " << name << ":" << c.size;
  }
  os << "\nc";
  for (Eigen::Index j = 0; j < p.c.size(); ++j) os << " " << p.c(j);
  os << "\n";
  for (Eigen::Index i = 0; i < p.a.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.a.cols(); ++j) os << p.a(i, j) << " ";
    os << "| " << p.b(i) << "\n";
  }
}

}  // namespace qpt
