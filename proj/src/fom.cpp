#include "qpt/fom.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qpt {

namespace {

void require_square_dims(const ChannelDims& dims, const char* what) {
  if (dims.d_a != dims.d_b) throw Error(ErrorCode::DimensionMismatch, std::string(what) + " needs d_A == d_B");
}

void require_size(const CMatrix& choi, const ChannelDims& dims) {
  if (choi.rows() != dims.d_choi() || choi.cols() != dims.d_choi()) {
    throw Error(ErrorCode::DimensionMismatch, "Choi matrix does not match the channel dimensions");
  }
}

RVector basis_vector(int n, int j) {
  RVector e = RVector::Zero(n);
  e(j) = 1;
  return e;
}

// Unnormalized sum_k |k>|k>.
CVector phi_tilde(int d) { return max_entangled(d) * std::sqrt(static_cast<double>(d)); }

ConicSolution solve_with_retry(ConicSolver& solver, const RVector& b, const RVector& c, SdpStats& stats,
                               const char* what) {
  ConicSolution sol = solver.solve(b, c);
  if (!sol.ok()) {
    ++stats.retries;
    solver.clear_warm_start();
    sol = solver.solve(b, c);
  }
  ++stats.solves;
  stats.iterations += sol.iterations;
  if (!sol.ok()) {
    std::ostringstream os;
    os << what << ": solver did not converge (primal residual " << sol.primal_residual << ", dual residual "
       << sol.dual_residual << ", gap " << sol.gap << ")";
    throw Error(ErrorCode::SolverFailure, os.str());
  }
  stats.max_gap = std::max(stats.max_gap, std::abs(sol.primal_value - sol.dual_value));
  return sol;
}

}  // namespace

FigureKind figure_kind_from_string(const std::string& s) {
  if (s == "diamond-distance") return FigureKind::DiamondDistance;
  if (s == "entanglement-fidelity") return FigureKind::EntanglementFidelity;
  if (s == "worst-entanglement-fidelity") return FigureKind::WorstEntanglementFidelity;
  throw Error(ErrorCode::ConfigError, "unknown figure of merit '" + s + "'");
}

std::string to_string(FigureKind k) {
  switch (k) {
    case FigureKind::DiamondDistance: return "diamond-distance";
    case FigureKind::EntanglementFidelity: return "entanglement-fidelity";
    case FigureKind::WorstEntanglementFidelity: return "worst-entanglement-fidelity";
  }
  return "unknown";
}

namespace {

RMatrix diamond_constraints(const ChannelDims& dims) {
  const int d = dims.d_choi(), da = dims.d_a, db = dims.d_b;
  const int nz = d * d, na = da * da;
  RMatrix a = RMatrix::Zero(2 * nz + na, 1 + nz);
  a.block(0, 1, nz, nz) = -RMatrix::Identity(nz, nz);
  a.block(nz, 1, nz, nz) = -RMatrix::Identity(nz, nz);
  a.block(2 * nz, 0, na, 1) = -hvec(CMatrix::Identity(da, da));
  for (int j = 0; j < nz; ++j) {
    const CMatrix z = hmat(basis_vector(nz, j), d);
    a.block(2 * nz, 1 + j, na, 1) = hvec(partial_trace(z, da, db, Keep::First));
  }
  return a;
}

std::vector<Cone> diamond_cones(const ChannelDims& dims) {
  return {{ConeKind::PsdHermitian, dims.d_choi()},
          {ConeKind::PsdHermitian, dims.d_choi()},
          {ConeKind::PsdHermitian, dims.d_a}};
}

}  // namespace

DiamondDistance::DiamondDistance(ChannelDims dims, SolverSettings settings)
    : dims_(dims), solver_(diamond_constraints(dims), diamond_cones(dims), settings) {
  c_ = RVector::Zero(solver_.cols());
  c_(0) = 1;
}

double DiamondDistance::operator()(const CMatrix& choi, const CMatrix& ref) {
  require_size(choi, dims_);
  require_size(ref, dims_);
  const int nz = dims_.d_choi() * dims_.d_choi();
  RVector b = RVector::Zero(solver_.rows());
  b.segment(nz, nz) = -hvec(static_cast<double>(dims_.d_a) * (choi - ref));
  const auto sol = solve_with_retry(solver_, b, c_, stats_, "diamond distance");
  return std::clamp(sol.primal_value, 0.0, 1.0);
}

double entanglement_fidelity(const CMatrix& choi, const ChannelDims& dims) {
  require_square_dims(dims, "entanglement fidelity");
  require_size(choi, dims);
  const CVector phi = max_entangled(dims.d_a);
  const double f = (phi.adjoint() * choi * phi)(0).real();
  return std::clamp(f, 0.0, 1.0);
}

WorstEntanglementFidelity::WorstEntanglementFidelity(ChannelDims dims, SolverSettings settings)
    : dims_(dims), settings_(settings) {
  require_square_dims(dims, "worst-case entanglement fidelity");
}

double WorstEntanglementFidelity::operator()(const CMatrix& choi) {
  require_size(choi, dims_);
  const int da = dims_.d_a, d = dims_.d_choi(), k = d + 1;
  const int na = da * da, nk = k * k;
  const CMatrix m = mat_sqrt(static_cast<double>(da) * choi);
  const CMatrix madj = m.adjoint();
  const CVector phi = phi_tilde(da);

  RMatrix a = RMatrix::Zero(1 + na + nk, 1 + na);
  RVector b = RVector::Zero(a.rows());
  a.block(0, 1, 1, na) = hvec(CMatrix::Identity(da, da)).transpose();
  b(0) = 1;
  a.block(1, 1, na, na) = -RMatrix::Identity(na, na);
  CMatrix corner = CMatrix::Zero(k, k);
  corner(d, d) = 1;
  a.block(1 + na, 0, nk, 1) = -hvec(corner);
  for (int j = 0; j < na; ++j) {
    const CMatrix rho = hmat(basis_vector(na, j), da);
    const CVector v = madj * (kron(rho, CMatrix::Identity(da, da)) * phi);
    CMatrix blk = CMatrix::Zero(k, k);
    blk.block(0, d, d, 1) = v;
    blk.block(d, 0, 1, d) = v.adjoint();
    a.block(1 + na, 1 + j, nk, 1) = -hvec(blk);
  }
  CMatrix top = CMatrix::Zero(k, k);
  top.topLeftCorner(d, d).setIdentity();
  b.segment(1 + na, nk) = hvec(top);
  RVector c = RVector::Zero(1 + na);
  c(0) = 1;

  ConicSolver solver(std::move(a), {{ConeKind::Zero, 1}, {ConeKind::PsdHermitian, da}, {ConeKind::PsdHermitian, k}},
                     settings_);
  if (last_) solver.set_warm_start(*last_);
  last_ = solve_with_retry(solver, b, c, stats_, "worst-case entanglement fidelity");
  return std::clamp(last_->primal_value, 0.0, 1.0);
}

double diamond_distance(const CMatrix& choi, const CMatrix& ref, const ChannelDims& dims) {
  DiamondDistance dd(dims);
  return dd(choi, ref);
}

double worst_entanglement_fidelity(const CMatrix& choi, const ChannelDims& dims) {
  WorstEntanglementFidelity w(dims);
  return w(choi);
}

FigureEvaluator::FigureEvaluator(FigureSpec spec, ChannelDims dims, SolverSettings settings)
    : spec_(std::move(spec)), dims_(dims) {
  switch (spec_.kind) {
    case FigureKind::DiamondDistance:
      if (spec_.reference) {
        require_size(*spec_.reference, dims_);
        require_choi(*spec_.reference, dims_, 1e-8);
        reference_ = *spec_.reference;
      } else {
        require_square_dims(dims_, "default identity reference");
        reference_ = identity_choi(dims_.d_a);
      }
      diamond_ = std::make_unique<DiamondDistance>(dims_, settings);
      break;
    case FigureKind::EntanglementFidelity: require_square_dims(dims_, "entanglement fidelity"); break;
    case FigureKind::WorstEntanglementFidelity:
      worst_ = std::make_unique<WorstEntanglementFidelity>(dims_, settings);
      break;
  }
}

double FigureEvaluator::operator()(const CMatrix& choi) {
  switch (spec_.kind) {
    case FigureKind::DiamondDistance: return (*diamond_)(choi, reference_);
    case FigureKind::EntanglementFidelity: return entanglement_fidelity(choi, dims_);
    case FigureKind::WorstEntanglementFidelity: return (*worst_)(choi);
  }
  return 0;
}

double FigureEvaluator::of_bipartite(const CMatrix& rho_ref_out, double floor) {
  return (*this)(bipartite_to_channel(rho_ref_out, dims_, floor));
}

SdpStats FigureEvaluator::stats() const {
  if (diamond_) return diamond_->stats();
  if (worst_) return worst_->stats();
  return {};
}

}  // namespace qpt
