#pragma once

// Small dense conic solver: operator splitting on the homogeneous self-dual
// embedding of
//
//     minimize  c^T x   subject to  A x + s = b,  s in K,
//
// where K is a product of zero cones, nonnegative orthants and PSD cones
// (real symmetric, or complex Hermitian stored in "hvec" coordinates).
// The factorization of I + A^T A depends only on A and is reused across
// solves that change b and c, which is the pattern of the per-sample
// figure-of-merit programs.

#include <iosfwd>
#include <optional>
#include <vector>

#include "qpt/qmat.hpp"

namespace qpt {

enum class ConeKind { Zero, NonNegative, PsdReal, PsdHermitian };

struct Cone {
  ConeKind kind;
  int size;  // entries for Zero/NonNegative, matrix order for PSD cones

  int vector_length() const;
};

struct ConicProblem {
  RMatrix a;
  RVector b;
  RVector c;
  std::vector<Cone> cones;
};

struct SolverSettings {
  double tol = 1e-7;
  int max_iter = 50000;
  double relaxation = 1.5;
  int check_every = 10;
};

enum class SolveStatus { Solved, NoConvergence, Infeasible };

struct ConicSolution {
  SolveStatus status = SolveStatus::NoConvergence;
  double primal_value = 0;
  double dual_value = 0;
  int iterations = 0;
  double primal_residual = 0;
  double dual_residual = 0;
  double gap = 0;  // relative duality gap
  RVector x, y, s;

  bool ok() const { return status == SolveStatus::Solved; }
};

// Vectorizations with <X, Y> = Re tr(X Y) preserved.
RVector hvec(const CMatrix& h);
CMatrix hmat(const RVector& v, int k);
RVector svec(const RMatrix& s);
RMatrix smat(const RVector& v, int k);

/// Standard complex-to-real map  H -> [[Re H, -Im H], [Im H, Re H]].
RMatrix embed_hermitian(const CMatrix& h);
CMatrix extract_hermitian(const RMatrix& r);

/// Nearest PSD matrix in Frobenius norm (eigenvalue clipping).
CMatrix psd_project(const CMatrix& m);

/// Projection of a vector onto the cone K (or its dual, which is the same
/// set except for zero cones whose dual is the full space).
void project_cone(std::vector<Cone> const& cones, Eigen::Ref<RVector> v, bool dual);

class ConicSolver {
 public:
  ConicSolver(RMatrix a, std::vector<Cone> cones, SolverSettings settings = {});

  ConicSolution solve(const RVector& b, const RVector& c);
  void clear_warm_start() { warm_.reset(); }
  void set_warm_start(const ConicSolution& previous);

  int rows() const { return static_cast<int>(a_.rows()); }
  int cols() const { return static_cast<int>(a_.cols()); }
  const SolverSettings& settings() const { return settings_; }

 private:
  void solve_m(const RVector& rx, const RVector& ry, RVector& x, RVector& y) const;

  RMatrix a_;
  std::vector<Cone> cones_;
  SolverSettings settings_;
  Eigen::LLT<RMatrix> chol_;  // I + A^T A

  struct Warm {
    RVector x, y, s;
  };
  std::optional<Warm> warm_;
};

/// One-shot solve.
ConicSolution solve(const ConicProblem& p, double tol = 1e-7, int max_iter = 50000);

/// Plain-text dump: sizes, cones, then the rows of [A | b] and c.
void write_problem_text(std::ostream& os, const ConicProblem& p);

}  // namespace qpt
