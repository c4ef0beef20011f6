#include "qpt/tomodata.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qpt/sdpcore.hpp"

namespace qpt {

namespace {

int effect_dim(const Dataset& ds) {
  return ds.scheme == Scheme::PrepareMeasure ? ds.dims.d_b : ds.dims.d_a * ds.dims.d_b;
}

CMatrix coefficient_matrix(const CVector& psi, int da) {
  CMatrix c(da, da);
  for (int a = 0; a < da; ++a)
    for (int p = 0; p < da; ++p) c(a, p) = psi(a * da + p);
  return c;
}

// Effect on the Choi matrix for every (setting, outcome) pair, in order.
std::vector<CMatrix> choi_effects(const Dataset& ds) {
  const int da = ds.dims.d_a, db = ds.dims.d_b;
  std::vector<CMatrix> out;
  if (ds.scheme == Scheme::PrepareMeasure) {
    for (const auto& s : ds.settings) {
      const CMatrix st = static_cast<double>(da) * s.input->transpose();
      for (const auto& e : s.effects) out.push_back(kron(st, e));
    }
  } else {
    const CMatrix k = coefficient_matrix(ds.input_entangled, da).transpose();
    const CMatrix kk = kron(k, CMatrix::Identity(db, db));
    for (const auto& s : ds.settings)
      for (const auto& e : s.effects) {
        CMatrix t = static_cast<double>(da) * kk.adjoint() * e * kk;
        out.push_back(0.5 * (t + t.adjoint()));
      }
  }
  return out;
}

CMatrix pauli(int which) {
  CMatrix m(2, 2);
  switch (which) {
    case 0: m << 0, 1, 1, 0; break;
    case 1: m << 0, cplx(0, -1), cplx(0, 1), 0; break;
    default: m << 1, 0, 0, -1; break;
  }
  return m;
}

std::vector<CMatrix> gell_mann() {
  std::vector<CMatrix> g(8, CMatrix::Zero(3, 3));
  const cplx i(0, 1);
  g[0](0, 1) = g[0](1, 0) = 1;
  g[1](0, 1) = -i;
  g[1](1, 0) = i;
  g[2](0, 0) = 1;
  g[2](1, 1) = -1;
  g[3](0, 2) = g[3](2, 0) = 1;
  g[4](0, 2) = -i;
  g[4](2, 0) = i;
  g[5](1, 2) = g[5](2, 1) = 1;
  g[6](1, 2) = -i;
  g[6](2, 1) = i;
  g[7](0, 0) = g[7](1, 1) = 1 / std::sqrt(3.0);
  g[7](2, 2) = -2 / std::sqrt(3.0);
  return g;
}

// Rank-1 eigenprojectors, descending eigenvalue; diagonal observables use the
// computational basis so that degenerate ones still give d outcomes.
std::vector<CMatrix> eigenprojectors(const CMatrix& obs) {
  const int d = static_cast<int>(obs.rows());
  std::vector<CMatrix> out;
  CMatrix off = obs;
  off.diagonal().setZero();
  if (off.cwiseAbs().maxCoeff() == 0.0) {
    std::vector<int> idx(d);
    for (int k = 0; k < d; ++k) idx[k] = k;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int x, int y) { return obs(x, x).real() > obs(y, y).real(); });
    for (int k : idx) {
      CMatrix p = CMatrix::Zero(d, d);
      p(k, k) = 1;
      out.push_back(p);
    }
    return out;
  }
  const auto e = eigh(obs);
  for (int k = d - 1; k >= 0; --k) {
    const CVector v = e.vectors.col(k);
    out.push_back(v * v.adjoint());
  }
  return out;
}

std::vector<CMatrix> tensor_povm(const std::vector<CMatrix>& a, const std::vector<CMatrix>& b) {
  std::vector<CMatrix> out;
  for (const auto& x : a)
    for (const auto& y : b) out.push_back(kron(x, y));
  return out;
}

}  // namespace

std::int64_t Dataset::total_n() const {
  std::int64_t n = 0;
  for (const auto& s : settings)
    for (auto c : s.counts) n += c;
  return n;
}

void validate(const Dataset& ds) {
  const int de = effect_dim(ds);
  for (std::size_t j = 0; j < ds.settings.size(); ++j) {
    const auto& s = ds.settings[j];
    std::ostringstream where;
    where << "setting " << j << ": ";
    if (s.effects.empty()) throw Error(ErrorCode::BadPOVM, where.str() + "no effects");
    if (s.counts.size() != s.effects.size()) {
      throw Error(ErrorCode::DimensionMismatch, where.str() + "counts and effects differ in length");
    }
    CMatrix sum = CMatrix::Zero(de, de);
    for (const auto& e : s.effects) {
      if (e.rows() != de || e.cols() != de) {
        throw Error(ErrorCode::DimensionMismatch, where.str() + "effect has the wrong size");
      }
      if (hermitian_residual(e) > 1e-9) throw Error(ErrorCode::BadPOVM, where.str() + "effect not Hermitian");
      if (eigh(e).values(0) < -1e-9) throw Error(ErrorCode::BadPOVM, where.str() + "effect not PSD");
      sum += e;
    }
    if ((sum - CMatrix::Identity(de, de)).cwiseAbs().maxCoeff() > 1e-9) {
      throw Error(ErrorCode::BadPOVM, where.str() + "effects do not sum to identity");
    }
    for (auto c : s.counts)
      if (c < 0) throw Error(ErrorCode::BadParameter, where.str() + "negative count");
    if (ds.scheme == Scheme::PrepareMeasure) {
      if (!s.input) throw Error(ErrorCode::BadParameter, where.str() + "missing input state");
      if (s.input->rows() != ds.dims.d_a) throw Error(ErrorCode::DimensionMismatch, where.str() + "input size");
      require_state(*s.input);
    }
  }
  if (ds.scheme == Scheme::AncillaAssisted) {
    const int da = ds.dims.d_a;
    if (ds.input_entangled.size() != da * da) {
      throw Error(ErrorCode::DimensionMismatch, "input_entangled must have d_A^2 entries");
    }
    if (std::abs(ds.input_entangled.norm() - 1.0) > 1e-8) {
      throw Error(ErrorCode::NotState, "input_entangled is not normalized");
    }
    Eigen::JacobiSVD<CMatrix> svd(coefficient_matrix(ds.input_entangled, da));
    if (svd.singularValues()(da - 1) < 1e-10) {
      throw Error(ErrorCode::RankDeficient, "input_entangled does not have full Schmidt rank");
    }
  }
}

CVector entangled_input(const CMatrix& sigma_a) {
  require_state(sigma_a);
  const int d = static_cast<int>(sigma_a.rows());
  const CMatrix r = mat_sqrt(sigma_a);
  CVector psi(d * d);
  for (int a = 0; a < d; ++a)
    for (int p = 0; p < d; ++p) psi(a * d + p) = r(a, p);
  return psi;
}

LikelihoodModel::LikelihoodModel(const Dataset& ds) : dims_(ds.dims) {
  validate(ds);
  const auto eff = choi_effects(ds);
  const int n = dims_.d_choi() * dims_.d_choi();
  std::vector<std::size_t> keep;
  std::vector<std::int64_t> counts;
  std::size_t idx = 0;
  for (const auto& s : ds.settings)
    for (auto c : s.counts) {
      if (c > 0) {
        keep.push_back(idx);
        counts.push_back(c);
      }
      ++idx;
    }
  r_.resize(static_cast<Eigen::Index>(keep.size()), n);
  n_.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    r_.row(static_cast<Eigen::Index>(i)) = hvec(eff[keep[i]]).transpose();
    n_(static_cast<Eigen::Index>(i)) = static_cast<double>(counts[i]);
    total_n_ += counts[i];
  }
  ancilla_ = ds.scheme == Scheme::AncillaAssisted;
  if (ancilla_) {
    raw_.resize(r_.rows(), n);
    std::size_t flat = 0, out = 0;
    for (const auto& s : ds.settings)
      for (std::size_t k = 0; k < s.effects.size(); ++k, ++flat)
        if (out < keep.size() && keep[out] == flat) {
          raw_.row(static_cast<Eigen::Index>(out++)) = hvec(s.effects[k]).transpose();
        }
  }
  all_ = RMatrix(static_cast<Eigen::Index>(eff.size()), n);
  for (std::size_t i = 0; i < eff.size(); ++i) all_.row(static_cast<Eigen::Index>(i)) = hvec(eff[i]).transpose();
}

LogLikelihood LikelihoodModel::evaluate(const RVector& x, const RMatrix& r) const {
  const RVector p = r * x;
  LogLikelihood out;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    double q = p(i);
    if (!(q >= kProbabilityFloor)) {
      q = kProbabilityFloor;
      ++out.clamps;
    }
    out.value += n_(i) * std::log(q);
  }
  return out;
}

LogLikelihood LikelihoodModel::operator()(const CMatrix& choi) const {
  if (choi.rows() != dims_.d_choi()) throw Error(ErrorCode::DimensionMismatch, "likelihood: Choi size");
  return evaluate(hvec(choi), r_);
}

LogLikelihood LikelihoodModel::of_bipartite(const CMatrix& rho) const {
  if (!ancilla_) {
    throw Error(ErrorCode::Unsupported, "bipartite likelihood needs an ancilla-assisted dataset");
  }
  if (rho.rows() != dims_.d_choi()) throw Error(ErrorCode::DimensionMismatch, "likelihood: state size");
  return evaluate(hvec(rho), raw_);
}

RVector LikelihoodModel::probabilities(const CMatrix& choi) const { return all_ * hvec(choi); }

LogLikelihood log_likelihood(const Dataset& ds, const CMatrix& choi) { return LikelihoodModel(ds)(choi); }

Dataset simulate(const CMatrix& true_choi, const Dataset& templ, std::int64_t shots, Rng& rng) {
  if (shots < 0) throw Error(ErrorCode::BadParameter, "negative shot count");
  Dataset ds = templ;
  for (auto& s : ds.settings) s.counts.assign(s.effects.size(), 0);
  validate(ds);
  require_choi(true_choi, ds.dims, 1e-8);
  const auto eff = choi_effects(ds);
  std::size_t idx = 0;
  for (auto& s : ds.settings) {
    std::vector<double> p(s.effects.size());
    double total = 0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      p[k] = std::max(0.0, (true_choi * eff[idx + k]).trace().real());
      total += p[k];
    }
    idx += p.size();
    std::int64_t remaining = shots;
    double mass = total;
    for (std::size_t k = 0; k + 1 < p.size() && remaining > 0; ++k) {
      const double q = mass > 0 ? std::clamp(p[k] / mass, 0.0, 1.0) : 0.0;
      std::binomial_distribution<std::int64_t> bin(remaining, q);
      const std::int64_t n = bin(rng);
      s.counts[k] = n;
      remaining -= n;
      mass -= p[k];
    }
    s.counts.back() += remaining;
  }
  return ds;
}

SettingsKind settings_kind_from_string(const std::string& s) {
  if (s == "pauli-qubit") return SettingsKind::PauliQubit;
  if (s == "gellmann-qutrit") return SettingsKind::GellMannQutrit;
  if (s == "pauli-n-qubit") return SettingsKind::PauliNQubit;
  throw Error(ErrorCode::Unsupported, "unknown settings kind '" + s + "'");
}

std::string to_string(SettingsKind k) {
  switch (k) {
    case SettingsKind::PauliQubit: return "pauli-qubit";
    case SettingsKind::GellMannQutrit: return "gellmann-qutrit";
    case SettingsKind::PauliNQubit: return "pauli-n-qubit";
  }
  return "unknown";
}

std::vector<std::vector<CMatrix>> single_system_povms(SettingsKind kind, int n_qubits) {
  std::vector<std::vector<CMatrix>> out;
  switch (kind) {
    case SettingsKind::PauliQubit:
      for (int w = 0; w < 3; ++w) out.push_back(eigenprojectors(pauli(w)));
      break;
    case SettingsKind::GellMannQutrit:
      for (const auto& g : gell_mann()) out.push_back(eigenprojectors(g));
      break;
    case SettingsKind::PauliNQubit: {
      if (n_qubits < 1 || n_qubits > 4) throw Error(ErrorCode::Unsupported, "pauli-n-qubit needs 1..4 qubits");
      const auto one = single_system_povms(SettingsKind::PauliQubit);
      out = one;
      for (int q = 1; q < n_qubits; ++q) {
        std::vector<std::vector<CMatrix>> next;
        for (const auto& a : out)
          for (const auto& b : one) next.push_back(tensor_povm(a, b));
        out = std::move(next);
      }
      break;
    }
  }
  return out;
}

Dataset standard_settings(SettingsKind kind, Scheme scheme, int n_qubits,
                          const std::optional<CMatrix>& input_sigma) {
  const auto povms = single_system_povms(kind, n_qubits);
  const int d = static_cast<int>(povms.front().front().rows());
  Dataset ds;
  ds.scheme = scheme;
  ds.dims = ChannelDims(d, d);
  if (scheme == Scheme::PrepareMeasure) {
    for (const auto& prep : povms)
      for (const auto& rho : prep)
        for (const auto& m : povms) ds.settings.push_back({rho, m, std::vector<std::int64_t>(m.size(), 0)});
  } else {
    const CMatrix sigma = input_sigma ? *input_sigma : CMatrix(CMatrix::Identity(d, d) / double(d));
    if (sigma.rows() != d) throw Error(ErrorCode::DimensionMismatch, "input state size");
    ds.input_entangled = entangled_input(sigma);
    for (const auto& mp : povms)
      for (const auto& mb : povms) {
        auto eff = tensor_povm(mp, mb);
        const auto k = eff.size();
        ds.settings.push_back({std::nullopt, std::move(eff), std::vector<std::int64_t>(k, 0)});
      }
  }
  return ds;
}

CMatrix linear_inversion_estimate(const Dataset& ds, double mix) {
  validate(ds);
  if (!(mix > 0.0 && mix <= 1.0)) throw Error(ErrorCode::BadParameter, "mix must lie in (0, 1]");
  const auto eff = choi_effects(ds);
  const int d = ds.dims.d_choi();
  RMatrix r(static_cast<Eigen::Index>(eff.size()), d * d);
  RVector f(r.rows());
  std::size_t idx = 0;
  for (const auto& s : ds.settings) {
    std::int64_t n = 0;
    for (auto c : s.counts) n += c;
    for (std::size_t k = 0; k < s.effects.size(); ++k, ++idx) {
      r.row(static_cast<Eigen::Index>(idx)) = hvec(eff[idx]).transpose();
      // settings without data carry no information; a uniform guess keeps them neutral
      f(static_cast<Eigen::Index>(idx)) =
          n > 0 ? double(s.counts[k]) / double(n) : 1.0 / double(s.effects.size());
    }
  }
  const RVector x = r.completeOrthogonalDecomposition().solve(f);
  CMatrix j = hmat(x, d);
  const CMatrix mixed = CMatrix::Identity(d, d) / double(d);
  j = psd_project(0.5 * (j + j.adjoint()));
  const double tr = j.trace().real();
  j = tr > 0 ? CMatrix((1 - mix) * j / tr + mix * mixed) : mixed;
  // restore the uniform input marginal exactly
  const CMatrix marg = partial_trace(j, ds.dims.d_a, ds.dims.d_b, Keep::First);
  const CMatrix w = kron(mat_inv_sqrt(marg, 0.0), CMatrix::Identity(ds.dims.d_b, ds.dims.d_b));
  CMatrix out = w * j * w / double(ds.dims.d_a);
  return 0.5 * (out + out.adjoint());
}

Dataset rescale_counts(const Dataset& ds, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorCode::BadParameter, "alpha must lie in (0, 1]");
  Dataset out = ds;
  for (auto& s : out.settings)
    for (auto& c : s.counts) {
      // guard against alpha * n landing just below an integer through round-off
      c = static_cast<std::int64_t>(std::floor(alpha * static_cast<double>(c) * (1 + 1e-12)));
    }
  return out;
}

}  // namespace qpt
