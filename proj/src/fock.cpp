#include "nelson/fock.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nelson {

namespace {

std::int64_t binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::int64_t r = 1;
  for (std::int64_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
  }
  return r;
}

}  // namespace

ModeGrid::ModeGrid(int d, double L, double Lambda, double mass)
    : d_(d), L_(L), Lambda_(Lambda), mass_(mass) {
  if (d != 1 && d != 3) throw std::invalid_argument("dimension must be 1 or 3");
  if (L <= 0.0) throw std::invalid_argument("box length must be positive");
  if (Lambda <= 0.0) throw std::invalid_argument("cutoff must be positive");
  if (mass < 0.0) throw std::invalid_argument("mass must be non-negative");

  dk_ = 2.0 * pi / L;
  cell_ = std::pow(dk_, d);
  const int jmax = static_cast<int>(std::floor(Lambda / dk_));

  auto push = [&](int j0, int j1, int j2) {
    Mode m;
    m.idx = {j0, j1, j2};
    m.k = {j0 * dk_, j1 * dk_, j2 * dk_};
    const double k2 = m.k_norm2();
    if (k2 > Lambda * Lambda * (1.0 + 1e-12)) return;
    if (mass == 0.0 && j0 == 0 && j1 == 0 && j2 == 0) return;  // g diverges
    m.omega = std::sqrt(k2 + mass * mass);
    m.g = std::sqrt(cell_) * std::pow(2.0 * pi, -0.5 * d) /
          std::sqrt(2.0 * m.omega);
    for (int a = 0; a < 3; ++a) m.theta[a] = m.g * m.k[a];
    modes_.push_back(m);
  };

  if (d == 1) {
    for (int j = -jmax; j <= jmax; ++j) push(j, 0, 0);
  } else {
    for (int j0 = -jmax; j0 <= jmax; ++j0)
      for (int j1 = -jmax; j1 <= jmax; ++j1)
        for (int j2 = -jmax; j2 <= jmax; ++j2) push(j0, j1, j2);
  }
  if (modes_.empty()) throw std::invalid_argument("empty mode grid");

  neg_.assign(modes_.size(), -1);
  for (std::size_t a = 0; a < modes_.size(); ++a) {
    for (std::size_t b = 0; b < modes_.size(); ++b) {
      if (modes_[b].idx[0] == -modes_[a].idx[0] &&
          modes_[b].idx[1] == -modes_[a].idx[1] &&
          modes_[b].idx[2] == -modes_[a].idx[2]) {
        neg_[a] = static_cast<int>(b);
        break;
      }
    }
    if (neg_[a] < 0) throw std::logic_error("mode grid not symmetric");
  }
}

double ModeGrid::kappa_sq_norm() const {
  return size() * cell_ * std::pow(2.0 * pi, -d_);
}

double ModeGrid::eta_sq_norm() const {
  double s = 0.0;
  for (const Mode& m : modes_) s += m.g * m.g;
  return s;
}

double ModeGrid::theta_sq_norm() const {
  double s = 0.0;
  for (const Mode& m : modes_) s += m.g * m.g * m.k_norm2();
  return s;
}

cplx ModeGrid::phase(int j, const std::array<double, 3>& x) const {
  const Mode& m = modes_.at(j);
  double kx = 0.0;
  for (int a = 0; a < d_; ++a) kx += m.k[a] * x[a];
  return std::polar(1.0, kx);
}

std::int64_t fock_dimension(int mode_count, int n_max) {
  return binomial(mode_count + n_max, n_max);
}

FockBasis::FockBasis(int mode_count, int n_max) : M_(mode_count), n_max_(n_max) {
  if (mode_count < 1) throw std::invalid_argument("mode count must be >= 1");
  if (n_max < 0) throw std::invalid_argument("n_max must be >= 0");
  const std::int64_t dim = fock_dimension(mode_count, n_max);
  if (dim > kMaxDimension) throw std::invalid_argument("basis too large");

  tuples_.reserve(dim);
  std::vector<int> occ(M_, 0);
  // graded order: total boson number first, lexicographic within each grade
  for (int total = 0; total <= n_max_; ++total) {
    std::fill(occ.begin(), occ.end(), 0);
    occ[M_ - 1] = total;
    auto emit = [&](auto&& self, int slot, int remaining) -> void {
      if (slot == M_ - 1) {
        occ[slot] = remaining;
        tuples_.push_back(occ);
        totals_.push_back(total);
        return;
      }
      for (int n = 0; n <= remaining; ++n) {
        occ[slot] = n;
        self(self, slot + 1, remaining - n);
      }
      occ[slot] = 0;
    };
    emit(emit, 0, total);
  }

  index_.reserve(tuples_.size() * 2);
  for (std::size_t i = 0; i < tuples_.size(); ++i) {
    index_[key_of(tuples_[i])] = static_cast<int>(i);
  }
  if (index_.size() != tuples_.size()) throw std::logic_error("index collision");
}

std::uint64_t FockBasis::key_of(const std::vector<int>& occ) const {
  // n_max <= 62 in practice, so base n_max+1 digits fit into 64 bits for the
  // basis sizes allowed by kMaxDimension
  std::uint64_t key = 0;
  const std::uint64_t base = static_cast<std::uint64_t>(n_max_) + 2;
  for (int n : occ) key = key * base + static_cast<std::uint64_t>(n);
  return key;
}

int FockBasis::index_of(const std::vector<int>& occ) const {
  int total = 0;
  for (int n : occ) total += n;
  if (total > n_max_) return -1;
  auto it = index_.find(key_of(occ));
  return it == index_.end() ? -1 : it->second;
}

SparseOperator SparseOperator::adjoint() const {
  SparseOperator out;
  out.mat = mat.adjoint();
  out.hermitian = hermitian;
  return out;
}

ModeGrid make_mode_grid(int d, double L, double Lambda, double mass) {
  return ModeGrid(d, L, Lambda, mass);
}

FockBasis make_fock_basis(int mode_count, int n_max) {
  return FockBasis(mode_count, n_max);
}

SparseOperator annihilator(const FockBasis& basis, int j) {
  if (j < 0 || j >= basis.mode_count())
    throw std::invalid_argument("invalid mode index");
  std::vector<Eigen::Triplet<cplx>> trip;
  std::vector<int> occ;
  for (int i = 0; i < basis.size(); ++i) {
    occ = basis.tuple(i);
    if (occ[j] == 0) continue;
    const double amp = std::sqrt(static_cast<double>(occ[j]));
    occ[j] -= 1;
    const int row = basis.index_of(occ);
    trip.emplace_back(row, i, cplx(amp, 0.0));
  }
  SparseOperator op;
  op.mat.resize(basis.size(), basis.size());
  op.mat.setFromTriplets(trip.begin(), trip.end());
  return op;
}

SparseOperator creator(const FockBasis& basis, int j) {
  // adjoint of the annihilator: transitions out of the n_max sector dropped
  return annihilator(basis, j).adjoint();
}

SparseOperator number_operator(const FockBasis& basis) {
  std::vector<Eigen::Triplet<cplx>> trip;
  for (int i = 0; i < basis.size(); ++i) {
    trip.emplace_back(i, i, cplx(basis.total_bosons(i), 0.0));
  }
  SparseOperator op;
  op.mat.resize(basis.size(), basis.size());
  op.mat.setFromTriplets(trip.begin(), trip.end());
  op.hermitian = true;
  return op;
}

SparseOperator free_field_hamiltonian(const FockBasis& basis,
                                      const ModeGrid& grid) {
  if (basis.mode_count() != grid.size())
    throw std::invalid_argument("mode count mismatch between basis and grid");
  std::vector<Eigen::Triplet<cplx>> trip;
  for (int i = 0; i < basis.size(); ++i) {
    double e = 0.0;
    const auto& occ = basis.tuple(i);
    for (int j = 0; j < grid.size(); ++j) e += grid.mode(j).omega * occ[j];
    trip.emplace_back(i, i, cplx(e, 0.0));
  }
  SparseOperator op;
  op.mat.resize(basis.size(), basis.size());
  op.mat.setFromTriplets(trip.begin(), trip.end());
  op.hermitian = true;
  return op;
}

namespace {

/// sum_j c_j a_j as a sparse matrix.
SpMat mode_sum_annihilators(const FockBasis& basis, const Vec& c) {
  std::vector<Eigen::Triplet<cplx>> trip;
  std::vector<int> occ;
  for (int i = 0; i < basis.size(); ++i) {
    const auto& t = basis.tuple(i);
    for (int j = 0; j < basis.mode_count(); ++j) {
      if (t[j] == 0 || c[j] == cplx(0.0)) continue;
      occ = t;
      occ[j] -= 1;
      const int row = basis.index_of(occ);
      trip.emplace_back(row, i, c[j] * std::sqrt(static_cast<double>(t[j])));
    }
  }
  SpMat m(basis.size(), basis.size());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

}  // namespace

std::pair<SparseOperator, SparseOperator> field_operator_parts(
    const ModeGrid& grid, const FockBasis& basis,
    const std::array<double, 3>& x) {
  if (basis.mode_count() != grid.size())
    throw std::invalid_argument("mode count mismatch between basis and grid");
  Vec c(grid.size());
  for (int j = 0; j < grid.size(); ++j) c[j] = grid.mode(j).g * grid.phase(j, x);
  SparseOperator plus;
  plus.mat = mode_sum_annihilators(basis, c);
  SparseOperator minus;
  minus.mat = plus.mat.adjoint();
  return {plus, minus};
}

SparseOperator field_operator(const ModeGrid& grid, const FockBasis& basis,
                              const std::array<double, 3>& x) {
  auto [plus, minus] = field_operator_parts(grid, basis, x);
  SparseOperator op;
  op.mat = plus.mat + minus.mat;
  op.hermitian = true;
  return op;
}

SparseOperator field_gradient(const ModeGrid& grid, const FockBasis& basis,
                              const std::array<double, 3>& x, int axis) {
  if (axis < 0 || axis >= grid.dimension())
    throw std::invalid_argument("invalid gradient axis");
  Vec c(grid.size());
  for (int j = 0; j < grid.size(); ++j) {
    c[j] = cplx(0.0, 1.0) * grid.mode(j).theta[axis] * grid.phase(j, x);
  }
  SparseOperator op;
  SpMat plus = mode_sum_annihilators(basis, c);
  op.mat = plus + SpMat(plus.adjoint());
  op.hermitian = true;
  return op;
}

Vec vacuum(const FockBasis& basis) {
  Vec v = Vec::Zero(basis.size());
  v[0] = 1.0;
  return v;
}

SparseOperator displacement_generator(const FockBasis& basis, const Vec& f) {
  if (f.size() != basis.mode_count())
    throw std::invalid_argument("amplitude count mismatch");
  SpMat minus = mode_sum_annihilators(basis, -f.conjugate());
  SparseOperator op;
  op.mat = minus + SpMat(SpMat(minus.adjoint()) * cplx(-1.0));
  return op;
}

WeylResult weyl_displace(const FockBasis& basis, const Vec& f, const Vec& psi,
                         double tol) {
  if (f.size() != basis.mode_count())
    throw std::invalid_argument("amplitude count mismatch");
  if (psi.size() != basis.size())
    throw std::invalid_argument("state dimension mismatch");
  if (tol <= 0.0) throw std::invalid_argument("tol must be positive");

  const double norm_in = psi.norm();
  if (f.norm() == 0.0) return {psi, 0.0};

  SpMat gen = displacement_generator(basis, f).mat;
  // ||gen|| <~ 2 ||f|| sqrt(n_max+1); substep so each Taylor series is short
  const double bound =
      2.0 * f.norm() * std::sqrt(static_cast<double>(basis.max_bosons() + 1));
  const int substeps = std::max(1, static_cast<int>(std::ceil(bound / 0.5)));
  const double inv = 1.0 / substeps;

  Vec state = psi;
  const int max_terms = 64;
  for (int s = 0; s < substeps; ++s) {
    Vec term = state;
    Vec acc = state;
    bool converged = false;
    for (int k = 1; k <= max_terms; ++k) {
      term = (gen * term) * (inv / k);
      acc += term;
      if (term.norm() <= tol * std::max(1.0, acc.norm())) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw std::runtime_error(
          "weyl_displace: exponential iteration did not converge, residual " +
          std::to_string(term.norm()));
    }
    state = acc;
  }
  return {state, norm_in - state.norm()};
}

WeylResult coherent_state(const FockBasis& basis, const Vec& alpha,
                          double tol) {
  return weyl_displace(basis, alpha, vacuum(basis), tol);
}

int suggest_n_max(double mean_n) {
  return static_cast<int>(std::ceil(mean_n)) +
         6 * static_cast<int>(std::ceil(std::sqrt(mean_n + 1.0)));
}

}  // namespace nelson
