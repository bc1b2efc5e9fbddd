#include "nelson/manybody.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace nelson {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct NelsonOperator::Plans {
  std::vector<fftw_plan> fwd, bwd;
  Vec scratch;
};

NelsonOperator::NelsonOperator(std::shared_ptr<const SpatialGrid> grid,
                               std::shared_ptr<const ModeGrid> modes,
                               std::shared_ptr<const FockBasis> basis, int N,
                               bool coupling)
    : grid_(std::move(grid)),
      modes_(std::move(modes)),
      basis_(std::move(basis)),
      N_(N),
      coupling_(coupling) {
  if (N_ < 1) throw std::invalid_argument("N must be >= 1");
  if (basis_->mode_count() != modes_->size())
    throw std::invalid_argument("mode count mismatch between basis and grid");
  if (grid_->dimension() != modes_->dimension())
    throw std::invalid_argument("spatial and mode grids disagree in dimension");

  S_ = grid_->size();
  F_ = basis_->size();
  dim_ = F_;
  for (int p = 0; p < N_; ++p) dim_ *= S_;
  if (dim_ > FockBasis::kMaxDimension)
    throw std::invalid_argument("many-body dimension too large");

  stride_.resize(N_);
  std::int64_t s = F_;
  for (int p = N_ - 1; p >= 0; --p) {
    stride_[p] = s;
    s *= S_;
  }

  hf_diag_.resize(F_);
  for (int i = 0; i < F_; ++i) {
    double e = 0.0;
    const auto& occ = basis_->tuple(i);
    for (int j = 0; j < modes_->size(); ++j) e += modes_->mode(j).omega * occ[j];
    hf_diag_[i] = e;
  }

  phi_full_.reserve(S_);
  phi_plus_.reserve(S_);
  for (int a = 0; a < grid_->dimension(); ++a) phi_grad_[a].reserve(S_);
  for (int node = 0; node < S_; ++node) {
    const auto x = grid_->position(node);
    auto [plus, minus] = field_operator_parts(*modes_, *basis_, x);
    phi_plus_.push_back(plus.mat);
    phi_full_.push_back(plus.mat + minus.mat);
    for (int a = 0; a < grid_->dimension(); ++a)
      phi_grad_[a].push_back(field_gradient(*modes_, *basis_, x, a).mat);
  }

  // one guru FFT plan pair per particle coordinate
  plans_ = std::make_unique<Plans>();
  plans_->scratch.resize(dim_);
  const int d = grid_->dimension();
  const int n = grid_->points_per_dim();
  std::lock_guard<std::mutex> lock(planner_mutex());
  for (int p = 0; p < N_; ++p) {
    std::vector<fftw_iodim64> dims(d);
    std::int64_t axis_stride = stride_[p];
    for (int a = d - 1; a >= 0; --a) {
      dims[a] = {n, axis_stride, axis_stride};
      axis_stride *= n;
    }
    std::int64_t outer = 1;
    for (int q = 0; q < p; ++q) outer *= S_;
    std::vector<fftw_iodim64> howmany = {
        {outer, stride_[p] * S_, stride_[p] * S_}, {stride_[p], 1, 1}};
    auto* buf = reinterpret_cast<fftw_complex*>(plans_->scratch.data());
    plans_->fwd.push_back(fftw_plan_guru64_dft(
        d, dims.data(), 2, howmany.data(), buf, buf, FFTW_FORWARD,
        FFTW_ESTIMATE | FFTW_UNALIGNED));
    plans_->bwd.push_back(fftw_plan_guru64_dft(
        d, dims.data(), 2, howmany.data(), buf, buf, FFTW_BACKWARD,
        FFTW_ESTIMATE | FFTW_UNALIGNED));
    if (!plans_->fwd.back() || !plans_->bwd.back())
      throw std::runtime_error("fftw plan failed");
  }
}

NelsonOperator::~NelsonOperator() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  for (auto p : plans_->fwd) fftw_destroy_plan(p);
  for (auto p : plans_->bwd) fftw_destroy_plan(p);
}

void NelsonOperator::add_kinetic(const Vec& in, Vec& out) const {
  const double inv_s = 1.0 / S_;
  Vec tmp(dim_);
  for (int p = 0; p < N_; ++p) {
    tmp = in;
    auto* buf = reinterpret_cast<fftw_complex*>(tmp.data());
    fftw_execute_dft(plans_->fwd[p], buf, buf);
    std::int64_t outer = 1;
    for (int q = 0; q < p; ++q) outer *= S_;
    const std::int64_t block = stride_[p];
    for (std::int64_t o = 0; o < outer; ++o) {
      std::int64_t base = o * S_ * block;
      for (int sp = 0; sp < S_; ++sp) {
        tmp.segment(base + sp * block, block) *=
            grid_->laplacian_multiplier(sp) * inv_s;
      }
    }
    fftw_execute_dft(plans_->bwd[p], buf, buf);
    out += tmp;
  }
}

void NelsonOperator::add_interaction(const Vec& in, Vec& out) const {
  const double scale = 1.0 / std::sqrt(static_cast<double>(N_));
  for (int p = 0; p < N_; ++p) {
    std::int64_t outer = 1;
    for (int q = 0; q < p; ++q) outer *= S_;
    const std::int64_t block = stride_[p];
    const std::int64_t fock_blocks = block / F_;
    for (std::int64_t o = 0; o < outer; ++o) {
      for (int sp = 0; sp < S_; ++sp) {
        const std::int64_t base = (o * S_ + sp) * block;
        const SpMat& phi = phi_full_[sp];
        for (std::int64_t r = 0; r < fock_blocks; ++r) {
          out.segment(base + r * F_, F_).noalias() +=
              scale * (phi * in.segment(base + r * F_, F_));
        }
      }
    }
  }
}

Vec NelsonOperator::apply(const Vec& psi) const {
  if (psi.size() != dim_) throw std::invalid_argument("state dimension mismatch");
  Vec out = Vec::Zero(dim_);
  add_kinetic(psi, out);
  // H_f acts diagonally on the Fock index
  for (std::int64_t b = 0; b < dim_; b += F_) {
    out.segment(b, F_).array() +=
        hf_diag_.array().cast<cplx>() * psi.segment(b, F_).array();
  }
  if (coupling_) add_interaction(psi, out);
  return out;
}

ManyBodyState NelsonOperator::apply(const ManyBodyState& psi) const {
  ManyBodyState out = psi;
  out.coeff = apply(psi.coeff);
  return out;
}

double NelsonOperator::energy(const Vec& psi) const {
  return psi.dot(apply(psi)).real() / psi.squaredNorm();
}

PropagationResult propagate(const NelsonOperator& op, const ManyBodyState& psi,
                            double dt, int steps, int krylov_dim, double tol) {
  if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
  if (krylov_dim < 4) throw std::invalid_argument("krylov_dim must be >= 4");
  if (psi.coeff.size() != op.dim())
    throw std::invalid_argument("state dimension mismatch");

  PropagationResult res;
  res.state = psi;
  const double norm0 = psi.coeff.norm();
  const double e0 = op.energy(psi.coeff);
  const double breakdown = 1e-14;

  std::vector<Vec> V;
  V.reserve(krylov_dim + 1);
  std::vector<double> alpha(krylov_dim), beta(krylov_dim);

  for (int step = 0; step < steps; ++step) {
    Vec& x = res.state.coeff;
    const double nrm = x.norm();
    V.clear();
    V.push_back(x / nrm);
    int m = 0;
    bool done = false;
    Eigen::VectorXcd u;
    while (m < krylov_dim) {
      Vec w = op.apply(V[m]);
      alpha[m] = V[m].dot(w).real();
      w -= alpha[m] * V[m];
      if (m > 0) w -= beta[m - 1] * V[m - 1];
      for (int i = 0; i <= m; ++i) w -= V[i].dot(w) * V[i];  // reorthogonalize
      beta[m] = w.norm();

      // exp(-i dt T) e_1 on the current (m+1)-dimensional subspace
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, m + 1);
      for (int i = 0; i <= m; ++i) {
        T(i, i) = alpha[i];
        if (i < m) T(i, i + 1) = T(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
      Eigen::VectorXcd phase(m + 1);
      for (int i = 0; i <= m; ++i)
        phase[i] = std::polar(1.0, -es.eigenvalues()[i] * dt);
      u = es.eigenvectors().cast<cplx>() *
          (phase.asDiagonal() * es.eigenvectors().row(0).transpose().cast<cplx>());

      const double err = beta[m] * std::abs(u[m]) * dt;
      if (beta[m] < breakdown || err < tol) {
        done = true;
        ++m;
        break;
      }
      V.push_back(w / beta[m]);
      ++m;
    }
    if (!done && m == krylov_dim) {
      // accept only if the last residual is already within tolerance
      const double err = beta[m - 1] * std::abs(u[m - 1]) * dt;
      if (err >= tol) {
        throw std::runtime_error(
            "propagate: Lanczos residual " + std::to_string(err) +
            " above tol at krylov_dim " + std::to_string(krylov_dim));
      }
      done = true;
    }
    Vec next = Vec::Zero(x.size());
    for (int i = 0; i < m; ++i) next += u[i] * V[i];
    x = nrm * next;
    res.state.time += dt;
    res.max_krylov_used = std::max(res.max_krylov_used, m);
  }
  res.norm_drift = std::abs(res.state.coeff.norm() - norm0);
  res.energy_drift = std::abs(op.energy(res.state.coeff) - e0);
  return res;
}

DenseOracle::DenseOracle(const NelsonOperator& op) {
  if (op.dim() > kDimensionCap)
    throw std::invalid_argument("dense oracle: dimension above cap");
  const int n = static_cast<int>(op.dim());
  H_.resize(n, n);
  Vec e(n);
  for (int c = 0; c < n; ++c) {
    e.setZero();
    e[c] = 1.0;
    H_.col(c) = op.apply(e);
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(H_);
  evals_ = es.eigenvalues();
  evecs_ = es.eigenvectors();
}

Vec DenseOracle::propagate(const Vec& psi, double t) const {
  Vec y = evecs_.adjoint() * psi;
  for (int i = 0; i < y.size(); ++i) y[i] *= std::polar(1.0, -evals_[i] * t);
  return evecs_ * y;
}

ManyBodyState product_initial_state(const Vec& phi0, const Vec& alpha0, int N,
                                    std::shared_ptr<const SpatialGrid> grid,
                                    std::shared_ptr<const FockBasis> basis,
                                    double defect_tol) {
  if (phi0.size() != grid->size())
    throw std::invalid_argument("phi0 size mismatch");
  if (std::abs(grid->norm(phi0) - 1.0) > 1e-6)
    throw std::invalid_argument("phi0 must have discrete L2 norm 1");

  const Vec phi_l2 = phi0 * std::sqrt(grid->cell_volume());
  // the truncated displacement is unitary, so the quality measure is the
  // Poisson mass the exact coherent state would carry above n_max
  const double mean = N * alpha0.squaredNorm();
  double kept = 0.0, term = std::exp(-mean);
  for (int n = 0; n <= basis->max_bosons(); ++n) {
    kept += term;
    term *= mean / (n + 1);
  }
  if (1.0 - kept > defect_tol) {
    throw std::runtime_error(
        "product_initial_state: coherent tail mass " +
        std::to_string(1.0 - kept) + " above tolerance; increase n_max");
  }
  WeylResult coh =
      coherent_state(*basis, std::sqrt(static_cast<double>(N)) * alpha0);

  Vec coeff = coh.state;
  for (int p = 0; p < N; ++p) {
    Vec next(coeff.size() * grid->size());
    for (int s = 0; s < grid->size(); ++s)
      next.segment(s * coeff.size(), coeff.size()) = phi_l2[s] * coeff;
    coeff.swap(next);
  }

  ManyBodyState st;
  st.N = N;
  st.grid = std::move(grid);
  st.basis = std::move(basis);
  st.coeff = std::move(coeff);
  st.time = 0.0;
  return st;
}

Vec apply_mode_operator(const ManyBodyState& psi, const SpMat& op) {
  const int F = psi.basis->size();
  const std::int64_t blocks = psi.coeff.size() / F;
  Eigen::Map<const Mat> in(psi.coeff.data(), F, blocks);
  Vec out(psi.coeff.size());
  Eigen::Map<Mat>(out.data(), F, blocks).noalias() = op * in;
  return out;
}

Vec apply_slot1_matrix(const ManyBodyState& psi, const Mat& m) {
  const int S = psi.grid->size();
  const std::int64_t R = psi.coeff.size() / S;
  Eigen::Map<const Mat> in(psi.coeff.data(), R, S);
  Vec out(psi.coeff.size());
  Eigen::Map<Mat>(out.data(), R, S).noalias() = in * m.transpose();
  return out;
}

Vec apply_slot1_diag(const ManyBodyState& psi, const Vec& diag) {
  const int S = psi.grid->size();
  const std::int64_t R = psi.coeff.size() / S;
  Vec out(psi.coeff.size());
  for (int s = 0; s < S; ++s) out.segment(s * R, R) = diag[s] * psi.coeff.segment(s * R, R);
  return out;
}

Vec project_slot1(const ManyBodyState& psi, const Vec& phi_l2) {
  const int S = psi.grid->size();
  const std::int64_t R = psi.coeff.size() / S;
  Vec overlap = Vec::Zero(R);
  for (int s = 0; s < S; ++s)
    overlap += std::conj(phi_l2[s]) * psi.coeff.segment(s * R, R);
  Vec out(psi.coeff.size());
  for (int s = 0; s < S; ++s) out.segment(s * R, R) = phi_l2[s] * overlap;
  return out;
}

Vec apply_field_slot1(const NelsonOperator& op, const ManyBodyState& psi,
                      FieldPart part, int axis) {
  const int S = psi.grid->size();
  const int F = psi.basis->size();
  const std::int64_t R = psi.coeff.size() / S;
  const std::int64_t fock_blocks = R / F;
  Vec out(psi.coeff.size());
  for (int s = 0; s < S; ++s) {
    Eigen::Map<const Mat> in(psi.coeff.data() + s * R, F, fock_blocks);
    Eigen::Map<Mat> o(out.data() + s * R, F, fock_blocks);
    switch (part) {
      case FieldPart::Full:
        o.noalias() = op.phi_block(s) * in;
        break;
      case FieldPart::Plus:
        o.noalias() = op.phi_plus_block(s) * in;
        break;
      case FieldPart::Minus:
        o.noalias() = op.phi_plus_block(s).adjoint() * in;
        break;
      case FieldPart::Grad:
        o.noalias() = op.phi_grad_block(s, axis) * in;
        break;
    }
  }
  return out;
}

}  // namespace nelson
