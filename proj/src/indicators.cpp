#include "nelson/indicators.hpp"

#include <cmath>
#include <stdexcept>

namespace nelson {

namespace {

// phi in the dx-weighted grid convention -> l2-orthonormal slot vector
Vec to_l2(const Vec& phi, const SpatialGrid& grid) {
  return phi * std::sqrt(grid.cell_volume());
}

Vec q1_apply(const ManyBodyState& psi, const Vec& phi_l2) {
  return psi.coeff - project_slot1(psi, phi_l2);
}

void check_normalized(const ManyBodyState& psi, const Vec& phi_l2) {
  if (std::abs(psi.norm() - 1.0) > 1e-6)
    throw std::invalid_argument("state is not normalized");
  if (std::abs(phi_l2.norm() - 1.0) > 1e-6)
    throw std::invalid_argument("phi is not normalized");
}

// apply a Fock-space matrix to every spatial block of a raw coefficient
// vector (same contraction as apply_mode_operator, without a state wrapper)
Vec fock_apply(const SpMat& m, const Vec& v, int F) {
  const std::int64_t blocks = v.size() / F;
  Vec out(v.size());
  for (std::int64_t r = 0; r < blocks; ++r)
    out.segment(r * F, F) = m * v.segment(r * F, F);
  return out;
}

Mat slot1_laplacian(const SpatialGrid& grid) {
  SpectralTransform fft(grid);
  Mat u = fft.unitary_dft();
  return u.adjoint() * grid.laplacian_multipliers().asDiagonal() * u;
}

Mat slot1_gradient(const SpatialGrid& grid, int axis) {
  SpectralTransform fft(grid);
  Mat u = fft.unitary_dft();
  Vec ik(grid.size());
  for (int m = 0; m < grid.size(); ++m)
    ik[m] = cplx(0.0, grid.gradient_multiplier(m, axis));
  return u.adjoint() * ik.asDiagonal() * u;
}

// Phi_cl evaluated at the particle-1 node, as a slot-1 diagonal
Vec slot1_classical_field(const Vec& alpha, const SpatialGrid& grid,
                          const ModeGrid& modes) {
  return classical_field(alpha, grid, modes).cast<cplx>();
}

}  // namespace

double beta_a(const ManyBodyState& psi, const Vec& phi) {
  Vec phi_l2 = to_l2(phi, *psi.grid);
  check_normalized(psi, phi_l2);
  return q1_apply(psi, phi_l2).squaredNorm();
}

double beta_b(const ManyBodyState& psi, const Vec& alpha) {
  if (alpha.size() != 0 && psi.basis->mode_count() != alpha.size())
    throw std::invalid_argument("alpha size mismatch");
  const double root_n = std::sqrt(static_cast<double>(psi.N));
  double total = 0.0;
  for (int j = 0; j < psi.basis->mode_count(); ++j) {
    SparseOperator a = annihilator(*psi.basis, j);
    Vec w = apply_mode_operator(psi, a.mat) / root_n - alpha[j] * psi.coeff;
    total += w.squaredNorm();
  }
  return total;
}

double beta_b_via_weyl(const ManyBodyState& psi, const Vec& alpha, double tol) {
  const FockBasis& basis = *psi.basis;
  const int F = basis.size();
  const double root_n = std::sqrt(static_cast<double>(psi.N));
  Vec f = -root_n * alpha;

  SpMat gen = displacement_generator(basis, f).mat;
  const double bound =
      2.0 * f.norm() * std::sqrt(static_cast<double>(basis.max_bosons() + 1));
  const int substeps = std::max(1, static_cast<int>(std::ceil(bound / 0.5)));

  Vec state = psi.coeff;
  for (int s = 0; s < substeps; ++s) {
    Vec term = state;
    Vec acc = state;
    bool converged = false;
    for (int k = 1; k <= 64; ++k) {
      term = fock_apply(gen, term, F) / (static_cast<double>(k) * substeps);
      acc += term;
      if (term.norm() < tol * std::max(1.0, acc.norm())) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw std::runtime_error("displacement series did not converge");
    state = acc;
  }

  SpMat num = number_operator(basis).mat;
  Vec n_state = fock_apply(num, state, F);
  return state.dot(n_state).real() / psi.N;
}

double beta_c(const ManyBodyState& psi, const Vec& phi) {
  ManyBodyState q = psi;
  q.coeff = q1_apply(psi, to_l2(phi, *psi.grid));
  double total = 0.0;
  for (int a = 0; a < psi.grid->dimension(); ++a) {
    Vec g = apply_slot1_matrix(q, slot1_gradient(*psi.grid, a));
    total += g.squaredNorm();
  }
  return total;
}

double beta2(const ManyBodyState& psi, const Vec& phi, const Vec& alpha) {
  return beta_a(psi, phi) + beta_b(psi, alpha) + beta_c(psi, phi);
}

DensityMatrix gamma_10(const ManyBodyState& psi) {
  const int S = psi.grid->size();
  const std::int64_t rest = psi.dim() / S;  // particle 1 is the slowest index
  Eigen::Map<const Mat> m(psi.coeff.data(), rest, S);
  DensityMatrix out;
  out.mat = m.transpose() * m.conjugate();
  return out;
}

DensityMatrix gamma_01(const ManyBodyState& psi) {
  const int M = psi.basis->mode_count();
  std::vector<Vec> lowered(M);
  for (int j = 0; j < M; ++j)
    lowered[j] = apply_mode_operator(psi, annihilator(*psi.basis, j).mat);
  DensityMatrix out;
  out.mat.resize(M, M);
  for (int k = 0; k < M; ++k)
    for (int kp = 0; kp < M; ++kp)
      out.mat(k, kp) = lowered[kp].dot(lowered[k]) / static_cast<double>(psi.N);
  return out;
}

double trace_norm(const Mat& a) {
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument("trace_norm: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Mat> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

double h1_norm(const Vec& phi, const SpatialGrid& grid) {
  SpectralTransform fft(grid);
  Vec hat = phi;
  fft.forward(hat);
  double sq = 0.0;
  for (int m = 0; m < grid.size(); ++m)
    sq += (1.0 + grid.laplacian_multiplier(m)) * std::norm(hat[m]);
  return std::sqrt(sq * grid.cell_volume() / grid.size());
}

double sobolev_trace_distance(const DensityMatrix& gamma, const Vec& phi,
                              const SpatialGrid& grid) {
  Vec phi_l2 = to_l2(phi, grid);
  Mat diff = gamma.mat - phi_l2 * phi_l2.adjoint();

  SpectralTransform fft(grid);
  Mat u = fft.unitary_dft();
  RVec w(grid.size());
  for (int m = 0; m < grid.size(); ++m)
    w[m] = std::sqrt(1.0 + grid.laplacian_multiplier(m));
  Mat sob = u.adjoint() * w.asDiagonal() * u;
  return trace_norm(sob * diff * sob);
}

bool SandwichReport::holds(double tol) const {
  return beta_a <= tr_dist_10 + tol && tr_dist_10 <= sqrt_8_beta_a + tol &&
         tr_dist_01 <= field_chain_rhs + tol &&
         sobolev_dist <= sobolev_rhs + tol;
}

SandwichReport sandwich_bounds(const ManyBodyState& psi, const Vec& phi,
                           const Vec& alpha) {
  SandwichReport r;
  r.beta_a = beta_a(psi, phi);
  r.sqrt_8_beta_a = std::sqrt(8.0 * r.beta_a);

  Vec phi_l2 = to_l2(phi, *psi.grid);
  r.tr_dist_10 = trace_norm(gamma_10(psi).mat - phi_l2 * phi_l2.adjoint());

  const double b = beta_b(psi, alpha);
  r.tr_dist_01 =
      trace_norm(gamma_01(psi).mat - Mat(alpha * alpha.adjoint()));
  r.field_chain_rhs = 3.0 * b + 6.0 * alpha.norm() * std::sqrt(b);

  const double c = beta_c(psi, phi);
  const double h1 = h1_norm(phi, *psi.grid);
  r.sobolev_dist = sobolev_trace_distance(gamma_10(psi), phi, *psi.grid);
  r.sobolev_rhs = (1.0 + h1 * h1) * (r.beta_a + c) +
                  2.0 * h1 * std::sqrt(r.beta_a + c);
  return r;
}

FieldDifferenceReport field_difference_norms(const ManyBodyState& psi,
                                             const Vec& alpha,
                                             const std::array<double, 3>& x,
                                             const NelsonOperator& op,
                                             const Vec& phi) {
  const ModeGrid& modes = op.modes();
  const FockBasis& basis = *psi.basis;
  const double root_n = std::sqrt(static_cast<double>(psi.N));

  cplx plus_cl = 0.0;
  for (int j = 0; j < modes.size(); ++j)
    plus_cl += modes.mode(j).g * modes.phase(j, x) * alpha[j];
  const double full_cl = 2.0 * plus_cl.real();

  FieldDifferenceReport r;
  auto [plus_op, minus_op] = field_operator_parts(modes, basis, x);
  SparseOperator full_op = field_operator(modes, basis, x);

  Vec d_full = apply_mode_operator(psi, full_op.mat) / root_n -
               full_cl * psi.coeff;
  Vec d_plus =
      apply_mode_operator(psi, plus_op.mat) / root_n - plus_cl * psi.coeff;
  Vec d_minus = apply_mode_operator(psi, minus_op.mat) / root_n -
                std::conj(plus_cl) * psi.coeff;
  r.full_sq = d_full.squaredNorm();
  r.plus_sq = d_plus.squaredNorm();
  r.minus_sq = d_minus.squaredNorm();

  ManyBodyState proj = psi;
  proj.coeff = project_slot1(psi, to_l2(phi, *psi.grid));
  Vec d_plus_p1 = apply_mode_operator(proj, plus_op.mat) / root_n -
                  plus_cl * proj.coeff;
  r.plus_p1_sq = d_plus_p1.squaredNorm();

  for (int a = 0; a < op.grid().dimension(); ++a) {
    SparseOperator grad_op = field_gradient(modes, basis, x, a);
    cplx grad_cl_plus = 0.0;
    for (int j = 0; j < modes.size(); ++j) {
      grad_cl_plus += cplx(0.0, 1.0) * modes.mode(j).theta[a] *
                      modes.phase(j, x) * alpha[j];
    }
    Vec d_grad = apply_mode_operator(psi, grad_op.mat) / root_n -
                 2.0 * grad_cl_plus.real() * psi.coeff;
    r.grad_sq += d_grad.squaredNorm();
  }

  const double b = beta_b(psi, alpha);
  r.kappa_sq = modes.kappa_sq_norm();
  r.eta_sq = modes.eta_sq_norm();
  r.theta_sq = modes.theta_sq_norm();
  r.bound_full = r.eta_sq * (4.0 * b + 2.0 / psi.N);
  r.bound_plus = r.eta_sq * b;
  r.bound_grad = r.theta_sq * (4.0 * b + 2.0 / psi.N);
  return r;
}

BetaDerivatives dbeta_dt_analytic(const ManyBodyState& psi,
                                  const EffectiveState& eff,
                                  const NelsonOperator& op,
                                  Mutation mutation) {
  const SpatialGrid& grid = op.grid();
  const ModeGrid& modes = op.modes();
  const FockBasis& basis = op.basis();
  const double root_n = std::sqrt(static_cast<double>(psi.N));

  Vec phi_l2 = to_l2(eff.phi, grid);
  Vec pot = slot1_classical_field(eff.alpha, grid, modes);
  Vec rho = density_transform(eff.phi, grid, modes);

  // D = Phi(x_1)/sqrt(N) - Phi_cl(x_1), Hermitian
  auto apply_d = [&](const ManyBodyState& v) {
    return Vec(apply_field_slot1(op, v, FieldPart::Full) / root_n -
               apply_slot1_diag(v, pot));
  };

  ManyBodyState q = psi;
  q.coeff = q1_apply(psi, phi_l2);

  BetaDerivatives out;
  out.da = -2.0 * psi.coeff.dot(apply_d(q)).imag();

  // d_t beta^b: source term from the effective density plus the slot-1
  // phase coupling, both contracted against W_j = (a_j/sqrt(N)-alpha_j)Psi
  double db = 0.0;
  for (int j = 0; j < modes.size(); ++j) {
    SparseOperator a = annihilator(basis, j);
    ManyBodyState w = psi;
    w.coeff = apply_mode_operator(psi, a.mat) / root_n -
              eff.alpha[j] * psi.coeff;
    const double g = modes.mode(j).g;
    cplx source = g * std::conj(rho[j]) * psi.coeff.dot(w.coeff);
    if (mutation == Mutation::FlipDbetaBSource) source = -source;

    Vec phase(grid.size());
    for (int s = 0; s < grid.size(); ++s)
      phase[s] = modes.phase(j, grid.position(s));
    cplx coupling = g * root_n * psi.coeff.dot(apply_slot1_diag(w, phase));
    db += 2.0 * (source - coupling).imag();
  }
  out.db = db;

  Mat lap = slot1_laplacian(grid);
  ManyBodyState p = psi;
  p.coeff = project_slot1(psi, phi_l2);
  Vec lap_q = apply_slot1_matrix(q, lap);

  ManyBodyState dpsi = psi;
  dpsi.coeff = apply_d(psi);
  Vec p_d_psi = project_slot1(dpsi, phi_l2);
  Vec d_p_psi = apply_d(p);
  Vec phi_q = apply_field_slot1(op, q, FieldPart::Full) / root_n;

  out.dc = 2.0 * p_d_psi.dot(lap_q).imag() - 2.0 * d_p_psi.dot(lap_q).imag() -
           2.0 * phi_q.dot(lap_q).imag();
  return out;
}

GronwallFit gronwall_fit(const std::vector<double>& times,
                         const std::vector<double>& betas, int N,
                         double Lambda, int lambda_power, double c_max) {
  if (times.size() != betas.size())
    throw std::invalid_argument("times/betas length mismatch");
  if (times.empty()) throw std::invalid_argument("empty trajectory");
  const double base = betas.front() + 1.0 / N;
  const double rate = std::pow(Lambda, lambda_power);

  GronwallFit fit;
  bool finite = true;
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double t = times[i] - times.front();
    if (t <= 0.0) continue;
    if (!std::isfinite(betas[i]) || betas[i] < 0.0) {
      finite = false;
      break;
    }
    if (betas[i] <= base) continue;  // already inside the envelope
    fit.C = std::max(fit.C, std::log(betas[i] / base) / (rate * t));
  }
  fit.valid = finite && fit.C <= c_max;
  return fit;
}

IndicatorReport make_report(const ManyBodyState& psi, const EffectiveState& eff,
                            const NelsonOperator& op, Mutation mutation) {
  IndicatorReport r;
  r.time = psi.time;
  r.beta_a = beta_a(psi, eff.phi);
  r.beta_b = beta_b(psi, eff.alpha);
  r.beta_c = beta_c(psi, eff.phi);
  r.beta = r.beta_a + r.beta_b;
  r.beta2 = r.beta + r.beta_c;

  Vec phi_l2 = to_l2(eff.phi, *psi.grid);
  DensityMatrix g10 = gamma_10(psi);
  DensityMatrix g01 = gamma_01(psi);
  r.tr_dist_10 = trace_norm(g10.mat - phi_l2 * phi_l2.adjoint());
  r.tr_dist_01 =
      trace_norm(g01.mat - Mat(eff.alpha * eff.alpha.adjoint()));
  r.sobolev_dist = sobolev_trace_distance(g10, eff.phi, *psi.grid);
  r.mean_boson = g01.trace();

  BetaDerivatives d = dbeta_dt_analytic(psi, eff, op, mutation);
  r.dbeta_a_dt = d.da;
  r.dbeta_b_dt = d.db;
  r.dbeta_c_dt = d.dc;
  r.energy = op.energy(psi.coeff);
  return r;
}

}  // namespace nelson
