#pragma once

#include <vector>

#include "nelson/effective.hpp"
#include "nelson/manybody.hpp"
#include "nelson/types.hpp"

namespace nelson {

/// One-particle reduced density matrix (charges or gauge bosons) in the
/// l2-orthonormal node/mode basis.
struct DensityMatrix {
  Mat mat;
  double trace() const { return mat.trace().real(); }
};

/// All counting functionals and distances for one (state, phi, alpha, t)
/// snapshot.
struct IndicatorReport {
  double time = 0.0;
  double beta_a = 0.0, beta_b = 0.0, beta_c = 0.0;
  double beta = 0.0, beta2 = 0.0;
  double tr_dist_10 = 0.0;   // Tr|gamma^(1,0) - |phi><phi||
  double tr_dist_01 = 0.0;   // Tr|gamma^(0,1) - |alpha><alpha||
  double sobolev_dist = 0.0; // Tr|sqrt(1-Delta)(gamma^(1,0)-p)sqrt(1-Delta)|
  double mean_boson = 0.0;   // <N>/N
  double dbeta_a_dt = 0.0, dbeta_b_dt = 0.0, dbeta_c_dt = 0.0;
  double energy = 0.0;
};

/// Fraction of particles outside the condensate: <Psi, q_1 (x) 1 Psi>.
double beta_a(const ManyBodyState& psi, const Vec& phi);

/// Field fluctuation functional sum_j ||(a_j/sqrt(N) - alpha_j) Psi||^2.
double beta_b(const ManyBodyState& psi, const Vec& alpha);

/// Same functional computed as N^{-1} <W(-sqrt(N)a)Psi, Num W(-sqrt(N)a)Psi>.
double beta_b_via_weyl(const ManyBodyState& psi, const Vec& alpha,
                       double tol = 1e-12);

/// Kinetic energy outside the condensate: ||grad_1 q_1 Psi||^2.
double beta_c(const ManyBodyState& psi, const Vec& phi);

double beta2(const ManyBodyState& psi, const Vec& phi, const Vec& alpha);

/// Partial trace over particles 2..N and the Fock factor.
DensityMatrix gamma_10(const ManyBodyState& psi);
/// <Psi, a*_{k'} a_k Psi> / N (note the 1/N weight).
DensityMatrix gamma_01(const ManyBodyState& psi);

/// Sum of absolute eigenvalues; throws if A is not Hermitian to 1e-10.
double trace_norm(const Mat& a);

/// Tr | sqrt(1-Delta) (gamma - |phi><phi|) sqrt(1-Delta) | with the spectral
/// multiplier sqrt(1+|k|^2); phi is a grid function with discrete L2 norm 1.
double sobolev_trace_distance(const DensityMatrix& gamma, const Vec& phi,
                              const SpatialGrid& grid);

/// H^1 norm of a grid function, computed spectrally.
double h1_norm(const Vec& phi, const SpatialGrid& grid);

/// Both sides of each sandwich inequality between beta and the trace
/// distances of the reduced density matrices.
struct SandwichReport {
  double beta_a = 0.0, tr_dist_10 = 0.0, sqrt_8_beta_a = 0.0;
  double tr_dist_01 = 0.0, field_chain_rhs = 0.0;  // 3 b + 6 ||a|| sqrt(b)
  double sobolev_dist = 0.0, sobolev_rhs = 0.0;
  bool holds(double tol = 1e-9) const;
};

SandwichReport sandwich_bounds(const ManyBodyState& psi, const Vec& phi,
                           const Vec& alpha);

/// Norms of the quantized/classical field difference at a fixed position,
/// with the cutoff-norm constants and the bounds they imply.
struct FieldDifferenceReport {
  double full_sq = 0.0;      // ||(Phi(x)/sqrt(N) - Phi_cl(x)) Psi||^2
  double plus_sq = 0.0;
  double minus_sq = 0.0;
  double plus_p1_sq = 0.0;   // positive part on p_1 Psi
  double grad_sq = 0.0;      // summed over components
  double kappa_sq = 0.0, eta_sq = 0.0, theta_sq = 0.0;
  double bound_full = 0.0;   // eta_sq (4 beta_b + 2/N)
  double bound_plus = 0.0;   // eta_sq beta_b
  double bound_grad = 0.0;   // theta_sq (4 beta_b + 2/N)
};

FieldDifferenceReport field_difference_norms(const ManyBodyState& psi,
                                             const Vec& alpha,
                                             const std::array<double, 3>& x,
                                             const NelsonOperator& op,
                                             const Vec& phi);

enum class Mutation { None, FlipDbetaBSource };

struct BetaDerivatives {
  double da = 0.0, db = 0.0, dc = 0.0;
};

/// Exact analytic time derivatives of beta^a, beta^b, beta^c along matched
/// microscopic/effective flows.
BetaDerivatives dbeta_dt_analytic(const ManyBodyState& psi,
                                  const EffectiveState& eff,
                                  const NelsonOperator& op,
                                  Mutation mutation = Mutation::None);

struct GronwallFit {
  double C = 0.0;
  bool valid = false;
};

/// Smallest C with beta(t) <= e^{C Lambda^p t}(beta(0) + 1/N) at every
/// sample; p = 2 for beta, 4 for beta_2.
GronwallFit gronwall_fit(const std::vector<double>& times,
                         const std::vector<double>& betas, int N,
                         double Lambda, int lambda_power = 2,
                         double c_max = 50.0);

/// Full snapshot report (derivatives included when `op` carries coupling).
IndicatorReport make_report(const ManyBodyState& psi, const EffectiveState& eff,
                            const NelsonOperator& op,
                            Mutation mutation = Mutation::None);

}  // namespace nelson
