#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "nelson/fock.hpp"
#include "nelson/grid.hpp"
#include "nelson/types.hpp"

namespace nelson {

/// Wavefunction of N particles on the spatial grid tensored with the
/// truncated Fock space. Layout: particle 1 is the slowest index, the Fock
/// index is innermost. Coefficients are in the l2-orthonormal convention
/// (grid functions carry a factor sqrt(dx^d) per particle), so the plain
/// Euclidean norm of `coeff` is the physical norm.
struct ManyBodyState {
  int N = 1;
  std::shared_ptr<const SpatialGrid> grid;
  std::shared_ptr<const FockBasis> basis;
  Vec coeff;
  double time = 0.0;

  std::int64_t dim() const { return coeff.size(); }
  double norm() const { return coeff.norm(); }
};

/// Matrix-free Nelson Hamiltonian
///   H = sum_p (-Delta_p + Phi(x_p)/sqrt(N)) + H_f
/// with spectral kinetic terms (FFT per particle coordinate) and
/// precomputed sparse field blocks per grid node.
class NelsonOperator {
 public:
  NelsonOperator(std::shared_ptr<const SpatialGrid> grid,
                 std::shared_ptr<const ModeGrid> modes,
                 std::shared_ptr<const FockBasis> basis, int N,
                 bool coupling = true);
  ~NelsonOperator();
  NelsonOperator(const NelsonOperator&) = delete;
  NelsonOperator& operator=(const NelsonOperator&) = delete;

  Vec apply(const Vec& psi) const;
  ManyBodyState apply(const ManyBodyState& psi) const;

  std::int64_t dim() const { return dim_; }
  int particles() const { return N_; }
  bool coupling_on() const { return coupling_; }
  const SpatialGrid& grid() const { return *grid_; }
  const ModeGrid& modes() const { return *modes_; }
  const FockBasis& basis() const { return *basis_; }
  std::shared_ptr<const SpatialGrid> grid_ptr() const { return grid_; }
  std::shared_ptr<const FockBasis> basis_ptr() const { return basis_; }
  std::shared_ptr<const ModeGrid> modes_ptr() const { return modes_; }

  const SpMat& phi_block(int node) const { return phi_full_[node]; }
  const SpMat& phi_plus_block(int node) const { return phi_plus_[node]; }
  const SpMat& phi_grad_block(int node, int axis) const {
    return phi_grad_[axis][node];
  }
  const RVec& field_energies() const { return hf_diag_; }

  /// Re<psi, H psi> / |psi|^2
  double energy(const Vec& psi) const;

 private:
  std::shared_ptr<const SpatialGrid> grid_;
  std::shared_ptr<const ModeGrid> modes_;
  std::shared_ptr<const FockBasis> basis_;
  int N_;
  bool coupling_;
  std::int64_t dim_;
  int S_, F_;
  std::vector<std::int64_t> stride_;  // stride of particle p's spatial index
  RVec hf_diag_;
  std::vector<SpMat> phi_full_, phi_plus_;
  std::array<std::vector<SpMat>, 3> phi_grad_;

  struct Plans;
  std::unique_ptr<Plans> plans_;

  void add_kinetic(const Vec& in, Vec& out) const;
  void add_interaction(const Vec& in, Vec& out) const;
};

struct PropagationResult {
  ManyBodyState state;
  double energy_drift = 0.0;    // |E(t) - E(0)|
  double norm_drift = 0.0;      // | ||psi(t)|| - ||psi(0)|| |
  int max_krylov_used = 0;
};

/// exp(-i H dt) per step via an adaptive Lanczos (Krylov) approximation.
PropagationResult propagate(const NelsonOperator& op, const ManyBodyState& psi,
                            double dt, int steps, int krylov_dim = 24,
                            double tol = 1e-9);

/// Dense brute-force oracle: the full Hamiltonian matrix assembled from the
/// matrix-free application, with an eigendecomposition propagator.
class DenseOracle {
 public:
  static constexpr std::int64_t kDimensionCap = 4096;

  explicit DenseOracle(const NelsonOperator& op);

  const Mat& matrix() const { return H_; }
  const RVec& eigenvalues() const { return evals_; }
  Vec propagate(const Vec& psi, double t) const;

 private:
  Mat H_;
  RVec evals_;
  Mat evecs_;
};

/// phi0^{otimes N} tensor W(sqrt(N) alpha0) Omega. phi0 is a grid function
/// with discrete L2 norm 1; alpha0 is in the discrete mode convention.
ManyBodyState product_initial_state(const Vec& phi0, const Vec& alpha0, int N,
                                    std::shared_ptr<const SpatialGrid> grid,
                                    std::shared_ptr<const FockBasis> basis,
                                    double defect_tol = 1e-8);

// ---- slot-1 / Fock-index primitives shared with the indicator layer ----

/// Apply a Fock-space operator to every spatial block.
Vec apply_mode_operator(const ManyBodyState& psi, const SpMat& op);
/// Apply an S x S matrix to the particle-1 spatial index.
Vec apply_slot1_matrix(const ManyBodyState& psi, const Mat& m);
/// Multiply by a function of the particle-1 position (diagonal, length S).
Vec apply_slot1_diag(const ManyBodyState& psi, const Vec& diag);
/// Orthogonal projection p_1 = |phi><phi| on the particle-1 slot
/// (phi in the l2-orthonormal convention, unit norm).
Vec project_slot1(const ManyBodyState& psi, const Vec& phi_l2);

enum class FieldPart { Full, Plus, Minus, Grad };

/// Apply Phi(x_1)/1 (or its parts / gradient component) at the particle-1
/// position, i.e. the block Phi(x_{s1}) on each slice.
Vec apply_field_slot1(const NelsonOperator& op, const ManyBodyState& psi,
                      FieldPart part, int axis = 0);

}  // namespace nelson
