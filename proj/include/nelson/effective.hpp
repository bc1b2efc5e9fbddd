#pragma once

#include <memory>
#include <vector>

#include "nelson/fock.hpp"
#include "nelson/grid.hpp"
#include "nelson/types.hpp"

namespace nelson {

/// Condensate wavefunction (grid function, discrete L2 norm 1) together
/// with the classical mode amplitudes (discrete convention).
struct EffectiveState {
  Vec phi;
  Vec alpha;
  double time = 0.0;
};

/// Phi_cl(x) = sum_j g_j (e^{ik x} alpha_j + e^{-ik x} alpha*_j), real.
RVec classical_field(const Vec& alpha, const SpatialGrid& grid,
                     const ModeGrid& modes);
/// Positive-frequency part sum_j g_j e^{ik x} alpha_j (the negative part is
/// its complex conjugate).
Vec classical_field_plus(const Vec& alpha, const SpatialGrid& grid,
                         const ModeGrid& modes);
/// Component `axis` of grad Phi_cl, built from the theta weights.
RVec classical_field_gradient(const Vec& alpha, const SpatialGrid& grid,
                              const ModeGrid& modes, int axis);

/// rho_hat_j = dx^d sum_x e^{-i k_j x} |phi(x)|^2 (source of the mode
/// equation; matches the discrete mean-field of the Nelson Hamiltonian).
Vec density_transform(const Vec& phi, const SpatialGrid& grid,
                      const ModeGrid& modes);

struct SkgDerivative {
  Vec dphi;
  Vec dalpha;
};

/// Right-hand side of the discrete Schroedinger-Klein-Gordon system:
///   i d_t phi     = (-Delta + Phi_cl) phi
///   i d_t alpha_j = omega_j alpha_j + g_j rho_hat_j
SkgDerivative skg_rhs(const EffectiveState& state, const SpatialGrid& grid,
                      const ModeGrid& modes);

/// E = <phi, -Delta phi> + sum_j omega_j |alpha_j|^2
///     + dx^d sum_x Phi_cl(x) |phi(x)|^2; conserved along skg_step.
double skg_energy(const EffectiveState& state, const SpatialGrid& grid,
                  const ModeGrid& modes);

/// Splitting integrator with exact kinetic and mode sub-flows, composed to
/// fourth order (triple jump); preserves |phi| to rounding per step.
class SkgIntegrator {
 public:
  SkgIntegrator(std::shared_ptr<const SpatialGrid> grid,
                std::shared_ptr<const ModeGrid> modes);

  EffectiveState step(const EffectiveState& state, double dt) const;
  EffectiveState run(const EffectiveState& state, double dt, int steps) const;

  const SpatialGrid& grid() const { return *grid_; }
  const ModeGrid& modes() const { return *modes_; }

 private:
  EffectiveState strang_step(const EffectiveState& state, double dt) const;

  std::shared_ptr<const SpatialGrid> grid_;
  std::shared_ptr<const ModeGrid> modes_;
  std::unique_ptr<SpectralTransform> fft_;
};

/// Residual of the second-order (Klein-Gordon) form evaluated mode-by-mode
/// on >= 3 equally spaced snapshots by centered differences:
///   (d_t^2 + omega_j^2)(alpha_j + alpha_{-j}*) vs  -2 omega_j g_j rho_hat_j.
/// Returns the maximum relative residual over interior snapshots and modes.
double second_order_residual(const std::vector<EffectiveState>& trajectory,
                             double dt, const SpatialGrid& grid,
                             const ModeGrid& modes);

}  // namespace nelson
