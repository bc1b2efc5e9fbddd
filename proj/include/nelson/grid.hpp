#pragma once

#include <array>
#include <memory>
#include <vector>

#include "nelson/types.hpp"

namespace nelson {

/// Uniform periodic spatial grid on [0, L)^d with spectral (Fourier
/// multiplier) derivatives.
class SpatialGrid {
 public:
  SpatialGrid(int d, double L, int n_x);

  int dimension() const { return d_; }
  double box_length() const { return L_; }
  int points_per_dim() const { return n_x_; }
  double dx() const { return dx_; }
  /// dx^d, the quadrature weight of one node.
  double cell_volume() const { return cell_; }
  /// total node count n_x^d
  int size() const { return S_; }

  std::array<double, 3> position(int node) const;
  /// Grid momentum of composite frequency index m (fftfreq convention,
  /// Nyquist mapped to -n_x/2).
  std::array<double, 3> momentum(int m) const;
  /// |k|^2 of frequency index m; the spectral Laplacian is -laplacian(m).
  double laplacian_multiplier(int m) const { return k2_[m]; }
  const RVec& laplacian_multipliers() const { return k2_; }
  /// component `axis` of k at frequency index m (gradient multiplier i*k).
  double gradient_multiplier(int m, int axis) const { return kg_[axis][m]; }

  /// discrete L2 inner product <f, g> = dx^d sum conj(f) g
  cplx inner(const Vec& f, const Vec& g) const;
  double norm(const Vec& f) const;

 private:
  int d_, n_x_, S_;
  double L_, dx_, cell_;
  RVec k2_;
  std::array<RVec, 3> kg_;
};

/// d-dimensional FFT on a SpatialGrid (FFTW backed, unnormalized forward,
/// round trip normalized by 1/S).
class SpectralTransform {
 public:
  explicit SpectralTransform(const SpatialGrid& grid);
  ~SpectralTransform();
  SpectralTransform(const SpectralTransform&) = delete;
  SpectralTransform& operator=(const SpectralTransform&) = delete;

  void forward(Vec& f) const;   // in place, unnormalized
  void backward(Vec& f) const;  // in place, divides by S

  /// Unitary DFT matrix U with (U f)_m = S^{-1/2} sum_x e^{-i k_m x} f(x);
  /// dense, intended for small grids (oracles, slot-1 operators).
  Mat unitary_dft() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int S_;
};

}  // namespace nelson
