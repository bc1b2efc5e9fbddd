#pragma once

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "nelson/types.hpp"

namespace nelson {

/// One discretized field mode k = 2*pi*j/L with its dispersion and coupling
/// weights.
struct Mode {
  std::array<int, 3> idx{};      // integer multi-index j (unused axes zero)
  std::array<double, 3> k{};     // wavevector components
  double omega = 0.0;            // sqrt(|k|^2 + m_b^2)
  double g = 0.0;                // sqrt(dk^d) (2pi)^{-d/2} / sqrt(2 omega)
  std::array<double, 3> theta{}; // g * k, gradient weight

  double k_norm2() const {
    return k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
  }
};

/// Lattice of field momenta |k| <= Lambda on the torus of side L.
/// Houses the cutoff data: kappa, eta = kappa/sqrt(2 omega) and the
/// vector weight Theta = eta*k appear as dk^d-weighted sums over modes.
class ModeGrid {
 public:
  ModeGrid(int d, double L, double Lambda, double mass);

  int dimension() const { return d_; }
  double box_length() const { return L_; }
  double cutoff() const { return Lambda_; }
  double mass() const { return mass_; }
  double dk() const { return dk_; }
  /// dk^d, the momentum-space cell volume.
  double cell_volume() const { return cell_; }

  int size() const { return static_cast<int>(modes_.size()); }
  const Mode& mode(int j) const { return modes_.at(j); }
  const std::vector<Mode>& modes() const { return modes_; }

  /// Position of the mode with wavevector -k_j.
  int negated_index(int j) const { return neg_.at(j); }

  /// dk^d-weighted sum of |kappa~|^2 (-> Lambda^3/(6 pi^2) in d=3).
  double kappa_sq_norm() const;
  /// dk^d-weighted sum of |eta~|^2; equals sum_j g_j^2.
  double eta_sq_norm() const;
  /// dk^d-weighted sum of |k|^2 |eta~|^2; equals sum_j |theta_j|^2.
  double theta_sq_norm() const;

  /// exp(i k_j . x) for a position x (unused components of x ignored).
  cplx phase(int j, const std::array<double, 3>& x) const;

 private:
  int d_;
  double L_, Lambda_, mass_, dk_, cell_;
  std::vector<Mode> modes_;
  std::vector<int> neg_;
};

/// Occupation-number basis over M modes truncated at total boson number
/// n_max, in graded lexicographic order.
class FockBasis {
 public:
  static constexpr std::int64_t kMaxDimension = 4'000'000;

  FockBasis(int mode_count, int n_max);

  int mode_count() const { return M_; }
  int max_bosons() const { return n_max_; }
  int size() const { return static_cast<int>(tuples_.size()); }

  const std::vector<int>& tuple(int i) const { return tuples_.at(i); }
  int total_bosons(int i) const { return totals_.at(i); }

  /// Basis index of an occupation tuple, or -1 if it exceeds the cap.
  int index_of(const std::vector<int>& occ) const;

 private:
  int M_, n_max_;
  std::vector<std::vector<int>> tuples_;
  std::vector<int> totals_;
  std::unordered_map<std::uint64_t, int> index_;
  std::uint64_t key_of(const std::vector<int>& occ) const;
};

/// Sparse operator on the truncated Fock space (or any finite space).
struct SparseOperator {
  SpMat mat;
  bool hermitian = false;

  int dim() const { return static_cast<int>(mat.rows()); }
  Vec apply(const Vec& psi) const { return mat * psi; }
  SparseOperator adjoint() const;
};

std::int64_t fock_dimension(int mode_count, int n_max);

ModeGrid make_mode_grid(int d, double L, double Lambda, double mass);
FockBasis make_fock_basis(int mode_count, int n_max);

SparseOperator annihilator(const FockBasis& basis, int j);
SparseOperator creator(const FockBasis& basis, int j);
SparseOperator number_operator(const FockBasis& basis);
SparseOperator free_field_hamiltonian(const FockBasis& basis,
                                      const ModeGrid& grid);

/// Phi(x) = sum_j g_j (e^{ikx} a_j + e^{-ikx} a*_j), Hermitian.
SparseOperator field_operator(const ModeGrid& grid, const FockBasis& basis,
                              const std::array<double, 3>& x);
/// Positive/negative frequency parts; second is the adjoint of the first.
std::pair<SparseOperator, SparseOperator> field_operator_parts(
    const ModeGrid& grid, const FockBasis& basis,
    const std::array<double, 3>& x);
/// Component a of (grad Phi)(x) = sum_j i theta_j (e^{ikx} a_j - e^{-ikx} a*_j).
SparseOperator field_gradient(const ModeGrid& grid, const FockBasis& basis,
                              const std::array<double, 3>& x, int axis);

/// Anti-Hermitian generator sum_j f_j a*_j - f*_j a_j of the Weyl operator.
SparseOperator displacement_generator(const FockBasis& basis, const Vec& f);

struct WeylResult {
  Vec state;
  double norm_defect = 0.0;  // input norm minus output norm (truncation loss)
};

Vec vacuum(const FockBasis& basis);

/// Applies exp(sum_j f_j a*_j - f*_j a_j) to psi by a substepped Taylor
/// iteration converged to tol.
WeylResult weyl_displace(const FockBasis& basis, const Vec& f, const Vec& psi,
                         double tol = 1e-12);

WeylResult coherent_state(const FockBasis& basis, const Vec& alpha,
                          double tol = 1e-12);

/// n_max large enough that the Poisson tail of a coherent state with mean
/// occupation `mean_n` is negligible (norm defect below ~1e-8).
int suggest_n_max(double mean_n);

}  // namespace nelson
