#include <doctest.h>

#include <cmath>
#include <random>

#include "nelson/manybody.hpp"

using namespace nelson;

namespace {

std::shared_ptr<SpatialGrid> grid1d(int n_x) {
  return std::make_shared<SpatialGrid>(1, 2.0 * pi, n_x);
}

// two massless modes k = +-1
std::shared_ptr<ModeGrid> two_modes() {
  return std::make_shared<ModeGrid>(make_mode_grid(1, 2.0 * pi, 1.2, 0.0));
}

Vec random_unit(std::mt19937_64& rng, std::int64_t n) {
  std::normal_distribution<double> dist;
  Vec v(n);
  for (std::int64_t i = 0; i < n; ++i) v[i] = cplx(dist(rng), dist(rng));
  return v / v.norm();
}

Vec gaussian_phi(const SpatialGrid& grid, double width = 0.8) {
  Vec phi(grid.size());
  for (int s = 0; s < grid.size(); ++s) {
    double r = grid.position(s)[0] - pi;
    phi[s] = std::exp(-r * r / (2.0 * width * width));
  }
  return phi / grid.norm(phi);
}

}  // namespace

TEST_CASE("spatial grid rejects degenerate sizes") {
  CHECK_THROWS_WITH(SpatialGrid(1, 2.0 * pi, 1),
                    doctest::Contains("n_x must be >= 2"));
}

TEST_CASE("spectral multipliers square the grid momenta") {
  SpatialGrid grid(1, 2.0 * pi, 8);
  for (int m = 0; m < grid.size(); ++m) {
    CHECK(grid.laplacian_multiplier(m) >= 0.0);
    const double k = grid.gradient_multiplier(m, 0);
    CHECK(grid.laplacian_multiplier(m) == doctest::Approx(k * k));
  }
}

TEST_CASE("product initial state with empty field is exactly normalized") {
  auto grid = grid1d(8);
  auto modes = two_modes();
  auto basis = std::make_shared<FockBasis>(make_fock_basis(2, 3));
  ManyBodyState psi = product_initial_state(
      gaussian_phi(*grid), Vec::Zero(2), 2, grid, basis);
  CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-14));

  Vec n_psi = apply_mode_operator(psi, number_operator(*basis).mat);
  CHECK(std::abs(psi.coeff.dot(n_psi)) < 1e-14);
}

TEST_CASE("product state boson count follows the coherent mean") {
  auto grid = grid1d(16);
  auto modes = two_modes();
  const int n_max = suggest_n_max(2 * 0.16);
  auto basis = std::make_shared<FockBasis>(make_fock_basis(2, n_max));
  Vec alpha0 = Vec::Zero(2);
  alpha0[0] = cplx(0.4, 0.0);
  ManyBodyState psi =
      product_initial_state(gaussian_phi(*grid), alpha0, 2, grid, basis);
  Vec n_psi = apply_mode_operator(psi, number_operator(*basis).mat);
  CHECK(psi.coeff.dot(n_psi).real() == doctest::Approx(0.32).epsilon(1e-7));
}

TEST_CASE("undersized basis is reported with advice") {
  auto grid = grid1d(4);
  auto basis = std::make_shared<FockBasis>(make_fock_basis(2, 1));
  Vec alpha0 = Vec::Zero(2);
  alpha0[0] = cplx(1.5, 0.0);
  CHECK_THROWS_WITH(
      product_initial_state(gaussian_phi(*grid), alpha0, 1, grid, basis),
      doctest::Contains("increase n_max"));
}

TEST_CASE("free Hamiltonian on tensor eigenstates") {
  auto grid = grid1d(8);
  auto modes = two_modes();
  auto basis = std::make_shared<FockBasis>(make_fock_basis(2, 2));
  NelsonOperator op(grid, modes, basis, 1, false);

  // plane wave tensor vacuum: H psi = |k|^2 psi
  const int F = basis->size();
  Vec psi = Vec::Zero(op.dim());
  for (int s = 0; s < grid->size(); ++s) {
    psi[s * F] = std::polar(std::sqrt(grid->cell_volume() / (2.0 * pi)),
                            2.0 * grid->position(s)[0]);
  }
  Vec h_psi = op.apply(psi);
  CHECK((h_psi - 4.0 * psi).norm() < 1e-12);

  // gaussian tensor one boson: H psi = (-Lap phi) x chi + omega phi x chi
  Vec phi = gaussian_phi(*grid);
  std::vector<int> occ{1, 0};
  const int chi = basis->index_of(occ);
  Vec psi2 = Vec::Zero(op.dim());
  for (int s = 0; s < grid->size(); ++s)
    psi2[s * F + chi] = phi[s] * std::sqrt(grid->cell_volume());

  SpectralTransform fft(*grid);
  Vec lap = phi;
  fft.forward(lap);
  for (int m = 0; m < grid->size(); ++m) lap[m] *= grid->laplacian_multiplier(m);
  fft.backward(lap);
  Vec expect = Vec::Zero(op.dim());
  for (int s = 0; s < grid->size(); ++s) {
    expect[s * F + chi] = (lap[s] + modes->mode(0).omega * phi[s]) *
                          std::sqrt(grid->cell_volume());
  }
  CHECK((op.apply(psi2) - expect).norm() < 1e-12);
}

TEST_CASE("matrix-free application is Hermitian") {
  auto grid = grid1d(4);
  auto modes = two_modes();
  auto basis = std::make_shared<FockBasis>(make_fock_basis(2, 2));
  NelsonOperator op(grid, modes, basis, 2);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    Vec u = random_unit(rng, op.dim());
    Vec v = random_unit(rng, op.dim());
    CHECK(std::abs(u.dot(op.apply(v)) - std::conj(v.dot(op.apply(u)))) <
          1e-10);
  }
}

TEST_CASE("dense oracle") {
  auto grid = grid1d(4);
  auto modes = two_modes();
  auto basis = std::make_shared<FockBasis>(make_fock_basis(2, 2));

  NelsonOperator coupled(grid, modes, basis, 1, true);
  DenseOracle oracle(coupled);
  CHECK((oracle.matrix() - oracle.matrix().adjoint()).cwiseAbs().maxCoeff() <
        1e-12);

  NelsonOperator free_op(grid, modes, basis, 1, false);
  DenseOracle free_oracle(free_op);

  // decoupled spectrum is the set of sums {spatial + field}
  std::vector<double> expect;
  for (int m = 0; m < grid->size(); ++m) {
    for (int i = 0; i < basis->size(); ++i) {
      double e = grid->laplacian_multiplier(m);
      for (int j = 0; j < 2; ++j)
        e += modes->mode(j).omega * basis->tuple(i)[j];
      expect.push_back(e);
    }
  }
  std::sort(expect.begin(), expect.end());
  for (int i = 0; i < free_oracle.eigenvalues().size(); ++i)
    CHECK(free_oracle.eigenvalues()[i] == doctest::Approx(expect[i]).epsilon(1e-10));

  // the interaction pushes the ground state down
  CHECK(oracle.eigenvalues()[0] < free_oracle.eigenvalues()[0] - 1e-6);
}

TEST_CASE("free propagation reproduces exact phases") {
  auto grid = grid1d(8);
  auto modes = two_modes();
  auto basis = std::make_shared<FockBasis>(make_fock_basis(2, 2));
  NelsonOperator op(grid, modes, basis, 1, false);

  const int F = basis->size();
  std::vector<int> occ{0, 1};
  const int chi = basis->index_of(occ);
  Vec psi0 = Vec::Zero(op.dim());
  for (int s = 0; s < grid->size(); ++s) {
    psi0[s * F + chi] = std::polar(std::sqrt(grid->cell_volume() / (2.0 * pi)),
                                   grid->position(s)[0]);
  }
  ManyBodyState state{1, grid, basis, psi0, 0.0};
  PropagationResult res = propagate(op, state, 0.05, 20);
  const cplx phase =
      std::exp(cplx(0.0, -(1.0 + modes->mode(1).omega) * 1.0));
  CHECK((res.state.coeff - phase * psi0).norm() < 1e-9);
  CHECK(res.state.time == doctest::Approx(1.0));
}

TEST_CASE("coupled propagation is unitary and conserves energy") {
  auto grid = grid1d(8);
  auto modes = two_modes();
  auto basis = std::make_shared<FockBasis>(make_fock_basis(2, 3));
  NelsonOperator op(grid, modes, basis, 1);
  ManyBodyState psi =
      product_initial_state(gaussian_phi(*grid), Vec::Zero(2), 1, grid, basis);
  PropagationResult res = propagate(op, psi, 0.01, 100);
  CHECK(res.norm_drift < 1e-9);
  CHECK(res.energy_drift < 1e-9);
}

TEST_CASE("krylov propagation matches the dense oracle") {
  auto grid = grid1d(8);
  auto modes = two_modes();
  auto basis = std::make_shared<FockBasis>(make_fock_basis(2, 3));
  NelsonOperator op(grid, modes, basis, 1);
  ManyBodyState psi =
      product_initial_state(gaussian_phi(*grid), Vec::Zero(2), 1, grid, basis);

  DenseOracle oracle(op);
  Vec dense = oracle.propagate(psi.coeff, 0.5);
  Vec krylov = propagate(op, psi, 0.01, 50).state.coeff;
  CHECK((dense - krylov).norm() < 1e-8);
}

TEST_CASE("propagation preserves particle-exchange symmetry") {
  auto grid = grid1d(4);
  auto modes = two_modes();
  auto basis = std::make_shared<FockBasis>(make_fock_basis(2, 2));
  NelsonOperator op(grid, modes, basis, 2);
  const int S = grid->size(), F = basis->size();

  std::mt19937_64 rng(17);
  Vec raw = random_unit(rng, op.dim());
  Vec sym(op.dim());
  for (int s1 = 0; s1 < S; ++s1)
    for (int s2 = 0; s2 < S; ++s2)
      for (int f = 0; f < F; ++f) {
        const std::int64_t ij = (s1 * S + s2) * F + f;
        const std::int64_t ji = (s2 * S + s1) * F + f;
        sym[ij] = raw[ij] + raw[ji];
      }
  sym /= sym.norm();

  ManyBodyState psi{2, grid, basis, sym, 0.0};
  Vec out = propagate(op, psi, 0.02, 25).state.coeff;
  double asym = 0.0;
  for (int s1 = 0; s1 < S; ++s1)
    for (int s2 = 0; s2 < S; ++s2)
      for (int f = 0; f < F; ++f) {
        asym = std::max(asym,
                        std::abs(out[(s1 * S + s2) * F + f] -
                                 out[(s2 * S + s1) * F + f]));
      }
  CHECK(asym < 1e-9);
}
