// Oracle-scale invariant suites behind the `check` subcommand. Every suite
// is deterministic in the config seed; failures carry the instance index so
// a run can be replayed.
#include <cmath>
#include <random>
#include <sstream>

#include "nelson/harness.hpp"

namespace nelson {

namespace {

Vec random_vec(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> dist;
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * cplx(dist(rng), dist(rng));
  return v;
}

Vec random_unit(std::mt19937_64& rng, int n) {
  Vec v = random_vec(rng, n);
  return v / v.norm();
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << v;
  return ss.str();
}

// d=1 oracle fixtures: L = 2pi, massless field so the cutoff 1.2 keeps
// exactly the two modes k = +-1
struct Fixture {
  std::shared_ptr<SpatialGrid> grid;
  std::shared_ptr<ModeGrid> modes;
  std::shared_ptr<FockBasis> basis;

  Fixture(int n_x, int n_max)
      : grid(std::make_shared<SpatialGrid>(1, 2.0 * pi, n_x)),
        modes(std::make_shared<ModeGrid>(make_mode_grid(1, 2.0 * pi, 1.2, 0.0))),
        basis(std::make_shared<FockBasis>(
            make_fock_basis(2, n_max))) {}
};

SuiteResult suite_ccr() {
  SuiteResult r{"ccr", false, ""};
  FockBasis basis = make_fock_basis(2, 4);
  const int F = basis.size();
  double worst = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      Mat ai = Mat(annihilator(basis, i).mat);
      Mat aj = Mat(annihilator(basis, j).mat);
      Mat comm = ai * aj.adjoint() - aj.adjoint() * ai;
      // [a_i, a_j+] = delta_ij below the top total-number sector
      for (int c = 0; c < F; ++c) {
        if (basis.total_bosons(c) >= basis.max_bosons()) continue;
        Vec col = comm.col(c);
        if (i == j) col[c] -= 1.0;
        worst = std::max(worst, col.template lpNorm<Eigen::Infinity>());
      }
      worst = std::max(worst, (ai * aj - aj * ai).cwiseAbs().maxCoeff());
    }
  }
  Mat num = Mat(number_operator(basis).mat);
  Mat sum = Mat::Zero(F, F);
  for (int j = 0; j < 2; ++j) {
    Mat a = Mat(annihilator(basis, j).mat);
    sum += a.adjoint() * a;
  }
  worst = std::max(worst, (num - sum).cwiseAbs().maxCoeff());
  r.passed = worst <= 1e-12;
  r.detail = "max deviation " + fmt(worst);
  return r;
}

SuiteResult suite_displacement() {
  SuiteResult r{"displacement", false, ""};
  FockBasis basis = make_fock_basis(2, 14);
  Vec f(2);
  f << cplx(0.3, 0.2), cplx(-0.25, 0.1);

  WeylResult coh = coherent_state(basis, f);
  double worst = std::abs(coh.norm_defect);

  // displaced vacuum against the explicit product-Poisson amplitudes
  const double pref = std::exp(-0.5 * f.squaredNorm());
  for (int i = 0; i < basis.size(); ++i) {
    const auto& occ = basis.tuple(i);
    cplx expect = pref;
    for (int j = 0; j < 2; ++j) {
      for (int n = 1; n <= occ[j]; ++n) expect *= f[j] / std::sqrt(double(n));
    }
    worst = std::max(worst, std::abs(coh.state[i] - expect));
  }

  for (int j = 0; j < 2; ++j) {
    Vec lowered = annihilator(basis, j).mat * coh.state;
    worst = std::max(worst, (lowered - f[j] * coh.state).norm());
  }

  WeylResult back = weyl_displace(basis, -f, coh.state);
  Vec vac = vacuum(basis);
  worst = std::max(worst, (back.state - vac).norm());

  r.passed = worst <= 1e-8;
  r.detail = "max deviation " + fmt(worst);
  return r;
}

ManyBodyState random_state(std::mt19937_64& rng, const Fixture& fx, int N) {
  std::int64_t dim = fx.basis->size();
  for (int p = 0; p < N; ++p) dim *= fx.grid->size();
  ManyBodyState psi;
  psi.N = N;
  psi.grid = fx.grid;
  psi.basis = fx.basis;
  psi.coeff = random_unit(rng, static_cast<int>(dim));
  return psi;
}

SuiteResult suite_sandwich(std::uint64_t seed) {
  SuiteResult r{"sandwich-inequalities", false, ""};
  std::mt19937_64 rng(seed ^ 0x1ea1);
  Fixture fx(4, 2);
  for (int i = 0; i < 50; ++i) {
    ManyBodyState psi = random_state(rng, fx, 2);
    Vec phi = random_unit(rng, fx.grid->size()) /
              std::sqrt(fx.grid->cell_volume());
    Vec alpha = random_vec(rng, fx.modes->size(), 0.5);
    SandwichReport rep = sandwich_bounds(psi, phi, alpha);
    if (!rep.holds(1e-9)) {
      r.detail = "violation at instance " + std::to_string(i);
      return r;
    }
  }
  r.passed = true;
  r.detail = "50 random states";
  return r;
}

SuiteResult suite_field_bounds(std::uint64_t seed) {
  SuiteResult r{"field-difference-bounds", false, ""};
  std::mt19937_64 rng(seed ^ 0xf1e1d);
  Fixture fx(4, 2);
  NelsonOperator op(fx.grid, fx.modes, fx.basis, 2);
  for (int i = 0; i < 50; ++i) {
    ManyBodyState psi = random_state(rng, fx, 2);
    Vec phi = random_unit(rng, fx.grid->size()) /
              std::sqrt(fx.grid->cell_volume());
    Vec alpha = random_vec(rng, fx.modes->size(), 0.5);
    const auto x = fx.grid->position(i % fx.grid->size());
    FieldDifferenceReport rep =
        field_difference_norms(psi, alpha, x, op, phi);
    const double tol = 1e-9;
    if (rep.full_sq > rep.bound_full + tol ||
        rep.plus_sq > rep.bound_plus + tol ||
        rep.plus_p1_sq > rep.bound_plus + tol ||
        rep.grad_sq > rep.bound_grad + tol) {
      r.detail = "violation at instance " + std::to_string(i);
      return r;
    }
  }
  r.passed = true;
  r.detail = "50 random states";
  return r;
}

SuiteResult suite_derivative_identity(const RunConfig& cfg,
                                      Mutation mutation) {
  SuiteResult r{"derivative-identity", false, ""};
  Fixture fx(8, 4);
  NelsonOperator op(fx.grid, fx.modes, fx.basis, 1, cfg.coupling);
  SkgIntegrator integrator(fx.grid, fx.modes);

  Phi0Spec phi_spec;
  phi_spec.center = {pi, 0.0, 0.0};
  phi_spec.width = 0.8;
  Vec phi0 = build_phi0(phi_spec, *fx.grid);
  // alpha0 = 0 keeps the boson occupation low enough that the truncated
  // commutation relations do not pollute the beta^b identity at n_max = 4
  Vec alpha0 = Vec::Zero(fx.modes->size());

  ManyBodyState micro = product_initial_state(phi0, alpha0, 1, fx.grid,
                                              fx.basis);
  EffectiveState eff{phi0, alpha0, 0.0};

  const double h2 = 0.005;  // snapshot spacing (half the FD step)
  const int snaps = 40;
  std::vector<std::array<double, 3>> beta(snaps + 1);
  std::vector<BetaDerivatives> analytic(snaps + 1);
  for (int i = 0; i <= snaps; ++i) {
    if (i > 0) {
      micro = propagate(op, micro, h2, 1, 32, 1e-12).state;
      if (cfg.coupling) {
        eff = integrator.run(eff, 2e-5, 250);
      } else {
        // matched free flows: spectral phases only
        SpectralTransform fft(*fx.grid);
        fft.forward(eff.phi);
        for (int m = 0; m < fx.grid->size(); ++m)
          eff.phi[m] *= std::polar(1.0, -fx.grid->laplacian_multiplier(m) * h2);
        fft.backward(eff.phi);
        for (int j = 0; j < fx.modes->size(); ++j)
          eff.alpha[j] *= std::polar(1.0, -fx.modes->mode(j).omega * h2);
        eff.time += h2;
      }
    }
    beta[i] = {beta_a(micro, eff.phi), beta_b(micro, eff.alpha),
               beta_c(micro, eff.phi)};
    analytic[i] = dbeta_dt_analytic(micro, eff, op, mutation);
  }

  if (!cfg.coupling) {
    double worst = 0.0;
    for (int i = 0; i <= snaps; ++i) {
      worst = std::max({worst, beta[i][0], beta[i][1], beta[i][2],
                        std::abs(analytic[i].da), std::abs(analytic[i].db),
                        std::abs(analytic[i].dc)});
    }
    r.passed = worst <= 1e-10;
    r.detail = "free flows, max |beta|,|d beta| " + fmt(worst);
    return r;
  }

  double worst = 0.0;
  for (int i = 2; i + 2 <= snaps; i += 2) {
    for (int c = 0; c < 3; ++c) {
      const double d_h = (beta[i + 2][c] - beta[i - 2][c]) / (4.0 * h2);
      const double d_h2 = (beta[i + 1][c] - beta[i - 1][c]) / (2.0 * h2);
      const double richardson = (4.0 * d_h2 - d_h) / 3.0;
      const double ref =
          c == 0 ? analytic[i].da : (c == 1 ? analytic[i].db : analytic[i].dc);
      worst = std::max(worst,
                       std::abs(richardson - ref) / std::max(std::abs(ref), 1e-8));
    }
  }
  r.passed = worst <= 1e-6;
  r.detail = "max relative error " + fmt(worst);
  return r;
}

SuiteResult suite_gamma01_trace(std::uint64_t seed) {
  SuiteResult r{"gamma01-trace-identity", false, ""};
  std::mt19937_64 rng(seed ^ 0x19);
  Fixture fx(4, 2);
  SpMat num = number_operator(*fx.basis).mat;
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    ManyBodyState psi = random_state(rng, fx, 2);
    const double lhs = gamma_01(psi).trace();
    const double rhs =
        psi.coeff.dot(apply_mode_operator(psi, num)).real() / psi.N;
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  r.passed = worst <= 1e-10;
  r.detail = "max deviation " + fmt(worst);
  return r;
}

SuiteResult suite_projector_bound(std::uint64_t seed) {
  SuiteResult r{"projector-trace-bound", false, ""};
  std::mt19937_64 rng(seed ^ 0x31);
  std::uniform_int_distribution<int> dims(2, 12);
  for (int i = 0; i < 100; ++i) {
    const int n = dims(rng);
    Mat b(n, n);
    for (int c = 0; c < n; ++c) b.col(c) = random_vec(rng, n);
    Mat gamma = b * b.adjoint();
    gamma /= gamma.trace().real();
    Vec u = random_unit(rng, n);
    Mat p = u * u.adjoint();
    const Mat diff = gamma - p;
    const double lhs = trace_norm(diff);
    const double rhs = 2.0 * diff.norm() + diff.trace().real();
    if (lhs > rhs + 1e-10) {
      r.detail = "violation at instance " + std::to_string(i);
      return r;
    }
  }
  r.passed = true;
  r.detail = "100 random instances";
  return r;
}

SuiteResult suite_conservation(const RunConfig& cfg) {
  SuiteResult r{"conservation", false, ""};
  Fixture fx(8, 4);
  NelsonOperator op(fx.grid, fx.modes, fx.basis, 1, cfg.coupling);

  Phi0Spec phi_spec;
  phi_spec.center = {pi, 0.0, 0.0};
  phi_spec.width = 0.8;
  Vec phi0 = build_phi0(phi_spec, *fx.grid);
  Vec alpha0 = Vec::Zero(fx.modes->size());
  alpha0[0] = cplx(0.2, 0.1);
  ManyBodyState micro =
      product_initial_state(phi0, alpha0, 1, fx.grid, fx.basis);
  auto prop = propagate(op, micro, 1e-3, 200);

  SkgIntegrator integrator(fx.grid, fx.modes);
  EffectiveState eff{phi0, alpha0, 0.0};
  const double e0 = skg_energy(eff, *fx.grid, *fx.modes);
  EffectiveState end = integrator.run(eff, 1e-3, 1000);
  const double e_drift = std::abs(skg_energy(end, *fx.grid, *fx.modes) - e0);
  const double n_drift = std::abs(fx.grid->norm(end.phi) - 1.0);

  r.passed = prop.norm_drift <= 1e-9 && prop.energy_drift <= 1e-8 &&
             n_drift <= 1e-10 && e_drift <= 1e-8;
  r.detail = "micro norm/energy drift " + fmt(prop.norm_drift) + "/" +
             fmt(prop.energy_drift) + ", effective " + fmt(n_drift) + "/" +
             fmt(e_drift);
  return r;
}

SuiteResult suite_oracle_equivalence(const RunConfig& cfg) {
  SuiteResult r{"oracle-equivalence", false, ""};
  Fixture fx(8, 4);
  NelsonOperator op(fx.grid, fx.modes, fx.basis, 1, cfg.coupling);

  Phi0Spec phi_spec;
  phi_spec.center = {pi, 0.0, 0.0};
  phi_spec.width = 0.8;
  Vec phi0 = build_phi0(phi_spec, *fx.grid);
  Vec alpha0 = Vec::Zero(fx.modes->size());
  alpha0[0] = cplx(0.2, 0.1);
  ManyBodyState micro =
      product_initial_state(phi0, alpha0, 1, fx.grid, fx.basis);

  DenseOracle oracle(op);
  Vec dense = oracle.propagate(micro.coeff, 0.5);
  Vec krylov = propagate(op, micro, 0.01, 50).state.coeff;

  const double dev = (dense - krylov).norm();
  r.passed = dev <= 1e-8;
  r.detail = "state deviation " + fmt(dev);
  return r;
}

}  // namespace

CheckReport run_check(const RunConfig& cfg, Mutation mutation) {
  CheckReport report;
  report.suites.push_back(suite_ccr());
  report.suites.push_back(suite_displacement());
  report.suites.push_back(suite_sandwich(cfg.seed));
  report.suites.push_back(suite_field_bounds(cfg.seed));
  report.suites.push_back(suite_derivative_identity(cfg, mutation));
  report.suites.push_back(suite_gamma01_trace(cfg.seed));
  report.suites.push_back(suite_projector_bound(cfg.seed));
  report.suites.push_back(suite_conservation(cfg));
  report.suites.push_back(suite_oracle_equivalence(cfg));
  report.all_passed = true;
  for (const auto& s : report.suites) report.all_passed &= s.passed;
  return report;
}

}  // namespace nelson
