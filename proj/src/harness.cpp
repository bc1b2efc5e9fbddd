#include "nelson/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <random>
#include <semaphore>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace nelson {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void config_error(const std::string& msg) {
  throw std::invalid_argument("config: " + msg);
}

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.count(it.key()))
      config_error("unknown key \"" + it.key() + "\" in " + where);
  }
}

cplx parse_amplitude(const json& v) {
  if (v.is_number()) return cplx(v.get<double>(), 0.0);
  if (v.is_array() && v.size() == 2)
    return cplx(v[0].get<double>(), v[1].get<double>());
  config_error("amplitude must be a number or [re, im]");
}

Phi0Spec parse_phi0(const json& obj) {
  reject_unknown(obj, {"type", "center", "width", "k", "path"}, "phi0");
  Phi0Spec s;
  const std::string type = obj.value("type", "gaussian");
  if (type == "gaussian") {
    s.type = Phi0Spec::Type::Gaussian;
    if (obj.contains("center")) {
      auto c = obj.at("center");
      if (c.is_number()) {
        s.center[0] = c.get<double>();
      } else {
        for (std::size_t a = 0; a < c.size() && a < 3; ++a)
          s.center[a] = c[a].get<double>();
      }
    }
    s.width = obj.value("width", 1.0);
    if (s.width <= 0.0) config_error("phi0 width must be positive");
  } else if (type == "plane_wave") {
    s.type = Phi0Spec::Type::PlaneWave;
    if (obj.contains("k")) {
      auto k = obj.at("k");
      if (k.is_number_integer()) {
        s.k[0] = k.get<int>();
      } else {
        for (std::size_t a = 0; a < k.size() && a < 3; ++a)
          s.k[a] = k[a].get<int>();
      }
    }
  } else if (type == "file") {
    s.type = Phi0Spec::Type::File;
    if (!obj.contains("path")) config_error("phi0 file spec needs \"path\"");
    s.path = obj.at("path").get<std::string>();
  } else {
    config_error("phi0 type must be gaussian, plane_wave or file");
  }
  return s;
}

Alpha0Spec parse_alpha0(const json& obj) {
  reject_unknown(obj, {"type", "j", "amplitude", "path"}, "alpha0");
  Alpha0Spec s;
  const std::string type = obj.value("type", "zero");
  if (type == "zero") {
    s.type = Alpha0Spec::Type::Zero;
  } else if (type == "single_mode") {
    s.type = Alpha0Spec::Type::SingleMode;
    s.j = obj.value("j", 0);
    if (s.j < 0) config_error("alpha0 mode index must be >= 0");
    if (obj.contains("amplitude")) s.amplitude = parse_amplitude(obj.at("amplitude"));
  } else if (type == "file") {
    s.type = Alpha0Spec::Type::File;
    if (!obj.contains("path")) config_error("alpha0 file spec needs \"path\"");
    s.path = obj.at("path").get<std::string>();
  } else {
    config_error("alpha0 type must be zero, single_mode or file");
  }
  return s;
}

std::vector<int> parse_n_list(const json& v) {
  std::vector<int> out;
  if (v.is_number_integer()) {
    out.push_back(v.get<int>());
  } else if (v.is_array() && !v.empty()) {
    for (const auto& e : v) out.push_back(e.get<int>());
  } else {
    config_error("N must be a positive integer or a nonempty list");
  }
  for (int n : out)
    if (n < 1) config_error("N entries must be >= 1");
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::exception& e) {
    config_error(std::string("JSON parse failure: ") + e.what());
  }
  if (!obj.is_object()) config_error("top level must be a JSON object");
  reject_unknown(obj,
                 {"kind", "d", "L", "n_x", "Lambda", "m_b", "n_max", "N", "dt",
                  "t_final", "snapshot_interval", "phi0", "alpha0",
                  "krylov_dim", "krylov_tol", "coupling", "workers", "out",
                  "seed"},
                 "the top-level object");

  RunConfig cfg;
  cfg.kind = obj.value("kind", cfg.kind);
  if (cfg.kind != "effective" && cfg.kind != "microscopic" &&
      cfg.kind != "sweep" && cfg.kind != "check")
    config_error("kind must be effective, microscopic, sweep or check");
  cfg.d = obj.value("d", cfg.d);
  if (cfg.d != 1 && cfg.d != 3) config_error("d must be 1 or 3");
  cfg.L = obj.value("L", cfg.L);
  if (cfg.L <= 0.0) config_error("L must be positive");
  cfg.n_x = obj.value("n_x", cfg.n_x);
  if (cfg.n_x < 2) config_error("n_x must be >= 2");
  cfg.Lambda = obj.value("Lambda", cfg.Lambda);
  if (cfg.Lambda <= 0.0) config_error("Lambda must be positive");
  cfg.m_b = obj.value("m_b", cfg.m_b);
  if (cfg.m_b < 0.0) config_error("m_b must be >= 0");
  if (obj.contains("n_max")) {
    cfg.n_max = obj.at("n_max").get<int>();
    if (cfg.n_max < 0) config_error("n_max must be >= 0");
  }
  if (obj.contains("N")) cfg.N_list = parse_n_list(obj.at("N"));
  cfg.dt = obj.value("dt", cfg.dt);
  if (cfg.dt <= 0.0) config_error("dt must be positive");
  cfg.t_final = obj.value("t_final", cfg.t_final);
  if (cfg.t_final <= 0.0) config_error("t_final must be positive");
  cfg.snapshot_interval = obj.value("snapshot_interval", cfg.snapshot_interval);
  if (cfg.snapshot_interval <= 0.0)
    config_error("snapshot_interval must be positive");
  {
    const double snaps = cfg.t_final / cfg.snapshot_interval;
    if (std::abs(snaps - std::round(snaps)) > 1e-9 * std::max(1.0, snaps))
      config_error("snapshot_interval must divide t_final");
    const double steps = cfg.snapshot_interval / cfg.dt;
    if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
      config_error("dt must divide snapshot_interval");
  }
  if (obj.contains("phi0")) cfg.phi0 = parse_phi0(obj.at("phi0"));
  if (obj.contains("alpha0")) cfg.alpha0 = parse_alpha0(obj.at("alpha0"));
  cfg.krylov_dim = obj.value("krylov_dim", cfg.krylov_dim);
  if (cfg.krylov_dim < 2) config_error("krylov_dim must be >= 2");
  cfg.krylov_tol = obj.value("krylov_tol", cfg.krylov_tol);
  if (cfg.krylov_tol <= 0.0) config_error("krylov_tol must be positive");
  cfg.coupling = obj.value("coupling", cfg.coupling);
  cfg.workers = obj.value("workers", cfg.workers);
  if (cfg.workers < 1) config_error("workers must be >= 1");
  cfg.out = obj.value("out", cfg.out);
  cfg.seed = obj.value("seed", cfg.seed);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

int resolved_n_max(const RunConfig& cfg) {
  if (cfg.n_max >= 0) return cfg.n_max;
  double amp_sq = 0.0;
  if (cfg.alpha0.type == Alpha0Spec::Type::SingleMode)
    amp_sq = std::norm(cfg.alpha0.amplitude);
  else if (cfg.alpha0.type == Alpha0Spec::Type::File) {
    ModeGrid modes = make_mode_grid(cfg.d, cfg.L, cfg.Lambda, cfg.m_b);
    amp_sq = build_alpha0(cfg.alpha0, modes).squaredNorm();
  }
  const int n_big = *std::max_element(cfg.N_list.begin(), cfg.N_list.end());
  return suggest_n_max(n_big * amp_sq);
}

std::string config_echo(const RunConfig& cfg) {
  json obj;
  obj["kind"] = cfg.kind;
  obj["d"] = cfg.d;
  obj["L"] = cfg.L;
  obj["n_x"] = cfg.n_x;
  obj["Lambda"] = cfg.Lambda;
  obj["m_b"] = cfg.m_b;
  obj["n_max"] = resolved_n_max(cfg);
  obj["N"] = cfg.N_list;
  obj["dt"] = cfg.dt;
  obj["t_final"] = cfg.t_final;
  obj["snapshot_interval"] = cfg.snapshot_interval;
  json phi0;
  switch (cfg.phi0.type) {
    case Phi0Spec::Type::Gaussian:
      phi0["type"] = "gaussian";
      phi0["center"] = std::vector<double>(cfg.phi0.center.begin(),
                                           cfg.phi0.center.begin() + cfg.d);
      phi0["width"] = cfg.phi0.width;
      break;
    case Phi0Spec::Type::PlaneWave:
      phi0["type"] = "plane_wave";
      phi0["k"] =
          std::vector<int>(cfg.phi0.k.begin(), cfg.phi0.k.begin() + cfg.d);
      break;
    case Phi0Spec::Type::File:
      phi0["type"] = "file";
      phi0["path"] = cfg.phi0.path;
      break;
  }
  obj["phi0"] = phi0;
  json alpha0;
  switch (cfg.alpha0.type) {
    case Alpha0Spec::Type::Zero:
      alpha0["type"] = "zero";
      break;
    case Alpha0Spec::Type::SingleMode:
      alpha0["type"] = "single_mode";
      alpha0["j"] = cfg.alpha0.j;
      alpha0["amplitude"] = {cfg.alpha0.amplitude.real(),
                             cfg.alpha0.amplitude.imag()};
      break;
    case Alpha0Spec::Type::File:
      alpha0["type"] = "file";
      alpha0["path"] = cfg.alpha0.path;
      break;
  }
  obj["alpha0"] = alpha0;
  obj["krylov_dim"] = cfg.krylov_dim;
  obj["krylov_tol"] = cfg.krylov_tol;
  obj["coupling"] = cfg.coupling;
  obj["workers"] = cfg.workers;
  obj["out"] = cfg.out;
  obj["seed"] = cfg.seed;
  return obj.dump(2);
}

Vec build_phi0(const Phi0Spec& spec, const SpatialGrid& grid) {
  Vec phi(grid.size());
  switch (spec.type) {
    case Phi0Spec::Type::Gaussian: {
      const double L = grid.box_length();
      for (int s = 0; s < grid.size(); ++s) {
        const auto x = grid.position(s);
        double r2 = 0.0;
        for (int a = 0; a < grid.dimension(); ++a) {
          double r = std::fmod(x[a] - spec.center[a], L);
          if (r < -0.5 * L) r += L;
          if (r >= 0.5 * L) r -= L;
          r2 += r * r;
        }
        phi[s] = std::exp(-r2 / (2.0 * spec.width * spec.width));
      }
      break;
    }
    case Phi0Spec::Type::PlaneWave: {
      for (int s = 0; s < grid.size(); ++s) {
        const auto x = grid.position(s);
        double arg = 0.0;
        for (int a = 0; a < grid.dimension(); ++a)
          arg += 2.0 * pi * spec.k[a] * x[a] / grid.box_length();
        phi[s] = std::polar(1.0, arg);
      }
      break;
    }
    case Phi0Spec::Type::File: {
      std::ifstream in(spec.path);
      if (!in) config_error("cannot open phi0 file " + spec.path);
      for (int s = 0; s < grid.size(); ++s) {
        double re, im;
        if (!(in >> re >> im))
          config_error("phi0 file " + spec.path + " is too short");
        phi[s] = cplx(re, im);
      }
      break;
    }
  }
  const double n = grid.norm(phi);
  if (n <= 0.0) config_error("phi0 vanishes identically");
  return phi / n;
}

Vec build_alpha0(const Alpha0Spec& spec, const ModeGrid& modes) {
  Vec alpha = Vec::Zero(modes.size());
  switch (spec.type) {
    case Alpha0Spec::Type::Zero:
      break;
    case Alpha0Spec::Type::SingleMode:
      if (spec.j >= modes.size())
        config_error("alpha0 mode index " + std::to_string(spec.j) +
                     " out of range (grid has " +
                     std::to_string(modes.size()) + " modes)");
      alpha[spec.j] = spec.amplitude;
      break;
    case Alpha0Spec::Type::File: {
      std::ifstream in(spec.path);
      if (!in) config_error("cannot open alpha0 file " + spec.path);
      for (int j = 0; j < modes.size(); ++j) {
        double re, im;
        if (!(in >> re >> im))
          config_error("alpha0 file " + spec.path + " is too short");
        alpha[j] = cplx(re, im);
      }
      break;
    }
  }
  return alpha;
}

RunResult run_effective(const RunConfig& cfg) {
  const double t0 = now_seconds();
  auto grid = std::make_shared<SpatialGrid>(cfg.d, cfg.L, cfg.n_x);
  auto modes = std::make_shared<ModeGrid>(
      make_mode_grid(cfg.d, cfg.L, cfg.Lambda, cfg.m_b));
  SkgIntegrator integrator(grid, modes);

  EffectiveState state;
  state.phi = build_phi0(cfg.phi0, *grid);
  state.alpha = build_alpha0(cfg.alpha0, *modes);

  const int steps_per_snap =
      static_cast<int>(std::round(cfg.snapshot_interval / cfg.dt));
  const int snaps = static_cast<int>(std::round(cfg.t_final / cfg.snapshot_interval));

  RunResult result;
  const double e0 = skg_energy(state, *grid, *modes);
  const double norm0 = grid->norm(state.phi);
  auto record = [&](const EffectiveState& s) {
    SweepRecord rec;
    rec.kind = "effective";
    rec.Lambda = cfg.Lambda;
    rec.report.time = s.time;
    rec.report.energy = skg_energy(s, *grid, *modes);
    rec.walltime_s = now_seconds() - t0;
    result.records.push_back(std::move(rec));
  };
  record(state);
  for (int i = 0; i < snaps; ++i) {
    state = integrator.run(state, cfg.dt, steps_per_snap);
    record(state);
  }

  json summary;
  summary["kind"] = "effective";
  summary["config"] = json::parse(config_echo(cfg));
  summary["energy_drift"] =
      std::abs(result.records.back().report.energy - e0);
  summary["norm_drift"] = std::abs(grid->norm(state.phi) - norm0);
  result.summary_json = summary.dump(2);
  return result;
}

RunResult run_microscopic(const RunConfig& cfg, int N, Mutation mutation) {
  const double t0 = now_seconds();
  auto grid = std::make_shared<SpatialGrid>(cfg.d, cfg.L, cfg.n_x);
  auto modes = std::make_shared<ModeGrid>(
      make_mode_grid(cfg.d, cfg.L, cfg.Lambda, cfg.m_b));
  const int n_max = resolved_n_max(cfg);
  const std::int64_t fock_dim = fock_dimension(modes->size(), n_max);
  std::int64_t dim = fock_dim;
  for (int p = 0; p < N; ++p) dim *= grid->size();
  if (dim > FockBasis::kMaxDimension)
    config_error("microscopic dimension " + std::to_string(dim) +
                 " exceeds the budget of " +
                 std::to_string(FockBasis::kMaxDimension));
  auto basis =
      std::make_shared<FockBasis>(make_fock_basis(modes->size(), n_max));
  NelsonOperator op(grid, modes, basis, N, cfg.coupling);
  SkgIntegrator integrator(grid, modes);

  Vec phi0 = build_phi0(cfg.phi0, *grid);
  Vec alpha0 = build_alpha0(cfg.alpha0, *modes);
  ManyBodyState micro = product_initial_state(phi0, alpha0, N, grid, basis);
  EffectiveState eff{phi0, alpha0, 0.0};

  const int steps_per_snap =
      static_cast<int>(std::round(cfg.snapshot_interval / cfg.dt));
  const int snaps =
      static_cast<int>(std::round(cfg.t_final / cfg.snapshot_interval));

  RunResult result;
  std::vector<double> times, betas, betas2;
  auto record = [&](const ManyBodyState& psi, const EffectiveState& e) {
    SweepRecord rec;
    rec.kind = "microscopic";
    rec.N = N;
    rec.Lambda = cfg.Lambda;
    rec.report = make_report(psi, e, op, mutation);
    rec.has_indicators = true;
    rec.walltime_s = now_seconds() - t0;
    times.push_back(rec.report.time);
    betas.push_back(rec.report.beta);
    betas2.push_back(rec.report.beta2);
    result.records.push_back(std::move(rec));
  };

  try {
    record(micro, eff);
    for (int i = 0; i < snaps; ++i) {
      auto prop = propagate(op, micro, cfg.dt, steps_per_snap, cfg.krylov_dim,
                            cfg.krylov_tol);
      micro = std::move(prop.state);
      eff = integrator.run(eff, cfg.dt, steps_per_snap);
      record(micro, eff);
    }
  } catch (const std::runtime_error& e) {
    throw std::runtime_error("N=" + std::to_string(N) +
                             " Lambda=" + fmt(cfg.Lambda) + " t=" +
                             fmt(micro.time) + ": " + e.what());
  }

  GronwallFit fit = gronwall_fit(times, betas, N, cfg.Lambda, 2);
  GronwallFit fit2 = gronwall_fit(times, betas2, N, cfg.Lambda, 4);
  for (auto& rec : result.records) {
    rec.C_fit = fit.C;
    rec.has_C = true;
  }

  json summary;
  summary["kind"] = "microscopic";
  summary["config"] = json::parse(config_echo(cfg));
  summary["N"] = N;
  summary["C_beta"] = fit.C;
  summary["C_beta_valid"] = fit.valid;
  summary["C_beta2"] = fit2.C;
  summary["C_beta2_valid"] = fit2.valid;
  summary["final_beta"] = betas.back();
  summary["final_tr_dist_10"] = result.records.back().report.tr_dist_10;
  result.summary_json = summary.dump(2);
  return result;
}

namespace {

// least-squares slope of log(y) against log(N); requires positive y
double loglog_slope(const std::vector<int>& ns, const std::vector<double>& ys) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ys[i] <= 0.0) continue;
    const double x = std::log(double(ns[i])), y = std::log(ys[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return 0.0;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

RunResult run_sweep(const RunConfig& cfg, Mutation mutation) {
  std::counting_semaphore<64> slots(std::min(cfg.workers, 64));
  std::vector<std::future<RunResult>> futures;
  for (int N : cfg.N_list) {
    futures.push_back(std::async(std::launch::async, [&, N] {
      slots.acquire();
      try {
        RunResult r = run_microscopic(cfg, N, mutation);
        slots.release();
        return r;
      } catch (...) {
        slots.release();
        throw;
      }
    }));
  }

  RunResult result;
  json per_n = json::array();
  std::vector<double> final_tr, final_beta;
  for (std::size_t i = 0; i < futures.size(); ++i) {
    RunResult r = futures[i].get();  // N_list is sorted: deterministic order
    per_n.push_back(json::parse(r.summary_json));
    final_tr.push_back(r.records.back().report.tr_dist_10);
    final_beta.push_back(r.records.back().report.beta);
    for (auto& rec : r.records) result.records.push_back(std::move(rec));
  }

  json summary;
  summary["kind"] = "sweep";
  summary["config"] = json::parse(config_echo(cfg));
  summary["runs"] = per_n;
  summary["tr_dist_10_slope_indicative"] = loglog_slope(cfg.N_list, final_tr);
  summary["beta_slope_indicative"] = loglog_slope(cfg.N_list, final_beta);
  result.summary_json = summary.dump(2);
  return result;
}

std::string to_csv(const std::vector<SweepRecord>& records) {
  std::ostringstream out;
  out << "kind,N,Lambda,t,beta_a,beta_b,beta_c,beta,beta2,tr_dist_10,"
         "tr_dist_01,sobolev_dist,mean_boson,dbeta_a_dt,dbeta_b_dt,"
         "dbeta_c_dt,energy,C_fit,walltime_s\n";
  for (const auto& r : records) {
    out << r.kind << ',';
    if (r.N > 0) out << r.N;
    out << ',' << fmt(r.Lambda) << ',' << fmt(r.report.time) << ',';
    if (r.has_indicators) {
      const auto& p = r.report;
      out << fmt(p.beta_a) << ',' << fmt(p.beta_b) << ',' << fmt(p.beta_c)
          << ',' << fmt(p.beta) << ',' << fmt(p.beta2) << ','
          << fmt(p.tr_dist_10) << ',' << fmt(p.tr_dist_01) << ','
          << fmt(p.sobolev_dist) << ',' << fmt(p.mean_boson) << ','
          << fmt(p.dbeta_a_dt) << ',' << fmt(p.dbeta_b_dt) << ','
          << fmt(p.dbeta_c_dt) << ',';
    } else {
      out << ",,,,,,,,,,,,";
    }
    out << fmt(r.report.energy) << ',';
    if (r.has_C) out << fmt(r.C_fit);
    out << ',' << fmt(r.walltime_s) << '\n';
  }
  return out.str();
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failure on " + tmp.string());
  }
  fs::rename(tmp, target);
}

Mutation mutation_from_name(const std::string& name) {
  if (name.empty() || name == "none") return Mutation::None;
  if (name == "flip-dbeta-b-source") return Mutation::FlipDbetaBSource;
  config_error("unknown mutation \"" + name + "\"");
}

}  // namespace nelson
