#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nelson/indicators.hpp"

namespace nelson {

struct Phi0Spec {
  enum class Type { Gaussian, PlaneWave, File };
  Type type = Type::Gaussian;
  std::array<double, 3> center{};  // gaussian
  double width = 1.0;
  std::array<int, 3> k{};          // plane wave integer wavenumbers
  std::string path;                // file (one "re im" pair per node)
};

struct Alpha0Spec {
  enum class Type { Zero, SingleMode, File };
  Type type = Type::Zero;
  int j = 0;  // single mode
  cplx amplitude{0.0, 0.0};
  std::string path;
};

/// One experiment description, loaded from a flat JSON object.
struct RunConfig {
  std::string kind = "effective";  // effective | microscopic | sweep | check
  int d = 1;
  double L = 2.0 * pi;
  int n_x = 64;
  double Lambda = 2.5;
  double m_b = 1.0;
  int n_max = -1;  // -1: auto-sized from the coherent occupation
  std::vector<int> N_list{1};
  double dt = 1e-3;
  double t_final = 1.0;
  double snapshot_interval = 0.1;
  Phi0Spec phi0;
  Alpha0Spec alpha0;
  int krylov_dim = 24;
  double krylov_tol = 1e-9;
  bool coupling = true;
  int workers = 1;
  std::string out;
  std::uint64_t seed = 0;
};

/// Parse + validate a config. Unknown keys are rejected by name; defaults
/// are filled in the returned struct (echoed through config_echo).
RunConfig load_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);

/// The fully resolved config as a JSON string (defaults and the auto-sized
/// n_max made explicit).
std::string config_echo(const RunConfig& cfg);

/// n_max actually used: the configured value, or the coherent-occupation
/// sizing rule applied to max(N) * |alpha0|^2.
int resolved_n_max(const RunConfig& cfg);

Vec build_phi0(const Phi0Spec& spec, const SpatialGrid& grid);
Vec build_alpha0(const Alpha0Spec& spec, const ModeGrid& modes);

/// One output row: a snapshot of one (N, Lambda, t) point.
struct SweepRecord {
  std::string kind;
  int N = 0;
  double Lambda = 0.0;
  IndicatorReport report;
  bool has_indicators = false;  // false for effective-only rows
  double C_fit = 0.0;
  bool has_C = false;
  double walltime_s = 0.0;
};

struct RunResult {
  std::vector<SweepRecord> records;
  std::string summary_json;
};

RunResult run_effective(const RunConfig& cfg);
RunResult run_microscopic(const RunConfig& cfg, int N,
                          Mutation mutation = Mutation::None);
/// Parallel map over the N list; records merged in (N, Lambda, t) order.
RunResult run_sweep(const RunConfig& cfg, Mutation mutation = Mutation::None);

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct CheckReport {
  std::vector<SuiteResult> suites;
  bool all_passed = false;
};

/// Oracle-scale invariant suites over all modules. `mutation` injects a
/// deliberate fault (the derivative-identity suite must then fail).
CheckReport run_check(const RunConfig& cfg, Mutation mutation = Mutation::None);

/// Fixed-order CSV serialization of sweep records (columns documented in
/// the README); missing fields are left empty.
std::string to_csv(const std::vector<SweepRecord>& records);

/// Write content to path via a temp file + rename (no partial output).
void write_atomic(const std::string& path, const std::string& content);

Mutation mutation_from_name(const std::string& name);

}  // namespace nelson
