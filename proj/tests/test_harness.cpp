#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nelson/harness.hpp"

using namespace nelson;

namespace {

std::string tiny_sweep_config(int workers) {
  std::ostringstream os;
  os << R"({
    "kind": "sweep",
    "n_x": 4,
    "Lambda": 1.2,
    "m_b": 0.0,
    "n_max": 2,
    "N": [1, 2],
    "dt": 0.01,
    "t_final": 0.1,
    "snapshot_interval": 0.05,
    "phi0": {"type": "gaussian", "center": [3.14159], "width": 0.8},
    "workers": )"
     << workers << "}";
  return os.str();
}

std::vector<std::string> csv_lines_no_walltime(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream is(csv);
  std::string line;
  while (std::getline(is, line)) {
    const auto cut = line.rfind(',');
    out.push_back(line.substr(0, cut));
  }
  return out;
}

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("minimal config takes the defaults") {
    RunConfig cfg = parse_config_text(R"({"kind": "effective"})");
    CHECK(cfg.n_x == 64);
    CHECK(cfg.L == doctest::Approx(2.0 * pi));
    CHECK(cfg.N_list == std::vector<int>{1});
    CHECK(cfg.coupling);
  }

  SUBCASE("unknown keys are named in the error") {
    CHECK_THROWS_WITH(parse_config_text(R"({"kind": "sweep", "nx": 8})"),
                      doctest::Contains("nx"));
    CHECK_THROWS_WITH(
        parse_config_text(
            R"({"kind": "sweep", "phi0": {"type": "gaussian", "sigma": 1}})"),
        doctest::Contains("sigma"));
  }

  SUBCASE("invalid values carry their field name") {
    CHECK_THROWS_WITH(parse_config_text(R"({"kind": "sweep", "n_x": 1})"),
                      doctest::Contains("n_x must be >= 2"));
    CHECK_THROWS_WITH(parse_config_text(R"({"kind": "nope"})"),
                      doctest::Contains("kind"));
    CHECK_THROWS_WITH(
        parse_config_text(
            R"({"kind": "sweep", "dt": 0.03, "snapshot_interval": 0.1})"),
        doctest::Contains("snapshot_interval"));
  }

  SUBCASE("N accepts a scalar or a sorted unique list") {
    RunConfig cfg = parse_config_text(R"({"kind": "sweep", "N": 3})");
    CHECK(cfg.N_list == std::vector<int>{3});
    cfg = parse_config_text(R"({"kind": "sweep", "N": [4, 1, 2, 1]})");
    CHECK(cfg.N_list == std::vector<int>{1, 2, 4});
    CHECK_THROWS_WITH(parse_config_text(R"({"kind": "sweep", "N": [0]})"),
                      doctest::Contains("N"));
  }

  SUBCASE("auto n_max is echoed resolved") {
    RunConfig cfg = parse_config_text(
        R"({"kind": "sweep", "alpha0": {"type": "single_mode", "j": 0,
            "amplitude": [0.4, 0.0]}, "N": 2})");
    CHECK(cfg.n_max == -1);
    CHECK(resolved_n_max(cfg) == suggest_n_max(2 * 0.16));
    CHECK(config_echo(cfg).find("\"n_max\": " +
                                std::to_string(resolved_n_max(cfg))) !=
          std::string::npos);
  }
}

TEST_CASE("initial data builders") {
  SpatialGrid grid(1, 2.0 * pi, 16);
  ModeGrid modes = make_mode_grid(1, 2.0 * pi, 1.2, 0.0);

  Phi0Spec g;
  g.type = Phi0Spec::Type::Gaussian;
  g.center = {pi, 0.0, 0.0};
  g.width = 0.7;
  Vec phi = build_phi0(g, grid);
  CHECK(grid.norm(phi) == doctest::Approx(1.0).epsilon(1e-12));

  Phi0Spec pw;
  pw.type = Phi0Spec::Type::PlaneWave;
  pw.k = {2, 0, 0};
  phi = build_phi0(pw, grid);
  CHECK(grid.norm(phi) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(phi[3] / phi[0] -
                 std::polar(1.0, 2.0 * grid.position(3)[0])) < 1e-12);

  Alpha0Spec a;
  a.type = Alpha0Spec::Type::SingleMode;
  a.j = 1;
  a.amplitude = cplx(0.3, -0.1);
  Vec alpha = build_alpha0(a, modes);
  CHECK(alpha.size() == modes.size());
  CHECK(alpha[1] == a.amplitude);
  CHECK(alpha[0] == cplx(0.0, 0.0));

  a.j = 99;
  CHECK_THROWS_WITH(build_alpha0(a, modes),
                    doctest::Contains("mode index 99 out of range"));
}

TEST_CASE("csv serialization") {
  SweepRecord rec;
  rec.kind = "microscopic";
  rec.N = 3;
  rec.Lambda = 1.2;
  rec.report.time = 0.25;
  rec.report.beta = 0.125;
  rec.has_indicators = true;
  rec.walltime_s = 1.5;

  std::string csv = to_csv({rec});
  std::istringstream is(csv);
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  CHECK(header ==
        "kind,N,Lambda,t,beta_a,beta_b,beta_c,beta,beta2,tr_dist_10,"
        "tr_dist_01,sobolev_dist,mean_boson,dbeta_a_dt,dbeta_b_dt,"
        "dbeta_c_dt,energy,C_fit,walltime_s");
  CHECK(row.substr(0, 24) == "microscopic,3,1.2,0.25,0");

  // effective rows leave the indicator columns empty
  rec.kind = "effective";
  rec.N = 0;
  rec.has_indicators = false;
  std::string row2 = to_csv({rec});
  CHECK(row2.find(",,") != std::string::npos);
}

TEST_CASE("atomic writes leave no temp files") {
  namespace fs = std::filesystem;
  const std::string dir = (fs::temp_directory_path() / "nelson_test_out").string();
  fs::remove_all(dir);
  const std::string path = dir + "/a/b.csv";
  write_atomic(path, "hello\n");
  std::ifstream in(path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  CHECK(content == "hello\n");
  int entries = 0;
  for (auto& e : fs::directory_iterator(dir + "/a")) {
    (void)e;
    ++entries;
  }
  CHECK(entries == 1);
  fs::remove_all(dir);
}

TEST_CASE("effective driver emits one row per snapshot") {
  RunConfig cfg = parse_config_text(R"({
    "kind": "effective", "n_x": 16, "Lambda": 1.2, "m_b": 0.0,
    "dt": 0.001, "t_final": 0.1, "snapshot_interval": 0.02,
    "alpha0": {"type": "single_mode", "j": 0, "amplitude": [0.2, 0.1]}})");
  RunResult res = run_effective(cfg);
  CHECK(res.records.size() == 6);
  CHECK(res.records.front().report.time == doctest::Approx(0.0));
  CHECK(res.records.back().report.time == doctest::Approx(0.1));
  for (const auto& r : res.records) CHECK(!r.has_indicators);
  CHECK(res.summary_json.find("energy_drift") != std::string::npos);
}

TEST_CASE("sweep driver") {
  RunConfig cfg = parse_config_text(tiny_sweep_config(1));
  RunResult res = run_sweep(cfg);

  // 2 values of N, 3 snapshots each
  CHECK(res.records.size() == 6);
  for (std::size_t i = 1; i < res.records.size(); ++i) {
    const auto &a = res.records[i - 1], &b = res.records[i];
    CHECK((a.N < b.N || (a.N == b.N && a.report.time < b.report.time)));
  }
  // product initial data condenses exactly at t=0
  CHECK(res.records.front().report.tr_dist_10 < 1e-8);
  CHECK(res.records.front().report.beta < 1e-8);

  SUBCASE("deterministic across worker counts, walltime aside") {
    RunConfig cfg2 = parse_config_text(tiny_sweep_config(2));
    RunResult res2 = run_sweep(cfg2);
    CHECK(csv_lines_no_walltime(to_csv(res.records)) ==
          csv_lines_no_walltime(to_csv(res2.records)));
  }
}

TEST_CASE("microscopic driver reports errors with context") {
  RunConfig cfg = parse_config_text(R"({
    "kind": "microscopic", "n_x": 64, "Lambda": 1.2, "m_b": 0.0,
    "n_max": 8, "N": 4, "dt": 0.01, "t_final": 0.1,
    "snapshot_interval": 0.05})");
  CHECK_THROWS_WITH(run_microscopic(cfg, 4), doctest::Contains("budget"));
}

TEST_CASE("invariant suites") {
  RunConfig cfg;
  cfg.kind = "check";
  CheckReport rep = run_check(cfg);
  CHECK(rep.all_passed);
  CHECK(rep.suites.size() == 9);

  CheckReport bad = run_check(cfg, Mutation::FlipDbetaBSource);
  CHECK(!bad.all_passed);
  int failed = 0;
  for (const auto& s : bad.suites)
    if (!s.passed) {
      ++failed;
      CHECK(s.name == "derivative-identity");
    }
  CHECK(failed == 1);
}

TEST_CASE("mutation names") {
  CHECK(mutation_from_name("none") == Mutation::None);
  CHECK(mutation_from_name("flip-dbeta-b-source") ==
        Mutation::FlipDbetaBSource);
  CHECK_THROWS_WITH(mutation_from_name("bogus"),
                    doctest::Contains("mutation"));
}
