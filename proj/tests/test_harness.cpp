#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "relaycheck/harness.hpp"
#include "relaycheck/util.hpp"

using namespace relaycheck;

namespace {
const ChannelModel channel;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.beta1 = 2.0;
  cfg.n = 20000;
  cfg.trials = 100;
  cfg.master_seed = 20250809;
  cfg.quantile_q = 0.99;
  cfg.calibration_trials = 150;
  return cfg;
}
}  // namespace

TEST_CASE("attack specs parse, format and round-trip") {
  for (const char* text :
       {"identity", "sign_flip", "resample", "offset:0.5", "garble:0.1:sign_flip",
        "block:100*offset:0.5,900*identity", "custom:kern.csv"}) {
    CHECK(format_attack(parse_attack(text)) == text);
  }
  CHECK_THROWS_AS(parse_attack("unknown"), std::invalid_argument);
  CHECK_THROWS_AS(parse_attack("offset:abc"), std::invalid_argument);
  CHECK_THROWS_AS(parse_attack("garble:0.1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_attack("garble:1.5:sign_flip"), std::invalid_argument);
  CHECK_THROWS_AS(parse_attack("block:abc*identity"), std::invalid_argument);
  CHECK_THROWS_AS(parse_attack("custom:"), std::invalid_argument);

  CHECK(format_attack(with_attack_param(parse_attack("garble:0.1:sign_flip"), 0.2)) ==
        "garble:0.2:sign_flip");
  CHECK(format_attack(with_attack_param(parse_attack("offset:0.5"), 1.5)) == "offset:1.5");
  CHECK_THROWS_AS(with_attack_param(parse_attack("identity"), 0.1), std::invalid_argument);
}

TEST_CASE("custom kernels load from CSV with validation") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto good = dir / "relaycheck_kernel_good.csv";
  {
    std::ofstream out(good);
    out << "0,0.5\n0,1\n0.25,0.75\n";
  }
  const WMatrix w = load_wmatrix_csv(good, 3);
  CHECK(w.at(1, 2) == 0.5);
  CHECK(w.at(3, 1) == 0.25);
  CHECK_THROWS_AS(load_wmatrix_csv(good, 4), std::runtime_error);

  const auto bad = dir / "relaycheck_kernel_bad.csv";
  {
    std::ofstream out(bad);
    out << "0.5,0.25\n0,1\n0,1\n";
  }
  CHECK_THROWS_AS(load_wmatrix_csv(bad, 3), std::invalid_argument);
  std::filesystem::remove(good);
  std::filesystem::remove(bad);
}

TEST_CASE("honest runs alarm rarely and sign flips alarm always") {
  ExperimentConfig cfg = small_config();
  cfg.attack = parse_attack("identity");
  const ExperimentReport honest = run_trials(channel, cfg);
  REQUIRE(honest.cells.size() == 1);
  CHECK(honest.cells[0].error.empty());
  CHECK(honest.cells[0].detection_rate <= 0.05);
  CHECK(honest.cells[0].n_prime == 59);
  CHECK(honest.calibrations_performed == 1);

  cfg.attack = parse_attack("sign_flip");
  const ExperimentReport flipped = run_trials(channel, cfg);
  CHECK(flipped.cells[0].detection_rate >= 0.99);
  CHECK(flipped.cells[0].mean_r > 10.0);
  CHECK(flipped.cells[0].mean_d > honest.cells[0].mean_d);
}

TEST_CASE("a single trial with a fixed threshold degenerates to one boolean row") {
  ExperimentConfig cfg = small_config();
  cfg.trials = 1;
  cfg.n = 5000;
  cfg.fixed_tau = 0.5;
  cfg.attack = parse_attack("identity");
  const ExperimentReport report = run_trials(channel, cfg);
  REQUIRE(report.cells.size() == 1);
  CHECK(report.calibrations_performed == 0);
  CHECK((report.cells[0].detection_rate == 0.0 || report.cells[0].detection_rate == 1.0));
  CHECK(report.cells[0].median_d == report.cells[0].mean_d);
}

TEST_CASE("sweep covers the axis product and reuses one calibration") {
  ExperimentConfig cfg = small_config();
  cfg.n = 10000;
  cfg.trials = 60;
  cfg.calibration_trials = 120;
  cfg.attack = parse_attack("garble:0.5:sign_flip");
  cfg.sweep_attack_param = {0.0, 0.5, 1.0};
  cfg.sweep_n = {5000, 10000};

  const ExperimentReport report = sweep(channel, cfg);
  REQUIRE(report.cells.size() == 6);
  // One calibration per (beta1, n) pair, shared across the attack axis.
  CHECK(report.calibrations_performed == 2);
  for (const auto& cell : report.cells) CHECK(cell.error.empty());

  // Rows come out n-major over the attack axis.
  CHECK(report.cells[0].n == 5000);
  CHECK(report.cells[0].attack == "garble:0:sign_flip");
  CHECK(report.cells[5].n == 10000);
  CHECK(report.cells[5].attack == "garble:1:sign_flip");

  // Detection rate is nondecreasing along the garble axis at fixed n.
  for (int base : {0, 3}) {
    CHECK(report.cells[base].detection_rate <= report.cells[base + 1].detection_rate);
    CHECK(report.cells[base + 1].detection_rate <= report.cells[base + 2].detection_rate);
  }
}

TEST_CASE("sweep with singleton axes equals run_trials") {
  ExperimentConfig cfg = small_config();
  cfg.n = 5000;
  cfg.trials = 40;
  cfg.calibration_trials = 100;
  cfg.attack = parse_attack("offset:0.5");
  cfg.sweep_n = {5000};
  const ExperimentReport a = sweep(channel, cfg);
  const ExperimentReport b = run_trials(channel, cfg);
  REQUIRE(a.cells.size() == 1);
  REQUIRE(b.cells.size() == 1);
  CHECK(a.cells[0].detections == b.cells[0].detections);
  CHECK(a.cells[0].mean_d == b.cells[0].mean_d);
  CHECK(a.cells[0].tau == b.cells[0].tau);
}

TEST_CASE("cell errors abort the cell but not the sweep") {
  ExperimentConfig cfg = small_config();
  cfg.n = 2000;
  cfg.trials = 20;
  cfg.fixed_tau = 0.1;
  cfg.attack = parse_attack("custom:/nonexistent/kernel.csv");
  cfg.sweep_beta1 = {2.0};
  const ExperimentReport report = sweep(channel, cfg);
  REQUIRE(report.cells.size() == 1);
  CHECK_FALSE(report.cells[0].error.empty());
}

TEST_CASE("reports are byte-identical for identical configs") {
  ExperimentConfig cfg = small_config();
  cfg.n = 4000;
  cfg.trials = 50;
  cfg.calibration_trials = 120;
  cfg.attack = parse_attack("garble:0.5:sign_flip");
  cfg.sweep_attack_param = {0.0, 0.2, 1.0};

  const auto dir = std::filesystem::temp_directory_path();
  const auto path_a = dir / "relaycheck_report_a.csv";
  const auto path_b = dir / "relaycheck_report_b.csv";
  emit_report(sweep(channel, cfg), path_a);
  emit_report(sweep(channel, cfg), path_b);

  const std::string a = read_file(path_a);
  const std::string b = read_file(path_b);
  CHECK(a == b);

  // One provenance comment, one header, one row per cell.
  std::size_t lines = 0;
  for (const char c : a) lines += c == '\n';
  CHECK(lines == 5);
  CHECK(a.rfind("# relaycheck sweep version=", 0) == 0);
  CHECK(a.find(kSweepCsvHeader) != std::string::npos);

  std::filesystem::remove(path_a);
  std::filesystem::remove(path_b);
}

TEST_CASE("report header matches the documented schema string") {
  CHECK(std::string(kSweepCsvHeader) ==
        "beta1,n_prime,n,trials,attack,tau,detections,detection_rate,mean_d,median_d,mean_r,error");
}
