#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "relaycheck/attacks.hpp"
#include "relaycheck/channel.hpp"
#include "relaycheck/detector.hpp"
#include "relaycheck/quantizer.hpp"

namespace relaycheck {

enum class AttackKind { Identity, Offset, SignFlip, Resample, Garble, Block, Custom };

// Config-file representation of a relay behavior. Grammar:
//   attack    := leaf | "garble:" p ":" leaf | "block:" item ("," item)* | "custom:" path
//   leaf      := "identity" | "sign_flip" | "resample" | "offset:" c
//   item      := length "*" leaf
struct AttackSpec {
  AttackKind kind = AttackKind::Identity;
  double param = 0.0;  // offset c, or garble p
  std::shared_ptr<const AttackSpec> inner;
  std::vector<std::pair<long, AttackSpec>> blocks;
  std::string kernel_csv;
};

AttackSpec parse_attack(const std::string& text);
std::string format_attack(const AttackSpec& spec);

// Replaces the numeric parameter of a parameterized attack (offset c or
// garble p); throws for kinds with no parameter axis.
AttackSpec with_attack_param(AttackSpec spec, double value);

RelayBehavior materialize(const AttackSpec& spec, const ChannelModel& channel,
                          const QuantizerGrid& grid);

// W matrix from CSV: one row per bin, n'-1 comma-separated values each.
WMatrix load_wmatrix_csv(const std::filesystem::path& path, int n_prime);

struct ExperimentConfig {
  double beta1 = 2.0;
  long n = 100000;
  int trials = 200;
  std::uint64_t master_seed = 42;
  AttackSpec attack;

  // Threshold rule: fixed tau when set, else a quantile calibrated on
  // honest trials (shared per (beta1, n) pair across a sweep).
  std::optional<double> fixed_tau;
  double quantile_q = 0.99;
  int calibration_trials = 500;

  // Optional sweep axes; scalar fields above are used when an axis is empty.
  std::vector<long> sweep_n;
  std::vector<double> sweep_beta1;
  std::vector<double> sweep_attack_param;
};

struct CellResult {
  double beta1 = 0.0;
  int n_prime = 0;
  long n = 0;
  int trials = 0;
  std::string attack;
  double tau = 0.0;
  long detections = 0;
  double detection_rate = 0.0;
  double mean_d = 0.0;
  double median_d = 0.0;
  double mean_r = 0.0;
  std::string error;  // nonempty when the cell aborted
};

struct ExperimentReport {
  std::vector<CellResult> cells;
  std::uint64_t master_seed = 0;
  bool fixed_threshold = false;
  double fixed_tau = 0.0;
  double q = 0.0;
  int calibration_trials = 0;
  int calibrations_performed = 0;
  std::vector<ThresholdProfile> calibrations;  // reusable across runs
  double wall_seconds = 0.0;  // run log only; never written to the CSV
};

// One cell from the scalar config fields; trials run concurrently with
// per-trial derived seeds and order-independent aggregation.
ExperimentReport run_trials(const ChannelModel& channel, const ExperimentConfig& cfg);

// Cartesian product over the configured axes, one cell per combination, in
// beta1-major, n-next, attack-parameter-minor order. Cell errors are recorded
// in the row; the sweep continues.
ExperimentReport sweep(const ChannelModel& channel, const ExperimentConfig& cfg);

// Deterministic CSV: one '#' provenance line, the documented header, one row
// per cell, numbers at six significant digits. Identical configs produce
// byte-identical files.
void emit_report(const ExperimentReport& report, const std::filesystem::path& path);

extern const char* const kSweepCsvHeader;

}  // namespace relaycheck
