#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

#include "relaycheck/channel.hpp"
#include "relaycheck/quantizer.hpp"

namespace relaycheck {

// Verdict for one trial. d is the worse of the two conditioning symbols: an
// attack may preserve one conditional law but not both.
struct DetectionResult {
  double d_plus = 0.0;
  double d_minus = 0.0;
  double d = 0.0;
  double threshold = 0.0;
  bool attacked = false;
  long n = 0;
  int n_prime = 0;
  std::uint64_t seed = 0;
};

enum class ThresholdMethod { CalibratedQuantile, EpsilonTheory };

struct ThresholdProfile {
  double tau = 0.0;
  ThresholdMethod method = ThresholdMethod::CalibratedQuantile;
  double q = 0.0;  // quantile level when calibrated
  double beta1 = 0.0;
  int n_prime = 0;
  double step = 0.0;
  long calibration_n = 0;
  int calibration_trials = 0;
  std::uint64_t seed = 0;

  void save(const std::filesystem::path& path) const;
  static ThresholdProfile load(const std::filesystem::path& path);
};

// D^n conditioned on s: the sum over the n'-1 thresholds of
// |F^n_{V|X1}(t_j|s) - F_{U|s}(t_j)|, divided by n'-2. The divisor follows
// the grid's step normalization, so the codomain bound is (n'-1)/(n'-2).
double decision_statistic(const ChannelModel& channel, std::span<const double> v,
                          std::span<const BpskSymbol> x1, const QuantizerGrid& grid,
                          BpskSymbol s);

// mu'(n', delta) = mu + delta / (n' - 2)
double mu_prime(double mu, const QuantizerGrid& grid, double delta);

// eps(n', delta) = (lambda - mu_n) / (beta1 - alpha1); requires lambda > mu_n.
double epsilon_threshold(double lambda_est, double mu_n, const QuantizerGrid& grid);

// Empirical q-quantile of D^n (max over both conditioning symbols) across
// honest-relay trials; deterministic given seed. Trials run concurrently on
// per-trial derived seeds.
ThresholdProfile calibrate_threshold(const ChannelModel& channel, const QuantizerGrid& grid,
                                     long n, int trials, double q, std::uint64_t seed);

inline bool detect(double d, const ThresholdProfile& profile) { return d > profile.tau; }

// Convenience wrapper computing both conditionals and the verdict.
DetectionResult evaluate_detection(const ChannelModel& channel, std::span<const double> v,
                                   std::span<const BpskSymbol> x1, const QuantizerGrid& grid,
                                   const ThresholdProfile& profile, std::uint64_t seed);

// CSV row sink for detection results; writes the header when the file is new.
void append_detection_csv(const std::filesystem::path& path, const DetectionResult& result);
extern const char* const kDetectionCsvHeader;

}  // namespace relaycheck
