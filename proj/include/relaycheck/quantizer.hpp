#pragma once

#include <span>
#include <string>
#include <vector>

#include "relaycheck/channel.hpp"

namespace relaycheck {

// Uniform quantization grid u~_1 .. u~_{n'} with bins
//   B(u~_1) = (-inf, alpha1], B(u~_j) = (u~_{j-1}, u~_j], B(u~_{n'}) = (beta1, inf).
// The threshold set is t_j = u~_j for j = 1..n'-1. Immutable after
// construction; all operations on it are pure.
struct QuantizerGrid {
  double alpha1 = 0.0;
  double beta1 = 0.0;
  int n_prime = 0;
  double step = 0.0;
  std::vector<double> points;  // points[j-1] = u~_j; points[n'-2] == beta1 exactly

  double point(int j) const { return points[static_cast<std::size_t>(j) - 1]; }  // 1-based
  double threshold(int j) const { return point(j); }                             // j = 1..n'-1
  std::span<const double> thresholds() const {
    return {points.data(), static_cast<std::size_t>(n_prime - 1)};
  }
};

// The four posterior tail values at +-beta1 that size the grid. For this
// symmetric channel all four coincide up to rounding.
struct XiValues {
  double xi1 = 0.0;  // P_{X1|U}(+1 | -beta1)
  double xi2 = 0.0;  // 1 - P_{X1|U}(+1 | beta1)
  double xi3 = 0.0;  // P_{X1|U}(-1 | beta1)
  double xi4 = 0.0;  // 1 - P_{X1|U}(-1 | -beta1)

  double max() const;
};

XiValues xi_values(const ChannelModel& channel, double beta1);

// Builds the grid with alpha1 = -beta1 and n' = ceil(1 / max xi) + 2, so that
// 1/(n'-2) <= max xi (more bins, never fewer). u~_{n'} is placed one step
// past beta1; only its bin membership matters downstream.
QuantizerGrid choose_grid(const ChannelModel& channel, double beta1);

// 1-based bin index of u, left-open right-closed convention.
int quantize(double u, const QuantizerGrid& grid);

// Model bin probabilities, computed once per (channel, grid) and reused.
// All integrals over bins are erf differences of the conditional CDFs.
struct GridProbabilities {
  std::vector<double> bin_given_plus;   // P_{U~|X1}(u~_i | +1)
  std::vector<double> bin_given_minus;  // P_{U~|X1}(u~_i | -1)
  std::vector<double> bin_marginal;     // P_{U~}(u~_i)
  std::vector<double> plus_given_bin;   // P_{X1|U~}(+1 | u~_i)
  std::vector<double> minus_given_bin;  // P_{X1|U~}(-1 | u~_i)

  const std::vector<double>& bin_given(BpskSymbol s) const {
    return s == BpskSymbol::Plus ? bin_given_plus : bin_given_minus;
  }
  const std::vector<double>& x1_given_bin(BpskSymbol s) const {
    return s == BpskSymbol::Plus ? plus_given_bin : minus_given_bin;
  }
};

GridProbabilities grid_probabilities(const ChannelModel& channel, const QuantizerGrid& grid);

// Per-beta1 tail masses and grid step, for checking that all three shrink as
// beta1 grows.
struct GridTailReport {
  double beta1 = 0.0;
  int n_prime = 0;
  double step = 0.0;
  double f_alpha_plus = 0.0;    // F_{U|+1}(alpha1)
  double f_alpha_minus = 0.0;   // F_{U|-1}(alpha1)
  double tail_beta_plus = 0.0;  // 1 - F_{U|+1}(beta1)
  double tail_beta_minus = 0.0;
};

std::vector<GridTailReport> verify_grid_asymptotics(const ChannelModel& channel,
                                                    std::span<const double> beta1_list);

// Flat key-value record (beta1, n_prime, step) for reports and profiles.
std::string grid_summary(const QuantizerGrid& grid);

}  // namespace relaycheck
