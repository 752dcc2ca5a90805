#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "relaycheck/channel.hpp"
#include "relaycheck/quantizer.hpp"

namespace relaycheck {

// Unit step of the reference kernel, closed at 0.
constexpr double step_indicator(double t) noexcept { return t >= 0.0 ? 1.0 : 0.0; }

// Per-bin empirical conditional CDF table for a sequence pair (u^n, v^n):
//   value(i, j) = #{k : v_k <= t_j and quantize(u_k) = i} / N(u~_i),
// stored as 0 when bin i is empty. Rows are nondecreasing in j.
class CondCdfMatrix {
 public:
  explicit CondCdfMatrix(int n_prime);

  int rows() const { return n_prime_; }        // bins i = 1..n'
  int cols() const { return n_prime_ - 1; }    // thresholds j = 1..n'-1

  long count(int i, int j) const { return counts_[index(i, j)]; }
  long bin_total(int i) const { return bin_totals_[static_cast<std::size_t>(i) - 1]; }
  double value(int i, int j) const;

  // Header row of thresholds, one row per u~_i.
  void write_csv(std::ostream& out, const QuantizerGrid& grid) const;

 private:
  friend CondCdfMatrix cond_cdf_matrix(std::span<const double>, std::span<const double>,
                                       const QuantizerGrid&);
  std::size_t index(int i, int j) const {
    return (static_cast<std::size_t>(i) - 1) * static_cast<std::size_t>(n_prime_ - 1) +
           (static_cast<std::size_t>(j) - 1);
  }

  int n_prime_;
  std::vector<long> counts_;      // row-major, cumulative over j
  std::vector<long> bin_totals_;  // N(u~_i | u^n)
};

// Single pass over (v, u); O(n log n' + n'^2).
CondCdfMatrix cond_cdf_matrix(std::span<const double> v, std::span<const double> u,
                              const QuantizerGrid& grid);

// F^n_{v|x1}(t|s): exact count ratio over positions with x1 = s.
// Throws "empty conditioning class" when no position carries s.
double empirical_cdf_given_x1(std::span<const double> v, std::span<const BpskSymbol> x1,
                              BpskSymbol s, double t);

// Summed absolute deviation between the per-bin empirical CDF and the unit
// step (the maliciousness measure). Empty bins carry no evidence and are
// skipped, so an absolutely reliable relay scores exactly 0 at any n >= 1.
double maliciousness_R(const CondCdfMatrix& m, const QuantizerGrid& grid);

struct TypicalityResult {
  bool typical = false;
  // max over constraints of |deviation| - eps; negative values are margin.
  double worst_slack = 0.0;
};

// Membership in the typical set A_eps: for every (bin, symbol) pair,
//   |P_{U~|X1}(u~|x1) - N(u~) P_{X1|U~}(x1|u~) / N(x1)| < eps
// and |P_{X1}(x1) - N(x1)/n| < eps. An empty symbol class contributes 0 for
// the ratio term. Pass grid_probabilities(channel, grid) as `model`.
TypicalityResult typicality_check(std::span<const BpskSymbol> x1, std::span<const double> u,
                                  const QuantizerGrid& grid, const GridProbabilities& model,
                                  double eps);

}  // namespace relaycheck
