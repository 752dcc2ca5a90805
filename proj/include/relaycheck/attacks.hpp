#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "relaycheck/channel.hpp"
#include "relaycheck/quantizer.hpp"

namespace relaycheck {

// Row-monotone kernel matrix over the threshold grid: n' rows, n'-1 columns,
// 0 <= w_{i,1} <= ... <= w_{i,n'-1} <= 1. Row i is the conditional CDF of the
// forwarded symbol evaluated at the thresholds, given the input bin i.
class WMatrix {
 public:
  WMatrix() = default;
  // Validates dimensions, range and row monotonicity.
  WMatrix(int n_prime, std::vector<double> entries);

  int rows() const { return n_prime_; }
  int cols() const { return n_prime_ - 1; }
  double at(int i, int j) const {  // 1-based
    return entries_[(static_cast<std::size_t>(i) - 1) * static_cast<std::size_t>(n_prime_ - 1) +
                    (static_cast<std::size_t>(j) - 1)];
  }
  std::span<const double> row(int i) const {
    return {entries_.data() + (static_cast<std::size_t>(i) - 1) * static_cast<std::size_t>(n_prime_ - 1),
            static_cast<std::size_t>(n_prime_ - 1)};
  }
  std::span<double> mutable_row(int i) {
    return {entries_.data() + (static_cast<std::size_t>(i) - 1) * static_cast<std::size_t>(n_prime_ - 1),
            static_cast<std::size_t>(n_prime_ - 1)};
  }
  const std::vector<double>& entries() const { return entries_; }

 private:
  int n_prime_ = 0;
  std::vector<double> entries_;
};

class RelayBehavior;

struct Identity {};
struct AdditiveOffset {
  double offset = 0.0;
};
struct SignFlip {};
// Draws each forwarded symbol i.i.d. from the unconditional mixture f_U,
// ignoring the received symbol: the canonical marginal-preserving but
// conditionally wrong attack.
struct ResampleMarginal {};
// Each position is independently replaced by the inner behavior's output with
// probability p, else passed through.
struct PartialGarble {
  double p = 0.0;
  std::shared_ptr<const RelayBehavior> inner;
};
// Consecutive blocks of the stated lengths, each under its own behavior.
// Lengths must sum to the sequence length at application time.
struct BlockSwitch {
  std::vector<std::pair<std::size_t, std::shared_ptr<const RelayBehavior>>> blocks;
};
// i.i.d. kernel defined on the grid: the output for input bin i follows the
// piecewise-constant conditional CDF given by row i of W, with each cell's
// mass placed at the cell's right endpoint.
struct CustomKernel {
  QuantizerGrid grid;
  WMatrix w;
};

class RelayBehavior {
 public:
  using Kind = std::variant<Identity, AdditiveOffset, SignFlip, ResampleMarginal, PartialGarble,
                            BlockSwitch, CustomKernel>;

  RelayBehavior(Identity k) : kind_(k) {}
  RelayBehavior(AdditiveOffset k) : kind_(k) {}
  RelayBehavior(SignFlip k) : kind_(k) {}
  RelayBehavior(ResampleMarginal k) : kind_(k) {}
  RelayBehavior(PartialGarble k) : kind_(std::move(k)) {}
  RelayBehavior(BlockSwitch k) : kind_(std::move(k)) {}
  RelayBehavior(CustomKernel k) : kind_(std::move(k)) {}

  const Kind& kind() const { return kind_; }

 private:
  Kind kind_;
};

inline RelayBehavior make_garble(double p, RelayBehavior inner) {
  return PartialGarble{p, std::make_shared<const RelayBehavior>(std::move(inner))};
}

// v^n from u^n under the given behavior; pure and deterministic given seed.
std::vector<double> apply_attack(const ChannelModel& channel, std::span<const double> u,
                                 const RelayBehavior& behavior, std::uint64_t seed);

// Induced conditional CDF F_{V|x1}(t) for the analytically tractable kinds
// (Identity, AdditiveOffset, SignFlip, ResampleMarginal). Throws
// "no closed form" for the others.
double marginal_of_attack(const ChannelModel& channel, const RelayBehavior& behavior,
                          BpskSymbol x1, double t);

}  // namespace relaycheck
