#pragma once

#include <cstdint>
#include <vector>

namespace relaycheck {

// BPSK source symbol, alphabet {+1, -1}.
enum class BpskSymbol : int { Plus = +1, Minus = -1 };

constexpr int to_int(BpskSymbol s) noexcept { return static_cast<int>(s); }
constexpr BpskSymbol flip(BpskSymbol s) noexcept {
  return s == BpskSymbol::Plus ? BpskSymbol::Minus : BpskSymbol::Plus;
}

// One trial's aligned source and relay-input sequences. Regenerating with the
// same seed reproduces the batch bit-exactly.
struct SampleBatch {
  std::vector<BpskSymbol> x1;
  std::vector<BpskSymbol> x2;
  std::vector<double> u;  // u[i] = x1[i] + x2[i] + noise[i]
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return u.size(); }
};

// Binary-input Gaussian MAC: U = X1 + X2 + Nr with equiprobable BPSK inputs
// and noise density exp(-x^2)/sqrt(pi), i.e. zero-mean Gaussian with variance
// 1/2. Immutable; safe to share across trial workers.
class ChannelModel {
 public:
  static constexpr double kNoiseVariance = 0.5;
  static constexpr double kPrior = 0.5;  // per BPSK symbol

  double noise_pdf(double x) const;

  // f_{U|x1}: mixture of two variance-1/2 Gaussians at {0, 2*x1}.
  double cond_pdf_u(double x, BpskSymbol x1) const;

  // F_{U|x1} in closed form via erf.
  double cond_cdf_u(double t, BpskSymbol x1) const;

  // 0.5 f_{U|+1} + 0.5 f_{U|-1}
  double marginal_pdf_u(double x) const;

  // P_{X1|U}(x1|u). Every exponential sits in a denominator, so large |u|
  // saturates to {0,1} instead of overflowing into NaN.
  double posterior(BpskSymbol x1, double u) const;

  // i.i.d. uniform BPSK inputs plus Gaussian noise; deterministic given seed.
  SampleBatch sample_batch(std::size_t n, std::uint64_t seed) const;
};

}  // namespace relaycheck
