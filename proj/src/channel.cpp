#include "relaycheck/channel.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace relaycheck {

namespace {

constexpr double kInvSqrtPi = 0.5641895835477562869480794515607726;

// Uniform double in [0,1) from the top 53 bits of one draw.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller standard normal with cached spare; fully determined by the
// underlying engine state, unlike std::normal_distribution.
struct GaussianSampler {
  std::mt19937_64& rng;
  bool have_spare = false;
  double spare = 0.0;

  double operator()() {
    if (have_spare) {
      have_spare = false;
      return spare;
    }
    double u1 = 0.0;
    do {
      u1 = uniform01(rng);
    } while (u1 <= 0.0);
    const double u2 = uniform01(rng);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare = radius * std::sin(angle);
    have_spare = true;
    return radius * std::cos(angle);
  }
};

}  // namespace

double ChannelModel::noise_pdf(double x) const { return kInvSqrtPi * std::exp(-x * x); }

double ChannelModel::cond_pdf_u(double x, BpskSymbol x1) const {
  const double m = 2.0 * to_int(x1);
  return 0.5 * kInvSqrtPi * (std::exp(-(x - m) * (x - m)) + std::exp(-x * x));
}

double ChannelModel::cond_cdf_u(double t, BpskSymbol x1) const {
  const double m = 2.0 * to_int(x1);
  return 0.25 * (1.0 + std::erf(t)) + 0.25 * (1.0 + std::erf(t - m));
}

double ChannelModel::marginal_pdf_u(double x) const {
  return 0.5 * cond_pdf_u(x, BpskSymbol::Plus) + 0.5 * cond_pdf_u(x, BpskSymbol::Minus);
}

double ChannelModel::posterior(BpskSymbol x1, double u) const {
  const double shared = 1.0 / (2.0 + std::exp(4.0 * u - 4.0) + std::exp(-4.0 * u - 4.0));
  if (x1 == BpskSymbol::Plus) {
    return shared + 1.0 / (2.0 * std::exp(4.0 - 4.0 * u) + 1.0 + std::exp(-8.0 * u));
  }
  return shared + 1.0 / (2.0 * std::exp(4.0 + 4.0 * u) + 1.0 + std::exp(8.0 * u));
}

SampleBatch ChannelModel::sample_batch(std::size_t n, std::uint64_t seed) const {
  if (n == 0) throw std::invalid_argument("sample_batch: n must be >= 1");
  SampleBatch batch;
  batch.seed = seed;
  batch.x1.resize(n);
  batch.x2.resize(n);
  batch.u.resize(n);
  std::mt19937_64 rng(seed);
  GaussianSampler gauss{rng};
  const double noise_sd = std::sqrt(kNoiseVariance);
  for (std::size_t i = 0; i < n; ++i) {
    batch.x1[i] = (rng() >> 63) ? BpskSymbol::Plus : BpskSymbol::Minus;
    batch.x2[i] = (rng() >> 63) ? BpskSymbol::Plus : BpskSymbol::Minus;
    batch.u[i] = to_int(batch.x1[i]) + to_int(batch.x2[i]) + noise_sd * gauss();
  }
  return batch;
}

}  // namespace relaycheck
