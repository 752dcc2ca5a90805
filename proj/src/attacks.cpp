#include "relaycheck/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "relaycheck/util.hpp"

namespace relaycheck {

namespace {

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Sub-stream tags for seed derivation inside composite behaviors.
constexpr std::uint64_t kGarbleInnerTag = 0xA1;
constexpr std::uint64_t kGarbleMaskTag = 0xA2;
constexpr std::uint64_t kBlockTag = 0xB1;

void apply_into(const ChannelModel& channel, std::span<const double> u, std::span<double> v,
                const RelayBehavior& behavior, std::uint64_t seed);

struct ApplyVisitor {
  const ChannelModel& channel;
  std::span<const double> u;
  std::span<double> v;
  std::uint64_t seed;

  void operator()(const Identity&) const { std::copy(u.begin(), u.end(), v.begin()); }

  void operator()(const AdditiveOffset& a) const {
    for (std::size_t i = 0; i < u.size(); ++i) v[i] = u[i] + a.offset;
  }

  void operator()(const SignFlip&) const {
    for (std::size_t i = 0; i < u.size(); ++i) v[i] = -u[i];
  }

  void operator()(const ResampleMarginal&) const {
    // Fresh BPSK pair plus fresh noise is exactly one draw from f_U.
    std::mt19937_64 rng(seed);
    const double noise_sd = std::sqrt(ChannelModel::kNoiseVariance);
    for (std::size_t i = 0; i < u.size(); ++i) {
      const int b1 = (rng() >> 63) ? +1 : -1;
      const int b2 = (rng() >> 63) ? +1 : -1;
      double u1 = 0.0;
      do {
        u1 = uniform01(rng);
      } while (u1 <= 0.0);
      const double u2 = uniform01(rng);
      const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
      v[i] = b1 + b2 + noise_sd * z;
    }
  }

  void operator()(const PartialGarble& g) const {
    if (!(g.p >= 0.0 && g.p <= 1.0)) {
      throw std::invalid_argument("apply_attack: garble probability outside [0,1]");
    }
    if (!g.inner) throw std::invalid_argument("apply_attack: garble has no inner behavior");
    std::vector<double> attacked(u.size());
    apply_into(channel, u, attacked, *g.inner, derive_seed(seed, kGarbleInnerTag, 0));
    std::mt19937_64 mask(derive_seed(seed, kGarbleMaskTag, 0));
    for (std::size_t i = 0; i < u.size(); ++i) {
      v[i] = uniform01(mask) < g.p ? attacked[i] : u[i];
    }
  }

  void operator()(const BlockSwitch& b) const {
    std::size_t total = 0;
    for (const auto& [len, inner] : b.blocks) {
      if (!inner) throw std::invalid_argument("apply_attack: block has no behavior");
      total += len;
    }
    if (total != u.size()) {
      throw std::invalid_argument("apply_attack: block schedule does not cover the sequence");
    }
    std::size_t offset = 0;
    std::uint64_t block_index = 0;
    for (const auto& [len, inner] : b.blocks) {
      apply_into(channel, u.subspan(offset, len), v.subspan(offset, len), *inner,
                 derive_seed(seed, kBlockTag, block_index));
      offset += len;
      ++block_index;
    }
  }

  void operator()(const CustomKernel& k) const {
    if (k.w.rows() != k.grid.n_prime) {
      throw std::invalid_argument("apply_attack: kernel matrix does not match its grid");
    }
    std::mt19937_64 rng(seed);
    const int cols = k.w.cols();
    for (std::size_t i = 0; i < u.size(); ++i) {
      const int bin = quantize(u[i], k.grid);
      const auto row = k.w.row(bin);
      const double r = uniform01(rng);
      // First threshold cell whose CDF value exceeds r; remainder lands one
      // step past the last threshold.
      const auto it = std::upper_bound(row.begin(), row.end(), r);
      if (it == row.end()) {
        v[i] = k.grid.point(k.grid.n_prime);  // beta1 + step
      } else {
        v[i] = k.grid.threshold(static_cast<int>(it - row.begin()) + 1);
      }
      (void)cols;
    }
  }
};

void apply_into(const ChannelModel& channel, std::span<const double> u, std::span<double> v,
                const RelayBehavior& behavior, std::uint64_t seed) {
  std::visit(ApplyVisitor{channel, u, v, seed}, behavior.kind());
}

int nesting_depth(const RelayBehavior& behavior);

struct DepthVisitor {
  int operator()(const PartialGarble& g) const {
    return 1 + (g.inner ? nesting_depth(*g.inner) : 0);
  }
  int operator()(const BlockSwitch& b) const {
    int inner = 0;
    for (const auto& [len, block] : b.blocks) {
      (void)len;
      if (block) inner = std::max(inner, nesting_depth(*block));
    }
    return 1 + inner;
  }
  template <typename Leaf>
  int operator()(const Leaf&) const {
    return 1;
  }
};

int nesting_depth(const RelayBehavior& behavior) {
  return std::visit(DepthVisitor{}, behavior.kind());
}

}  // namespace

WMatrix::WMatrix(int n_prime, std::vector<double> entries) : n_prime_(n_prime) {
  if (n_prime < 2) throw std::invalid_argument("WMatrix: n' must be >= 2");
  const auto expected =
      static_cast<std::size_t>(n_prime) * static_cast<std::size_t>(n_prime - 1);
  if (entries.size() != expected) throw std::invalid_argument("WMatrix: wrong entry count");
  for (int i = 0; i < n_prime; ++i) {
    double prev = 0.0;
    for (int j = 0; j < n_prime - 1; ++j) {
      const double w = entries[static_cast<std::size_t>(i) * (n_prime - 1) + j];
      if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("WMatrix: entry outside [0,1]");
      if (w < prev) throw std::invalid_argument("WMatrix: row monotonicity violated");
      prev = w;
    }
  }
  entries_ = std::move(entries);
}

std::vector<double> apply_attack(const ChannelModel& channel, std::span<const double> u,
                                 const RelayBehavior& behavior, std::uint64_t seed) {
  if (u.empty()) throw std::invalid_argument("apply_attack: empty input sequence");
  if (nesting_depth(behavior) > 2) {
    throw std::invalid_argument("apply_attack: behavior nesting deeper than 2");
  }
  std::vector<double> v(u.size());
  apply_into(channel, u, v, behavior, seed);
  return v;
}

double marginal_of_attack(const ChannelModel& channel, const RelayBehavior& behavior,
                          BpskSymbol x1, double t) {
  struct Visitor {
    const ChannelModel& channel;
    BpskSymbol x1;
    double t;

    double operator()(const Identity&) const { return channel.cond_cdf_u(t, x1); }
    double operator()(const AdditiveOffset& a) const { return channel.cond_cdf_u(t - a.offset, x1); }
    double operator()(const SignFlip&) const {
      // Pr(-U <= t | x1) = 1 - F_{U|x1}(-t); the mixture is continuous and
      // mirror symmetric, so this equals F_{U|-x1}(t).
      return channel.cond_cdf_u(t, flip(x1));
    }
    double operator()(const ResampleMarginal&) const {
      return 0.5 * channel.cond_cdf_u(t, BpskSymbol::Plus) +
             0.5 * channel.cond_cdf_u(t, BpskSymbol::Minus);
    }
    double operator()(const PartialGarble&) const { return fail(); }
    double operator()(const BlockSwitch&) const { return fail(); }
    double operator()(const CustomKernel&) const { return fail(); }

    static double fail() { throw std::runtime_error("no closed form for this relay behavior"); }
  };
  return std::visit(Visitor{channel, x1, t}, behavior.kind());
}

}  // namespace relaycheck
