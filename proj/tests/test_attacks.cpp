#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>

#include "relaycheck/analysis.hpp"
#include "relaycheck/attacks.hpp"
#include "relaycheck/empirics.hpp"
#include "relaycheck/util.hpp"

using namespace relaycheck;

namespace {
const ChannelModel channel;

// Sup distance between the empirical conditional CDF of v and a reference
// CDF, over the threshold grid.
double sup_marginal_gap(const std::vector<double>& v, const std::vector<BpskSymbol>& x1,
                        const QuantizerGrid& g, BpskSymbol s, const RelayBehavior& behavior) {
  double sup = 0.0;
  for (int j = 1; j <= g.n_prime - 1; ++j) {
    const double f = empirical_cdf_given_x1(v, x1, s, g.threshold(j));
    sup = std::max(sup, std::abs(f - marginal_of_attack(channel, behavior, s, g.threshold(j))));
  }
  return sup;
}
}  // namespace

TEST_CASE("identity and zero offset forward the sequence bit-exactly") {
  const auto batch = channel.sample_batch(500, 17);
  CHECK(apply_attack(channel, batch.u, Identity{}, 1) == batch.u);
  CHECK(apply_attack(channel, batch.u, AdditiveOffset{0.0}, 1) == batch.u);
  CHECK(apply_attack(channel, batch.u, Identity{}, 1) ==
        apply_attack(channel, batch.u, Identity{}, 2));
}

TEST_CASE("sign flip and offset act pointwise") {
  const auto batch = channel.sample_batch(200, 18);
  const auto flipped = apply_attack(channel, batch.u, SignFlip{}, 1);
  const auto shifted = apply_attack(channel, batch.u, AdditiveOffset{0.5}, 1);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    CHECK(flipped[i] == -batch.u[i]);
    CHECK(shifted[i] == batch.u[i] + 0.5);
  }
}

TEST_CASE("attacks are deterministic given the seed") {
  const auto batch = channel.sample_batch(1000, 19);
  const RelayBehavior resample = ResampleMarginal{};
  CHECK(apply_attack(channel, batch.u, resample, 7) == apply_attack(channel, batch.u, resample, 7));
  CHECK(apply_attack(channel, batch.u, resample, 7) != apply_attack(channel, batch.u, resample, 8));

  const RelayBehavior garble = make_garble(0.3, SignFlip{});
  CHECK(apply_attack(channel, batch.u, garble, 7) == apply_attack(channel, batch.u, garble, 7));
}

TEST_CASE("custom kernel W0 reproduces the quantized identity") {
  const QuantizerGrid g = choose_grid(channel, 2.0);
  const auto batch = channel.sample_batch(20000, 23);
  const RelayBehavior kernel = CustomKernel{g, make_w0(g)};
  const auto v = apply_attack(channel, batch.u, kernel, 5);
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(v[i] == g.point(quantize(batch.u[i], g)));
  }
  CHECK(maliciousness_R(cond_cdf_matrix(v, batch.u, g), g) == 0.0);
}

TEST_CASE("custom kernel outputs live on the threshold lattice") {
  const QuantizerGrid g = choose_grid(channel, 2.0);
  // A deliberately diffuse kernel: every row is the uniform CDF over cells.
  std::vector<double> entries(static_cast<std::size_t>(g.n_prime) * (g.n_prime - 1));
  for (int i = 0; i < g.n_prime; ++i) {
    for (int j = 0; j < g.n_prime - 1; ++j) {
      entries[static_cast<std::size_t>(i) * (g.n_prime - 1) + j] =
          static_cast<double>(j + 1) / g.n_prime;
    }
  }
  const RelayBehavior kernel = CustomKernel{g, WMatrix(g.n_prime, std::move(entries))};

  std::set<double> lattice;
  for (int j = 1; j <= g.n_prime - 1; ++j) lattice.insert(g.threshold(j));
  lattice.insert(g.point(g.n_prime));

  const auto batch = channel.sample_batch(20000, 29);
  for (const double x : apply_attack(channel, batch.u, kernel, 9)) {
    CHECK(lattice.count(x) == 1);
  }
}

TEST_CASE("malformed kernels are rejected") {
  CHECK_THROWS_AS(WMatrix(3, std::vector<double>{0.5, 0.4, 0.1, 0.2, 0.3, 0.4}),
                  std::invalid_argument);  // first row decreasing
  CHECK_THROWS_AS(WMatrix(3, std::vector<double>{0.5, 1.4, 0.1, 0.2, 0.3, 0.4}),
                  std::invalid_argument);  // entry outside [0,1]
  CHECK_THROWS_AS(WMatrix(3, std::vector<double>{0.1, 0.2}), std::invalid_argument);
}

TEST_CASE("block switch covers the sequence or is rejected") {
  const auto batch = channel.sample_batch(1000, 31);
  BlockSwitch schedule;
  schedule.blocks.emplace_back(400, std::make_shared<const RelayBehavior>(Identity{}));
  schedule.blocks.emplace_back(600, std::make_shared<const RelayBehavior>(SignFlip{}));
  const auto v = apply_attack(channel, batch.u, schedule, 3);
  for (std::size_t i = 0; i < 400; ++i) CHECK(v[i] == batch.u[i]);
  for (std::size_t i = 400; i < 1000; ++i) CHECK(v[i] == -batch.u[i]);

  BlockSwitch wrong;
  wrong.blocks.emplace_back(999, std::make_shared<const RelayBehavior>(Identity{}));
  CHECK_THROWS_AS(apply_attack(channel, batch.u, wrong, 3), std::invalid_argument);
}

TEST_CASE("closed-form marginals") {
  const RelayBehavior identity = Identity{};
  CHECK(marginal_of_attack(channel, identity, BpskSymbol::Plus, 1.0) == 0.5);

  const RelayBehavior flip = SignFlip{};
  for (const double t : {-1.0, 0.0, 2.0}) {
    CHECK(std::abs(marginal_of_attack(channel, flip, BpskSymbol::Plus, t) -
                   channel.cond_cdf_u(t, BpskSymbol::Minus)) <= 1e-12);
    // Direct identity: Pr(-U <= t | +1) = 1 - F_{U|+1}(-t).
    CHECK(std::abs(marginal_of_attack(channel, flip, BpskSymbol::Plus, t) -
                   (1.0 - channel.cond_cdf_u(-t, BpskSymbol::Plus))) <= 1e-12);
  }

  const RelayBehavior resample = ResampleMarginal{};
  for (const double t : {-2.0, 0.4, 3.0}) {
    CHECK(marginal_of_attack(channel, resample, BpskSymbol::Plus, t) ==
          marginal_of_attack(channel, resample, BpskSymbol::Minus, t));
  }

  const RelayBehavior offset = AdditiveOffset{0.5};
  CHECK(marginal_of_attack(channel, offset, BpskSymbol::Plus, 1.5) == 0.5);

  CHECK_THROWS_WITH_AS(marginal_of_attack(channel, make_garble(0.1, SignFlip{}),
                                          BpskSymbol::Plus, 0.0),
                       "no closed form for this relay behavior", std::runtime_error);
}

TEST_CASE("empirical marginals track the closed forms inside the envelope") {
  const QuantizerGrid g = choose_grid(channel, 2.0);
  const std::size_t n = 100000;
  const double envelope = 3.0 * std::sqrt(std::log(static_cast<double>(n)) / static_cast<double>(n));

  const RelayBehavior kinds[] = {Identity{}, AdditiveOffset{0.5}, SignFlip{}, ResampleMarginal{}};
  for (std::size_t k = 0; k < 4; ++k) {
    std::atomic<int> hits{0};
    parallel_for(100, [&](std::size_t seed) {
      const auto batch = channel.sample_batch(n, 90000 + 1000 * k + seed);
      const auto v = apply_attack(channel, batch.u, kinds[k], derive_seed(1, k, seed));
      if (sup_marginal_gap(v, batch.x1, g, BpskSymbol::Plus, kinds[k]) <= envelope) ++hits;
    });
    CHECK(hits.load() >= 95);
  }
}

TEST_CASE("garble interpolates between identity and its inner attack") {
  const auto batch = channel.sample_batch(100000, 41);
  CHECK(apply_attack(channel, batch.u, make_garble(0.0, SignFlip{}), 5) == batch.u);

  // p = 1 equals the inner attack distributionally: compare empirical CDFs
  // over the threshold grid against the inner closed form.
  const QuantizerGrid g = choose_grid(channel, 2.0);
  const RelayBehavior inner = SignFlip{};
  const auto garbled = apply_attack(channel, batch.u, make_garble(1.0, SignFlip{}), 5);
  CHECK(sup_marginal_gap(garbled, batch.x1, g, BpskSymbol::Plus, inner) <=
        3.0 * std::sqrt(std::log(1e5) / 1e5));

  CHECK_THROWS_AS(apply_attack(channel, batch.u, PartialGarble{1.5, nullptr}, 5),
                  std::invalid_argument);

  // Nesting is capped at depth 2.
  CHECK_THROWS_AS(apply_attack(channel, batch.u, make_garble(0.5, make_garble(0.5, SignFlip{})), 5),
                  std::invalid_argument);
}
