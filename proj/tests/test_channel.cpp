#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "relaycheck/channel.hpp"

using namespace relaycheck;

namespace {
const ChannelModel channel;
}

TEST_CASE("sample_batch is deterministic given the seed") {
  const auto a = channel.sample_batch(3, 0x5EED);
  const auto b = channel.sample_batch(3, 0x5EED);
  CHECK(a.x1 == b.x1);
  CHECK(a.x2 == b.x2);
  CHECK(a.u == b.u);

  const auto c = channel.sample_batch(3, 0x5EED + 1);
  CHECK(a.u != c.u);
}

TEST_CASE("sample_batch rejects n = 0") {
  CHECK_THROWS_AS(channel.sample_batch(0, 1), std::invalid_argument);
}

TEST_CASE("sample_batch matches the channel law at CLT scale") {
  const std::size_t n = 1000000;
  const auto batch = channel.sample_batch(n, 20240811);

  double x1_sum = 0.0;
  for (const auto s : batch.x1) x1_sum += to_int(s);
  CHECK(std::abs(x1_sum / static_cast<double>(n)) <= 0.005);

  // Noise residual u - x1 - x2: mean 0, variance 1/2.
  double sum = 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = batch.u[i] - to_int(batch.x1[i]) - to_int(batch.x2[i]);
    sum += r;
    sq += r * r;
  }
  const double mean = sum / static_cast<double>(n);
  const double var = sq / static_cast<double>(n) - mean * mean;
  CHECK(std::abs(var - 0.5) <= 0.01);
}

TEST_CASE("conditional pdf mirror symmetry and normalization") {
  for (const double x : {-3.0, 0.0, 1.7}) {
    CHECK(channel.cond_pdf_u(x, BpskSymbol::Plus) ==
          doctest::Approx(channel.cond_pdf_u(-x, BpskSymbol::Minus)).epsilon(1e-15));
  }
  for (const auto s : {BpskSymbol::Plus, BpskSymbol::Minus}) {
    const double integral = oracles::adaptive_simpson(
        [&](double x) { return channel.cond_pdf_u(x, s); }, -40.0, 40.0, 1e-12);
    CHECK(std::abs(integral - 1.0) <= 1e-9);
  }
  const double noise_integral =
      oracles::adaptive_simpson([&](double x) { return channel.noise_pdf(x); }, -40.0, 40.0, 1e-12);
  CHECK(std::abs(noise_integral - 1.0) <= 1e-9);
}

TEST_CASE("conditional pdf point value at x = 2") {
  const double expected = 0.5 * (1.0 + std::exp(-4.0)) / std::sqrt(M_PI);
  CHECK(channel.cond_pdf_u(2.0, BpskSymbol::Plus) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(expected == doctest::Approx(0.28728).epsilon(1e-4));
  CHECK(channel.cond_pdf_u(123.0, BpskSymbol::Plus) >= 0.0);
}

TEST_CASE("conditional cdf limits, median and quadrature agreement") {
  CHECK(std::abs(channel.cond_cdf_u(50.0, BpskSymbol::Plus) - 1.0) <= 1e-12);
  CHECK(std::abs(channel.cond_cdf_u(50.0, BpskSymbol::Minus) - 1.0) <= 1e-12);
  CHECK(channel.cond_cdf_u(-50.0, BpskSymbol::Plus) <= 1e-12);

  // Median of the symmetric {0, 2} mixture.
  CHECK(channel.cond_cdf_u(1.0, BpskSymbol::Plus) == 0.5);

  for (const double t : {-2.0, 0.3, 4.0}) {
    const double quad = oracles::adaptive_simpson(
        [&](double x) { return channel.cond_pdf_u(x, BpskSymbol::Plus); }, -50.0, t, 1e-12);
    CHECK(std::abs(channel.cond_cdf_u(t, BpskSymbol::Plus) - quad) <= 1e-8);
  }
}

TEST_CASE("posterior closed form matches the Bayes oracle") {
  CHECK(std::abs(channel.posterior(BpskSymbol::Plus, 0.0) - 0.5) <= 1e-15);

  for (const double u : {-5.0, 0.1, 3.0}) {
    const double total =
        channel.posterior(BpskSymbol::Plus, u) + channel.posterior(BpskSymbol::Minus, u);
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }

  // Closed form vs the Bayes oracle at u = 2, plus the literal value.
  const double p2 = channel.posterior(BpskSymbol::Plus, 2.0);
  CHECK(std::abs(p2 - oracles::bayes_posterior_plus(2.0)) <= 1e-12);
  CHECK(p2 == doctest::Approx(0.98233).epsilon(1e-5));

  double prev = -1.0;
  for (int k = 0; k <= 1000; ++k) {
    const double u = -10.0 + 20.0 * k / 1000.0;
    const double p = channel.posterior(BpskSymbol::Plus, u);
    CHECK(std::abs(p - oracles::bayes_posterior_plus(u)) <= 1e-12);
    CHECK(std::abs(p - channel.posterior(BpskSymbol::Minus, -u)) <= 1e-12);
    CHECK(p >= prev - 1e-15);  // nondecreasing in u
    prev = p;
  }
}

TEST_CASE("posterior saturates without NaN at large |u|") {
  for (const double u : {-40.0, 40.0, -200.0, 200.0}) {
    for (const auto s : {BpskSymbol::Plus, BpskSymbol::Minus}) {
      const double p = channel.posterior(s, u);
      CHECK(std::isfinite(p));
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    }
  }
  CHECK(channel.posterior(BpskSymbol::Plus, 40.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(channel.posterior(BpskSymbol::Plus, -40.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("conditional cdf is nondecreasing and within [0,1] on a sorted grid") {
  double prev = 0.0;
  for (int k = 0; k <= 500; ++k) {
    const double t = -8.0 + 16.0 * k / 500.0;
    const double c = channel.cond_cdf_u(t, BpskSymbol::Minus);
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
    CHECK(c >= prev);
    prev = c;
  }
}
