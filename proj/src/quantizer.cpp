#include "relaycheck/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "relaycheck/util.hpp"

namespace relaycheck {

double XiValues::max() const { return std::max({xi1, xi2, xi3, xi4}); }

XiValues xi_values(const ChannelModel& channel, double beta1) {
  XiValues xi;
  xi.xi1 = channel.posterior(BpskSymbol::Plus, -beta1);
  xi.xi2 = 1.0 - channel.posterior(BpskSymbol::Plus, beta1);
  xi.xi3 = channel.posterior(BpskSymbol::Minus, beta1);
  xi.xi4 = 1.0 - channel.posterior(BpskSymbol::Minus, -beta1);
  return xi;
}

QuantizerGrid choose_grid(const ChannelModel& channel, double beta1) {
  if (!(beta1 > 0.0)) throw std::invalid_argument("choose_grid: beta1 must be positive");
  const double xi_max = xi_values(channel, beta1).max();
  const int n_prime = static_cast<int>(std::ceil(1.0 / xi_max)) + 2;
  if (n_prime < 4) throw std::invalid_argument("choose_grid: beta1 too small, grid needs n' >= 4");

  QuantizerGrid grid;
  grid.beta1 = beta1;
  grid.alpha1 = -beta1;
  grid.n_prime = n_prime;
  grid.step = (grid.beta1 - grid.alpha1) / (n_prime - 2);
  grid.points.resize(static_cast<std::size_t>(n_prime));
  for (int k = 0; k < n_prime - 2; ++k) {
    grid.points[static_cast<std::size_t>(k)] = grid.alpha1 + k * grid.step;
  }
  // Pin the two boundary points exactly; k*step accumulates rounding.
  grid.points[static_cast<std::size_t>(n_prime) - 2] = beta1;
  grid.points[static_cast<std::size_t>(n_prime) - 1] = beta1 + grid.step;
  return grid;
}

int quantize(double u, const QuantizerGrid& grid) {
  if (!(u > grid.alpha1)) return 1;
  if (u > grid.beta1) return grid.n_prime;
  // Smallest j in [2, n'-1] with u <= u~_j; exact on grid points.
  const auto first = grid.points.begin() + 1;
  const auto last = grid.points.begin() + (grid.n_prime - 1);
  return static_cast<int>(std::lower_bound(first, last, u) - grid.points.begin()) + 1;
}

GridProbabilities grid_probabilities(const ChannelModel& channel, const QuantizerGrid& grid) {
  const int np = grid.n_prime;
  GridProbabilities p;
  p.bin_given_plus.resize(static_cast<std::size_t>(np));
  p.bin_given_minus.resize(static_cast<std::size_t>(np));
  p.bin_marginal.resize(static_cast<std::size_t>(np));
  p.plus_given_bin.resize(static_cast<std::size_t>(np));
  p.minus_given_bin.resize(static_cast<std::size_t>(np));

  for (int pass = 0; pass < 2; ++pass) {
    const BpskSymbol s = pass == 0 ? BpskSymbol::Plus : BpskSymbol::Minus;
    auto& dst = pass == 0 ? p.bin_given_plus : p.bin_given_minus;
    double prev = channel.cond_cdf_u(grid.alpha1, s);
    dst[0] = prev;
    for (int j = 2; j <= np - 1; ++j) {
      const double cur = channel.cond_cdf_u(grid.point(j), s);
      dst[static_cast<std::size_t>(j) - 1] = cur - prev;
      prev = cur;
    }
    dst[static_cast<std::size_t>(np) - 1] = 1.0 - channel.cond_cdf_u(grid.beta1, s);
  }
  for (int i = 0; i < np; ++i) {
    const auto k = static_cast<std::size_t>(i);
    p.bin_marginal[k] = 0.5 * p.bin_given_plus[k] + 0.5 * p.bin_given_minus[k];
    // Bayes: P(x1|bin) = 0.5 P(bin|x1) / P(bin); every bin has positive mass.
    p.plus_given_bin[k] = 0.5 * p.bin_given_plus[k] / p.bin_marginal[k];
    p.minus_given_bin[k] = 0.5 * p.bin_given_minus[k] / p.bin_marginal[k];
  }
  return p;
}

std::vector<GridTailReport> verify_grid_asymptotics(const ChannelModel& channel,
                                                    std::span<const double> beta1_list) {
  if (beta1_list.empty()) throw std::invalid_argument("verify_grid_asymptotics: empty beta1 list");
  for (std::size_t i = 1; i < beta1_list.size(); ++i) {
    if (!(beta1_list[i] > beta1_list[i - 1])) {
      throw std::invalid_argument("verify_grid_asymptotics: beta1 list must be increasing");
    }
  }
  std::vector<GridTailReport> report;
  report.reserve(beta1_list.size());
  for (const double beta1 : beta1_list) {
    const QuantizerGrid grid = choose_grid(channel, beta1);
    GridTailReport row;
    row.beta1 = beta1;
    row.n_prime = grid.n_prime;
    row.step = grid.step;
    row.f_alpha_plus = channel.cond_cdf_u(grid.alpha1, BpskSymbol::Plus);
    row.f_alpha_minus = channel.cond_cdf_u(grid.alpha1, BpskSymbol::Minus);
    row.tail_beta_plus = 1.0 - channel.cond_cdf_u(grid.beta1, BpskSymbol::Plus);
    row.tail_beta_minus = 1.0 - channel.cond_cdf_u(grid.beta1, BpskSymbol::Minus);
    report.push_back(row);
  }
  return report;
}

std::string grid_summary(const QuantizerGrid& grid) {
  std::ostringstream out;
  out << "beta1=" << format_g6(grid.beta1) << " n_prime=" << grid.n_prime
      << " step=" << format_g6(grid.step);
  return out.str();
}

}  // namespace relaycheck
