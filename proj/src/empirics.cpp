#include "relaycheck/empirics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "relaycheck/util.hpp"

namespace relaycheck {

CondCdfMatrix::CondCdfMatrix(int n_prime)
    : n_prime_(n_prime),
      counts_(static_cast<std::size_t>(n_prime) * static_cast<std::size_t>(n_prime - 1), 0),
      bin_totals_(static_cast<std::size_t>(n_prime), 0) {}

double CondCdfMatrix::value(int i, int j) const {
  const long total = bin_total(i);
  if (total == 0) return 0.0;
  return static_cast<double>(count(i, j)) / static_cast<double>(total);
}

void CondCdfMatrix::write_csv(std::ostream& out, const QuantizerGrid& grid) const {
  out << "u_i";
  for (int j = 1; j <= cols(); ++j) out << ',' << format_g6(grid.threshold(j));
  out << '\n';
  for (int i = 1; i <= rows(); ++i) {
    out << format_g6(grid.point(i));
    for (int j = 1; j <= cols(); ++j) out << ',' << format_g6(value(i, j));
    out << '\n';
  }
}

CondCdfMatrix cond_cdf_matrix(std::span<const double> v, std::span<const double> u,
                              const QuantizerGrid& grid) {
  if (v.size() != u.size()) throw std::invalid_argument("cond_cdf_matrix: length mismatch");
  if (v.empty()) throw std::invalid_argument("cond_cdf_matrix: empty sequences");
  const int np = grid.n_prime;
  CondCdfMatrix m(np);
  // First store, per bin, a histogram over the smallest threshold index
  // covering each v; the cumulative counts fall out of one prefix pass.
  const auto t_begin = grid.points.begin();
  const auto t_end = grid.points.begin() + (np - 1);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const int i = quantize(u[k], grid);
    ++m.bin_totals_[static_cast<std::size_t>(i) - 1];
    const auto it = std::lower_bound(t_begin, t_end, v[k]);
    if (it != t_end) {
      const int jmin = static_cast<int>(it - t_begin) + 1;
      ++m.counts_[m.index(i, jmin)];
    }
  }
  for (int i = 1; i <= np; ++i) {
    long running = 0;
    for (int j = 1; j <= np - 1; ++j) {
      running += m.counts_[m.index(i, j)];
      m.counts_[m.index(i, j)] = running;
    }
  }
  return m;
}

double empirical_cdf_given_x1(std::span<const double> v, std::span<const BpskSymbol> x1,
                              BpskSymbol s, double t) {
  if (v.size() != x1.size()) throw std::invalid_argument("empirical_cdf_given_x1: length mismatch");
  if (v.empty()) throw std::invalid_argument("empirical_cdf_given_x1: empty sequences");
  long n_class = 0;
  long hits = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (x1[i] != s) continue;
    ++n_class;
    if (v[i] <= t) ++hits;
  }
  if (n_class == 0) throw std::runtime_error("empty conditioning class");
  return static_cast<double>(hits) / static_cast<double>(n_class);
}

double maliciousness_R(const CondCdfMatrix& m, const QuantizerGrid& grid) {
  if (m.rows() != grid.n_prime) throw std::invalid_argument("maliciousness_R: grid mismatch");
  double r = 0.0;
  for (int i = 1; i <= grid.n_prime; ++i) {
    if (m.bin_total(i) == 0) continue;
    for (int j = 1; j <= grid.n_prime - 1; ++j) {
      r += std::abs(m.value(i, j) - step_indicator(grid.threshold(j) - grid.point(i)));
    }
  }
  return r;
}

TypicalityResult typicality_check(std::span<const BpskSymbol> x1, std::span<const double> u,
                                  const QuantizerGrid& grid, const GridProbabilities& model,
                                  double eps) {
  if (x1.size() != u.size()) throw std::invalid_argument("typicality_check: length mismatch");
  if (x1.empty()) throw std::invalid_argument("typicality_check: empty sequences");
  if (!(eps > 0.0)) throw std::invalid_argument("typicality_check: eps must be positive");

  const int np = grid.n_prime;
  std::vector<long> bin_counts(static_cast<std::size_t>(np), 0);
  long n_plus = 0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    ++bin_counts[static_cast<std::size_t>(quantize(u[k], grid)) - 1];
    if (x1[k] == BpskSymbol::Plus) ++n_plus;
  }
  const double n = static_cast<double>(u.size());

  double worst = -eps;
  for (int pass = 0; pass < 2; ++pass) {
    const BpskSymbol s = pass == 0 ? BpskSymbol::Plus : BpskSymbol::Minus;
    const double n_s =
        static_cast<double>(s == BpskSymbol::Plus ? n_plus : static_cast<long>(u.size()) - n_plus);
    worst = std::max(worst, std::abs(ChannelModel::kPrior - n_s / n) - eps);
    const auto& bin_given = model.bin_given(s);
    const auto& x1_given = model.x1_given_bin(s);
    for (int j = 0; j < np; ++j) {
      const auto k = static_cast<std::size_t>(j);
      const double ratio =
          n_s > 0.0 ? static_cast<double>(bin_counts[k]) * x1_given[k] / n_s : 0.0;
      worst = std::max(worst, std::abs(bin_given[k] - ratio) - eps);
    }
  }
  return TypicalityResult{worst < 0.0, worst};
}

}  // namespace relaycheck
