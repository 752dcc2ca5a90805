#include "relaycheck/analysis.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <stdexcept>

#include "relaycheck/empirics.hpp"
#include "relaycheck/util.hpp"

namespace relaycheck {

namespace {

// CDF of X2 + N: mixture of variance-1/2 Gaussians centered at +-1.
double x2_plus_noise_cdf(double t) {
  return 0.25 * (1.0 + std::erf(t - 1.0)) + 0.25 * (1.0 + std::erf(t + 1.0));
}

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// L2 projection onto nondecreasing sequences (pool adjacent violators).
void isotonic_nondecreasing(std::span<double> x) {
  const std::size_t n = x.size();
  std::vector<double> mean;
  std::vector<std::size_t> count;
  mean.reserve(n);
  count.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double m = x[i];
    std::size_t c = 1;
    while (!mean.empty() && mean.back() > m) {
      m = (m * static_cast<double>(c) + mean.back() * static_cast<double>(count.back())) /
          static_cast<double>(c + count.back());
      c += count.back();
      mean.pop_back();
      count.pop_back();
    }
    mean.push_back(m);
    count.push_back(c);
  }
  std::size_t idx = 0;
  for (std::size_t b = 0; b < mean.size(); ++b) {
    for (std::size_t k = 0; k < count[b]; ++k) x[idx++] = mean[b];
  }
}

struct MismatchContext {
  const std::vector<double>& p;  // P_{U~|X1=+1}(u~_i)
  std::vector<double> target;    // F_{U|+1}(t_j)
  double scale;
  int np;

  MismatchContext(const ChannelModel& channel, const QuantizerGrid& grid,
                  const GridProbabilities& probs)
      : p(probs.bin_given_plus),
        scale((grid.beta1 - grid.alpha1) / (grid.n_prime - 2)),
        np(grid.n_prime) {
    target.resize(static_cast<std::size_t>(np) - 1);
    for (int j = 1; j <= np - 1; ++j) {
      target[static_cast<std::size_t>(j) - 1] = channel.cond_cdf_u(grid.threshold(j),
                                                                   BpskSymbol::Plus);
    }
  }

  void residuals(const std::vector<double>& w, std::vector<double>& r) const {
    const int cols = np - 1;
    r.assign(static_cast<std::size_t>(cols), 0.0);
    for (int i = 0; i < np; ++i) {
      const double pi = p[static_cast<std::size_t>(i)];
      const double* row = w.data() + static_cast<std::size_t>(i) * cols;
      for (int j = 0; j < cols; ++j) r[static_cast<std::size_t>(j)] += pi * row[j];
    }
    for (int j = 0; j < cols; ++j) {
      r[static_cast<std::size_t>(j)] = target[static_cast<std::size_t>(j)] -
                                       r[static_cast<std::size_t>(j)];
    }
  }

  double eval(const std::vector<double>& w) const {
    std::vector<double> r;
    residuals(w, r);
    double total = 0.0;
    for (const double rj : r) total += rj * rj;
    return scale * total;
  }
};

double l1_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d += std::abs(a[k] - b[k]);
  return d;
}

// FFTW wrapper; FFTW_ESTIMATE planning leaves the input intact.
std::vector<std::complex<double>> dft(std::vector<std::complex<double>> in, int sign) {
  std::vector<std::complex<double>> out(in.size());
  fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(in.size()),
                                    reinterpret_cast<fftw_complex*>(in.data()),
                                    reinterpret_cast<fftw_complex*>(out.data()), sign,
                                    FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  return out;
}

}  // namespace

WitnessReport non_manip_witness(double a, double b) {
  if (!(a < b)) throw std::invalid_argument("non_manip_witness: requires a < b");
  WitnessReport r;
  r.a = a;
  r.b = b;
  r.lhs = x2_plus_noise_cdf(b + 1.0) - x2_plus_noise_cdf(a + 1.0);
  r.rhs = x2_plus_noise_cdf(b - 1.0) - x2_plus_noise_cdf(a - 1.0);
  r.gap = std::abs(r.lhs - r.rhs);
  return r;
}

WMatrix make_w0(const QuantizerGrid& grid) {
  const int np = grid.n_prime;
  std::vector<double> entries(static_cast<std::size_t>(np) * (np - 1));
  for (int i = 1; i <= np; ++i) {
    for (int j = 1; j <= np - 1; ++j) {
      entries[(static_cast<std::size_t>(i) - 1) * (np - 1) + (j - 1)] =
          step_indicator(grid.threshold(j) - grid.point(i));
    }
  }
  return WMatrix(np, std::move(entries));
}

double m_functional(const ChannelModel& channel, const WMatrix& w, const QuantizerGrid& grid,
                    const GridProbabilities& probs) {
  if (w.rows() != grid.n_prime) throw std::invalid_argument("m_functional: dimension mismatch");
  const MismatchContext ctx(channel, grid, probs);
  return ctx.eval(w.entries());
}

double estimate_lambda(const ChannelModel& channel, const QuantizerGrid& grid,
                       const GridProbabilities& probs, double delta, int budget,
                       std::uint64_t seed) {
  if (!(delta > 0.0)) throw std::invalid_argument("estimate_lambda: delta must be positive");
  if (budget < 1) throw std::invalid_argument("estimate_lambda: budget must be >= 1");
  const int np = grid.n_prime;
  const int cols = np - 1;
  const std::vector<double> w0 = make_w0(grid).entries();

  double dist_ones = 0.0;
  double dist_zeros = 0.0;
  for (const double w : w0) {
    dist_ones += 1.0 - w;
    dist_zeros += w;
  }
  if (delta > std::max(dist_ones, dist_zeros)) {
    throw std::invalid_argument("estimate_lambda: delta exceeds the reachable distance from W0");
  }

  const MismatchContext ctx(channel, grid, probs);
  double sum_p2 = 0.0;
  for (const double pi : ctx.p) sum_p2 += pi * pi;

  double best = std::numeric_limits<double>::infinity();

  auto repair = [&](std::vector<double>& w) -> bool {
    // Clamp, restore row monotonicity, then push back out to the
    // delta-sphere around W0; a handful of rounds settles or fails.
    for (int round = 0; round < 5; ++round) {
      for (auto& e : w) e = std::clamp(e, 0.0, 1.0);
      for (int i = 0; i < np; ++i) {
        isotonic_nondecreasing({w.data() + static_cast<std::size_t>(i) * cols,
                                static_cast<std::size_t>(cols)});
      }
      const double d = l1_distance(w, w0);
      if (d >= delta * (1.0 - 1e-12)) return true;
      if (d <= 0.0) return false;
      const double s = delta / d;
      for (std::size_t k = 0; k < w.size(); ++k) w[k] = w0[k] + s * (w[k] - w0[k]);
    }
    return l1_distance(w, w0) >= delta * (1.0 - 1e-12);
  };

  auto polish = [&](std::vector<double> w) {
    if (!repair(w)) return;
    best = std::min(best, ctx.eval(w));
    if (sum_p2 <= 0.0) return;
    std::vector<double> r;
    constexpr int kIterations = 8;
    for (int it = 0; it < kIterations; ++it) {
      ctx.residuals(w, r);
      // Exact minimizer along -grad lies at 1/kappa; half of it keeps the
      // projected steps stable.
      const double kappa = 2.0 * ctx.scale * sum_p2;
      const double eta = 0.5 / kappa;
      for (int i = 0; i < np; ++i) {
        const double gi = 2.0 * ctx.scale * ctx.p[static_cast<std::size_t>(i)];
        double* row = w.data() + static_cast<std::size_t>(i) * cols;
        for (int j = 0; j < cols; ++j) row[j] += eta * gi * r[static_cast<std::size_t>(j)];
      }
      if (!repair(w)) return;
      best = std::min(best, ctx.eval(w));
    }
  };

  int used = 0;
  // Structured probes: spread the whole budget of deviation uniformly over a
  // single row. Rows with small bin probability give the cheapest mismatch.
  const double m = delta / cols;
  if (m <= 0.5) {
    for (int i = 0; i < np && used < budget; ++i, ++used) {
      std::vector<double> w = w0;
      double* row = w.data() + static_cast<std::size_t>(i) * cols;
      for (int j = 0; j < cols; ++j) row[j] = row[j] >= 0.5 ? 1.0 - m : m;
      polish(std::move(w));
    }
  }

  std::mt19937_64 rng(seed);
  while (used < budget) {
    ++used;
    // Random monotone matrix: each row is a sorted uniform sample.
    std::vector<double> w(w0.size());
    for (int i = 0; i < np; ++i) {
      double* row = w.data() + static_cast<std::size_t>(i) * cols;
      for (int j = 0; j < cols; ++j) row[j] = uniform01(rng);
      std::sort(row, row + cols);
    }
    const double d = l1_distance(w, w0);
    if (d < delta) continue;  // direction too short to reach the sphere
    const double s = delta / d;
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = w0[k] + s * (w[k] - w0[k]);
    polish(std::move(w));
  }

  if (!std::isfinite(best)) {
    throw std::runtime_error("estimate_lambda: no feasible probe found");
  }
  return best;
}

double bin_posterior_range(const ChannelModel& channel, const QuantizerGrid& grid, int j,
                           BpskSymbol x1) {
  if (j < 1 || j > grid.n_prime) throw std::invalid_argument("bin_posterior_range: bad bin index");
  const double lo = j == 1 ? grid.alpha1 - grid.step : grid.point(j - 1);
  const double hi = grid.point(j);  // for j = n' this is beta1 + step
  constexpr int kPanels = 33;       // endpoints plus 32 interior samples
  double mn = std::numeric_limits<double>::infinity();
  double mx = -mn;
  for (int k = 0; k <= kPanels; ++k) {
    const double t = lo + (hi - lo) * static_cast<double>(k) / kPanels;
    const double p = channel.posterior(x1, t);
    mn = std::min(mn, p);
    mx = std::max(mx, p);
  }
  return mx - mn;
}

double delta_f_max(const ChannelModel& channel, const QuantizerGrid& grid) {
  double worst = 0.0;
  for (int j = 1; j <= grid.n_prime; ++j) {
    worst = std::max(worst, bin_posterior_range(channel, grid, j, BpskSymbol::Plus));
    worst = std::max(worst, bin_posterior_range(channel, grid, j, BpskSymbol::Minus));
  }
  return worst * worst;
}

double theta_bound(const ThetaInputs& in, const QuantizerGrid& grid) {
  if (!(in.mu > 0.0)) throw std::invalid_argument("theta_bound: mu must be positive");
  if (in.n < 1) throw std::invalid_argument("theta_bound: n must be >= 1");
  if (!(in.eps > 0.0)) throw std::invalid_argument("theta_bound: eps must be positive");
  if (in.eps >= 0.5) throw std::invalid_argument("theta_bound: eps must be < 0.5");
  if (!(in.p_typical > 0.0)) throw std::invalid_argument("theta_bound: p_typical must be positive");
  if (in.p_typical > 1.0 || in.p_atypical < 0.0 || in.p_atypical > 1.0) {
    throw std::invalid_argument("theta_bound: probability fields outside [0,1]");
  }
  if (in.delta_f_max < 0.0) throw std::invalid_argument("theta_bound: delta_f_max negative");

  const double span = grid.beta1 - grid.alpha1;
  const double np = grid.n_prime;
  const double lead = 4.0 * (np - 1.0) * (np - 1.0) / (in.mu * in.mu * (np - 2.0) * (np - 2.0));
  const double sampling = np * np * np * span * span / static_cast<double>(in.n);
  const double margin = ChannelModel::kPrior - in.eps;
  const double typical = span * span * np * in.delta_f_max / (in.p_typical * margin * margin);
  return lead * (sampling + typical) + np * in.p_atypical;
}

DeconvolutionReport deconvolution_check(std::span<const double> pdf_a,
                                        std::span<const double> pdf_b,
                                        std::span<const double> noise, double grid_step) {
  const std::size_t n = pdf_a.size();
  if (n < 8) throw std::invalid_argument("deconvolution_check: grid too small");
  if (pdf_b.size() != n || noise.size() != n) {
    throw std::invalid_argument("deconvolution_check: tabulation sizes differ");
  }
  if (!(grid_step > 0.0)) throw std::invalid_argument("deconvolution_check: bad grid step");

  constexpr double kNoiseFloor = 1e-8;
  constexpr double kCoincideTol = 1e-9;
  constexpr double kMaxDiscardedMass = 0.4;

  using cd = std::complex<double>;
  std::vector<cd> fa(n), fb(n), fn(n);
  const std::size_t zero_index = n / 2;  // abscissa 0 by convention
  for (std::size_t i = 0; i < n; ++i) {
    fa[i] = pdf_a[i];
    fb[i] = pdf_b[i];
    // Rotate the noise so its x = 0 sample sits at index 0; circular
    // convolution then stays aligned with the input grid.
    fn[i] = noise[(i + zero_index) % n];
  }
  const auto A = dft(std::move(fa), FFTW_FORWARD);
  const auto B = dft(std::move(fb), FFTW_FORWARD);
  const auto Nf = dft(std::move(fn), FFTW_FORWARD);

  std::vector<cd> conv_a_hat(n), conv_b_hat(n);
  for (std::size_t k = 0; k < n; ++k) {
    conv_a_hat[k] = A[k] * Nf[k] * grid_step;
    conv_b_hat[k] = B[k] * Nf[k] * grid_step;
  }
  const auto conv_a = dft(conv_a_hat, FFTW_BACKWARD);
  const auto conv_b = dft(conv_b_hat, FFTW_BACKWARD);

  DeconvolutionReport report;
  for (std::size_t i = 0; i < n; ++i) {
    report.forward_diff =
        std::max(report.forward_diff, std::abs(conv_a[i].real() - conv_b[i].real()) /
                                          static_cast<double>(n));
  }

  // The clip threshold applies to the continuous noise transform Nf * h.
  // Recovery fidelity is judged on the input spectra: if the clipped
  // frequencies carry too much of them, recovery is meaningless.
  double total_mass = 0.0;
  double discarded_mass = 0.0;
  std::vector<char> retained(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    const double mass = std::abs(A[k]) + std::abs(B[k]);
    total_mass += mass;
    if (std::abs(Nf[k]) * grid_step >= kNoiseFloor) {
      retained[k] = 1;
    } else {
      discarded_mass += mass;
    }
  }
  if (discarded_mass > kMaxDiscardedMass * total_mass) {
    throw std::runtime_error("ill-conditioned deconvolution");
  }
  report.retained_spectral_fraction = total_mass > 0.0 ? 1.0 - discarded_mass / total_mass : 0.0;

  std::vector<cd> rec_a_hat(n), rec_b_hat(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (retained[k]) {
      const cd t = Nf[k] * grid_step;
      rec_a_hat[k] = conv_a_hat[k] / t;
      rec_b_hat[k] = conv_b_hat[k] / t;
    }
  }
  const auto rec_a = dft(rec_a_hat, FFTW_BACKWARD);
  const auto rec_b = dft(rec_b_hat, FFTW_BACKWARD);
  for (std::size_t i = 0; i < n; ++i) {
    report.recovered_diff =
        std::max(report.recovered_diff, std::abs(rec_a[i].real() - rec_b[i].real()) /
                                            static_cast<double>(n));
  }
  report.convolved_coincide = report.forward_diff < kCoincideTol;
  return report;
}

}  // namespace relaycheck
