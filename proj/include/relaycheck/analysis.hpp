#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "relaycheck/attacks.hpp"
#include "relaycheck/channel.hpp"
#include "relaycheck/quantizer.hpp"

namespace relaycheck {

// Interval-probability witness for non-manipulability: the channel admits no
// distribution-preserving attack kernel iff some (a, b) makes the two window
// probabilities of X2 + N differ. X2 + N is the mixture of variance-1/2
// Gaussians at +-1.
struct WitnessReport {
  double a = 0.0;
  double b = 0.0;
  double lhs = 0.0;  // Pr(a+1 < X2+N < b+1)
  double rhs = 0.0;  // Pr(a-1 < X2+N < b-1)
  double gap = 0.0;  // |lhs - rhs|
};

WitnessReport non_manip_witness(double a, double b);

// Reference kernel W0 with [W0]_{i,j} = step(t_j - u~_i); the unique zero of
// the mismatch functional M over the monotone domain.
WMatrix make_w0(const QuantizerGrid& grid);

// M(W) = ((beta1-alpha1)/(n'-2)) * sum_j |F_{U|+1}(t_j) - sum_i P_{U~|+1}(u~_i) w_{i,j}|^2.
// Evaluated at s = +1; by channel symmetry the s = -1 functional has the same
// infimum (asserted in tests, not assumed here).
double m_functional(const ChannelModel& channel, const WMatrix& w, const QuantizerGrid& grid,
                    const GridProbabilities& probs);

// Randomized upper-bound estimate of lambda(delta) = inf M over monotone
// kernels at entrywise-sum distance >= delta from W0: random feasible
// directions scaled onto the delta-sphere plus projected local descent, best
// of `budget` restarts. The reported value never exceeds M at any probed
// point; it does not certify the true infimum.
double estimate_lambda(const ChannelModel& channel, const QuantizerGrid& grid,
                       const GridProbabilities& probs, double delta, int budget,
                       std::uint64_t seed);

// Range (max - min) of P_{X1|U}(x1|.) over bin j, from endpoint values plus a
// 32-point interior grid. The unbounded edge bins are sampled over the
// one-step windows [alpha1-step, alpha1] and [beta1, beta1+step].
double bin_posterior_range(const ChannelModel& channel, const QuantizerGrid& grid, int j,
                           BpskSymbol x1);

// Max over bins and symbols of the squared posterior range.
double delta_f_max(const ChannelModel& channel, const QuantizerGrid& grid);

struct ThetaInputs {
  double mu = 0.0;
  long n = 0;
  double eps = 0.0;        // must be < 0.5
  double p_typical = 0.0;  // estimate of Pr(A_eps)
  double p_atypical = 0.0;
  double delta_f_max = 0.0;
};

// Theta(mu, n, n') = (4(n'-1)^2 / (mu^2 (n'-2)^2)) *
//   (n'^3 (beta1-alpha1)^2 / n
//    + (beta1-alpha1)^2 n' dF_max / (Pr(A_eps) (P_X1 - eps)^2))
//   + n' Pr(not A_eps)
double theta_bound(const ThetaInputs& inputs, const QuantizerGrid& grid);

struct DeconvolutionReport {
  double forward_diff = 0.0;    // max |a*noise - b*noise|
  double recovered_diff = 0.0;  // max |deconv(a*noise) - deconv(b*noise)|
  bool convolved_coincide = false;
  double retained_spectral_fraction = 0.0;

  // The headline value: recovery mismatch when the convolved versions
  // coincide, the forward difference when they do not.
  double value() const { return convolved_coincide ? recovered_diff : forward_diff; }
};

// Numerical check of the deconvolution identifiability claim: convolve both
// densities with the noise, compare, then recover them by spectral division
// (noise transform clipped at 1e-8) and compare the recoveries. All three
// densities must be tabulated on the same uniform grid with abscissa 0 at
// index size/2 and negligible tails. Throws "ill-conditioned deconvolution"
// if the clipped frequencies carry more than 40% of the input spectral mass.
DeconvolutionReport deconvolution_check(std::span<const double> pdf_a,
                                        std::span<const double> pdf_b,
                                        std::span<const double> noise, double grid_step);

}  // namespace relaycheck
