#include "relaycheck/detector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "relaycheck/util.hpp"

namespace relaycheck {

const char* const kDetectionCsvHeader = "n,n_prime,seed,d_plus,d_minus,d,threshold,attacked";

double decision_statistic(const ChannelModel& channel, std::span<const double> v,
                          std::span<const BpskSymbol> x1, const QuantizerGrid& grid,
                          BpskSymbol s) {
  if (v.size() != x1.size()) throw std::invalid_argument("decision_statistic: length mismatch");
  if (v.empty()) throw std::invalid_argument("decision_statistic: empty sequences");
  const int np = grid.n_prime;
  // hist[j-1] counts class members whose smallest covering threshold is t_j;
  // the last slot absorbs values above t_{n'-1}.
  std::vector<long> hist(static_cast<std::size_t>(np), 0);
  long n_class = 0;
  const auto t_begin = grid.points.begin();
  const auto t_end = grid.points.begin() + (np - 1);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (x1[i] != s) continue;
    ++n_class;
    const auto it = std::lower_bound(t_begin, t_end, v[i]);
    ++hist[static_cast<std::size_t>(it - t_begin)];
  }
  if (n_class == 0) throw std::runtime_error("empty conditioning class");
  double sum = 0.0;
  long cum = 0;
  for (int j = 1; j <= np - 1; ++j) {
    cum += hist[static_cast<std::size_t>(j) - 1];
    const double fhat = static_cast<double>(cum) / static_cast<double>(n_class);
    sum += std::abs(fhat - channel.cond_cdf_u(grid.threshold(j), s));
  }
  return sum / (np - 2);
}

double mu_prime(double mu, const QuantizerGrid& grid, double delta) {
  if (!(mu > 0.0)) throw std::invalid_argument("mu_prime: mu must be positive");
  if (delta < 0.0) throw std::invalid_argument("mu_prime: delta must be nonnegative");
  return mu + delta / (grid.n_prime - 2);
}

double epsilon_threshold(double lambda_est, double mu_n, const QuantizerGrid& grid) {
  if (!(lambda_est > 0.0)) throw std::invalid_argument("epsilon_threshold: lambda must be positive");
  if (mu_n < 0.0) throw std::invalid_argument("epsilon_threshold: mu_n must be nonnegative");
  if (!(lambda_est > mu_n)) throw std::runtime_error("threshold not positive at this n'");
  return (lambda_est - mu_n) / (grid.beta1 - grid.alpha1);
}

ThresholdProfile calibrate_threshold(const ChannelModel& channel, const QuantizerGrid& grid,
                                     long n, int trials, double q, std::uint64_t seed) {
  if (trials < 100) throw std::invalid_argument("calibrate_threshold: trials must be >= 100");
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("calibrate_threshold: q must be in (0,1)");
  if (n < 1) throw std::invalid_argument("calibrate_threshold: n must be >= 1");

  std::vector<double> d(static_cast<std::size_t>(trials));
  parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
    const SampleBatch batch =
        channel.sample_batch(static_cast<std::size_t>(n), derive_seed(seed, 0, t));
    const double dp = decision_statistic(channel, batch.u, batch.x1, grid, BpskSymbol::Plus);
    const double dm = decision_statistic(channel, batch.u, batch.x1, grid, BpskSymbol::Minus);
    d[t] = std::max(dp, dm);
  });

  ThresholdProfile profile;
  profile.tau = empirical_quantile(std::move(d), q);
  profile.method = ThresholdMethod::CalibratedQuantile;
  profile.q = q;
  profile.beta1 = grid.beta1;
  profile.n_prime = grid.n_prime;
  profile.step = grid.step;
  profile.calibration_n = n;
  profile.calibration_trials = trials;
  profile.seed = seed;
  return profile;
}

DetectionResult evaluate_detection(const ChannelModel& channel, std::span<const double> v,
                                   std::span<const BpskSymbol> x1, const QuantizerGrid& grid,
                                   const ThresholdProfile& profile, std::uint64_t seed) {
  DetectionResult r;
  r.d_plus = decision_statistic(channel, v, x1, grid, BpskSymbol::Plus);
  r.d_minus = decision_statistic(channel, v, x1, grid, BpskSymbol::Minus);
  r.d = std::max(r.d_plus, r.d_minus);
  r.threshold = profile.tau;
  r.attacked = detect(r.d, profile);
  r.n = static_cast<long>(v.size());
  r.n_prime = grid.n_prime;
  r.seed = seed;
  return r;
}

void ThresholdProfile::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write threshold profile: " + path.string());
  out.precision(17);
  out << "method="
      << (method == ThresholdMethod::CalibratedQuantile ? "calibrated-quantile" : "epsilon-theory")
      << '\n';
  out << "tau=" << tau << '\n';
  out << "q=" << q << '\n';
  out << "beta1=" << beta1 << '\n';
  out << "n_prime=" << n_prime << '\n';
  out << "step=" << step << '\n';
  out << "calibration_n=" << calibration_n << '\n';
  out << "calibration_trials=" << calibration_trials << '\n';
  out << "seed=" << seed << '\n';
  if (!out) throw std::runtime_error("write failed for threshold profile: " + path.string());
}

ThresholdProfile ThresholdProfile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read threshold profile: " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto pos = line.find('=');
    if (pos == std::string::npos) {
      throw std::runtime_error("malformed threshold profile line: " + line);
    }
    kv[line.substr(0, pos)] = line.substr(pos + 1);
  }
  auto need = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) {
      throw std::runtime_error(std::string("threshold profile missing key: ") + key);
    }
    return it->second;
  };
  ThresholdProfile p;
  p.method = need("method") == "epsilon-theory" ? ThresholdMethod::EpsilonTheory
                                                : ThresholdMethod::CalibratedQuantile;
  p.tau = std::stod(need("tau"));
  p.q = std::stod(need("q"));
  p.beta1 = std::stod(need("beta1"));
  p.n_prime = std::stoi(need("n_prime"));
  p.step = std::stod(need("step"));
  p.calibration_n = std::stol(need("calibration_n"));
  p.calibration_trials = std::stoi(need("calibration_trials"));
  p.seed = std::stoull(need("seed"));
  if (!(p.tau > 0.0)) throw std::runtime_error("threshold profile has non-positive tau");
  return p;
}

void append_detection_csv(const std::filesystem::path& path, const DetectionResult& r) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot append detection CSV: " + path.string());
  if (fresh) out << kDetectionCsvHeader << '\n';
  out << r.n << ',' << r.n_prime << ',' << r.seed << ',' << format_g6(r.d_plus) << ','
      << format_g6(r.d_minus) << ',' << format_g6(r.d) << ',' << format_g6(r.threshold) << ','
      << (r.attacked ? 1 : 0) << '\n';
  if (!out) throw std::runtime_error("write failed for detection CSV: " + path.string());
}

}  // namespace relaycheck
