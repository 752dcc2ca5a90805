#include "relaycheck/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "relaycheck/empirics.hpp"
#include "relaycheck/util.hpp"

namespace relaycheck {

const char* const kSweepCsvHeader =
    "beta1,n_prime,n,trials,attack,tau,detections,detection_rate,mean_d,median_d,mean_r,error";

namespace {

// Reserved cell index for calibration streams, outside any sweep cell range.
constexpr std::uint64_t kCalibrationCellBase = 0xCA11B000ULL << 16;
// Tag separating the attack stream from the batch stream of a trial.
constexpr std::uint64_t kAttackStreamTag = 0xA77AC4ULL;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string::size_type start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_double(const std::string& text, const char* what) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string("parse_attack: bad ") + what + ": " + text);
  }
  if (used != text.size()) {
    throw std::invalid_argument(std::string("parse_attack: bad ") + what + ": " + text);
  }
  return value;
}

AttackSpec parse_leaf(const std::string& text) {
  AttackSpec spec;
  if (text == "identity") {
    spec.kind = AttackKind::Identity;
  } else if (text == "sign_flip") {
    spec.kind = AttackKind::SignFlip;
  } else if (text == "resample") {
    spec.kind = AttackKind::Resample;
  } else if (text.rfind("offset:", 0) == 0) {
    spec.kind = AttackKind::Offset;
    spec.param = parse_double(text.substr(7), "offset");
  } else {
    throw std::invalid_argument("parse_attack: unknown leaf attack: " + text);
  }
  return spec;
}

std::string format_leaf(const AttackSpec& spec) {
  switch (spec.kind) {
    case AttackKind::Identity:
      return "identity";
    case AttackKind::SignFlip:
      return "sign_flip";
    case AttackKind::Resample:
      return "resample";
    case AttackKind::Offset:
      return "offset:" + format_g6(spec.param);
    default:
      throw std::invalid_argument("format_attack: not a leaf attack");
  }
}

}  // namespace

AttackSpec parse_attack(const std::string& text) {
  if (text.rfind("garble:", 0) == 0) {
    const std::string rest = text.substr(7);
    const auto pos = rest.find(':');
    if (pos == std::string::npos) {
      throw std::invalid_argument("parse_attack: garble needs p and an inner leaf: " + text);
    }
    AttackSpec spec;
    spec.kind = AttackKind::Garble;
    spec.param = parse_double(rest.substr(0, pos), "garble probability");
    if (!(spec.param >= 0.0 && spec.param <= 1.0)) {
      throw std::invalid_argument("parse_attack: garble probability outside [0,1]: " + text);
    }
    spec.inner = std::make_shared<const AttackSpec>(parse_leaf(rest.substr(pos + 1)));
    return spec;
  }
  if (text.rfind("block:", 0) == 0) {
    AttackSpec spec;
    spec.kind = AttackKind::Block;
    for (const auto& item : split(text.substr(6), ',')) {
      const auto pos = item.find('*');
      if (pos == std::string::npos) {
        throw std::invalid_argument("parse_attack: block item needs length*leaf: " + item);
      }
      long len = 0;
      try {
        len = std::stol(item.substr(0, pos));
      } catch (const std::exception&) {
        throw std::invalid_argument("parse_attack: bad block length: " + item);
      }
      if (len <= 0) throw std::invalid_argument("parse_attack: block length must be positive");
      spec.blocks.emplace_back(len, parse_leaf(item.substr(pos + 1)));
    }
    if (spec.blocks.empty()) throw std::invalid_argument("parse_attack: empty block schedule");
    return spec;
  }
  if (text.rfind("custom:", 0) == 0) {
    AttackSpec spec;
    spec.kind = AttackKind::Custom;
    spec.kernel_csv = text.substr(7);
    if (spec.kernel_csv.empty()) {
      throw std::invalid_argument("parse_attack: custom needs a kernel CSV path");
    }
    return spec;
  }
  return parse_leaf(text);
}

std::string format_attack(const AttackSpec& spec) {
  switch (spec.kind) {
    case AttackKind::Garble: {
      if (!spec.inner) throw std::invalid_argument("format_attack: garble has no inner");
      return "garble:" + format_g6(spec.param) + ":" + format_leaf(*spec.inner);
    }
    case AttackKind::Block: {
      std::string out = "block:";
      for (std::size_t i = 0; i < spec.blocks.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(spec.blocks[i].first) + "*" + format_leaf(spec.blocks[i].second);
      }
      return out;
    }
    case AttackKind::Custom:
      return "custom:" + spec.kernel_csv;
    default:
      return format_leaf(spec);
  }
}

AttackSpec with_attack_param(AttackSpec spec, double value) {
  switch (spec.kind) {
    case AttackKind::Offset:
      spec.param = value;
      return spec;
    case AttackKind::Garble:
      if (!(value >= 0.0 && value <= 1.0)) {
        throw std::invalid_argument("with_attack_param: garble probability outside [0,1]");
      }
      spec.param = value;
      return spec;
    default:
      throw std::invalid_argument("with_attack_param: attack kind has no parameter axis");
  }
}

RelayBehavior materialize(const AttackSpec& spec, const ChannelModel& channel,
                          const QuantizerGrid& grid) {
  switch (spec.kind) {
    case AttackKind::Identity:
      return Identity{};
    case AttackKind::Offset:
      return AdditiveOffset{spec.param};
    case AttackKind::SignFlip:
      return SignFlip{};
    case AttackKind::Resample:
      return ResampleMarginal{};
    case AttackKind::Garble: {
      if (!spec.inner) throw std::invalid_argument("materialize: garble has no inner");
      return make_garble(spec.param, materialize(*spec.inner, channel, grid));
    }
    case AttackKind::Block: {
      BlockSwitch b;
      for (const auto& [len, inner_spec] : spec.blocks) {
        b.blocks.emplace_back(static_cast<std::size_t>(len),
                              std::make_shared<const RelayBehavior>(
                                  materialize(inner_spec, channel, grid)));
      }
      return b;
    }
    case AttackKind::Custom:
      return CustomKernel{grid, load_wmatrix_csv(spec.kernel_csv, grid.n_prime)};
  }
  throw std::invalid_argument("materialize: unknown attack kind");
}

WMatrix load_wmatrix_csv(const std::filesystem::path& path, int n_prime) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read kernel CSV: " + path.string());
  std::vector<double> entries;
  entries.reserve(static_cast<std::size_t>(n_prime) * (n_prime - 1));
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    ++rows;
    const auto fields = split(line, ',');
    if (static_cast<int>(fields.size()) != n_prime - 1) {
      throw std::runtime_error("kernel CSV row has wrong width: " + path.string());
    }
    for (const auto& f : fields) entries.push_back(parse_double(f, "kernel entry"));
  }
  if (rows != n_prime) throw std::runtime_error("kernel CSV has wrong row count: " + path.string());
  return WMatrix(n_prime, std::move(entries));
}

namespace {

struct CalibrationCache {
  // Key: (beta1 bits, n); q and calibration size are fixed per run.
  std::map<std::pair<std::uint64_t, long>, ThresholdProfile> profiles;
  int performed = 0;

  const ThresholdProfile& get(const ChannelModel& channel, const QuantizerGrid& grid, long n,
                              int trials, double q, std::uint64_t master_seed) {
    std::uint64_t beta_bits = 0;
    static_assert(sizeof(beta_bits) == sizeof(grid.beta1));
    std::memcpy(&beta_bits, &grid.beta1, sizeof(beta_bits));
    const auto key = std::make_pair(beta_bits, n);
    auto it = profiles.find(key);
    if (it == profiles.end()) {
      const auto seed = derive_seed(master_seed, kCalibrationCellBase + profiles.size(), 0);
      it = profiles.emplace(key, calibrate_threshold(channel, grid, n, trials, q, seed)).first;
      ++performed;
    }
    return it->second;
  }
};

CellResult run_cell(const ChannelModel& channel, const QuantizerGrid& grid,
                    const AttackSpec& attack, long n, int trials, double tau,
                    std::uint64_t master_seed, std::uint64_t cell_index) {
  if (trials < 1) throw std::invalid_argument("run_trials: trials must be >= 1");
  if (n < 1) throw std::invalid_argument("run_trials: n must be >= 1");
  const RelayBehavior behavior = materialize(attack, channel, grid);

  std::vector<double> d(static_cast<std::size_t>(trials));
  std::vector<double> r(static_cast<std::size_t>(trials));
  std::vector<char> hit(static_cast<std::size_t>(trials), 0);
  parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
    const std::uint64_t trial_seed = derive_seed(master_seed, cell_index, t);
    const SampleBatch batch = channel.sample_batch(static_cast<std::size_t>(n), trial_seed);
    const std::vector<double> v =
        apply_attack(channel, batch.u, behavior, splitmix64(trial_seed ^ kAttackStreamTag));
    const double dp = decision_statistic(channel, v, batch.x1, grid, BpskSymbol::Plus);
    const double dm = decision_statistic(channel, v, batch.x1, grid, BpskSymbol::Minus);
    d[t] = std::max(dp, dm);
    r[t] = maliciousness_R(cond_cdf_matrix(v, batch.u, grid), grid);
    hit[t] = d[t] > tau ? 1 : 0;
  });

  CellResult cell;
  cell.beta1 = grid.beta1;
  cell.n_prime = grid.n_prime;
  cell.n = n;
  cell.trials = trials;
  cell.attack = format_attack(attack);
  cell.tau = tau;
  for (int t = 0; t < trials; ++t) {
    cell.detections += hit[static_cast<std::size_t>(t)];
    cell.mean_d += d[static_cast<std::size_t>(t)];
    cell.mean_r += r[static_cast<std::size_t>(t)];
  }
  cell.detection_rate = static_cast<double>(cell.detections) / trials;
  cell.mean_d /= trials;
  cell.mean_r /= trials;
  std::sort(d.begin(), d.end());
  cell.median_d = trials % 2 ? d[static_cast<std::size_t>(trials) / 2]
                             : 0.5 * (d[static_cast<std::size_t>(trials) / 2 - 1] +
                                      d[static_cast<std::size_t>(trials) / 2]);
  return cell;
}

ExperimentReport run_axes(const ChannelModel& channel, const ExperimentConfig& cfg,
                          bool use_axes) {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<double> beta1_axis =
      use_axes && !cfg.sweep_beta1.empty() ? cfg.sweep_beta1 : std::vector<double>{cfg.beta1};
  const std::vector<long> n_axis =
      use_axes && !cfg.sweep_n.empty() ? cfg.sweep_n : std::vector<long>{cfg.n};
  std::vector<AttackSpec> attack_axis;
  if (use_axes && !cfg.sweep_attack_param.empty()) {
    for (const double p : cfg.sweep_attack_param) {
      attack_axis.push_back(with_attack_param(cfg.attack, p));
    }
  } else {
    attack_axis.push_back(cfg.attack);
  }

  ExperimentReport report;
  report.master_seed = cfg.master_seed;
  report.fixed_threshold = cfg.fixed_tau.has_value();
  report.fixed_tau = cfg.fixed_tau.value_or(0.0);
  report.q = cfg.quantile_q;
  report.calibration_trials = cfg.calibration_trials;

  CalibrationCache calibrations;
  std::uint64_t cell_index = 0;
  for (const double beta1 : beta1_axis) {
    for (const long n : n_axis) {
      for (const AttackSpec& attack : attack_axis) {
        CellResult cell;
        cell.beta1 = beta1;
        cell.n = n;
        cell.trials = cfg.trials;
        try {
          cell.attack = format_attack(attack);
          const QuantizerGrid grid = choose_grid(channel, beta1);
          const double tau = cfg.fixed_tau
                                 ? *cfg.fixed_tau
                                 : calibrations
                                       .get(channel, grid, n, cfg.calibration_trials,
                                            cfg.quantile_q, cfg.master_seed)
                                       .tau;
          cell = run_cell(channel, grid, attack, n, cfg.trials, tau, cfg.master_seed, cell_index);
        } catch (const std::exception& e) {
          cell.error = e.what();
        }
        report.cells.push_back(std::move(cell));
        ++cell_index;
      }
    }
  }
  report.calibrations_performed = calibrations.performed;
  for (const auto& [key, profile] : calibrations.profiles) report.calibrations.push_back(profile);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace

ExperimentReport run_trials(const ChannelModel& channel, const ExperimentConfig& cfg) {
  return run_axes(channel, cfg, /*use_axes=*/false);
}

ExperimentReport sweep(const ChannelModel& channel, const ExperimentConfig& cfg) {
  return run_axes(channel, cfg, /*use_axes=*/true);
}

void emit_report(const ExperimentReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write report: " + path.string());
  out << "# relaycheck sweep version=" << kVersion << " master_seed=" << report.master_seed;
  if (report.fixed_threshold) {
    out << " threshold=fixed tau=" << format_g6(report.fixed_tau);
  } else {
    out << " threshold=quantile q=" << format_g6(report.q)
        << " calibration_trials=" << report.calibration_trials;
  }
  out << '\n' << kSweepCsvHeader << '\n';
  for (const auto& cell : report.cells) {
    out << format_g6(cell.beta1) << ',' << cell.n_prime << ',' << cell.n << ',' << cell.trials
        << ',' << cell.attack << ',' << format_g6(cell.tau) << ',' << cell.detections << ','
        << format_g6(cell.detection_rate) << ',' << format_g6(cell.mean_d) << ','
        << format_g6(cell.median_d) << ',' << format_g6(cell.mean_r) << ',' << cell.error << '\n';
  }
  if (!out) throw std::runtime_error("write failed for report: " + path.string());
}

}  // namespace relaycheck
