// relaycheck: Byzantine-relay attack detection simulator for the Gaussian
// two-way relay channel. Subcommands: grid-info, calibrate, detect, sweep,
// analyze. Every flag is mirrored by a config-file key (see --config).

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "relaycheck/analysis.hpp"
#include "relaycheck/detector.hpp"
#include "relaycheck/empirics.hpp"
#include "relaycheck/harness.hpp"
#include "relaycheck/util.hpp"

using namespace relaycheck;

namespace {

std::filesystem::path resolve(const std::string& out_dir, const std::string& file) {
  const std::filesystem::path p(file);
  if (p.is_absolute()) return p;
  return std::filesystem::path(out_dir) / p;
}

void print_grid_info(const ChannelModel& channel, double beta1) {
  const QuantizerGrid grid = choose_grid(channel, beta1);
  const XiValues xi = xi_values(channel, beta1);
  std::cout << grid_summary(grid) << '\n';
  std::cout << "alpha1=" << format_g6(grid.alpha1) << '\n';
  std::cout << "xi1=" << format_g6(xi.xi1) << " xi2=" << format_g6(xi.xi2)
            << " xi3=" << format_g6(xi.xi3) << " xi4=" << format_g6(xi.xi4) << '\n';
  const auto tails = verify_grid_asymptotics(channel, std::vector<double>{beta1});
  std::cout << "F_alpha_plus=" << format_g6(tails[0].f_alpha_plus)
            << " F_alpha_minus=" << format_g6(tails[0].f_alpha_minus)
            << " tail_beta_plus=" << format_g6(tails[0].tail_beta_plus)
            << " tail_beta_minus=" << format_g6(tails[0].tail_beta_minus) << '\n';
}

void write_analyze_csv(const ChannelModel& channel, double beta1, double delta, int budget,
                       std::uint64_t seed, int deconv_points, const std::filesystem::path& path) {
  const QuantizerGrid grid = choose_grid(channel, beta1);
  const GridProbabilities probs = grid_probabilities(channel, grid);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write analyze report: " + path.string());
  out << "# relaycheck analyze version=" << kVersion << " beta1=" << format_g6(beta1)
      << " n_prime=" << grid.n_prime << " delta=" << format_g6(delta) << " budget=" << budget
      << " seed=" << seed << '\n';
  out << "section,name,value\n";
  auto row = [&](const char* section, const std::string& name, double value) {
    out << section << ',' << name << ',' << format_g6(value) << '\n';
  };

  const WitnessReport witness = non_manip_witness(0.0, 2.0);
  row("witness", "lhs_a0_b2", witness.lhs);
  row("witness", "rhs_a0_b2", witness.rhs);
  row("witness", "gap_a0_b2", witness.gap);

  row("grid", "n_prime", grid.n_prime);
  row("grid", "step", grid.step);

  const double df = delta_f_max(channel, grid);
  row("posterior_range", "delta_f_max", df);
  row("posterior_range", "scaling", (grid.beta1 - grid.alpha1) * (grid.beta1 - grid.alpha1) *
                               grid.n_prime * df);

  row("m_functional", "at_w0", m_functional(channel, make_w0(grid), grid, probs));
  const double lambda = estimate_lambda(channel, grid, probs, delta, budget, seed);
  row("lambda", "estimate", lambda);
  row("lambda", "epsilon_threshold_mu0", epsilon_threshold(lambda, 0.0, grid));
  row("thresholds", "mu_prime_mu0.02_delta0.5", mu_prime(0.02, grid, 0.5));

  ThetaInputs theta;
  theta.mu = 0.05;
  theta.n = 1000000;
  theta.eps = 0.01;
  theta.p_typical = 0.99;
  theta.p_atypical = 0.01;
  theta.delta_f_max = df;
  row("theta", "mu0.05_n1e6_eps0.01", theta_bound(theta, grid));

  // Deconvolution demonstration on a symmetric grid over [-10, 10).
  const int n = deconv_points;
  const double h = 20.0 / n;
  std::vector<double> fplus(n), fminus(n), noise(n);
  for (int i = 0; i < n; ++i) {
    const double x = -10.0 + h * i;
    fplus[static_cast<std::size_t>(i)] = channel.cond_pdf_u(x, BpskSymbol::Plus);
    fminus[static_cast<std::size_t>(i)] = channel.cond_pdf_u(x, BpskSymbol::Minus);
    noise[static_cast<std::size_t>(i)] = channel.noise_pdf(x);
  }
  const DeconvolutionReport same = deconvolution_check(fplus, fplus, noise, h);
  row("deconvolution", "identical_recovered_diff", same.recovered_diff);
  const DeconvolutionReport diff = deconvolution_check(fplus, fminus, noise, h);
  row("deconvolution", "plus_vs_minus_forward_diff", diff.forward_diff);
  row("deconvolution", "retained_spectral_fraction", diff.retained_spectral_fraction);

  if (!out) throw std::runtime_error("write failed for analyze report: " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Byzantine-relay attack detection for the Gaussian two-way relay channel"};
  app.set_config("--config", "", "Config file (INI/TOML; sections per subcommand)");
  app.require_subcommand(1);

  std::string out_dir = ".";
  app.add_option("--out-dir", out_dir, "Directory for output files")
      ->envname("RELAYCHECK_OUT_DIR")
      ->capture_default_str();

  const ChannelModel channel;

  // grid-info
  auto* grid_cmd = app.add_subcommand("grid-info", "Print the quantizer grid for a beta1");
  double gi_beta1 = 2.0;
  grid_cmd->add_option("--beta1", gi_beta1, "Grid half-width")->capture_default_str();

  // calibrate
  auto* cal_cmd = app.add_subcommand("calibrate", "Calibrate a detection threshold");
  double cal_beta1 = 2.0, cal_q = 0.99;
  long cal_n = 100000;
  int cal_trials = 500;
  std::uint64_t cal_seed = 42;
  std::string cal_out = "threshold.txt";
  cal_cmd->add_option("--beta1", cal_beta1, "Grid half-width")->capture_default_str();
  cal_cmd->add_option("--n", cal_n, "Sequence length per trial")->capture_default_str();
  cal_cmd->add_option("--trials", cal_trials, "Calibration trials (>= 100)")->capture_default_str();
  cal_cmd->add_option("--q", cal_q, "Quantile of the honest statistic")->capture_default_str();
  cal_cmd->add_option("--seed", cal_seed, "Calibration seed")->capture_default_str();
  cal_cmd->add_option("--out", cal_out, "Threshold profile file")->capture_default_str();

  // detect
  auto* det_cmd = app.add_subcommand("detect", "Run one trial and print the detection result");
  double det_beta1 = 2.0;
  long det_n = 100000;
  std::uint64_t det_seed = 42;
  std::string det_attack = "identity";
  std::string det_profile;
  double det_tau = 0.0;
  std::string det_csv;
  det_cmd->add_option("--beta1", det_beta1, "Grid half-width")->capture_default_str();
  det_cmd->add_option("--n", det_n, "Sequence length")->capture_default_str();
  det_cmd->add_option("--seed", det_seed, "Trial seed")->capture_default_str();
  det_cmd->add_option("--attack", det_attack, "Relay behavior spec")->capture_default_str();
  auto* det_profile_opt =
      det_cmd->add_option("--profile", det_profile, "Threshold profile file to load");
  auto* det_tau_opt = det_cmd->add_option("--tau", det_tau, "Fixed threshold");
  det_profile_opt->excludes(det_tau_opt);
  det_cmd->add_option("--csv", det_csv, "Append the result row to this CSV");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Monte Carlo sweep, CSV report");
  ExperimentConfig cfg;
  std::string sweep_attack = "identity";
  std::string sweep_out = "sweep.csv";
  double sweep_tau = -1.0;
  sweep_cmd->add_option("--beta1", cfg.beta1, "Grid half-width")->capture_default_str();
  sweep_cmd->add_option("--n", cfg.n, "Sequence length per trial")->capture_default_str();
  sweep_cmd->add_option("--trials", cfg.trials, "Trials per cell")->capture_default_str();
  sweep_cmd->add_option("--seed", cfg.master_seed, "Master seed")->capture_default_str();
  sweep_cmd->add_option("--attack", sweep_attack, "Relay behavior spec")->capture_default_str();
  sweep_cmd->add_option("--q", cfg.quantile_q, "Calibration quantile")->capture_default_str();
  sweep_cmd->add_option("--calibration-trials", cfg.calibration_trials, "Calibration trials")
      ->capture_default_str();
  sweep_cmd->add_option("--tau", sweep_tau, "Fixed threshold (skips calibration)");
  sweep_cmd->add_option("--sweep-n", cfg.sweep_n, "n axis")->delimiter(',');
  sweep_cmd->add_option("--sweep-beta1", cfg.sweep_beta1, "beta1 axis")->delimiter(',');
  sweep_cmd->add_option("--sweep-attack-param", cfg.sweep_attack_param, "attack parameter axis")
      ->delimiter(',');
  sweep_cmd->add_option("--out", sweep_out, "Report CSV path")->capture_default_str();

  // analyze
  auto* ana_cmd = app.add_subcommand("analyze", "Numerical verifiers, CSV report");
  double ana_beta1 = 2.0, ana_delta = 5.0;
  int ana_budget = 1000, ana_points = 16384;
  std::uint64_t ana_seed = 42;
  std::string ana_out = "analyze.csv";
  ana_cmd->add_option("--beta1", ana_beta1, "Grid half-width")->capture_default_str();
  ana_cmd->add_option("--delta", ana_delta, "Kernel-distance delta for lambda")
      ->capture_default_str();
  ana_cmd->add_option("--budget", ana_budget, "Restarts for the lambda search")
      ->capture_default_str();
  ana_cmd->add_option("--seed", ana_seed, "Search seed")->capture_default_str();
  ana_cmd->add_option("--deconv-points", ana_points, "Deconvolution grid size")
      ->capture_default_str();
  ana_cmd->add_option("--out", ana_out, "Report CSV path")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*grid_cmd) {
      print_grid_info(channel, gi_beta1);
    } else if (*cal_cmd) {
      const QuantizerGrid grid = choose_grid(channel, cal_beta1);
      const ThresholdProfile profile =
          calibrate_threshold(channel, grid, cal_n, cal_trials, cal_q, cal_seed);
      const auto path = resolve(out_dir, cal_out);
      profile.save(path);
      std::cout << "tau=" << format_g6(profile.tau) << " file=" << path.string() << '\n';
    } else if (*det_cmd) {
      const QuantizerGrid grid = choose_grid(channel, det_beta1);
      ThresholdProfile profile;
      if (!det_profile.empty()) {
        profile = ThresholdProfile::load(resolve(out_dir, det_profile));
      } else if (det_tau_opt->count()) {
        profile.tau = det_tau;
      } else {
        throw std::runtime_error("detect needs --profile or --tau");
      }
      const SampleBatch batch =
          channel.sample_batch(static_cast<std::size_t>(det_n), det_seed);
      const RelayBehavior behavior = materialize(parse_attack(det_attack), channel, grid);
      const std::vector<double> v =
          apply_attack(channel, batch.u, behavior, splitmix64(det_seed ^ 0xA77AC4ULL));
      const DetectionResult r = evaluate_detection(channel, v, batch.x1, grid, profile, det_seed);
      const double R = maliciousness_R(cond_cdf_matrix(v, batch.u, grid), grid);
      std::cout << "d_plus=" << format_g6(r.d_plus) << " d_minus=" << format_g6(r.d_minus)
                << " d=" << format_g6(r.d) << " threshold=" << format_g6(r.threshold)
                << " attacked=" << (r.attacked ? 1 : 0) << " R=" << format_g6(R)
                << " n=" << r.n << " n_prime=" << r.n_prime << " seed=" << r.seed << '\n';
      if (!det_csv.empty()) append_detection_csv(resolve(out_dir, det_csv), r);
    } else if (*sweep_cmd) {
      cfg.attack = parse_attack(sweep_attack);
      if (sweep_tau >= 0.0) cfg.fixed_tau = sweep_tau;
      const ExperimentReport report = sweep(channel, cfg);
      const auto path = resolve(out_dir, sweep_out);
      emit_report(report, path);
      // Persist the calibrations next to the report so later runs can reuse
      // them through detect --profile.
      for (std::size_t k = 0; k < report.calibrations.size(); ++k) {
        auto profile_path = path;
        profile_path.replace_extension(".threshold" + std::to_string(k) + ".txt");
        report.calibrations[k].save(profile_path);
      }
      std::cerr << "cells=" << report.cells.size()
                << " calibrations=" << report.calibrations_performed
                << " wall_seconds=" << format_g6(report.wall_seconds) << '\n';
      std::cout << path.string() << '\n';
    } else if (*ana_cmd) {
      const auto path = resolve(out_dir, ana_out);
      write_analyze_csv(channel, ana_beta1, ana_delta, ana_budget, ana_seed, ana_points, path);
      std::cout << path.string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
