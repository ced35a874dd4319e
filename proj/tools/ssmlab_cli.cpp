// ssmlab command-line front end.
//
//   ssmlab converge   --seed N [--pairs 20] [--out fig2.csv]
//   ssmlab gen-dynsys --seed N --kind vdp|harmonic|ou|duffing [--count 10]
//   ssmlab metric     --seed N [--kind vdp] [--etas 0,0.5,1] [--lags 16]
//   ssmlab stagewise  --seed N [--strides 4,2,1] [--delta 0.04]
//   ssmlab bounds     [--s4] [--s6] [--general] --bnorm ... --lu ...
//
// Every subcommand accepts --config FILE with flat `key = value` lines.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ssmlab/ssmlab.hpp"

namespace {

using namespace ssmlab;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitDiverged = 2;

/// Output sink: a file when a path is given, stdout otherwise. The file is
/// opened up front so an unwritable path fails before any work is done.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
    if (!*file_) throw Error("cannot open '" + path + "' for writing");
  }

  std::ostream& csv() { return file_ ? static_cast<std::ostream&>(*file_) : std::cout; }

  /// Human-readable notes go to stdout unless the CSV itself does.
  std::ostream& notes() { return file_ ? std::cout : std::cerr; }

  void finish() {
    csv().flush();
    if (!csv()) throw Error("write failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

struct Common {
  std::uint64_t seed = 0;
  std::string out;
  unsigned threads = 1;
};

void add_seed(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "PRNG seed (64-bit unsigned)")->required();
}

void add_out(CLI::App* cmd, Common& c) {
  cmd->add_option("--out", c.out, "Output CSV path (default: stdout)");
}

void add_threads(CLI::App* cmd, Common& c) {
  cmd->add_option("--threads", c.threads, "Worker threads")
      ->envname("SSMLAB_THREADS")
      ->check(CLI::PositiveNumber);
}

void add_config(CLI::App* cmd) {
  // Expanded by expand_config before parsing; registered for --help only.
  cmd->add_option("--config", "Read flags from a key = value file (# starts a comment)");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Replaces `--config FILE` with one `--key=value` argument per line of FILE,
/// placed right after the subcommand. Keys also given on the command line are
/// skipped, so explicit flags win. Returns arguments in CLI11's reversed order.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::size_t sub = 0;
  while (sub < args.size() && args[sub].rfind("-", 0) == 0) ++sub;

  std::string file;
  for (std::size_t i = sub; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      file = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                 args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw CLI::FileError::Missing(file);
    auto given = [&](const std::string& key) {
      return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
        return a == "--" + key || a.rfind("--" + key + "=", 0) == 0;
      });
    };
    std::vector<std::string> extra;
    std::string line;
    while (std::getline(in, line)) {
      line = trim(line.substr(0, line.find('#')));
      if (line.empty() || line.front() == '[') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw CLI::ConversionError("config line '" + line + "' has no '='");
      const std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
        value = value.substr(1, value.size() - 2);
      if (!given(key)) extra.push_back("--" + key + "=" + value);
    }
    const auto at = static_cast<std::ptrdiff_t>(std::min(sub + 1, args.size()));
    args.insert(args.begin() + at, extra.begin(), extra.end());
  }
  std::reverse(args.begin(), args.end());
  return args;
}

// --- converge ---------------------------------------------------------------

struct ConvergeArgs {
  Common common;
  int pairs = 20;
  std::vector<double> taus = dyadic_taus(-10, -2);
  std::vector<double> scales = {1, 2, 4, 8, 16, 32};
  std::size_t states = 8;
  double summary_tau = std::ldexp(1.0, -8);
};

int run_converge(const ConvergeArgs& a) {
  Output out(a.common.out);
  StudyConfig cfg;
  cfg.n_pairs = a.pairs;
  cfg.taus = a.taus;
  cfg.scales = a.scales;
  cfg.n_states = a.states;
  cfg.threads = a.common.threads;
  const auto rows = run_convergence_study(cfg, a.common.seed);
  write_convergence_csv(out.csv(), rows);
  out.finish();

  auto& os = out.notes();
  double tau = a.summary_tau;
  if (std::find(cfg.taus.begin(), cfg.taus.end(), tau) == cfg.taus.end())
    tau = cfg.taus[cfg.taus.size() / 2];
  os << "median rel_max_error across " << cfg.n_pairs << " pairs at tau=" << format_double(tau)
     << "\n";
  os << "flavor method   ";
  for (double s : cfg.scales) {
    char buf[32];
    std::snprintf(buf, sizeof buf, " %11s", ("x" + format_double(s)).c_str());
    os << buf;
  }
  os << "\n";
  for (Flavor f : cfg.flavors)
    for (Method m : cfg.methods) {
      char head[32];
      std::snprintf(head, sizeof head, "%-6s %-9s", to_string(f), to_string(m));
      os << head;
      for (double s : cfg.scales) {
        char buf[32];
        std::snprintf(buf, sizeof buf, " %11.4e", median_error(rows, f, m, tau, s));
        os << buf;
      }
      os << "\n";
    }

  const std::size_t diverged = count_diverged(rows);
  if (diverged > 0) {
    std::cerr << "warning: " << diverged << " of " << rows.size()
              << " runs diverged and were excluded from the medians\n";
    return kExitDiverged;
  }
  return kExitOk;
}

// --- gen-dynsys ---------------------------------------------------------------

struct DynsysArgs {
  Common common;
  std::string kind = "vdp";
  std::size_t count = 10;
  DatasetOptions data;
};

void add_dataset_options(CLI::App* cmd, std::string& kind, std::size_t& count,
                         DatasetOptions& data) {
  cmd->add_option("--kind", kind, "vdp | harmonic | ou | duffing")
      ->check(CLI::IsMember({"vdp", "harmonic", "ou", "duffing"}));
  cmd->add_option("--count", count, "Number of trajectories")->check(CLI::PositiveNumber);
  cmd->add_option("--horizon", data.horizon, "Trajectory length in seconds")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--tau0", data.tau0, "Sampling interval")->check(CLI::PositiveNumber);
}

int run_gen_dynsys(const DynsysArgs& a) {
  Output out(a.common.out);
  const DynSysKind kind = parse_dynsys_kind(a.kind);
  const auto data = sample_dataset(kind, a.count, a.common.seed, a.data);
  CsvWriter w(out.csv());
  w.header({"sample_id", "kind", "param_json", "t", "x"});
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::string params = describe(data[i].spec);
    const auto& traj = data[i].trajectory;
    for (std::size_t k = 0; k < traj.size(); ++k) {
      w.field(i).field(to_string(kind)).field(params).field(traj.times[k]).field(traj.values[k]);
      w.end_row();
    }
  }
  out.finish();
  return kExitOk;
}

// --- metric -------------------------------------------------------------------

struct MetricArgs {
  Common common;
  std::string kind = "vdp";
  std::size_t count = 16;
  DatasetOptions data;
  std::vector<double> etas = {0, 0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 0.9, 1};
  int lags = 16;
  std::optional<int> gap;
  std::size_t far_pairs = 10'000;
};

int run_metric(const MetricArgs& a) {
  Output out(a.common.out);
  const auto dataset = sample_dataset(parse_dynsys_kind(a.kind), a.count, a.common.seed, a.data);
  const auto spec = make_embedding_spec(a.common.seed);
  MetricConfig cfg;
  cfg.max_lag = a.lags;
  cfg.gap = a.gap;
  cfg.far_pair_samples = a.far_pairs;
  cfg.threads = a.common.threads;

  std::vector<ContinuityProfile> profiles;
  for (double eta : a.etas) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidArgument("--etas values must lie in [0, 1]");
    std::vector<SequenceSample> seqs;
    seqs.reserve(dataset.size());
    for (const auto& d : dataset) seqs.push_back(embed_trajectory(d.trajectory, eta, spec));
    profiles.push_back(continuity_profile(seqs, cfg, a.common.seed, cfg.max_lag));
  }

  auto& os = out.csv();
  CsvWriter w(os);
  w.header({"eta", "lag", "mu"});
  for (std::size_t i = 0; i < a.etas.size(); ++i)
    for (int t = 1; t <= cfg.max_lag; ++t) {
      w.field(a.etas[i]).field(t).field(profiles[i].mu[t - 1]);
      w.end_row();
    }
  os << '\n';
  w.header({"eta", "mu_total"});
  std::vector<double> mu1;
  for (std::size_t i = 0; i < a.etas.size(); ++i) {
    double total = 0.0;
    for (int t = 1; t <= cfg.max_lag; ++t) total += cfg.weight(t) * profiles[i].mu[t - 1];
    w.field(a.etas[i]).field(total);
    w.end_row();
    mu1.push_back(profiles[i].mu[0]);
  }
  out.finish();

  if (a.etas.size() >= 2)
    out.notes() << "spearman(eta, mu_1) = " << format_double(spearman(a.etas, mu1)) << "\n";
  return kExitOk;
}

// --- stagewise ----------------------------------------------------------------

struct StagewiseArgs {
  Common common;
  std::vector<int> strides = {4, 2, 1};
  std::vector<int> epochs;
  double delta = 0.04;
  std::string strategy = "indexing";
  std::size_t count = 1000;
  DatasetOptions data;
  std::size_t states = 32;
  double lambda = 1e-3;
  bool record_wall_time = false;
};

int run_stagewise_cmd(const StagewiseArgs& a) {
  Output out(a.common.out);
  StageSchedule sched{a.strides, a.epochs, parse_strategy(a.strategy)};
  if (sched.epochs.empty()) sched.epochs.assign(sched.strides.size(), 1);
  if (sched.epochs.size() == 1 && sched.strides.size() > 1)
    sched.epochs.assign(sched.strides.size(), sched.epochs.front());
  sched.check();

  const auto dataset = frequency_recovery_task(a.count, a.common.seed, a.data);
  RidgeFeatureTrainer trainer(a.common.seed, a.states, a.lambda, a.common.threads);
  const auto reports = run_stagewise(dataset, sched, a.delta, trainer, a.common.seed);

  CsvWriter w(out.csv());
  w.header({"stage", "stride", "delta", "epochs", "cum_wall_time_s", "train_mse", "val_mse"});
  for (const auto& r : reports) {
    w.field(r.stage)
        .field(r.stride)
        .field(r.delta)
        .field(r.epochs)
        .field(a.record_wall_time ? r.cum_wall_time_s : std::nan(""))
        .field(r.train_mse)
        .field(r.val_mse);
    w.end_row();
  }
  out.finish();
  out.notes() << "final validation mse = " << format_double(reports.back().val_mse) << "\n";
  return kExitOk;
}

// --- bounds -------------------------------------------------------------------

struct BoundsArgs {
  Common common;
  bool s4 = false, s6 = false, general = false;
  double bnorm = 0, cnorm = 0, delta = 0, anorm = 0, lu = 0, mu = 0;
  double wdelta = 0, bdelta = 0;
  double lb = 0, lc = 0, ldelta = 0, mb = 0, mc = 0, mdelta = 0;
};

int run_bounds(BoundsArgs a) {
  if (!a.s4 && !a.s6 && !a.general) a.s4 = a.s6 = a.general = true;
  Output out(a.common.out);
  std::ostream& os = out.csv();
  if (a.s4)
    os << "s4," << format_double(bound_s4_from_norms(a.bnorm, a.cnorm, a.delta, a.anorm, a.lu))
              << "\n";
  if (a.s6)
    os << "s6,"
              << format_double(
                     bound_s6_from_norms(a.bnorm, a.cnorm, a.wdelta, a.bdelta, a.anorm, a.lu, a.mu))
              << "\n";
  if (a.general) {
    const BoundInputs in{a.lu, a.lb, a.lc, a.ldelta, a.mu, a.mb, a.mc, a.mdelta, a.anorm};
    os << "general," << format_double(bound_general(in)) << "\n";
  }
  out.finish();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuity laboratory for diagonal state-space models", "ssmlab"};
  app.require_subcommand(1);
  app.fallthrough(false);

  ConvergeArgs conv;
  auto* converge = app.add_subcommand("converge", "Error vs. step size for S4/S6 systems");
  add_seed(converge, conv.common);
  add_out(converge, conv.common);
  add_threads(converge, conv.common);
  add_config(converge);
  converge->add_option("--pairs", conv.pairs, "Number of random system/input pairs")
      ->check(CLI::PositiveNumber);
  converge->add_option("--taus", conv.taus, "Step sizes (comma separated)")->delimiter(',');
  converge->add_option("--scales", conv.scales, "Input scales (comma separated)")
      ->delimiter(',');
  converge->add_option("--states", conv.states, "State dimension")->check(CLI::PositiveNumber);
  converge->add_option("--summary-tau", conv.summary_tau, "Step size of the summary table");

  DynsysArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-dynsys", "Sample dynamical-system trajectories");
  add_seed(gen_cmd, gen.common);
  add_out(gen_cmd, gen.common);
  add_config(gen_cmd);
  add_dataset_options(gen_cmd, gen.kind, gen.count, gen.data);
  auto& ov = gen.data.overrides;
  gen_cmd->add_option("--mu", ov.mu, "Fix Van der Pol mu");
  gen_cmd->add_option("--omega", ov.omega, "Fix damped-harmonic omega");
  gen_cmd->add_option("--zeta", ov.zeta, "Fix damped-harmonic zeta");
  gen_cmd->add_option("--theta", ov.theta, "Fix OU theta");
  gen_cmd->add_option("--sigma", ov.sigma, "Fix OU sigma");
  gen_cmd->add_option("--gamma", ov.gamma, "Fix Duffing forcing amplitude");
  gen_cmd->add_option("--x0", ov.x0, "Fix initial position");
  gen_cmd->add_option("--v0", ov.v0, "Fix initial velocity");

  MetricArgs met;
  auto* metric = app.add_subcommand("metric", "Continuity score of embedded trajectories");
  add_seed(metric, met.common);
  add_out(metric, met.common);
  add_threads(metric, met.common);
  add_config(metric);
  add_dataset_options(metric, met.kind, met.count, met.data);
  metric->add_option("--etas", met.etas, "Embedding mixing values (comma separated)")
      ->delimiter(',');
  metric->add_option("--lags", met.lags, "Largest lag T")->check(CLI::PositiveNumber);
  metric->add_option("--gap", met.gap, "Far-pair gap (default max(4T, L/4))");
  metric->add_option("--far-pairs", met.far_pairs, "Far pairs sampled per sequence")
      ->check(CLI::PositiveNumber);

  StagewiseArgs stg;
  auto* stagewise = app.add_subcommand("stagewise", "Coarse-to-fine training on subsampled data");
  add_seed(stagewise, stg.common);
  add_out(stagewise, stg.common);
  add_threads(stagewise, stg.common);
  add_config(stagewise);
  stagewise->add_option("--strides", stg.strides, "Decreasing strides ending at 1")
      ->delimiter(',');
  stagewise->add_option("--epochs", stg.epochs, "Epochs per stage (one value or one per stage)")
      ->delimiter(',');
  stagewise->add_option("--delta", stg.delta, "Step size of the first stage")
      ->check(CLI::PositiveNumber);
  stagewise->add_option("--strategy", stg.strategy, "indexing | pooling")
      ->check(CLI::IsMember({"indexing", "pooling"}));
  stagewise->add_option("--count", stg.count, "Number of trajectories")
      ->check(CLI::PositiveNumber);
  stagewise->add_option("--horizon", stg.data.horizon, "Trajectory length in seconds")
      ->check(CLI::PositiveNumber);
  stagewise->add_option("--tau0", stg.data.tau0, "Sampling interval")->check(CLI::PositiveNumber);
  stagewise->add_option("--states", stg.states, "Feature-map state dimension")
      ->check(CLI::PositiveNumber);
  stagewise->add_option("--lambda", stg.lambda, "Ridge regularizer")->check(CLI::PositiveNumber);
  stagewise->add_flag("--record-wall-time", stg.record_wall_time,
                      "Fill cum_wall_time_s (otherwise nan, keeping output reproducible)");

  BoundsArgs bnd;
  auto* bounds = app.add_subcommand("bounds", "Evaluate the first-order error bounds");
  add_config(bounds);
  bounds->add_flag("--s4", bnd.s4, "S4 bound from ‖B‖, ‖C‖, Δ, ‖A‖, L_u");
  bounds->add_flag("--s6", bnd.s6, "S6 bound from ‖W_B‖, ‖W_C‖, w_Δ, b_Δ, ‖A‖, L_u, M_u");
  bounds->add_flag("--general", bnd.general, "General bound from all Lipschitz/modulus constants");
  add_out(bounds, bnd.common);
  bounds->add_option("--bnorm", bnd.bnorm, "‖B‖ (or ‖W_B‖)");
  bounds->add_option("--cnorm", bnd.cnorm, "‖C‖ (or ‖W_C‖)");
  bounds->add_option("--delta", bnd.delta, "Constant step Δ");
  bounds->add_option("--anorm", bnd.anorm, "‖A‖");
  bounds->add_option("--lu", bnd.lu, "L_u");
  bounds->add_option("--mu", bnd.mu, "M_u");
  bounds->add_option("--wdelta", bnd.wdelta, "w_Δ");
  bounds->add_option("--bdelta", bnd.bdelta, "b_Δ");
  bounds->add_option("--lb", bnd.lb, "L_B");
  bounds->add_option("--lc", bnd.lc, "L_C");
  bounds->add_option("--ldelta", bnd.ldelta, "L_Δ");
  bounds->add_option("--mb", bnd.mb, "M_B");
  bounds->add_option("--mc", bnd.mc, "M_C");
  bounds->add_option("--mdelta", bnd.mdelta, "M_Δ");

  try {
    auto args = expand_config(argc, argv);
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    if (app.get_subcommands().empty()) std::cerr << app.help();
    return kExitError;
  }

  try {
    if (converge->parsed()) return run_converge(conv);
    if (gen_cmd->parsed()) return run_gen_dynsys(gen);
    if (metric->parsed()) return run_metric(met);
    if (stagewise->parsed()) return run_stagewise_cmd(stg);
    if (bounds->parsed()) return run_bounds(bnd);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
