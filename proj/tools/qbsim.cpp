// qbsim: command-line driver for the qbmon harness.
//
//   qbsim run      --config run.json     [--seed S] [--n-traj N] [--out-dir D] [--threads T]
//   qbsim sweep    --config sweep.json   ...
//   qbsim scaling  --config scaling.json ...
//   qbsim figure   <id>                  ...
//   qbsim validate --config any.json
//
// Output directory precedence: --out-dir, then $QBMON_OUT_DIR, then the config.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qbmon/harness.hpp"

namespace {

using namespace qbmon;
using namespace qbmon::harness;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_traj;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> threads;
  bool quiet = false;
};

void add_common(CLI::App* app, Common& c, bool needs_config) {
  if (needs_config) {
    app->add_option("--config,-c", c.config, "JSON configuration file")->required()->check(CLI::ExistingFile);
  }
  app->add_option("--seed", c.seed, "master seed (overrides the config)");
  app->add_option("--n-traj", c.n_traj, "trajectories per ensemble (overrides the config)");
  app->add_option("--out-dir", c.out_dir, "output directory (overrides $QBMON_OUT_DIR and the config)");
  app->add_option("--threads", c.threads, "worker threads, 0 = all cores");
  app->add_flag("--quiet,-q", c.quiet, "no progress output");
}

void apply(const Common& c, ExperimentConfig& cfg) {
  if (c.seed) cfg.master_seed = *c.seed;
  if (c.n_traj) cfg.n_traj = *c.n_traj;
  if (c.threads) cfg.threads = *c.threads;
  cfg.output.dir = resolve_output_dir(c.out_dir, cfg.output.dir).string();
}

void report(const WrittenFiles& w, const std::vector<std::string>& warnings) {
  for (const auto& msg : warnings) std::cerr << "warning: " << msg << '\n';
  for (const auto& p : w.paths) std::cout << p.string() << '\n';
}

enum class Kind { kExperiment, kSweep, kScaling };

Kind detect(const Json& j) {
  if (j.is_object() && j.contains("sweep")) return Kind::kSweep;
  if (j.is_object() && j.contains("scaling")) return Kind::kScaling;
  return Kind::kExperiment;
}

int cmd_run(const Common& c) {
  ExperimentConfig cfg = parse_experiment(load_json_file(c.config));
  apply(c, cfg);
  cfg.validate();
  if (!c.quiet) std::cerr << "running " << cfg.output.stem << '\n';
  const auto r = run_experiment(cfg);
  report(write_experiment(r, cfg.output.dir), r.warnings);
  return 0;
}

int cmd_sweep(const Common& c) {
  SweepSpec s = parse_sweep(load_json_file(c.config));
  apply(c, s.base);
  s.validate();
  SweepOptions so;
  if (!c.quiet) {
    so.progress = [](std::size_t done, std::size_t total) {
      std::cerr << "cell " << done << "/" << total << '\n';
    };
  }
  const auto r = run_sweep(s, so);
  report(write_sweep(r, s.base.output.dir, s.base.output.stem), r.warnings);
  return 0;
}

int cmd_scaling(const Common& c) {
  ScalingSpec s = parse_scaling(load_json_file(c.config));
  apply(c, s.base);
  s.validate();
  const auto r = run_scaling_study(s);
  report(write_scaling(r, s.base.output.dir, s.base.output.stem), r.warnings);
  for (const auto& f : r.fits) {
    std::cerr << f.quantity << ": exponent " << format_number(f.exponent) << " +- "
              << format_number(f.exponent_se) << '\n';
  }
  return 0;
}

int cmd_figure(const Common& c, const std::string& id, std::optional<std::size_t> n_samples) {
  FigureOptions o;
  o.n_traj = c.n_traj;
  o.seed = c.seed;
  o.threads = c.threads;
  o.n_samples = n_samples;
  o.out_dir = resolve_output_dir(c.out_dir, "results");
  if (!c.quiet) o.log = [](const std::string& m) { std::cerr << m << '\n'; };
  const auto out = reproduce_figure(id, o);
  report({out.files}, out.warnings);
  return 0;
}

int cmd_validate(const Common& c) {
  const Json j = load_json_file(c.config);
  Json resolved;
  switch (detect(j)) {
    case Kind::kSweep: {
      SweepSpec s = parse_sweep(j);
      apply(c, s.base);
      s.validate();
      SweepResult shape;
      shape.spec = s;
      resolved = shape.metadata(s.base.output.stem);
      resolved.erase("created");
      resolved.erase("wall_clock_seconds");
      resolved.erase("warnings");
      break;
    }
    case Kind::kScaling: {
      ScalingSpec s = parse_scaling(j);
      apply(c, s.base);
      s.validate();
      resolved = Json{{"kind", "scaling"}, {"config", to_json(s.base)}, {"scaling", {{"n_values", s.n_values}}}};
      break;
    }
    case Kind::kExperiment: {
      ExperimentConfig cfg = parse_experiment(j);
      apply(c, cfg);
      cfg.validate();
      const auto model = build_model(cfg.model);
      cfg.dt = resolved_dt(cfg, model);
      resolved = Json{{"kind", "experiment"}, {"config", to_json(cfg)}, {"model", model.label},
                      {"hilbert_dimension", model.layout.total_dim()}};
      break;
    }
  }
  std::cout << resolved.dump(2) << '\n';
  std::cerr << "config OK\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qbmon: open quantum battery simulator with continuous monitoring"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("qbsim ") + QBMON_VERSION);

  Common common;
  auto* run = app.add_subcommand("run", "single experiment: Lindblad run, closed baseline, optional ensemble");
  auto* sweep = app.add_subcommand("sweep", "two-axis parameter sweep");
  auto* scaling = app.add_subcommand("scaling", "peak values against the number of emitters");
  auto* figure = app.add_subcommand("figure", "reproduce a figure preset");
  auto* validate = app.add_subcommand("validate", "check a config and print it resolved");
  for (auto* sub : {run, sweep, scaling, validate}) add_common(sub, common, true);
  add_common(figure, common, false);

  std::string figure_id;
  std::optional<std::size_t> n_samples;
  figure->add_option("id", figure_id, "figure id")->required()->check(CLI::IsMember(figure_ids()));
  figure->add_option("--n-samples", n_samples, "override the preset's time-grid size");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(common);
    if (*sweep) return cmd_sweep(common);
    if (*scaling) return cmd_scaling(common);
    if (*figure) return cmd_figure(common, figure_id, n_samples);
    if (*validate) return cmd_validate(common);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
