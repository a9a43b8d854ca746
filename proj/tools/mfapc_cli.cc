// mfapc: run, analyze and sweep closed-loop experiments.
//
// Exit codes: 0 success, 1 config error, 2 divergence or solver error, 3 I/O error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mfapc/analysis.h"
#include "mfapc/config.h"
#include "mfapc/harness.h"

namespace fs = std::filesystem;
using namespace mfapc;

namespace {

constexpr int kOk = 0;
constexpr int kConfig = 1;
constexpr int kRuntime = 2;
constexpr int kIo = 3;

fs::path DefaultOut() {
  const char* env = std::getenv("MFAPC_OUT_DIR");
  return env != nullptr && *env != '\0' ? fs::path(env) : fs::path("out");
}

void MakeDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

std::string Fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

int Run(const std::string& config, const fs::path& out) {
  const ExperimentConfig cfg = resolve_config(config);
  const ReferenceDef ref = make_reference(cfg.reference, cfg.controller.dims.outputs);
  MakeDir(out);
  int code = kOk;
  SimTrace trace;
  TraceSummary summary;
  try {
    trace = run_experiment(cfg);
    summary = summarize_trace(trace, ref);
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    trace = e.partial();
    summary = summarize_trace(trace, ref);
    summary.diverged = true;
    summary.diverged_at = e.step();
    code = kRuntime;
  }
  export_csv(trace, out / "trace.csv");
  WriteText(out / "summary.txt", "name " + cfg.name + "\nsteps " +
                                     std::to_string(trace.rows.size()) + '\n' +
                                     format_summary(summary));
  std::cout << "wrote " << (out / "trace.csv").string() << " and "
            << (out / "summary.txt").string() << '\n';
  std::cout << format_summary(summary);
  return code;
}

Pjm AnalysisPjm(const ExperimentConfig& cfg, std::string* origin) {
  const Dims& d = cfg.controller.dims;
  switch (cfg.pjm.kind) {
    case PjmSourceKind::kFrozen:
      if (cfg.pjm.matrix) {
        *origin = "frozen matrix";
        return Pjm::FromStacked(d, *cfg.pjm.matrix);
      }
      [[fallthrough]];
    case PjmSourceKind::kEstimated:
      *origin = "initial estimate";
      if (cfg.pjm.init.size() == 1) return Pjm::Constant(d, cfg.pjm.init(0, 0));
      return Pjm::FromStacked(d, cfg.pjm.init);
    case PjmSourceKind::kAnalytic:
      break;
  }
  *origin = "analytic PJM at the initial samples";
  PlantDef plant(make_plant_model(cfg.plant), 1);
  std::vector<VectorXd> ys = cfg.plant.y_init;
  std::vector<VectorXd> us = cfg.plant.u_init;
  if (ys.empty()) {
    for (int t = 1; t <= cfg.run.start_k; ++t) ys.push_back(VectorXd::Constant(d.outputs, t == 2 ? 1.0 : 0.0));
    for (int t = 1; t < cfg.run.start_k; ++t) us.push_back(VectorXd::Zero(d.inputs));
  }
  plant.seed(ys, us);
  return analytic_pjm(plant, plant.history()).WithOrders(d.output_order, d.input_order);
}

int Analyze(const std::string& config) {
  const ExperimentConfig cfg = resolve_config(config);
  ControllerConfig ccfg = cfg.controller;
  if (cfg.law == ControlLaw::kMfac) {
    ccfg.horizon = 1;
    ccfg.control_horizon = 1;
  }
  std::string origin;
  const Pjm pjm = AnalysisPjm(cfg, &origin);
  const ClosedLoop loop = closed_loop_T(pjm, ccfg);
  const PoleReport pr = poles(loop);

  std::cout << "config " << cfg.name << " (" << origin << ")\n";
  std::cout << "poles " << pr.roots.size() << '\n';
  for (const auto& r : pr.roots) {
    std::cout << "  " << Fmt(r.real()) << (r.imag() < 0 ? " - " : " + ") << Fmt(std::abs(r.imag()))
              << "i  |z| = " << Fmt(std::abs(r)) << '\n';
  }
  if (!pr.stable()) {
    std::cout << "UNSTABLE, max|pole|=" << Fmt(pr.max_modulus) << '\n';
    return kOk;
  }
  std::cout << "STABLE, max|pole|=" << Fmt(pr.max_modulus) << '\n';
  for (const auto kind : {ReferenceKind::kStep, ReferenceKind::kRamp}) {
    const SteadyStateError e = steady_state_error(pjm, ccfg, kind);
    std::cout << (kind == ReferenceKind::kStep ? "step" : "ramp") << " steady-state error";
    if (e.diverges) {
      std::cout << " diverges\n";
      continue;
    }
    for (Eigen::Index i = 0; i < e.value.size(); ++i) std::cout << ' ' << Fmt(e.value(i));
    if (!e.warning.empty()) std::cout << "  (warning: " << e.warning << ')';
    std::cout << '\n';
  }
  return kOk;
}

int Sweep(const std::string& config, const std::string& param, const std::string& values,
          const fs::path& out) {
  if (param != "lambda") throw ConfigError("only --param lambda is supported");
  const ExperimentConfig cfg = resolve_config(config);
  const MatrixXd v = parse_matrix(values);
  std::vector<double> grid(v.data(), v.data() + v.size());
  const auto results = sweep_lambda(cfg, grid);
  MakeDir(out);
  for (const auto& r : results) {
    if (r.status == "error") continue;
    char name[64];
    std::snprintf(name, sizeof name, "trace_lambda_%g.csv", r.value);
    export_csv(r.trace, out / name);
  }
  const std::string table = format_sweep_table(results);
  WriteText(out / "sweep.txt", table);
  std::cout << table;
  return kOk;
}

int Examples(const std::string& write_dir) {
  for (const auto& name : builtin_names()) {
    const ExperimentConfig c = builtin_config(name);
    std::cout << name << '\n';
    if (!write_dir.empty()) {
      MakeDir(write_dir);
      WriteText(fs::path(write_dir) / (name + ".cfg"), format_config(c));
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-free adaptive predictive control experiments"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  std::string param = "lambda";
  std::string values;
  std::string write_dir;

  auto* run = app.add_subcommand("run", "Run one experiment, write trace.csv and summary.txt");
  run->add_option("--config", config, "Config file or built-in name")->required();
  run->add_option("--out", out_dir, "Output directory (default $MFAPC_OUT_DIR or ./out)");

  auto* analyze = app.add_subcommand("analyze", "Closed-loop poles and steady-state error");
  analyze->add_option("--config", config, "Config file or built-in name")->required();

  auto* sweep = app.add_subcommand("sweep", "Run one experiment per parameter value");
  sweep->add_option("--config", config, "Config file or built-in name")->required();
  sweep->add_option("--param", param, "Parameter to vary")->default_val("lambda");
  sweep->add_option("--values", values, "Comma-separated values")->required();
  sweep->add_option("--out", out_dir, "Output directory (default $MFAPC_OUT_DIR or ./out)");

  auto* examples = app.add_subcommand("examples", "List built-in configs");
  examples->add_option("--write", write_dir, "Also write each config into this directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  const fs::path out = out_dir.empty() ? DefaultOut() : fs::path(out_dir);
  try {
    if (*run) return Run(config, out);
    if (*analyze) return Analyze(config);
    if (*sweep) return Sweep(config, param, values, out);
    return Examples(write_dir);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const StructuralError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
}
