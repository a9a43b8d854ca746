#include "mfapc/harness.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <limits>
#include <random>
#include <sstream>

#include "mfapc/analysis.h"
#include "mfapc/controller.h"
#include "mfapc/predictor.h"

namespace mfapc {
namespace {

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// y(t) = 0 except y(2) = 1, u(t) = 0: the seeds all the benchmark runs share.
void DefaultSeeds(int start_k, int outputs, int inputs, std::vector<VectorXd>* ys,
                  std::vector<VectorXd>* us) {
  for (int t = 1; t <= start_k; ++t) {
    ys->push_back(VectorXd::Constant(outputs, t == 2 ? 1.0 : 0.0));
  }
  for (int t = 1; t < start_k; ++t) us->push_back(VectorXd::Zero(inputs));
}

bool Finite(const VectorXd& v) { return v.allFinite(); }

Pjm InitialEstimate(const PjmSource& src, const Dims& dims) {
  if (src.init.rows() == 1 && src.init.cols() == 1) return Pjm::Constant(dims, src.init(0, 0));
  return Pjm::FromStacked(dims, src.init);
}

VectorXd FlattenRowMajor(const MatrixXd& m) {
  VectorXd out(m.size());
  Eigen::Index i = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out(i++) = m(r, c);
  }
  return out;
}

VectorXd Preview(const ReferenceDef& ref, int k, int horizon, PreviewMode mode) {
  if (mode == PreviewMode::kPreview) return reference_preview(ref, k, horizon);
  return stack_outputs(reference(ref, k + 1), horizon);
}

}  // namespace

std::shared_ptr<const PlantModel> make_plant_model(const PlantSpec& spec) {
  if (spec.kind == "ex11") return make_ex11_model();
  if (spec.kind == "ex12") return make_ex12_model();
  if (spec.kind == "ex2") return make_ex2_model();
  if (spec.kind == "linear") {
    if (spec.a.empty() || spec.b.empty()) {
      throw ConfigError("linear plant needs at least one a and one b matrix");
    }
    return std::make_shared<LinearPlantModel>("linear", spec.a, spec.b);
  }
  if (spec.kind == "random") {
    if (spec.outputs < 1 || spec.inputs < 1) throw ConfigError("random plant needs outputs, inputs >= 1");
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const auto draw = [&](int r, int c) {
      MatrixXd m(r, c);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
      return m;
    };
    MatrixXd a0 = draw(spec.outputs, spec.outputs);
    const double radius = a0.eigenvalues().cwiseAbs().maxCoeff();
    if (radius > 0.0) a0 *= 0.5 / radius;
    return std::make_shared<LinearPlantModel>(
        "random", std::vector<MatrixXd>{a0},
        std::vector<MatrixXd>{draw(spec.outputs, spec.inputs), draw(spec.outputs, spec.inputs)});
  }
  throw ConfigError("unknown plant kind '" + spec.kind + "'");
}

ReferenceDef make_reference(const ReferenceSpec& spec, int outputs) {
  if (spec.kind == "square") {
    if (!(spec.period > 0.0)) throw ConfigError("reference period must be > 0");
    return ReferenceDef{SquareWaveReference{spec.amplitude, spec.period, outputs}};
  }
  if (spec.kind == "mixed_ex2") {
    if (outputs != 2) throw ConfigError("mixed_ex2 reference has two outputs");
    return ReferenceDef{MixedEx2Reference{}};
  }
  if (spec.kind == "table") {
    if (spec.table.entries.empty()) throw ConfigError("reference table is empty");
    for (const auto& [k, v] : spec.table.entries) {
      if (v.size() != outputs) {
        throw ConfigError("reference table row at k=" + std::to_string(k) + " has " +
                          std::to_string(v.size()) + " values, expected " +
                          std::to_string(outputs));
      }
    }
    return ReferenceDef{spec.table};
  }
  throw ConfigError("unknown reference kind '" + spec.kind + "'");
}

void ExperimentConfig::validate() const {
  if (run.steps < 1) throw ConfigError("run.steps must be >= 1");
  if (run.start_k < 1) throw ConfigError("run.start_k must be >= 1");
  if (!(run.divergence_bound > 0.0)) throw ConfigError("run.divergence_bound must be > 0");
  controller.validate();
  const auto model = make_plant_model(plant);
  const Dims& d = controller.dims;
  if (d.outputs != model->outputs() || d.inputs != model->inputs()) {
    throw ConfigError("controller dimensions " + std::to_string(d.outputs) + "x" +
                      std::to_string(d.inputs) + " do not match plant " + model->name());
  }
  make_reference(reference, d.outputs);

  if (!plant.y_init.empty() || !plant.u_init.empty()) {
    if (static_cast<int>(plant.y_init.size()) != run.start_k ||
        static_cast<int>(plant.u_init.size()) != run.start_k - 1) {
      throw ConfigError("initial values must cover y(1..start_k) and u(1..start_k-1)");
    }
    for (const auto& y : plant.y_init) {
      if (y.size() != d.outputs) throw ConfigError("initial output has the wrong size");
    }
    for (const auto& u : plant.u_init) {
      if (u.size() != d.inputs) throw ConfigError("initial input has the wrong size");
    }
  }
  if (plant.disturbance && plant.disturbance->size() != d.outputs) {
    throw ConfigError("disturbance has the wrong size");
  }

  if (law == ControlLaw::kMfac) {
    if (!std::holds_alternative<StandardVariant>(controller.variant)) {
      throw ConfigError("the MFAC law has no " + variant_name(controller.variant) + " variant");
    }
    if (controller.lambda.size() != 1) throw ConfigError("the MFAC law takes a scalar lambda");
  }

  const int width = d.regressor_size();
  const auto check_matrix = [&](const MatrixXd& m, const std::string& what) {
    const bool scalar = m.rows() == 1 && m.cols() == 1;
    if (!scalar && (m.rows() != d.outputs || m.cols() != width)) {
      throw ConfigError(what + " must be 1x1 or " + std::to_string(d.outputs) + "x" +
                        std::to_string(width));
    }
  };
  switch (pjm.kind) {
    case PjmSourceKind::kAnalytic:
      if (!model->has_jacobian()) throw ConfigError("plant " + model->name() + " has no Jacobian");
      if (model->output_lags() > d.output_order || model->input_lags() > d.input_order) {
        throw ConfigError("analytic PJM needs ly >= " + std::to_string(model->output_lags()) +
                          " and lu >= " + std::to_string(model->input_lags()));
      }
      break;
    case PjmSourceKind::kEstimated:
      check_matrix(pjm.init, "estimator.init");
      EstimatorState(InitialEstimate(pjm, d), pjm.eta, pjm.mu);
      break;
    case PjmSourceKind::kFrozen:
      if (pjm.matrix.has_value() == pjm.freeze_at.has_value()) {
        throw ConfigError("frozen source needs exactly one of matrix or freeze_at");
      }
      if (pjm.matrix) {
        if (pjm.matrix->rows() != d.outputs || pjm.matrix->cols() != width) {
          throw ConfigError("estimator.matrix must be " + std::to_string(d.outputs) + "x" +
                            std::to_string(width));
        }
      } else {
        check_matrix(pjm.init, "estimator.init");
        EstimatorState(InitialEstimate(pjm, d), pjm.eta, pjm.mu);
      }
      break;
  }
}

SimTrace run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto model = make_plant_model(cfg.plant);
  const Dims dims = cfg.controller.dims;
  const ReferenceDef ref = make_reference(cfg.reference, dims.outputs);
  const int ly = dims.output_order;
  const int lu = dims.input_order;

  ControllerConfig ccfg = cfg.controller;
  if (cfg.law == ControlLaw::kMfac) {
    ccfg.horizon = 1;
    ccfg.control_horizon = 1;
  }

  PlantDef plant(model, 1);
  std::vector<VectorXd> ys = cfg.plant.y_init;
  std::vector<VectorXd> us = cfg.plant.u_init;
  if (ys.empty()) DefaultSeeds(cfg.run.start_k, dims.outputs, dims.inputs, &ys, &us);
  plant.seed(ys, us);
  if (cfg.plant.disturbance) plant.set_disturbance(*cfg.plant.disturbance, cfg.plant.disturbance_start);

  std::optional<EstimatorState> est;
  std::optional<Pjm> fixed;
  const PjmSource& src = cfg.pjm;
  if (src.kind == PjmSourceKind::kEstimated || (src.kind == PjmSourceKind::kFrozen && src.freeze_at)) {
    est.emplace(InitialEstimate(src, dims), src.eta, src.mu);
  }
  if (src.kind == PjmSourceKind::kFrozen && src.matrix) fixed = Pjm::FromStacked(dims, *src.matrix);

  const auto analytic = [&](const HistoryWindow& h, int t) {
    return model->derivative(h, t - 1).WithOrders(ly, lu);
  };

  SimTrace trace;
  trace.name = cfg.name;
  trace.outputs = dims.outputs;
  trace.inputs = dims.inputs;
  trace.rows.reserve(static_cast<std::size_t>(cfg.run.steps));

  for (int step = 0; step < cfg.run.steps; ++step) {
    const int k = cfg.run.start_k + step;
    const HistoryWindow& hist = plant.history();

    if (est && k > cfg.run.start_k && !(src.freeze_at && k > *src.freeze_at)) {
      *est = projection_update(*est, hist.y(k), hist.y(k - 1), hist.delta_h(k - 1, ly, lu),
                               src.solve);
      *est = maybe_reset(*est, src.reset);
    }
    const Pjm pjm = fixed ? *fixed : est ? est->phi_hat : analytic(hist, k);

    ControlDecision dec;
    try {
      if (cfg.law == ControlLaw::kMfac) {
        dec = mfac_control(pjm, hist, reference(ref, k + 1), ccfg.lambda(0), ccfg.singular);
      } else {
        const VectorXd y_star = Preview(ref, k, ccfg.horizon, ccfg.preview);
        if (std::holds_alternative<PiVariant>(ccfg.variant)) {
          const auto ops = build_prediction_operators(pjm, ccfg.horizon, ccfg.control_horizon);
          const VectorXd y_star_prev = Preview(ref, k - 1, ccfg.horizon, ccfg.preview);
          dec = mfapc_control_pi(ops, hist, y_star, y_star_prev, ccfg);
        } else if (std::holds_alternative<IterativeVariant>(ccfg.variant)) {
          JacobianProvider jac = [&](const HistoryWindow& h, int t) {
            return src.kind == PjmSourceKind::kAnalytic ? analytic(h, t) : pjm;
          };
          dec = mfapc_control_iterative(jac, hist, y_star, ccfg);
        } else {
          const auto ops = build_prediction_operators(pjm, ccfg.horizon, ccfg.control_horizon);
          dec = mfapc_control(ops, hist, y_star, ccfg);
        }
      }
    } catch (const SolverError& e) {
      throw SolverError(std::string(e.what()) + " at k=" + std::to_string(k), e.condition());
    }

    TraceRow row;
    row.k = k;
    row.y = hist.y(k);
    row.u = dec.u_k;
    row.y_star = reference(ref, k);
    row.e = row.y_star - row.y;
    row.cost = dec.cost;
    row.phi = FlattenRowMajor(pjm.stacked());
    if (cfg.run.analysis) {
      try {
        row.max_pole = poles(closed_loop_T(pjm, ccfg)).max_modulus;
      } catch (const Error&) {
        row.max_pole = std::numeric_limits<double>::quiet_NaN();
      }
    }
    trace.rows.push_back(std::move(row));

    if (!Finite(dec.u_k)) {
      throw DivergenceError("non-finite input at k=" + std::to_string(k), k, std::move(trace));
    }
    const VectorXd y_next = plant_step(plant, dec.u_k);
    if (!Finite(y_next) || y_next.cwiseAbs().maxCoeff() > cfg.run.divergence_bound) {
      throw DivergenceError("output left the bound at k=" + std::to_string(k + 1), k + 1,
                            std::move(trace));
    }
  }
  return trace;
}

Pjm final_pjm(const SimTrace& trace, const Dims& dims) {
  if (trace.rows.empty()) throw PreconditionError("trace is empty");
  const VectorXd& phi = trace.rows.back().phi;
  const int width = dims.regressor_size();
  if (phi.size() != static_cast<Eigen::Index>(dims.outputs) * width) {
    throw StructuralError("trace PJM entries do not match the dimensions");
  }
  MatrixXd m(dims.outputs, width);
  for (int r = 0; r < dims.outputs; ++r) {
    for (int c = 0; c < width; ++c) m(r, c) = phi(static_cast<Eigen::Index>(r) * width + c);
  }
  return Pjm::FromStacked(dims, m);
}

std::string format_csv(const SimTrace& trace) {
  std::ostringstream out;
  const auto phi_count = trace.rows.empty() ? 0 : trace.rows.front().phi.size();
  out << "k";
  for (int i = 1; i <= trace.outputs; ++i) out << ",y_" << i;
  for (int i = 1; i <= trace.inputs; ++i) out << ",u_" << i;
  for (int i = 1; i <= trace.outputs; ++i) out << ",ystar_" << i;
  for (int i = 1; i <= trace.outputs; ++i) out << ",e_" << i;
  out << ",J";
  for (Eigen::Index i = 1; i <= phi_count; ++i) out << ",phi_" << i;
  out << ",max_pole\n";

  const auto put = [&out](const VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) out << ',' << Num(v(i));
  };
  for (const auto& r : trace.rows) {
    out << r.k;
    put(r.y);
    put(r.u);
    put(r.y_star);
    put(r.e);
    out << ',' << Num(r.cost);
    put(r.phi);
    out << ',';
    if (r.max_pole) out << Num(*r.max_pole);
    out << '\n';
  }
  return out.str();
}

void export_csv(const SimTrace& trace, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << format_csv(trace);
  f.close();
  if (!f) throw IoError("failed writing " + path.string());
}

SimTrace parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("CSV has no header");

  std::vector<std::string> header;
  {
    std::istringstream h(line);
    std::string cell;
    while (std::getline(h, cell, ',')) header.push_back(cell);
  }
  const auto count = [&header](const std::string& prefix) {
    return static_cast<int>(std::count_if(header.begin(), header.end(), [&](const std::string& s) {
      return s.rfind(prefix, 0) == 0;
    }));
  };
  SimTrace trace;
  trace.outputs = count("y_");
  trace.inputs = count("u_");
  const int phi_count = count("phi_");
  const std::size_t expected = 1 + 3 * static_cast<std::size_t>(trace.outputs) +
                               static_cast<std::size_t>(trace.inputs) + 1 +
                               static_cast<std::size_t>(phi_count) + 1;
  if (header.size() != expected || header.front() != "k" || header.back() != "max_pole") {
    throw ConfigError("unexpected CSV header");
  }

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
      const std::size_t next = line.find(',', pos);
      cells.push_back(line.substr(pos, next - pos));
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    if (cells.size() != expected) {
      throw ConfigError("CSV line " + std::to_string(line_no) + " has " +
                        std::to_string(cells.size()) + " cells");
    }
    std::size_t c = 0;
    const auto number = [&]() {
      const std::string& s = cells[c++];
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      if (s.empty() || *end != '\0') {
        throw ConfigError("CSV line " + std::to_string(line_no) + ": bad number '" + s + "'");
      }
      return v;
    };
    const auto vec = [&](int n) {
      VectorXd v(n);
      for (int i = 0; i < n; ++i) v(i) = number();
      return v;
    };
    TraceRow r;
    r.k = static_cast<int>(number());
    r.y = vec(trace.outputs);
    r.u = vec(trace.inputs);
    r.y_star = vec(trace.outputs);
    r.e = vec(trace.outputs);
    r.cost = number();
    r.phi = vec(phi_count);
    if (!cells[c].empty()) r.max_pole = number();
    trace.rows.push_back(std::move(r));
  }
  return trace;
}

TraceSummary summarize_trace(const SimTrace& trace, const ReferenceDef& reference) {
  TraceSummary s;
  if (trace.rows.empty()) return s;
  const int first = trace.rows.front().k;
  const int last = trace.rows.back().k;
  const auto row_at = [&](int k) -> const TraceRow& {
    return trace.rows[static_cast<std::size_t>(k - first)];
  };

  double total = 0.0;
  for (const auto& r : trace.rows) total += r.e.squaredNorm();
  s.rms = std::sqrt(total / (static_cast<double>(trace.rows.size()) * trace.outputs));

  for (const auto& [a, b] : reference_segments(reference, first, last)) {
    SegmentStats seg;
    seg.first = a;
    seg.last = b;
    double sq = 0.0;
    for (int k = a; k <= b; ++k) sq += row_at(k).e.squaredNorm();
    seg.rms = std::sqrt(sq / (static_cast<double>(b - a + 1) * trace.outputs));
    const int from = std::max(a, b - 9);
    double steady = 0.0;
    for (int k = from; k <= b; ++k) steady += row_at(k).e.lpNorm<Eigen::Infinity>();
    seg.steady = steady / (b - from + 1);
    s.segments.push_back(seg);
  }
  s.final_steady = s.segments.back().steady;

  for (const auto& r : trace.rows) {
    if (r.max_pole && !std::isnan(*r.max_pole)) {
      s.max_pole = std::max(s.max_pole.value_or(0.0), *r.max_pole);
    }
  }
  return s;
}

std::string format_summary(const TraceSummary& s) {
  std::ostringstream out;
  out << "rms_error " << Num(s.rms) << '\n';
  out << "final_steady_error " << Num(s.final_steady) << '\n';
  out << "diverged " << (s.diverged ? "yes" : "no");
  if (s.diverged_at) out << " at k=" << *s.diverged_at;
  out << '\n';
  out << "max_pole " << (s.max_pole ? Num(*s.max_pole) : "n/a") << '\n';
  out << "segments " << s.segments.size() << '\n';
  for (const auto& seg : s.segments) {
    out << "  k=" << seg.first << ".." << seg.last << " rms " << Num(seg.rms) << " steady "
        << Num(seg.steady) << '\n';
  }
  return out.str();
}

std::vector<SweepResult> sweep_lambda(const ExperimentConfig& base,
                                      const std::vector<double>& values) {
  base.validate();
  std::vector<std::future<SweepResult>> jobs;
  for (double v : values) {
    jobs.push_back(std::async(std::launch::async, [base, v]() {
      SweepResult r;
      r.value = v;
      ExperimentConfig cfg = base;
      cfg.controller = with_scalar_lambda(cfg.controller, v);
      cfg.name = base.name + "_lambda_" + Num(v);
      const ReferenceDef ref = make_reference(cfg.reference, cfg.controller.dims.outputs);
      try {
        r.trace = run_experiment(cfg);
        r.status = "ok";
      } catch (const DivergenceError& e) {
        r.trace = e.partial();
        r.status = "diverged";
        r.detail = e.what();
        r.summary.diverged_at = e.step();
      } catch (const Error& e) {
        r.status = "error";
        r.detail = e.what();
        return r;
      }
      const auto at = r.summary.diverged_at;
      r.summary = summarize_trace(r.trace, ref);
      r.summary.diverged = r.status == "diverged";
      r.summary.diverged_at = at;
      return r;
    }));
  }
  std::vector<SweepResult> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

std::string format_sweep_table(const std::vector<SweepResult>& results) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-12s %-9s %14s %14s %10s\n", "lambda", "status", "rms_error",
                "steady_error", "max_pole");
  out << buf;
  for (const auto& r : results) {
    const std::string pole = r.summary.max_pole ? Num(*r.summary.max_pole) : "n/a";
    if (r.status == "error") {
      std::snprintf(buf, sizeof buf, "%-12s %-9s %s\n", Num(r.value).c_str(), "error",
                    r.detail.c_str());
    } else {
      std::snprintf(buf, sizeof buf, "%-12s %-9s %14.6f %14.6f %10s\n", Num(r.value).c_str(),
                    r.status.c_str(), r.summary.rms, r.summary.final_steady, pole.c_str());
    }
    out << buf;
  }
  return out.str();
}

}  // namespace mfapc
