#include "mfapc/config.h"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace mfapc {
namespace {

std::string Trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> Split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = s.find(sep, pos);
    out.push_back(Trim(s.substr(pos, next - pos)));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

double ParseDouble(const std::string& s) {
  const std::string t = Trim(s);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || *end != '\0') throw ConfigError("not a number: '" + t + "'");
  return v;
}

int ParseInt(const std::string& s) {
  const double v = ParseDouble(s);
  if (v != static_cast<double>(static_cast<long>(v))) {
    throw ConfigError("not an integer: '" + Trim(s) + "'");
  }
  return static_cast<int>(v);
}

bool ParseBool(const std::string& s) {
  const std::string t = Trim(s);
  if (t == "on" || t == "true" || t == "yes" || t == "1") return true;
  if (t == "off" || t == "false" || t == "no" || t == "0") return false;
  throw ConfigError("not a boolean: '" + t + "'");
}

std::vector<double> ParseRow(const std::string& row) {
  std::string normalized = row;
  for (char& c : normalized) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(normalized);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(ParseDouble(tok));
  return out;
}

VectorXd ParseVector(const std::string& text) {
  const MatrixXd m = parse_matrix(text);
  if (m.rows() != 1 && m.cols() != 1) throw ConfigError("expected a vector: '" + text + "'");
  return Eigen::Map<const VectorXd>(m.data(), m.size());
}

std::vector<VectorXd> ParseSamples(const std::string& text) {
  const MatrixXd m = parse_matrix(text);
  std::vector<VectorXd> out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(m.row(r).transpose());
  return out;
}

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string FormatMatrix(const MatrixXd& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (r > 0) out += "; ";
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out += ", ";
      out += Num(m(r, c));
    }
  }
  return out;
}

std::string FormatVector(const VectorXd& v) { return FormatMatrix(v.transpose()); }

std::string FormatSamples(const std::vector<VectorXd>& samples) {
  std::string out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i > 0) out += "; ";
    out += FormatVector(samples[i]);
  }
  return out;
}

// Keys like a0, a1, ... or b0, b1, ... -> index.
bool IndexedKey(const std::string& key, char prefix, std::size_t* index) {
  if (key.size() < 2 || key[0] != prefix) return false;
  for (std::size_t i = 1; i < key.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(key[i]))) return false;
  }
  *index = static_cast<std::size_t>(std::stoul(key.substr(1)));
  return true;
}

struct Pending {
  std::optional<int> ly;
  std::optional<int> lu;
  std::optional<MatrixXd> kp;
  std::optional<MatrixXd> ki;
  std::string variant = "standard";
  int max_iters = 3;
  std::map<std::size_t, MatrixXd> a;
  std::map<std::size_t, MatrixXd> b;
};

void ApplyKey(const std::string& section, const std::string& key, const std::string& value,
              ExperimentConfig* cfg, Pending* p) {
  auto& pl = cfg->plant;
  auto& ctl = cfg->controller;
  auto& est = cfg->pjm;
  auto& run = cfg->run;
  std::size_t index = 0;

  if (section == "plant") {
    if (key == "kind") pl.kind = value;
    else if (IndexedKey(key, 'a', &index)) p->a[index] = parse_matrix(value);
    else if (IndexedKey(key, 'b', &index)) p->b[index] = parse_matrix(value);
    else if (key == "outputs") pl.outputs = ParseInt(value);
    else if (key == "inputs") pl.inputs = ParseInt(value);
    else if (key == "seed") pl.seed = static_cast<std::uint64_t>(ParseDouble(value));
    else if (key == "disturbance") pl.disturbance = ParseVector(value);
    else if (key == "disturbance_start") pl.disturbance_start = ParseInt(value);
    else if (key == "y_init") pl.y_init = ParseSamples(value);
    else if (key == "u_init") pl.u_init = ParseSamples(value);
    else throw ConfigError("unknown key '" + key + "'");
  } else if (section == "controller") {
    if (key == "law") {
      if (value == "mfapc") cfg->law = ControlLaw::kMfapc;
      else if (value == "mfac") cfg->law = ControlLaw::kMfac;
      else throw ConfigError("law must be mfapc or mfac");
    } else if (key == "variant") {
      if (value != "standard" && value != "pi" && value != "iterative") {
        throw ConfigError("variant must be standard, pi or iterative");
      }
      p->variant = value;
    } else if (key == "ly") p->ly = ParseInt(value);
    else if (key == "lu") p->lu = ParseInt(value);
    else if (key == "n") ctl.horizon = ParseInt(value);
    else if (key == "nu") ctl.control_horizon = ParseInt(value);
    else if (key == "lambda") ctl.lambda = ParseVector(value);
    else if (key == "kp") p->kp = parse_matrix(value);
    else if (key == "ki") p->ki = parse_matrix(value);
    else if (key == "max_iters") p->max_iters = ParseInt(value);
    else if (key == "preview") ctl.preview = ParseBool(value) ? PreviewMode::kPreview : PreviewMode::kHold;
    else if (key == "singular") {
      if (value == "min_norm") ctl.singular = SingularPolicy::kMinimumNorm;
      else if (value == "raise") ctl.singular = SingularPolicy::kRaise;
      else throw ConfigError("singular must be min_norm or raise");
    } else throw ConfigError("unknown key '" + key + "'");
  } else if (section == "estimator") {
    if (key == "source") {
      if (value == "analytic") est.kind = PjmSourceKind::kAnalytic;
      else if (value == "estimated") est.kind = PjmSourceKind::kEstimated;
      else if (value == "frozen") est.kind = PjmSourceKind::kFrozen;
      else throw ConfigError("source must be analytic, estimated or frozen");
    } else if (key == "eta") est.eta = ParseDouble(value);
    else if (key == "mu") est.mu = ParseDouble(value);
    else if (key == "init") est.init = parse_matrix(value);
    else if (key == "matrix") est.matrix = parse_matrix(value);
    else if (key == "freeze_at") est.freeze_at = ParseInt(value);
    else if (key == "reset") {
      if (value == "off") {
        est.reset = ResetOff{};
      } else if (value.rfind("norm:", 0) == 0) {
        est.reset = ResetNormThreshold{ParseDouble(value.substr(5))};
      } else {
        throw ConfigError("reset must be off or norm:<threshold>");
      }
    } else if (key == "solve") {
      if (value == "direct") est.solve = ProjectionSolve::kDirect;
      else if (value == "rank_one") est.solve = ProjectionSolve::kRankOne;
      else throw ConfigError("solve must be direct or rank_one");
    } else throw ConfigError("unknown key '" + key + "'");
  } else if (section == "run") {
    if (key == "name") cfg->name = value;
    else if (key == "steps") run.steps = ParseInt(value);
    else if (key == "start_k") run.start_k = ParseInt(value);
    else if (key == "analysis") run.analysis = ParseBool(value);
    else if (key == "divergence_bound") run.divergence_bound = ParseDouble(value);
    else if (key == "reference") cfg->reference.kind = value;
    else if (key == "amplitude") cfg->reference.amplitude = ParseDouble(value);
    else if (key == "period") cfg->reference.period = ParseDouble(value);
    else if (key == "reference_table") {
      cfg->reference.table.entries.clear();
      for (const auto& row : Split(value, ';')) {
        const std::vector<double> v = ParseRow(row);
        if (v.size() < 2) throw ConfigError("reference_table rows are 'k, values...'");
        cfg->reference.table.entries.emplace_back(
            static_cast<int>(v[0]), Eigen::Map<const VectorXd>(v.data() + 1, static_cast<Eigen::Index>(v.size()) - 1));
      }
    } else throw ConfigError("unknown key '" + key + "'");
  } else {
    throw ConfigError("key outside a known section");
  }
}

template <typename T>
std::vector<T> Ordered(const std::map<std::size_t, T>& m, char prefix) {
  std::vector<T> out;
  std::size_t expect = 0;
  for (const auto& [i, v] : m) {
    if (i != expect) {
      throw ConfigError(std::string("plant coefficients must be ") + prefix + "0, " + prefix +
                        "1, ... without gaps");
    }
    out.push_back(v);
    ++expect;
  }
  return out;
}

}  // namespace

MatrixXd parse_matrix(const std::string& text) {
  std::vector<std::vector<double>> rows;
  for (const auto& r : Split(text, ';')) {
    if (r.empty()) continue;
    rows.push_back(ParseRow(r));
  }
  if (rows.empty()) throw ConfigError("empty matrix");
  const std::size_t cols = rows.front().size();
  MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw ConfigError("ragged matrix rows: '" + text + "'");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  Pending pending;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = Trim(line);
    if (line.empty()) continue;
    try {
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError("unterminated section header");
        section = Trim(line.substr(1, line.size() - 2));
        if (section != "plant" && section != "controller" && section != "estimator" &&
            section != "run") {
          throw ConfigError("unknown section [" + section + "]");
        }
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError("expected key = value");
      ApplyKey(section, Trim(line.substr(0, eq)), Trim(line.substr(eq + 1)), &cfg, &pending);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }

  cfg.plant.a = Ordered(pending.a, 'a');
  cfg.plant.b = Ordered(pending.b, 'b');
  const auto model = make_plant_model(cfg.plant);
  Dims& d = cfg.controller.dims;
  d.outputs = model->outputs();
  d.inputs = model->inputs();
  d.output_order = pending.ly.value_or(model->output_lags());
  d.input_order = pending.lu.value_or(model->input_lags());

  if (pending.variant == "pi") {
    const MatrixXd eye = MatrixXd::Identity(d.outputs, d.outputs);
    cfg.controller.variant = PiVariant{pending.kp.value_or(MatrixXd::Zero(d.outputs, d.outputs)),
                                       pending.ki.value_or(eye)};
  } else if (pending.variant == "iterative") {
    cfg.controller.variant = IterativeVariant{pending.max_iters};
  } else {
    cfg.controller.variant = StandardVariant{};
  }
  if (pending.variant != "pi" && (pending.kp || pending.ki)) {
    throw ConfigError("kp/ki need variant = pi");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string format_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  const auto& pl = cfg.plant;
  out << "[plant]\n";
  out << "kind = " << pl.kind << '\n';
  if (pl.kind == "linear") {
    for (std::size_t i = 0; i < pl.a.size(); ++i) out << 'a' << i << " = " << FormatMatrix(pl.a[i]) << '\n';
    for (std::size_t i = 0; i < pl.b.size(); ++i) out << 'b' << i << " = " << FormatMatrix(pl.b[i]) << '\n';
  }
  if (pl.kind == "random") {
    out << "outputs = " << pl.outputs << "\ninputs = " << pl.inputs << "\nseed = " << pl.seed << '\n';
  }
  if (pl.disturbance) {
    out << "disturbance = " << FormatVector(*pl.disturbance) << '\n';
    out << "disturbance_start = " << pl.disturbance_start << '\n';
  }
  if (!pl.y_init.empty()) out << "y_init = " << FormatSamples(pl.y_init) << '\n';
  if (!pl.u_init.empty()) out << "u_init = " << FormatSamples(pl.u_init) << '\n';

  const auto& c = cfg.controller;
  out << "\n[controller]\n";
  out << "law = " << (cfg.law == ControlLaw::kMfac ? "mfac" : "mfapc") << '\n';
  out << "variant = " << variant_name(c.variant) << '\n';
  if (const auto* pi = std::get_if<PiVariant>(&c.variant)) {
    out << "kp = " << FormatMatrix(pi->kp) << "\nki = " << FormatMatrix(pi->ki) << '\n';
  }
  if (const auto* it = std::get_if<IterativeVariant>(&c.variant)) {
    out << "max_iters = " << it->max_iters << '\n';
  }
  out << "ly = " << c.dims.output_order << "\nlu = " << c.dims.input_order << '\n';
  out << "n = " << c.horizon << "\nnu = " << c.control_horizon << '\n';
  out << "lambda = " << FormatVector(c.lambda) << '\n';
  out << "preview = " << (c.preview == PreviewMode::kPreview ? "on" : "off") << '\n';
  out << "singular = " << (c.singular == SingularPolicy::kRaise ? "raise" : "min_norm") << '\n';

  const auto& e = cfg.pjm;
  out << "\n[estimator]\n";
  switch (e.kind) {
    case PjmSourceKind::kAnalytic: out << "source = analytic\n"; break;
    case PjmSourceKind::kEstimated: out << "source = estimated\n"; break;
    case PjmSourceKind::kFrozen: out << "source = frozen\n"; break;
  }
  out << "eta = " << Num(e.eta) << "\nmu = " << Num(e.mu) << '\n';
  out << "init = " << FormatMatrix(e.init) << '\n';
  if (const auto* r = std::get_if<ResetNormThreshold>(&e.reset)) {
    out << "reset = norm:" << Num(r->threshold) << '\n';
  } else {
    out << "reset = off\n";
  }
  out << "solve = " << (e.solve == ProjectionSolve::kRankOne ? "rank_one" : "direct") << '\n';
  if (e.matrix) out << "matrix = " << FormatMatrix(*e.matrix) << '\n';
  if (e.freeze_at) out << "freeze_at = " << *e.freeze_at << '\n';

  out << "\n[run]\n";
  out << "name = " << cfg.name << '\n';
  out << "steps = " << cfg.run.steps << "\nstart_k = " << cfg.run.start_k << '\n';
  out << "analysis = " << (cfg.run.analysis ? "on" : "off") << '\n';
  out << "divergence_bound = " << Num(cfg.run.divergence_bound) << '\n';
  out << "reference = " << cfg.reference.kind << '\n';
  if (cfg.reference.kind == "square") {
    out << "amplitude = " << Num(cfg.reference.amplitude) << "\nperiod = " << Num(cfg.reference.period) << '\n';
  }
  if (cfg.reference.kind == "table") {
    out << "reference_table = ";
    const auto& entries = cfg.reference.table.entries;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (i > 0) out << "; ";
      out << entries[i].first << ", " << FormatVector(entries[i].second);
    }
    out << '\n';
  }
  return out.str();
}

namespace {

ExperimentConfig Example1(const std::string& name, const std::string& plant, double lambda,
                          ControlLaw law) {
  ExperimentConfig cfg;
  cfg.name = name;
  cfg.plant.kind = plant;
  cfg.law = law;
  const int inputs = plant == "ex12" ? 3 : 2;
  cfg.controller.dims = Dims{2, inputs, 1, 2};
  cfg.controller.horizon = 2;
  cfg.controller.control_horizon = 2;
  cfg.controller.lambda = VectorXd::Constant(1, lambda);
  cfg.reference.kind = "square";
  cfg.reference.amplitude = 3.0;
  cfg.reference.period = 50.0;
  cfg.run.steps = 298;
  return cfg;
}

const std::map<std::string, std::function<ExperimentConfig()>>& Builtins() {
  static const std::map<std::string, std::function<ExperimentConfig()>> table = {
      {"ex11", [] { return Example1("ex11", "ex11", 1e-4, ControlLaw::kMfapc); }},
      {"ex11-mfac", [] { return Example1("ex11-mfac", "ex11", 1e-3, ControlLaw::kMfac); }},
      {"ex11-disturbance",
       [] {
         auto c = Example1("ex11-disturbance", "ex11", 1e-4, ControlLaw::kMfapc);
         c.plant.disturbance = (VectorXd(2) << 5.0, 10.0).finished();
         c.plant.disturbance_start = 4;
         return c;
       }},
      {"ex11-disturbance-mfac",
       [] {
         auto c = Example1("ex11-disturbance-mfac", "ex11", 1e-3, ControlLaw::kMfac);
         c.plant.disturbance = (VectorXd(2) << 5.0, 10.0).finished();
         c.plant.disturbance_start = 4;
         return c;
       }},
      {"ex12", [] { return Example1("ex12", "ex12", 0.01, ControlLaw::kMfapc); }},
      {"ex12-mfac", [] { return Example1("ex12-mfac", "ex12", 1.0, ControlLaw::kMfac); }},
      {"ex13",
       [] {
         auto c = Example1("ex13", "ex12", 0.01, ControlLaw::kMfapc);
         c.pjm.kind = PjmSourceKind::kEstimated;
         c.pjm.eta = 1.5;
         c.pjm.mu = 1.0;
         c.pjm.init = MatrixXd::Constant(2, 8, 0.01);
         c.run.steps = 798;
         return c;
       }},
      {"ex13-mfac",
       [] {
         auto c = Example1("ex13-mfac", "ex12", 1.0, ControlLaw::kMfac);
         c.pjm.kind = PjmSourceKind::kEstimated;
         c.pjm.eta = 1.5;
         c.pjm.mu = 1.0;
         c.pjm.init = MatrixXd::Constant(2, 8, 0.01);
         c.run.steps = 798;
         return c;
       }},
      {"ex2",
       [] {
         auto c = Example1("ex2", "ex2", 1.0, ControlLaw::kMfapc);
         c.reference.kind = "mixed_ex2";
         c.run.steps = 798;
         return c;
       }},
      {"ex2-mfac",
       [] {
         auto c = Example1("ex2-mfac", "ex2", 33.0, ControlLaw::kMfac);
         c.reference.kind = "mixed_ex2";
         c.run.steps = 798;
         return c;
       }},
  };
  return table;
}

}  // namespace

std::vector<std::string> builtin_names() {
  std::vector<std::string> out;
  for (const auto& [name, make] : Builtins()) out.push_back(name);
  return out;
}

ExperimentConfig builtin_config(const std::string& name) {
  const auto& table = Builtins();
  const auto it = table.find(name);
  if (it == table.end()) throw ConfigError("no built-in config named '" + name + "'");
  return it->second();
}

ExperimentConfig resolve_config(const std::string& name_or_path) {
  const auto& table = Builtins();
  if (table.count(name_or_path) != 0) return builtin_config(name_or_path);
  std::error_code ec;
  if (!std::filesystem::exists(name_or_path, ec)) {
    std::string names;
    for (const auto& n : builtin_names()) names += (names.empty() ? "" : ", ") + n;
    throw ConfigError("'" + name_or_path + "' is neither a config file nor a built-in (" + names +
                      ")");
  }
  return load_config(name_or_path);
}

}  // namespace mfapc
