#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "levyheat/density.hpp"
#include "levyheat/errors.hpp"
#include "levyheat/halfspace.hpp"
#include "levyheat/model_io.hpp"
#include "levyheat/scaling.hpp"
#include "levyheat/verify.hpp"

namespace levyheat::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::map<std::string, std::vector<std::string>>& schemas() {
  static const std::map<std::string, std::vector<std::string>> s{
      {"phi", {"r", "phi", "phi_inv_roundtrip_err"}},
      {"density", {"t", "r", "p", "h", "k", "hk", "pc"}},
      {"simulate.survival", {"delta", "t", "estimate", "stderr", "reference", "ratio"}},
      {"simulate.exits", {"replica", "path_seed", "tau", "survived", "x_exit_1"}},
      {"simulate.dirichlet", {"t", "delta_x", "delta_y", "dist", "p", "stderr", "exits", "n", "negative"}},
      {"simulate.tail", {"t", "r", "estimate", "stderr", "bound"}},
      {"simulate.vanishing", {"M", "H", "stderr", "t_at"}},
      {"simulate.strip", {"x_d", "r", "horizon", "estimate", "stderr", "truncated", "bound", "c"}},
      {"verify.sandwich", {"t", "delta_x", "delta_y", "dist", "p", "stderr", "bf_x", "bf_y", "lower_env",
                           "upper_env", "time_regime", "space_regime", "violation"}},
      {"verify.survival", {"delta", "t", "estimate", "stderr", "reference", "ratio", "ratio_half"}},
      {"verify.interior", {"t", "delta", "p", "stderr", "scaled"}},
      {"verify.smalltime", {"t", "p", "stderr", "ratio"}},
      {"verify.tail", {"t", "r", "estimate", "stderr", "bound"}},
      {"verify.vanishing", {"M", "H", "stderr", "t_at"}},
      {"verify.hkc", {"t", "rx", "ry", "ratio"}},
  };
  return s;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}
  Csv& operator<<(double v) { return cell(num(v)); }
  Csv& operator<<(long v) { return cell(std::to_string(v)); }
  Csv& operator<<(std::uint64_t v) { return cell(std::to_string(v)); }
  Csv& operator<<(bool v) { return cell(v ? "1" : "0"); }
  Csv& operator<<(const std::string& v) { return cell(v); }
  void end_row() {
    rows_.push_back(std::move(row_));
    row_.clear();
  }
  void write(std::ostream& os) const {
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
      os << '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
  }

 private:
  Csv& cell(std::string s) {
    row_.push_back(std::move(s));
    return *this;
  }
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::string> row_;
};

// Everything a run depends on. Serialised into the manifest and read back by replay.
struct Request {
  std::string command, action;
  std::string model_path, model_source;
  std::string out;
  std::uint64_t seed = 1;
  double budget = 0.0;  // total paths; 0 picks the per-command default
  double dt = 1e-3, eps = 0.0;
  std::string scheme = "auto";
  bool bridge = true;
  bool bit_reproducible = false;
  std::string grid_path;
  json grid = json::object();
  json params = json::object();
};

json to_json(const Request& r) {
  return {{"command", r.command}, {"action", r.action},   {"out", r.out},
          {"seed", r.seed},       {"budget", r.budget},   {"dt", r.dt},
          {"eps", r.eps},         {"scheme", r.scheme},   {"bridge_correction", r.bridge},
          {"bit_reproducible", r.bit_reproducible},       {"grid_path", r.grid_path},
          {"grid", r.grid},       {"params", r.params}};
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

Request request_from(const json& m) {
  auto field = [&](const json& obj, const char* key, const std::string& where) -> const json& {
    if (!obj.is_object() || !obj.contains(key)) throw ConfigError("manifest: missing field " + where + key);
    return obj.at(key);
  };
  const json& q = field(m, "request", "");
  Request r;
  try {
    r.command = field(q, "command", "request.").get<std::string>();
    r.action = field(q, "action", "request.").get<std::string>();
    r.out = field(q, "out", "request.").get<std::string>();
    r.seed = field(q, "seed", "request.").get<std::uint64_t>();
    r.budget = field(q, "budget", "request.").get<double>();
    r.dt = field(q, "dt", "request.").get<double>();
    r.eps = field(q, "eps", "request.").get<double>();
    r.scheme = field(q, "scheme", "request.").get<std::string>();
    r.bridge = field(q, "bridge_correction", "request.").get<bool>();
    r.bit_reproducible = field(q, "bit_reproducible", "request.").get<bool>();
    r.grid_path = field(q, "grid_path", "request.").get<std::string>();
    r.grid = field(q, "grid", "request.");
    r.params = field(q, "params", "request.");
    const json& model = field(m, "model", "");
    r.model_path = field(model, "path", "model.").get<std::string>();
    r.model_source = field(model, "source", "model.").get<std::string>();
    const std::string hash = field(model, "fnv1a64", "model.").get<std::string>();
    if (hex64(fnv1a64(r.model_source)) != hash) throw ConfigError("manifest: model.source does not match model.fnv1a64");
  } catch (const json::type_error& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
  return r;
}

std::string read_file(const std::string& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open " + what);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text, const std::string& path) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

LevyModel model_of(const Request& r) {
  if (r.model_source.empty()) throw ConfigError("--model is required");
  const json doc = parse_json(r.model_source, r.model_path);
  try {
    return model_from_json(doc);
  } catch (const ConfigError& e) {
    throw ConfigError(r.model_path + ": " + e.what());
  }
}

std::vector<double> axis(const Request& r, const char* key, std::vector<double> def, bool positive = true) {
  if (!r.grid.contains(key)) return def;
  const std::string where = (r.grid_path.empty() ? std::string("grid") : r.grid_path) + ": field " + key;
  const json& a = r.grid.at(key);
  if (!a.is_array() || a.empty()) throw ConfigError(where + ": expected a non-empty array of numbers");
  std::vector<double> v;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw ConfigError(where + "[" + std::to_string(i) + "]: expected a number");
    const double x = a[i].get<double>();
    if (!std::isfinite(x) || (positive && x <= 0.0) || x < 0.0)
      throw ConfigError(where + "[" + std::to_string(i) + "]: expected a " + (positive ? "positive" : "non-negative") +
                        " finite number");
    v.push_back(x);
  }
  return v;
}

double param(Request& r, const char* key, double def) {
  if (!r.params.contains(key) || r.params.at(key).is_null()) r.params[key] = def;
  if (!r.params.at(key).is_number()) throw ConfigError(std::string("parameter ") + key + ": expected a number");
  return r.params.at(key).get<double>();
}

void record_axes(Request& r, std::initializer_list<std::pair<const char*, std::vector<double>>> axes) {
  for (const auto& [k, v] : axes) r.grid[k] = v;
}

SimConfig sim_config(const Request& r, long per_point) {
  if (!(r.dt > 0.0) || !std::isfinite(r.dt)) throw ConfigError("--dt: expected a positive number");
  if (!(r.eps >= 0.0) || !std::isfinite(r.eps)) throw ConfigError("--eps: expected a non-negative number");
  SimConfig c;
  c.dt = r.dt;
  c.eps = r.eps;
  c.seed = r.seed;
  c.bridge_correction = r.bridge;
  c.scheme = scheme_from_string(r.scheme);
  c.n_paths = per_point;
  return c;
}

long per_point(Request& r, double def, std::size_t points) {
  if (r.budget == 0.0) r.budget = def;
  if (!(r.budget >= 1.0) || !std::isfinite(r.budget)) throw ConfigError("--budget: expected a path count >= 1");
  return std::max(1L, static_cast<long>(std::llround(r.budget)) / static_cast<long>(std::max<std::size_t>(points, 1)));
}

std::size_t distinct(const std::vector<double>& v) {
  auto s = v;
  std::sort(s.begin(), s.end());
  return static_cast<std::size_t>(std::unique(s.begin(), s.end()) - s.begin());
}

Vec on_axis(int dim, double delta) {
  Vec x = Vec::Zero(dim);
  x(dim - 1) = delta;
  return x;
}

json sim_json(const PathSimulator& sim) {
  return {{"scheme_used", to_string(sim.scheme())},
          {"eps_effective", sim.eps()},
          {"jump_rate", sim.jump_rate()},
          {"n_paths_per_point", sim.config().n_paths},
          {"threads", thread_count(sim.config().threads)}};
}

struct Outcome {
  int code = kOk;
  std::unique_ptr<Csv> csv;
  json report;  // null when the command has none
  json sim = json::object();
  std::string summary;
};

// ---------------------------------------------------------------------------

Outcome cmd_model(Request& r) {
  const LevyModel m = model_of(r);
  Outcome o;
  if (r.action == "show") {
    o.report = model_to_json(m);
    return o;
  }
  const ValidationReport v = validate(m);
  json entries = json::array();
  for (const auto& e : v.entries)
    entries.push_back({{"name", e.name}, {"pass", e.pass}, {"witness", e.witness}, {"detail", e.detail}});
  o.report = {{"model", m.name()}, {"dim", m.dim()}, {"all_pass", v.all_pass()}, {"entries", entries}};
  o.code = v.all_pass() ? kOk : kViolation;
  return o;
}

Outcome cmd_phi(Request& r) {
  const LevyModel m = model_of(r);
  if (!r.params.contains("variant")) r.params["variant"] = "full";
  const std::string variant = r.params.at("variant").get<std::string>();
  if (variant != "full" && variant != "coordinate")
    throw ConfigError("--variant: expected full or coordinate, got " + variant);
  ScaleFunction sf(m, variant == "full" ? ScaleFunction::Variant::Full : ScaleFunction::Variant::Coordinate);
  Outcome o;
  o.csv = std::make_unique<Csv>(csv_header("phi"));
  for (const auto& row : sf.table_rows()) {
    *o.csv << row.r << row.phi << row.roundtrip_err;
    o.csv->end_row();
  }
  return o;
}

Outcome cmd_density(Request& r) {
  const LevyModel m = model_of(r);
  const auto ts = axis(r, "t", {0.1, 1.0, 10.0});
  const auto rs = axis(r, "r", log_grid(0.01, 100.0, 21), false);
  record_axes(r, {{"t", ts}, {"r", rs}});
  const double a = param(r, "a", 1.0), T = param(r, "T", 1.0);
  auto ev = std::make_shared<DensityEvaluator>(m);
  Envelopes env(m, ev->scale_ptr());
  Outcome o;
  o.csv = std::make_unique<Csv>(csv_header("density"));
  for (double t : ts)
    for (double rr : rs) {
      Vec x = Vec::Zero(m.dim());
      x(0) = rr;
      // h lives on t <= T and k on t >= T; the other cell stays empty.
      *o.csv << t << rr << (*ev)(t, x);
      *o.csv << (t <= T ? num(env.h(a, T, t, rr)) : std::string());
      *o.csv << (t >= T ? num(env.k(a, T, t, rr)) : std::string());
      *o.csv << env.hk(a, T, t, rr) << pc(m.dim(), t, rr);
      o.csv->end_row();
    }
  o.report = {{"method", to_string(ev->method())}, {"clamped", ev->clamped()}};
  return o;
}

Outcome cmd_simulate(Request& r) {
  const LevyModel m = model_of(r);
  Outcome o;
  o.csv = std::make_unique<Csv>(csv_header("simulate." + r.action));
  auto& csv = *o.csv;
  if (r.action == "survival") {
    const auto ds = axis(r, "delta", {0.1, 0.5, 1.0, 2.0, 5.0});
    const auto ts = axis(r, "t", {0.5, 1.0, 2.0});
    record_axes(r, {{"delta", ds}, {"t", ts}});
    PathSimulator sim(m, sim_config(r, per_point(r, 5e4, distinct(ds))));
    ScaleFunction coord(m, ScaleFunction::Variant::Coordinate);
    for (double d : ds)
      for (const auto& s : survival_curve(sim, coord, on_axis(m.dim(), d), ts)) {
        csv << s.delta << s.t << s.est.value << s.est.stderr << s.reference << s.ratio;
        csv.end_row();
      }
    o.sim = sim_json(sim);
  } else if (r.action == "exits") {
    const double x = param(r, "x", 1.0), horizon = param(r, "horizon", 1.0);
    if (!(x >= 0.0) || !(horizon > 0.0)) throw ConfigError("--x must be >= 0 and --horizon > 0");
    PathSimulator sim(m, sim_config(r, per_point(r, 1000, 1)));
    const auto recs = sim.exit_batch(on_axis(m.dim(), x), horizon);
    auto header = csv_header("simulate.exits");
    for (int i = 2; i <= m.dim(); ++i) header.push_back("x_exit_" + std::to_string(i));
    o.csv = std::make_unique<Csv>(header);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      *o.csv << static_cast<long>(i) << recs[i].path_seed << recs[i].tau << recs[i].survived;
      for (int k = 0; k < m.dim(); ++k) *o.csv << recs[i].x_exit(k);
      o.csv->end_row();
    }
    o.sim = sim_json(sim);
  } else if (r.action == "dirichlet") {
    const auto ts = axis(r, "t", {0.25, 1.0, 4.0});
    const auto ds = axis(r, "delta", {0.1, 1.0, 10.0});
    const auto rs = axis(r, "r", {0.5, 2.0, 8.0});
    record_axes(r, {{"t", ts}, {"delta", ds}, {"r", rs}});
    auto ev = std::make_shared<DensityEvaluator>(m);
    KilledDensity p(ev);
    PathSimulator sim(m, sim_config(r, per_point(r, 3e4, distinct(ds))));
    for (const auto& e : estimate_grid(sim, p, sandwich_grid(m.dim(), ts, ds, rs))) {
      csv << e.g.t << e.g.x(m.dim() - 1) << e.g.y(m.dim() - 1) << (e.g.y - e.g.x).norm() << e.p << e.stderr
          << e.exits << e.n << e.negative;
      csv.end_row();
    }
    o.sim = sim_json(sim);
  } else if (r.action == "tail") {
    const auto ts = axis(r, "t", {0.01, 0.1, 1.0, 10.0});
    const auto rs = axis(r, "r", {0.1, 1.0, 10.0, 100.0});
    record_axes(r, {{"t", ts}, {"r", rs}});
    PathSimulator sim(m, sim_config(r, per_point(r, 4e4, distinct(ts))));
    ScaleFunction sf(m);
    for (double t : ts)
      for (double rr : rs) {
        const Estimate e = tail_prob(sim, t, rr);
        csv << t << rr << e.value << e.stderr << t / sf.phi(rr);
        csv.end_row();
      }
    o.sim = sim_json(sim);
  } else if (r.action == "vanishing") {
    const auto Ms = axis(r, "M", {1.0, 2.0, 4.0, 8.0, 16.0});
    const auto ts = axis(r, "t", {0.01, 0.1, 1.0, 10.0, 100.0});
    record_axes(r, {{"M", Ms}, {"t", ts}});
    const double c = param(r, "c_scale", 1.0);
    const SimConfig cfg = sim_config(r, per_point(r, 5e4, distinct(ts)));
    for (const auto& v : vanishing_H(m, cfg, c, Ms, ts)) {
      csv << v.M << v.H << v.stderr << v.t_at;
      csv.end_row();
    }
    o.sim = sim_json(PathSimulator(m, cfg));
  } else if (r.action == "strip") {
    const double x = param(r, "x", 0.5), rr = param(r, "r", 1.0), horizon = param(r, "horizon", 0.0);
    const SimConfig cfg = sim_config(r, per_point(r, 1e4, 1));
    const StripEstimate s = mean_exit_strip(m, cfg, x, rr, horizon);
    csv << s.x_d << s.r << s.horizon << s.est.value << s.est.stderr << s.truncated << s.bound << s.c;
    csv.end_row();
    o.sim = sim_json(PathSimulator(m, cfg));
  } else {
    throw ConfigError("unknown simulate target " + r.action);
  }
  return o;
}

json sandwich_json(const SandwichReport& s) {
  return {{"kind", s.kind},
          {"pass", s.pass},
          {"c1", s.c1},
          {"c1_upper", s.c1_upper},
          {"c1_lower", s.c1_lower},
          {"a_upper", s.a_upper},
          {"a_lower", s.a_lower},
          {"t_upper", s.t_upper},
          {"s_upper", s.s_upper},
          {"t_lower", s.t_lower},
          {"s_lower", s.s_lower},
          {"coherent", s.coherent},
          {"continuity", s.continuity},
          {"continuity_ok", s.continuity_ok},
          {"violations", s.violations.size()},
          {"points", s.rows.size()},
          {"detail", s.detail}};
}

Outcome cmd_verify(Request& r) {
  const LevyModel m = model_of(r);
  Outcome o;
  const std::string& a = r.action;
  if (a == "upper" || a == "twosided" || a == "conjecture") {
    const auto ts = axis(r, "t", {0.25, 1.0, 4.0});
    const auto ds = axis(r, "delta", {0.1, 1.0, 10.0});
    const auto rs = axis(r, "r", {0.5, 2.0, 8.0});
    record_axes(r, {{"t", ts}, {"delta", ds}, {"r", rs}});
    VerifyOptions opt;
    opt.T = param(r, "T", 1.0);
    auto ev = std::make_shared<DensityEvaluator>(m);
    KilledDensity p(ev);
    Envelopes env(m, ev->scale_ptr());
    PathSimulator sim(m, sim_config(r, per_point(r, 3e4, distinct(ds))));
    const auto est = estimate_grid(sim, p, sandwich_grid(m.dim(), ts, ds, rs));
    const SandwichReport rep = a == "upper"      ? verify_upper(env, est, opt)
                               : a == "twosided" ? verify_twosided(env, est, opt)
                                                 : verify_conjecture_form(p, ev->scale(), est, opt);
    o.csv = std::make_unique<Csv>(csv_header("verify.sandwich"));
    for (const auto& w : rep.rows) {
      *o.csv << w.t << w.delta_x << w.delta_y << w.dist << w.p << w.stderr << w.bf_x << w.bf_y << w.lower_env
             << w.upper_env << w.time_regime << w.space_regime << w.violation;
      o.csv->end_row();
    }
    o.report = sandwich_json(rep);
    o.sim = sim_json(sim);
    o.code = rep.pass ? kOk : kViolation;
    o.summary = a + ": " + (rep.pass ? "pass" : "FAIL") + " c1=" + num(rep.c1) +
                " violations=" + std::to_string(rep.violations.size());
  } else if (a == "survival") {
    const auto ds = axis(r, "delta", {0.1, 0.5, 1.0, 2.0, 5.0});
    const auto ts = axis(r, "t", {0.5, 1.0, 2.0});
    record_axes(r, {{"delta", ds}, {"t", ts}});
    PathSimulator sim(m, sim_config(r, per_point(r, 5e4, distinct(ds))));
    const auto rep = survival_comparison(sim, ds, ts);
    o.csv = std::make_unique<Csv>(csv_header("verify.survival"));
    for (const auto& w : rep.rows) {
      *o.csv << w.delta << w.t << w.estimate << w.stderr << w.reference << w.ratio << w.ratio_half;
      o.csv->end_row();
    }
    o.report = {{"kind", a}, {"pass", rep.pass}, {"C0", rep.C0}, {"C0_half", rep.C0_half}, {"stable", rep.stable}};
    o.sim = sim_json(sim);
    o.code = rep.pass ? kOk : kViolation;
    o.summary = a + ": " + (rep.pass ? "pass" : "FAIL") + " C0=" + num(rep.C0);
  } else if (a == "interior") {
    const auto ts = axis(r, "t", {0.25, 1.0, 4.0});
    record_axes(r, {{"t", ts}});
    const double factor = param(r, "factor", 4.0);
    auto ev = std::make_shared<DensityEvaluator>(m);
    KilledDensity p(ev);
    PathSimulator sim(m, sim_config(r, per_point(r, 3e4, distinct(ts))));
    const auto rep = check_interior(sim, p, ts, factor);
    o.csv = std::make_unique<Csv>(csv_header("verify.interior"));
    for (const auto& w : rep.rows) {
      *o.csv << w.t << w.delta << w.p << w.stderr << w.scaled;
      o.csv->end_row();
    }
    o.report = {{"kind", a},  {"pass", rep.pass}, {"min_scaled", rep.min_scaled}, {"max_scaled", rep.max_scaled},
                {"lo", rep.lo}, {"hi", rep.hi}};
    o.sim = sim_json(sim);
    o.code = rep.pass ? kOk : kViolation;
    o.summary = a + ": " + (rep.pass ? "pass" : "FAIL") + " scaled in [" + num(rep.min_scaled) + ", " +
                num(rep.max_scaled) + "]";
  } else if (a == "smalltime") {
    const auto ts = axis(r, "t", {0.005, 0.01, 0.02, 0.05});
    record_axes(r, {{"t", ts}});
    const double x = param(r, "x", 5.0), dist = param(r, "r", 1.0);
    if (!(x > 0.0) || !(dist > 0.0)) throw ConfigError("--x and --r must be positive");
    auto ev = std::make_shared<DensityEvaluator>(m);
    KilledDensity p(ev);
    PathSimulator sim(m, sim_config(r, per_point(r, 2e4, 1)));
    Vec y = on_axis(m.dim(), x);
    y(0) += dist;
    const auto rep = check_small_time(sim, p, on_axis(m.dim(), x), y, ts);
    o.csv = std::make_unique<Csv>(csv_header("verify.smalltime"));
    for (const auto& w : rep.rows) {
      *o.csv << w.t << w.p << w.stderr << w.ratio;
      o.csv->end_row();
    }
    o.report = {{"kind", a}, {"pass", rep.pass}, {"constant", rep.constant}};
    o.sim = sim_json(sim);
    o.code = rep.pass ? kOk : kViolation;
    o.summary = a + ": " + (rep.pass ? "pass" : "FAIL") + " constant=" + num(rep.constant);
  } else if (a == "tail") {
    const auto ts = axis(r, "t", {0.01, 0.1, 1.0, 10.0});
    const auto rs = axis(r, "r", {0.1, 1.0, 10.0, 100.0});
    record_axes(r, {{"t", ts}, {"r", rs}});
    const double cap = param(r, "cap", 100.0);
    PathSimulator sim(m, sim_config(r, per_point(r, 4e4, distinct(ts))));
    ScaleFunction sf(m);
    const auto rep = check_tail_bound(sim, sf, ts, rs, cap);
    o.csv = std::make_unique<Csv>(csv_header("verify.tail"));
    for (const auto& w : rep.rows) {
      *o.csv << w.t << w.r << w.estimate << w.stderr << w.bound;
      o.csv->end_row();
    }
    o.report = {{"kind", a}, {"pass", rep.pass}, {"c", rep.c}, {"cap", rep.cap}};
    o.sim = sim_json(sim);
    o.code = rep.pass ? kOk : kViolation;
    o.summary = a + ": " + (rep.pass ? "pass" : "FAIL") + " c=" + num(rep.c);
  } else if (a == "vanishing") {
    const auto Ms = axis(r, "M", {1.0, 2.0, 4.0, 8.0, 16.0});
    const auto ts = axis(r, "t", {0.01, 0.1, 1.0, 10.0, 100.0});
    record_axes(r, {{"M", Ms}, {"t", ts}});
    const double c = param(r, "c_scale", 1.0);
    const SimConfig cfg = sim_config(r, per_point(r, 5e4, distinct(ts)));
    const auto rep = check_vanishing(vanishing_H(m, cfg, c, Ms, ts));
    o.csv = std::make_unique<Csv>(csv_header("verify.vanishing"));
    for (const auto& w : rep.rows) {
      *o.csv << w.M << w.H << w.stderr << w.t_at;
      o.csv->end_row();
    }
    o.report = {{"kind", a}, {"pass", rep.pass}};
    o.sim = sim_json(PathSimulator(m, cfg));
    o.code = rep.pass ? kOk : kViolation;
    o.summary = a + ": " + (rep.pass ? "pass" : "FAIL");
  } else if (a == "hkc") {
    const auto ts = axis(r, "t", {0.1, 1.0, 10.0});
    const auto rs = axis(r, "r", {0.1, 0.5, 1.0, 3.0, 10.0});
    record_axes(r, {{"t", ts}, {"r", rs}});
    const double cap = param(r, "cap", 1e3);
    const auto rep = check_HKC(DensityEvaluator(m), ts, rs, {0.25, 0.5, 1.0, 2.0, 4.0}, cap);
    o.csv = std::make_unique<Csv>(csv_header("verify.hkc"));
    for (const auto& w : rep.rows) {
      *o.csv << w.t << w.rx << w.ry << w.ratio;
      o.csv->end_row();
    }
    o.report = {{"kind", a}, {"pass", rep.pass}, {"c", rep.c},        {"C1", rep.C1},
                {"C2", rep.C2}, {"ratio_max", rep.ratio_max}, {"cap", rep.cap}};
    o.code = rep.pass ? kOk : kViolation;
    o.summary = a + ": " + (rep.pass ? "pass" : "FAIL") + " c=" + num(rep.c) + " C1=" + num(rep.C1) +
                " C2=" + num(rep.C2);
  } else {
    throw ConfigError("unknown verify suite " + a);
  }
  return o;
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError(p.string() + ": cannot open for writing");
  f << text;
}

// Primary output at --out; report at <stem>.json (unless the report is the
// primary output) and the manifest at <stem>.manifest.json.
int execute(Request r, std::ostream& out, const std::string& replayed_from) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = utc_now();
  Outcome o;
  if (r.command == "model") o = cmd_model(r);
  else if (r.command == "phi") o = cmd_phi(r);
  else if (r.command == "density") o = cmd_density(r);
  else if (r.command == "simulate") o = cmd_simulate(r);
  else if (r.command == "verify") o = cmd_verify(r);
  else throw ConfigError("unknown command " + r.command);

  std::ostringstream csv;
  if (o.csv) o.csv->write(csv);
  const std::string report = o.report.is_null() ? std::string() : o.report.dump(2) + "\n";

  if (r.out.empty()) {
    if (o.csv && r.command != "verify") out << csv.str();
    else out << report;
    return o.code;
  }

  const fs::path primary(r.out);
  fs::path stem = primary;
  stem.replace_extension();
  std::vector<std::string> outputs;
  if (o.csv) {
    write_text(primary, csv.str());
    outputs.push_back(primary.string());
    if (!report.empty()) {
      const fs::path rp = stem.string() + ".json";
      write_text(rp, report);
      outputs.push_back(rp.string());
    }
  } else {
    write_text(primary, report);
    outputs.push_back(primary.string());
  }
  const fs::path mp = stem.string() + ".manifest.json";
  outputs.push_back(mp.string());

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json manifest = {{"format", kManifestFormat},
                   {"tool_version", LEVYHEAT_VERSION},
                   {"csv_schema", kCsvSchema},
                   {"request", to_json(r)},
                   {"model",
                    {{"path", r.model_path}, {"fnv1a64", hex64(fnv1a64(r.model_source))}, {"source", r.model_source}}},
                   {"simulation", o.sim},
                   {"started_utc", started},
                   {"wall_clock_seconds", wall},
                   {"exit_code", o.code},
                   {"outputs", outputs}};
  if (!replayed_from.empty()) manifest["replayed_from"] = replayed_from;
  write_text(mp, manifest.dump(2) + "\n");

  if (!o.summary.empty()) out << o.summary << '\n';
  else if (r.command == "model") out << report;
  return o.code;
}

struct Flags {
  std::string model, out, grid, budget, scheme = "auto";
  std::uint64_t seed = 1;
  double dt = 1e-3, eps = 0.0;
  bool bit = false, no_bridge = false;
  std::map<std::string, double> extra;
  std::string variant = "full";
};

void common(CLI::App* s, Flags& f) {
  s->add_option("--model", f.model, "Model definition (JSON)");
  s->add_option("--out", f.out, "Primary output path; report and manifest go next to it");
  s->add_option("--seed", f.seed, "Base seed");
  s->add_option("--budget", f.budget, "Total number of paths, split over the start points");
  s->add_option("--dt", f.dt, "Time step");
  s->add_option("--eps", f.eps, "Small-jump cutoff (0: Phi^{-1}(dt))");
  s->add_option("--grid", f.grid, "Grid file (JSON arrays t, delta, r, M)");
  s->add_option("--scheme", f.scheme, "auto, exact-stable or cp-gaussian");
  s->add_flag("--no-bridge", f.no_bridge, "Disable the Brownian bridge crossing correction");
  s->add_flag("--bit-reproducible", f.bit, "Pin results to the seed alone (recorded in the manifest)");
}

void extra(CLI::App* s, Flags& f, std::initializer_list<std::pair<const char*, const char*>> names) {
  for (const auto& [name, help] : names) {
    std::string key = name;
    std::replace(key.begin(), key.end(), '-', '_');
    s->add_option_function<double>(std::string("--") + name, [&f, key](double v) { f.extra[key] = v; }, help);
  }
}

Request build(const std::string& command, const std::string& action, const Flags& f) {
  Request r;
  r.command = command;
  r.action = action;
  r.out = f.out;
  r.seed = f.seed;
  r.dt = f.dt;
  r.eps = f.eps;
  r.scheme = f.scheme;
  r.bridge = !f.no_bridge;
  r.bit_reproducible = f.bit;
  if (!f.budget.empty()) {
    try {
      std::size_t used = 0;
      r.budget = std::stod(f.budget, &used);
      if (used != f.budget.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError("--budget: expected a number, got '" + f.budget + "'");
    }
    if (!(r.budget >= 1.0)) throw ConfigError("--budget: expected a path count >= 1");
  }
  if (!f.model.empty()) {
    r.model_path = f.model;
    r.model_source = read_file(f.model, "model file");
  }
  if (!f.grid.empty()) {
    r.grid_path = f.grid;
    r.grid = parse_json(read_file(f.grid, "grid file"), f.grid);
    if (!r.grid.is_object()) throw ConfigError(f.grid + ": expected a JSON object of arrays");
  }
  for (const auto& [k, v] : f.extra) r.params[k] = v;
  if (command == "phi") r.params["variant"] = f.variant;
  scheme_from_string(r.scheme);
  return r;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

const std::vector<std::string>& csv_header(const std::string& kind) {
  const auto& s = schemas();
  const auto it = s.find(kind);
  if (it == s.end()) throw ConfigError("no CSV schema named " + kind);
  return it->second;
}

std::vector<std::string> csv_kinds() {
  std::vector<std::string> k;
  for (const auto& [name, cols] : schemas()) k.push_back(name);
  return k;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Symmetric Levy processes: scale functions, densities and half-space heat kernel checks", "levyheat"};
  app.set_version_flag("--version", LEVYHEAT_VERSION);
  app.require_subcommand(1);
  Flags f;
  std::string file, manifest;
  std::string command, action;

  auto leaf = [&](CLI::App* s, std::string cmd, std::string act) {
    common(s, f);
    s->callback([&command, &action, cmd, act] {
      command = cmd;
      action = act;
    });
    return s;
  };

  auto* model = app.add_subcommand("model", "Model files");
  model->require_subcommand(1);
  for (const char* act : {"validate", "show"}) {
    auto* s = leaf(model->add_subcommand(act, std::string(act) + " a model file"), "model", act);
    s->add_option("file", file, "Model definition (JSON)");
  }
  auto* phi = leaf(app.add_subcommand("phi", "Tabulate Phi and the inverse round-trip error"), "phi", "");
  phi->add_option("--variant", f.variant, "full or coordinate");
  extra(leaf(app.add_subcommand("density", "Free density and envelopes h, k, hk, p^c on a (t, r) grid"),
             "density", ""),
        f, {{"a", "Shape constant of the envelopes"}, {"T", "Time split between h and k"}});

  auto* sim = app.add_subcommand("simulate", "Monte Carlo estimators");
  sim->require_subcommand(1);
  extra(leaf(sim->add_subcommand("survival", "P_x(tau > t) over a (delta, t) grid"), "simulate", "survival"), f, {});
  extra(leaf(sim->add_subcommand("exits", "Exit records from x = delta e_d"), "simulate", "exits"), f,
        {{"x", "Distance of the start point to the boundary"}, {"horizon", "Time horizon"}});
  extra(leaf(sim->add_subcommand("dirichlet", "Killed density over a (t, delta, r) grid"), "simulate", "dirichlet"),
        f, {});
  extra(leaf(sim->add_subcommand("tail", "P(|X_t| > r)"), "simulate", "tail"), f, {});
  extra(leaf(sim->add_subcommand("vanishing", "sup_t P(|X_t| > c M Phi^{-1}(t)) against M"), "simulate",
             "vanishing"),
        f, {{"c-scale", "c"}});
  extra(leaf(sim->add_subcommand("strip", "Mean exit time of a coordinate from (0, r)"), "simulate", "strip"), f,
        {{"x", "Start coordinate"}, {"r", "Strip width"}, {"horizon", "Time horizon (0: 20 Phi_1(r))"}});

  auto* ver = app.add_subcommand("verify", "Heat kernel estimate suites");
  ver->require_subcommand(1);
  for (const char* s : {"upper", "twosided", "conjecture"})
    extra(leaf(ver->add_subcommand(s, std::string(s) + " sandwich on a (t, delta, r) grid"), "verify", s), f,
          {{"T", "Time split between h and k"}});
  extra(leaf(ver->add_subcommand("survival", "Survival against sqrt(Phi_1(delta)/t) ^ 1"), "verify", "survival"), f,
        {});
  extra(leaf(ver->add_subcommand("interior", "p_H at x = y far inside"), "verify", "interior"), f,
        {{"factor", "delta = factor Phi^{-1}(t)"}});
  extra(leaf(ver->add_subcommand("smalltime", "p_H / (t j) at small t"), "verify", "smalltime"), f,
        {{"x", "Distance of x to the boundary"}, {"r", "|x - y|"}});
  extra(leaf(ver->add_subcommand("tail", "P(|X_t| > r) <= c t / Phi(r)"), "verify", "tail"), f,
        {{"cap", "Largest acceptable c"}});
  extra(leaf(ver->add_subcommand("vanishing", "H(M) decreasing in M"), "verify", "vanishing"), f,
        {{"c-scale", "c"}});
  extra(leaf(ver->add_subcommand("hkc", "p(t, x) <= c p(C1 t, C2 y) for |x| >= |y|"), "verify", "hkc"), f,
        {{"cap", "Largest acceptable c"}});

  auto* replay = app.add_subcommand("replay", "Re-run from a manifest");
  replay->add_option("manifest", manifest, "Manifest written by an earlier run")->required();
  replay->add_option("--out", f.out, "Write to this path instead of the recorded one");
  replay->callback([&] { command = "replay"; });

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (command == "replay") {
      const json m = parse_json(read_file(manifest, "manifest"), manifest);
      if (!m.is_object() || m.value("format", "") != std::string(kManifestFormat))
        throw ConfigError(manifest + ": field format: expected " + kManifestFormat);
      Request r = request_from(m);
      if (!f.out.empty()) r.out = f.out;
      if (!r.model_path.empty() && fs::exists(r.model_path) &&
          fnv1a64(read_file(r.model_path, "model file")) != fnv1a64(r.model_source))
        err << "warning: " << r.model_path << " changed since the run; using the recorded model\n";
      return execute(r, out, manifest);
    }
    if (command == "model" && f.model.empty()) f.model = file;
    return execute(build(command, action, f), out, "");
  } catch (const ConfigError& e) {
    err << "levyheat: config error: " << e.what() << '\n';
    return kConfig;
  } catch (const DomainError& e) {
    err << "levyheat: invalid argument: " << e.what() << '\n';
    return kConfig;
  } catch (const json::exception& e) {
    err << "levyheat: config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    err << "levyheat: numerical error: " << e.what() << '\n';
    return kNumerical;
  }
}

}  // namespace levyheat::cli
