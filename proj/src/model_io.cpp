#include "levyheat/model_io.hpp"

#include <fstream>
#include <sstream>

#include "levyheat/errors.hpp"

namespace levyheat {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

double number(const json& obj, const std::string& key, const std::string& path, double fallback,
              bool required = false) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    if (required) fail(path + key, "missing required number");
    return fallback;
  }
  if (it->is_string()) {
    const auto s = it->get<std::string>();
    if (s == "inf" || s == "infinity") return kInf;
    fail(path + key, "expected a number, got \"" + s + "\"");
  }
  if (!it->is_number()) fail(path + key, "expected a number");
  return it->get<double>();
}

Mat matrix(const json& v, int dim, const std::string& path) {
  if (!v.is_array() || static_cast<int>(v.size()) != dim) fail(path, "expected a dim x dim array");
  Mat A(dim, dim);
  for (int i = 0; i < dim; ++i) {
    if (!v[i].is_array() || static_cast<int>(v[i].size()) != dim)
      fail(path + "[" + std::to_string(i) + "]", "expected a row of length dim");
    for (int j = 0; j < dim; ++j) {
      if (!v[i][j].is_number())
        fail(path + "[" + std::to_string(i) + "][" + std::to_string(j) + "]", "expected a number");
      A(i, j) = v[i][j].get<double>();
    }
  }
  return A;
}

}  // namespace

LevyModel model_from_json(const json& doc) {
  if (!doc.is_object()) fail("(root)", "expected a JSON object");
  const auto fmt = doc.find("format");
  if (fmt == doc.end() || !fmt->is_string() || fmt->get<std::string>() != kModelFormat)
    fail("format", std::string("expected \"") + kModelFormat + "\"");

  const std::string name = doc.value("name", std::string("model"));
  const auto dim_it = doc.find("dim");
  if (dim_it == doc.end() || !dim_it->is_number_integer() || dim_it->get<int>() < 1)
    fail("dim", "expected a positive integer");
  const int dim = dim_it->get<int>();

  GaussianPart g;
  g.a0 = number(doc, "a0", "", 0.0);
  g.gamma = number(doc, "gamma", "", 1.0);
  if (doc.contains("A") && !doc["A"].is_null())
    g.A = matrix(doc["A"], dim, "A");
  else
    g.A = g.a0 * Mat::Identity(dim, dim);

  std::optional<PolyScale> poly;
  if (doc.contains("phi1") && !doc["phi1"].is_null()) {
    const json& p = doc["phi1"];
    if (!p.is_object()) fail("phi1", "expected an object");
    const std::string profile = p.value("profile", std::string());
    const json params = p.value("params", json::object());
    if (profile == "power") {
      poly = PolyScale::power(number(params, "alpha", "phi1.params.", 0.0, true));
    } else if (profile == "piecewise_power") {
      poly = PolyScale::piecewise(number(params, "alpha_small", "phi1.params.", 0.0, true),
                                  number(params, "alpha_large", "phi1.params.", 0.0, true));
    } else {
      fail("phi1.profile", "expected \"power\" or \"piecewise_power\", got \"" + profile + "\"");
    }
    poly->a3 = number(params, "a3", "phi1.params.", 1.0);
    poly->a4 = number(params, "a4", "phi1.params.", 1.0);
  }

  ExpDamp damp;
  if (doc.contains("psi1") && !doc["psi1"].is_null()) {
    const json& q = doc["psi1"];
    if (!q.is_object()) fail("psi1", "expected an object");
    damp.beta = number(q, "beta", "psi1.", 0.0);
    damp.gamma1 = number(q, "gamma1", "psi1.", 1.0);
    damp.gamma2 = number(q, "gamma2", "psi1.", damp.gamma1);
    damp.a1 = number(q, "a1", "psi1.", std::exp(-damp.gamma1));
    damp.a2 = number(q, "a2", "psi1.", std::exp(-damp.gamma1));
  }
  const double kappa1 = number(doc, "kappa1", "", 1.0);
  const double kappa2 = number(doc, "kappa2", "", kappa1);
  const double comp_gamma = number(doc, "comparability_gamma", "", g.gamma);

  Vec aniso;
  if (doc.contains("anisotropy") && !doc["anisotropy"].is_null()) {
    const json& a = doc["anisotropy"];
    if (!a.is_array() || static_cast<int>(a.size()) != dim) fail("anisotropy", "expected dim numbers");
    aniso.resize(dim);
    for (int i = 0; i < dim; ++i) {
      if (!a[i].is_number()) fail("anisotropy[" + std::to_string(i) + "]", "expected a number");
      aniso[i] = a[i].get<double>();
    }
  }

  ClosedForm cf;
  if (doc.contains("closed_form") && !doc["closed_form"].is_null()) {
    const json& c = doc["closed_form"];
    if (!c.is_object()) fail("closed_form", "expected an object");
    const std::string kind = c.value("kind", std::string());
    if (kind == "stable") {
      cf.kind = ClosedForm::Kind::Stable;
      cf.alpha = number(c, "alpha", "closed_form.", 0.0, true);
    } else if (kind == "relativistic") {
      cf.kind = ClosedForm::Kind::Relativistic;
      cf.alpha = number(c, "alpha", "closed_form.", 0.0, true);
      cf.mass = number(c, "mass", "closed_form.", 0.0, true);
    } else if (kind == "brownian") {
      cf.kind = ClosedForm::Kind::Brownian;
    } else {
      fail("closed_form.kind", "expected \"stable\", \"relativistic\" or \"brownian\"");
    }
  }

  // "unit" normalisation: Psi_J(e1) = 1 (|xi|^alpha exactly for the stable case).
  double norm = 1.0;
  bool unit = false;
  if (doc.contains("normalization")) {
    const json& n = doc["normalization"];
    if (n.is_string() && n.get<std::string>() == "unit")
      unit = true;
    else if (n.is_number())
      norm = n.get<double>();
    else
      fail("normalization", "expected a number or \"unit\"");
  }
  if (unit && poly) {
    if (cf.kind == ClosedForm::Kind::Stable) {
      norm = 1.0 / stable_constant(dim, cf.alpha);
    } else if (cf.kind != ClosedForm::Kind::Relativistic) {
      LevyModel probe(name, dim, g, poly, damp, kappa1, kappa2, comp_gamma, 1.0, aniso, cf);
      norm = 1.0 / psi_jump_radial(probe, 1.0);
    }
  }
  return LevyModel(name, dim, g, poly, damp, kappa1, kappa2, comp_gamma, norm, aniso, cf);
}

LevyModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open model file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    // e.what() carries "at line L, column C".
    throw ConfigError(path + ": " + e.what());
  }
  try {
    return model_from_json(doc);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

json model_to_json(const LevyModel& m) {
  json doc;
  doc["format"] = kModelFormat;
  doc["name"] = m.name();
  doc["dim"] = m.dim();
  doc["a0"] = m.gaussian().a0;
  doc["gamma"] = m.gaussian().gamma;
  json A = json::array();
  for (int i = 0; i < m.dim(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.dim(); ++j) row.push_back(m.gaussian().A(i, j));
    A.push_back(row);
  }
  doc["A"] = A;
  if (m.poly()) {
    const auto& p = *m.poly();
    if (p.profile == PolyScale::Profile::Power)
      doc["phi1"] = {{"profile", "power"}, {"params", {{"alpha", p.alpha_small}, {"a3", p.a3}, {"a4", p.a4}}}};
    else
      doc["phi1"] = {{"profile", "piecewise_power"},
                     {"params",
                      {{"alpha_small", p.alpha_small}, {"alpha_large", p.alpha_large}, {"a3", p.a3}, {"a4", p.a4}}}};
    const auto& d = m.damp();
    json beta = d.truncated() ? json("inf") : json(d.beta);
    doc["psi1"] = {{"beta", beta}, {"gamma1", d.gamma1}, {"gamma2", d.gamma2}, {"a1", d.a1}, {"a2", d.a2}};
    doc["kappa1"] = m.kappa1();
    doc["kappa2"] = m.kappa2();
    doc["comparability_gamma"] = m.comparability_gamma();
    doc["normalization"] = m.normalization();
    if (m.anisotropy().size() > 0) doc["anisotropy"] = std::vector<double>(m.anisotropy().begin(), m.anisotropy().end());
  }
  const auto& cf = m.closed_form();
  switch (cf.kind) {
    case ClosedForm::Kind::Stable:
      doc["closed_form"] = {{"kind", "stable"}, {"alpha", cf.alpha}};
      break;
    case ClosedForm::Kind::Relativistic:
      doc["closed_form"] = {{"kind", "relativistic"}, {"alpha", cf.alpha}, {"mass", cf.mass}};
      break;
    case ClosedForm::Kind::Brownian:
      doc["closed_form"] = {{"kind", "brownian"}};
      break;
    default:
      break;
  }
  return doc;
}

}  // namespace levyheat
