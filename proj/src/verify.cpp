#include "levyheat/verify.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "levyheat/errors.hpp"

namespace levyheat {

double boundary_factor(const ScaleFunction& sf, double t, double delta) {
  if (!(t > 0.0)) throw DomainError("boundary_factor: t must be positive");
  if (delta < 0.0) throw DomainError("boundary_factor: delta must be non-negative");
  if (delta == 0.0) return 0.0;
  return std::min(1.0, std::sqrt(sf.phi(delta) / t));
}

std::vector<GridPoint> sandwich_grid(int dim, const std::vector<double>& ts, const std::vector<double>& deltas,
                                     const std::vector<double>& rs) {
  std::vector<GridPoint> g;
  for (double delta : deltas)
    for (double t : ts)
      for (double r : rs) {
        GridPoint p;
        p.t = t;
        p.x = Vec::Zero(dim);
        p.x(dim - 1) = delta;
        p.y = p.x;
        p.y(0) += r;  // e_d in d = 1, along the boundary otherwise
        g.push_back(p);
      }
  return g;
}

std::vector<MCPoint> estimate_grid(const PathSimulator& sim, const KilledDensity& p,
                                   const std::vector<GridPoint>& grid) {
  std::vector<MCPoint> out(grid.size());
  std::vector<bool> done(grid.size(), false);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (done[i]) continue;
    std::vector<std::size_t> idx;
    std::vector<DirichletQuery> q;
    for (std::size_t j = i; j < grid.size(); ++j)
      if (!done[j] && grid[j].x == grid[i].x) {
        idx.push_back(j);
        q.push_back({grid[j].t, grid[j].y});
        done[j] = true;
      }
    const auto est = dirichlet_batch(sim, p, grid[i].x, q);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      auto& m = out[idx[k]];
      m.g = grid[idx[k]];
      m.p = est[k].value;
      m.stderr = est[k].stderr;
      m.exits = est[k].exits;
      m.n = est[k].n;
      m.negative = est[k].negative;
    }
  }
  return out;
}

namespace {

double last(const Vec& v) { return v(v.size() - 1); }

// Base rows: boundary factors, distances, regime tags.
std::vector<SandwichReport::Row> base_rows(const ScaleFunction& sf, const std::vector<MCPoint>& est,
                                           const VerifyOptions& opt) {
  std::vector<SandwichReport::Row> rows;
  for (const auto& m : est) {
    SandwichReport::Row r{};
    r.t = m.g.t;
    r.delta_x = std::max(0.0, last(m.g.x));
    r.delta_y = std::max(0.0, last(m.g.y));
    r.dist = (m.g.x - m.g.y).norm();
    r.p = m.p;
    r.stderr = m.stderr;
    r.bf_x = boundary_factor(sf, r.t, r.delta_x);
    r.bf_y = boundary_factor(sf, r.t, r.delta_y);
    r.time_regime = r.t < opt.T ? "t<T" : "t>=T";
    r.space_regime = r.dist <= 4.0 * opt.M1 * sf.phi_inv(r.t) ? "near" : "far";
    r.violation = false;
    rows.push_back(r);
  }
  return rows;
}

// min over candidates of max_i (p_i - k se_i)^+ / env_i.
template <class Env>
std::pair<double, std::size_t> fit_upper(const std::vector<SandwichReport::Row>& rows, std::size_t n_cand,
                                         const Env& env, double slack) {
  double best = kInf;
  std::size_t arg = 0;
  for (std::size_t c = 0; c < n_cand; ++c) {
    double worst = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double num = std::max(0.0, rows[i].p - slack * rows[i].stderr);
      if (num == 0.0) continue;
      const double e = env(c, i);
      worst = std::max(worst, e > 0.0 ? num / e : kInf);
    }
    if (worst < best) {
      best = worst;
      arg = c;
    }
  }
  return {best, arg};
}

// min over candidates of max_i env_i / (p_i + k se_i).
template <class Env>
std::pair<double, std::size_t> fit_lower(const std::vector<SandwichReport::Row>& rows, std::size_t n_cand,
                                         const Env& env, double slack) {
  double best = kInf;
  std::size_t arg = 0;
  for (std::size_t c = 0; c < n_cand; ++c) {
    double worst = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double e = env(c, i);
      if (!(e > 0.0)) continue;
      const double den = rows[i].p + slack * rows[i].stderr;
      worst = std::max(worst, den > 0.0 ? e / den : kInf);
    }
    if (worst < best) {
      best = worst;
      arg = c;
    }
  }
  return {best, arg};
}

// Joint choice of the upper and lower candidates: the narrowest fitted
// sandwich max_i c_u U_i c_l / L_i among pairs with both constants <= cap.
// Minimising each constant alone drifts to vacuous envelopes.
struct PairFit {
  std::size_t u = 0, l = 0;
  double cu = kInf, cl = kInf, width = kInf;
};
// Ties go to the pair with the smaller penalty (distance of the candidates from 1).
template <class EnvU, class EnvL, class Pen>
PairFit fit_pair(const std::vector<SandwichReport::Row>& rows, std::size_t nu, const EnvU& upper, std::size_t nl,
                 const EnvL& lower, double slack, double cap, const Pen& penalty) {
  std::vector<double> cu(nu), cl(nl);
  for (std::size_t c = 0; c < nu; ++c) cu[c] = fit_upper(rows, 1, [&](std::size_t, std::size_t i) { return upper(c, i); }, slack).first;
  for (std::size_t c = 0; c < nl; ++c) cl[c] = fit_lower(rows, 1, [&](std::size_t, std::size_t i) { return lower(c, i); }, slack).first;
  PairFit best;
  double best_pen = kInf;
  bool admissible = false;
  for (std::size_t a = 0; a < nu; ++a)
    for (std::size_t b = 0; b < nl; ++b) {
      const bool ok = cu[a] <= cap && cl[b] <= cap;
      if (admissible && !ok) continue;
      double spread = 0.0;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const double L = lower(b, i);
        if (!(L > 0.0)) continue;
        const double U = upper(a, i);
        spread = std::max(spread, U > 0.0 ? U / L : kInf);
      }
      const double w = std::max(cu[a], 1e-300) * std::max(cl[b], 1e-300) * spread;
      const double pen = penalty(a, b);
      const bool better = (ok && !admissible) || w < best.width * (1.0 - 1e-9) ||
                          (w <= best.width * (1.0 + 1e-9) && pen < best_pen);
      if (better) {
        best = {a, b, cu[a], cl[b], w};
        best_pen = pen;
        admissible = admissible || ok;
      }
    }
  return best;
}

void mark_upper(SandwichReport& rep, double slack, double cap) {
  const double c = std::min(rep.c1_upper, cap);
  for (auto& r : rep.rows)
    if (r.p - slack * r.stderr > c * r.upper_env * (1.0 + 1e-12)) r.violation = true;
}

void mark_lower(SandwichReport& rep, double slack, double cap) {
  const double c = std::min(rep.c1_lower, cap);
  for (auto& r : rep.rows)
    if (r.lower_env / c > (r.p + slack * r.stderr) * (1.0 + 1e-12)) r.violation = true;
}

void finish(SandwichReport& rep, const VerifyOptions& opt, bool two_sided) {
  // Coherence; the two fits may cross by the MC slack.
  if (two_sided)
    for (const auto& r : rep.rows)
      if (std::isfinite(rep.c1_lower) && r.lower_env / rep.c1_lower >
                                             (rep.c1_upper * r.upper_env + 2.0 * opt.slack * r.stderr) * (1.0 + 1e-9))
        rep.coherent = false;
  // Continuity across the near/far split along each (t, delta_x) line.
  std::map<std::pair<double, double>, std::vector<std::size_t>> lines;
  for (std::size_t i = 0; i < rep.rows.size(); ++i) lines[{rep.rows[i].t, rep.rows[i].delta_x}].push_back(i);
  for (auto& [key, idx] : lines) {
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return rep.rows[a].dist < rep.rows[b].dist; });
    for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
      const auto& a = rep.rows[idx[k]];
      const auto& b = rep.rows[idx[k + 1]];
      if (a.space_regime == b.space_regime) continue;
      if (!(a.p > 0.0 && b.p > 0.0 && a.upper_env > 0.0 && b.upper_env > 0.0)) continue;
      // Jump of the estimate beyond what either envelope allows locally.
      auto spread = [](double u, double v) { return std::max(u / v, v / u); };
      double allowed = spread(a.upper_env, b.upper_env);
      if (a.lower_env > 0.0 && b.lower_env > 0.0) allowed = std::max(allowed, spread(a.lower_env, b.lower_env));
      rep.continuity = std::max(rep.continuity, spread(a.p, b.p) / allowed);
    }
  }
  rep.continuity_ok = rep.continuity <= opt.continuity_factor;
  rep.c1 = two_sided ? std::max(rep.c1_upper, rep.c1_lower) : rep.c1_upper;
  for (std::size_t i = 0; i < rep.rows.size(); ++i)
    if (rep.rows[i].violation) rep.violations.push_back(i);
  rep.pass = rep.violations.empty() && rep.c1 <= opt.cap && rep.coherent && rep.continuity_ok;
  if (rep.c1 > opt.cap) rep.detail = "fitted constant above the cap";
  else if (!rep.coherent) rep.detail = "lower envelope above upper envelope";
  else if (!rep.continuity_ok) rep.detail = "jump across the regime split";
}

SandwichReport hk_report(const Envelopes& env, const std::vector<MCPoint>& est, const VerifyOptions& opt,
                         bool two_sided) {
  SandwichReport rep;
  rep.kind = two_sided ? "twosided" : "upper";
  rep.rows = base_rows(env.scale(), est, opt);
  const auto& cand = opt.candidates;
  if (cand.empty()) throw ConfigError("verify: empty shape-constant candidate list");
  // Envelope values per (candidate, point), computed once.
  auto table = [&](double scale) {
    std::vector<std::vector<double>> v(cand.size(), std::vector<double>(rep.rows.size()));
    for (std::size_t c = 0; c < cand.size(); ++c)
      for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const auto& r = rep.rows[i];
        v[c][i] = r.bf_x * r.bf_y == 0.0 ? 0.0 : r.bf_x * r.bf_y * env.hk(cand[c], opt.T, r.t, scale * r.dist);
      }
    return v;
  };
  const auto U = table(1.0 / 6.0);
  const auto L = table(1.5);
  const auto fit = fit_pair(
      rep.rows, cand.size(), [&](std::size_t c, std::size_t i) { return U[c][i]; }, cand.size(),
      [&](std::size_t c, std::size_t i) { return L[c][i]; }, opt.slack, opt.cap,
      [&](std::size_t a, std::size_t b) { return std::abs(std::log(cand[a])) + std::abs(std::log(cand[b])); });
  rep.c1_upper = fit.cu;
  rep.c1_lower = fit.cl;
  rep.a_upper = cand[fit.u];
  rep.a_lower = cand[fit.l];
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    rep.rows[i].upper_env = U[fit.u][i];
    rep.rows[i].lower_env = L[fit.l][i];
  }
  mark_upper(rep, opt.slack, opt.cap);
  if (two_sided) mark_lower(rep, opt.slack, opt.cap);
  finish(rep, opt, two_sided);
  return rep;
}

}  // namespace

SandwichReport verify_upper(const Envelopes& env, const std::vector<MCPoint>& est, const VerifyOptions& opt) {
  return hk_report(env, est, opt, false);
}

SandwichReport verify_twosided(const Envelopes& env, const std::vector<MCPoint>& est, const VerifyOptions& opt) {
  return hk_report(env, est, opt, true);
}

SandwichReport verify_conjecture_form(const KilledDensity& p, const ScaleFunction& sf,
                                      const std::vector<MCPoint>& est, const VerifyOptions& opt) {
  SandwichReport rep;
  rep.kind = "conjecture";
  rep.rows = base_rows(sf, est, opt);
  const auto& sc = opt.scale_candidates;
  if (sc.empty()) throw ConfigError("verify: empty scale candidate list");
  const std::size_t n = sc.size() * sc.size();
  // Candidate c -> (time scale, space scale); cached per point.
  std::vector<std::vector<double>> cache(n, std::vector<double>(rep.rows.size(), -1.0));
  auto env = [&](std::size_t c, std::size_t i) {
    double& v = cache[c][i];
    if (v < 0.0) {
      const auto& r = rep.rows[i];
      const auto& m = est[i];
      v = r.bf_x * r.bf_y == 0.0 ? 0.0
                                  : r.bf_x * r.bf_y * p(sc[c / sc.size()] * r.t, sc[c % sc.size()] * (m.g.y - m.g.x));
    }
    return v;
  };
  auto dist1 = [&](std::size_t c) {
    return std::abs(std::log(sc[c / sc.size()])) + std::abs(std::log(sc[c % sc.size()]));
  };
  const auto fit = fit_pair(rep.rows, n, env, n, env, opt.slack, opt.cap,
                            [&](std::size_t a, std::size_t b) { return dist1(a) + dist1(b); });
  const std::size_t iu = fit.u, il = fit.l;
  rep.c1_upper = fit.cu;
  rep.c1_lower = fit.cl;
  rep.t_upper = sc[iu / sc.size()];
  rep.s_upper = sc[iu % sc.size()];
  rep.t_lower = sc[il / sc.size()];
  rep.s_lower = sc[il % sc.size()];
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    rep.rows[i].upper_env = env(iu, i);
    rep.rows[i].lower_env = env(il, i);
  }
  mark_upper(rep, opt.slack, opt.cap);
  mark_lower(rep, opt.slack, opt.cap);
  finish(rep, opt, true);
  return rep;
}

// ---------------------------------------------------------------------------

SurvivalComparison survival_comparison(const PathSimulator& sim, const std::vector<double>& deltas,
                                       const std::vector<double>& ts) {
  if (sim.config().n_paths < 200) throw ConfigError("survival comparison: need at least 200 paths");
  if (ts.empty() || deltas.empty()) throw ConfigError("survival comparison: empty grid");
  const int d = sim.model().dim();
  ScaleFunction sf(sim.model(), ScaleFunction::Variant::Coordinate);
  SurvivalComparison out;
  const double tmax = *std::max_element(ts.begin(), ts.end());
  double lo = kInf, hi = 0.0, lo_h = kInf, hi_h = 0.0;
  for (double delta : deltas) {
    if (!(delta > 0.0)) throw DomainError("survival comparison: delta must be positive");
    Vec x = Vec::Zero(d);
    x(d - 1) = delta;
    const auto recs = sim.exit_batch(x, tmax);
    const std::size_t half = recs.size() / 2;
    for (double t : ts) {
      double alive = 0.0, alive_h = 0.0;
      for (std::size_t i = 0; i < recs.size(); ++i)
        if (recs[i].tau > t) {
          alive += 1.0;
          if (i < half) alive_h += 1.0;
        }
      SurvivalComparison::Row r{};
      r.delta = delta;
      r.t = t;
      r.estimate = alive / recs.size();
      r.stderr = std::sqrt(r.estimate * (1.0 - r.estimate) / (recs.size() - 1.0));
      r.reference = std::min(1.0, std::sqrt(sf.phi(delta) / t));
      r.ratio = r.estimate / r.reference;
      r.ratio_half = alive_h / half / r.reference;
      lo = std::min(lo, r.ratio);
      hi = std::max(hi, r.ratio);
      lo_h = std::min(lo_h, r.ratio_half);
      hi_h = std::max(hi_h, r.ratio_half);
      out.rows.push_back(r);
    }
  }
  out.C0 = lo > 0.0 ? std::max(hi, 1.0 / lo) : kInf;
  out.C0_half = lo_h > 0.0 ? std::max(hi_h, 1.0 / lo_h) : kInf;
  out.stable = std::isfinite(out.C0) && std::isfinite(out.C0_half) && std::abs(out.C0 / out.C0_half - 1.0) <= 0.2;
  out.pass = std::isfinite(out.C0) && out.stable;
  return out;
}

InteriorReport check_interior(const PathSimulator& sim, const KilledDensity& p, const std::vector<double>& ts,
                              double factor, double lo, double hi) {
  const int d = sim.model().dim();
  const ScaleFunction& sf = p.evaluator().scale();
  InteriorReport rep;
  rep.lo = lo;
  rep.hi = hi;
  rep.pass = !ts.empty();
  for (double t : ts) {
    const double s = sf.phi_inv(t);
    Vec x = Vec::Zero(d);
    x(d - 1) = factor * s;
    const auto e = dirichlet_batch(sim, p, x, {{t, x}}).front();
    InteriorReport::Row r{t, factor * s, e.value, e.stderr, e.value * std::pow(s, d)};
    rep.min_scaled = std::min(rep.min_scaled, r.scaled);
    rep.max_scaled = std::max(rep.max_scaled, r.scaled);
    if (!(r.scaled >= lo && r.scaled <= hi)) rep.pass = false;
    rep.rows.push_back(r);
  }
  return rep;
}

SmallTimeReport check_small_time(const PathSimulator& sim, const KilledDensity& p, const Vec& x, const Vec& y,
                                 const std::vector<double>& ts) {
  if ((x - y).norm() == 0.0) throw DomainError("small-time check: x and y must differ");
  std::vector<DirichletQuery> q;
  for (double t : ts) q.push_back({t, y});
  const auto est = dirichlet_batch(sim, p, x, q);
  const double jxy = jump_density(sim.model(), y - x);
  SmallTimeReport rep;
  rep.constant = kInf;
  rep.pass = !ts.empty() && jxy > 0.0;
  for (const auto& e : est) {
    SmallTimeReport::Row r{e.t, e.value, e.stderr, e.value / (e.t * jxy)};
    rep.constant = std::min(rep.constant, r.ratio);
    if (!(e.value > 3.0 * e.stderr)) rep.pass = false;
    rep.rows.push_back(r);
  }
  if (!(rep.constant > 0.0)) rep.pass = false;
  return rep;
}

TailReport check_tail_bound(const PathSimulator& sim, const ScaleFunction& sf, const std::vector<double>& ts,
                            const std::vector<double>& rs, double cap) {
  TailReport rep;
  rep.cap = cap;
  for (double t : ts) {
    const auto pts = sim.endpoint_batch(t);
    for (double r : rs) {
      double hit = 0.0;
      for (const auto& v : pts) hit += v.norm() > r ? 1.0 : 0.0;
      TailReport::Row row{};
      row.t = t;
      row.r = r;
      row.estimate = hit / pts.size();
      row.stderr = std::sqrt(row.estimate * (1.0 - row.estimate) / std::max<double>(1.0, pts.size() - 1.0));
      row.bound = t / sf.phi(r);
      rep.c = std::max(rep.c, std::max(0.0, row.estimate - 3.0 * row.stderr) / row.bound);
      rep.rows.push_back(row);
    }
  }
  rep.pass = !rep.rows.empty() && rep.c <= cap;
  return rep;
}

VanishingReport check_vanishing(const std::vector<VanishingRow>& rows) {
  VanishingReport rep;
  rep.rows = rows;
  rep.pass = rows.size() >= 2;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].H > rows[i - 1].H + 3.0 * std::hypot(rows[i].stderr, rows[i - 1].stderr)) rep.pass = false;
  if (rows.size() >= 2 && !(rows.back().H < rows.front().H - 3.0 * std::hypot(rows.back().stderr, rows.front().stderr)))
    rep.pass = false;
  return rep;
}

HKCReport check_HKC(const DensityEvaluator& ev, const std::vector<double>& ts, const std::vector<double>& rs,
                    const std::vector<double>& candidates, double cap) {
  const auto& m = ev.model();
  if (!m.isotropic()) throw ConfigError("HKC check needs an isotropic model");
  const int d = m.dim();
  auto at = [&](double t, double r) {
    Vec x = Vec::Zero(d);
    x(0) = r;
    return ev(t, x);
  };
  HKCReport rep;
  rep.cap = cap;
  // c from a power-of-2 ladder; among admissible triples the one nearest (1, 1, 1).
  double best_pen = kInf;
  for (double C1 : candidates)
    for (double C2 : candidates) {
      double worst = 0.0;
      for (double t : ts)
        for (double rx : rs)
          for (double ry : rs) {
            if (ry > rx) continue;
            const double den = at(C1 * t, C2 * ry);
            worst = std::max(worst, den > 0.0 ? at(t, rx) / den : kInf);
          }
      if (!std::isfinite(worst)) continue;
      const double c = std::ldexp(1.0, static_cast<int>(std::ceil(std::log2(std::max(worst * (1.0 - 1e-9), 1e-3)))));
      const double pen = std::abs(std::log(c)) + std::abs(std::log(C1)) + std::abs(std::log(C2));
      if (pen < best_pen) {
        best_pen = pen;
        rep.c = c;
        rep.C1 = C1;
        rep.C2 = C2;
        rep.ratio_max = worst;
      }
    }
  for (double t : ts)
    for (double rx : rs)
      for (double ry : rs)
        if (ry <= rx) rep.rows.push_back({t, rx, ry, at(t, rx) / at(rep.C1 * t, rep.C2 * ry)});
  rep.pass = rep.c <= cap;
  return rep;
}

}  // namespace levyheat
