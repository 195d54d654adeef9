#pragma once

// Adaptive Gauss-Kronrod quadrature, Wynn epsilon acceleration and a
// zero-partition integrator for oscillatory tails. Header-only so the
// integrands inline at the call sites that run inside Monte Carlo loops.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

#include "levyheat/errors.hpp"

namespace levyheat::quad {

struct Options {
  double abs_tol = 1e-15;
  double rel_tol = 1e-11;
  int max_depth = 40;
  std::size_t max_intervals = 2000;
  bool throw_on_failure = true;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
  bool converged = true;
};

namespace detail {

// 7-point Gauss / 15-point Kronrod nodes on [-1, 1].
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  int depth;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk15(F& f, double a, double b, int depth) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double fsum = f(center - dx) + f(center + dx);
    kronrod += kWgk[j] * fsum;
    if (j % 2 == 1) gauss += kWg[j / 2] * fsum;
  }
  kronrod *= half;
  gauss *= half;
  const double err = std::abs(kronrod - gauss);
  const double roundoff = 50.0 * std::numeric_limits<double>::epsilon() * std::abs(kronrod);
  return {a, b, kronrod, std::max(err, roundoff), depth};
}

}  // namespace detail

// Globally adaptive G7K15 on a finite interval.
template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
  Result out;
  if (a == b) return out;
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  std::priority_queue<detail::Segment> heap;
  std::vector<detail::Segment> frozen;  // hit max depth, not refined further
  auto first = detail::gk15(f, a, b, 0);
  out.evaluations = 15;
  double total = first.value;
  double total_err = first.error;
  heap.push(first);
  std::vector<double> history{total};
  while (!heap.empty()) {
    const double target = std::max(opt.abs_tol, opt.rel_tol * std::abs(total));
    if (total_err <= target) break;
    if (heap.size() + frozen.size() >= opt.max_intervals) {
      out.converged = false;
      break;
    }
    auto worst = heap.top();
    heap.pop();
    if (worst.depth >= opt.max_depth) {
      frozen.push_back(worst);
      continue;
    }
    const double mid = 0.5 * (worst.a + worst.b);
    auto left = detail::gk15(f, worst.a, mid, worst.depth + 1);
    auto right = detail::gk15(f, mid, worst.b, worst.depth + 1);
    out.evaluations += 30;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    history.push_back(total);
  }
  if (heap.empty() && !frozen.empty()) {
    const double target = std::max(opt.abs_tol, opt.rel_tol * std::abs(total));
    out.converged = total_err <= target * 10.0;
  }
  // Recompute from the segment list to shed accumulated cancellation error.
  double sum = 0.0, err = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  for (const auto& s : frozen) {
    sum += s.value;
    err += s.error;
  }
  out.value = sign * sum;
  out.error = err;
  if (!out.converged && opt.throw_on_failure) {
    std::ostringstream msg;
    msg << "adaptive quadrature on [" << a << ", " << b << "] did not converge: estimate " << sum
        << " +- " << err;
    if (history.size() > 8) history.erase(history.begin(), history.end() - 8);
    throw QuadratureError(msg.str(), history);
  }
  return out;
}

// Wynn epsilon algorithm over a sliding window of partial sums.
class WynnEpsilon {
 public:
  explicit WynnEpsilon(std::size_t window = 40) : window_(window) {}

  void push(double partial_sum) {
    terms_.push_back(partial_sum);
    if (terms_.size() > window_) terms_.erase(terms_.begin());
    estimates_.push_back(extrapolate());
  }

  double estimate() const { return estimates_.empty() ? 0.0 : estimates_.back(); }

  // Spread of the last three extrapolated values; +inf until three exist.
  double error() const {
    const std::size_t n = estimates_.size();
    if (n < 3) return std::numeric_limits<double>::infinity();
    const double e0 = estimates_[n - 1], e1 = estimates_[n - 2], e2 = estimates_[n - 3];
    return std::abs(e0 - e1) + std::abs(e0 - e2);
  }

  std::size_t size() const { return estimates_.size(); }
  const std::vector<double>& terms() const { return terms_; }

 private:
  double extrapolate() const {
    const std::size_t n = terms_.size();
    if (n < 3) return terms_.back();
    // prev = column k-1, cur = column k; entries indexed by start position.
    std::vector<double> prev(n + 1, 0.0);
    std::vector<double> cur(terms_.begin(), terms_.end());
    double best = terms_.back();
    for (std::size_t k = 1; k < n; ++k) {
      std::vector<double> next(n - k);
      for (std::size_t i = 0; i + k < n; ++i) {
        const double diff = cur[i + 1] - cur[i];
        if (diff == 0.0 || !std::isfinite(diff)) return (k % 2 == 1) ? cur[i + 1] : best;
        next[i] = prev[i + 1] + 1.0 / diff;
      }
      prev = std::move(cur);
      cur = std::move(next);
      if (k % 2 == 0 && !cur.empty()) {
        if (!std::isfinite(cur.back())) return best;
        best = cur.back();
      }
    }
    return best;
  }

  std::size_t window_;
  std::vector<double> terms_;
  std::vector<double> estimates_;
};

struct PartitionOptions {
  Options inner;                    // per-piece quadrature controls
  std::size_t max_pieces = 200000;  // hard cap on pieces summed
  std::size_t accelerate_after = 6;
  double abs_tol = 1e-15;
  double rel_tol = 1e-10;
  // Also accept a Wynn estimate on a finite range whose far end is
  // negligible (e.g. a cutoff where the integrand has decayed).
  bool accelerate_finite = false;
  // Consecutive pieces that must meet the tolerance before a Wynn estimate is accepted.
  int confirmations = 1;
  // Subdivision cap per piece; pieces are single arcs, so more only chases
  // round-off in the kernel argument.
  std::size_t piece_max_intervals = 64;
  // No extrapolation before the pieces pass this point (e.g. a kink of f).
  double accelerate_from = -std::numeric_limits<double>::infinity();
};

// Integrate f over [a, end) using pieces [b_k, b_{k+1}] from a breakpoint
// generator (typically zeros of an oscillating kernel). Pieces are summed
// directly until a finite `end` is reached; for end = +inf, Wynn epsilon on
// the partial sums decides convergence.
template <class F, class Breaks>
Result integrate_partitioned(F&& f, Breaks&& breakpoint, double a, double end,
                             const PartitionOptions& opt = {}) {
  Result out;
  WynnEpsilon wynn;
  double partial = 0.0;
  double lo = a;
  double max_piece = 0.0;
  int confirmed = 0;
  Options inner = opt.inner;
  inner.throw_on_failure = false;
  inner.max_intervals = std::min(inner.max_intervals, opt.piece_max_intervals);
  for (std::size_t k = 0; k < opt.max_pieces; ++k) {
    double hi = breakpoint(k);
    if (!(hi > lo)) continue;
    const bool last = hi >= end;
    if (last) hi = end;
    auto piece = integrate(f, lo, hi, inner);
    out.evaluations += piece.evaluations;
    out.error += piece.error;
    partial += piece.value;
    max_piece = std::max(max_piece, std::abs(piece.value));
    lo = hi;
    if (last) {
      out.value = partial;
      return out;
    }
    wynn.push(partial);
    // Extrapolation models an infinite tail; finite ranges are summed out.
    if ((std::isinf(end) || opt.accelerate_finite) && k + 1 >= opt.accelerate_after && wynn.size() >= 3 &&
        lo >= opt.accelerate_from) {
      const double est = wynn.estimate();
      const double tol = std::max(opt.abs_tol, opt.rel_tol * std::max(std::abs(est), 1e-3 * max_piece));
      confirmed = wynn.error() <= tol ? confirmed + 1 : 0;
      if (confirmed >= opt.confirmations) {
        out.value = est;
        out.error += wynn.error();
        return out;
      }
    }
  }
  out.converged = false;
  out.value = wynn.estimate();
  if (opt.inner.throw_on_failure) {
    std::ostringstream msg;
    msg << "oscillatory quadrature did not converge after " << opt.max_pieces
        << " pieces; extrapolated " << out.value << ", last partial " << partial;
    std::vector<double> tail = wynn.terms();
    if (tail.size() > 8) tail.erase(tail.begin(), tail.end() - 8);
    throw QuadratureError(msg.str(), tail);
  }
  return out;
}

}  // namespace levyheat::quad
