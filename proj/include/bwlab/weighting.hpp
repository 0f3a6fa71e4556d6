#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "bwlab/autodiff/tape.hpp"
#include "bwlab/nets.hpp"

namespace bwlab {

enum class Normalization { SumOne, MeanOne };

struct BatchWeights {
  std::vector<double> values;
  Normalization normalization = Normalization::MeanOne;

  double target_total() const {
    return normalization == Normalization::SumOne ? 1.0 : static_cast<double>(values.size());
  }

  /// Throws NumericalError unless non-negative with the declared total
  /// (to 1e-9 relative).
  void validate() const {
    double s = 0.0;
    for (double v : values) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw NumericalError("weights", "negative or non-finite batch weight");
      s += v;
    }
    const double t = target_total();
    if (std::abs(s - t) > 1e-9 * t) throw NumericalError("weights", "batch weights violate their normalization");
  }
};

inline BatchWeights batch_softmax(std::span<const double> logits, Normalization norm) {
  if (logits.empty()) throw std::invalid_argument("batch_softmax needs at least one logit");
  BatchWeights out{std::vector<double>(logits.size()), norm};
  double mx = -std::numeric_limits<double>::infinity();
  for (double l : logits) {
    if (!std::isfinite(l)) throw NumericalError("logits", "non-finite weight logit");
    mx = std::max(mx, l);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) total += out.values[i] = std::exp(logits[i] - mx);
  const double t = out.target_total();
  for (auto& v : out.values) v = t == 1.0 ? v / total : (t * v) / total;
  return out;
}

/// Differentiable version over an m x 1 (or length-m) logit column.
inline Var batch_softmax(Var logits, Normalization norm) {
  const double m = static_cast<double>(logits.shape()[0]);
  return ad::softmax(logits, 0, norm == Normalization::SumOne ? 1.0 : m);
}

struct ClipSchedule {
  double initial_ratio_bound = 3.0;
  double relax_factor = 1.5;
  std::size_t relax_every = 5000;

  void validate() const {
    if (!(initial_ratio_bound > 1.0)) throw std::invalid_argument("clip ratio bound must exceed 1");
    if (!(relax_factor >= 1.0)) throw std::invalid_argument("clip relax factor must be at least 1");
    if (relax_every == 0) throw std::invalid_argument("clip relax_every must be positive");
  }

  double bound_at(std::size_t step) const {
    return initial_ratio_bound * std::pow(relax_factor, static_cast<double>(step / relax_every));
  }
};

namespace detail {

/// Scale c such that clamp(w, c/r, c*r) sums to `total`; nullopt when nothing
/// needs clipping (max/min <= r^2).
inline std::optional<double> clip_center(std::span<const double> w, double r, double total) {
  if (!std::isfinite(r)) return std::nullopt;
  const auto [lo_it, hi_it] = std::minmax_element(w.begin(), w.end());
  const double wmin = *lo_it, wmax = *hi_it;
  if (wmax <= wmin * r * r) return std::nullopt;

  const auto clipped_sum = [&](double c) {
    double s = 0.0;
    for (double v : w) s += std::clamp(v, c / r, c * r);
    return s;
  };
  // f(c) is non-decreasing; f(wmin/r) = m*wmin <= total <= m*wmax = f(wmax*r).
  double lo = std::log(std::max(wmin, std::numeric_limits<double>::min()) / r), hi = std::log(wmax * r);
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (clipped_sum(std::exp(mid)) > total ? hi : lo) = mid;
  }
  double c = std::exp(0.5 * (lo + hi));
  // Solve exactly on the clipping pattern found by bisection.
  double free_sum = 0.0, coef = 0.0;
  for (double v : w) {
    if (v < c / r) coef += 1.0 / r;
    else if (v > c * r) coef += r;
    else free_sum += v;
  }
  if (coef > 0.0) {
    const double exact = (total - free_sum) / coef;
    if (exact > 0.0 && std::abs(clipped_sum(exact) - total) <= std::abs(clipped_sum(c) - total)) c = exact;
  }
  return c;
}

}  // namespace detail

/// Clips into [c/r, c*r] with c restoring the declared normalization. Order
/// is preserved and max/min <= r^2 afterwards.
inline BatchWeights clip(const BatchWeights& w, double r) {
  if (!(r >= 1.0)) throw std::invalid_argument("clip bound must be at least 1");
  const auto c = detail::clip_center(w.values, r, w.target_total());
  if (!c) return w;
  BatchWeights out = w;
  for (auto& v : out.values) v = std::clamp(v, *c / r, *c * r);
  return out;
}

inline BatchWeights clip(const BatchWeights& w, const ClipSchedule& schedule, std::size_t step) {
  return clip(w, schedule.bound_at(step));
}

/// Differentiable clip: w * mask + bounds, with c held constant. Clipped
/// entries pass no gradient.
inline Var clip(Var w, double r, Normalization norm) {
  if (!(r >= 1.0)) throw std::invalid_argument("clip bound must be at least 1");
  const auto& values = w.value().storage();
  const double total = norm == Normalization::SumOne ? 1.0 : static_cast<double>(values.size());
  const auto c = detail::clip_center(values, r, total);
  if (!c) return w;
  Tensor mask(w.shape(), 1.0), bounds(w.shape(), 0.0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < *c / r) {
      mask[i] = 0.0;
      bounds[i] = *c / r;
    } else if (values[i] > *c * r) {
      mask[i] = 0.0;
      bounds[i] = *c * r;
    }
  }
  auto* tape = w.tape();
  return w * tape->constant(std::move(mask)) + tape->constant(std::move(bounds));
}

// ---------------------------------------------------------------------------

/// Mean-one weights of the two sides of a joint batch, each an m x 1 column.
struct ComposedWeights {
  Var wx;
  Var wy;
};

/// Weights for x-side pairs (x, gxy) and y-side pairs (gyx, y):
///   Concat:    w_x = s(W([x, gxy])),            w_y = s(-W([gyx, y]))
///   OneSided:  w_x = s(W(x)),                   w_y = s(-W(gyx))
///   Composite: w_x = (s(W_x(x)) + s(-W_y(gxy)))/2,
///              w_y = (s(-W_x(gyx)) + s(W_y(y)))/2
/// with s the mean-one batch softmax.
inline ComposedWeights compose(WeightNetworks& nets, Var x, Var y, Var gxy, Var gyx, bool trainable) {
  const auto m = x.shape()[0];
  if (y.shape()[0] != m || gxy.shape()[0] != m || gyx.shape()[0] != m)
    throw ShapeError("batch", "compose needs equal batch sizes on both sides");
  auto& tape = *x.tape();
  const auto s = [](Var logits) { return batch_softmax(logits, Normalization::MeanOne); };
  switch (nets.strategy()) {
    case WeightStrategy::Concat: {
      auto& w = nets.primary();
      return {s(w.logits(tape, ad::concat_cols({x, gxy}), trainable)),
              s(-w.logits(tape, ad::concat_cols({gyx, y}), trainable))};
    }
    case WeightStrategy::OneSided: {
      auto& w = nets.primary();
      return {s(w.logits(tape, x, trainable)), s(-w.logits(tape, gyx, trainable))};
    }
    case WeightStrategy::Composite: {
      auto& wx = nets.primary();
      auto& wy = nets.secondary();
      Var a = s(wx.logits(tape, x, trainable)) + s(-wy.logits(tape, gxy, trainable));
      Var b = s(-wx.logits(tape, gyx, trainable)) + s(wy.logits(tape, y, trainable));
      return {ad::scale(a, 0.5), ad::scale(b, 0.5)};
    }
  }
  throw std::logic_error("unknown weight strategy");
}

/// Non-differentiable convenience form.
inline std::pair<BatchWeights, BatchWeights> compose(WeightNetworks& nets, const Tensor& x, const Tensor& y,
                                                     const Tensor& gxy, const Tensor& gyx) {
  Tape tape;
  auto w = compose(nets, tape.constant(x), tape.constant(y), tape.constant(gxy), tape.constant(gyx), false);
  return {BatchWeights{w.wx.value().storage(), Normalization::MeanOne},
          BatchWeights{w.wy.value().storage(), Normalization::MeanOne}};
}

/// p-side factors (1 + w_i)/2. The q side uses the same map on its own
/// weights v (obtained from negated logits, not reciprocals).
inline std::vector<double> midpoint_factors(const BatchWeights& w) {
  if (w.normalization != Normalization::MeanOne) throw std::invalid_argument("midpoint factors need mean-one weights");
  std::vector<double> out(w.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (1.0 + w.values[i]);
  return out;
}

inline Var midpoint_factors(Var w) { return ad::scale(w + 1.0, 0.5); }

}  // namespace bwlab
