#pragma once

#include <cmath>
#include <cstddef>

#include "curforge/error.hpp"
#include "curforge/learner/head.hpp"

namespace curforge {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  HeadParams m;
  HeadParams v;
  std::size_t step_count = 0;
  AdamConfig cfg;

  static AdamState for_head(const HeadParams& h, AdamConfig cfg = {}) {
    if (!(cfg.lr > 0.0)) throw Error(Errc::invalid_argument, "learning rate must be positive");
    return {HeadParams::zeros(h.classes(), h.dim()), HeadParams::zeros(h.classes(), h.dim()), 0, cfg};
  }
};

/// One bias-corrected Adam update of `h` in place. Throws on a non-finite gradient
/// before touching any state.
inline void adam_step(HeadParams& h, const HeadParams& grad, AdamState& st) {
  if (!h.same_shape(grad) || !h.same_shape(st.m) || !h.same_shape(st.v)) {
    throw Error(Errc::dimension_mismatch, "adam: parameter, gradient and moment shapes differ");
  }
  if (!grad.all_finite()) throw Error(Errc::non_finite, "adam: non-finite gradient");

  ++st.step_count;
  const auto& c = st.cfg;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(st.step_count));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(st.step_count));

  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
    p -= (c.lr * (m / bc1).array() / ((v / bc2).array().sqrt() + c.eps)).matrix();
  };
  update(h.W, grad.W, st.m.W, st.v.W);
  update(h.b, grad.b, st.m.b, st.v.b);
}

}  // namespace curforge
