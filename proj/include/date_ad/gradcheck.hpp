#pragma once

#include <functional>
#include <vector>

#include "date_ad/tape.hpp"

namespace date_ad::ad {

// Central-difference check of a scalar-valued graph against the tape's
// analytic gradients. `build` must rebuild the same deterministic graph on a
// fresh tape each call (dropout off). Returns the max relative error over
// `samples` randomly chosen parameter coordinates:
//   |analytic - numeric| / (|analytic| + |numeric| + 1e-8)
template <typename S>
double grad_check(const std::vector<Param<S>*>& params,
                  const std::function<VarId(Tape<S>&)>& build, int samples, double eps,
                  Rng& rng) {
  if (eps <= 0.0) throw InvalidArgument("grad_check: eps must be positive");

  for (auto* p : params) {
    p->grad = Mat<S>::zeros(p->value.rows, p->value.cols);
  }
  {
    Tape<S> tape;
    VarId loss = build(tape);
    if (!std::isfinite(static_cast<double>(tape.scalar(loss)))) {
      throw NumericError("grad_check: non-finite forward value");
    }
    tape.backward(loss);
    tape.accumulate_param_grads();
  }

  auto forward_value = [&]() {
    Tape<S> tape;
    return static_cast<double>(tape.scalar(build(tape)));
  };

  std::vector<std::pair<int, std::size_t>> coords;  // (param index, flat offset)
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    for (std::size_t off = 0; off < params[pi]->value.size(); ++off) {
      coords.push_back({static_cast<int>(pi), off});
    }
  }
  std::shuffle(coords.begin(), coords.end(), rng);
  const int n = std::min<int>(samples, static_cast<int>(coords.size()));

  double max_err = 0.0;
  for (int i = 0; i < n; ++i) {
    auto [pi, off] = coords[i];
    S& slot = params[pi]->value.v[off];
    const S saved = slot;
    slot = static_cast<S>(saved + eps);
    double fp = forward_value();
    slot = static_cast<S>(saved - eps);
    double fm = forward_value();
    slot = saved;

    const double numeric = (fp - fm) / (2.0 * eps);
    const double analytic = params[pi]->grad.v[off];
    const double err =
        std::abs(analytic - numeric) / (std::abs(analytic) + std::abs(numeric) + 1e-8);
    max_err = std::max(max_err, err);
  }
  return max_err;
}

}  // namespace date_ad::ad
