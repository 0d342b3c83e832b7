#pragma once

#include <functional>
#include <vector>

#include "scanet/ops.hpp"

namespace scanet {

// Compares reverse-mode gradients against central finite differences.
//
// builder re-runs the forward pass from the given leaf tensors and returns
// the resulting map; a non-scalar result is reduced to a scalar by summing
// its elements. The analytic side runs builder once under a tape.
//
// The numeric side perturbs each leaf element by +-step and evaluates
// `reference` — a scalar function of the leaves' current values. Callers
// supply an independent high-precision (double) implementation here; float
// rounding in the library forward otherwise dominates the difference
// quotient. When reference is null, the builder itself is used, reduced in
// double (adequate for coarse tolerances only).
//
// Returns the max over all leaf elements of
//   |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
double finite_diff_check(const std::vector<Tensor>& leaves,
                         const std::function<Tensor(Ctx&)>& builder, double step,
                         const std::function<double()>& reference = nullptr);

}  // namespace scanet
