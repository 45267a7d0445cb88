#pragma once

#include "pblab/moduli.hpp"
#include "pblab/solver.hpp"

namespace pblab::moduli {

// omega_f(r) = max over grid centers of r^{-1/(n+1)} (sum |f|^{n+1} dV)^{1/(n+1)}
// over Q_r(center), monotone envelope applied. Radii below 4 grid spacings are
// rejected. Center strides bound the sup-search cost.
SampledModulus omega_f_from_field(const solver::GridFunction& f, const std::vector<double>& radii,
                                  int center_stride_space = 2, int center_stride_time = 4);

}  // namespace pblab::moduli
