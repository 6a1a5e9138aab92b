#pragma once

#include <cstddef>
#include <vector>

#include "dddm/tape.hpp"

// Differentiable primitives. For binary elementwise ops the right operand may
// broadcast: same shape, 1 x cols (per row), rows x 1 (per column) or 1 x 1.
namespace dddm::ad {

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var tanh(Var a);
Var sigmoid(Var a);
Var silu(Var a);
Var concat_cols(const std::vector<Var>& parts);
// Averages consecutive groups of `group` rows: (g*n) x c -> n x c.
Var mean_pool(Var a, std::size_t group);
Var gather_rows(Var table, const std::vector<std::size_t>& index);
Var sum(Var a);
Var mean(Var a);
Var l1_loss(Var a, Var b);   // mean |a - b|
Var mse_loss(Var a, Var b);  // mean (a - b)^2

}  // namespace dddm::ad
