#pragma once

// Central-difference checks of tape gradients for every differentiable primitive.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "dddm/ops.hpp"
#include "dddm/rng.hpp"

namespace dddm::gradcheck {

inline Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Tensor t(r, c);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
  return t;
}

// Builds loss = sum(w * f(inputs)) with a fixed random projection w so that
// every output coordinate contributes, then compares tape gradients with
// central differences of the same scalar.
using Builder = std::function<Var(Tape&, std::vector<Var>&)>;

inline double scalar_loss(const Builder& build, const std::vector<Tensor>& inputs, const Tensor* weights, Tensor* w_out) {
  Tape tape(false);
  std::vector<Var> vs;
  for (const Tensor& t : inputs) vs.push_back(tape.constant(t));
  Var y = build(tape, vs);
  if (w_out) *w_out = Tensor(y.rows(), y.cols());
  double s = 0.0;
  for (std::size_t i = 0; i < y.value().size(); ++i) s += (weights ? (*weights)[i] : 1.0) * y.value()[i];
  return s;
}

inline double max_rel_error(const Builder& build, std::vector<Tensor> inputs, Rng& rng) {
  Tensor shape_probe;
  scalar_loss(build, inputs, nullptr, &shape_probe);
  Tensor w = random_tensor(shape_probe.rows(), shape_probe.cols(), rng);

  std::vector<Parameter> params;
  params.reserve(inputs.size());
  for (std::size_t k = 0; k < inputs.size(); ++k) params.emplace_back("in" + std::to_string(k), inputs[k]);
  {
    Tape tape;
    std::vector<Var> vs;
    for (Parameter& p : params) vs.push_back(tape.param(p));
    Var y = build(tape, vs);
    Var loss = ad::sum(ad::mul(y, tape.constant(w)));
    tape.backward(loss);
  }
  const double h = 1e-4;
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      std::vector<Tensor> plus = inputs, minus = inputs;
      plus[k][i] += h;
      minus[k][i] -= h;
      const double fd = (scalar_loss(build, plus, &w, nullptr) - scalar_loss(build, minus, &w, nullptr)) / (2 * h);
      const double an = params[k].grad[i];
      const double rel = std::fabs(fd - an) / std::max(1.0, std::max(std::fabs(fd), std::fabs(an)));
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

struct OpCase {
  const char* name;
  std::function<std::vector<Tensor>(Rng&)> make;
  Builder build;
};

inline std::vector<OpCase> op_cases() {
  return {
      {"matmul", [](Rng& r) { return std::vector<Tensor>{random_tensor(3, 4, r), random_tensor(4, 2, r)}; },
       [](Tape&, std::vector<Var>& v) { return ad::matmul(v[0], v[1]); }},
      {"add_same", [](Rng& r) { return std::vector<Tensor>{random_tensor(3, 4, r), random_tensor(3, 4, r)}; },
       [](Tape&, std::vector<Var>& v) { return ad::add(v[0], v[1]); }},
      {"add_row", [](Rng& r) { return std::vector<Tensor>{random_tensor(3, 4, r), random_tensor(1, 4, r)}; },
       [](Tape&, std::vector<Var>& v) { return ad::add(v[0], v[1]); }},
      {"sub_col", [](Rng& r) { return std::vector<Tensor>{random_tensor(3, 4, r), random_tensor(3, 1, r)}; },
       [](Tape&, std::vector<Var>& v) { return ad::sub(v[0], v[1]); }},
      {"mul_same", [](Rng& r) { return std::vector<Tensor>{random_tensor(3, 4, r), random_tensor(3, 4, r)}; },
       [](Tape&, std::vector<Var>& v) { return ad::mul(v[0], v[1]); }},
      {"mul_col", [](Rng& r) { return std::vector<Tensor>{random_tensor(3, 4, r), random_tensor(3, 1, r)}; },
       [](Tape&, std::vector<Var>& v) { return ad::mul(v[0], v[1]); }},
      {"mul_scalar", [](Rng& r) { return std::vector<Tensor>{random_tensor(3, 4, r), random_tensor(1, 1, r)}; },
       [](Tape&, std::vector<Var>& v) { return ad::mul(v[0], v[1]); }},
      {"scale", [](Rng& r) { return std::vector<Tensor>{random_tensor(2, 5, r)}; },
       [](Tape&, std::vector<Var>& v) { return ad::scale(v[0], -1.7); }},
      {"tanh", [](Rng& r) { return std::vector<Tensor>{random_tensor(3, 3, r)}; },
       [](Tape&, std::vector<Var>& v) { return ad::tanh(v[0]); }},
      {"sigmoid", [](Rng& r) { return std::vector<Tensor>{random_tensor(3, 3, r, 2.0)}; },
       [](Tape&, std::vector<Var>& v) { return ad::sigmoid(v[0]); }},
      {"silu", [](Rng& r) { return std::vector<Tensor>{random_tensor(3, 3, r, 2.0)}; },
       [](Tape&, std::vector<Var>& v) { return ad::silu(v[0]); }},
      {"concat_cols",
       [](Rng& r) { return std::vector<Tensor>{random_tensor(3, 2, r), random_tensor(3, 1, r), random_tensor(3, 4, r)}; },
       [](Tape&, std::vector<Var>& v) { return ad::concat_cols({v[0], v[1], v[2]}); }},
      {"mean_pool", [](Rng& r) { return std::vector<Tensor>{random_tensor(6, 3, r)}; },
       [](Tape&, std::vector<Var>& v) { return ad::mean_pool(v[0], 3); }},
      {"gather_rows", [](Rng& r) { return std::vector<Tensor>{random_tensor(5, 3, r)}; },
       [](Tape&, std::vector<Var>& v) { return ad::gather_rows(v[0], {4, 0, 4, 2}); }},
      {"sum", [](Rng& r) { return std::vector<Tensor>{random_tensor(3, 4, r)}; },
       [](Tape&, std::vector<Var>& v) { return ad::sum(v[0]); }},
      {"mean", [](Rng& r) { return std::vector<Tensor>{random_tensor(3, 4, r)}; },
       [](Tape&, std::vector<Var>& v) { return ad::mean(v[0]); }},
      {"l1_loss", [](Rng& r) { return std::vector<Tensor>{random_tensor(3, 4, r), random_tensor(3, 4, r)}; },
       [](Tape&, std::vector<Var>& v) { return ad::l1_loss(v[0], v[1]); }},
      {"mse_loss", [](Rng& r) { return std::vector<Tensor>{random_tensor(3, 4, r), random_tensor(3, 4, r)}; },
       [](Tape&, std::vector<Var>& v) { return ad::mse_loss(v[0], v[1]); }},
  };
}

}  // namespace dddm::gradcheck
