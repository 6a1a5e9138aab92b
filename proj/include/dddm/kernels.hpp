#pragma once

#include "dddm/tensor.hpp"

namespace dddm::kernels {

// Every hot loop has a serial reference and an OpenMP variant. Both visit
// each output element's reduction in the same order, so results are
// bitwise identical and the serial path stays the oracle in tests.
enum class Exec { serial, parallel };

void set_default_exec(Exec e);
Exec default_exec();
int max_threads();

Tensor matmul(const Tensor& a, const Tensor& b, Exec e = default_exec());     // a b
Tensor matmul_tn(const Tensor& a, const Tensor& b, Exec e = default_exec());  // a^T b
Tensor matmul_nt(const Tensor& a, const Tensor& b, Exec e = default_exec());  // a b^T

}  // namespace dddm::kernels
