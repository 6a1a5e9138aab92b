#include "dddm/rng.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "dddm/errors.hpp"

namespace dddm {

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : uniform_(0.0, 1.0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  engine_.seed(seq);
}

double Rng::normal() { return normal_(engine_); }

double Rng::uniform() { return uniform_(engine_); }

bool Rng::bernoulli(double p) { return uniform() < p; }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw ContractError("Rng::below: empty range");
  return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  // Fisher-Yates with our own draws so the result does not depend on the
  // library's shuffle implementation.
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = below(i);
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

std::string Rng::save() const {
  std::ostringstream os;
  os << engine_ << ' ' << normal_ << ' ' << uniform_;
  return os.str();
}

void Rng::load(const std::string& state) {
  std::istringstream is(state);
  is >> engine_ >> normal_ >> uniform_;
  if (!is) throw UsageError("corrupt RNG state");
}

}  // namespace dddm
