#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace dddm {

// Seeded generator addressed by (seed, stream). Distinct streams are
// statistically independent and can be handed to separate threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);

  double normal();
  double uniform();  // [0, 1)
  bool bernoulli(double p);
  std::uint64_t below(std::uint64_t n);  // uniform integer in [0, n)
  std::vector<std::size_t> permutation(std::size_t n);

  std::string save() const;
  void load(const std::string& state);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> uniform_;
};

}  // namespace dddm
