#pragma once

#include <string>
#include <vector>

#include "dddm/ops.hpp"
#include "dddm/rng.hpp"
#include "dddm/tape.hpp"

namespace dddm {

enum class Activation { tanh, silu };

// y = x W + b, W stored in x out. PyTorch-default uniform init.
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng, bool bias = true);

  Var forward(Tape& tape, Var x);
  void zero_init();
  void collect(std::vector<Parameter*>& out);
  std::size_t in() const { return w_.value.rows(); }
  std::size_t out() const { return w_.value.cols(); }

 private:
  Parameter w_;
  Parameter b_;
  bool has_bias_ = true;
};

// Three-layer perceptron plus a linear input->output skip path. The last
// layer and the skip start at zero so a fresh network outputs exactly 0.
class SkipMlp {
 public:
  SkipMlp() = default;
  SkipMlp(const std::string& name, std::size_t in, std::size_t hidden, std::size_t out, Rng& rng,
          Activation act = Activation::silu);

  Var forward(Tape& tape, Var x);
  void collect(std::vector<Parameter*>& out);
  std::size_t in() const { return l1_.in(); }
  std::size_t out() const { return l3_.out(); }

 private:
  Linear l1_, l2_, l3_, skip_;
  Activation act_ = Activation::silu;
};

class Embedding {
 public:
  Embedding() = default;
  Embedding(const std::string& name, std::size_t count, std::size_t dim, Rng& rng);

  Var forward(Tape& tape, const std::vector<std::size_t>& ids);
  void collect(std::vector<Parameter*>& out);

 private:
  Parameter table_;
};

std::size_t parameter_count(const std::vector<Parameter*>& ps);

}  // namespace dddm
