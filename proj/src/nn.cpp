#include "dddm/nn.hpp"

#include <cmath>

namespace dddm {

namespace {

Tensor uniform(std::size_t r, std::size_t c, double bound, Rng& rng) {
  Tensor t(r, c);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = bound * (2.0 * rng.uniform() - 1.0);
  return t;
}

Var activate(Var x, Activation a) { return a == Activation::silu ? ad::silu(x) : ad::tanh(x); }

}  // namespace

Linear::Linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng, bool bias) : has_bias_(bias) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  w_ = Parameter(name + ".W", uniform(in, out, bound, rng));
  if (bias) b_ = Parameter(name + ".b", uniform(1, out, bound, rng));
}

Var Linear::forward(Tape& tape, Var x) {
  Var y = ad::matmul(x, tape.param(w_));
  return has_bias_ ? ad::add(y, tape.param(b_)) : y;
}

void Linear::zero_init() {
  w_.value.fill(0.0);
  if (has_bias_) b_.value.fill(0.0);
}

void Linear::collect(std::vector<Parameter*>& out) {
  out.push_back(&w_);
  if (has_bias_) out.push_back(&b_);
}

SkipMlp::SkipMlp(const std::string& name, std::size_t in, std::size_t hidden, std::size_t out, Rng& rng,
                 Activation act)
    : l1_(name + ".l1", in, hidden, rng),
      l2_(name + ".l2", hidden, hidden, rng),
      l3_(name + ".l3", hidden, out, rng),
      skip_(name + ".skip", in, out, rng, false),
      act_(act) {
  l3_.zero_init();
  skip_.zero_init();
}

Var SkipMlp::forward(Tape& tape, Var x) {
  Var h = activate(l1_.forward(tape, x), act_);
  h = activate(l2_.forward(tape, h), act_);
  return ad::add(l3_.forward(tape, h), skip_.forward(tape, x));
}

void SkipMlp::collect(std::vector<Parameter*>& out) {
  l1_.collect(out);
  l2_.collect(out);
  l3_.collect(out);
  skip_.collect(out);
}

Embedding::Embedding(const std::string& name, std::size_t count, std::size_t dim, Rng& rng) {
  Tensor t(count, dim);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal();
  table_ = Parameter(name + ".table", std::move(t));
}

Var Embedding::forward(Tape& tape, const std::vector<std::size_t>& ids) {
  return ad::gather_rows(tape.param(table_), ids);
}

void Embedding::collect(std::vector<Parameter*>& out) { out.push_back(&table_); }

std::size_t parameter_count(const std::vector<Parameter*>& ps) {
  std::size_t n = 0;
  for (const Parameter* p : ps) n += p->value.size();
  return n;
}

}  // namespace dddm
