#include "dddm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <map>

#include "dddm/errors.hpp"
#include "dddm/io.hpp"

namespace dddm {

namespace {

template <class T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

void put_str32(std::string& out, const std::string& s) {
  put_le(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

void put_str64(std::string& out, const std::string& s) {
  put_le(out, static_cast<std::uint64_t>(s.size()));
  out += s;
}

void put_tensor(std::string& out, const Tensor& t) {
  put_le(out, static_cast<std::uint64_t>(t.rows()));
  put_le(out, static_cast<std::uint64_t>(t.cols()));
  for (std::size_t i = 0; i < t.size(); ++i) put_f64(out, t[i]);
}

class Reader {
 public:
  explicit Reader(const std::string& b) : b_(b) {}

  template <class T>
  T le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes(std::uint64_t n) {
    need(n);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  Tensor tensor() {
    const std::uint64_t r = le<std::uint64_t>(), c = le<std::uint64_t>();
    if (c != 0 && r > (b_.size() - pos_) / 8 / c) throw UsageError("checkpoint: block larger than file");
    Tensor t(r, c);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::bit_cast<double>(le<std::uint64_t>());
    return t;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > b_.size() - pos_) throw UsageError("checkpoint: truncated file");
  }
  const std::string& b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& c) {
  std::string out = "DDDM";
  put_le(out, kCheckpointVersion);
  put_str64(out, c.config_text);
  put_le(out, static_cast<std::uint32_t>(c.blocks.size()));
  for (const Checkpoint::Block& b : c.blocks) {
    put_str32(out, b.name);
    put_tensor(out, b.value);
  }
  put_le(out, c.optimizer_step);
  put_le(out, static_cast<std::uint32_t>(c.moments.size()));
  for (const Tensor& m : c.moments) put_tensor(out, m);
  put_le(out, c.epoch);
  put_str64(out, c.rng_state);
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.bytes(4) != "DDDM") throw UsageError("checkpoint: bad magic, not a DDDM checkpoint");
  const std::uint32_t version = r.le<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw UsageError("checkpoint: format version " + std::to_string(version) + " is not supported (expected " +
                     std::to_string(kCheckpointVersion) + ")");
  Checkpoint c;
  c.config_text = r.bytes(r.le<std::uint64_t>());
  const std::uint32_t nb = r.le<std::uint32_t>();
  for (std::uint32_t i = 0; i < nb; ++i) {
    Checkpoint::Block b;
    b.name = r.bytes(r.le<std::uint32_t>());
    b.value = r.tensor();
    c.blocks.push_back(std::move(b));
  }
  c.optimizer_step = r.le<std::uint64_t>();
  const std::uint32_t nm = r.le<std::uint32_t>();
  for (std::uint32_t i = 0; i < nm; ++i) c.moments.push_back(r.tensor());
  c.epoch = r.le<std::uint64_t>();
  c.rng_state = r.bytes(r.le<std::uint64_t>());
  if (!r.done()) throw UsageError("checkpoint: trailing bytes");
  return c;
}

void write_checkpoint(const std::string& path, const Checkpoint& c) { atomic_write(path, encode_checkpoint(c)); }

Checkpoint read_checkpoint(const std::string& path) { return decode_checkpoint(read_file(path)); }

Checkpoint capture(const std::vector<Parameter*>& params, const AdamW* opt, std::uint64_t epoch,
                   const std::string& rng_state, const std::string& config_text) {
  Checkpoint c;
  c.config_text = config_text;
  for (const Parameter* p : params) c.blocks.push_back({p->name, p->value});
  if (opt) {
    c.optimizer_step = opt->step_count();
    auto& o = const_cast<AdamW&>(*opt);
    for (const Tensor& m : o.first_moments()) c.moments.push_back(m);
    for (const Tensor& v : o.second_moments()) c.moments.push_back(v);
  }
  c.epoch = epoch;
  c.rng_state = rng_state;
  return c;
}

void restore(const Checkpoint& c, const std::vector<Parameter*>& params, AdamW* opt) {
  std::map<std::string, const Tensor*> by_name;
  for (const Checkpoint::Block& b : c.blocks) by_name[b.name] = &b.value;
  if (by_name.size() != params.size())
    throw TopologyError("checkpoint has " + std::to_string(by_name.size()) + " parameter blocks, model expects " +
                        std::to_string(params.size()));
  for (Parameter* p : params) {
    const auto it = by_name.find(p->name);
    if (it == by_name.end()) throw TopologyError("checkpoint lacks parameter block '" + p->name + "'");
    if (!it->second->same_shape(p->value) && !(p->name == "pitch.stats"))
      throw TopologyError("parameter '" + p->name + "' has shape " + it->second->shape_str() + " in checkpoint, model expects " +
                          p->value.shape_str());
  }
  for (Parameter* p : params) {
    p->value = *by_name[p->name];
    p->zero_grad();
  }
  if (!opt) return;
  if (c.moments.empty()) {
    opt->reset();
    return;
  }
  auto& m = opt->first_moments();
  auto& v = opt->second_moments();
  if (c.moments.size() != m.size() + v.size()) throw TopologyError("checkpoint optimizer state does not match the model");
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!c.moments[i].same_shape(m[i]) || !c.moments[m.size() + i].same_shape(v[i]))
      throw TopologyError("checkpoint optimizer moment shape mismatch");
    m[i] = c.moments[i];
    v[i] = c.moments[m.size() + i];
  }
  opt->set_step_count(c.optimizer_step);
}

}  // namespace dddm
