#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dddm/adamw.hpp"
#include "dddm/tape.hpp"

namespace dddm {

constexpr std::uint32_t kCheckpointVersion = 1;

// In-memory image of a checkpoint file. Layout, all integers little-endian:
//   "DDDM" u32 version
//   u64 len, config text
//   u32 blocks; per block: u32 len, name, u64 rows, u64 cols, f64 data
//   u64 optimizer step; u32 count; per moment: u64 rows, u64 cols, f64 data
//   u64 epoch
//   u64 len, RNG state text
struct Checkpoint {
  std::string config_text;
  struct Block {
    std::string name;
    Tensor value;
  };
  std::vector<Block> blocks;
  std::uint64_t optimizer_step = 0;
  std::vector<Tensor> moments;  // first moments then second moments, parameter order
  std::uint64_t epoch = 0;
  std::string rng_state;
};

std::string encode_checkpoint(const Checkpoint& c);
Checkpoint decode_checkpoint(const std::string& bytes);  // UsageError on bad magic, version or truncation
void write_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint read_checkpoint(const std::string& path);

// Snapshot of params plus optimizer. opt may be null (moments left empty).
Checkpoint capture(const std::vector<Parameter*>& params, const AdamW* opt, std::uint64_t epoch,
                   const std::string& rng_state, const std::string& config_text);
// Copies blocks into params by name and shape; any difference in the set of
// names or shapes raises TopologyError. Moments are restored when opt is given
// and the checkpoint carries them.
void restore(const Checkpoint& c, const std::vector<Parameter*>& params, AdamW* opt);

}  // namespace dddm
