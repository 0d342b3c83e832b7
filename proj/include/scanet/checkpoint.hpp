#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scanet/optim.hpp"
#include "scanet/params.hpp"

namespace scanet {

// On-disk layout (little-endian): magic "SCKP", u32 version = 1, u32 tensor
// count; per tensor: u16 name length, UTF-8 name, u8 rank, rank x u32 dims,
// u8 dtype, payload. dtype 0 = f32 (4 bytes/element), dtype 1 = u8 blob.
// Reserved names carry metadata inside the same stream: "__config__" (u8
// JSON blob), "__epoch__" (f32 scalar), "__adam__.t" and "__adam__.{m,v}.*"
// (optimizer state).
struct Checkpoint {
    struct Item {
        std::string name;
        std::vector<uint32_t> dims;
        uint8_t dtype = 0;
        std::vector<float> f32;    // dtype 0
        std::vector<uint8_t> raw;  // dtype 1
    };

    uint32_t version = 1;
    std::vector<Item> items;

    const Item* find(const std::string& name) const;
    std::string config_json() const;  // empty if absent
    int epoch() const;                // 0 if absent
};

Checkpoint make_checkpoint(const ParamStore& params, const std::string& config_json, int epoch,
                           const AdamState* opt_state = nullptr);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Copies every store entry from the checkpoint; missing names or shape
// mismatches are errors.
void load_into(const Checkpoint& ckpt, ParamStore& params);

// Copies the intersection of names (optionally restricted to a prefix);
// returns the number of tensors loaded. Shape mismatches on matched names
// are errors.
size_t load_matching(const Checkpoint& ckpt, ParamStore& params,
                     const std::string& prefix = "");

// Restores optimizer moments saved by make_checkpoint; returns false if the
// checkpoint has no optimizer state.
bool load_adam_state(const Checkpoint& ckpt, const ParamStore& params, AdamState& state);

}  // namespace scanet
