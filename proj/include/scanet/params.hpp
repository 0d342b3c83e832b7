#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "scanet/tensor.hpp"

namespace scanet {

// Named, ordered collection of learnable tensors plus non-learnable buffers
// (batch-norm running stats). Iteration order is insertion order and stable
// across runs; names are unique. The unit of checkpointing and optimization.
class ParamStore {
public:
    struct Entry {
        std::string name;
        Tensor tensor;
        bool learnable = true;
    };

    Tensor& add_param(const std::string& name, Tensor t);
    Tensor& add_buffer(const std::string& name, Tensor t);

    bool contains(const std::string& name) const { return index_.count(name) != 0; }
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;

    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }
    size_t size() const { return entries_.size(); }

    // Total learnable elements; buffers excluded.
    long long param_count() const;

    void zero_grad();

    // Deep copy with fresh storage (same names/order/flags).
    ParamStore clone() const;

private:
    Tensor& insert(const std::string& name, Tensor t, bool learnable);

    std::vector<Entry> entries_;
    std::unordered_map<std::string, size_t> index_;
};

// Deterministic random stream (splitmix64). Draws are a fixed function of
// the seed, independent of standard-library distribution implementations,
// so initialization is bit-identical across platforms and runs.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed * 0x9E3779B97F4A7C15ull + 1ull) {}

    uint32_t next_u32();
    // Uniform in [lo, hi) with 24-bit resolution.
    float uniform(float lo, float hi);

private:
    uint64_t state_;
};

}  // namespace scanet
