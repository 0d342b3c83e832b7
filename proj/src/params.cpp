#include "scanet/params.hpp"

#include <stdexcept>

namespace scanet {

Tensor& ParamStore::insert(const std::string& name, Tensor t, bool learnable) {
    if (index_.count(name)) {
        throw std::invalid_argument("ParamStore: duplicate name '" + name + "'");
    }
    if (!t.defined()) {
        throw std::invalid_argument("ParamStore: undefined tensor for '" + name + "'");
    }
    t.set_requires_grad(learnable);
    index_[name] = entries_.size();
    entries_.push_back({name, std::move(t), learnable});
    return entries_.back().tensor;
}

Tensor& ParamStore::add_param(const std::string& name, Tensor t) {
    return insert(name, std::move(t), true);
}

Tensor& ParamStore::add_buffer(const std::string& name, Tensor t) {
    return insert(name, std::move(t), false);
}

Tensor& ParamStore::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("ParamStore: no entry named '" + name + "'");
    return entries_[it->second].tensor;
}

const Tensor& ParamStore::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("ParamStore: no entry named '" + name + "'");
    return entries_[it->second].tensor;
}

long long ParamStore::param_count() const {
    long long total = 0;
    for (const Entry& e : entries_) {
        if (e.learnable) total += static_cast<long long>(e.tensor.size());
    }
    return total;
}

void ParamStore::zero_grad() {
    for (Entry& e : entries_) {
        if (e.learnable) e.tensor.zero_grad();
    }
}

ParamStore ParamStore::clone() const {
    ParamStore out;
    for (const Entry& e : entries_) {
        Tensor t = e.tensor.clone();
        if (e.learnable) {
            out.add_param(e.name, std::move(t));
        } else {
            out.add_buffer(e.name, std::move(t));
        }
    }
    return out;
}

uint32_t Rng::next_u32() {
    state_ += 0x9E3779B97F4A7C15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z = z ^ (z >> 31);
    return static_cast<uint32_t>(z >> 32);
}

float Rng::uniform(float lo, float hi) {
    const float u = static_cast<float>(next_u32() >> 8) * (1.0f / 16777216.0f);
    return lo + (hi - lo) * u;
}

}  // namespace scanet
