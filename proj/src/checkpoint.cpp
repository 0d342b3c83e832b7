#include "scanet/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace scanet {

namespace {

constexpr char kMagic[4] = {'S', 'C', 'K', 'P'};
constexpr uint32_t kVersion = 1;

void put_u16(std::string& out, uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

struct Reader {
    const uint8_t* p;
    size_t size;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > size) throw std::runtime_error("checkpoint truncated");
    }
    uint8_t u8() {
        need(1);
        return p[pos++];
    }
    uint16_t u16() {
        need(2);
        const uint16_t v = static_cast<uint16_t>(p[pos] | (p[pos + 1] << 8));
        pos += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    void bytes(void* dst, size_t n) {
        need(n);
        std::memcpy(dst, p + pos, n);
        pos += n;
    }
};

uint64_t dim_product(const std::vector<uint32_t>& dims) {
    uint64_t n = 1;
    for (uint32_t d : dims) n *= d;
    return n;
}

Checkpoint::Item tensor_item(const std::string& name, const Tensor& t) {
    Checkpoint::Item item;
    item.name = name;
    item.dims = {static_cast<uint32_t>(t.n()), static_cast<uint32_t>(t.c()),
                 static_cast<uint32_t>(t.h()), static_cast<uint32_t>(t.w())};
    item.dtype = 0;
    item.f32.assign(t.data(), t.data() + t.size());
    return item;
}

}  // namespace

const Checkpoint::Item* Checkpoint::find(const std::string& name) const {
    for (const Item& it : items) {
        if (it.name == name) return &it;
    }
    return nullptr;
}

std::string Checkpoint::config_json() const {
    const Item* it = find("__config__");
    if (!it) return {};
    return std::string(it->raw.begin(), it->raw.end());
}

int Checkpoint::epoch() const {
    const Item* it = find("__epoch__");
    if (!it || it->f32.empty()) return 0;
    return static_cast<int>(it->f32[0]);
}

Checkpoint make_checkpoint(const ParamStore& params, const std::string& config_json, int epoch,
                           const AdamState* opt_state) {
    Checkpoint ckpt;
    if (!config_json.empty()) {
        Checkpoint::Item cfg;
        cfg.name = "__config__";
        cfg.dims = {static_cast<uint32_t>(config_json.size())};
        cfg.dtype = 1;
        cfg.raw.assign(config_json.begin(), config_json.end());
        ckpt.items.push_back(std::move(cfg));
    }
    {
        Checkpoint::Item ep;
        ep.name = "__epoch__";
        ep.dims = {1};
        ep.dtype = 0;
        ep.f32 = {static_cast<float>(epoch)};
        ckpt.items.push_back(std::move(ep));
    }
    for (const auto& e : params.entries()) {
        ckpt.items.push_back(tensor_item(e.name, e.tensor));
    }
    if (opt_state) {
        Checkpoint::Item t_item;
        t_item.name = "__adam__.t";
        t_item.dims = {1};
        t_item.dtype = 0;
        t_item.f32 = {static_cast<float>(opt_state->t)};
        ckpt.items.push_back(std::move(t_item));
        // Moments are kept in double in memory; the wire format narrows to f32.
        size_t slot = 0;
        for (const auto& e : params.entries()) {
            if (!e.learnable) continue;
            for (const char* kind : {"m", "v"}) {
                Checkpoint::Item it;
                it.name = std::string("__adam__.") + kind + "." + e.name;
                it.dims = {static_cast<uint32_t>(e.tensor.n()), static_cast<uint32_t>(e.tensor.c()),
                           static_cast<uint32_t>(e.tensor.h()), static_cast<uint32_t>(e.tensor.w())};
                it.dtype = 0;
                const auto& src = kind[0] == 'm' ? opt_state->m[slot] : opt_state->v[slot];
                it.f32.reserve(src.size());
                for (double v : src) it.f32.push_back(static_cast<float>(v));
                ckpt.items.push_back(std::move(it));
            }
            ++slot;
        }
    }
    return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, ckpt.version);
    put_u32(out, static_cast<uint32_t>(ckpt.items.size()));
    for (const auto& item : ckpt.items) {
        if (item.name.size() > 0xFFFF) throw std::invalid_argument("checkpoint name too long");
        put_u16(out, static_cast<uint16_t>(item.name.size()));
        out.append(item.name);
        out.push_back(static_cast<char>(item.dims.size()));
        for (uint32_t d : item.dims) put_u32(out, d);
        out.push_back(static_cast<char>(item.dtype));
        if (item.dtype == 0) {
            if (item.f32.size() != dim_product(item.dims)) {
                throw std::invalid_argument("checkpoint item '" + item.name + "' size mismatch");
            }
            for (float v : item.f32) {
                uint32_t bits;
                std::memcpy(&bits, &v, 4);
                put_u32(out, bits);
            }
        } else if (item.dtype == 1) {
            if (item.raw.size() != dim_product(item.dims)) {
                throw std::invalid_argument("checkpoint item '" + item.name + "' size mismatch");
            }
            out.append(reinterpret_cast<const char*>(item.raw.data()), item.raw.size());
        } else {
            throw std::invalid_argument("checkpoint item '" + item.name + "' has unknown dtype");
        }
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write checkpoint '" + path + "'");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("short write to checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint '" + path + "'");
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
    Reader r{buf.data(), buf.size()};

    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("'" + path + "' is not a checkpoint (bad magic)");
    }
    Checkpoint ckpt;
    ckpt.version = r.u32();
    if (ckpt.version != kVersion) {
        throw std::runtime_error("checkpoint '" + path + "' has unsupported version " +
                                 std::to_string(ckpt.version));
    }
    const uint32_t count = r.u32();
    ckpt.items.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        Checkpoint::Item item;
        const uint16_t name_len = r.u16();
        item.name.resize(name_len);
        r.bytes(item.name.data(), name_len);
        const uint8_t rank = r.u8();
        item.dims.resize(rank);
        for (uint8_t d = 0; d < rank; ++d) item.dims[d] = r.u32();
        item.dtype = r.u8();
        const uint64_t numel = dim_product(item.dims);
        if (item.dtype == 0) {
            item.f32.resize(numel);
            for (uint64_t j = 0; j < numel; ++j) {
                const uint32_t bits = r.u32();
                std::memcpy(&item.f32[j], &bits, 4);
            }
        } else if (item.dtype == 1) {
            item.raw.resize(numel);
            r.bytes(item.raw.data(), numel);
        } else {
            throw std::runtime_error("checkpoint '" + path + "' item '" + item.name +
                                     "' has unknown dtype " + std::to_string(item.dtype));
        }
        ckpt.items.push_back(std::move(item));
    }
    return ckpt;
}

namespace {

void copy_item_into(const Checkpoint::Item& item, Tensor& t) {
    const std::vector<uint32_t> want = {static_cast<uint32_t>(t.n()), static_cast<uint32_t>(t.c()),
                                        static_cast<uint32_t>(t.h()), static_cast<uint32_t>(t.w())};
    if (item.dtype != 0 || item.dims != want) {
        throw std::runtime_error("checkpoint tensor '" + item.name +
                                 "' does not match model shape " + to_string(t.shape()));
    }
    std::copy(item.f32.begin(), item.f32.end(), t.data());
}

}  // namespace

void load_into(const Checkpoint& ckpt, ParamStore& params) {
    for (auto& e : params.entries()) {
        const Checkpoint::Item* item = ckpt.find(e.name);
        if (!item) {
            throw std::runtime_error("checkpoint is missing tensor '" + e.name + "'");
        }
        copy_item_into(*item, e.tensor);
    }
}

size_t load_matching(const Checkpoint& ckpt, ParamStore& params, const std::string& prefix) {
    size_t loaded = 0;
    for (auto& e : params.entries()) {
        if (!prefix.empty() && e.name.rfind(prefix, 0) != 0) continue;
        const Checkpoint::Item* item = ckpt.find(e.name);
        if (!item) continue;
        copy_item_into(*item, e.tensor);
        ++loaded;
    }
    return loaded;
}

bool load_adam_state(const Checkpoint& ckpt, const ParamStore& params, AdamState& state) {
    const Checkpoint::Item* t_item = ckpt.find("__adam__.t");
    if (!t_item || t_item->f32.empty()) return false;
    state = AdamState::create(params);
    state.t = static_cast<long long>(t_item->f32[0]);
    size_t slot = 0;
    for (const auto& e : params.entries()) {
        if (!e.learnable) continue;
        const Checkpoint::Item* m_item = ckpt.find("__adam__.m." + e.name);
        const Checkpoint::Item* v_item = ckpt.find("__adam__.v." + e.name);
        if (!m_item || !v_item) {
            throw std::runtime_error("checkpoint optimizer state is missing moments for '" +
                                     e.name + "'");
        }
        if (m_item->f32.size() != e.tensor.size() || v_item->f32.size() != e.tensor.size()) {
            throw std::runtime_error("checkpoint optimizer moments for '" + e.name +
                                     "' have the wrong size");
        }
        state.m[slot].assign(m_item->f32.begin(), m_item->f32.end());
        state.v[slot].assign(v_item->f32.begin(), v_item->f32.end());
        ++slot;
    }
    return true;
}

}  // namespace scanet
