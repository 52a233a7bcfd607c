#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "textctrl/core/tape.hpp"

namespace textctrl {

// Binary checkpoint: params in name order, optional Adam moments for resume.
// Layout: magic, has_adam:u8, adam_step:u64, count:u32, then per param
// {name_len:u32, name, ndim:u32, dims:i32[], value:f32[], (m, v):f32[]}.

namespace detail {

inline void wr(std::FILE* f, const void* p, size_t n) {
    TC_CHECK(std::fwrite(p, 1, n, f) == n, "checkpoint write failed");
}
inline void rd(std::FILE* f, void* p, size_t n) {
    TC_CHECK(std::fread(p, 1, n, f) == n, "checkpoint read failed (truncated?)");
}

} // namespace detail

inline void save_checkpoint(const std::string& path, const ParamStore& ps,
                            bool with_adam = false, uint64_t adam_step = 0) {
    std::string tmp = path + ".tmp";
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    TC_CHECK(f, "cannot open " + tmp + " for writing");
    const char magic[8] = {'T', 'C', 'C', 'K', 'P', 'T', '0', '1'};
    detail::wr(f, magic, 8);
    uint8_t ha = with_adam ? 1 : 0;
    detail::wr(f, &ha, 1);
    detail::wr(f, &adam_step, 8);
    uint32_t count = uint32_t(ps.size());
    detail::wr(f, &count, 4);
    for (const auto& [name, p] : ps) {
        uint32_t nl = uint32_t(name.size());
        detail::wr(f, &nl, 4);
        detail::wr(f, name.data(), nl);
        uint32_t nd = uint32_t(p.value.shape().ndim());
        detail::wr(f, &nd, 4);
        for (int i = 0; i < int(nd); ++i) {
            int32_t d = p.value.shape()[i];
            detail::wr(f, &d, 4);
        }
        detail::wr(f, p.value.data(), sizeof(float) * size_t(p.value.numel()));
        if (with_adam) {
            TC_CHECK(p.adam_m.defined() && p.adam_v.defined(),
                     "param " + name + " has no optimizer state");
            detail::wr(f, p.adam_m.data(), sizeof(float) * size_t(p.adam_m.numel()));
            detail::wr(f, p.adam_v.data(), sizeof(float) * size_t(p.adam_v.numel()));
        }
    }
    std::fclose(f);
    TC_CHECK(std::rename(tmp.c_str(), path.c_str()) == 0, "cannot move checkpoint into place");
}

// Fills `ps` with loaded params (replacing same-named entries is an error:
// load into a fresh store, then build the model over it). Returns the saved
// Adam step, 0 when moments were not stored.
inline uint64_t load_checkpoint(const std::string& path, ParamStore& ps) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    TC_CHECK(f, "cannot open checkpoint " + path);
    char magic[8];
    detail::rd(f, magic, 8);
    TC_CHECK(std::memcmp(magic, "TCCKPT01", 8) == 0, "bad checkpoint magic in " + path);
    uint8_t ha = 0;
    uint64_t step = 0;
    detail::rd(f, &ha, 1);
    detail::rd(f, &step, 8);
    uint32_t count = 0;
    detail::rd(f, &count, 4);
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t nl = 0;
        detail::rd(f, &nl, 4);
        std::string name(nl, '\0');
        detail::rd(f, name.data(), nl);
        uint32_t nd = 0;
        detail::rd(f, &nd, 4);
        std::vector<int> dims(nd);
        for (uint32_t k = 0; k < nd; ++k) {
            int32_t d = 0;
            detail::rd(f, &d, 4);
            dims[k] = d;
        }
        TC_CHECK(!ps.has(name), "checkpoint param " + name + " already present in store");
        Param& p = ps.create(name, Shape(dims), [](Tensor&, Rng&) {}, 0);
        detail::rd(f, p.value.data(), sizeof(float) * size_t(p.value.numel()));
        if (ha) {
            p.adam_m = Tensor(p.value.shape());
            p.adam_v = Tensor(p.value.shape());
            detail::rd(f, p.adam_m.data(), sizeof(float) * size_t(p.adam_m.numel()));
            detail::rd(f, p.adam_v.data(), sizeof(float) * size_t(p.adam_v.numel()));
        }
    }
    std::fclose(f);
    return step;
}

} // namespace textctrl
