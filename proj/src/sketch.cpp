#include "sketchlab/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include "sketchlab/errors.hpp"

namespace sketchlab {

namespace {

constexpr std::uint32_t kMagic = 0x534B4C42;  // "SKLB"
constexpr std::uint8_t kVersion = 1;

// Uniform register value of an Exp[1] register; 1.0 is the empty sentinel.
double uniform_from_value(double v) {
    if (std::isinf(v) && v > 0.0) return 1.0;
    if (!(v >= 0.0)) throw ConfigError("register value must be a nonnegative real");
    return -std::expm1(-v);
}

}  // namespace

void SketchConfig::validate() const {
    if (k < 1) throw ConfigError("sketch size k must be at least 1");
    if (repr == RegisterRepr::Hll8BitExponent && kind != SketchKind::KPartition)
        throw ConfigError("8-bit exponent registers are only valid for KPartition");
}

Sketch::Sketch(SketchConfig config, Seed seed) : cfg_(config), seed_(seed) {
    cfg_.validate();
    switch (cfg_.kind) {
        case SketchKind::KMins:
            dseeds_.resize(cfg_.k);
            for (std::uint32_t i = 0; i < cfg_.k; ++i) dseeds_[i] = derive_seed(seed_, i);
            u_.assign(cfg_.k, 1.0);
            break;
        case SketchKind::BottomK:
            dseeds_ = {derive_seed(seed_, 0)};
            u_.reserve(cfg_.k);
            break;
        case SketchKind::KPartition:
            // Value hash at index 0, partition hash at the reserved index k.
            dseeds_ = {derive_seed(seed_, 0), derive_seed(seed_, cfg_.k)};
            if (cfg_.repr == RegisterRepr::FullPrecision)
                u_.assign(cfg_.k, 1.0);
            else
                e_.assign(cfg_.k, 0);
            break;
    }
}

void Sketch::add_word(std::uint32_t reg, std::uint64_t word) {
    const double u = u01_from_word(word);
    if (u < u_[reg]) u_[reg] = u;
}

void Sketch::add(std::string_view key) {
    switch (cfg_.kind) {
        case SketchKind::KMins:
            for (std::uint32_t i = 0; i < cfg_.k; ++i)
                add_word(i, prf_word(dseeds_[i], key));
            break;
        case SketchKind::BottomK: {
            const double u = u01_from_word(prf_word(dseeds_[0], key));
            if (u_.size() == cfg_.k && u >= u_.back()) return;
            auto it = std::lower_bound(u_.begin(), u_.end(), u);
            if (it != u_.end() && *it == u) return;  // already stored
            u_.insert(it, u);
            if (u_.size() > cfg_.k) u_.pop_back();
            break;
        }
        case SketchKind::KPartition: {
            const auto part = static_cast<std::uint32_t>(
                bounded_word(prf_word(dseeds_[1], key), cfg_.k));
            const std::uint64_t w = prf_word(dseeds_[0], key);
            if (cfg_.repr == RegisterRepr::FullPrecision) {
                add_word(part, w);
            } else {
                const std::uint8_t e = exponent8_from_word(w);
                if (e > e_[part]) e_[part] = e;
            }
            break;
        }
    }
}

Sketch Sketch::of_set(const SketchConfig& config, const Seed& seed,
                      std::span<const std::string> keys) {
    Sketch s(config, seed);
    for (const auto& key : keys) s.add(key);
    return s;
}

void Sketch::merge_from(const Sketch& other) {
    if (!(cfg_ == other.cfg_) || !(seed_ == other.seed_))
        throw IncompatibleError("merge requires identical config and seed");
    switch (cfg_.kind) {
        case SketchKind::KMins:
        case SketchKind::KPartition:
            if (cfg_.repr == RegisterRepr::FullPrecision) {
                for (std::uint32_t i = 0; i < cfg_.k; ++i)
                    u_[i] = std::min(u_[i], other.u_[i]);
            } else {
                for (std::uint32_t i = 0; i < cfg_.k; ++i)
                    e_[i] = std::max(e_[i], other.e_[i]);
            }
            break;
        case SketchKind::BottomK: {
            std::vector<double> merged;
            merged.reserve(std::min<std::size_t>(u_.size() + other.u_.size(), cfg_.k));
            std::size_t i = 0, j = 0;
            while (merged.size() < cfg_.k && (i < u_.size() || j < other.u_.size())) {
                double v;
                if (j == other.u_.size() || (i < u_.size() && u_[i] <= other.u_[j])) {
                    v = u_[i];
                    if (j < other.u_.size() && other.u_[j] == v) ++j;
                    ++i;
                } else {
                    v = other.u_[j];
                    ++j;
                }
                merged.push_back(v);
            }
            u_ = std::move(merged);
            break;
        }
    }
}

Sketch Sketch::merged(const Sketch& a, const Sketch& b) {
    Sketch out = a;
    out.merge_from(b);
    return out;
}

std::vector<double> Sketch::registers() const {
    if (cfg_.repr == RegisterRepr::Hll8BitExponent)
        throw ConfigError("exponent sketches expose registers via exponents()");
    if (cfg_.kind == SketchKind::BottomK) return u_;
    std::vector<double> out(cfg_.k);
    for (std::uint32_t i = 0; i < cfg_.k; ++i) out[i] = exp1_from_u(u_[i]);
    return out;
}

const std::vector<std::uint8_t>& Sketch::exponents() const {
    if (cfg_.repr != RegisterRepr::Hll8BitExponent)
        throw ConfigError("exponents() requires 8-bit exponent registers");
    return e_;
}

std::size_t Sketch::filled() const {
    switch (cfg_.kind) {
        case SketchKind::BottomK:
            return u_.size();
        case SketchKind::KMins:
        case SketchKind::KPartition:
            if (cfg_.repr == RegisterRepr::FullPrecision)
                return static_cast<std::size_t>(
                    std::count_if(u_.begin(), u_.end(), [](double u) { return u < 1.0; }));
            return static_cast<std::size_t>(
                std::count_if(e_.begin(), e_.end(), [](std::uint8_t e) { return e > 0; }));
    }
    return 0;
}

Sketch Sketch::from_uniform(const SketchConfig& config, const Seed& seed,
                            std::vector<double> uniform_regs) {
    Sketch s(config, seed);
    if (config.repr != RegisterRepr::FullPrecision)
        throw ConfigError("uniform registers require full precision");
    if (config.kind == SketchKind::BottomK) {
        if (uniform_regs.size() > config.k)
            throw ConfigError("bottom-k holds at most k registers");
        for (std::size_t i = 0; i < uniform_regs.size(); ++i) {
            const double u = uniform_regs[i];
            if (!(u > 0.0 && u < 1.0) || (i > 0 && u <= uniform_regs[i - 1]))
                throw ConfigError("bottom-k registers must be strictly increasing in (0,1)");
        }
    } else {
        if (uniform_regs.size() != config.k)
            throw ConfigError("register count must equal k");
        for (double u : uniform_regs)
            if (!(u > 0.0 && u <= 1.0))
                throw ConfigError("uniform registers must lie in (0,1]");
    }
    s.u_ = std::move(uniform_regs);
    return s;
}

Sketch Sketch::from_values(const SketchConfig& config, const Seed& seed,
                           std::span<const double> value_regs) {
    if (config.kind == SketchKind::BottomK)
        return from_uniform(config, seed, {value_regs.begin(), value_regs.end()});
    std::vector<double> u(value_regs.size());
    for (std::size_t i = 0; i < value_regs.size(); ++i) u[i] = uniform_from_value(value_regs[i]);
    return from_uniform(config, seed, std::move(u));
}

Sketch Sketch::from_exponents(const SketchConfig& config, const Seed& seed,
                              std::vector<std::uint8_t> exponent_regs) {
    Sketch s(config, seed);
    if (config.repr != RegisterRepr::Hll8BitExponent)
        throw ConfigError("exponent registers require the exponent representation");
    if (exponent_regs.size() != config.k) throw ConfigError("register count must equal k");
    s.e_ = std::move(exponent_regs);
    return s;
}

bool Sketch::operator==(const Sketch& other) const {
    return cfg_ == other.cfg_ && seed_ == other.seed_ && u_ == other.u_ && e_ == other.e_;
}

namespace {

template <typename T>
void put(std::string& out, const T& v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    out.append(p, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& off) {
    if (off + sizeof(T) > in.size()) throw SerializationError("truncated sketch file");
    T v;
    std::memcpy(&v, in.data() + off, sizeof(T));
    off += sizeof(T);
    return v;
}

}  // namespace

void Sketch::save(const std::string& path) const {
    std::string out;
    put(out, kMagic);
    put(out, kVersion);
    put(out, static_cast<std::uint8_t>(cfg_.kind));
    put(out, static_cast<std::uint8_t>(cfg_.repr));
    put(out, std::uint8_t{0});
    put(out, cfg_.k);
    put(out, seed_.hi);
    put(out, seed_.lo);
    if (cfg_.repr == RegisterRepr::Hll8BitExponent) {
        out.append(reinterpret_cast<const char*>(e_.data()), e_.size());
    } else {
        put(out, static_cast<std::uint32_t>(u_.size()));
        for (double u : u_) put(out, u);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed: " + path);
}

Sketch Sketch::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path);
    std::string in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    std::size_t off = 0;
    if (take<std::uint32_t>(in, off) != kMagic) throw SerializationError("bad sketch magic");
    if (take<std::uint8_t>(in, off) != kVersion) throw SerializationError("bad sketch version");
    const auto kind = take<std::uint8_t>(in, off);
    const auto repr = take<std::uint8_t>(in, off);
    take<std::uint8_t>(in, off);
    if (kind > 2 || repr > 1) throw SerializationError("bad sketch kind/representation");
    SketchConfig cfg{static_cast<SketchKind>(kind), take<std::uint32_t>(in, off),
                     static_cast<RegisterRepr>(repr)};
    Seed seed{take<std::uint64_t>(in, off), take<std::uint64_t>(in, off)};
    try {
        if (cfg.repr == RegisterRepr::Hll8BitExponent) {
            std::vector<std::uint8_t> e(cfg.k);
            for (auto& x : e) x = take<std::uint8_t>(in, off);
            return from_exponents(cfg, seed, std::move(e));
        }
        const auto count = take<std::uint32_t>(in, off);
        if (cfg.kind != SketchKind::BottomK && count != cfg.k)
            throw SerializationError("register count mismatch");
        std::vector<double> u(count);
        for (auto& x : u) x = take<double>(in, off);
        return from_uniform(cfg, seed, std::move(u));
    } catch (const ConfigError& e) {
        throw SerializationError(std::string("invalid sketch payload: ") + e.what());
    }
}

std::vector<std::string> determining_keys(const SketchConfig& config, const Seed& seed,
                                          std::span<const std::string> keys) {
    config.validate();
    if (keys.empty()) throw ConfigError("determining keys of an empty set");
    const std::size_t n = keys.size();
    std::vector<std::uint8_t> chosen(n, 0);
    if (config.kind == SketchKind::KMins) {
        for (std::uint32_t t = 0; t < config.k; ++t) {
            const std::uint64_t ds = derive_seed(seed, t);
            std::size_t best = 0;
            std::uint64_t bw = prf_word(ds, keys[0]);
            for (std::size_t i = 1; i < n; ++i) {
                const std::uint64_t w = prf_word(ds, keys[i]);
                if (w < bw) {
                    bw = w;
                    best = i;
                }
            }
            chosen[best] = 1;
        }
    } else if (config.kind == SketchKind::BottomK) {
        const std::uint64_t ds = derive_seed(seed, 0);
        std::vector<std::pair<std::uint64_t, std::size_t>> ws(n);
        for (std::size_t i = 0; i < n; ++i) ws[i] = {prf_word(ds, keys[i]), i};
        const std::size_t kk = std::min<std::size_t>(config.k, n);
        std::sort(ws.begin(), ws.end());
        // The sketch stores distinct priorities: skip duplicate uniforms.
        double last = -1.0;
        std::size_t picked = 0;
        for (std::size_t i = 0; i < n && picked < kk; ++i) {
            const double u = u01_from_word(ws[i].first);
            if (u == last) continue;
            chosen[ws[i].second] = 1;
            last = u;
            ++picked;
        }
    } else {
        const std::uint64_t vs = derive_seed(seed, 0);
        const std::uint64_t ps = derive_seed(seed, config.k);
        std::vector<std::size_t> best(config.k, n);
        std::vector<std::uint64_t> bw(config.k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto part =
                static_cast<std::uint32_t>(bounded_word(prf_word(ps, keys[i]), config.k));
            const std::uint64_t w = prf_word(vs, keys[i]);
            if (best[part] == n || w < bw[part]) {
                best[part] = i;
                bw[part] = w;
            }
        }
        for (std::uint32_t p = 0; p < config.k; ++p)
            if (best[p] != n) chosen[best[p]] = 1;
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i)
        if (chosen[i]) out.push_back(keys[i]);
    return out;
}

}  // namespace sketchlab
