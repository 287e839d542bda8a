#include "sketchlab/ground.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "sketchlab/errors.hpp"

namespace sketchlab {

GroundSet::GroundSet(SketchConfig config, Seed seed, std::vector<std::string> keys)
    : cfg_(config), seed_(seed), keys_(std::move(keys)) {
    cfg_.validate();
    const std::size_t n = keys_.size();
    if (n == 0) throw ConfigError("ground set must hold at least one key");
    {
        std::unordered_set<std::string_view> seen;
        seen.reserve(n * 2);
        for (const auto& k : keys_)
            if (!seen.insert(k).second) throw ConfigError("ground set keys must be distinct");
    }

    auto sort_table = [](Table& t) {
        // Ascending by hash word, ties by key index: rank 1 = position 0.
        std::vector<std::uint32_t> perm(t.order.size());
        std::iota(perm.begin(), perm.end(), 0u);
        std::stable_sort(perm.begin(), perm.end(), [&](std::uint32_t a, std::uint32_t b) {
            return t.word[a] < t.word[b];
        });
        Table sorted;
        sorted.order.reserve(perm.size());
        sorted.word.reserve(perm.size());
        for (auto p : perm) {
            sorted.order.push_back(t.order[p]);
            sorted.word.push_back(t.word[p]);
        }
        t = std::move(sorted);
    };

    if (cfg_.kind == SketchKind::KMins) {
        tables_.resize(cfg_.k);
        pos_.assign(n * cfg_.k, kNoPos);
        for (std::uint32_t t = 0; t < cfg_.k; ++t) {
            const std::uint64_t ds = derive_seed(seed_, t);
            auto& tab = tables_[t];
            tab.order.resize(n);
            std::iota(tab.order.begin(), tab.order.end(), 0u);
            tab.word.resize(n);
            for (std::size_t i = 0; i < n; ++i) tab.word[i] = prf_word(ds, keys_[i]);
            sort_table(tab);
            for (std::uint32_t p = 0; p < n; ++p)
                pos_[static_cast<std::size_t>(tab.order[p]) * cfg_.k + t] = p;
        }
    } else if (cfg_.kind == SketchKind::BottomK) {
        tables_.resize(1);
        pos_.assign(n, kNoPos);
        const std::uint64_t ds = derive_seed(seed_, 0);
        auto& tab = tables_[0];
        tab.order.resize(n);
        std::iota(tab.order.begin(), tab.order.end(), 0u);
        tab.word.resize(n);
        for (std::size_t i = 0; i < n; ++i) tab.word[i] = prf_word(ds, keys_[i]);
        sort_table(tab);
        for (std::uint32_t p = 0; p < n; ++p) pos_[tab.order[p]] = p;
    } else {
        tables_.resize(cfg_.k);
        pos_.assign(n, kNoPos);
        part_.resize(n);
        const std::uint64_t vs = derive_seed(seed_, 0);
        const std::uint64_t ps = derive_seed(seed_, cfg_.k);
        for (std::size_t i = 0; i < n; ++i) {
            const auto part =
                static_cast<std::uint32_t>(bounded_word(prf_word(ps, keys_[i]), cfg_.k));
            part_[i] = part;
            tables_[part].order.push_back(static_cast<std::uint32_t>(i));
            tables_[part].word.push_back(prf_word(vs, keys_[i]));
        }
        for (auto& tab : tables_) sort_table(tab);
        for (std::uint32_t t = 0; t < cfg_.k; ++t)
            for (std::uint32_t p = 0; p < tables_[t].order.size(); ++p)
                pos_[tables_[t].order[p]] = p;
    }
}

double GroundSet::uniform_at(std::size_t t, std::uint32_t pos) const {
    return u01_from_word(tables_[t].word[pos]);
}

double GroundSet::value_at(std::size_t t, std::uint32_t pos) const {
    if (cfg_.repr == RegisterRepr::Hll8BitExponent)
        throw ConfigError("value_at is undefined for exponent registers");
    if (cfg_.kind == SketchKind::BottomK) return uniform_at(t, pos);
    return exp1_from_u(uniform_at(t, pos));
}

std::uint8_t GroundSet::exponent_at(std::size_t t, std::uint32_t pos) const {
    return exponent8_from_word(tables_[t].word[pos]);
}

std::uint32_t GroundSet::pos_of_key(std::size_t t, std::uint32_t key) const {
    if (cfg_.kind == SketchKind::KMins) return pos_[static_cast<std::size_t>(key) * cfg_.k + t];
    if (cfg_.kind == SketchKind::BottomK) return pos_[key];
    return part_[key] == t ? pos_[key] : kNoPos;
}

std::uint32_t GroundSet::part_of(std::uint32_t key) const {
    if (cfg_.kind != SketchKind::KPartition)
        throw ConfigError("part_of requires a KPartition ground set");
    return part_[key];
}

std::uint32_t GroundSet::first_member(std::size_t t, const KeyMask& member) const {
    const auto& tab = tables_[t];
    for (std::uint32_t p = 0; p < tab.order.size(); ++p)
        if (member[tab.order[p]]) return p;
    return kNoPos;
}

std::uint32_t GroundSet::pos_of_value(std::size_t t, double value) const {
    const auto& tab = tables_[t];
    const std::size_t sz = tab.order.size();
    if (sz == 0) return kNoPos;
    if (cfg_.repr == RegisterRepr::Hll8BitExponent) {
        // Exponents are nonincreasing along a table.
        const auto e = static_cast<std::uint8_t>(value);
        std::size_t lo = 0, hi = sz;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (exponent_at(t, static_cast<std::uint32_t>(mid)) > e)
                lo = mid + 1;
            else
                hi = mid;
        }
        if (lo < sz && exponent_at(t, static_cast<std::uint32_t>(lo)) == e)
            return static_cast<std::uint32_t>(lo);
        return kNoPos;
    }
    std::size_t lo = 0, hi = sz;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (value_at(t, static_cast<std::uint32_t>(mid)) < value)
            lo = mid + 1;
        else
            hi = mid;
    }
    if (lo < sz && value_at(t, static_cast<std::uint32_t>(lo)) == value)
        return static_cast<std::uint32_t>(lo);
    return kNoPos;
}

Sketch GroundSet::sketch_of_subset(const KeyMask& member) const {
    if (member.size() != n()) throw ConfigError("membership mask size must equal n");
    if (cfg_.kind == SketchKind::BottomK) {
        std::vector<double> regs;
        regs.reserve(cfg_.k);
        const auto& tab = tables_[0];
        double last = -1.0;
        for (std::uint32_t p = 0; p < tab.order.size() && regs.size() < cfg_.k; ++p) {
            if (!member[tab.order[p]]) continue;
            const double u = uniform_at(0, p);
            if (u == last) continue;  // the sketch stores distinct priorities
            regs.push_back(u);
            last = u;
        }
        return Sketch::from_uniform(cfg_, seed_, std::move(regs));
    }
    if (cfg_.repr == RegisterRepr::Hll8BitExponent) {
        std::vector<std::uint8_t> regs(cfg_.k, 0);
        for (std::uint32_t t = 0; t < cfg_.k; ++t) {
            const std::uint32_t p = first_member(t, member);
            if (p != kNoPos) regs[t] = exponent_at(t, p);
        }
        return Sketch::from_exponents(cfg_, seed_, std::move(regs));
    }
    std::vector<double> regs(cfg_.k, 1.0);
    for (std::uint32_t t = 0; t < cfg_.k; ++t) {
        const std::uint32_t p = first_member(t, member);
        if (p != kNoPos) regs[t] = uniform_at(t, p);
    }
    return Sketch::from_uniform(cfg_, seed_, std::move(regs));
}

std::vector<std::uint32_t> GroundSet::n0_star() const {
    std::vector<std::uint8_t> chosen(n(), 0);
    if (cfg_.kind == SketchKind::BottomK) {
        const auto& tab = tables_[0];
        double last = -1.0;
        std::size_t picked = 0;
        for (std::uint32_t p = 0; p < tab.order.size() && picked < cfg_.k; ++p) {
            const double u = uniform_at(0, p);
            if (u == last) continue;
            chosen[tab.order[p]] = 1;
            last = u;
            ++picked;
        }
    } else {
        for (const auto& tab : tables_)
            if (!tab.order.empty()) chosen[tab.order[0]] = 1;
    }
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 0; i < n(); ++i)
        if (chosen[i]) out.push_back(i);
    return out;
}

}  // namespace sketchlab
