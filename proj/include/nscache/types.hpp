#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace nscache {

using EntityId = std::int32_t;
using RelationId = std::int32_t;

enum class Slot { Head, Tail };

struct Triple {
    EntityId head;
    RelationId rel;
    EntityId tail;

    friend bool operator==(const Triple&, const Triple&) = default;
};

// Packs a triple (or a pair, with one slot zero) into a single 64-bit key.
// 21 bits per field caps ids at ~2M, plenty for the benchmark graphs.
constexpr std::uint64_t kIdBits = 21;
constexpr std::uint64_t kIdMask = (std::uint64_t{1} << kIdBits) - 1;

inline std::uint64_t pack_triple(EntityId h, RelationId r, EntityId t) {
    return (static_cast<std::uint64_t>(h) << (2 * kIdBits)) |
           (static_cast<std::uint64_t>(r) << kIdBits) |
           static_cast<std::uint64_t>(t);
}

inline std::uint64_t pack_triple(const Triple& x) {
    return pack_triple(x.head, x.rel, x.tail);
}

inline std::uint64_t pack_pair(std::int64_t a, std::int64_t b) {
    return (static_cast<std::uint64_t>(a) << kIdBits) | static_cast<std::uint64_t>(b);
}

struct TripleStore {
    std::vector<Triple> train;
    std::vector<Triple> valid;
    std::vector<Triple> test;
    EntityId num_entities = 0;
    RelationId num_relations = 0;
};

}  // namespace nscache

template <>
struct std::hash<nscache::Triple> {
    std::size_t operator()(const nscache::Triple& t) const noexcept {
        return std::hash<std::uint64_t>{}(nscache::pack_triple(t));
    }
};
