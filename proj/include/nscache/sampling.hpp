#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "nscache/kg_data.hpp"
#include "nscache/rng.hpp"
#include "nscache/types.hpp"

namespace nscache {

struct SamplerConfig {
    enum class Strategy { Uniform, Bernoulli, NSCaching };
    enum class SelectRule { Uniform, Importance, Top };
    enum class UpdateRule { Importance, Top };

    Strategy strategy = Strategy::Bernoulli;
    int n1 = 50;      // cache size
    int n2 = 50;      // random candidates offered per refresh
    int n_lazy = 0;   // refresh at most once per n_lazy+1 epochs of access
    SelectRule select_rule = SelectRule::Uniform;
    UpdateRule update_rule = UpdateRule::Importance;
    // Side choice between (h',r,t) and (h,r,t'): Bernoulli per relation stats,
    // or a fair coin when disabled.
    bool bernoulli_side_choice = true;

    void validate(EntityId num_entities) const;
};

struct CacheEntry {
    std::vector<EntityId> entities;  // exactly N1 distinct ids
    std::int64_t last_update_epoch = 0;
};

struct NegCache {
    std::unordered_map<std::uint64_t, CacheEntry> head_cache;  // key (r, t)
    std::unordered_map<std::uint64_t, CacheEntry> tail_cache;  // key (h, r)
};

// Scores a list of candidate entities against a fixed (r,t) or (h,r) context.
// Bound by the caller; keeps the cache machinery independent of the models.
using CandidateScorer = std::function<std::vector<double>(const std::vector<EntityId>&)>;

// N distinct uniform draws from [0, num_entities).
std::vector<EntityId> sample_distinct(int n, EntityId num_entities, Rng& rng);

Triple uniform_corrupt(const Triple& pos, EntityId num_entities, Rng& rng);

Triple bernoulli_corrupt(const Triple& pos, const RelationStats& stats,
                         EntityId num_entities, Rng& rng);

// Returns the existing entry or lazily creates one of n1 distinct uniform
// entities; fresh entries are stamped so their first update opportunity
// always refreshes.
CacheEntry& cache_get_or_init(std::unordered_map<std::uint64_t, CacheEntry>& cache,
                              std::uint64_t key, const SamplerConfig& cfg,
                              EntityId num_entities, std::int64_t current_epoch,
                              Rng& rng);

// Draws one entity from the entry under the configured in-cache selection
// rule. `scorer` is consulted only for the importance and top rules.
EntityId select_from_cache(const CacheEntry& entry, SamplerConfig::SelectRule rule,
                           const CandidateScorer& scorer, Rng& rng);

// Cache refresh: offer n2 uniform candidates, dedup against the current
// contents, score everything, keep n1 by importance sampling without
// replacement (softmax of scores) or by top-score selection. No-op while the
// entry is within its lazy window.
void cache_update(CacheEntry& entry, const CandidateScorer& scorer,
                  const SamplerConfig& cfg, std::int64_t current_epoch,
                  EntityId num_entities, Rng& rng);

struct NsCacheDraw {
    Triple negative;
    std::uint64_t head_key;  // (r, t) entry consulted
    std::uint64_t tail_key;  // (h, r) entry consulted
    bool replaced_head;
};

// One NSCaching negative for `pos`: candidate head from the (r,t) entry,
// candidate tail from the (h,r) entry, side chosen per config.
NsCacheDraw nscache_sample(NegCache& cache, const SamplerConfig& cfg, const Triple& pos,
                           const RelationStats& stats, EntityId num_entities,
                           std::int64_t current_epoch,
                           const std::function<CandidateScorer(Slot, const Triple&)>& make_scorer,
                           Rng& rng);

// Head-cache key is (r, t); tail-cache key is (h, r).
inline std::uint64_t head_cache_key(const Triple& t) { return pack_pair(t.rel, t.tail); }
inline std::uint64_t tail_cache_key(const Triple& t) { return pack_pair(t.head, t.rel); }

// Cache persistence (same header+payload scheme as checkpoints) so
// pretrain->continue runs are exact.
void save_cache(const NegCache& cache, int n1, const std::string& path);
NegCache load_cache(const std::string& path, int expected_n1);

}  // namespace nscache
