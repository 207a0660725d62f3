#include "nscache/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace nscache {

void SamplerConfig::validate(EntityId num_entities) const {
    if (strategy != Strategy::NSCaching) return;
    if (n1 < 1 || n2 < 1)
        throw std::invalid_argument("nscaching requires N1 >= 1 and N2 >= 1");
    if (n1 > num_entities)
        throw std::invalid_argument("cache size N1 exceeds the number of entities");
    if (n_lazy < 0) throw std::invalid_argument("n_lazy must be >= 0");
}

std::vector<EntityId> sample_distinct(int n, EntityId num_entities, Rng& rng) {
    if (n > num_entities)
        throw std::invalid_argument("cannot draw more distinct entities than exist");
    // Floyd's subset sampling: exactly n RNG draws, distinct outputs.
    std::unordered_set<EntityId> seen;
    std::vector<EntityId> out;
    out.reserve(n);
    for (EntityId j = num_entities - n; j < num_entities; ++j) {
        std::uniform_int_distribution<EntityId> dist(0, j);
        EntityId v = dist(rng);
        if (!seen.insert(v).second) {
            seen.insert(j);
            out.push_back(j);
        } else {
            out.push_back(v);
        }
    }
    return out;
}

Triple uniform_corrupt(const Triple& pos, EntityId num_entities, Rng& rng) {
    std::uniform_int_distribution<EntityId> ent(0, num_entities - 1);
    std::bernoulli_distribution side(0.5);
    Triple neg = pos;
    if (side(rng))
        neg.head = ent(rng);
    else
        neg.tail = ent(rng);
    return neg;
}

Triple bernoulli_corrupt(const Triple& pos, const RelationStats& stats,
                         EntityId num_entities, Rng& rng) {
    std::uniform_int_distribution<EntityId> ent(0, num_entities - 1);
    std::bernoulli_distribution side(stats.p_replace_head.at(pos.rel));
    Triple neg = pos;
    if (side(rng))
        neg.head = ent(rng);
    else
        neg.tail = ent(rng);
    return neg;
}

CacheEntry& cache_get_or_init(std::unordered_map<std::uint64_t, CacheEntry>& cache,
                              std::uint64_t key, const SamplerConfig& cfg,
                              EntityId num_entities, std::int64_t current_epoch,
                              Rng& rng) {
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    cfg.validate(num_entities);
    CacheEntry entry;
    entry.entities = sample_distinct(cfg.n1, num_entities, rng);
    // Stamp in the past so the first update opportunity refreshes.
    entry.last_update_epoch = current_epoch - cfg.n_lazy - 1;
    return cache.emplace(key, std::move(entry)).first->second;
}

namespace {

// Softmax over scores with max subtraction; returns unnormalized exp weights.
std::vector<double> exp_weights(const std::vector<double>& scores) {
    double mx = *std::max_element(scores.begin(), scores.end());
    std::vector<double> w(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) w[i] = std::exp(scores[i] - mx);
    return w;
}

// One draw proportional to w over the still-active indices.
std::size_t weighted_draw(const std::vector<double>& w, const std::vector<char>& taken,
                          Rng& rng) {
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (!taken[i]) total += w[i];
    std::uniform_real_distribution<double> u(0.0, total);
    double x = u(rng);
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (taken[i]) continue;
        acc += w[i];
        last = i;
        if (x < acc) return i;
    }
    return last;  // x == total edge from rounding
}

}  // namespace

EntityId select_from_cache(const CacheEntry& entry, SamplerConfig::SelectRule rule,
                           const CandidateScorer& scorer, Rng& rng) {
    switch (rule) {
        case SamplerConfig::SelectRule::Uniform: {
            std::uniform_int_distribution<std::size_t> d(0, entry.entities.size() - 1);
            return entry.entities[d(rng)];
        }
        case SamplerConfig::SelectRule::Top: {
            std::vector<double> scores = scorer(entry.entities);
            auto it = std::max_element(scores.begin(), scores.end());
            return entry.entities[it - scores.begin()];
        }
        case SamplerConfig::SelectRule::Importance: {
            std::vector<double> scores = scorer(entry.entities);
            std::vector<double> w = exp_weights(scores);
            std::vector<char> taken(w.size(), 0);
            return entry.entities[weighted_draw(w, taken, rng)];
        }
    }
    throw std::logic_error("bad SelectRule");
}

void cache_update(CacheEntry& entry, const CandidateScorer& scorer,
                  const SamplerConfig& cfg, std::int64_t current_epoch,
                  EntityId num_entities, Rng& rng) {
    if (current_epoch - entry.last_update_epoch <= cfg.n_lazy) return;

    std::vector<EntityId> candidates = entry.entities;
    std::unordered_set<EntityId> seen(candidates.begin(), candidates.end());
    for (EntityId e : sample_distinct(cfg.n2, num_entities, rng))
        if (seen.insert(e).second) candidates.push_back(e);

    if (static_cast<int>(candidates.size()) < cfg.n1)
        throw std::invalid_argument("candidate set smaller than cache size N1");

    std::vector<double> scores = scorer(candidates);
    std::vector<EntityId> kept;
    kept.reserve(cfg.n1);
    if (cfg.update_rule == SamplerConfig::UpdateRule::Top) {
        std::vector<std::size_t> order(candidates.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
        for (int i = 0; i < cfg.n1; ++i) kept.push_back(candidates[order[i]]);
    } else {
        // Importance sampling without replacement: draw, remove, renormalize.
        std::vector<double> w = exp_weights(scores);
        std::vector<char> taken(w.size(), 0);
        for (int i = 0; i < cfg.n1; ++i) {
            std::size_t pick = weighted_draw(w, taken, rng);
            taken[pick] = 1;
            kept.push_back(candidates[pick]);
        }
    }
    entry.entities = std::move(kept);
    entry.last_update_epoch = current_epoch;
}

NsCacheDraw nscache_sample(NegCache& cache, const SamplerConfig& cfg, const Triple& pos,
                           const RelationStats& stats, EntityId num_entities,
                           std::int64_t current_epoch,
                           const std::function<CandidateScorer(Slot, const Triple&)>& make_scorer,
                           Rng& rng) {
    NsCacheDraw draw;
    draw.head_key = head_cache_key(pos);
    draw.tail_key = tail_cache_key(pos);

    CacheEntry& heads = cache_get_or_init(cache.head_cache, draw.head_key, cfg,
                                          num_entities, current_epoch, rng);
    CacheEntry& tails = cache_get_or_init(cache.tail_cache, draw.tail_key, cfg,
                                          num_entities, current_epoch, rng);

    const bool need_scores = cfg.select_rule != SamplerConfig::SelectRule::Uniform;
    CandidateScorer head_scorer, tail_scorer;
    if (need_scores) {
        head_scorer = make_scorer(Slot::Head, pos);
        tail_scorer = make_scorer(Slot::Tail, pos);
    }
    EntityId cand_head = select_from_cache(heads, cfg.select_rule, head_scorer, rng);
    EntityId cand_tail = select_from_cache(tails, cfg.select_rule, tail_scorer, rng);

    double p_head = cfg.bernoulli_side_choice ? stats.p_replace_head.at(pos.rel) : 0.5;
    std::bernoulli_distribution side(p_head);
    draw.replaced_head = side(rng);
    draw.negative = pos;
    if (draw.replaced_head)
        draw.negative.head = cand_head;
    else
        draw.negative.tail = cand_tail;
    return draw;
}

void save_cache(const NegCache& cache, int n1, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write cache file: " + path);
    out << "nscache-cache 1\n"
        << "n1 " << n1 << "\n"
        << "entries " << (cache.head_cache.size() + cache.tail_cache.size()) << "\n"
        << "end\n";

    auto dump = [&](const std::unordered_map<std::uint64_t, CacheEntry>& m,
                    std::uint8_t which) {
        std::vector<std::uint64_t> keys;
        keys.reserve(m.size());
        for (const auto& [k, v] : m) keys.push_back(k);
        std::sort(keys.begin(), keys.end());
        for (std::uint64_t k : keys) {
            const CacheEntry& e = m.at(k);
            out.write(reinterpret_cast<const char*>(&which), 1);
            out.write(reinterpret_cast<const char*>(&k), sizeof(k));
            out.write(reinterpret_cast<const char*>(&e.last_update_epoch),
                      sizeof(e.last_update_epoch));
            out.write(reinterpret_cast<const char*>(e.entities.data()),
                      static_cast<std::streamsize>(e.entities.size() * sizeof(EntityId)));
        }
    };
    dump(cache.head_cache, 0);
    dump(cache.tail_cache, 1);
    if (!out) throw std::runtime_error("write failed: " + path);
}

NegCache load_cache(const std::string& path, int expected_n1) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read cache file: " + path);
    std::string line;
    auto field = [&](const std::string& key) {
        if (!std::getline(in, line))
            throw std::runtime_error(path + ": truncated cache header");
        auto sp = line.find(' ');
        if (line.substr(0, sp) != key)
            throw std::runtime_error(path + ": corrupt cache header at " + key);
        return line.substr(sp + 1);
    };
    if (field("nscache-cache") != "1")
        throw std::runtime_error(path + ": unsupported cache version");
    int n1 = std::stoi(field("n1"));
    if (n1 != expected_n1)
        throw std::runtime_error(path + ": cache N1 mismatch");
    std::size_t entries = std::stoull(field("entries"));
    field("end");

    NegCache cache;
    for (std::size_t i = 0; i < entries; ++i) {
        std::uint8_t which;
        std::uint64_t key;
        CacheEntry e;
        e.entities.resize(n1);
        in.read(reinterpret_cast<char*>(&which), 1);
        in.read(reinterpret_cast<char*>(&key), sizeof(key));
        in.read(reinterpret_cast<char*>(&e.last_update_epoch), sizeof(e.last_update_epoch));
        in.read(reinterpret_cast<char*>(e.entities.data()),
                static_cast<std::streamsize>(e.entities.size() * sizeof(EntityId)));
        if (!in) throw std::runtime_error(path + ": truncated cache payload");
        (which == 0 ? cache.head_cache : cache.tail_cache).emplace(key, std::move(e));
    }
    return cache;
}

}  // namespace nscache
