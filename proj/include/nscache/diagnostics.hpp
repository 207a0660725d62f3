#pragma once

#include <map>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "nscache/kg_data.hpp"
#include "nscache/sampling.hpp"
#include "nscache/scoring.hpp"

namespace nscache {

// Complementary CDF of the score gaps D_e = f(corrupted with e) - f(positive)
// over all candidate entities in `slot`. F(x) = fraction of candidates with
// D >= x; monotone non-increasing on an ascending grid.
template <typename Scalar>
std::vector<std::pair<double, double>> ccdf_negative_scores(
    const ModelParams<Scalar>& p, ModelKind kind, const Triple& positive,
    const std::vector<double>& grid, Slot slot = Slot::Tail) {
    std::vector<Scalar> scores =
        score_candidates(kind, p, positive, slot, all_entities(p.num_entities));
    const double pos_score = static_cast<double>(score(kind, p, positive));
    std::vector<double> gaps(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        gaps[i] = static_cast<double>(scores[i]) - pos_score;

    std::vector<std::pair<double, double>> out;
    out.reserve(grid.size());
    for (double x : grid) {
        std::size_t ge = 0;
        for (double d : gaps) ge += d >= x;
        out.push_back({x, static_cast<double>(ge) / gaps.size()});
    }
    return out;
}

// Tumbling-window tallies of sampled negatives and per-triple losses.
// Repeat ratio = 1 - distinct/total; nonzero-loss ratio counts losses above
// zero (margin) or above a small floor (logistic, which never reaches zero).
class DiagWindow {
  public:
    explicit DiagWindow(int window_epochs = 20, double loss_floor = 0.0)
        : window_epochs_(window_epochs), loss_floor_(loss_floor) {}

    void add_sample(const Triple& neg, double loss) {
        ++counts_[pack_triple(neg)];
        ++total_;
        if (loss > loss_floor_) ++nonzero_;
    }

    bool window_full(int epochs_seen) const {
        return epochs_seen > 0 && epochs_seen % window_epochs_ == 0;
    }
    bool empty() const { return total_ == 0; }

    double repeat_ratio() const {
        if (total_ == 0) throw std::logic_error("repeat_ratio on an empty window");
        return 1.0 - static_cast<double>(counts_.size()) / static_cast<double>(total_);
    }
    double nonzero_loss_ratio() const {
        if (total_ == 0) throw std::logic_error("nonzero_loss_ratio on an empty window");
        return static_cast<double>(nonzero_) / static_cast<double>(total_);
    }

    void reset() {
        counts_.clear();
        total_ = 0;
        nonzero_ = 0;
    }

  private:
    int window_epochs_;
    double loss_floor_;
    std::unordered_map<std::uint64_t, std::uint32_t> counts_;
    std::size_t total_ = 0;
    std::size_t nonzero_ = 0;
};

using CacheSnapshot = std::map<std::uint64_t, std::vector<EntityId>>;

inline CacheSnapshot snapshot_cache(const std::unordered_map<std::uint64_t, CacheEntry>& m) {
    CacheSnapshot snap;
    for (const auto& [k, e] : m) snap[k] = e.entities;
    return snap;
}

// Sum over shared keys of |after \ before| (set difference cardinality).
inline std::size_t changed_elements(const CacheSnapshot& before, const CacheSnapshot& after) {
    std::size_t changed = 0;
    for (const auto& [key, now] : after) {
        auto it = before.find(key);
        if (it == before.end())
            throw std::invalid_argument("changed_elements: snapshots do not share keys");
        std::unordered_set<EntityId> old(it->second.begin(), it->second.end());
        for (EntityId e : now) changed += old.count(e) == 0;
    }
    return changed;
}

// Decodes one cache entry's entities to names, in stored order.
inline std::vector<std::string> dump_cache(const NegCache& cache, bool head_cache,
                                           std::uint64_t key, const Dictionary& entities) {
    const auto& m = head_cache ? cache.head_cache : cache.tail_cache;
    auto it = m.find(key);
    if (it == m.end())
        throw std::invalid_argument("no cache entry for key " + std::to_string(key));
    std::vector<std::string> names;
    names.reserve(it->second.entities.size());
    for (EntityId e : it->second.entities) names.push_back(entities.name(e));
    return names;
}

}  // namespace nscache
