#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <thread>
#include <vector>

#include "nscache/kg_data.hpp"
#include "nscache/sampling.hpp"
#include "nscache/scoring.hpp"

namespace nscache {

struct DirectionMetrics {
    double mrr = 0.0;
    double mr = 0.0;
    double hit10 = 0.0;
    std::size_t count = 0;
};

struct LinkPredMetrics {
    double mrr = 0.0;
    double mr = 0.0;
    double hit10 = 0.0;
    std::size_t count = 0;  // ranked queries (2 per triple)
    DirectionMetrics head;  // head-replacement queries
    DirectionMetrics tail;
};

// Filtered rank of the true entity in `open_slot`. Known-true competitors
// (other than the truth) are removed; rank counts strictly greater scores
// only, so ties with the truth do not hurt (optimistic convention).
template <typename Scalar>
std::size_t filtered_rank(const ModelParams<Scalar>& p, ModelKind kind,
                          const Triple& query, Slot open_slot,
                          const FilterIndex& filter, bool raw = false) {
    const EntityId truth = open_slot == Slot::Head ? query.head : query.tail;
    std::vector<Scalar> scores =
        score_candidates(kind, p, query, open_slot, all_entities(p.num_entities));
    const Scalar true_score = scores[truth];

    std::vector<char> filtered(p.num_entities, 0);
    if (!raw) {
        const auto& map = open_slot == Slot::Head ? filter.heads_by_rt : filter.tails_by_hr;
        const std::uint64_t key = open_slot == Slot::Head
                                      ? pack_pair(query.rel, query.tail)
                                      : pack_pair(query.head, query.rel);
        if (auto it = map.find(key); it != map.end())
            for (EntityId e : it->second) filtered[e] = 1;
    }
    std::size_t rank = 1;
    for (EntityId e = 0; e < p.num_entities; ++e) {
        if (e == truth || filtered[e]) continue;
        if (scores[e] > true_score) ++rank;
    }
    return rank;
}

inline LinkPredMetrics metrics_from_ranks(const std::vector<std::size_t>& head_ranks,
                                          const std::vector<std::size_t>& tail_ranks) {
    auto reduce = [](const std::vector<std::size_t>& ranks) {
        DirectionMetrics m;
        m.count = ranks.size();
        for (std::size_t r : ranks) {
            m.mrr += 1.0 / static_cast<double>(r);
            m.mr += static_cast<double>(r);
            if (r <= 10) m.hit10 += 1.0;
        }
        if (!ranks.empty()) {
            m.mrr /= m.count;
            m.mr /= m.count;
            m.hit10 /= m.count;
        }
        return m;
    };
    LinkPredMetrics out;
    out.head = reduce(head_ranks);
    out.tail = reduce(tail_ranks);
    out.count = out.head.count + out.tail.count;
    if (out.count > 0) {
        out.mrr = (out.head.mrr * out.head.count + out.tail.mrr * out.tail.count) / out.count;
        out.mr = (out.head.mr * out.head.count + out.tail.mr * out.tail.count) / out.count;
        out.hit10 =
            (out.head.hit10 * out.head.count + out.tail.hit10 * out.tail.count) / out.count;
    }
    return out;
}

// Ranks every triple in both directions. Queries are independent, so they
// fan out over `threads` workers against the immutable params; the reduction
// order is fixed by query index regardless of worker count.
template <typename Scalar>
LinkPredMetrics evaluate_link_prediction(const ModelParams<Scalar>& p, ModelKind kind,
                                         const std::vector<Triple>& split,
                                         const FilterIndex& filter, bool raw = false,
                                         int threads = 1) {
    if (split.empty()) throw std::invalid_argument("cannot evaluate an empty split");
    std::vector<std::size_t> head_ranks(split.size()), tail_ranks(split.size());
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            head_ranks[i] = filtered_rank(p, kind, split[i], Slot::Head, filter, raw);
            tail_ranks[i] = filtered_rank(p, kind, split[i], Slot::Tail, filter, raw);
        }
    };
    if (threads <= 1) {
        work(0, split.size());
    } else {
        std::vector<std::thread> pool;
        std::size_t chunk = (split.size() + threads - 1) / threads;
        for (int w = 0; w < threads; ++w) {
            std::size_t b = std::min(split.size(), w * chunk);
            std::size_t e = std::min(split.size(), b + chunk);
            if (b < e) pool.emplace_back(work, b, e);
        }
        for (auto& t : pool) t.join();
    }
    return metrics_from_ranks(head_ranks, tail_ranks);
}

struct ClassificationReport {
    std::map<RelationId, double> thresholds;  // sigma_r per relation
    double global_threshold = 0.0;            // fallback for unseen relations
    double valid_accuracy = 0.0;
    double test_accuracy = 0.0;
};

namespace detail {

// Best decision threshold (predict positive iff score >= sigma) over the
// candidate midpoints of the sorted scores; returns {sigma, accuracy}.
inline std::pair<double, double> best_threshold(std::vector<std::pair<double, bool>> scored) {
    if (scored.empty()) throw std::invalid_argument("no scores to fit a threshold");
    std::sort(scored.begin(), scored.end());
    const std::size_t n = scored.size();
    std::size_t total_pos = 0;
    for (auto& [s, pos] : scored) total_pos += pos;

    // Candidates: below the minimum, each adjacent midpoint, above the maximum.
    std::vector<double> candidates;
    candidates.push_back(scored.front().first - 1.0);
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (scored[i].first < scored[i + 1].first)
            candidates.push_back(0.5 * (scored[i].first + scored[i + 1].first));
    candidates.push_back(scored.back().first + 1.0);

    double best_sigma = candidates.front();
    std::size_t best_correct = 0;
    for (double sigma : candidates) {
        // pos with score >= sigma are correct, neg with score < sigma are correct
        std::size_t below =
            std::lower_bound(scored.begin(), scored.end(), std::make_pair(sigma, false)) -
            scored.begin();
        std::size_t pos_below = 0;
        for (std::size_t i = 0; i < below; ++i) pos_below += scored[i].second;
        std::size_t correct = (total_pos - pos_below) + (below - pos_below);
        if (correct > best_correct) {
            best_correct = correct;
            best_sigma = sigma;
        }
    }
    return {best_sigma, static_cast<double>(best_correct) / n};
}

}  // namespace detail

// Per-relation thresholds maximizing validation accuracy; relations absent
// from validation fall back to the global best threshold.
template <typename Scalar>
ClassificationReport fit_thresholds(const ModelParams<Scalar>& p, ModelKind kind,
                                    const std::vector<Triple>& valid_pos,
                                    const std::vector<Triple>& valid_neg) {
    if (valid_pos.empty() && valid_neg.empty())
        throw std::invalid_argument("no validation triples for threshold fitting");
    ClassificationReport report;
    std::map<RelationId, std::vector<std::pair<double, bool>>> by_rel;
    std::vector<std::pair<double, bool>> all;
    auto add = [&](const std::vector<Triple>& triples, bool label) {
        for (const Triple& t : triples) {
            double s = static_cast<double>(score(kind, p, t));
            by_rel[t.rel].push_back({s, label});
            all.push_back({s, label});
        }
    };
    add(valid_pos, true);
    add(valid_neg, false);

    report.global_threshold = detail::best_threshold(all).first;
    std::size_t correct = 0;
    for (auto& [rel, scored] : by_rel) {
        auto [sigma, acc] = detail::best_threshold(scored);
        report.thresholds[rel] = sigma;
        correct += static_cast<std::size_t>(std::lround(acc * scored.size()));
    }
    report.valid_accuracy = static_cast<double>(correct) / all.size();
    return report;
}

template <typename Scalar>
double classification_accuracy(const ModelParams<Scalar>& p, ModelKind kind,
                               const ClassificationReport& report,
                               const std::vector<Triple>& pos,
                               const std::vector<Triple>& neg) {
    std::size_t correct = 0, total = 0;
    auto run = [&](const std::vector<Triple>& triples, bool label) {
        for (const Triple& t : triples) {
            auto it = report.thresholds.find(t.rel);
            double sigma =
                it != report.thresholds.end() ? it->second : report.global_threshold;
            bool predicted = static_cast<double>(score(kind, p, t)) >= sigma;
            correct += predicted == label;
            ++total;
        }
    };
    run(pos, true);
    run(neg, false);
    return total ? static_cast<double>(correct) / total : 0.0;
}

template <typename Scalar>
ClassificationReport classify(const ModelParams<Scalar>& p, ModelKind kind,
                              ClassificationReport report,
                              const std::vector<Triple>& test_pos,
                              const std::vector<Triple>& test_neg) {
    report.test_accuracy = classification_accuracy(p, kind, report, test_pos, test_neg);
    return report;
}

// Seeded Bernoulli-corruption negatives filtered against all known true
// triples; the fallback when a benchmark ships no negative files.
inline std::vector<Triple> generate_classification_negatives(
    const std::vector<Triple>& positives, const RelationStats& stats,
    const FilterIndex& filter, EntityId num_entities, std::uint64_t seed) {
    Rng rng = make_stream(seed, 0xc1a55);
    std::vector<Triple> out;
    out.reserve(positives.size());
    for (const Triple& pos : positives) {
        Triple neg = pos;
        for (int attempt = 0; attempt < 1000; ++attempt) {
            neg = bernoulli_corrupt(pos, stats, num_entities, rng);
            if (!filter.contains(neg)) break;
        }
        out.push_back(neg);
    }
    return out;
}

}  // namespace nscache
