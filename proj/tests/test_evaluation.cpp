#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>
#include <set>

#include "helpers.hpp"
#include "nscache/evaluation.hpp"

using namespace nscache;
using namespace nscache::testutil;

namespace {

// Brute-force rank: sort surviving candidates by score descending and find
// the position of the truth, counting only strictly greater scores.
template <typename Scalar>
std::size_t oracle_rank(const ModelParams<Scalar>& p, ModelKind kind,
                        const Triple& query, Slot slot, const FilterIndex& filter,
                        bool raw = false) {
    const EntityId truth = slot == Slot::Head ? query.head : query.tail;
    std::vector<std::pair<double, EntityId>> survivors;
    for (EntityId e = 0; e < p.num_entities; ++e) {
        Triple cand = query;
        (slot == Slot::Head ? cand.head : cand.tail) = e;
        if (e != truth && !raw && filter.contains(cand)) continue;
        survivors.push_back({static_cast<double>(score(kind, p, cand)), e});
    }
    std::sort(survivors.begin(), survivors.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    double true_score = 0.0;
    for (auto& [s, e] : survivors)
        if (e == truth) true_score = s;
    std::size_t rank = 1;
    for (auto& [s, e] : survivors)
        if (s > true_score) ++rank;
    return rank;
}

ModelParams<double> random_params(int num_entities, int num_relations, int dim,
                                  std::uint64_t seed) {
    return init_params<double>(ModelKind::TransE, num_entities, num_relations, dim, seed);
}

ModelParams<double> blank_params(ModelKind kind, int num_entities, int num_relations,
                                 int dim) {
    ModelParams<double> p;
    p.kind = kind;
    p.dim = dim;
    p.num_entities = num_entities;
    p.num_relations = num_relations;
    p.entity_emb.setZero(num_entities, dim);
    p.relation_emb.setZero(num_relations, dim);
    return p;
}

}  // namespace

TEST_CASE("filtered_rank: unique maximum score gives rank 1") {
    TripleStore kg = tiny_kg();
    FilterIndex filter = build_filter_index(kg);
    auto p = random_params(kg.num_entities, kg.num_relations, 8, 4);
    // Make entity 4's TransE score for query (3, r0, ?) the unique maximum:
    // place e4 exactly at h + r, push everyone else far away.
    Triple q{3, 0, 4};
    p.entity_emb.row(4) = p.entity_emb.row(3) + p.relation_emb.row(0);
    for (EntityId e = 0; e < kg.num_entities; ++e)
        if (e != 4 && e != 3) p.entity_emb.row(e).array() += 50.0;
    CHECK(filtered_rank(p, ModelKind::TransE, q, Slot::Tail, filter) == 1);
}

TEST_CASE("filtered_rank: everything filtered except the truth gives rank 1") {
    // One relation where head 0 connects to every entity: ranking the tail of
    // (0, r, t) filters out all other candidates regardless of score.
    TripleStore kg;
    kg.num_entities = 6;
    kg.num_relations = 1;
    for (EntityId t = 0; t < 6; ++t) kg.train.push_back({0, 0, t});
    FilterIndex filter = build_filter_index(kg);
    auto p = random_params(6, 1, 4, 11);
    for (EntityId t = 0; t < 6; ++t)
        CHECK(filtered_rank(p, ModelKind::TransE, Triple{0, 0, t}, Slot::Tail, filter) == 1);
}

TEST_CASE("filtered_rank: matches brute-force oracle on the tiny KG") {
    TripleStore kg = tiny_kg();
    FilterIndex filter = build_filter_index(kg);
    for (ModelKind kind : {ModelKind::TransE, ModelKind::DistMult, ModelKind::ComplEx}) {
        auto p = init_params<double>(kind, kg.num_entities, kg.num_relations, 8, 7);
        for (const Triple& t : kg.test) {
            for (Slot slot : {Slot::Head, Slot::Tail}) {
                CHECK(filtered_rank(p, kind, t, slot, filter) ==
                      oracle_rank(p, kind, t, slot, filter));
                CHECK(filtered_rank(p, kind, t, slot, filter, true) ==
                      oracle_rank(p, kind, t, slot, filter, true));
            }
        }
    }
}

TEST_CASE("filtered_rank: matches brute-force oracle on random KGs") {
    Rng meta = make_stream(99, 0);
    for (int trial = 0; trial < 10; ++trial) {
        TripleStore kg = random_kg(20 + static_cast<int>(meta() % 60), 3, 60, 10, 10, meta);
        FilterIndex filter = build_filter_index(kg);
        auto p = random_params(kg.num_entities, kg.num_relations, 6, meta());
        for (const Triple& t : kg.test)
            for (Slot slot : {Slot::Head, Slot::Tail})
                CHECK(filtered_rank(p, ModelKind::TransE, t, slot, filter) ==
                      oracle_rank(p, ModelKind::TransE, t, slot, filter));
    }
}

TEST_CASE("filtered_rank: invariant under strictly monotone score transforms") {
    // Scaling all embeddings by a positive constant is strictly monotone for
    // DistMult (score scales by c^3); ranks must not move.
    TripleStore kg = tiny_kg();
    FilterIndex filter = build_filter_index(kg);
    auto p = init_params<double>(ModelKind::DistMult, kg.num_entities, kg.num_relations, 8, 3);
    auto scaled = p;
    scaled.entity_emb *= 2.0;
    scaled.relation_emb *= 2.0;
    for (const Triple& t : kg.test)
        for (Slot slot : {Slot::Head, Slot::Tail})
            CHECK(filtered_rank(p, ModelKind::DistMult, t, slot, filter) ==
                  filtered_rank(scaled, ModelKind::DistMult, t, slot, filter));
}

TEST_CASE("metrics_from_ranks: ranks {1,2,4} reproduce the hand formula") {
    auto m = metrics_from_ranks({1, 2}, {4});
    CHECK(m.mrr == doctest::Approx((1.0 + 0.5 + 0.25) / 3.0));
    CHECK(m.mr == doctest::Approx(7.0 / 3.0));
    CHECK(m.hit10 == doctest::Approx(1.0));
    CHECK(m.count == 3);
}

TEST_CASE("metrics_from_ranks: rank 11 misses Hit@10, rank 10 makes it") {
    CHECK(metrics_from_ranks({11}, {11}).hit10 == doctest::Approx(0.0));
    CHECK(metrics_from_ranks({10}, {11}).hit10 == doctest::Approx(0.5));
}

TEST_CASE("metrics_from_ranks: aggregate is the query-weighted mean of directions") {
    auto m = metrics_from_ranks({1, 3, 5}, {2});
    CHECK(m.count == 4);
    CHECK(m.mrr == doctest::Approx((m.head.mrr * 3 + m.tail.mrr * 1) / 4));
    CHECK(m.mr == doctest::Approx((1 + 3 + 5 + 2) / 4.0));
}

TEST_CASE("metrics are mutually consistent with an independent recomputation") {
    std::mt19937_64 rng(5);
    std::vector<std::size_t> hr, tr;
    for (int i = 0; i < 200; ++i) {
        hr.push_back(1 + rng() % 50);
        tr.push_back(1 + rng() % 50);
    }
    auto m = metrics_from_ranks(hr, tr);
    std::vector<std::size_t> all = hr;
    all.insert(all.end(), tr.begin(), tr.end());
    double mrr = 0, mr = 0, hit = 0;
    for (std::size_t r : all) {
        mrr += 1.0 / r;
        mr += static_cast<double>(r);
        hit += r <= 10;
    }
    CHECK(m.mrr == doctest::Approx(mrr / all.size()));
    CHECK(m.mr == doctest::Approx(mr / all.size()));
    CHECK(m.hit10 == doctest::Approx(hit / all.size()));
}

TEST_CASE("evaluate_link_prediction: empty split is rejected") {
    TripleStore kg = tiny_kg();
    FilterIndex filter = build_filter_index(kg);
    auto p = random_params(kg.num_entities, kg.num_relations, 4, 1);
    CHECK_THROWS_AS(
        evaluate_link_prediction(p, ModelKind::TransE, std::vector<Triple>{}, filter),
        std::invalid_argument);
}

TEST_CASE("evaluate_link_prediction: thread count does not change the result") {
    TripleStore kg = desk_kg(31);
    FilterIndex filter = build_filter_index(kg);
    auto p = random_params(kg.num_entities, kg.num_relations, 8, 17);
    auto one = evaluate_link_prediction(p, ModelKind::TransE, kg.test, filter, false, 1);
    auto four = evaluate_link_prediction(p, ModelKind::TransE, kg.test, filter, false, 4);
    CHECK(one.mrr == four.mrr);
    CHECK(one.mr == four.mr);
    CHECK(one.hit10 == four.hit10);
    CHECK(one.count == four.count);
}

TEST_CASE("best_threshold: separable scores give accuracy 1 at the midpoint") {
    auto [sigma, acc] = detail::best_threshold(
        {{2.0, true}, {3.0, true}, {0.0, false}, {1.0, false}});
    CHECK(acc == doctest::Approx(1.0));
    CHECK(sigma == doctest::Approx(1.5));
}

TEST_CASE("best_threshold: identical scores give the class prior") {
    auto [sigma, acc] = detail::best_threshold(
        {{1.0, true}, {1.0, true}, {1.0, true}, {1.0, false}});
    CHECK(acc == doctest::Approx(0.75));
    (void)sigma;
}

TEST_CASE("best_threshold: beats every fixed candidate under exhaustive scan") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::pair<double, bool>> scored;
        for (int i = 0; i < 40; ++i) scored.push_back({u(rng), rng() % 2 == 0});
        auto [sigma, acc] = detail::best_threshold(scored);
        // Exhaustive scan over a fine grid plus every observed score.
        auto acc_at = [&](double s) {
            std::size_t c = 0;
            for (auto& [v, pos] : scored) c += (v >= s) == pos;
            return static_cast<double>(c) / scored.size();
        };
        CHECK(acc_at(sigma) == doctest::Approx(acc));
        for (auto& [v, pos] : scored) {
            CHECK(acc >= acc_at(v) - 1e-12);
            CHECK(acc >= acc_at(v + 1e-9) - 1e-12);
            CHECK(acc >= acc_at(v - 1e-9) - 1e-12);
        }
    }
}

TEST_CASE("fit_thresholds: separable per-relation scores classify perfectly") {
    // Entity 0 vs entity 1 under DistMult with a hand-set table: positives use
    // entity 0 (score 1), negatives entity 1 (score -1).
    auto p = blank_params(ModelKind::DistMult, 2, 2, 2);
    p.entity_emb << 1, 0, -1, 0;
    p.relation_emb << 1, 0, 1, 0;
    std::vector<Triple> pos = {{0, 0, 0}, {0, 1, 0}};
    std::vector<Triple> neg = {{0, 0, 1}, {0, 1, 1}};
    auto report = fit_thresholds(p, ModelKind::DistMult, pos, neg);
    CHECK(report.valid_accuracy == doctest::Approx(1.0));
    CHECK(classification_accuracy(p, ModelKind::DistMult, report, pos, neg) ==
          doctest::Approx(1.0));
}

TEST_CASE("fit_thresholds: no validation data is rejected") {
    auto p = blank_params(ModelKind::DistMult, 2, 1, 2);
    p.entity_emb.setZero();
    p.relation_emb.setZero();
    CHECK_THROWS_AS(fit_thresholds(p, ModelKind::DistMult, {}, {}), std::invalid_argument);
}

TEST_CASE("fit_thresholds: unseen relation falls back to the global threshold") {
    auto p = blank_params(ModelKind::DistMult, 2, 2, 2);
    p.entity_emb << 1, 0, -1, 0;
    p.relation_emb << 1, 0, 1, 0;
    std::vector<Triple> pos = {{0, 0, 0}};
    std::vector<Triple> neg = {{0, 0, 1}};
    auto report = fit_thresholds(p, ModelKind::DistMult, pos, neg);
    CHECK(report.thresholds.count(1) == 0);
    // Relation 1 scores identically to relation 0 here, so the global
    // threshold still separates the test pairs.
    double acc = classification_accuracy(p, ModelKind::DistMult, report,
                                         {{0, 1, 0}}, {{0, 1, 1}});
    CHECK(acc == doctest::Approx(1.0));
}

TEST_CASE("classify: fitting and scoring the same balanced data beats chance") {
    TripleStore kg = tiny_kg();
    FilterIndex filter = build_filter_index(kg);
    RelationStats stats = compute_relation_stats(kg.train, kg.num_relations);
    auto p = init_params<double>(ModelKind::DistMult, kg.num_entities, kg.num_relations, 8, 5);
    auto neg = generate_classification_negatives(kg.train, stats, filter,
                                                 kg.num_entities, 77);
    auto report = fit_thresholds(p, ModelKind::DistMult, kg.train, neg);
    report = classify(p, ModelKind::DistMult, report, kg.train, neg);
    CHECK(report.valid_accuracy >= 0.5);
    CHECK(report.test_accuracy == doctest::Approx(report.valid_accuracy));
}

TEST_CASE("generate_classification_negatives: corrupted, filtered, deterministic") {
    TripleStore kg = desk_kg(41);
    FilterIndex filter = build_filter_index(kg);
    RelationStats stats = compute_relation_stats(kg.train, kg.num_relations);
    auto a = generate_classification_negatives(kg.valid, stats, filter,
                                               kg.num_entities, 5);
    auto b = generate_classification_negatives(kg.valid, stats, filter,
                                               kg.num_entities, 5);
    CHECK(a == b);
    CHECK(a.size() == kg.valid.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].rel == kg.valid[i].rel);
        CHECK(a[i] != kg.valid[i]);
        CHECK(!filter.contains(a[i]));
        // exactly one side corrupted
        CHECK(((a[i].head == kg.valid[i].head) != (a[i].tail == kg.valid[i].tail)));
    }
}
