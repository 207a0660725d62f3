#pragma once

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <vector>

#include "nscache/kg_data.hpp"
#include "nscache/rng.hpp"
#include "nscache/types.hpp"

namespace nscache::testutil {

// Normal quantile (Acklam's rational approximation), used for chi-square
// critical values via Wilson-Hilferty.
inline double normal_quantile(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    if (p < plow) {
        double q = std::sqrt(-2 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    if (p > phigh) {
        double q = std::sqrt(-2 * std::log(1 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    double q = p - 0.5, r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

// Upper critical value of chi-square(df) at significance alpha
// (Wilson-Hilferty cube approximation; accurate to well under 1% here).
inline double chi2_critical(int df, double alpha) {
    double z = normal_quantile(1.0 - alpha);
    double t = 1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df));
    return df * t * t * t;
}

inline double chi2_statistic(const std::vector<double>& observed,
                             const std::vector<double>& expected) {
    double s = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        double diff = observed[i] - expected[i];
        s += diff * diff / expected[i];
    }
    return s;
}

// Tiny fixed KG for smoke training: 8 entities, 2 relations, 20 triples.
inline TripleStore tiny_kg() {
    TripleStore s;
    s.num_entities = 8;
    s.num_relations = 2;
    // r0: successor ring; r1: +2 ring
    for (EntityId h = 0; h < 8; ++h) s.train.push_back({h, 0, (h + 1) % 8});
    for (EntityId h = 0; h < 8; ++h) s.train.push_back({h, 1, (h + 2) % 8});
    for (EntityId h = 0; h < 2; ++h) s.train.push_back({h, 0, (h + 3) % 8});
    for (EntityId h = 0; h < 2; ++h) s.train.push_back({h, 1, (h + 5) % 8});
    s.valid = {{3, 0, 4}, {5, 1, 7}};
    s.test = {{6, 0, 7}, {2, 1, 4}};
    return s;
}

// Desk-scale KG: 100 entities on a ring. Eight relations are fixed shifts
// (one true tail per head), one is a cluster relation over 20 groups of 5
// (five true tails per head), so held-out facts are inferable from the train
// split and multi-tail queries exist. About 1000 train triples.
inline TripleStore desk_kg(std::uint64_t seed) {
    const EntityId n_ent = 100;
    const std::vector<int> shifts = {1, 2, 3, 7, 17, 25, 40, 63};
    std::vector<Triple> all;
    for (RelationId r = 0; r < static_cast<RelationId>(shifts.size()); ++r)
        for (EntityId h = 0; h < n_ent; ++h)
            all.push_back({h, r, static_cast<EntityId>((h + shifts[r]) % n_ent)});
    const int n_cluster_rels = 2;
    for (int c = 1; c <= n_cluster_rels; ++c) {
        const RelationId cluster_rel = static_cast<RelationId>(shifts.size()) + c - 1;
        for (EntityId h = 0; h < n_ent; ++h) {
            int group = (h / 5 + c) % 20;
            for (int k = 0; k < 5; ++k)
                all.push_back({h, cluster_rel, static_cast<EntityId>(group * 5 + k)});
        }
    }

    Rng rng = make_stream(seed, 0xde5c);
    std::shuffle(all.begin(), all.end(), rng);
    TripleStore s;
    s.num_entities = n_ent;
    s.num_relations = static_cast<RelationId>(shifts.size()) + n_cluster_rels;
    const std::size_t n_valid = all.size() / 10, n_test = all.size() / 10;
    s.valid.assign(all.begin(), all.begin() + n_valid);
    s.test.assign(all.begin() + n_valid, all.begin() + n_valid + n_test);
    s.train.assign(all.begin() + n_valid + n_test, all.end());
    return s;
}

// Uniform random store for oracle-based property tests.
inline TripleStore random_kg(EntityId num_entities, RelationId num_relations,
                             std::size_t n_train, std::size_t n_valid, std::size_t n_test,
                             Rng& rng) {
    TripleStore s;
    s.num_entities = num_entities;
    s.num_relations = num_relations;
    std::uniform_int_distribution<EntityId> ent(0, num_entities - 1);
    std::uniform_int_distribution<RelationId> rel(0, num_relations - 1);
    std::unordered_set<std::uint64_t> seen;
    auto fill = [&](std::vector<Triple>& split, std::size_t n) {
        while (split.size() < n) {
            Triple t{ent(rng), rel(rng), ent(rng)};
            if (seen.insert(pack_triple(t)).second) split.push_back(t);
        }
    };
    fill(s.train, n_train);
    fill(s.valid, n_valid);
    fill(s.test, n_test);
    return s;
}

}  // namespace nscache::testutil
