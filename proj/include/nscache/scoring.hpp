#pragma once

#include <stdexcept>
#include <vector>

#include "nscache/model_params.hpp"
#include "nscache/types.hpp"

namespace nscache {

template <typename Scalar>
struct GradContribution {
    TableId table;
    std::int32_t row;
    Vector<Scalar> value;
};

// Sparse gradient of (upstream * f) w.r.t. the embedding rows a triple touches.
// At most 8 contributions per triple; duplicates (e.g. h == t) are emitted
// separately and summed at application time.
template <typename Scalar>
using SparseGrad = std::vector<GradContribution<Scalar>>;

namespace detail {

template <typename Scalar>
void check_ids(const ModelParams<Scalar>& p, const Triple& x) {
    if (x.head < 0 || x.head >= p.num_entities || x.tail < 0 || x.tail >= p.num_entities ||
        x.rel < 0 || x.rel >= p.num_relations)
        throw std::out_of_range("triple id out of range");
}

}  // namespace detail

// Plausibility score; larger means more plausible for every model, so the
// translational models return the negated L1 distance.
template <typename Scalar>
Scalar score(ModelKind kind, const ModelParams<Scalar>& p, const Triple& x) {
    detail::check_ids(p, x);
    const auto h = p.entity_emb.row(x.head);
    const auto r = p.relation_emb.row(x.rel);
    const auto t = p.entity_emb.row(x.tail);
    switch (kind) {
        case ModelKind::TransE:
            return -(h + r - t).template lpNorm<1>();
        case ModelKind::TransH: {
            const auto w = p.relation_norm.row(x.rel);
            Vector<Scalar> res = (h - h.dot(w) * w + r - (t - t.dot(w) * w)).transpose();
            return -res.template lpNorm<1>();
        }
        case ModelKind::TransD: {
            const auto wr = p.relation_proj.row(x.rel);
            const auto wh = p.entity_proj.row(x.head);
            const auto wt = p.entity_proj.row(x.tail);
            Vector<Scalar> res =
                (h + wh.dot(h) * wr + r - (t + wt.dot(t) * wr)).transpose();
            return -res.template lpNorm<1>();
        }
        case ModelKind::DistMult:
            return (h.array() * r.array() * t.array()).sum();
        case ModelKind::ComplEx: {
            const auto hi = p.entity_emb_im.row(x.head);
            const auto ri = p.relation_emb_im.row(x.rel);
            const auto ti = p.entity_emb_im.row(x.tail);
            // Re(sum h_c * r_c * conj(t_c))
            return (h.array() * r.array() * t.array()).sum() +
                   (hi.array() * r.array() * ti.array()).sum() +
                   (h.array() * ri.array() * ti.array()).sum() -
                   (hi.array() * ri.array() * t.array()).sum();
        }
    }
    throw std::logic_error("bad ModelKind");
}

// L1 subgradient convention: sign(0) = 0.
template <typename Scalar>
SparseGrad<Scalar> grad(ModelKind kind, const ModelParams<Scalar>& p, const Triple& x,
                        Scalar upstream) {
    detail::check_ids(p, x);
    SparseGrad<Scalar> g;
    if (upstream == Scalar{0}) return g;
    const Vector<Scalar> h = p.entity_emb.row(x.head).transpose();
    const Vector<Scalar> r = p.relation_emb.row(x.rel).transpose();
    const Vector<Scalar> t = p.entity_emb.row(x.tail).transpose();
    auto push = [&](TableId table, std::int32_t row, Vector<Scalar> v) {
        g.push_back({table, row, std::move(v)});
    };
    switch (kind) {
        case ModelKind::TransE: {
            Vector<Scalar> s = (h + r - t).array().sign();
            push(TableId::EntityEmb, x.head, -upstream * s);
            push(TableId::RelationEmb, x.rel, -upstream * s);
            push(TableId::EntityEmb, x.tail, upstream * s);
            break;
        }
        case ModelKind::TransH: {
            const Vector<Scalar> w = p.relation_norm.row(x.rel).transpose();
            Vector<Scalar> s = (h - w.dot(h) * w + r - (t - w.dot(t) * w)).array().sign();
            Vector<Scalar> proj_s = s - w.dot(s) * w;  // (I - w w^T) s
            push(TableId::EntityEmb, x.head, -upstream * proj_s);
            push(TableId::RelationEmb, x.rel, -upstream * s);
            push(TableId::EntityEmb, x.tail, upstream * proj_s);
            Vector<Scalar> gw =
                w.dot(h) * s + s.dot(w) * h - w.dot(t) * s - s.dot(w) * t;
            push(TableId::RelationNorm, x.rel, upstream * gw);
            break;
        }
        case ModelKind::TransD: {
            const Vector<Scalar> wr = p.relation_proj.row(x.rel).transpose();
            const Vector<Scalar> wh = p.entity_proj.row(x.head).transpose();
            const Vector<Scalar> wt = p.entity_proj.row(x.tail).transpose();
            Vector<Scalar> s =
                (h + wh.dot(h) * wr + r - (t + wt.dot(t) * wr)).array().sign();
            const Scalar swr = s.dot(wr);
            push(TableId::EntityEmb, x.head, -upstream * (s + swr * wh));
            push(TableId::RelationEmb, x.rel, -upstream * s);
            push(TableId::EntityEmb, x.tail, upstream * (s + swr * wt));
            push(TableId::EntityProj, x.head, -upstream * swr * h);
            push(TableId::EntityProj, x.tail, upstream * swr * t);
            push(TableId::RelationProj, x.rel,
                 -upstream * (wh.dot(h) - wt.dot(t)) * s);
            break;
        }
        case ModelKind::DistMult: {
            push(TableId::EntityEmb, x.head,
                 upstream * (r.array() * t.array()).matrix());
            push(TableId::RelationEmb, x.rel,
                 upstream * (h.array() * t.array()).matrix());
            push(TableId::EntityEmb, x.tail,
                 upstream * (h.array() * r.array()).matrix());
            break;
        }
        case ModelKind::ComplEx: {
            const Vector<Scalar> hi = p.entity_emb_im.row(x.head).transpose();
            const Vector<Scalar> ri = p.relation_emb_im.row(x.rel).transpose();
            const Vector<Scalar> ti = p.entity_emb_im.row(x.tail).transpose();
            auto had = [](const Vector<Scalar>& a, const Vector<Scalar>& b) {
                return (a.array() * b.array()).matrix().eval();
            };
            push(TableId::EntityEmb, x.head, upstream * (had(r, t) + had(ri, ti)));
            push(TableId::EntityEmbIm, x.head, upstream * (had(r, ti) - had(ri, t)));
            push(TableId::RelationEmb, x.rel, upstream * (had(h, t) + had(hi, ti)));
            push(TableId::RelationEmbIm, x.rel, upstream * (had(h, ti) - had(hi, t)));
            push(TableId::EntityEmb, x.tail, upstream * (had(h, r) - had(hi, ri)));
            push(TableId::EntityEmbIm, x.tail, upstream * (had(hi, r) + had(h, ri)));
            break;
        }
    }
    return g;
}

// Scores `fixed` with its open slot set to each candidate. The fixed side's
// projection is computed once and reused across candidates.
template <typename Scalar>
std::vector<Scalar> score_candidates(ModelKind kind, const ModelParams<Scalar>& p,
                                     Triple fixed, Slot open_slot,
                                     const std::vector<EntityId>& candidates) {
    std::vector<Scalar> out;
    out.reserve(candidates.size());

    // Precompute everything independent of the open slot.
    const bool open_head = open_slot == Slot::Head;
    const Vector<Scalar> r = p.relation_emb.row(fixed.rel).transpose();

    switch (kind) {
        case ModelKind::TransE: {
            const Vector<Scalar> fixed_side =
                open_head ? (r - p.entity_emb.row(fixed.tail).transpose()).eval()
                          : (p.entity_emb.row(fixed.head).transpose() + r).eval();
            for (EntityId e : candidates) {
                const Vector<Scalar> c = p.entity_emb.row(e).transpose();
                out.push_back(open_head ? -(c + fixed_side).template lpNorm<1>()
                                        : -(fixed_side - c).template lpNorm<1>());
            }
            break;
        }
        case ModelKind::TransH: {
            const Vector<Scalar> w = p.relation_norm.row(fixed.rel).transpose();
            const EntityId fixed_e = open_head ? fixed.tail : fixed.head;
            const Vector<Scalar> fe = p.entity_emb.row(fixed_e).transpose();
            const Vector<Scalar> fixed_proj = fe - w.dot(fe) * w;
            const Vector<Scalar> base =
                open_head ? (r - fixed_proj).eval() : (fixed_proj + r).eval();
            for (EntityId e : candidates) {
                const Vector<Scalar> c = p.entity_emb.row(e).transpose();
                const Vector<Scalar> cp = c - w.dot(c) * w;
                out.push_back(open_head ? -(cp + base).template lpNorm<1>()
                                        : -(base - cp).template lpNorm<1>());
            }
            break;
        }
        case ModelKind::TransD: {
            const Vector<Scalar> wr = p.relation_proj.row(fixed.rel).transpose();
            const EntityId fixed_e = open_head ? fixed.tail : fixed.head;
            const Vector<Scalar> fe = p.entity_emb.row(fixed_e).transpose();
            const Vector<Scalar> fw = p.entity_proj.row(fixed_e).transpose();
            const Vector<Scalar> fixed_proj = fe + fw.dot(fe) * wr;
            const Vector<Scalar> base =
                open_head ? (r - fixed_proj).eval() : (fixed_proj + r).eval();
            for (EntityId e : candidates) {
                const Vector<Scalar> c = p.entity_emb.row(e).transpose();
                const Vector<Scalar> cw = p.entity_proj.row(e).transpose();
                const Vector<Scalar> cp = c + cw.dot(c) * wr;
                out.push_back(open_head ? -(cp + base).template lpNorm<1>()
                                        : -(base - cp).template lpNorm<1>());
            }
            break;
        }
        case ModelKind::DistMult: {
            const EntityId fixed_e = open_head ? fixed.tail : fixed.head;
            const Vector<Scalar> prod =
                (r.array() * p.entity_emb.row(fixed_e).transpose().array()).matrix();
            for (EntityId e : candidates) out.push_back(prod.dot(p.entity_emb.row(e)));
            break;
        }
        case ModelKind::ComplEx: {
            const Vector<Scalar> ri = p.relation_emb_im.row(fixed.rel).transpose();
            const EntityId fixed_e = open_head ? fixed.tail : fixed.head;
            const Vector<Scalar> fr = p.entity_emb.row(fixed_e).transpose();
            const Vector<Scalar> fi = p.entity_emb_im.row(fixed_e).transpose();
            // f is linear in (candidate_re, candidate_im) given the fixed side;
            // collapse the fixed side into two coefficient vectors.
            Vector<Scalar> coef_re, coef_im;
            if (open_head) {
                coef_re = (r.array() * fr.array() + ri.array() * fi.array()).matrix();
                coef_im = (r.array() * fi.array() - ri.array() * fr.array()).matrix();
            } else {
                coef_re = (fr.array() * r.array() - fi.array() * ri.array()).matrix();
                coef_im = (fi.array() * r.array() + fr.array() * ri.array()).matrix();
            }
            for (EntityId e : candidates) {
                out.push_back(coef_re.dot(p.entity_emb.row(e)) +
                              coef_im.dot(p.entity_emb_im.row(e)));
            }
            break;
        }
    }
    return out;
}

// All entity ids [0, num_entities), for full ranking scans.
inline std::vector<EntityId> all_entities(EntityId num_entities) {
    std::vector<EntityId> v(num_entities);
    for (EntityId i = 0; i < num_entities; ++i) v[i] = i;
    return v;
}

}  // namespace nscache
