#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "nscache/rng.hpp"
#include "nscache/types.hpp"

namespace nscache {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class ModelKind { TransE, TransH, TransD, DistMult, ComplEx };

inline bool is_translational(ModelKind k) {
    return k == ModelKind::TransE || k == ModelKind::TransH || k == ModelKind::TransD;
}

inline std::string model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::TransE: return "transe";
        case ModelKind::TransH: return "transh";
        case ModelKind::TransD: return "transd";
        case ModelKind::DistMult: return "distmult";
        case ModelKind::ComplEx: return "complex";
    }
    throw std::logic_error("bad ModelKind");
}

inline ModelKind model_kind_from_name(const std::string& s) {
    if (s == "transe") return ModelKind::TransE;
    if (s == "transh") return ModelKind::TransH;
    if (s == "transd") return ModelKind::TransD;
    if (s == "distmult") return ModelKind::DistMult;
    if (s == "complex") return ModelKind::ComplEx;
    throw std::runtime_error("unknown model kind: " + s);
}

// Identifies one parameter table inside ModelParams. Order is the checkpoint
// payload order.
enum class TableId : int {
    EntityEmb = 0,
    RelationEmb = 1,
    RelationNorm = 2,   // TransH w_r
    EntityProj = 3,     // TransD w_h / w_t
    RelationProj = 4,   // TransD w_r
    EntityEmbIm = 5,    // ComplEx imaginary parts
    RelationEmbIm = 6,
};
constexpr int kNumTables = 7;

inline const char* table_name(TableId id) {
    static const char* names[] = {"entity_emb",  "relation_emb",  "relation_norm",
                                  "entity_proj", "relation_proj", "entity_emb_im",
                                  "relation_emb_im"};
    return names[static_cast<int>(id)];
}

template <typename Scalar>
struct ModelParams {
    ModelKind kind = ModelKind::TransE;
    int dim = 0;
    EntityId num_entities = 0;
    RelationId num_relations = 0;

    // Unused tables stay 0x0.
    Matrix<Scalar> entity_emb, relation_emb;
    Matrix<Scalar> relation_norm;
    Matrix<Scalar> entity_proj, relation_proj;
    Matrix<Scalar> entity_emb_im, relation_emb_im;

    Matrix<Scalar>& table(TableId id) {
        switch (id) {
            case TableId::EntityEmb: return entity_emb;
            case TableId::RelationEmb: return relation_emb;
            case TableId::RelationNorm: return relation_norm;
            case TableId::EntityProj: return entity_proj;
            case TableId::RelationProj: return relation_proj;
            case TableId::EntityEmbIm: return entity_emb_im;
            case TableId::RelationEmbIm: return relation_emb_im;
        }
        throw std::logic_error("bad TableId");
    }
    const Matrix<Scalar>& table(TableId id) const {
        return const_cast<ModelParams*>(this)->table(id);
    }

    std::vector<TableId> active_tables() const {
        std::vector<TableId> out{TableId::EntityEmb, TableId::RelationEmb};
        switch (kind) {
            case ModelKind::TransH: out.push_back(TableId::RelationNorm); break;
            case ModelKind::TransD:
                out.push_back(TableId::EntityProj);
                out.push_back(TableId::RelationProj);
                break;
            case ModelKind::ComplEx:
                out.push_back(TableId::EntityEmbIm);
                out.push_back(TableId::RelationEmbIm);
                break;
            default: break;
        }
        return out;
    }

    template <typename Other>
    ModelParams<Other> cast() const {
        ModelParams<Other> out;
        out.kind = kind;
        out.dim = dim;
        out.num_entities = num_entities;
        out.num_relations = num_relations;
        for (int i = 0; i < kNumTables; ++i) {
            TableId id = static_cast<TableId>(i);
            out.table(id) = table(id).template cast<Other>();
        }
        return out;
    }
};

// Xavier-uniform fill: i.i.d. uniform on +/- sqrt(6 / (rows + cols)).
template <typename Scalar>
void xavier_fill(Matrix<Scalar>& m, Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    m.resize(rows, cols);
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = static_cast<Scalar>(dist(rng));
}

template <typename Scalar>
ModelParams<Scalar> init_params(ModelKind kind, EntityId num_entities,
                                RelationId num_relations, int dim, std::uint64_t seed) {
    if (num_entities <= 0 || num_relations <= 0 || dim <= 0)
        throw std::invalid_argument("init_params: entity/relation counts and dim must be positive");
    ModelParams<Scalar> p;
    p.kind = kind;
    p.dim = dim;
    p.num_entities = num_entities;
    p.num_relations = num_relations;
    Rng rng = make_stream(seed, /*stream=*/0x1a17);
    xavier_fill(p.entity_emb, num_entities, dim, rng);
    xavier_fill(p.relation_emb, num_relations, dim, rng);
    switch (kind) {
        case ModelKind::TransH:
            xavier_fill(p.relation_norm, num_relations, dim, rng);
            p.relation_norm.rowwise().normalize();
            break;
        case ModelKind::TransD:
            xavier_fill(p.entity_proj, num_entities, dim, rng);
            xavier_fill(p.relation_proj, num_relations, dim, rng);
            break;
        case ModelKind::ComplEx:
            xavier_fill(p.entity_emb_im, num_entities, dim, rng);
            xavier_fill(p.relation_emb_im, num_relations, dim, rng);
            break;
        default: break;
    }
    return p;
}

}  // namespace nscache
