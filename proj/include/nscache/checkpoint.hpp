#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "nscache/model_params.hpp"

namespace nscache {

struct CheckpointMeta {
    std::int64_t epoch = 0;
    std::string config_hash;  // free-form tag, no embedded whitespace
};

// Checkpoint file = plain-text header, then per-table flat little-endian
// float32 payloads in active_tables() order. Round-trips are bit-exact for
// float storage.
//
//   nscache-checkpoint 1
//   model <kind>
//   dim <d>
//   num_entities <n>
//   num_relations <n>
//   epoch <n>
//   config <hash>
//   end
template <typename Scalar>
void save_checkpoint(const ModelParams<Scalar>& params, const CheckpointMeta& meta,
                     const std::string& path) {
    static_assert(sizeof(float) == 4);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << "nscache-checkpoint 1\n"
        << "model " << model_kind_name(params.kind) << "\n"
        << "dim " << params.dim << "\n"
        << "num_entities " << params.num_entities << "\n"
        << "num_relations " << params.num_relations << "\n"
        << "epoch " << meta.epoch << "\n"
        << "config " << (meta.config_hash.empty() ? "-" : meta.config_hash) << "\n"
        << "end\n";
    for (TableId id : params.active_tables()) {
        const auto& m = params.table(id);
        if constexpr (std::is_same_v<Scalar, float>) {
            out.write(reinterpret_cast<const char*>(m.data()),
                      static_cast<std::streamsize>(m.size() * sizeof(float)));
        } else {
            Matrix<float> f = m.template cast<float>();
            out.write(reinterpret_cast<const char*>(f.data()),
                      static_cast<std::streamsize>(f.size() * sizeof(float)));
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

template <typename Scalar>
std::pair<ModelParams<Scalar>, CheckpointMeta> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read checkpoint: " + path);

    auto expect = [&](const std::string& key) -> std::string {
        std::string line;
        if (!std::getline(in, line))
            throw std::runtime_error(path + ": truncated header (missing " + key + ")");
        std::istringstream ss(line);
        std::string k, v;
        ss >> k >> v;
        if (k != key)
            throw std::runtime_error(path + ": corrupt header, expected `" + key +
                                     "`, got `" + k + "`");
        return v;
    };

    if (expect("nscache-checkpoint") != "1")
        throw std::runtime_error(path + ": unsupported checkpoint version");
    ModelParams<Scalar> p;
    CheckpointMeta meta;
    p.kind = model_kind_from_name(expect("model"));
    p.dim = std::stoi(expect("dim"));
    p.num_entities = std::stoi(expect("num_entities"));
    p.num_relations = std::stoi(expect("num_relations"));
    meta.epoch = std::stoll(expect("epoch"));
    meta.config_hash = expect("config");
    if (meta.config_hash == "-") meta.config_hash.clear();
    expect("end");

    for (TableId id : p.active_tables()) {
        Eigen::Index rows =
            (id == TableId::EntityEmb || id == TableId::EntityProj ||
             id == TableId::EntityEmbIm)
                ? p.num_entities
                : p.num_relations;
        Matrix<float> f(rows, p.dim);
        in.read(reinterpret_cast<char*>(f.data()),
                static_cast<std::streamsize>(f.size() * sizeof(float)));
        if (in.gcount() != static_cast<std::streamsize>(f.size() * sizeof(float)))
            throw std::runtime_error(path + ": truncated payload at table " +
                                     table_name(id));
        p.table(id) = f.template cast<Scalar>();
    }
    char extra;
    if (in.read(&extra, 1))
        throw std::runtime_error(path + ": trailing bytes after last table");
    return {std::move(p), std::move(meta)};
}

// Rejects a checkpoint whose shape does not match the run configuration.
template <typename Scalar>
void check_checkpoint_compatible(const ModelParams<Scalar>& p, ModelKind kind, int dim,
                                 EntityId num_entities, RelationId num_relations) {
    if (p.kind != kind)
        throw std::runtime_error("checkpoint model kind mismatch: " +
                                 model_kind_name(p.kind) + " vs " + model_kind_name(kind));
    if (p.dim != dim)
        throw std::runtime_error("checkpoint dim mismatch: " + std::to_string(p.dim) +
                                 " vs " + std::to_string(dim));
    if (p.num_entities != num_entities || p.num_relations != num_relations)
        throw std::runtime_error("checkpoint entity/relation count mismatch");
}

}  // namespace nscache
