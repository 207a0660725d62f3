#pragma once

#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "nscache/types.hpp"

namespace nscache {

// First-seen-order dense dictionary for entity / relation names.
class Dictionary {
  public:
    std::int32_t get_or_add(const std::string& name) {
        auto it = index_.find(name);
        if (it != index_.end()) return it->second;
        std::int32_t id = static_cast<std::int32_t>(names_.size());
        index_.emplace(name, id);
        names_.push_back(name);
        return id;
    }
    const std::string& name(std::int32_t id) const { return names_.at(id); }
    std::int32_t id(const std::string& name) const { return index_.at(name); }
    bool contains(const std::string& name) const { return index_.count(name) > 0; }
    std::int32_t size() const { return static_cast<std::int32_t>(names_.size()); }
    const std::vector<std::string>& names() const { return names_; }

  private:
    std::unordered_map<std::string, std::int32_t> index_;
    std::vector<std::string> names_;
};

// All known true triples across the three splits, plus candidate lookup
// maps used by filtered ranking.
struct FilterIndex {
    std::unordered_set<std::uint64_t> all_true;  // packed triples
    std::unordered_map<std::uint64_t, std::vector<EntityId>> tails_by_hr;
    std::unordered_map<std::uint64_t, std::vector<EntityId>> heads_by_rt;

    bool contains(const Triple& t) const { return all_true.count(pack_triple(t)) > 0; }
};

// Per-relation Bernoulli corruption statistics (tph / hpt over train only).
struct RelationStats {
    std::vector<double> tph;
    std::vector<double> hpt;
    std::vector<double> p_replace_head;  // tph / (tph + hpt), 0.5 for unseen relations
};

// Reads one TSV split (`head<TAB>relation<TAB>tail`), growing the dictionaries
// in first-seen order. Throws std::runtime_error with the line number on a
// malformed line.
std::vector<Triple> load_split(const std::string& path, Dictionary& entities,
                               Dictionary& relations);

// Loads train/valid/test TSV files from `dir` (train.txt, valid.txt, test.txt),
// optionally applying entity2id.txt / relation2id.txt when present.
struct LoadedDataset {
    TripleStore store;
    Dictionary entities;
    Dictionary relations;
};
LoadedDataset load_dataset(const std::string& dir);

// Loads a `name<TAB>id` dictionary file with dense ids from 0.
Dictionary load_dictionary_file(const std::string& path);

FilterIndex build_filter_index(const TripleStore& store);

RelationStats compute_relation_stats(const std::vector<Triple>& train,
                                     RelationId num_relations);

}  // namespace nscache
