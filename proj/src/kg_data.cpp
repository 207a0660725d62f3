#include "nscache/kg_data.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace nscache {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<Triple> load_split(const std::string& path, Dictionary& entities,
                               Dictionary& relations) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open triple file: " + path);

    std::vector<Triple> triples;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, '\t')) fields.push_back(trim(field));
        if (fields.size() != 3)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected 3 tab-separated fields, got " +
                                     std::to_string(fields.size()));
        Triple t;
        t.head = entities.get_or_add(fields[0]);
        t.rel = relations.get_or_add(fields[1]);
        t.tail = entities.get_or_add(fields[2]);
        triples.push_back(t);
    }
    return triples;
}

Dictionary load_dictionary_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dictionary file: " + path);
    Dictionary dict;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected `name<TAB>id`");
        std::string name = trim(line.substr(0, tab));
        std::int32_t id = std::stoi(trim(line.substr(tab + 1)));
        std::int32_t got = dict.get_or_add(name);
        if (got != id)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": ids must be dense from 0 in file order");
    }
    return dict;
}

LoadedDataset load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    LoadedDataset ds;
    if (fs::exists(fs::path(dir) / "entity2id.txt"))
        ds.entities = load_dictionary_file((fs::path(dir) / "entity2id.txt").string());
    if (fs::exists(fs::path(dir) / "relation2id.txt"))
        ds.relations = load_dictionary_file((fs::path(dir) / "relation2id.txt").string());

    auto split_path = [&](const char* name) {
        fs::path p = fs::path(dir) / name;
        if (!fs::exists(p))
            throw std::runtime_error("missing split file: " + p.string());
        return p.string();
    };
    ds.store.train = load_split(split_path("train.txt"), ds.entities, ds.relations);
    ds.store.valid = load_split(split_path("valid.txt"), ds.entities, ds.relations);
    ds.store.test = load_split(split_path("test.txt"), ds.entities, ds.relations);
    ds.store.num_entities = ds.entities.size();
    ds.store.num_relations = ds.relations.size();
    return ds;
}

FilterIndex build_filter_index(const TripleStore& store) {
    FilterIndex idx;
    auto add = [&](const std::vector<Triple>& split) {
        for (const Triple& t : split) {
            if (!idx.all_true.insert(pack_triple(t)).second) continue;
            idx.tails_by_hr[pack_pair(t.head, t.rel)].push_back(t.tail);
            idx.heads_by_rt[pack_pair(t.rel, t.tail)].push_back(t.head);
        }
    };
    add(store.train);
    add(store.valid);
    add(store.test);
    for (auto& [k, v] : idx.tails_by_hr) std::sort(v.begin(), v.end());
    for (auto& [k, v] : idx.heads_by_rt) std::sort(v.begin(), v.end());
    return idx;
}

RelationStats compute_relation_stats(const std::vector<Triple>& train,
                                     RelationId num_relations) {
    RelationStats stats;
    stats.tph.assign(num_relations, 1.0);
    stats.hpt.assign(num_relations, 1.0);
    stats.p_replace_head.assign(num_relations, 0.5);

    std::vector<std::set<std::uint64_t>> pairs(num_relations);
    std::vector<std::set<EntityId>> heads(num_relations), tails(num_relations);
    for (const Triple& t : train) {
        pairs[t.rel].insert(pack_pair(t.head, t.tail));
        heads[t.rel].insert(t.head);
        tails[t.rel].insert(t.tail);
    }
    for (RelationId r = 0; r < num_relations; ++r) {
        if (pairs[r].empty()) continue;  // unseen relation keeps the 0.5 default
        stats.tph[r] = static_cast<double>(pairs[r].size()) / heads[r].size();
        stats.hpt[r] = static_cast<double>(pairs[r].size()) / tails[r].size();
        stats.p_replace_head[r] = stats.tph[r] / (stats.tph[r] + stats.hpt[r]);
    }
    return stats;
}

}  // namespace nscache
