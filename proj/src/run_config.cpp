#include "nscache/run_config.hpp"

#include <fstream>
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

SamplerConfig::Strategy parse_strategy(const std::string& s) {
    if (s == "uniform") return SamplerConfig::Strategy::Uniform;
    if (s == "bernoulli") return SamplerConfig::Strategy::Bernoulli;
    if (s == "nscaching") return SamplerConfig::Strategy::NSCaching;
    throw std::runtime_error("unknown sampler: " + s);
}

SamplerConfig::SelectRule parse_select(const std::string& s) {
    if (s == "uniform") return SamplerConfig::SelectRule::Uniform;
    if (s == "importance") return SamplerConfig::SelectRule::Importance;
    if (s == "top") return SamplerConfig::SelectRule::Top;
    throw std::runtime_error("unknown select_rule: " + s);
}

SamplerConfig::UpdateRule parse_update(const std::string& s) {
    if (s == "importance") return SamplerConfig::UpdateRule::Importance;
    if (s == "top") return SamplerConfig::UpdateRule::Top;
    throw std::runtime_error("unknown update_rule: " + s);
}

bool parse_bool(const std::string& s) {
    if (s == "true") return true;
    if (s == "false") return false;
    throw std::runtime_error("expected true/false, got: " + s);
}

const char* strategy_name(SamplerConfig::Strategy s) {
    switch (s) {
        case SamplerConfig::Strategy::Uniform: return "uniform";
        case SamplerConfig::Strategy::Bernoulli: return "bernoulli";
        case SamplerConfig::Strategy::NSCaching: return "nscaching";
    }
    return "?";
}

const char* select_name(SamplerConfig::SelectRule s) {
    switch (s) {
        case SamplerConfig::SelectRule::Uniform: return "uniform";
        case SamplerConfig::SelectRule::Importance: return "importance";
        case SamplerConfig::SelectRule::Top: return "top";
    }
    return "?";
}

const char* update_name(SamplerConfig::UpdateRule s) {
    switch (s) {
        case SamplerConfig::UpdateRule::Importance: return "importance";
        case SamplerConfig::UpdateRule::Top: return "top";
    }
    return "?";
}

}  // namespace

RunConfig RunConfig::from_lines(const std::map<std::string, std::string>& kv) {
    RunConfig cfg;
    for (const auto& [key, value] : kv) {
        if (key == "dataset_dir") cfg.dataset_dir = value;
        else if (key == "out_dir") cfg.out_dir = value;
        else if (key == "model") cfg.train.model_kind = model_kind_from_name(value);
        else if (key == "dim") cfg.train.dim = std::stoi(value);
        else if (key == "lr") cfg.train.lr = std::stod(value);
        else if (key == "gamma") cfg.train.gamma = std::stod(value);
        else if (key == "lambda") cfg.train.lambda = std::stod(value);
        else if (key == "batch_size") cfg.train.batch_size = std::stoi(value);
        else if (key == "epochs") cfg.train.epochs = std::stoi(value);
        else if (key == "eval_every") cfg.train.eval_every = std::stoi(value);
        else if (key == "valid_subsample") cfg.train.valid_subsample = std::stoi(value);
        else if (key == "seed") cfg.train.seed = std::stoull(value);
        else if (key == "sampler") cfg.train.sampler.strategy = parse_strategy(value);
        else if (key == "n1") cfg.train.sampler.n1 = std::stoi(value);
        else if (key == "n2") cfg.train.sampler.n2 = std::stoi(value);
        else if (key == "n_lazy") cfg.train.sampler.n_lazy = std::stoi(value);
        else if (key == "select_rule") cfg.train.sampler.select_rule = parse_select(value);
        else if (key == "update_rule") cfg.train.sampler.update_rule = parse_update(value);
        else if (key == "bernoulli_side_choice")
            cfg.train.sampler.bernoulli_side_choice = parse_bool(value);
        else if (key == "pretrain_checkpoint") {
            if (!value.empty()) cfg.train.pretrain_checkpoint = value;
        } else if (key == "schema_version") {
            if (std::stoi(value) != kSchemaVersion)
                throw std::runtime_error("unsupported schema_version: " + value);
        } else if (key == "eval_raw") cfg.eval_raw = parse_bool(value);
        else if (key == "threads") cfg.threads = std::stoi(value);
        else throw std::runtime_error("unknown config key: " + key);
    }
    if (cfg.dataset_dir.empty()) throw std::runtime_error("config requires dataset_dir");
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected `key = value`");
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (!kv.emplace(key, value).second)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": duplicate key " + key);
    }
    return from_lines(kv);
}

std::string RunConfig::resolved_text() const {
    std::ostringstream out;
    out << "schema_version = " << kSchemaVersion << "\n"
        << "dataset_dir = " << dataset_dir << "\n"
        << "out_dir = " << out_dir << "\n"
        << "model = " << model_kind_name(train.model_kind) << "\n"
        << "dim = " << train.dim << "\n"
        << "lr = " << train.lr << "\n"
        << "gamma = " << train.gamma << "\n"
        << "lambda = " << train.lambda << "\n"
        << "batch_size = " << train.batch_size << "\n"
        << "epochs = " << train.epochs << "\n"
        << "eval_every = " << train.eval_every << "\n"
        << "valid_subsample = " << train.valid_subsample << "\n"
        << "seed = " << train.seed << "\n"
        << "sampler = " << strategy_name(train.sampler.strategy) << "\n"
        << "n1 = " << train.sampler.n1 << "\n"
        << "n2 = " << train.sampler.n2 << "\n"
        << "n_lazy = " << train.sampler.n_lazy << "\n"
        << "select_rule = " << select_name(train.sampler.select_rule) << "\n"
        << "update_rule = " << update_name(train.sampler.update_rule) << "\n"
        << "bernoulli_side_choice = "
        << (train.sampler.bernoulli_side_choice ? "true" : "false") << "\n"
        << "pretrain_checkpoint = "
        << (train.pretrain_checkpoint ? *train.pretrain_checkpoint : "") << "\n"
        << "eval_raw = " << (eval_raw ? "true" : "false") << "\n"
        << "threads = " << threads << "\n";
    return out.str();
}

}  // namespace nscache
