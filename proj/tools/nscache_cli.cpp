// Command-line front end: preprocess / train / eval / classify / diag / ablate.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "nscache/checkpoint.hpp"
#include "nscache/diagnostics.hpp"
#include "nscache/evaluation.hpp"
#include "nscache/run_config.hpp"
#include "nscache/training.hpp"

namespace fs = std::filesystem;
using namespace nscache;

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> out;
    std::string checkpoint;
};

RunConfig load_config(const CommonFlags& flags) {
    RunConfig cfg = RunConfig::from_file(flags.config_path);
    if (flags.seed) cfg.train.seed = *flags.seed;
    if (flags.threads) cfg.threads = *flags.threads;
    if (flags.out) cfg.out_dir = *flags.out;
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

// Echo the resolved config and seed so the run is reproducible from the
// output directory alone.
void stamp_run_dir(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    write_text(fs::path(cfg.out_dir) / "config.resolved", cfg.resolved_text());
}

fs::path stats_path(const RunConfig& cfg) { return fs::path(cfg.out_dir) / "stats.tsv"; }

int cmd_preprocess(const RunConfig& cfg) {
    stamp_run_dir(cfg);
    LoadedDataset ds = load_dataset(cfg.dataset_dir);
    FilterIndex filter = build_filter_index(ds.store);
    RelationStats stats = compute_relation_stats(ds.store.train, ds.store.num_relations);

    std::ostringstream ent, rel, st;
    for (std::int32_t i = 0; i < ds.entities.size(); ++i)
        ent << ds.entities.name(i) << "\t" << i << "\n";
    for (std::int32_t i = 0; i < ds.relations.size(); ++i)
        rel << ds.relations.name(i) << "\t" << i << "\n";
    st.precision(17);
    for (RelationId r = 0; r < ds.store.num_relations; ++r)
        st << r << "\t" << stats.tph[r] << "\t" << stats.hpt[r] << "\t"
           << stats.p_replace_head[r] << "\n";
    write_text(fs::path(cfg.out_dir) / "entity2id.txt", ent.str());
    write_text(fs::path(cfg.out_dir) / "relation2id.txt", rel.str());
    write_text(stats_path(cfg), st.str());

    // Filter index as sorted packed triples, binary little-endian.
    std::vector<std::uint64_t> all(filter.all_true.begin(), filter.all_true.end());
    std::sort(all.begin(), all.end());
    std::ofstream bin(fs::path(cfg.out_dir) / "all_true.bin", std::ios::binary);
    bin.write(reinterpret_cast<const char*>(all.data()),
              static_cast<std::streamsize>(all.size() * sizeof(std::uint64_t)));

    std::cout << "preprocess: " << ds.store.train.size() << " train / "
              << ds.store.valid.size() << " valid / " << ds.store.test.size()
              << " test triples, " << ds.store.num_entities << " entities, "
              << ds.store.num_relations << " relations\n";
    return 0;
}

void write_reports(const fs::path& path, const std::vector<EpochReport>& reports) {
    std::ofstream out(path);
    for (const auto& r : reports) {
        char wall[32];
        std::snprintf(wall, sizeof(wall), " wall=%.3f", r.wall_seconds);
        out << r.to_line() << wall << "\n";
    }
}

int cmd_train(const RunConfig& cfg) {
    if (!fs::exists(stats_path(cfg)))
        throw std::runtime_error("missing preprocess artifacts in " + cfg.out_dir +
                                 "; run `preprocess` first");
    stamp_run_dir(cfg);
    LoadedDataset ds = load_dataset(cfg.dataset_dir);

    TrainResult<float> result = train<float>(ds.store, cfg.train);
    write_reports(fs::path(cfg.out_dir) / "epochs.txt", result.reports);
    CheckpointMeta meta;
    meta.epoch = cfg.train.epochs;
    save_checkpoint(result.params, meta, (fs::path(cfg.out_dir) / "final.ckpt").string());
    meta.epoch = result.best_epoch >= 0 ? result.best_epoch : cfg.train.epochs;
    save_checkpoint(result.best_params, meta,
                    (fs::path(cfg.out_dir) / "best.ckpt").string());
    if (cfg.train.sampler.strategy == SamplerConfig::Strategy::NSCaching)
        save_cache(result.cache, cfg.train.sampler.n1,
                   (fs::path(cfg.out_dir) / "cache.bin").string());
    std::cout << "train: done, best valid MRR " << result.best_valid_mrr << " at epoch "
              << result.best_epoch << "\n";
    return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& checkpoint) {
    stamp_run_dir(cfg);
    LoadedDataset ds = load_dataset(cfg.dataset_dir);
    auto [params, meta] = load_checkpoint<float>(checkpoint);
    check_checkpoint_compatible(params, cfg.train.model_kind, cfg.train.dim,
                                ds.store.num_entities, ds.store.num_relations);
    FilterIndex filter = build_filter_index(ds.store);
    LinkPredMetrics m = evaluate_link_prediction(params, params.kind, ds.store.test,
                                                 filter, cfg.eval_raw, cfg.threads);
    std::ostringstream rec;
    rec.precision(9);
    rec << "split=test mode=" << (cfg.eval_raw ? "raw" : "filtered")
        << " ties=optimistic mrr=" << m.mrr << " mr=" << m.mr << " hit10=" << m.hit10
        << " queries=" << m.count << " head_mrr=" << m.head.mrr
        << " tail_mrr=" << m.tail.mrr << "\n";
    write_text(fs::path(cfg.out_dir) / "metrics.txt", rec.str());
    std::cout << rec.str();
    return 0;
}

std::vector<Triple> load_optional_negatives(const RunConfig& cfg, const char* name,
                                            LoadedDataset& ds) {
    fs::path p = fs::path(cfg.dataset_dir) / name;
    if (!fs::exists(p)) return {};
    return load_split(p.string(), ds.entities, ds.relations);
}

int cmd_classify(const RunConfig& cfg, const std::string& checkpoint) {
    stamp_run_dir(cfg);
    LoadedDataset ds = load_dataset(cfg.dataset_dir);
    auto [params, meta] = load_checkpoint<float>(checkpoint);
    check_checkpoint_compatible(params, cfg.train.model_kind, cfg.train.dim,
                                ds.store.num_entities, ds.store.num_relations);

    std::vector<Triple> valid_neg = load_optional_negatives(cfg, "valid_neg.txt", ds);
    std::vector<Triple> test_neg = load_optional_negatives(cfg, "test_neg.txt", ds);
    if (valid_neg.empty() || test_neg.empty()) {
        std::cout << "classify: no negative files found, generating seeded Bernoulli "
                     "negatives filtered against known triples\n";
        FilterIndex filter = build_filter_index(ds.store);
        RelationStats stats =
            compute_relation_stats(ds.store.train, ds.store.num_relations);
        if (valid_neg.empty())
            valid_neg = generate_classification_negatives(
                ds.store.valid, stats, filter, ds.store.num_entities, cfg.train.seed);
        if (test_neg.empty())
            test_neg = generate_classification_negatives(
                ds.store.test, stats, filter, ds.store.num_entities, cfg.train.seed + 1);
    }
    ClassificationReport report =
        fit_thresholds(params, params.kind, ds.store.valid, valid_neg);
    report = classify(params, params.kind, report, ds.store.test, test_neg);

    std::ostringstream rec;
    rec.precision(9);
    rec << "valid_accuracy=" << report.valid_accuracy
        << " test_accuracy=" << report.test_accuracy
        << " relations=" << report.thresholds.size() << "\n";
    write_text(fs::path(cfg.out_dir) / "classification.txt", rec.str());
    std::cout << rec.str();
    return 0;
}

int cmd_diag(const RunConfig& cfg, const std::string& checkpoint,
             const std::string& triple_arg, bool ccdf_head) {
    stamp_run_dir(cfg);
    LoadedDataset ds = load_dataset(cfg.dataset_dir);
    auto [params, meta] = load_checkpoint<float>(checkpoint);
    check_checkpoint_compatible(params, cfg.train.model_kind, cfg.train.dim,
                                ds.store.num_entities, ds.store.num_relations);

    Triple pos;
    if (!triple_arg.empty()) {
        std::istringstream ss(triple_arg);
        std::string h, r, t;
        if (!(ss >> h >> r >> t))
            throw std::runtime_error("--triple expects `head relation tail`");
        pos = Triple{ds.entities.id(h), ds.relations.id(r), ds.entities.id(t)};
    } else {
        if (ds.store.test.empty()) throw std::runtime_error("no test triples for diag");
        pos = ds.store.test.front();
    }

    std::vector<double> grid;
    for (double x = -20.0; x <= 20.0 + 1e-9; x += 0.5) grid.push_back(x);
    auto ccdf = ccdf_negative_scores(params, params.kind, pos, grid,
                                     ccdf_head ? Slot::Head : Slot::Tail);
    std::ostringstream rec;
    rec.precision(9);
    rec << "# ccdf slot=" << (ccdf_head ? "head" : "tail")
        << " rr_def=1-distinct/total nzl_def=loss>floor floor="
        << detail::kLogisticNonzeroFloor << "\n";
    for (auto [x, f] : ccdf) rec << "ccdf x=" << x << " F=" << f << "\n";
    write_text(fs::path(cfg.out_dir) / "diag.txt", rec.str());
    std::cout << rec.str();
    return 0;
}

// Runs the select_rule x update_rule grid plus the Bernoulli baseline with a
// shared batch-order seed and reports MRR / NZL / RR / CE per variant.
int cmd_ablate(const RunConfig& cfg) {
    stamp_run_dir(cfg);
    LoadedDataset ds = load_dataset(cfg.dataset_dir);
    FilterIndex filter = build_filter_index(ds.store);

    struct Variant {
        std::string name;
        TrainConfig train;
    };
    std::vector<Variant> variants;
    {
        TrainConfig base = cfg.train;
        base.sampler.strategy = SamplerConfig::Strategy::Bernoulli;
        variants.push_back({"bernoulli", base});
        for (auto select : {SamplerConfig::SelectRule::Uniform,
                            SamplerConfig::SelectRule::Importance,
                            SamplerConfig::SelectRule::Top})
            for (auto update : {SamplerConfig::UpdateRule::Importance,
                                SamplerConfig::UpdateRule::Top}) {
                TrainConfig t = cfg.train;
                t.sampler.strategy = SamplerConfig::Strategy::NSCaching;
                t.sampler.select_rule = select;
                t.sampler.update_rule = update;
                std::string sel = select == SamplerConfig::SelectRule::Uniform ? "uniform"
                                  : select == SamplerConfig::SelectRule::Importance
                                      ? "importance"
                                      : "top";
                std::string upd =
                    update == SamplerConfig::UpdateRule::Importance ? "importance" : "top";
                variants.push_back({sel + "-select/" + upd + "-update", t});
            }
    }

    std::ostringstream table;
    table.precision(6);
    table << "variant\tmrr\tnzl\trr\tce\n";
    for (const Variant& v : variants) {
        DiagWindow window(/*window_epochs=*/20,
                          is_translational(v.train.model_kind)
                              ? 0.0
                              : detail::kLogisticNonzeroFloor);
        double last_rr = 0.0, last_nzl = 0.0;
        CacheSnapshot prev_heads;
        std::size_t ce_total = 0, ce_epochs = 0;
        int epochs_seen = 0;

        TrainHooks hooks;
        hooks.on_sample = [&](int, const Triple& neg, double loss) {
            window.add_sample(neg, loss);
        };
        hooks.on_epoch_end = [&](int epoch, const NegCache& cache) {
            epochs_seen = epoch + 1;
            if (window.window_full(epochs_seen) && !window.empty()) {
                last_rr = window.repeat_ratio();
                last_nzl = window.nonzero_loss_ratio();
                window.reset();
            }
            if (!cache.head_cache.empty()) {
                CacheSnapshot now = snapshot_cache(cache.head_cache);
                if (!prev_heads.empty() && prev_heads.size() == now.size()) {
                    ce_total += changed_elements(prev_heads, now);
                    ++ce_epochs;
                }
                prev_heads = std::move(now);
            }
        };
        TrainResult<float> r = train<float>(ds.store, v.train, hooks);
        if (!window.empty()) {
            last_rr = window.repeat_ratio();
            last_nzl = window.nonzero_loss_ratio();
        }
        LinkPredMetrics m = evaluate_link_prediction(r.params, v.train.model_kind,
                                                     ds.store.test, filter, false,
                                                     cfg.threads);
        double mean_ce = ce_epochs ? static_cast<double>(ce_total) / ce_epochs : 0.0;
        table << v.name << "\t" << m.mrr << "\t" << last_nzl << "\t" << last_rr << "\t"
              << mean_ce << "\n";
        std::cout << v.name << ": mrr=" << m.mrr << " nzl=" << last_nzl
                  << " rr=" << last_rr << " ce=" << mean_ce << "\n";
    }
    write_text(fs::path(cfg.out_dir) / "ablation.tsv", table.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NSCaching knowledge-graph embedding trainer"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string triple_arg;
    bool ccdf_head = false;

    auto add_common = [&](CLI::App* sub, bool needs_checkpoint = false) {
        sub->add_option("--config", flags.config_path, "run config file")->required();
        sub->add_option("--seed", flags.seed, "override config seed");
        sub->add_option("--threads", flags.threads, "worker thread cap");
        sub->add_option("--out", flags.out, "override output directory");
        if (needs_checkpoint)
            sub->add_option("--checkpoint", flags.checkpoint, "checkpoint path")
                ->required();
    };

    auto* preprocess = app.add_subcommand("preprocess", "build dictionaries and stats");
    add_common(preprocess);
    auto* trainc = app.add_subcommand("train", "run training");
    add_common(trainc);
    auto* evalc = app.add_subcommand("eval", "filtered link prediction on test");
    add_common(evalc, true);
    auto* classifyc = app.add_subcommand("classify", "triplet classification");
    add_common(classifyc, true);
    auto* diagc = app.add_subcommand("diag", "diagnostic records");
    add_common(diagc, true);
    diagc->add_option("--triple", triple_arg, "positive triple `head rel tail` for the CCDF");
    diagc->add_flag("--ccdf-head", ccdf_head, "CCDF over head replacement (default tail)");
    auto* ablatec = app.add_subcommand("ablate", "select/update rule grid + baseline");
    add_common(ablatec);

    CLI11_PARSE(app, argc, argv);
    try {
        RunConfig cfg = load_config(flags);
        if (preprocess->parsed()) return cmd_preprocess(cfg);
        if (trainc->parsed()) return cmd_train(cfg);
        if (evalc->parsed()) return cmd_eval(cfg, flags.checkpoint);
        if (classifyc->parsed()) return cmd_classify(cfg, flags.checkpoint);
        if (diagc->parsed()) return cmd_diag(cfg, flags.checkpoint, triple_arg, ccdf_head);
        if (ablatec->parsed()) return cmd_ablate(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
