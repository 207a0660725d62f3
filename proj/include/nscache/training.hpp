#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "nscache/checkpoint.hpp"
#include "nscache/evaluation.hpp"
#include "nscache/sampling.hpp"
#include "nscache/scoring.hpp"

namespace nscache {

struct TrainConfig {
    ModelKind model_kind = ModelKind::TransE;
    int dim = 50;
    double lr = 1e-3;
    double gamma = 2.0;    // margin (translational models)
    double lambda = 1e-3;  // L2 penalty (semantic models)
    int batch_size = 128;
    int epochs = 100;
    int eval_every = 10;          // validation MRR cadence; 0 disables
    int valid_subsample = 2000;   // cap on valid triples scored during training
    std::uint64_t seed = 0;
    SamplerConfig sampler;
    std::optional<std::string> pretrain_checkpoint;
};

// Loss of one (positive, negative) score pair plus d(loss)/d(score).
struct LossGrad {
    double loss;
    double d_pos;
    double d_neg;
};

// Margin ranking loss [gamma - pos + neg]_+.
inline LossGrad margin_loss_and_grad(double pos_score, double neg_score, double gamma) {
    double loss = gamma - pos_score + neg_score;
    if (loss <= 0.0) return {0.0, 0.0, 0.0};
    return {loss, -1.0, 1.0};
}

inline double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

// Logistic loss log(1+exp(-pos)) + log(1+exp(neg)).
inline LossGrad logistic_loss_and_grad(double pos_score, double neg_score) {
    return {softplus(-pos_score) + softplus(neg_score), -sigmoid(-pos_score),
            sigmoid(neg_score)};
}

// Sparse/lazy Adam: moments live per table with the parameter shapes but are
// read and decayed only for rows that receive gradient; untouched rows keep
// stale moments. Bias correction uses the global step counter.
template <typename Scalar>
struct AdamState {
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    std::vector<Matrix<Scalar>> m, v;  // indexed by TableId
    std::int64_t step = 0;

    explicit AdamState(const ModelParams<Scalar>& p) : m(kNumTables), v(kNumTables) {
        for (TableId id : p.active_tables()) {
            const auto& t = p.table(id);
            m[static_cast<int>(id)] = Matrix<Scalar>::Zero(t.rows(), t.cols());
            v[static_cast<int>(id)] = Matrix<Scalar>::Zero(t.rows(), t.cols());
        }
    }
};

// Sums duplicate row contributions, then applies one Adam update to exactly
// the touched rows. Returns the L2 norm of the summed gradient.
template <typename Scalar>
double adam_step(ModelParams<Scalar>& params, AdamState<Scalar>& state,
                 const SparseGrad<Scalar>& grads, double lr) {
    if (grads.empty()) return 0.0;
    std::unordered_map<std::uint64_t, Vector<Scalar>> summed;
    for (const auto& g : grads) {
        std::uint64_t key = pack_pair(static_cast<int>(g.table), g.row);
        auto [it, fresh] = summed.try_emplace(key, g.value);
        if (!fresh) it->second += g.value;
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(AdamState<Scalar>::kBeta1, state.step);
    const double bc2 = 1.0 - std::pow(AdamState<Scalar>::kBeta2, state.step);

    double sq_norm = 0.0;
    for (auto& [key, g] : summed) {
        const int table = static_cast<int>(key >> kIdBits);
        const auto row = static_cast<Eigen::Index>(key & kIdMask);
        sq_norm += static_cast<double>(g.squaredNorm());
        auto m = state.m[table].row(row);
        auto v = state.v[table].row(row);
        m = AdamState<Scalar>::kBeta1 * m + (1.0 - AdamState<Scalar>::kBeta1) * g.transpose();
        v = AdamState<Scalar>::kBeta2 * v.array() +
            (1.0 - AdamState<Scalar>::kBeta2) * g.transpose().array().square();
        auto m_hat = (m / bc1).array();
        auto v_hat = (v / bc2).array();
        params.table(static_cast<TableId>(table)).row(row).array() -=
            static_cast<Scalar>(lr) * m_hat / (v_hat.sqrt() + AdamState<Scalar>::kEps);
    }
    return std::sqrt(sq_norm);
}

struct EpochReport {
    int epoch = 0;
    double mean_loss = 0.0;
    double nonzero_loss_ratio = 0.0;
    double mean_grad_norm = 0.0;  // mean per-triple gradient L2 norm
    double wall_seconds = 0.0;

    // Deterministic fields only; wall time is appended by the writer.
    std::string to_line() const;
};

inline std::string EpochReport::to_line() const {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "epoch=%d loss=%.9g nzl=%.9g gnorm=%.9g", epoch,
                  mean_loss, nonzero_loss_ratio, mean_grad_norm);
    return buf;
}

// Observation points for the diagnostics module; all optional.
struct TrainHooks {
    // Fired once per sampled (positive, negative) pair with its loss.
    std::function<void(int epoch, const Triple& neg, double loss)> on_sample;
    // Fired after each epoch with the live cache (empty for non-NSCaching runs).
    std::function<void(int epoch, const NegCache& cache)> on_epoch_end;
};

template <typename Scalar>
struct TrainResult {
    ModelParams<Scalar> params;       // final
    ModelParams<Scalar> best_params;  // best validation MRR (== final if never evaluated)
    double best_valid_mrr = -1.0;
    int best_epoch = -1;
    std::vector<EpochReport> reports;
    NegCache cache;
};

namespace detail {

constexpr double kLogisticNonzeroFloor = 1e-6;

// Distinct (table, row) pairs touched by a gradient list.
template <typename Scalar>
std::vector<std::pair<TableId, std::int32_t>> touched_rows(const SparseGrad<Scalar>& g) {
    std::vector<std::pair<TableId, std::int32_t>> rows;
    std::unordered_set<std::uint64_t> seen;
    for (const auto& c : g)
        if (seen.insert(pack_pair(static_cast<int>(c.table), c.row)).second)
            rows.push_back({c.table, c.row});
    return rows;
}

}  // namespace detail

// Loss and gradient of one (positive, negative) pair under the model's loss:
// margin ranking for translational kinds, logistic plus lambda * L2 on the
// touched rows for semantic kinds. Gradients are appended to `out`.
template <typename Scalar>
double pair_loss_grad(const ModelParams<Scalar>& params, const TrainConfig& cfg,
                      const Triple& pos, const Triple& neg, SparseGrad<Scalar>* out) {
    const double pos_score = static_cast<double>(score(cfg.model_kind, params, pos));
    const double neg_score = static_cast<double>(score(cfg.model_kind, params, neg));
    LossGrad lg = is_translational(cfg.model_kind)
                      ? margin_loss_and_grad(pos_score, neg_score, cfg.gamma)
                      : logistic_loss_and_grad(pos_score, neg_score);
    double loss = lg.loss;

    SparseGrad<Scalar> local;
    if (lg.d_pos != 0.0) {
        auto g = grad(cfg.model_kind, params, pos, static_cast<Scalar>(lg.d_pos));
        local.insert(local.end(), g.begin(), g.end());
    }
    if (lg.d_neg != 0.0) {
        auto g = grad(cfg.model_kind, params, neg, static_cast<Scalar>(lg.d_neg));
        local.insert(local.end(), g.begin(), g.end());
    }
    if (!is_translational(cfg.model_kind) && cfg.lambda > 0.0) {
        // L2 penalty on the rows this pair touches, once per distinct row.
        SparseGrad<Scalar> probe = grad(cfg.model_kind, params, pos, Scalar{1});
        auto probe2 = grad(cfg.model_kind, params, neg, Scalar{1});
        probe.insert(probe.end(), probe2.begin(), probe2.end());
        for (auto [table, row] : detail::touched_rows(probe)) {
            const auto r = params.table(table).row(row);
            loss += cfg.lambda * static_cast<double>(r.squaredNorm());
            local.push_back(
                {table, row, (2.0 * cfg.lambda * r.transpose().template cast<double>())
                                 .template cast<Scalar>()});
        }
    }
    if (out) out->insert(out->end(), local.begin(), local.end());
    return loss;
}

template <typename Scalar>
void renormalize_transh(ModelParams<Scalar>& params, const SparseGrad<Scalar>& grads) {
    if (params.kind != ModelKind::TransH) return;
    std::unordered_set<std::int32_t> rows;
    for (const auto& g : grads)
        if (g.table == TableId::RelationNorm) rows.insert(g.row);
    for (std::int32_t r : rows) params.relation_norm.row(r).normalize();
}

// Algorithm loop: per epoch shuffle the train split, walk batches of
// batch_size, draw one negative per positive under the configured sampler,
// accumulate the pair gradients, and take one Adam step per batch. NSCaching
// refreshes both touched cache entries right after each draw.
template <typename Scalar>
TrainResult<Scalar> train(const TripleStore& store, const TrainConfig& cfg,
                          const TrainHooks& hooks = {}) {
    cfg.sampler.validate(store.num_entities);
    const ModelKind kind = cfg.model_kind;

    TrainResult<Scalar> result;
    if (cfg.pretrain_checkpoint) {
        auto [loaded, meta] = load_checkpoint<Scalar>(*cfg.pretrain_checkpoint);
        check_checkpoint_compatible(loaded, kind, cfg.dim, store.num_entities,
                                    store.num_relations);
        result.params = std::move(loaded);
    } else {
        result.params =
            init_params<Scalar>(kind, store.num_entities, store.num_relations, cfg.dim, cfg.seed);
    }
    ModelParams<Scalar>& params = result.params;
    AdamState<Scalar> adam(params);

    const FilterIndex filter = build_filter_index(store);
    const RelationStats stats = compute_relation_stats(store.train, store.num_relations);

    Rng batch_rng = make_stream(cfg.seed, 0xba7c);
    Rng sampler_rng = make_stream(cfg.seed, 0x5a31);
    Rng eval_rng = make_stream(cfg.seed, 0xe7a1);

    // Fixed validation subsample for model selection during training.
    std::vector<Triple> valid_sub = store.valid;
    if (cfg.valid_subsample > 0 &&
        valid_sub.size() > static_cast<std::size_t>(cfg.valid_subsample)) {
        std::shuffle(valid_sub.begin(), valid_sub.end(), eval_rng);
        valid_sub.resize(cfg.valid_subsample);
    }

    std::vector<std::size_t> order(store.train.size());
    std::iota(order.begin(), order.end(), 0);

    auto make_scorer = [&](Slot slot, const Triple& pos) -> CandidateScorer {
        return [&params, kind, slot, pos](const std::vector<EntityId>& cands) {
            std::vector<Scalar> s = score_candidates(kind, params, pos, slot, cands);
            return std::vector<double>(s.begin(), s.end());
        };
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), batch_rng);

        double loss_sum = 0.0, grad_norm_sum = 0.0;
        std::size_t nonzero = 0;
        SparseGrad<Scalar> batch_grads;
        std::size_t in_batch = 0;

        auto flush = [&] {
            if (in_batch == 0) return;
            adam_step(params, adam, batch_grads, cfg.lr);
            renormalize_transh(params, batch_grads);
            batch_grads.clear();
            in_batch = 0;
        };

        for (std::size_t idx : order) {
            const Triple& pos = store.train[idx];
            Triple neg;
            switch (cfg.sampler.strategy) {
                case SamplerConfig::Strategy::Uniform:
                    neg = uniform_corrupt(pos, store.num_entities, sampler_rng);
                    break;
                case SamplerConfig::Strategy::Bernoulli:
                    neg = bernoulli_corrupt(pos, stats, store.num_entities, sampler_rng);
                    break;
                case SamplerConfig::Strategy::NSCaching: {
                    NsCacheDraw draw =
                        nscache_sample(result.cache, cfg.sampler, pos, stats,
                                       store.num_entities, epoch, make_scorer, sampler_rng);
                    neg = draw.negative;
                    cache_update(result.cache.head_cache.at(draw.head_key),
                                 make_scorer(Slot::Head, pos), cfg.sampler, epoch,
                                 store.num_entities, sampler_rng);
                    cache_update(result.cache.tail_cache.at(draw.tail_key),
                                 make_scorer(Slot::Tail, pos), cfg.sampler, epoch,
                                 store.num_entities, sampler_rng);
                    break;
                }
            }

            SparseGrad<Scalar> pair;
            double loss = pair_loss_grad(params, cfg, pos, neg, &pair);
            if (!std::isfinite(loss))
                throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) +
                                         "; check learning rate and model configuration");
            loss_sum += loss;
            const double floor =
                is_translational(kind) ? 0.0 : detail::kLogisticNonzeroFloor;
            if (loss > floor) ++nonzero;
            double sq = 0.0;
            for (const auto& c : pair) sq += static_cast<double>(c.value.squaredNorm());
            grad_norm_sum += std::sqrt(sq);
            if (hooks.on_sample) hooks.on_sample(epoch, neg, loss);

            batch_grads.insert(batch_grads.end(), pair.begin(), pair.end());
            if (++in_batch >= static_cast<std::size_t>(cfg.batch_size)) flush();
        }
        flush();

        EpochReport rep;
        rep.epoch = epoch;
        const double n = std::max<std::size_t>(store.train.size(), 1);
        rep.mean_loss = loss_sum / n;
        rep.nonzero_loss_ratio = static_cast<double>(nonzero) / n;
        rep.mean_grad_norm = grad_norm_sum / n;
        rep.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.reports.push_back(rep);

        if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, result.cache);

        if (cfg.eval_every > 0 && (epoch + 1) % cfg.eval_every == 0 && !valid_sub.empty()) {
            double mrr = evaluate_link_prediction(params, kind, valid_sub, filter).mrr;
            if (mrr > result.best_valid_mrr) {
                result.best_valid_mrr = mrr;
                result.best_epoch = epoch;
                result.best_params = params;
            }
        }
    }
    if (result.best_epoch < 0) result.best_params = params;
    return result;
}

// Bernoulli pretrain, checkpoint, then resume under `continue_cfg`'s sampler
// from the saved parameters (fresh Adam state, fresh cache).
template <typename Scalar>
TrainResult<Scalar> pretrain_then_continue(const TripleStore& store,
                                           const TrainConfig& base_cfg,
                                           TrainConfig continue_cfg,
                                           const std::string& checkpoint_path,
                                           const TrainHooks& hooks = {}) {
    if (base_cfg.sampler.strategy != SamplerConfig::Strategy::Bernoulli)
        throw std::invalid_argument("pretraining uses the Bernoulli sampler");
    TrainResult<Scalar> base = train<Scalar>(store, base_cfg, hooks);
    CheckpointMeta meta;
    meta.epoch = base_cfg.epochs;
    save_checkpoint(base.params, meta, checkpoint_path);
    if (continue_cfg.epochs == 0) return base;
    continue_cfg.pretrain_checkpoint = checkpoint_path;
    return train<Scalar>(store, continue_cfg, hooks);
}

}  // namespace nscache
