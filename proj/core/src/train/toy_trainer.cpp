#include "ptk/train/toy_trainer.hpp"

#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "ptk/util/errors.hpp"
#include "ptk/util/rng.hpp"

namespace ptk {

std::vector<Window> make_windows(const std::vector<TokenId>& tokens, const std::vector<ShardSegment>& segments,
                                 std::size_t length) {
    if (length < 2) throw ConfigError("make_windows: window length must be >= 2");
    std::vector<Window> out;
    std::size_t seg = 0;
    for (std::size_t begin = 0; begin < tokens.size(); begin += length) {
        const std::size_t end = std::min(tokens.size(), begin + length);
        if (end - begin < 2) break;
        while (seg + 1 < segments.size() && segments[seg].offset + segments[seg].tokens <= begin) ++seg;
        Window w;
        w.tokens.assign(tokens.begin() + static_cast<std::ptrdiff_t>(begin),
                        tokens.begin() + static_cast<std::ptrdiff_t>(end));
        w.leaf = segments.empty() ? std::string("default") : segments[seg].leaf;
        out.push_back(std::move(w));
    }
    return out;
}

namespace {

struct LeafPools {
    std::vector<std::string> names;
    std::vector<std::vector<std::size_t>> windows;
    std::vector<std::size_t> cursor;
    std::unordered_map<std::string, std::size_t> index;
};

LeafPools make_pools(const std::vector<Window>& windows, Rng rng) {
    LeafPools p;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        auto [it, inserted] = p.index.emplace(windows[i].leaf, p.names.size());
        if (inserted) {
            p.names.push_back(windows[i].leaf);
            p.windows.emplace_back();
        }
        p.windows[it->second].push_back(i);
    }
    for (auto& pool : p.windows)
        for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng.below(i)]);
    p.cursor.assign(p.names.size(), 0);
    return p;
}

// Blend weights over available pools; uniform over pools if the blend names none of them.
std::vector<double> pool_weights(const LeafPools& pools, const BlendSpec& blend) {
    std::vector<double> w(pools.names.size(), 0.0);
    bool any = false;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = blend.leaf_weight(pools.names[i]);
        any = any || w[i] > 0.0;
    }
    if (!any) std::fill(w.begin(), w.end(), 1.0);
    return w;
}

}  // namespace

template <class Real>
ToyTrainResult<Real> train_toy(const ToyTrainOptions& options, const std::vector<Window>& windows) {
    if (windows.empty()) throw PipelineError("train_toy: no training windows");
    TrainPlan plan = options.plan;
    plan.validate();
    options.model.validate();
    for (const auto& w : windows)
        if (w.tokens.size() > options.model.seq_len) throw ConfigError("train_toy: window longer than seq_len");

    const Rng root(options.seed);
    Rng init_rng = root.fork("init");
    Rng sample_rng = root.fork("batches");
    LeafPools pools = make_pools(windows, root.fork("window-order"));

    ToyTrainResult<Real> result;
    Params<Real> params = init_params<Real>(options.model, init_rng, options.init_std);
    AdamState<Real> state(params.size());

    const std::uint64_t pretrain_total = plan.pretrain_tokens();
    const std::uint64_t total = pretrain_total + plan.continued.tokens;

    std::uint64_t tokens_seen = 0;
    std::uint64_t step = 0;
    std::size_t stage_idx = 0;
    std::uint64_t stage_end = plan.ramp.front().tokens;

    std::optional<DataParallelGroup<Real>> group;
    std::size_t group_replicas = 0;
    Phase last_phase = Phase::pretrain;
    std::vector<double> weights = pool_weights(pools, plan.pretrain_blend);

    while (tokens_seen < total) {
        while (stage_idx + 1 < plan.ramp.size() && tokens_seen >= stage_end) {
            ++stage_idx;
            stage_end += plan.ramp[stage_idx].tokens;
        }
        const RampStage& stage = plan.ramp[stage_idx];
        const Phase phase = phase_at(plan, tokens_seen);
        if (phase != last_phase || step == 0) {
            weights = pool_weights(pools, phase_blend(plan, tokens_seen));
            last_phase = phase;
        }

        std::vector<Sequence> batch;
        batch.reserve(stage.batch_size);
        std::uint64_t batch_tokens = 0;
        for (std::size_t b = 0; b < stage.batch_size; ++b) {
            const std::size_t leaf = sample_rng.categorical(weights);
            auto& cur = pools.cursor[leaf];
            const auto& pool = pools.windows[leaf];
            const Window& w = windows[pool[cur]];
            cur = (cur + 1) % pool.size();
            batch.push_back(w.tokens);
            batch_tokens += w.tokens.size();
            ++result.draws[phase][pools.names[leaf]];
        }

        if (!group || group_replicas != stage.data_parallel_size) {
            if (group) {
                params = group->replica(0);
                state = group->gathered_state();
            }
            group.emplace(options.model, params, stage.data_parallel_size, state, options.adam);
            group_replicas = stage.data_parallel_size;
        }

        const double lr = lr_at(plan.lr, step);
        const Real loss = group->step(batch, lr);
        tokens_seen += batch_tokens;
        ++step;
        result.curve.push_back({step, tokens_seen, lr, static_cast<double>(loss), phase, group_replicas, batch.size()});
    }
    result.params = group ? group->replica(0) : params;
    return result;
}

template <class Real>
double mean_window_loss(const ModelConfig& config, const Params<Real>& params, const std::vector<Window>& windows) {
    if (windows.empty()) throw PipelineError("mean_window_loss: no windows");
    // Token-weighted so the result is the per-prediction mean.
    double total = 0.0;
    std::uint64_t count = 0;
    for (const auto& w : windows) {
        const double l = static_cast<double>(sequence_loss<Real>(config, params, w.tokens));
        total += l * static_cast<double>(w.tokens.size() - 1);
        count += w.tokens.size() - 1;
    }
    return total / static_cast<double>(count);
}

std::string loss_curve_csv(const std::vector<LossPoint>& curve) {
    std::ostringstream out;
    out << "step,tokens_seen,lr,loss\n";
    char line[128];
    for (const auto& p : curve) {
        std::snprintf(line, sizeof(line), "%llu,%llu,%.9g,%.9g\n", static_cast<unsigned long long>(p.step),
                      static_cast<unsigned long long>(p.tokens_seen), p.lr, p.loss);
        out << line;
    }
    return out.str();
}

template ToyTrainResult<float> train_toy<float>(const ToyTrainOptions&, const std::vector<Window>&);
template ToyTrainResult<double> train_toy<double>(const ToyTrainOptions&, const std::vector<Window>&);
template double mean_window_loss<float>(const ModelConfig&, const Params<float>&, const std::vector<Window>&);
template double mean_window_loss<double>(const ModelConfig&, const Params<double>&, const std::vector<Window>&);

}  // namespace ptk
