#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ptk/corpus/shards.hpp"
#include "ptk/model/transformer.hpp"
#include "ptk/train/data_parallel.hpp"
#include "ptk/train/schedule.hpp"

namespace ptk {

/// Fixed-length training window tagged with the blend leaf that owns its first token.
struct Window {
    Sequence tokens;
    std::string leaf;
};

/// Cuts a token stream into consecutive windows of `length` tokens; a final
/// partial window is kept when it has at least two tokens.
std::vector<Window> make_windows(const std::vector<TokenId>& tokens, const std::vector<ShardSegment>& segments,
                                 std::size_t length);

struct LossPoint {
    std::uint64_t step = 0;
    std::uint64_t tokens_seen = 0;
    double lr = 0.0;
    double loss = 0.0;
    Phase phase = Phase::pretrain;
    std::size_t replicas = 1;
    std::size_t batch = 0;
};

template <class Real>
struct ToyTrainResult {
    Params<Real> params;
    std::vector<LossPoint> curve;
    /// Leaf draw counts per phase.
    std::map<Phase, std::map<std::string, std::uint64_t>> draws;
};

struct ToyTrainOptions {
    ModelConfig model;
    TrainPlan plan;
    std::uint64_t seed = 0;
    AdamConfig adam;
    double init_std = 0.02;
};

/// Runs the ramp (stage batch size and replica count change with tokens
/// seen) followed by the continued phase. Each sequence in a batch is drawn
/// by sampling a leaf from the phase's blend (restricted to leaves that have
/// windows) and taking that leaf's next window.
template <class Real>
ToyTrainResult<Real> train_toy(const ToyTrainOptions& options, const std::vector<Window>& windows);

/// Mean next-token loss over windows; perplexity = exp(loss).
template <class Real>
double mean_window_loss(const ModelConfig& config, const Params<Real>& params, const std::vector<Window>& windows);

std::string loss_curve_csv(const std::vector<LossPoint>& curve);

}  // namespace ptk
