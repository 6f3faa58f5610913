#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ptk/model/transformer.hpp"
#include "ptk/train/optimizer.hpp"

namespace ptk {

using Sequence = std::vector<TokenId>;

/// Mean loss and mean gradient (flattened in Params::visit order) over
/// `batch`, summing per-sequence gradients in batch order.
template <class Real>
std::pair<Real, std::vector<Real>> mean_loss_and_grad(const ModelConfig& config, const Params<Real>& params,
                                                      std::span<const Sequence> batch);

/// Single-process reference: full gradient, full Adam state.
template <class Real>
class SerialTrainer {
public:
    SerialTrainer(ModelConfig config, Params<Real> params, AdamConfig adam = {});

    /// One optimizer step on the whole batch; returns the pre-update mean loss.
    Real step(std::span<const Sequence> batch, double lr);

    const Params<Real>& params() const { return params_; }
    const AdamState<Real>& optimizer_state() const { return state_; }

private:
    ModelConfig config_;
    Params<Real> params_;
    AdamConfig adam_;
    AdamState<Real> state_;
};

/// k simulated data-parallel replicas with the optimizer state sharded across
/// them. Each step: every replica computes the mean gradient of its
/// contiguous batch shard; gradients are averaged in ascending replica order
/// (the all-reduce); replica r applies Adam to its own parameter partition
/// only; partitions are then gathered so all replicas hold identical weights.
template <class Real>
class DataParallelGroup {
public:
    DataParallelGroup(ModelConfig config, const Params<Real>& init, std::size_t replicas, AdamConfig adam = {},
                      bool concurrent = false);

    /// Resumes from a gathered (full-length) optimizer state.
    DataParallelGroup(ModelConfig config, const Params<Real>& init, std::size_t replicas,
                      const AdamState<Real>& full_state, AdamConfig adam = {}, bool concurrent = false);

    /// Throws InputError if the batch size is not divisible by the replica count.
    Real step(std::span<const Sequence> global_batch, double lr);

    std::size_t replicas() const { return replicas_.size(); }
    const Params<Real>& replica(std::size_t r) const { return replicas_.at(r); }

    /// [begin, end) of the flattened parameters owned by replica r.
    std::pair<std::size_t, std::size_t> partition(std::size_t r) const;
    const AdamState<Real>& shard_state(std::size_t r) const { return shards_.at(r); }

    /// Concatenation of all shards, comparable with SerialTrainer's state.
    AdamState<Real> gathered_state() const;

    bool replicas_identical() const;

private:
    void init_partitions();

    ModelConfig config_;
    AdamConfig adam_;
    bool concurrent_;
    std::vector<Params<Real>> replicas_;
    std::vector<AdamState<Real>> shards_;
    std::vector<std::size_t> bounds_;
    std::uint64_t step_ = 0;
};

}  // namespace ptk
