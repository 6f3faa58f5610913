#include "ptk/train/data_parallel.hpp"

#include <algorithm>
#include <thread>

#include "ptk/util/errors.hpp"

namespace ptk {

template <class Real>
std::pair<Real, std::vector<Real>> mean_loss_and_grad(const ModelConfig& config, const Params<Real>& params,
                                                      std::span<const Sequence> batch) {
    if (batch.empty()) throw InputError("empty batch");
    std::vector<Real> sum(params.size(), Real(0));
    Real loss_sum = 0;
    for (const auto& seq : batch) {
        auto lg = loss_and_grad<Real>(config, params, seq);
        loss_sum += lg.loss;
        std::size_t off = 0;
        lg.grad.visit([&](const std::string&, const Tensor<Real>& t) {
            for (std::size_t i = 0; i < t.size(); ++i) sum[off + i] += t[i];
            off += t.size();
        });
    }
    const Real n = static_cast<Real>(batch.size());
    for (auto& g : sum) g /= n;
    return {loss_sum / n, std::move(sum)};
}

template <class Real>
SerialTrainer<Real>::SerialTrainer(ModelConfig config, Params<Real> params, AdamConfig adam)
    : config_(std::move(config)), params_(std::move(params)), adam_(adam), state_(params_.size()) {}

template <class Real>
Real SerialTrainer<Real>::step(std::span<const Sequence> batch, double lr) {
    auto [loss, grad] = mean_loss_and_grad<Real>(config_, params_, batch);
    std::vector<Real> flat = params_.flatten();
    ++state_.step;
    adam_update<Real>(flat, grad, state_.m, state_.v, state_.step, lr, adam_);
    params_.unflatten(flat);
    return loss;
}

template <class Real>
DataParallelGroup<Real>::DataParallelGroup(ModelConfig config, const Params<Real>& init, std::size_t replicas,
                                           AdamConfig adam, bool concurrent)
    : config_(std::move(config)), adam_(adam), concurrent_(concurrent) {
    if (replicas == 0) throw ConfigError("DataParallelGroup: need at least one replica");
    replicas_.assign(replicas, init);
    init_partitions();
    for (std::size_t r = 0; r < replicas; ++r) shards_.emplace_back(bounds_[r + 1] - bounds_[r]);
}

template <class Real>
DataParallelGroup<Real>::DataParallelGroup(ModelConfig config, const Params<Real>& init, std::size_t replicas,
                                           const AdamState<Real>& full_state, AdamConfig adam, bool concurrent)
    : config_(std::move(config)), adam_(adam), concurrent_(concurrent) {
    if (replicas == 0) throw ConfigError("DataParallelGroup: need at least one replica");
    replicas_.assign(replicas, init);
    init_partitions();
    if (full_state.m.size() != bounds_.back() || full_state.v.size() != bounds_.back())
        throw DimensionError("DataParallelGroup: optimizer state length mismatch");
    step_ = full_state.step;
    for (std::size_t r = 0; r < replicas; ++r) {
        AdamState<Real> s;
        s.m.assign(full_state.m.begin() + static_cast<std::ptrdiff_t>(bounds_[r]),
                   full_state.m.begin() + static_cast<std::ptrdiff_t>(bounds_[r + 1]));
        s.v.assign(full_state.v.begin() + static_cast<std::ptrdiff_t>(bounds_[r]),
                   full_state.v.begin() + static_cast<std::ptrdiff_t>(bounds_[r + 1]));
        s.step = step_;
        shards_.push_back(std::move(s));
    }
}

template <class Real>
void DataParallelGroup<Real>::init_partitions() {
    const std::size_t n = replicas_.front().size();
    const std::size_t k = replicas_.size();
    bounds_.resize(k + 1);
    for (std::size_t r = 0; r <= k; ++r) bounds_[r] = n * r / k;
}

template <class Real>
std::pair<std::size_t, std::size_t> DataParallelGroup<Real>::partition(std::size_t r) const {
    return {bounds_.at(r), bounds_.at(r + 1)};
}

template <class Real>
Real DataParallelGroup<Real>::step(std::span<const Sequence> global_batch, double lr) {
    const std::size_t k = replicas_.size();
    if (global_batch.empty() || global_batch.size() % k != 0)
        throw InputError("data_parallel_step: global batch of " + std::to_string(global_batch.size()) +
                         " not divisible by " + std::to_string(k) + " replicas");
    const std::size_t per = global_batch.size() / k;

    std::vector<std::vector<Real>> local_grads(k);
    std::vector<Real> local_loss(k);
    auto compute = [&](std::size_t r) {
        auto [loss, grad] = mean_loss_and_grad<Real>(config_, replicas_[r], global_batch.subspan(r * per, per));
        local_loss[r] = loss;
        local_grads[r] = std::move(grad);
    };
    if (concurrent_ && k > 1) {
        std::vector<std::thread> workers;
        for (std::size_t r = 0; r < k; ++r) workers.emplace_back(compute, r);
        for (auto& w : workers) w.join();
    } else {
        for (std::size_t r = 0; r < k; ++r) compute(r);
    }

    // All-reduce (mean) with a fixed ascending-replica combine order.
    const std::size_t n = bounds_.back();
    std::vector<Real> reduced(n, Real(0));
    Real loss = 0;
    for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t i = 0; i < n; ++i) reduced[i] += local_grads[r][i];
        loss += local_loss[r];
    }
    const Real kk = static_cast<Real>(k);
    for (auto& g : reduced) g /= kk;
    loss /= kk;

    // Each replica updates only its own partition with its optimizer shard.
    ++step_;
    std::vector<std::vector<Real>> flat(k);
    for (std::size_t r = 0; r < k; ++r) {
        flat[r] = replicas_[r].flatten();
        const auto [lo, hi] = partition(r);
        auto& s = shards_[r];
        s.step = step_;
        adam_update<Real>(std::span<Real>(flat[r]).subspan(lo, hi - lo),
                          std::span<const Real>(reduced).subspan(lo, hi - lo), s.m, s.v, step_, lr, adam_);
    }

    // All-gather of updated partitions.
    std::vector<Real> gathered(n);
    for (std::size_t r = 0; r < k; ++r) {
        const auto [lo, hi] = partition(r);
        std::copy(flat[r].begin() + static_cast<std::ptrdiff_t>(lo), flat[r].begin() + static_cast<std::ptrdiff_t>(hi),
                  gathered.begin() + static_cast<std::ptrdiff_t>(lo));
    }
    for (auto& rep : replicas_) rep.unflatten(gathered);
    return loss;
}

template <class Real>
AdamState<Real> DataParallelGroup<Real>::gathered_state() const {
    AdamState<Real> full;
    full.step = step_;
    for (const auto& s : shards_) {
        full.m.insert(full.m.end(), s.m.begin(), s.m.end());
        full.v.insert(full.v.end(), s.v.begin(), s.v.end());
    }
    return full;
}

template <class Real>
bool DataParallelGroup<Real>::replicas_identical() const {
    const auto ref = replicas_.front().flatten();
    for (std::size_t r = 1; r < replicas_.size(); ++r)
        if (replicas_[r].flatten() != ref) return false;
    return true;
}

template std::pair<float, std::vector<float>> mean_loss_and_grad<float>(const ModelConfig&, const Params<float>&,
                                                                        std::span<const Sequence>);
template std::pair<double, std::vector<double>> mean_loss_and_grad<double>(const ModelConfig&, const Params<double>&,
                                                                           std::span<const Sequence>);
template class SerialTrainer<float>;
template class SerialTrainer<double>;
template class DataParallelGroup<float>;
template class DataParallelGroup<double>;

}  // namespace ptk
