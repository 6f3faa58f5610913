#include <gtest/gtest.h>

#include <cmath>

#include "ptk/train/data_parallel.hpp"
#include "test_helpers.hpp"

namespace ptk {
namespace {

using testing::random_tokens;
using testing::toy_config;

std::vector<std::vector<Sequence>> batches(std::size_t steps, std::size_t batch, const ModelConfig& cfg,
                                           std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<Sequence>> out(steps);
    for (auto& b : out)
        for (std::size_t i = 0; i < batch; ++i) b.push_back(random_tokens(cfg.seq_len, cfg.vocab_size, rng));
    return out;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
    EXPECT_EQ(a.size(), b.size());
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

TEST(DataParallel, SingleReplicaIsBitIdenticalToSerial) {
    const auto cfg = toy_config(8);
    Rng rng(1);
    const auto init = init_params<double>(cfg, rng);
    SerialTrainer<double> serial(cfg, init);
    DataParallelGroup<double> group(cfg, init, 1);
    for (const auto& b : batches(5, 4, cfg, 2)) {
        EXPECT_EQ(serial.step(b, 1e-2), group.step(b, 1e-2));
    }
    EXPECT_EQ(serial.params().flatten(), group.replica(0).flatten());
    EXPECT_EQ(serial.optimizer_state().m, group.gathered_state().m);
    EXPECT_EQ(serial.optimizer_state().v, group.gathered_state().v);
}

class ReplicaCount : public ::testing::TestWithParam<std::size_t> {};

TEST_P(ReplicaCount, MatchesSerialAfterTenSteps) {
    const std::size_t k = GetParam();
    const auto cfg = toy_config(8);
    Rng rng(3);
    const auto init = init_params<double>(cfg, rng);
    SerialTrainer<double> serial(cfg, init);
    DataParallelGroup<double> group(cfg, init, k);
    for (const auto& b : batches(10, 8, cfg, 4)) {
        serial.step(b, 5e-3);
        group.step(b, 5e-3);
        ASSERT_TRUE(group.replicas_identical());
    }
    EXPECT_LT(max_diff(serial.params().flatten(), group.replica(0).flatten()), 1e-10);
    const auto gathered = group.gathered_state();
    EXPECT_LT(max_diff(serial.optimizer_state().m, gathered.m), 1e-10);
    EXPECT_LT(max_diff(serial.optimizer_state().v, gathered.v), 1e-10);
    EXPECT_EQ(gathered.step, 10u);

    // Partitions tile the flattened parameters and each shard covers its own.
    std::size_t covered = 0;
    for (std::size_t r = 0; r < k; ++r) {
        const auto [b, e] = group.partition(r);
        EXPECT_EQ(b, covered);
        EXPECT_EQ(group.shard_state(r).m.size(), e - b);
        covered = e;
    }
    EXPECT_EQ(covered, init.size());
}

INSTANTIATE_TEST_SUITE_P(K, ReplicaCount, ::testing::Values(std::size_t{1}, std::size_t{2}, std::size_t{4}));

TEST(DataParallel, ConcurrentReplicasGiveSameResult) {
    const auto cfg = toy_config(8);
    Rng rng(5);
    const auto init = init_params<double>(cfg, rng);
    DataParallelGroup<double> seq(cfg, init, 4, {}, false);
    DataParallelGroup<double> par(cfg, init, 4, {}, true);
    for (const auto& b : batches(3, 8, cfg, 6)) EXPECT_EQ(seq.step(b, 1e-2), par.step(b, 1e-2));
    EXPECT_EQ(seq.replica(0).flatten(), par.replica(0).flatten());
}

TEST(DataParallel, NonDivisibleBatchIsInputError) {
    const auto cfg = toy_config(8);
    Rng rng(7);
    DataParallelGroup<double> group(cfg, init_params<double>(cfg, rng), 4);
    EXPECT_THROW(group.step(batches(1, 6, cfg, 8)[0], 1e-3), InputError);
}

TEST(DataParallel, ResumeFromGatheredState) {
    const auto cfg = toy_config(8);
    Rng rng(9);
    const auto init = init_params<double>(cfg, rng);
    const auto data = batches(6, 4, cfg, 10);
    DataParallelGroup<double> straight(cfg, init, 2);
    for (const auto& b : data) straight.step(b, 1e-2);

    DataParallelGroup<double> first(cfg, init, 2);
    for (std::size_t i = 0; i < 3; ++i) first.step(data[i], 1e-2);
    DataParallelGroup<double> second(cfg, first.replica(0), 4, first.gathered_state());
    for (std::size_t i = 3; i < 6; ++i) second.step(data[i], 1e-2);
    EXPECT_LT(max_diff(straight.replica(0).flatten(), second.replica(0).flatten()), 1e-10);
}

TEST(Adam, FirstStepMovesByLrTimesSign) {
    std::vector<double> p{1.0, 1.0, 1.0}, g{0.5, -2.0, 0.0}, m(3), v(3);
    adam_update<double>(p, g, m, v, 1, 0.1, {});
    EXPECT_NEAR(p[0], 0.9, 1e-6);
    EXPECT_NEAR(p[1], 1.1, 1e-6);
    EXPECT_DOUBLE_EQ(p[2], 1.0);
}

}  // namespace
}  // namespace ptk
