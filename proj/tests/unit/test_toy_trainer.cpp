#include <gtest/gtest.h>

#include "ptk/train/toy_trainer.hpp"
#include "test_helpers.hpp"

namespace ptk {
namespace {

using testing::random_tokens;

ModelConfig overfit_config() {
    ModelConfig c;
    c.num_layers = 2;
    c.hidden_dim = 32;
    c.num_heads = 4;
    c.num_kv_heads = 2;
    c.head_dim = 8;
    c.ffn_dim = 128;
    c.seq_len = 16;
    c.vocab_size = 16;
    return c;
}

TEST(ToyTraining, FullBatchOverfitsThirtyTwoSequences) {
    const auto cfg = overfit_config();
    Rng rng(1);
    std::vector<Sequence> corpus;
    for (int i = 0; i < 32; ++i) corpus.push_back(random_tokens(cfg.seq_len, cfg.vocab_size, rng));
    SerialTrainer<double> trainer(cfg, init_params<double>(cfg, rng));
    double first = 0, last = 0;
    for (int step = 0; step < 200; ++step) {
        const double loss = trainer.step(corpus, 1e-2);
        if (step == 0) first = loss;
        last = loss;
    }
    const double final_loss = mean_loss_and_grad<double>(cfg, trainer.params(), corpus).first;
    EXPECT_NEAR(first, std::log(16.0), 0.1);
    EXPECT_LT(final_loss, 0.1) << "last step loss " << last;
}

std::vector<ShardSegment> segments_for(const std::vector<std::pair<std::string, std::size_t>>& parts) {
    std::vector<ShardSegment> s;
    std::uint64_t off = 0;
    for (const auto& [leaf, n] : parts) {
        s.push_back({leaf + "-doc", leaf, off, n});
        off += n;
    }
    return s;
}

TEST(Windows, CutAndTagged) {
    std::vector<TokenId> tokens(25);
    for (std::size_t i = 0; i < tokens.size(); ++i) tokens[i] = TokenId(i);
    const auto w = make_windows(tokens, segments_for({{"a", 12}, {"b", 13}}), 8);
    ASSERT_EQ(w.size(), 3u);  // 8 + 8 + 8, trailing single token dropped
    EXPECT_EQ(w[0].leaf, "a");
    EXPECT_EQ(w[1].leaf, "a");
    EXPECT_EQ(w[2].leaf, "b");
    EXPECT_EQ(w[2].tokens.front(), 16u);
    EXPECT_THROW(make_windows(tokens, {}, 1), ConfigError);
}

TrainPlan toy_plan() {
    TrainPlan p;
    p.ramp = {{1, 2, 64, 1.0}, {2, 4, 128, 1.0}};
    p.pretrain_blend = BlendSpec({{"nl", 0.5, {{"a", 1.0}}}, {"code", 0.5, {{"b", 1.0}}}});
    p.continued = make_continued_phase(p.pretrain_blend, 192, 160, 0.5, {{"a", 9.0}}, {}, "align", 0.5);
    p.lr.warmup_steps = 2;
    p.derive_steps(testing::toy_config(8));
    return p;
}

std::vector<Window> toy_windows() {
    Rng rng(2);
    std::vector<Window> w;
    for (int i = 0; i < 6; ++i) w.push_back({random_tokens(8, 11, rng), i % 3 == 0 ? "a" : i % 3 == 1 ? "b" : "align"});
    return w;
}

TEST(ToyTraining, RampAndContinuedPhaseSwitch) {
    ToyTrainOptions opt;
    opt.model = testing::toy_config(8);
    opt.plan = toy_plan();
    opt.seed = 3;
    const auto result = train_toy<double>(opt, toy_windows());
    ASSERT_FALSE(result.curve.empty());
    EXPECT_EQ(result.curve.front().replicas, 1u);
    EXPECT_EQ(result.curve.front().batch, 2u);
    bool saw_dp2 = false;
    for (const auto& p : result.curve) saw_dp2 |= p.replicas == 2 && p.batch == 4;
    EXPECT_TRUE(saw_dp2);
    EXPECT_GE(result.curve.back().tokens_seen, 192u + 160u);

    // Pretraining never samples the alignment leaf; the last phase does.
    EXPECT_EQ(result.draws.at(Phase::pretrain).count("align"), 0u);
    ASSERT_TRUE(result.draws.count(Phase::continued_alignment));
    EXPECT_GT(result.draws.at(Phase::continued_alignment).at("align"), 0u);
    // Quality phase favours leaf "a" over "b".
    const auto& q = result.draws.at(Phase::continued_quality);
    EXPECT_GT(q.count("a") ? q.at("a") : 0, q.count("b") ? q.at("b") : 0);

    const auto csv = loss_curve_csv(result.curve);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "step,tokens_seen,lr,loss");
}

TEST(ToyTraining, SteeperDecayAfterSwitch) {
    const auto plan = toy_plan();
    const auto& s = plan.lr;
    EXPECT_GT(std::abs(lr_slope(s, s.decay_steps)), std::abs(lr_at(s, s.decay_steps) - lr_at(s, s.decay_steps - 1)));
}

TEST(ToyTraining, DeterministicGivenSeed) {
    ToyTrainOptions opt;
    opt.model = testing::toy_config(8);
    opt.plan = toy_plan();
    opt.seed = 4;
    const auto a = train_toy<double>(opt, toy_windows());
    const auto b = train_toy<double>(opt, toy_windows());
    EXPECT_EQ(loss_curve_csv(a.curve), loss_curve_csv(b.curve));
    EXPECT_EQ(a.params.flatten(), b.params.flatten());
}

TEST(ToyTraining, MeanWindowLossIsTokenWeighted) {
    const auto cfg = testing::toy_config(8);
    const auto params = Params<double>::zeros(cfg);
    EXPECT_NEAR(mean_window_loss<double>(cfg, params, toy_windows()), std::log(11.0), 1e-12);
    EXPECT_THROW(mean_window_loss<double>(cfg, params, {}), PipelineError);
}

}  // namespace
}  // namespace ptk
