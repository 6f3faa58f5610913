#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ptk/corpus/blend.hpp"
#include "ptk/model/config.hpp"
#include "ptk/train/throughput.hpp"

namespace ptk {

enum class DecayShape { cosine, linear, exponential };

DecayShape decay_shape_from_string(std::string_view s);
const char* to_string(DecayShape s);

/// Linear warmup to peak, decay to min_lr by `decay_steps` (end of
/// pre-training), then a continued-phase decay from min_lr starting steeper
/// than the pre-training tail. Steps beyond the continued phase hold at its
/// final value.
struct LrSchedule {
    double peak_lr = 3e-4;
    double min_lr = 3e-5;
    std::uint64_t warmup_steps = 0;
    std::uint64_t decay_steps = 0;
    std::uint64_t continued_steps = 0;
    DecayShape pretrain_decay = DecayShape::cosine;
    DecayShape continued_decay = DecayShape::exponential;
    /// Half-life of the exponential continued decay, as a fraction of continued_steps.
    double continued_half_life_fraction = 0.1;

    /// Throws ConfigError when the continued-phase start is not steeper than
    /// the pre-training end slope, or fields are inconsistent.
    void validate() const;
};

double lr_at(const LrSchedule& schedule, std::uint64_t step);

/// Slope lr(step+1) - lr(step).
inline double lr_slope(const LrSchedule& s, std::uint64_t step) { return lr_at(s, step + 1) - lr_at(s, step); }

struct ContinuedPhase {
    std::uint64_t switch_tokens = 0;  // tokens seen when the switch happens
    std::uint64_t tokens = 0;         // continued-phase budget
    double first_fraction = 0.9;      // share of the budget on the quality-weighted blend
    BlendSpec quality_blend;
    BlendSpec alignment_blend;
    std::string alignment_leaf = "alignment";
    double alignment_weight = 0.1;

    std::uint64_t second_start() const;
};

/// First blend: `pretrain` with high-quality sources upweighted. Second blend:
/// `pretrain` upweighted by `second_upweight` plus an alignment-example
/// category at `alignment_weight`.
ContinuedPhase make_continued_phase(const BlendSpec& pretrain, std::uint64_t switch_tokens, std::uint64_t tokens,
                                    double first_fraction, const std::map<std::string, double>& quality_upweight,
                                    const std::map<std::string, double>& second_upweight,
                                    const std::string& alignment_leaf, double alignment_weight);

enum class Phase { pretrain, continued_quality, continued_alignment };

const char* to_string(Phase p);

struct TrainPlan {
    std::vector<RampStage> ramp;
    LrSchedule lr;
    BlendSpec pretrain_blend;
    ContinuedPhase continued;

    std::uint64_t pretrain_tokens() const;

    /// Fills lr.decay_steps / lr.continued_steps from the ramp when zero.
    void derive_steps(const ModelConfig& model);
    void validate() const;

    static TrainPlan from_json(std::string_view json);
    static TrainPlan load(const std::string& path);
};

Phase phase_at(const TrainPlan& plan, std::uint64_t tokens_seen);

/// Pre-training blend before the switch, then the quality-weighted blend, then
/// the alignment-augmented blend for every later token.
const BlendSpec& phase_blend(const TrainPlan& plan, std::uint64_t tokens_seen);

inline double lr_at(const TrainPlan& plan, std::uint64_t step) { return lr_at(plan.lr, step); }

}  // namespace ptk
