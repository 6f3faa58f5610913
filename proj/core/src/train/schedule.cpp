#include "ptk/train/schedule.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ptk/util/errors.hpp"

namespace ptk {

DecayShape decay_shape_from_string(std::string_view s) {
    if (s == "cosine") return DecayShape::cosine;
    if (s == "linear") return DecayShape::linear;
    if (s == "exponential") return DecayShape::exponential;
    throw ConfigError("unknown decay shape: " + std::string(s));
}

const char* to_string(DecayShape s) {
    switch (s) {
        case DecayShape::cosine: return "cosine";
        case DecayShape::linear: return "linear";
        case DecayShape::exponential: return "exponential";
    }
    return "?";
}

const char* to_string(Phase p) {
    switch (p) {
        case Phase::pretrain: return "pretrain";
        case Phase::continued_quality: return "continued-quality";
        case Phase::continued_alignment: return "continued-alignment";
    }
    return "?";
}

double lr_at(const LrSchedule& s, std::uint64_t step) {
    if (s.warmup_steps > 0 && step < s.warmup_steps)
        return s.peak_lr * static_cast<double>(step) / static_cast<double>(s.warmup_steps);

    if (step <= s.decay_steps) {
        const double span = static_cast<double>(s.decay_steps - s.warmup_steps);
        if (span <= 0.0) return s.peak_lr;
        const double t = static_cast<double>(step - s.warmup_steps) / span;
        switch (s.pretrain_decay) {
            case DecayShape::cosine:
                return s.min_lr + 0.5 * (s.peak_lr - s.min_lr) * (1.0 + std::cos(std::numbers::pi * t));
            case DecayShape::linear:
                return s.peak_lr + (s.min_lr - s.peak_lr) * t;
            case DecayShape::exponential:
                return s.peak_lr * std::pow(s.min_lr / s.peak_lr, t);
        }
    }

    const std::uint64_t into = std::min(step - s.decay_steps, s.continued_steps);
    const double n = static_cast<double>(std::max<std::uint64_t>(s.continued_steps, 1));
    switch (s.continued_decay) {
        case DecayShape::exponential: {
            const double half_life = s.continued_half_life_fraction * n;
            return s.min_lr * std::exp2(-static_cast<double>(into) / half_life);
        }
        case DecayShape::linear:
            return s.min_lr * (1.0 - static_cast<double>(into) / n);
        case DecayShape::cosine:
            return 0.5 * s.min_lr * (1.0 + std::cos(std::numbers::pi * static_cast<double>(into) / n));
    }
    return s.min_lr;
}

void LrSchedule::validate() const {
    if (!(peak_lr > 0.0) || !(min_lr > 0.0) || min_lr > peak_lr)
        throw ConfigError("LrSchedule: need 0 < min_lr <= peak_lr");
    if (warmup_steps > decay_steps) throw ConfigError("LrSchedule: warmup_steps exceeds decay_steps");
    if (continued_steps == 0) return;
    if (continued_decay == DecayShape::exponential && !(continued_half_life_fraction > 0.0))
        throw ConfigError("LrSchedule: continued_half_life_fraction must be > 0");
    if (decay_steps > warmup_steps) {
        const double pre_end = std::abs(lr_at(*this, decay_steps) - lr_at(*this, decay_steps - 1));
        const double cont_start = std::abs(lr_slope(*this, decay_steps));
        if (!(cont_start > pre_end))
            throw ConfigError("LrSchedule: continued-phase decay must start steeper than the pre-training tail");
    }
}

std::uint64_t ContinuedPhase::second_start() const {
    return switch_tokens + static_cast<std::uint64_t>(std::llround(first_fraction * static_cast<double>(tokens)));
}

ContinuedPhase make_continued_phase(const BlendSpec& pretrain, std::uint64_t switch_tokens, std::uint64_t tokens,
                                    double first_fraction, const std::map<std::string, double>& quality_upweight,
                                    const std::map<std::string, double>& second_upweight,
                                    const std::string& alignment_leaf, double alignment_weight) {
    if (!(first_fraction > 0.0 && first_fraction < 1.0))
        throw ConfigError("continued phase: first_fraction must be in (0, 1)");
    ContinuedPhase c;
    c.switch_tokens = switch_tokens;
    c.tokens = tokens;
    c.first_fraction = first_fraction;
    c.quality_blend = pretrain.upweighted(quality_upweight);
    c.alignment_leaf = alignment_leaf;
    c.alignment_weight = alignment_weight;
    c.alignment_blend =
        pretrain.upweighted(second_upweight).with_category({alignment_leaf, 0.0, {}}, alignment_weight);
    return c;
}

std::uint64_t TrainPlan::pretrain_tokens() const {
    std::uint64_t t = 0;
    for (const auto& s : ramp) t += s.tokens;
    return t;
}

void TrainPlan::derive_steps(const ModelConfig& model) {
    if (lr.decay_steps == 0) {
        std::uint64_t steps = 0;
        for (const auto& s : ramp) steps += stage_schedule(s, model).iterations;
        lr.decay_steps = steps;
    }
    if (lr.continued_steps == 0 && !ramp.empty() && continued.tokens > 0) {
        RampStage last = ramp.back();
        last.tokens = continued.tokens;
        lr.continued_steps = stage_schedule(last, model).iterations;
    }
}

void TrainPlan::validate() const {
    if (ramp.empty()) throw ConfigError("TrainPlan: empty ramp");
    for (const auto& s : ramp) s.validate();
    for (std::size_t i = 1; i < ramp.size(); ++i)
        if (ramp[i].batch_size < ramp[i - 1].batch_size) throw ConfigError("TrainPlan: ramp batch sizes must not decrease");
    if (pretrain_blend.empty()) throw ConfigError("TrainPlan: missing pre-training blend");
    if (continued.switch_tokens > pretrain_tokens() + continued.tokens)
        throw ConfigError("TrainPlan: switch point beyond the training budget");
    lr.validate();
}

Phase phase_at(const TrainPlan& plan, std::uint64_t tokens_seen) {
    if (tokens_seen < plan.continued.switch_tokens || plan.continued.quality_blend.empty()) return Phase::pretrain;
    if (tokens_seen < plan.continued.second_start() || plan.continued.alignment_blend.empty())
        return Phase::continued_quality;
    return Phase::continued_alignment;
}

const BlendSpec& phase_blend(const TrainPlan& plan, std::uint64_t tokens_seen) {
    switch (phase_at(plan, tokens_seen)) {
        case Phase::pretrain: return plan.pretrain_blend;
        case Phase::continued_quality: return plan.continued.quality_blend;
        case Phase::continued_alignment: return plan.continued.alignment_blend;
    }
    return plan.pretrain_blend;
}

TrainPlan TrainPlan::from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        TrainPlan p;
        for (const auto& s : j.at("ramp")) {
            RampStage st;
            st.data_parallel_size = s.value("data_parallel_size", std::size_t{1});
            st.batch_size = s.at("batch_size").get<std::size_t>();
            st.tokens = s.at("tokens").get<std::uint64_t>();
            st.iteration_time = s.value("iteration_time", 0.0);
            p.ramp.push_back(st);
        }
        if (j.contains("lr")) {
            const auto& l = j["lr"];
            p.lr.peak_lr = l.value("peak", p.lr.peak_lr);
            p.lr.min_lr = l.value("min", p.lr.min_lr);
            p.lr.warmup_steps = l.value("warmup_steps", std::uint64_t{0});
            p.lr.decay_steps = l.value("decay_steps", std::uint64_t{0});
            p.lr.continued_steps = l.value("continued_steps", std::uint64_t{0});
            p.lr.pretrain_decay = decay_shape_from_string(l.value("pretrain_decay", std::string("cosine")));
            p.lr.continued_decay = decay_shape_from_string(l.value("continued_decay", std::string("exponential")));
            p.lr.continued_half_life_fraction = l.value("continued_half_life_fraction", 0.1);
        }
        p.pretrain_blend = BlendSpec::from_json(j.at("pretrain_blend").dump());

        const auto c = j.value("continued", nlohmann::json::object());
        const std::uint64_t switch_tokens = c.value("switch_tokens", p.pretrain_tokens());
        const auto default_tokens = static_cast<std::uint64_t>(std::llround(0.025 * static_cast<double>(p.pretrain_tokens())));
        const std::uint64_t tokens = c.value("tokens", default_tokens);
        p.continued = make_continued_phase(p.pretrain_blend, switch_tokens, tokens, c.value("first_fraction", 0.9),
                                           c.value("quality_upweight", std::map<std::string, double>{}),
                                           c.value("second_upweight", std::map<std::string, double>{}),
                                           c.value("alignment_leaf", std::string("alignment")),
                                           c.value("alignment_weight", 0.1));
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("TrainPlan JSON: ") + e.what());
    }
}

TrainPlan TrainPlan::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open train plan: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

}  // namespace ptk
