#include "ptk/train/throughput.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ptk/util/errors.hpp"

namespace ptk {

HardwareSpec HardwareSpec::h100_tp8() { return {989e12, 8}; }

void HardwareSpec::validate() const {
    if (!(peak_flops_per_device > 0.0)) throw ConfigError("HardwareSpec: peak_flops_per_device must be > 0");
    if (devices_per_replica < 1) throw ConfigError("HardwareSpec: devices_per_replica must be >= 1");
}

void RampStage::validate() const {
    if (data_parallel_size < 1 || batch_size < 1) throw ConfigError("RampStage: sizes must be >= 1");
    if (batch_size % data_parallel_size != 0)
        throw ConfigError("RampStage: batch_size must be divisible by data_parallel_size");
}

std::vector<RampStage> reference_ramp() {
    return {
        {96, 384, 200'000'000'000ULL, 0.57},
        {192, 768, 200'000'000'000ULL, 0.58},
        {288, 1152, 7'600'000'000'000ULL, 0.64},
    };
}

double flops_per_token(const ModelConfig& c) {
    // Norm gains are elementwise, so only projection weights and the head count.
    const ParamCount pc = param_count(c);
    double matmul_params = static_cast<double>(c.vocab_size) * static_cast<double>(c.hidden_dim);
    for (const auto& layer : pc.per_layer) matmul_params += static_cast<double>(layer.attention + layer.mlp);
    const double attention = 12.0 * static_cast<double>(c.num_layers) * static_cast<double>(c.hidden_dim) *
                             static_cast<double>(c.seq_len);
    return 6.0 * matmul_params + attention;
}

double mfu(const RampStage& stage, const HardwareSpec& hw, const ModelConfig& config) {
    if (!(stage.iteration_time > 0.0)) throw InputError("mfu: iteration_time must be > 0");
    hw.validate();
    const double tokens_per_iter = static_cast<double>(stage.batch_size) * static_cast<double>(config.seq_len);
    const double achieved = flops_per_token(config) * tokens_per_iter / stage.iteration_time;
    const double peak = static_cast<double>(stage.devices(hw)) * hw.peak_flops_per_device;
    return 100.0 * achieved / peak;
}

StageSchedule stage_schedule(const RampStage& stage, const ModelConfig& config) {
    const std::uint64_t per_iter = static_cast<std::uint64_t>(stage.batch_size) * config.seq_len;
    if (per_iter == 0) throw ConfigError("stage_schedule: zero tokens per iteration");
    StageSchedule s;
    s.iterations = (stage.tokens + per_iter - 1) / per_iter;
    s.days = static_cast<double>(s.iterations) * stage.iteration_time / 86400.0;
    return s;
}

ThroughputReport throughput_report(const ThroughputConfig& config) {
    config.model.validate();
    config.hardware.validate();
    ThroughputReport r;
    r.flops_per_token = flops_per_token(config.model);
    for (const auto& stage : config.ramp) {
        stage.validate();
        ThroughputRow row;
        row.stage = stage;
        row.devices = stage.devices(config.hardware);
        row.mfu_percent = mfu(stage, config.hardware, config.model);
        const auto sched = stage_schedule(stage, config.model);
        row.iterations = sched.iterations;
        row.days = sched.days;
        r.total_days += row.days;
        r.total_tokens += stage.tokens;
        r.rows.push_back(row);
    }
    return r;
}

std::string ThroughputReport::to_text() const {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-18s %8s %10s %7s %10s %11s %11s\n", "data_parallel_size", "devices",
                  "iter_time_s", "mfu_pct", "batch", "tokens_B", "days");
    out << line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%-18zu %8zu %10.2f %7.1f %10zu %11.0f %11.2f\n",
                      r.stage.data_parallel_size, r.devices, r.stage.iteration_time, r.mfu_percent,
                      r.stage.batch_size, static_cast<double>(r.stage.tokens) / 1e9, r.days);
        out << line;
    }
    std::snprintf(line, sizeof(line), "total: %.0fB tokens, %.2f days, %.4g FLOPs/token\n",
                  static_cast<double>(total_tokens) / 1e9, total_days, flops_per_token);
    out << line;
    return out.str();
}

std::string ThroughputReport::to_json() const {
    nlohmann::ordered_json j;
    auto rj = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json x;
        x["data_parallel_size"] = r.stage.data_parallel_size;
        x["devices"] = r.devices;
        x["iteration_time"] = r.stage.iteration_time;
        x["mfu_percent"] = r.mfu_percent;
        x["batch"] = r.stage.batch_size;
        x["tokens"] = r.stage.tokens;
        x["iterations"] = r.iterations;
        x["days"] = r.days;
        rj.push_back(std::move(x));
    }
    j["rows"] = std::move(rj);
    j["flops_per_token"] = flops_per_token;
    j["total_tokens"] = total_tokens;
    j["total_days"] = total_days;
    return j.dump(2);
}

ThroughputConfig ThroughputConfig::reference() {
    return {ModelConfig::reference_15b(), HardwareSpec::h100_tp8(), reference_ramp()};
}

ThroughputConfig ThroughputConfig::from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        ThroughputConfig c;
        c.model = model_config_from_json(j.at("model").dump());
        const auto& hw = j.at("hardware");
        c.hardware.peak_flops_per_device = hw.at("peak_flops_per_device").get<double>();
        c.hardware.devices_per_replica = hw.value("devices_per_replica", std::size_t{1});
        for (const auto& s : j.at("ramp")) {
            RampStage st;
            st.data_parallel_size = s.at("data_parallel_size").get<std::size_t>();
            st.batch_size = s.at("batch_size").get<std::size_t>();
            st.tokens = s.at("tokens").get<std::uint64_t>();
            st.iteration_time = s.at("iteration_time").get<double>();
            c.ramp.push_back(st);
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("throughput config JSON: ") + e.what());
    }
}

ThroughputConfig ThroughputConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open throughput config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

std::string ThroughputConfig::to_json() const {
    nlohmann::ordered_json j;
    j["model"] = nlohmann::ordered_json::parse(ptk::to_json(model));
    j["hardware"] = {{"peak_flops_per_device", hardware.peak_flops_per_device},
                     {"devices_per_replica", hardware.devices_per_replica}};
    auto ramp_json = nlohmann::ordered_json::array();
    for (const auto& s : ramp)
        ramp_json.push_back({{"data_parallel_size", s.data_parallel_size},
                             {"batch_size", s.batch_size},
                             {"tokens", s.tokens},
                             {"iteration_time", s.iteration_time}});
    j["ramp"] = std::move(ramp_json);
    return j.dump(2);
}

}  // namespace ptk
