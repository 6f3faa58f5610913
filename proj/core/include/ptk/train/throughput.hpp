#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ptk/model/config.hpp"

namespace ptk {

struct HardwareSpec {
    double peak_flops_per_device = 0.0;  // FLOP/s
    std::size_t devices_per_replica = 1; // tensor-parallel width

    /// 989 TFLOP/s dense bf16 per device, 8-way tensor parallel.
    static HardwareSpec h100_tp8();
    void validate() const;
};

struct RampStage {
    std::size_t data_parallel_size = 0;
    std::size_t batch_size = 0;  // sequences per iteration
    std::uint64_t tokens = 0;    // tokens trained in this stage
    double iteration_time = 0.0; // seconds

    std::size_t devices(const HardwareSpec& hw) const { return data_parallel_size * hw.devices_per_replica; }
    void validate() const;
};

/// Reference three-stage batch ramp.
std::vector<RampStage> reference_ramp();

/// 6 * (projection weights + vocab * hidden) + 12 * layers * hidden * seq_len.
/// Norm gains are excluded.
double flops_per_token(const ModelConfig& config);

/// Model FLOP/s utilization in percent.
double mfu(const RampStage& stage, const HardwareSpec& hw, const ModelConfig& config);

struct StageSchedule {
    std::uint64_t iterations = 0;
    double days = 0.0;
};

StageSchedule stage_schedule(const RampStage& stage, const ModelConfig& config);

struct ThroughputRow {
    RampStage stage;
    std::size_t devices = 0;
    double mfu_percent = 0.0;
    std::uint64_t iterations = 0;
    double days = 0.0;
};

struct ThroughputReport {
    std::vector<ThroughputRow> rows;
    double flops_per_token = 0.0;
    double total_days = 0.0;
    std::uint64_t total_tokens = 0;

    std::string to_text() const;
    std::string to_json() const;
};

struct ThroughputConfig {
    ModelConfig model;
    HardwareSpec hardware;
    std::vector<RampStage> ramp;

    /// Published model, hardware and ramp.
    static ThroughputConfig reference();
    static ThroughputConfig from_json(std::string_view json);
    static ThroughputConfig load(const std::string& path);
    std::string to_json() const;
};

ThroughputReport throughput_report(const ThroughputConfig& config);

}  // namespace ptk
