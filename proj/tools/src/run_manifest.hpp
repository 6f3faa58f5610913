#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ptk::cli {

/// Record of one run: enough to re-execute it and to check its outputs.
class RunManifest {
public:
    RunManifest(std::string subcommand, std::vector<std::string> args, std::uint64_t seed);

    void set_config(const std::string& path);
    void add_input(const std::string& role, const std::string& path);
    void add_output(const std::string& path);
    nlohmann::ordered_json& extra() { return extra_; }

    nlohmann::ordered_json to_json() const;
    void write(const std::string& path) const;

private:
    std::string subcommand_;
    std::vector<std::string> args_;
    std::uint64_t seed_;
    std::string config_path_;
    std::string config_hash_;
    nlohmann::ordered_json inputs_ = nlohmann::ordered_json::array();
    std::vector<std::string> outputs_;
    nlohmann::ordered_json extra_ = nlohmann::ordered_json::object();
};

/// murmur3-128 hex digest of a file, or of every regular file under a directory
/// (sorted by relative path, names included).
std::string content_hash(const std::string& path);

}  // namespace ptk::cli
