#include "run_manifest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>

#include <CLI11.hpp>

#include "ptk/corpus/shards.hpp"
#include "ptk/util/errors.hpp"
#include "ptk/util/hash.hpp"
#include "ptk/version.hpp"

namespace ptk::cli {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw PipelineError("cannot read " + p.string());
    return {std::istreambuf_iterator<char>(in), {}};
}

std::string compiler() {
#if defined(__clang__)
    return "clang " __clang_version__;
#elif defined(__GNUC__)
    return "gcc " __VERSION__;
#else
    return "unknown";
#endif
}

}  // namespace

std::string content_hash(const std::string& path) {
    if (!fs::is_directory(path)) return murmur3_128(read_file(path)).hex();
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(path))
        if (e.is_regular_file()) files.push_back(fs::relative(e.path(), path));
    std::sort(files.begin(), files.end());
    std::string acc;
    for (const auto& f : files) {
        acc += f.generic_string();
        acc += '\0';
        acc += murmur3_128(read_file(fs::path(path) / f)).hex();
        acc += '\n';
    }
    return murmur3_128(acc).hex();
}

RunManifest::RunManifest(std::string subcommand, std::vector<std::string> args, std::uint64_t seed)
    : subcommand_(std::move(subcommand)), args_(std::move(args)), seed_(seed) {}

void RunManifest::set_config(const std::string& path) {
    config_path_ = path;
    config_hash_ = content_hash(path);
}

void RunManifest::add_input(const std::string& role, const std::string& path) {
    inputs_.push_back({{"role", role}, {"path", path}, {"hash", content_hash(path)}});
}

void RunManifest::add_output(const std::string& path) { outputs_.push_back(path); }

nlohmann::ordered_json RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["tool"] = "ptk";
    j["subcommand"] = subcommand_;
    j["args"] = args_;
    j["seed"] = seed_;
    if (config_path_.empty()) {
        j["config"] = nullptr;
        j["config_hash"] = nullptr;
    } else {
        j["config"] = config_path_;
        j["config_hash"] = config_hash_;
    }
    j["inputs"] = inputs_;
    auto outs = nlohmann::ordered_json::array();
    for (const auto& o : outputs_) outs.push_back({{"path", o}, {"checksum", file_checksum(o)}});
    j["outputs"] = std::move(outs);
    if (!extra_.empty()) j["summary"] = extra_;
    j["versions"] = {{"ptk", kVersion},
                     {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                     {"cli11", CLI11_VERSION},
                     {"compiler", compiler()}};
    return j;
}

void RunManifest::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PipelineError("cannot write run manifest: " + path);
    out << to_json().dump(2) << '\n';
}

}  // namespace ptk::cli
