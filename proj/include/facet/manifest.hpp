#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace facet {

constexpr const char* kToolkitVersion = "0.1.0";

struct FacetRow {
    int cluster = 0;
    int size = 0;
    float seed_activation = 0.0f;
    float final_activation = 0.0f;
    int top1_class = 0;
};

// Everything needed to reconstruct a run: the config hash and effective
// seed, plus the produced artifacts (run-dir-relative) and per-stage wall
// times. `created` and stage timings are the only lines that vary between
// replays of the same config.
struct RunManifest {
    std::string toolkit_version = kToolkitVersion;
    std::string subcommand;
    std::string config_hash;
    std::string config_file = "config";
    uint64_t seed = 0;
    std::string created;
    std::vector<std::pair<std::string, double>> stage_wall_ms;
    std::vector<std::string> artifacts;
    std::vector<FacetRow> facet_rows;
};

// Writes <run_dir>/manifest after checking that every listed artifact
// exists under run_dir.
void write_manifest(const RunManifest& m, const std::filesystem::path& run_dir);

RunManifest read_manifest(const std::filesystem::path& file);

}  // namespace facet
