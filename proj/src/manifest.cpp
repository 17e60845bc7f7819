#include "facet/manifest.hpp"

#include <fstream>
#include <sstream>

#include "facet/errors.hpp"

namespace facet {

void write_manifest(const RunManifest& m, const std::filesystem::path& run_dir) {
    for (const auto& a : m.artifacts)
        if (!std::filesystem::exists(run_dir / a))
            throw IoError("manifest lists missing artifact " + (run_dir / a).string());

    std::ofstream f(run_dir / "manifest");
    if (!f) throw IoError("cannot write manifest under " + run_dir.string());
    f << "toolkit_version = " << m.toolkit_version << "\n";
    f << "subcommand = " << m.subcommand << "\n";
    f << "config_hash = " << m.config_hash << "\n";
    f << "config = " << m.config_file << "\n";
    f << "seed = " << m.seed << "\n";
    f << "created = " << m.created << "\n";
    for (const auto& [stage, ms] : m.stage_wall_ms)
        f << "stage " << stage << " = " << ms << " ms\n";
    for (const auto& a : m.artifacts) f << "artifact = " << a << "\n";
    for (const auto& r : m.facet_rows)
        f << "facet = " << r.cluster << " size=" << r.size << " seed_act=" << r.seed_activation
          << " final_act=" << r.final_activation << " top1=" << r.top1_class << "\n";
}

RunManifest read_manifest(const std::filesystem::path& file) {
    std::ifstream f(file);
    if (!f) throw IoError("cannot open manifest " + file.string());
    RunManifest m;
    std::string line;
    while (std::getline(f, line)) {
        const size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto strip = [](std::string& s) {
            while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
            while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.pop_back();
        };
        strip(key);
        strip(value);
        if (key == "toolkit_version") m.toolkit_version = value;
        else if (key == "subcommand") m.subcommand = value;
        else if (key == "config_hash") m.config_hash = value;
        else if (key == "config") m.config_file = value;
        else if (key == "seed") m.seed = std::stoull(value);
        else if (key == "created") m.created = value;
        else if (key == "artifact") m.artifacts.push_back(value);
        else if (key.rfind("stage ", 0) == 0) {
            const std::string stage = key.substr(6);
            m.stage_wall_ms.emplace_back(stage, std::stod(value));
        } else if (key == "facet") {
            FacetRow r;
            std::istringstream ss(value);
            std::string tok;
            ss >> r.cluster;
            while (ss >> tok) {
                const size_t p = tok.find('=');
                if (p == std::string::npos) continue;
                const std::string k = tok.substr(0, p);
                const std::string v = tok.substr(p + 1);
                if (k == "size") r.size = std::stoi(v);
                else if (k == "seed_act") r.seed_activation = std::stof(v);
                else if (k == "final_act") r.final_activation = std::stof(v);
                else if (k == "top1") r.top1_class = std::stoi(v);
            }
            m.facet_rows.push_back(r);
        }
    }
    return m;
}

}  // namespace facet
