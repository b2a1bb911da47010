#include "revae/exp/artifacts.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "revae/core/binio.hpp"
#include "revae/core/sha256.hpp"

namespace revae::exp {

using nlohmann::json;
namespace fs = std::filesystem;

void save_features(const FeatureMatrix& fm, const fs::path& prefix,
                   const std::string& model_digest) {
    atomic_write_f32_file(fs::path(prefix.string() + ".bin"), fm.values);
    json rows = json::array();
    for (const auto& r : fm.rows)
        rows.push_back(json{{"subject", r.subject_id},
                            {"epoch", r.epoch_index},
                            {"label", int(r.label)}});
    const json j{{"n_rows", fm.n_rows},
                 {"dim", fm.dim},
                 {"source", fm.source},
                 {"model_digest", model_digest},
                 {"rows", rows}};
    atomic_write_file(fs::path(prefix.string() + ".json"), j.dump(2) + "\n");
}

FeatureMatrix load_features(const fs::path& prefix) {
    FeatureMatrix fm;
    const json j = json::parse(read_text_file(fs::path(prefix.string() + ".json")));
    fm.n_rows = j.at("n_rows").get<std::size_t>();
    fm.dim = j.at("dim").get<std::size_t>();
    fm.source = j.at("source").get<std::string>();
    for (const auto& r : j.at("rows"))
        fm.rows.push_back(FeatureRow{r.at("subject").get<std::string>(),
                                     r.at("epoch").get<std::uint32_t>(),
                                     ClassLabel(r.at("label").get<int>())});
    fm.values = read_f32_file(fs::path(prefix.string() + ".bin"));
    if (fm.values.size() != fm.n_rows * fm.dim || fm.rows.size() != fm.n_rows)
        throw std::runtime_error("features: inconsistent sizes in " + prefix.string());
    return fm;
}

FeatureMatrix load_features_delimited(const fs::path& file) {
    std::ifstream f(file);
    if (!f) throw std::runtime_error("cannot open " + file.string());
    FeatureMatrix fm;
    std::string line;
    std::size_t row = 0;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        for (auto& c : line)
            if (c == ',' || c == ';' || c == '\t') c = ' ';
        std::istringstream ls(line);
        std::vector<double> vals;
        double v;
        while (ls >> v) vals.push_back(v);
        if (vals.size() < 2)
            throw std::runtime_error("delimited matrix needs at least one feature plus a label");
        if (fm.dim == 0) fm.dim = vals.size() - 1;
        if (vals.size() - 1 != fm.dim)
            throw std::runtime_error("ragged row in " + file.string());
        for (std::size_t k = 0; k < fm.dim; ++k) fm.values.push_back(float(vals[k]));
        const int label = int(vals.back());
        if (label != 0 && label != 1)
            throw std::runtime_error("labels must be 0 or 1 in " + file.string());
        fm.rows.push_back(
            FeatureRow{"row" + std::to_string(row), std::uint32_t(row), ClassLabel(label)});
        ++row;
    }
    fm.n_rows = row;
    fm.source = "delimited:" + file.filename().string();
    return fm;
}

std::string file_digest(const fs::path& p) { return sha256_file_hex(p.string()); }

fs::path StageCache::sidecar(const std::string& stage) const {
    return dir_ / ("stage." + stage + ".json");
}

bool StageCache::fresh(const std::string& stage, const std::string& key) const {
    const fs::path sc = sidecar(stage);
    if (!fs::exists(sc)) return false;
    try {
        const json j = json::parse(read_text_file(sc));
        if (j.at("key").get<std::string>() != key) return false;
        for (const auto& [file, digest] : j.at("outputs").items()) {
            const fs::path p = dir_ / file;
            if (!fs::exists(p) || file_digest(p) != digest.get<std::string>()) return false;
        }
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

void StageCache::commit(const std::string& stage, const std::string& key,
                        const std::vector<fs::path>& outputs) const {
    json out_digests = json::object();
    for (const auto& p : outputs)
        out_digests[fs::relative(p, dir_).string()] = file_digest(p);
    const json j{{"stage", stage}, {"version", 1}, {"key", key}, {"outputs", out_digests}};
    atomic_write_file(sidecar(stage), j.dump(2) + "\n");
}

std::string StageCache::outputs_digest(const std::string& stage) const {
    const fs::path sc = sidecar(stage);
    if (!fs::exists(sc)) return "";
    const json j = json::parse(read_text_file(sc));
    Sha256 ctx;
    for (const auto& [file, digest] : j.at("outputs").items()) {
        ctx.update(file);
        ctx.update(digest.get<std::string>());
    }
    return ctx.hex();
}

}  // namespace revae::exp
