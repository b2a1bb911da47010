#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "revae/core/binio.hpp"
#include "revae/core/rng.hpp"
#include "revae/viz/render.hpp"
#include "revae/viz/tsne.hpp"

using namespace revae;
using namespace revae::viz;

namespace fs = std::filesystem;

namespace {

FeatureMatrix two_blobs(std::size_t per_cluster, std::size_t dim, double sep, std::uint64_t seed) {
    FeatureMatrix fm;
    fm.dim = dim;
    fm.n_rows = 2 * per_cluster;
    fm.values.resize(fm.n_rows * dim);
    Rng rng(seed);
    for (std::size_t i = 0; i < fm.n_rows; ++i) {
        const bool second = i >= per_cluster;
        for (std::size_t k = 0; k < dim; ++k)
            fm.values[i * dim + k] = float(rng.normal() + (second && k == 0 ? sep : 0.0));
        fm.rows.push_back(FeatureRow{(second ? "o" : "l") + std::to_string(i % 5),
                                     std::uint32_t(i),
                                     second ? ClassLabel::obese : ClassLabel::lean});
    }
    return fm;
}

}  // namespace

TEST_CASE("tsne separates two well-separated blobs") {
    const auto fm = two_blobs(100, 2, 10.0, 3);
    TsneParams params;
    params.perplexity = 20.0;
    params.n_iter = 500;
    const auto emb = tsne_project(fm, params);
    REQUIRE(emb.coords.size() == 400);
    for (double v : emb.coords) CHECK(std::isfinite(v));

    // k-NN purity: nearest neighbor of nearly every point is the same cluster
    std::size_t pure = 0;
    for (std::size_t i = 0; i < fm.n_rows; ++i) {
        double best = 1e300;
        std::size_t best_j = i;
        for (std::size_t j = 0; j < fm.n_rows; ++j) {
            if (j == i) continue;
            const double dx = emb.coords[2 * i] - emb.coords[2 * j];
            const double dy = emb.coords[2 * i + 1] - emb.coords[2 * j + 1];
            const double d = dx * dx + dy * dy;
            if (d < best) {
                best = d;
                best_j = j;
            }
        }
        pure += (best_j < 100) == (i < 100);
    }
    CHECK(double(pure) / double(fm.n_rows) >= 0.95);

    // objective does not increase after the exaggeration phase ends
    CHECK(emb.kl_final <= emb.kl_after_exaggeration + 1e-9);
    for (const auto& [it, kl] : emb.kl_history) CHECK(std::isfinite(kl));
}

TEST_CASE("tsne is deterministic and rejects infeasible perplexity") {
    const auto fm = two_blobs(30, 3, 4.0, 9);
    TsneParams params;
    params.perplexity = 10.0;
    params.n_iter = 120;
    const auto a = tsne_project(fm, params);
    const auto b = tsne_project(fm, params);
    CHECK(a.coords == b.coords);

    TsneParams bad;
    bad.perplexity = 30.0;  // 60 rows <= 3 * 30
    CHECK_THROWS(tsne_project(fm, bad));
}

TEST_CASE("tsne duplicated rows stay together") {
    auto fm = two_blobs(40, 4, 6.0, 21);
    // duplicate row 0 onto row 1
    std::copy(fm.row(0), fm.row(0) + fm.dim, fm.row(1));
    TsneParams params;
    params.perplexity = 12.0;
    params.n_iter = 300;
    const auto emb = tsne_project(fm, params);

    const double dx = emb.coords[0] - emb.coords[2];
    const double dy = emb.coords[1] - emb.coords[3];
    const double dup_dist = std::sqrt(dx * dx + dy * dy);

    std::vector<double> all;
    for (std::size_t i = 0; i < fm.n_rows; ++i)
        for (std::size_t j = i + 1; j < fm.n_rows; ++j) {
            const double ax = emb.coords[2 * i] - emb.coords[2 * j];
            const double ay = emb.coords[2 * i + 1] - emb.coords[2 * j + 1];
            all.push_back(std::sqrt(ax * ax + ay * ay));
        }
    std::sort(all.begin(), all.end());
    CHECK(dup_dist <= all[all.size() / 100]);  // below the 1st percentile
}

TEST_CASE("tsne embedding is equivariant to row permutation") {
    auto fm = two_blobs(25, 3, 5.0, 33);
    TsneParams params;
    params.perplexity = 8.0;
    params.n_iter = 150;
    const auto e1 = tsne_project(fm, params);

    // rotate the rows
    FeatureMatrix rot = fm;
    const std::size_t shift = 7;
    for (std::size_t i = 0; i < fm.n_rows; ++i) {
        const std::size_t j = (i + shift) % fm.n_rows;
        std::copy(fm.row(i), fm.row(i) + fm.dim, rot.row(j));
        rot.rows[j] = fm.rows[i];
    }
    const auto e2 = tsne_project(rot, params);

    for (std::size_t i = 0; i < fm.n_rows; ++i) {
        const std::size_t j = (i + shift) % fm.n_rows;
        CHECK(e1.coords[2 * i] == e2.coords[2 * j]);
        CHECK(e1.coords[2 * i + 1] == e2.coords[2 * j + 1]);
    }
}

TEST_CASE("scatter rendering: legends and byte stability") {
    const auto fm = two_blobs(30, 2, 6.0, 5);
    TsneParams params;
    params.perplexity = 8.0;
    params.n_iter = 60;
    const auto emb = tsne_project(fm, params);

    const auto dir = fs::temp_directory_path() / "revae_viz_test";
    fs::remove_all(dir);
    fs::create_directories(dir);

    render_scatter(emb, ColorBy::class_label, dir / "class.svg");
    const std::string svg1 = read_text_file(dir / "class.svg");
    CHECK(svg1.find(">lean<") != std::string::npos);
    CHECK(svg1.find(">obese<") != std::string::npos);

    render_scatter(emb, ColorBy::class_label, dir / "class2.svg");
    CHECK(svg1 == read_text_file(dir / "class2.svg"));

    render_scatter(emb, ColorBy::subject, dir / "subj.svg", 7);
    const std::string svg2 = read_text_file(dir / "subj.svg");
    std::size_t legend_entries = 0;
    for (std::size_t pos = 0; (pos = svg2.find("<text", pos)) != std::string::npos; ++pos)
        ++legend_entries;
    CHECK(legend_entries == 6);

    Embedding2D empty;
    CHECK_THROWS(render_scatter(empty, ColorBy::class_label, dir / "x.svg"));
    fs::remove_all(dir);
}

TEST_CASE("topomap field: constants, one-hot peak, unknown channel") {
    std::vector<std::string> names(kMontage10_20.begin(), kMontage10_20.end());

    std::vector<double> flat(19, 2.5);
    const auto field = topomap_field(flat, names, 48);
    double lo = 1e300, hi = -1e300;
    for (double v : field) {
        if (std::isnan(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(hi - lo < 1e-9);

    std::vector<double> onehot(19, 0.0);
    std::size_t o1 = 0;
    for (std::size_t c = 0; c < names.size(); ++c)
        if (names[c] == "O1") o1 = c;
    onehot[o1] = 1.0;
    const std::size_t gn = 64;
    const auto f2 = topomap_field(onehot, names, gn);
    double best = -1e300;
    std::size_t best_cell = 0;
    for (std::size_t i = 0; i < f2.size(); ++i) {
        if (std::isnan(f2[i])) continue;
        if (f2[i] > best) {
            best = f2[i];
            best_cell = i;
        }
    }
    const double bx = -1.05 + 2.1 * (double(best_cell % gn) + 0.5) / double(gn);
    const double by = -1.05 + 2.1 * (double(best_cell / gn) + 0.5) / double(gn);
    const auto& montage = montage_positions();
    const auto o1pos = std::find_if(montage.begin(), montage.end(),
                                    [](const ElectrodePos& p) { return p.name == "O1"; });
    CHECK(std::abs(bx - o1pos->x) < 0.05);
    CHECK(std::abs(by - o1pos->y) < 0.05);

    names[4] = "XX";
    CHECK_THROWS(topomap_field(flat, names, 16));
}

TEST_CASE("topomap svg and value sidecar") {
    std::vector<std::string> names(kMontage10_20.begin(), kMontage10_20.end());
    std::vector<double> values(19);
    for (std::size_t c = 0; c < 19; ++c) values[c] = double(c) * 0.1;

    const auto dir = fs::temp_directory_path() / "revae_topo_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    render_topomap(values, names, dir / "map.svg");
    CHECK(fs::exists(dir / "map.svg"));
    CHECK(fs::exists(dir / "map.svg.json"));
    const std::string svg = read_text_file(dir / "map.svg");
    CHECK(svg.find(">O1<") != std::string::npos);
    CHECK(svg.find(">Fp2<") != std::string::npos);

    render_topomap(values, names, dir / "map2.svg");
    CHECK(svg == read_text_file(dir / "map2.svg"));
    fs::remove_all(dir);
}
