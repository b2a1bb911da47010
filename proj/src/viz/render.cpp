#include "revae/viz/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "revae/core/binio.hpp"
#include "revae/core/rng.hpp"

namespace revae::viz {

namespace {

const char* kPalette[12] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                            "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939"};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

}  // namespace

const std::vector<ElectrodePos>& montage_positions() {
    static const std::vector<ElectrodePos> pos = {
        {"Fp1", -0.278, 0.856}, {"Fp2", 0.278, 0.856}, {"F7", -0.728, 0.529},
        {"F3", -0.360, 0.450},  {"Fz", 0.000, 0.450},  {"F4", 0.360, 0.450},
        {"F8", 0.728, 0.529},   {"T3", -0.900, 0.000}, {"C3", -0.450, 0.000},
        {"Cz", 0.000, 0.000},   {"C4", 0.450, 0.000},  {"T4", 0.900, 0.000},
        {"T5", -0.728, -0.529}, {"P3", -0.360, -0.450}, {"Pz", 0.000, -0.450},
        {"P4", 0.360, -0.450},  {"T6", 0.728, -0.529}, {"O1", -0.278, -0.856},
        {"O2", 0.278, -0.856}};
    return pos;
}

void render_scatter(const Embedding2D& emb, ColorBy mode, const std::filesystem::path& out_svg,
                    std::uint64_t subject_pick_seed) {
    if (emb.rows.empty()) throw std::invalid_argument("render_scatter: empty embedding");

    // pick which rows to draw and their color keys
    std::vector<std::size_t> draw;
    std::vector<std::string> legend;
    std::vector<std::size_t> color_of;  // per drawn point, palette index

    if (mode == ColorBy::class_label) {
        legend = {"lean", "obese"};
        for (std::size_t i = 0; i < emb.rows.size(); ++i) {
            draw.push_back(i);
            color_of.push_back(emb.rows[i].label == ClassLabel::lean ? 0 : 1);
        }
    } else {
        std::vector<std::string> lean_ids, obese_ids;
        std::set<std::string> seen;
        for (const auto& r : emb.rows)
            if (seen.insert(r.subject_id).second)
                (r.label == ClassLabel::lean ? lean_ids : obese_ids).push_back(r.subject_id);
        std::sort(lean_ids.begin(), lean_ids.end());
        std::sort(obese_ids.begin(), obese_ids.end());
        Rng rng(subject_pick_seed, "scatter/subjects");
        rng.shuffle(lean_ids);
        rng.shuffle(obese_ids);
        lean_ids.resize(std::min<std::size_t>(3, lean_ids.size()));
        obese_ids.resize(std::min<std::size_t>(3, obese_ids.size()));
        std::vector<std::string> chosen = lean_ids;
        chosen.insert(chosen.end(), obese_ids.begin(), obese_ids.end());
        legend = chosen;
        for (std::size_t i = 0; i < emb.rows.size(); ++i) {
            const auto it = std::find(chosen.begin(), chosen.end(), emb.rows[i].subject_id);
            if (it == chosen.end()) continue;
            draw.push_back(i);
            color_of.push_back(std::size_t(it - chosen.begin()));
        }
    }

    double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
    for (std::size_t i : draw) {
        min_x = std::min(min_x, emb.coords[2 * i]);
        max_x = std::max(max_x, emb.coords[2 * i]);
        min_y = std::min(min_y, emb.coords[2 * i + 1]);
        max_y = std::max(max_y, emb.coords[2 * i + 1]);
    }
    const double span_x = std::max(max_x - min_x, 1e-12);
    const double span_y = std::max(max_y - min_y, 1e-12);

    const double W = 640, H = 640, margin = 40;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    for (std::size_t k = 0; k < draw.size(); ++k) {
        const std::size_t i = draw[k];
        const double px = margin + (emb.coords[2 * i] - min_x) / span_x * (W - 2 * margin);
        const double py = H - margin - (emb.coords[2 * i + 1] - min_y) / span_y * (H - 2 * margin);
        svg << "<circle cx=\"" << fmt(px) << "\" cy=\"" << fmt(py) << "\" r=\"2.5\" fill=\""
            << kPalette[color_of[k] % 12] << "\" fill-opacity=\"0.7\"/>\n";
    }
    for (std::size_t k = 0; k < legend.size(); ++k) {
        const double ly = 20 + 18 * double(k);
        svg << "<circle cx=\"14\" cy=\"" << fmt(ly) << "\" r=\"5\" fill=\"" << kPalette[k % 12]
            << "\"/>\n";
        svg << "<text x=\"24\" y=\"" << fmt(ly + 4) << "\" font-family=\"sans-serif\" "
            << "font-size=\"12\">" << legend[k] << "</text>\n";
    }
    svg << "</svg>\n";
    atomic_write_file(out_svg, svg.str());
}

std::vector<double> topomap_field(const std::vector<double>& values,
                                  const std::vector<std::string>& channel_names,
                                  std::size_t grid_n) {
    if (values.size() != kNumChannels || channel_names.size() != kNumChannels)
        throw std::invalid_argument("topomap: need exactly 19 values and names");
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("topomap: non-finite value");

    const auto& montage = montage_positions();
    std::vector<double> ex(kNumChannels), ey(kNumChannels);
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        const auto it = std::find_if(montage.begin(), montage.end(), [&](const ElectrodePos& p) {
            return p.name == channel_names[c];
        });
        if (it == montage.end())
            throw std::invalid_argument("topomap: unknown channel " + channel_names[c]);
        ex[c] = it->x;
        ey[c] = it->y;
    }

    // inverse-distance-squared weights: a convex combination, so constants
    // are reproduced exactly and electrode sites take their own values
    std::vector<double> field(grid_n * grid_n, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t gy = 0; gy < grid_n; ++gy) {
        for (std::size_t gx = 0; gx < grid_n; ++gx) {
            const double x = -1.05 + 2.1 * (double(gx) + 0.5) / double(grid_n);
            const double y = -1.05 + 2.1 * (double(gy) + 0.5) / double(grid_n);
            if (x * x + y * y > 1.0) continue;
            double wsum = 0.0, vsum = 0.0;
            bool exact = false;
            for (std::size_t c = 0; c < kNumChannels; ++c) {
                const double d2 = (x - ex[c]) * (x - ex[c]) + (y - ey[c]) * (y - ey[c]);
                if (d2 < 1e-12) {
                    field[gy * grid_n + gx] = values[c];
                    exact = true;
                    break;
                }
                const double w = 1.0 / d2;
                wsum += w;
                vsum += w * values[c];
            }
            if (!exact) field[gy * grid_n + gx] = vsum / wsum;
        }
    }
    return field;
}

namespace {

std::string heat_color(double t) {
    // white -> yellow -> red -> dark red
    t = std::clamp(t, 0.0, 1.0);
    double r, g, b;
    if (t < 1.0 / 3) {
        const double u = t * 3.0;
        r = 255;
        g = 255 - 60 * u;
        b = 255 - 255 * u;
    } else if (t < 2.0 / 3) {
        const double u = (t - 1.0 / 3) * 3.0;
        r = 255;
        g = 195 - 195 * u;
        b = 0;
    } else {
        const double u = (t - 2.0 / 3) * 3.0;
        r = 255 - 116 * u;
        g = 0;
        b = 0;
    }
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", int(r), int(g), int(b));
    return buf;
}

}  // namespace

void render_topomap(const std::vector<double>& values,
                    const std::vector<std::string>& channel_names,
                    const std::filesystem::path& out_svg) {
    const std::size_t grid_n = 64;
    const auto field = topomap_field(values, channel_names, grid_n);

    double lo = 1e300, hi = -1e300;
    for (double v : field) {
        if (std::isnan(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi - lo > 1e-30 ? hi - lo : 1.0;

    const double W = 520, H = 560;
    const double cx = 260, cy = 280, R = 220;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";

    const double cell = 2.1 / double(grid_n) * R;
    for (std::size_t gy = 0; gy < grid_n; ++gy)
        for (std::size_t gx = 0; gx < grid_n; ++gx) {
            const double v = field[gy * grid_n + gx];
            if (std::isnan(v)) continue;
            const double x = -1.05 + 2.1 * (double(gx) + 0.5) / double(grid_n);
            const double y = -1.05 + 2.1 * (double(gy) + 0.5) / double(grid_n);
            svg << "<rect x=\"" << fmt(cx + x * R - cell / 2) << "\" y=\""
                << fmt(cy - y * R - cell / 2) << "\" width=\"" << fmt(cell + 0.5) << "\" height=\""
                << fmt(cell + 0.5) << "\" fill=\"" << heat_color((v - lo) / span) << "\"/>\n";
        }

    // head outline, nose, ears
    svg << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"" << R
        << "\" fill=\"none\" stroke=\"black\" stroke-width=\"3\"/>\n";
    svg << "<path d=\"M " << fmt(cx - 18) << " " << fmt(cy - R + 4) << " L " << fmt(cx) << " "
        << fmt(cy - R - 22) << " L " << fmt(cx + 18) << " " << fmt(cy - R + 4)
        << "\" fill=\"none\" stroke=\"black\" stroke-width=\"3\"/>\n";

    for (const auto& p : montage_positions()) {
        const double px = cx + p.x * R, py = cy - p.y * R;
        svg << "<circle cx=\"" << fmt(px) << "\" cy=\"" << fmt(py)
            << "\" r=\"3\" fill=\"black\"/>\n";
        svg << "<text x=\"" << fmt(px + 5) << "\" y=\"" << fmt(py - 5)
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << p.name << "</text>\n";
    }
    svg << "</svg>\n";
    atomic_write_file(out_svg, svg.str());

    nlohmann::json j;
    for (std::size_t c = 0; c < channel_names.size(); ++c) j[channel_names[c]] = values[c];
    atomic_write_file(out_svg.string() + ".json", j.dump(2) + "\n");
}

}  // namespace revae::viz
