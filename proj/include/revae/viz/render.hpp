#pragma once

// SVG renderers: embedding scatter plots and topographic scalp maps.
// Output bytes are a pure function of the inputs.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "revae/viz/tsne.hpp"

namespace revae::viz {

enum class ColorBy { class_label, subject };

// class mode: one color per class, full legend. subject mode: only epochs of
// 3 + 3 seed-picked subjects are drawn, one color per subject.
void render_scatter(const Embedding2D& emb, ColorBy mode, const std::filesystem::path& out_svg,
                    std::uint64_t subject_pick_seed = 1);

// 2-D projected electrode positions on the unit head disk, montage order.
struct ElectrodePos {
    std::string name;
    double x, y;
};
const std::vector<ElectrodePos>& montage_positions();

// Inverse-distance-weighted interpolation of the 19 electrode values on an
// n x n grid covering the head disk; cells outside the disk hold NaN.
std::vector<double> topomap_field(const std::vector<double>& values,
                                  const std::vector<std::string>& channel_names,
                                  std::size_t grid_n);

// Renders the field plus head outline and electrode markers; writes the raw
// channel values as JSON next to the image (<out>.json).
void render_topomap(const std::vector<double>& values,
                    const std::vector<std::string>& channel_names,
                    const std::filesystem::path& out_svg);

}  // namespace revae::viz
