#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aog/grid_grammar.hpp"
#include "aog/score_maps.hpp"

namespace aog {

struct Sample {
    FeatureMap<double> feature;
    std::vector<Roi> rois;
    // Ground-truth part layout per RoI; empty for background RoIs.
    std::vector<std::optional<Configuration>> truth;

    friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
    int grid_w = 0;
    int grid_h = 0;
    int num_classes = 0;
    std::vector<Sample> samples;

    std::size_t num_rois() const;
    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Dataset file layout (all integers little-endian):
///
///   bytes 0..6   magic "AOGDSET"
///   byte  7      format version (kDatasetVersion)
///   u32 grid_w, u32 grid_h, u32 num_classes, u32 num_samples
///   per sample:
///     u32 D, u32 H, u32 W
///     f64 x D*H*W feature values, row-major (d, y, x), IEEE-754 bit pattern
///     u32 num_rois
///     per RoI: i32 x0, y0, x1, y1, i32 label (-1 = none),
///              u32 n (0 = no ground truth), n x (u32 x, y, w, h)
inline constexpr std::uint8_t kDatasetVersion = 1;

std::string serialize_dataset(const Dataset& ds);
Dataset deserialize_dataset(const std::string& bytes);
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

/// Checks label ranges, RoI bounds and ground-truth grids.
void validate_dataset(const Dataset& ds);

} // namespace aog
