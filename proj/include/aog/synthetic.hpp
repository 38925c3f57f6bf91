#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "aog/dataset.hpp"
#include "aog/grid_grammar.hpp"

namespace aog {

/// Desk-scale detection task whose classes differ only in their part layout.
/// Class 0 is background (pure noise); every foreground class paints the
/// rects of its own configuration, each rect with the channel assigned to
/// that rect.
struct SyntheticSpec {
    int num_classes = 4;
    int grid_w = 3;
    int grid_h = 3;
    int channels = 8;
    int map_h = 18;
    int map_w = 18;
    int object_size = 12; // side of the centred object box, in pixels
    int train_per_class = 125;
    int test_per_class = 50;
    double noise_sigma = 0.3;
    double roi_jitter = 0.1;
    double amplitude = 1.0;
    std::uint64_t seed = 0;
    // One layout per foreground class. Empty selects built-in layouts.
    std::vector<std::vector<Rect>> class_configurations;
};

/// Layouts for classes 1..num_classes-1. Throws SpecError when layouts repeat,
/// do not tile the grid, or the count does not match.
std::vector<Configuration> class_configurations(const SyntheticSpec& spec);

/// Channel painted for every distinct rect, in order of first appearance.
std::map<Rect, int> rect_channels(const SyntheticSpec& spec);

/// The object box all samples are painted into (centred in the map).
Roi object_box(const SyntheticSpec& spec);

Dataset generate(const SyntheticSpec& spec, std::uint64_t seed, int samples_per_class);

/// Shifts every RoI edge by an integer drawn uniformly within
/// +-fraction*side, clamped to the map. Ground truth is left unchanged.
Dataset jitter_rois(const Dataset& ds, double fraction, std::uint64_t seed);

struct SyntheticSplit {
    Dataset train;
    Dataset test;
};

/// Train and test sets drawn from independent streams of spec.seed, with
/// RoI jitter applied.
SyntheticSplit generate_split(const SyntheticSpec& spec);

/// Cell overlap of greedily matched rect pairs (descending overlap, each rect
/// used once) divided by the grid's cell count.
double config_match(const Configuration& predicted, const Configuration& truth);

SyntheticSpec synthetic_spec_from_key_values(const std::map<std::string, std::string>& kv,
                                             SyntheticSpec base = {});
std::string describe(const SyntheticSpec& spec);

/// splitmix64 mixing of a seed and a stream index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace aog
