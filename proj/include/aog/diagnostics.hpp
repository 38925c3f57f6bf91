#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aog/training.hpp"

namespace aog {

struct GradCheckSetup {
    int grid_w = 2;
    int grid_h = 2;
    int l_min = 1;
    int channels = 2;
    int classes = 3;
    int map_h = 4;
    int map_w = 4;
    double step = 1e-5;
    double param_stddev = 1.0;
};

struct StageCheck {
    std::string stage;
    double max_rel_error = 0.0;
    Eigen::Index checks = 0;
};

struct GradCheckSuite {
    std::vector<StageCheck> stages; // score_maps, aog, end_to_end
    std::uint64_t draw_seed = 0;    // seed of the draw actually checked
    bool argmax_stable = true;
    double max_rel_error() const;
};

/// Random model and sample for gradient checks, drawn from `seed`.
struct GradCheckInstance {
    Model model;
    Sample sample;
};
GradCheckInstance make_gradcheck_instance(const GradCheckSetup& setup, std::uint64_t seed);

/// Checks the conv+pooling stage, the AOG stage and the full loss against
/// central differences. In unfolding mode draws are re-sampled (seed, seed+1,
/// ...) until one whose argmax tables survive every probe is found.
GradCheckSuite run_gradcheck_suite(const GradCheckSetup& setup, Mode mode, GradientMode gradient_mode,
                                   std::uint64_t seed, int max_draws = 50);

} // namespace aog
