#include <map>

#include "aog/errors.hpp"
#include "aog/synthetic.hpp"
#include "doctest.h"

using namespace aog;

namespace {

Configuration cfg(std::vector<Rect> rects, int w = 2, int h = 2) { return make_configuration(w, h, std::move(rects)); }

} // namespace

TEST_CASE("config_match") {
    const auto whole = cfg({{0, 0, 2, 2}});
    const auto top = cfg({{0, 0, 2, 1}});
    const auto singles = cfg({{0, 0, 1, 1}, {1, 0, 1, 1}, {0, 1, 1, 1}, {1, 1, 1, 1}});
    const auto halves = cfg({{0, 0, 1, 2}, {1, 0, 1, 2}});
    CHECK(config_match(whole, whole) == 1.0);
    CHECK(config_match(whole, singles) == 0.25);
    CHECK(config_match(singles, whole) == 0.25);
    CHECK(config_match(halves, singles) == 0.5);
    CHECK(config_match(halves, whole) == 0.5);
    CHECK_THROWS_AS(config_match(whole, cfg({{0, 0, 3, 3}}, 3, 3)), InputError);
    // Partial layouts are scored over the cells either side covers.
    CHECK(config_match(top, top) == 1.0);
    CHECK(config_match(top, whole) == 0.5);

    // Symmetric and 1 exactly on equal layouts, over all 3x3 layouts.
    const auto all = enumerate_configurations(build_aog(3, 3, 1), 100000);
    for (std::size_t i = 0; i < all.size(); i += 7) {
        for (std::size_t j = 0; j < all.size(); j += 5) {
            const double a = config_match(all[i], all[j]);
            CHECK(a == config_match(all[j], all[i]));
            CHECK((a == 1.0) == (all[i] == all[j]));
            CHECK(a >= 0.0);
        }
    }
}

TEST_CASE("class layouts") {
    SyntheticSpec s;
    const auto cs = class_configurations(s);
    REQUIRE(cs.size() == 3);
    for (std::size_t i = 0; i < cs.size(); ++i) {
        CHECK(cs[i].covered_cells() == 9);
        for (std::size_t j = i + 1; j < cs.size(); ++j) CHECK_FALSE(cs[i] == cs[j]);
    }

    s.class_configurations = {{{0, 0, 3, 3}}, {{0, 0, 3, 3}}, {{0, 0, 1, 3}, {1, 0, 2, 3}}};
    CHECK_THROWS_AS(class_configurations(s), SpecError);
    s.class_configurations = {{{0, 0, 3, 3}}, {{0, 0, 1, 3}}, {{0, 0, 1, 3}, {1, 0, 2, 3}}};
    CHECK_THROWS_AS(class_configurations(s), SpecError);
    s.class_configurations = {{{0, 0, 3, 3}}};
    CHECK_THROWS_AS(class_configurations(s), SpecError);

    SyntheticSpec many;
    many.num_classes = 8;
    CHECK(class_configurations(many).size() == 7);
}

TEST_CASE("generation") {
    SyntheticSpec s;
    s.noise_sigma = 0.0;
    s.roi_jitter = 0.0;

    SUBCASE("noise-free samples of a class are identical") {
        const auto d = generate(s, 1, 5);
        std::map<int, const Sample*> first;
        for (const auto& smp : d.samples) {
            const int label = *smp.rois[0].label;
            if (!first.count(label)) first[label] = &smp;
            CHECK(smp.feature == first[label]->feature);
        }
        REQUIRE(first.size() == 4);
        for (int a = 0; a < 4; ++a) {
            for (int b = a + 1; b < 4; ++b) CHECK_FALSE(first[a]->feature == first[b]->feature);
        }
    }
    SUBCASE("labels are balanced and truth is set for foreground only") {
        const auto d = generate(SyntheticSpec{}, 2, 7);
        std::map<int, int> counts;
        for (const auto& smp : d.samples) {
            const int label = *smp.rois[0].label;
            ++counts[label];
            CHECK(smp.truth[0].has_value() == (label != 0));
        }
        for (int c = 0; c < 4; ++c) CHECK(counts[c] == 7);
        CHECK_NOTHROW(validate_dataset(d));
    }
    SUBCASE("deterministic per seed") {
        CHECK(generate(SyntheticSpec{}, 3, 4) == generate(SyntheticSpec{}, 3, 4));
        CHECK_FALSE(generate(SyntheticSpec{}, 3, 4) == generate(SyntheticSpec{}, 4, 4));
        const auto a = generate_split(SyntheticSpec{});
        CHECK(a.train.num_rois() == 500);
        CHECK(a.test.num_rois() == 200);
        const auto b = generate_split(SyntheticSpec{});
        CHECK(b.train == a.train);
        CHECK(b.test == a.test);
    }
    SUBCASE("classes are separable: nearest clean template classifies noisy samples") {
        const auto clean = generate(s, 5, 1);
        SyntheticSpec noisy_spec;
        noisy_spec.roi_jitter = 0.0;
        const auto noisy = generate(noisy_spec, 6, 10);
        int correct = 0;
        for (const auto& smp : noisy.samples) {
            int best = -1;
            double best_d = 1e300;
            for (const auto& t : clean.samples) {
                const double dist = (smp.feature.values - t.feature.values).squaredNorm();
                if (dist < best_d) {
                    best_d = dist;
                    best = *t.rois[0].label;
                }
            }
            correct += best == *smp.rois[0].label;
        }
        CHECK(correct == static_cast<int>(noisy.samples.size()));
    }
}

TEST_CASE("roi jitter") {
    SyntheticSpec s;
    s.roi_jitter = 0.0;
    s.map_w = s.map_h = 40;
    s.object_size = 20;
    const auto d = generate(s, 1, 10);
    CHECK(jitter_rois(d, 0.0, 9) == d);
    CHECK(jitter_rois(d, 0.1, 9) == jitter_rois(d, 0.1, 9));
    const auto j = jitter_rois(d, 0.1, 9);
    bool moved = false;
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
        const Roi& a = d.samples[i].rois[0];
        const Roi& b = j.samples[i].rois[0];
        CHECK(std::abs(a.x0 - b.x0) <= 2);
        CHECK(std::abs(a.x1 - b.x1) <= 2);
        CHECK(std::abs(a.y0 - b.y0) <= 2);
        CHECK(std::abs(a.y1 - b.y1) <= 2);
        CHECK(b.x0 >= 0);
        CHECK(b.x1 <= 40);
        CHECK(b.x0 < b.x1);
        moved = moved || !(a == b);
        CHECK(d.samples[i].truth == j.samples[i].truth);
    }
    CHECK(moved);
    CHECK_THROWS_AS(jitter_rois(d, 0.5, 1), ParameterError);
    CHECK_THROWS_AS(jitter_rois(d, -0.1, 1), ParameterError);
}

TEST_CASE("spec from key-values") {
    const auto s = synthetic_spec_from_key_values({{"num_classes", "3"}, {"noise_sigma", "0.1"}, {"seed", "42"}});
    CHECK(s.num_classes == 3);
    CHECK(s.noise_sigma == 0.1);
    CHECK(s.seed == 42);
    CHECK_THROWS_AS(synthetic_spec_from_key_values({{"colour", "red"}}), ParseError);
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) == derive_seed(1, 0));
}
