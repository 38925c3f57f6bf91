#include "aog/synthetic.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "aog/config_file.hpp"
#include "aog/errors.hpp"
#include "aog/score_maps.hpp"

namespace aog {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace {

bool tiles_grid(const Configuration& c) {
    std::vector<int> cover(static_cast<std::size_t>(c.grid_w * c.grid_h), 0);
    for (const auto& r : c.rects) {
        if (r.x < 0 || r.y < 0 || r.w < 1 || r.h < 1 || r.x + r.w > c.grid_w || r.y + r.h > c.grid_h) return false;
        for (int y = r.y; y < r.y + r.h; ++y) {
            for (int x = r.x; x < r.x + r.w; ++x) ++cover[static_cast<std::size_t>(y * c.grid_w + x)];
        }
    }
    return std::all_of(cover.begin(), cover.end(), [](int k) { return k == 1; });
}

std::vector<std::vector<Rect>> default_layouts(int w, int h, int wanted) {
    std::vector<std::vector<Rect>> out;
    const int lw = std::max(1, w / 3);
    const int lh = std::max(1, h / 3);
    if (w >= 2) out.push_back({{0, 0, lw, h}, {lw, 0, w - lw, h}});
    if (h >= 2) out.push_back({{0, 0, w, lh}, {0, lh, w, h - lh}});
    if (w >= 2 && h >= 2) out.push_back({{0, 0, w, lh}, {0, lh, lw, h - lh}, {lw, lh, w - lw, h - lh}});

    // Further classes take layouts from the grid grammar in enumeration order.
    if (static_cast<int>(out.size()) < wanted) {
        std::set<Configuration> used;
        for (const auto& l : out) used.insert(make_configuration(w, h, l));
        const Aog g = build_aog(w, h, 1, 0.5, false);
        for (const auto& c : enumerate_configurations(g, 1000000)) {
            if (static_cast<int>(out.size()) >= wanted) break;
            if (used.insert(c).second) out.push_back(c.rects);
        }
    }
    if (static_cast<int>(out.size()) > wanted) out.resize(static_cast<std::size_t>(wanted));
    return out;
}

} // namespace

std::vector<Configuration> class_configurations(const SyntheticSpec& spec) {
    if (spec.num_classes < 2) throw SpecError("synthetic task needs background plus at least one foreground class");
    if (spec.grid_w < 1 || spec.grid_h < 1) throw SpecError("grid dimensions must be >= 1");
    const int foreground = spec.num_classes - 1;
    const auto layouts =
        spec.class_configurations.empty() ? default_layouts(spec.grid_w, spec.grid_h, foreground) : spec.class_configurations;
    if (static_cast<int>(layouts.size()) != foreground) {
        throw SpecError("expected " + std::to_string(foreground) + " foreground layouts, got " +
                        std::to_string(layouts.size()));
    }
    std::vector<Configuration> out;
    std::set<Configuration> seen;
    for (std::size_t i = 0; i < layouts.size(); ++i) {
        auto c = make_configuration(spec.grid_w, spec.grid_h, layouts[i]);
        if (!tiles_grid(c)) throw SpecError("layout of class " + std::to_string(i + 1) + " does not tile the grid");
        if (!seen.insert(c).second) throw SpecError("class " + std::to_string(i + 1) + " repeats an earlier layout");
        out.push_back(std::move(c));
    }
    return out;
}

std::map<Rect, int> rect_channels(const SyntheticSpec& spec) {
    std::map<Rect, int> channel;
    int next = 0;
    for (const auto& c : class_configurations(spec)) {
        for (const auto& r : c.rects) {
            if (channel.emplace(r, next % spec.channels).second) ++next;
        }
    }
    return channel;
}

Roi object_box(const SyntheticSpec& spec) {
    const int side_w = std::min(spec.object_size, spec.map_w);
    const int side_h = std::min(spec.object_size, spec.map_h);
    Roi r;
    r.x0 = (spec.map_w - side_w) / 2;
    r.y0 = (spec.map_h - side_h) / 2;
    r.x1 = r.x0 + side_w;
    r.y1 = r.y0 + side_h;
    return r;
}

Dataset generate(const SyntheticSpec& spec, std::uint64_t seed, int samples_per_class) {
    if (spec.channels < 1 || spec.map_h < 1 || spec.map_w < 1 || spec.object_size < 1) {
        throw SpecError("channels, map size and object size must be >= 1");
    }
    if (spec.object_size < std::max(spec.grid_w, spec.grid_h)) {
        throw SpecError("object box must be at least one pixel per grid cell");
    }
    if (samples_per_class < 0 || spec.noise_sigma < 0.0) throw SpecError("sample count and noise must be non-negative");

    const auto layouts = class_configurations(spec);
    const auto channel = rect_channels(spec);
    const Roi box = object_box(spec);

    // Noise-free template per class.
    std::vector<FeatureMap<double>> templates;
    templates.emplace_back(spec.channels, spec.map_h, spec.map_w);
    for (const auto& layout : layouts) {
        FeatureMap<double> m(spec.channels, spec.map_h, spec.map_w);
        for (const auto& r : layout.rects) {
            const PixelSpan s = cell_pixel_span(box, spec.grid_w, spec.grid_h, r);
            const int d = channel.at(r);
            for (int y = s.row0; y < s.row1; ++y) {
                for (int x = s.col0; x < s.col1; ++x) m.at(d, y, x) += spec.amplitude;
            }
        }
        templates.push_back(std::move(m));
    }

    Dataset ds;
    ds.grid_w = spec.grid_w;
    ds.grid_h = spec.grid_h;
    ds.num_classes = spec.num_classes;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int i = 0; i < samples_per_class; ++i) {
        for (int c = 0; c < spec.num_classes; ++c) {
            Sample s;
            s.feature = templates[static_cast<std::size_t>(c)];
            if (spec.noise_sigma > 0.0) {
                auto& v = s.feature.values;
                for (Eigen::Index k = 0; k < v.size(); ++k) v.data()[k] += spec.noise_sigma * noise(rng);
            }
            Roi roi = box;
            roi.label = c;
            s.rois.push_back(roi);
            s.truth.push_back(c == 0 ? std::nullopt : std::optional<Configuration>(layouts[static_cast<std::size_t>(c - 1)]));
            ds.samples.push_back(std::move(s));
        }
    }
    return ds;
}

Dataset jitter_rois(const Dataset& ds, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction < 0.5)) throw ParameterError("RoI jitter fraction must lie in [0, 0.5)");
    Dataset out = ds;
    if (fraction == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    auto shift = [&](int side) { return static_cast<int>(unit(rng) * fraction * side); }; // truncates toward zero
    for (auto& s : out.samples) {
        for (auto& r : s.rois) {
            const int w = r.width();
            const int h = r.height();
            r.x0 = std::clamp(r.x0 + shift(w), 0, s.feature.width - 1);
            r.x1 = std::clamp(r.x1 + shift(w), r.x0 + 1, s.feature.width);
            r.y0 = std::clamp(r.y0 + shift(h), 0, s.feature.height - 1);
            r.y1 = std::clamp(r.y1 + shift(h), r.y0 + 1, s.feature.height);
        }
    }
    return out;
}

SyntheticSplit generate_split(const SyntheticSpec& spec) {
    SyntheticSplit split;
    split.train = jitter_rois(generate(spec, derive_seed(spec.seed, 0), spec.train_per_class), spec.roi_jitter,
                              derive_seed(spec.seed, 1));
    split.test = jitter_rois(generate(spec, derive_seed(spec.seed, 2), spec.test_per_class), spec.roi_jitter,
                             derive_seed(spec.seed, 3));
    return split;
}

double config_match(const Configuration& predicted, const Configuration& truth) {
    if (predicted.grid_w != truth.grid_w || predicted.grid_h != truth.grid_h) {
        throw InputError("configurations come from different grids");
    }
    struct Pair {
        int overlap;
        Rect lo, hi;
        std::size_t p, t;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < predicted.rects.size(); ++i) {
        for (std::size_t j = 0; j < truth.rects.size(); ++j) {
            const Rect& a = predicted.rects[i];
            const Rect& b = truth.rects[j];
            const int o = overlap_cells(a, b);
            if (o > 0) pairs.push_back({o, std::min(a, b), std::max(a, b), i, j});
        }
    }
    // The ordering key ignores which side a rect came from, so the score is
    // symmetric in its arguments.
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.overlap != b.overlap) return a.overlap > b.overlap;
        if (a.lo != b.lo) return a.lo < b.lo;
        return a.hi < b.hi;
    });
    std::vector<char> used_p(predicted.rects.size(), 0), used_t(truth.rects.size(), 0);
    int matched = 0;
    for (const auto& pr : pairs) {
        if (used_p[pr.p] || used_t[pr.t]) continue;
        used_p[pr.p] = used_t[pr.t] = 1;
        matched += pr.overlap;
    }
    // Normalized by the cells either side covers: the whole grid for tilings,
    // and still exactly 1 for equal partial layouts.
    std::vector<char> covered(static_cast<std::size_t>(truth.grid_w * truth.grid_h), 0);
    for (const auto* c : {&predicted, &truth}) {
        for (const auto& r : c->rects) {
            for (int y = r.y; y < r.y + r.h; ++y) {
                for (int x = r.x; x < r.x + r.w; ++x) covered[static_cast<std::size_t>(y * truth.grid_w + x)] = 1;
            }
        }
    }
    const auto cells = std::count(covered.begin(), covered.end(), 1);
    return cells == 0 ? 1.0 : static_cast<double>(matched) / static_cast<double>(cells);
}

SyntheticSpec synthetic_spec_from_key_values(const std::map<std::string, std::string>& kv, SyntheticSpec s) {
    for (const auto& [k, v] : kv) {
        if (k == "num_classes") s.num_classes = kv_int(k, v);
        else if (k == "grid") std::tie(s.grid_w, s.grid_h) = parse_grid(v);
        else if (k == "grid_w") s.grid_w = kv_int(k, v);
        else if (k == "grid_h") s.grid_h = kv_int(k, v);
        else if (k == "channels") s.channels = kv_int(k, v);
        else if (k == "map_h") s.map_h = kv_int(k, v);
        else if (k == "map_w") s.map_w = kv_int(k, v);
        else if (k == "object_size") s.object_size = kv_int(k, v);
        else if (k == "train_per_class") s.train_per_class = kv_int(k, v);
        else if (k == "test_per_class") s.test_per_class = kv_int(k, v);
        else if (k == "noise_sigma") s.noise_sigma = kv_double(k, v);
        else if (k == "roi_jitter") s.roi_jitter = kv_double(k, v);
        else if (k == "amplitude") s.amplitude = kv_double(k, v);
        else if (k == "seed") s.seed = static_cast<std::uint64_t>(kv_int(k, v));
        else throw ParseError("unknown synthetic spec key '" + k + "'");
    }
    return s;
}

std::string describe(const SyntheticSpec& s) {
    std::ostringstream o;
    o << "num_classes=" << s.num_classes << " grid=" << s.grid_w << "x" << s.grid_h << " channels=" << s.channels
      << " map=" << s.map_h << "x" << s.map_w << " object_size=" << s.object_size
      << " train_per_class=" << s.train_per_class << " test_per_class=" << s.test_per_class
      << " noise_sigma=" << s.noise_sigma << " roi_jitter=" << s.roi_jitter << " amplitude=" << s.amplitude
      << " seed=" << s.seed;
    return o.str();
}

} // namespace aog
