#include "aog/diagnostics.hpp"

#include <algorithm>
#include <random>

#include "aog/gradcheck.hpp"

namespace aog {

double GradCheckSuite::max_rel_error() const {
    double m = 0.0;
    for (const auto& s : stages) m = std::max(m, s.max_rel_error);
    return m;
}

namespace {

Vector<double> gaussian_vector(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Vector<double> v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
    return v;
}

Vector<double> concat(const std::vector<Vector<double>>& parts) {
    Eigen::Index n = 0;
    for (const auto& p : parts) n += p.size();
    Vector<double> out(n);
    Eigen::Index k = 0;
    for (const auto& p : parts) {
        out.segment(k, p.size()) = p;
        k += p.size();
    }
    return out;
}

std::vector<Vector<double>> split(const Vector<double>& flat, std::size_t parts, Eigen::Index each) {
    std::vector<Vector<double>> out;
    for (std::size_t i = 0; i < parts; ++i) out.push_back(flat.segment(static_cast<Eigen::Index>(i) * each, each));
    return out;
}

} // namespace

GradCheckInstance make_gradcheck_instance(const GradCheckSetup& s, std::uint64_t seed) {
    const Aog aog = build_aog(s.grid_w, s.grid_h, s.l_min);
    GradCheckInstance inst{make_model(aog, s.channels, s.classes, seed, s.param_stddev), {}};
    std::mt19937_64 rng(seed ^ 0x5DEECE66DULL);
    std::normal_distribution<double> g;
    for (auto& b : inst.model.params.bias) {
        for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = g(rng);
    }
    inst.sample.feature = FeatureMap<double>(s.channels, s.map_h, s.map_w);
    inst.sample.feature.values = Matrix<double>::NullaryExpr(s.channels, s.map_h * s.map_w, [&] { return g(rng); });
    Roi roi{0, 0, s.map_w, s.map_h, std::uniform_int_distribution<int>(0, s.classes - 1)(rng)};
    inst.sample.rois.push_back(roi);
    inst.sample.truth.emplace_back();
    return inst;
}

GradCheckSuite run_gradcheck_suite(const GradCheckSetup& setup, Mode mode, GradientMode gradient_mode,
                                   std::uint64_t seed, int max_draws) {
    GradCheckSuite suite;
    FiniteDiffOptions opts;
    opts.step = setup.step;

    for (int attempt = 0; attempt < std::max(1, max_draws); ++attempt) {
        const std::uint64_t draw = seed + static_cast<std::uint64_t>(attempt);
        const auto inst = make_gradcheck_instance(setup, draw);
        const Aog& aog = inst.model.aog;
        const Roi& roi = inst.sample.rois.front();
        std::mt19937_64 rng(draw ^ 0xA5A5A5A5ULL);
        suite = GradCheckSuite{};
        suite.draw_seed = draw;

        // Stage 1: params -> terminal maps -> pooled scores, against a random
        // linear read-out.
        const Eigen::Index C = setup.classes;
        const auto readout = split(gaussian_vector(C * static_cast<Eigen::Index>(aog.num_terminals()), rng),
                                   aog.num_terminals(), C);
        {
            auto grad = inst.model.params.zeros_like();
            const auto maps = compute_terminal_maps(inst.sample.feature, inst.model.params);
            auto grad_maps = TerminalScoreMaps<double>::zeros(aog.num_terminals(), C, maps.height, maps.width);
            for (std::size_t k = 0; k < aog.num_terminals(); ++k) {
                pool_backward(aog, readout[k], roi, aog.terminal_ids()[k], grad_maps);
            }
            conv_backward(grad_maps, inst.sample.feature, inst.model.params, grad);
            auto probe = inst.model.params;
            auto f = [&](const Vector<double>& flat) {
                probe.assign(flat);
                const auto scores = pool_terminals(aog, compute_terminal_maps(inst.sample.feature, probe), roi);
                double v = 0.0;
                for (std::size_t k = 0; k < scores.size(); ++k) v += readout[k].dot(scores[k]);
                return v;
            };
            const auto r = finite_diff_check<double>(f, inst.model.params.flatten(), grad.flatten(), opts);
            suite.stages.push_back({"score_maps", r.max_rel_error, r.checks});
        }

        // Stage 2: terminal scores -> normalized root, against a random
        // read-out of the root.
        bool stable = true;
        {
            const auto scores =
                pool_terminals(aog, compute_terminal_maps(inst.sample.feature, inst.model.params), roi);
            const Vector<double> w = gaussian_vector(C, rng);
            const auto state = forward(aog, scores, mode);
            const auto trees = mode == Mode::Unfolding ? best_terminal_sets(aog, state) : std::vector<std::vector<NodeId>>{};
            BackwardOptions bo;
            bo.gradient_mode = gradient_mode;
            const auto tgrad = backward(aog, state, w, bo);
            auto f = [&](const Vector<double>& flat) {
                const auto st = forward(aog, split(flat, scores.size(), C), mode);
                if (mode == Mode::Unfolding && best_terminal_sets(aog, st) != trees) stable = false;
                return w.dot(st.root);
            };
            const auto r = finite_diff_check<double>(f, concat(scores), concat(tgrad), opts);
            suite.stages.push_back({"aog", r.max_rel_error, r.checks});
        }

        // Stage 3: full loss.
        const auto e2e = grad_check_end_to_end(inst.model, inst.sample, 0, mode, gradient_mode, setup.step);
        suite.stages.push_back({"end_to_end", e2e.max_rel_error, e2e.checks});
        suite.argmax_stable = stable && e2e.argmax_stable;
        if (mode == Mode::Folding || suite.argmax_stable) break;
    }
    return suite;
}

} // namespace aog
