#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "aog/errors.hpp"
#include "aog/score_maps.hpp"

namespace aog {

/// |a - b| / max(|a|, |b|, 1e-8).
inline double relative_error(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

struct FiniteDiffOptions {
    double step = 1e-5;
    // 0 checks every coordinate; otherwise vectors longer than this are
    // checked along `probes` random unit directions instead.
    Eigen::Index max_coordinates = 0;
    int probes = 16;
    std::uint64_t seed = 0;
};

struct FiniteDiffReport {
    double max_rel_error = 0.0;
    Eigen::Index checks = 0;
    Eigen::Index worst = -1; // coordinate or probe index
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

/// Compares an analytic gradient of a scalar function against central
/// differences at x.
template <typename Scalar, typename Fn>
FiniteDiffReport finite_diff_check(Fn&& f, const Vector<Scalar>& x, const Vector<Scalar>& analytic,
                                   const FiniteDiffOptions& opts = {}) {
    if (!(opts.step > 0.0)) throw ParameterError("finite difference step must be > 0");
    if (analytic.size() != x.size()) throw ShapeError("analytic gradient length differs from parameter length");

    const Scalar h = static_cast<Scalar>(opts.step);
    auto eval = [&](const Vector<Scalar>& at) {
        const Scalar v = f(at);
        if (!std::isfinite(static_cast<double>(v))) throw NumericError("non-finite loss during finite differences");
        return v;
    };

    FiniteDiffReport rep;
    auto record = [&](Eigen::Index i, double a, double n) {
        const double e = relative_error(a, n);
        ++rep.checks;
        if (e > rep.max_rel_error || rep.worst < 0) {
            rep.max_rel_error = e;
            rep.worst = i;
            rep.worst_analytic = a;
            rep.worst_numeric = n;
        }
    };

    Vector<Scalar> probe = x;
    if (opts.max_coordinates == 0 || x.size() <= opts.max_coordinates) {
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            probe(i) = x(i) + h;
            const Scalar up = eval(probe);
            probe(i) = x(i) - h;
            const Scalar down = eval(probe);
            probe(i) = x(i);
            record(i, static_cast<double>(analytic(i)), static_cast<double>((up - down) / (2 * h)));
        }
    } else {
        std::mt19937_64 rng(opts.seed);
        std::normal_distribution<double> gauss;
        for (int k = 0; k < opts.probes; ++k) {
            Vector<Scalar> d(x.size());
            for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = static_cast<Scalar>(gauss(rng));
            d.normalize();
            const Scalar up = eval(x + h * d);
            const Scalar down = eval(x - h * d);
            record(k, static_cast<double>(analytic.dot(d)), static_cast<double>((up - down) / (2 * h)));
        }
    }
    return rep;
}

} // namespace aog
