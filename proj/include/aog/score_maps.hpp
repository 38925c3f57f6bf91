#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aog/errors.hpp"
#include "aog/grid_grammar.hpp"

namespace aog {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// D x H x W tensor stored as a D x (H*W) matrix; pixel (y, x) is column
/// y * width + x.
template <typename Scalar = double>
struct FeatureMap {
    int height = 0;
    int width = 0;
    Matrix<Scalar> values;

    FeatureMap() = default;
    FeatureMap(int channels, int h, int w) : height(h), width(w), values(Matrix<Scalar>::Zero(channels, h * w)) {}

    Eigen::Index channels() const { return values.rows(); }
    Scalar& at(int d, int y, int x) { return values(d, y * width + x); }
    Scalar at(int d, int y, int x) const { return values(d, y * width + x); }

    friend bool operator==(const FeatureMap& a, const FeatureMap& b) {
        return a.height == b.height && a.width == b.width && a.values.rows() == b.values.rows() &&
               a.values.cols() == b.values.cols() && a.values == b.values;
    }
};

/// Region of interest in feature-map pixels, [x0, x1) x [y0, y1).
struct Roi {
    int x0 = 0;
    int y0 = 0;
    int x1 = 1;
    int y1 = 1;
    std::optional<int> label;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    friend bool operator==(const Roi&, const Roi&) = default;
};

/// Pixel rectangle [col0, col1) x [row0, row1).
struct PixelSpan {
    int col0 = 0;
    int col1 = 0;
    int row0 = 0;
    int row1 = 0;

    int pixels() const { return (col1 - col0) * (row1 - row0); }
    friend bool operator==(const PixelSpan&, const PixelSpan&) = default;
};

/// Pixel footprint of a grid rect inside a RoI. Cell i of n along an axis of
/// extent E starts at floor(i*E/n) and ends at ceil((i+1)*E/n), both offset
/// by the RoI origin; a rect spans from its first cell's start to its last
/// cell's end.
inline PixelSpan cell_pixel_span(const Roi& roi, int grid_w, int grid_h, const Rect& rect) {
    if (roi.x0 < 0 || roi.y0 < 0 || roi.x1 <= roi.x0 || roi.y1 <= roi.y0) {
        throw BoundsError("RoI must satisfy 0 <= x0 < x1 and 0 <= y0 < y1");
    }
    if (rect.x < 0 || rect.y < 0 || rect.w < 1 || rect.h < 1 || rect.x + rect.w > grid_w ||
        rect.y + rect.h > grid_h) {
        throw BoundsError("rect lies outside the " + std::to_string(grid_w) + "x" + std::to_string(grid_h) + " grid");
    }
    auto axis = [](int origin, int extent, int cells, int first, int count, int& lo, int& hi) {
        lo = origin + (first * extent) / cells;
        hi = origin + ((first + count) * extent + cells - 1) / cells;
        if (hi <= lo) hi = lo + 1;
    };
    PixelSpan s;
    axis(roi.x0, roi.width(), grid_w, rect.x, rect.w, s.col0, s.col1);
    axis(roi.y0, roi.height(), grid_h, rect.y, rect.h, s.row0, s.row1);
    return s;
}

/// Per-terminal 1x1 convolution: weight[t] is C x D, bias[t] has length C.
/// Indexed by the AOG's dense terminal index.
template <typename Scalar = double>
struct TerminalConvParams {
    std::vector<Matrix<Scalar>> weight;
    std::vector<Vector<Scalar>> bias;

    std::size_t num_terminals() const { return weight.size(); }
    Eigen::Index classes() const { return weight.empty() ? 0 : weight.front().rows(); }
    Eigen::Index channels() const { return weight.empty() ? 0 : weight.front().cols(); }
    Eigen::Index size() const {
        return static_cast<Eigen::Index>(num_terminals()) * classes() * (channels() + 1);
    }

    static TerminalConvParams zeros(std::size_t terminals, Eigen::Index C, Eigen::Index D) {
        TerminalConvParams p;
        p.weight.assign(terminals, Matrix<Scalar>::Zero(C, D));
        p.bias.assign(terminals, Vector<Scalar>::Zero(C));
        return p;
    }
    TerminalConvParams zeros_like() const { return zeros(num_terminals(), classes(), channels()); }

    /// Weights (column-major) then bias, terminal by terminal.
    Vector<Scalar> flatten() const {
        Vector<Scalar> out(size());
        Eigen::Index k = 0;
        for (std::size_t t = 0; t < num_terminals(); ++t) {
            out.segment(k, weight[t].size()) = weight[t].reshaped();
            k += weight[t].size();
            out.segment(k, bias[t].size()) = bias[t];
            k += bias[t].size();
        }
        return out;
    }

    void assign(const Vector<Scalar>& flat) {
        if (flat.size() != size()) throw ShapeError("flat parameter vector has the wrong length");
        Eigen::Index k = 0;
        for (std::size_t t = 0; t < num_terminals(); ++t) {
            weight[t].reshaped() = flat.segment(k, weight[t].size());
            k += weight[t].size();
            bias[t] = flat.segment(k, bias[t].size());
            k += bias[t].size();
        }
    }

    TerminalConvParams& operator+=(const TerminalConvParams& o) {
        for (std::size_t t = 0; t < num_terminals(); ++t) {
            weight[t] += o.weight[t];
            bias[t] += o.bias[t];
        }
        return *this;
    }

    friend bool operator==(const TerminalConvParams& a, const TerminalConvParams& b) {
        if (a.num_terminals() != b.num_terminals()) return false;
        for (std::size_t t = 0; t < a.num_terminals(); ++t) {
            if (a.weight[t].rows() != b.weight[t].rows() || a.weight[t].cols() != b.weight[t].cols() ||
                a.weight[t] != b.weight[t] || a.bias[t].size() != b.bias[t].size() || a.bias[t] != b.bias[t]) {
                return false;
            }
        }
        return true;
    }
};

/// Gaussian(0, stddev^2) weights, zero biases, one block per terminal.
template <typename Scalar = double>
TerminalConvParams<Scalar> init_params(const Aog& aog, int D, int C, std::uint64_t seed, double stddev = 0.01) {
    if (D < 1 || C < 1) throw ParameterError("feature channels and classes must be >= 1");
    auto p = TerminalConvParams<Scalar>::zeros(aog.num_terminals(), C, D);
    if (stddev == 0.0) return p;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, stddev);
    for (auto& w : p.weight) {
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<Scalar>(gauss(rng));
    }
    return p;
}

template <typename Scalar = double>
struct TerminalScoreMaps {
    int height = 0;
    int width = 0;
    std::vector<Matrix<Scalar>> maps; // per terminal: C x (H*W)

    static TerminalScoreMaps zeros(std::size_t terminals, Eigen::Index C, int h, int w) {
        TerminalScoreMaps m;
        m.height = h;
        m.width = w;
        m.maps.assign(terminals, Matrix<Scalar>::Zero(C, static_cast<Eigen::Index>(h) * w));
        return m;
    }
};

template <typename Scalar>
TerminalScoreMaps<Scalar> compute_terminal_maps(const FeatureMap<Scalar>& feature,
                                                const TerminalConvParams<Scalar>& params) {
    if (params.num_terminals() > 0 && params.channels() != feature.channels()) {
        throw ShapeError("terminal weights expect " + std::to_string(params.channels()) +
                         " feature channels, feature map has " + std::to_string(feature.channels()));
    }
    TerminalScoreMaps<Scalar> out;
    out.height = feature.height;
    out.width = feature.width;
    out.maps.reserve(params.num_terminals());
    for (std::size_t t = 0; t < params.num_terminals(); ++t) {
        Matrix<Scalar> m = params.weight[t] * feature.values;
        m.colwise() += params.bias[t];
        out.maps.push_back(std::move(m));
    }
    return out;
}

namespace detail {

inline PixelSpan checked_span(const Aog& aog, int map_h, int map_w, const Roi& roi, NodeId terminal) {
    const auto& n = aog.node(terminal);
    if (!n.is_terminal()) throw LookupError("node " + std::to_string(terminal) + " is not a terminal");
    if (roi.x1 > map_w || roi.y1 > map_h) {
        throw BoundsError("RoI extends past the " + std::to_string(map_h) + "x" + std::to_string(map_w) + " map");
    }
    const PixelSpan s = cell_pixel_span(roi, aog.grid_w(), aog.grid_h(), n.rect);
    if (s.col1 > map_w || s.row1 > map_h) throw BoundsError("pooling span extends past the map");
    return s;
}

} // namespace detail

/// Mean of the terminal's score map over its pixel span in the RoI.
template <typename Scalar>
Vector<Scalar> pool_terminal(const Aog& aog, const TerminalScoreMaps<Scalar>& maps, const Roi& roi, NodeId terminal) {
    const PixelSpan s = detail::checked_span(aog, maps.height, maps.width, roi, terminal);
    const auto& m = maps.maps.at(static_cast<std::size_t>(aog.terminal_index(terminal)));
    Vector<Scalar> acc = Vector<Scalar>::Zero(m.rows());
    for (int y = s.row0; y < s.row1; ++y) {
        acc += m.middleCols(static_cast<Eigen::Index>(y) * maps.width + s.col0, s.col1 - s.col0).rowwise().sum();
    }
    return acc / static_cast<Scalar>(s.pixels());
}

/// Score vectors for every terminal of the AOG, by dense terminal index.
template <typename Scalar>
std::vector<Vector<Scalar>> pool_terminals(const Aog& aog, const TerminalScoreMaps<Scalar>& maps, const Roi& roi) {
    std::vector<Vector<Scalar>> out;
    out.reserve(aog.num_terminals());
    for (NodeId t : aog.terminal_ids()) out.push_back(pool_terminal(aog, maps, roi, t));
    return out;
}

/// Adjoint of pool_terminal: adds grad[c] / |span| to every span pixel of
/// grad_maps for that terminal.
template <typename Scalar>
void pool_backward(const Aog& aog, const Vector<Scalar>& grad, const Roi& roi, NodeId terminal,
                   TerminalScoreMaps<Scalar>& grad_maps) {
    const PixelSpan s = detail::checked_span(aog, grad_maps.height, grad_maps.width, roi, terminal);
    auto& m = grad_maps.maps.at(static_cast<std::size_t>(aog.terminal_index(terminal)));
    if (grad.size() != m.rows()) throw ShapeError("pooling gradient length does not match map classes");
    const Vector<Scalar> share = grad / static_cast<Scalar>(s.pixels());
    for (int y = s.row0; y < s.row1; ++y) {
        m.middleCols(static_cast<Eigen::Index>(y) * grad_maps.width + s.col0, s.col1 - s.col0).colwise() += share;
    }
}

/// Adjoint of compute_terminal_maps. Accumulates into grad_params and, when
/// given, grad_feature (D x H*W).
template <typename Scalar>
void conv_backward(const TerminalScoreMaps<Scalar>& grad_maps, const FeatureMap<Scalar>& feature,
                   const TerminalConvParams<Scalar>& params, TerminalConvParams<Scalar>& grad_params,
                   Matrix<Scalar>* grad_feature = nullptr) {
    if (grad_maps.maps.size() != params.num_terminals() || grad_params.num_terminals() != params.num_terminals()) {
        throw ShapeError("gradient maps and parameters disagree on terminal count");
    }
    if (grad_feature && (grad_feature->rows() != feature.values.rows() || grad_feature->cols() != feature.values.cols())) {
        throw ShapeError("feature gradient has the wrong shape");
    }
    for (std::size_t t = 0; t < params.num_terminals(); ++t) {
        const auto& g = grad_maps.maps[t];
        if (g.cols() != feature.values.cols() || g.rows() != params.classes()) {
            throw ShapeError("gradient map shape does not match the feature map");
        }
        grad_params.weight[t].noalias() += g * feature.values.transpose();
        grad_params.bias[t] += g.rowwise().sum();
        if (grad_feature) grad_feature->noalias() += params.weight[t].transpose() * g;
    }
}

} // namespace aog
