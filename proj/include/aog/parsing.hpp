#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "aog/errors.hpp"
#include "aog/grid_grammar.hpp"
#include "aog/score_maps.hpp"

namespace aog {

/// Folding: OR = MEAN. Unfolding: OR = element-wise MAX (the parsing operator).
/// AND = SUM in both.
enum class Mode { Folding, Unfolding };

/// Exact uses the true adjoint of MEAN at folding OR nodes; PaperLiteral
/// copies the OR gradient to every child unscaled.
enum class GradientMode { Exact, PaperLiteral };

const char* to_string(Mode mode);
const char* to_string(GradientMode mode);
Mode mode_from_string(const std::string& s);
GradientMode gradient_mode_from_string(const std::string& s);

template <typename Scalar = double>
struct ForwardState {
    Mode mode = Mode::Folding;
    std::vector<Vector<Scalar>> f;               // per node score vector
    std::vector<Scalar> omega0;                  // per node
    std::vector<std::vector<NodeId>> best_child; // per node, per class; OR nodes in unfolding only
    Vector<Scalar> omega1;                       // unfolding only
    Vector<Scalar> root_raw;                     // root score before normalization
    Vector<Scalar> root;                         // normalized root score
    std::size_t node_evaluations = 0;

    Eigen::Index classes() const { return root_raw.size(); }
};

struct BackwardOptions {
    GradientMode gradient_mode = GradientMode::Exact;
    std::optional<Mode> expect_mode;
};

/// Terminal count of the per-class best tree, following best_child at OR
/// nodes and both children at AND nodes from the root.
template <typename Scalar>
Vector<Scalar> compute_omega1(const Aog& aog, const ForwardState<Scalar>& state) {
    if (state.best_child.size() != aog.size()) throw StateError("forward state has no argmax table");
    const Eigen::Index C = state.classes();
    Vector<Scalar> omega1 = Vector<Scalar>::Zero(C);
    std::vector<NodeId> stack;
    for (Eigen::Index c = 0; c < C; ++c) {
        stack.assign(1, aog.root_id());
        while (!stack.empty()) {
            const NodeId v = stack.back();
            stack.pop_back();
            const auto& n = aog.node(v);
            if (n.is_or()) {
                const auto& best = state.best_child[static_cast<std::size_t>(v)];
                if (best.size() != static_cast<std::size_t>(C)) {
                    throw StateError("missing argmax entry at OR node " + std::to_string(v));
                }
                stack.push_back(best[static_cast<std::size_t>(c)]);
            } else if (n.is_and()) {
                stack.insert(stack.end(), n.children.begin(), n.children.end());
            } else {
                omega1(c) += Scalar(1);
            }
        }
    }
    return omega1;
}

/// Scores every node in children-first order from per-terminal score
/// vectors (indexed by dense terminal index) and normalizes the root.
template <typename Scalar>
ForwardState<Scalar> forward(const Aog& aog, const std::vector<Vector<Scalar>>& terminal_scores, Mode mode) {
    if (terminal_scores.size() != aog.num_terminals()) {
        throw InputError("expected " + std::to_string(aog.num_terminals()) + " terminal score vectors, got " +
                         std::to_string(terminal_scores.size()));
    }
    const Eigen::Index C = terminal_scores.empty() ? 0 : terminal_scores.front().size();
    if (C < 1) throw InputError("terminal score vectors must be non-empty");
    for (const auto& s : terminal_scores) {
        if (s.size() != C) throw InputError("terminal score vectors differ in length");
    }

    ForwardState<Scalar> st;
    st.mode = mode;
    st.f.assign(aog.size(), Vector<Scalar>());
    st.omega0.assign(aog.size(), Scalar(0));
    if (mode == Mode::Unfolding) st.best_child.assign(aog.size(), {});

    for (NodeId v : aog.dfs_order()) {
        const auto& n = aog.node(v);
        const auto vi = static_cast<std::size_t>(v);
        auto& fv = st.f[vi];
        switch (n.kind) {
        case NodeKind::Terminal:
            fv = terminal_scores[static_cast<std::size_t>(aog.terminal_index(v))];
            st.omega0[vi] = Scalar(1);
            break;
        case NodeKind::And:
            fv = Vector<Scalar>::Zero(C);
            for (NodeId u : n.children) {
                fv += st.f[static_cast<std::size_t>(u)];
                st.omega0[vi] += st.omega0[static_cast<std::size_t>(u)];
            }
            break;
        case NodeKind::Or:
        case NodeKind::SuperOr: {
            const auto k = static_cast<Scalar>(n.children.size());
            for (NodeId u : n.children) st.omega0[vi] += st.omega0[static_cast<std::size_t>(u)];
            st.omega0[vi] /= k;
            if (mode == Mode::Folding) {
                fv = Vector<Scalar>::Zero(C);
                for (NodeId u : n.children) fv += st.f[static_cast<std::size_t>(u)];
                fv /= k;
            } else {
                // Strict comparison keeps the lowest-order child on ties.
                fv = st.f[static_cast<std::size_t>(n.children.front())];
                auto& best = st.best_child[vi];
                best.assign(static_cast<std::size_t>(C), n.children.front());
                for (std::size_t j = 1; j < n.children.size(); ++j) {
                    const auto& fu = st.f[static_cast<std::size_t>(n.children[j])];
                    for (Eigen::Index c = 0; c < C; ++c) {
                        if (fu(c) > fv(c)) {
                            fv(c) = fu(c);
                            best[static_cast<std::size_t>(c)] = n.children[j];
                        }
                    }
                }
            }
            break;
        }
        }
        ++st.node_evaluations;
    }

    const auto root = static_cast<std::size_t>(aog.root_id());
    st.root_raw = st.f[root];
    if (mode == Mode::Folding) {
        st.root = st.root_raw / st.omega0[root];
    } else {
        st.omega1 = compute_omega1(aog, st);
        st.root = st.root_raw.cwiseQuotient(st.omega1);
    }
    return st;
}

/// Propagates the gradient of the normalized root score down to terminals in
/// parents-first order. Returns one gradient per dense terminal index.
template <typename Scalar>
std::vector<Vector<Scalar>> backward(const Aog& aog, const ForwardState<Scalar>& state,
                                     const Vector<Scalar>& g_root, const BackwardOptions& opts = {}) {
    if (opts.expect_mode && *opts.expect_mode != state.mode) {
        throw StateError(std::string("backward expected a ") + to_string(*opts.expect_mode) +
                         " state, got a " + to_string(state.mode) + " state");
    }
    if (state.f.size() != aog.size()) throw StateError("forward state was produced for a different AOG");
    const Eigen::Index C = state.classes();
    if (g_root.size() != C) throw ShapeError("root gradient length does not match class count");
    if (state.mode == Mode::Unfolding && (state.best_child.size() != aog.size() || state.omega1.size() != C)) {
        throw StateError("unfolding state lacks its argmax table");
    }

    std::vector<Vector<Scalar>> g(aog.size(), Vector<Scalar>::Zero(C));
    const auto root = static_cast<std::size_t>(aog.root_id());
    g[root] = state.mode == Mode::Folding ? Vector<Scalar>(g_root / state.omega0[root])
                                          : Vector<Scalar>(g_root.cwiseQuotient(state.omega1));

    std::vector<Vector<Scalar>> terminal_grads(aog.num_terminals());
    for (NodeId v : aog.bfs_order()) {
        const auto& n = aog.node(v);
        const auto& gv = g[static_cast<std::size_t>(v)];
        switch (n.kind) {
        case NodeKind::Terminal:
            terminal_grads[static_cast<std::size_t>(aog.terminal_index(v))] = gv;
            break;
        case NodeKind::And:
            for (NodeId u : n.children) g[static_cast<std::size_t>(u)] += gv;
            break;
        case NodeKind::Or:
        case NodeKind::SuperOr:
            if (state.mode == Mode::Unfolding) {
                const auto& best = state.best_child[static_cast<std::size_t>(v)];
                for (Eigen::Index c = 0; c < C; ++c) {
                    g[static_cast<std::size_t>(best[static_cast<std::size_t>(c)])](c) += gv(c);
                }
            } else {
                const Scalar scale = opts.gradient_mode == GradientMode::Exact
                                         ? Scalar(1) / static_cast<Scalar>(n.children.size())
                                         : Scalar(1);
                for (NodeId u : n.children) g[static_cast<std::size_t>(u)] += scale * gv;
            }
            break;
        }
    }
    return terminal_grads;
}

/// Best parse tree for class c of an unfolding state.
template <typename Scalar>
ParseTree extract_parse_tree(const Aog& aog, const ForwardState<Scalar>& state, int c) {
    if (state.mode != Mode::Unfolding || state.best_child.size() != aog.size()) {
        throw StateError("parse trees can only be extracted from an unfolding forward state");
    }
    if (c < 0 || c >= state.classes()) throw LookupError("class index " + std::to_string(c) + " out of range");
    std::map<NodeId, NodeId> chosen;
    std::vector<NodeId> stack{aog.root_id()};
    while (!stack.empty()) {
        const NodeId v = stack.back();
        stack.pop_back();
        const auto& n = aog.node(v);
        if (n.is_or()) {
            const NodeId u = state.best_child[static_cast<std::size_t>(v)].at(static_cast<std::size_t>(c));
            chosen.emplace(v, u);
            stack.push_back(u);
        } else if (n.is_and()) {
            stack.insert(stack.end(), n.children.begin(), n.children.end());
        }
    }
    return complete_parse_tree(aog, aog.root_id(), chosen, c);
}

/// Sorted terminal ids of every class's best tree. Distinct trees can share
/// a terminal set (e.g. two cut orders reaching the same tiling); those are
/// equivalent for scores and gradients.
template <typename Scalar>
std::vector<std::vector<NodeId>> best_terminal_sets(const Aog& aog, const ForwardState<Scalar>& state) {
    std::vector<std::vector<NodeId>> out;
    for (Eigen::Index c = 0; c < state.classes(); ++c) {
        auto ids = extract_parse_tree(aog, state, static_cast<int>(c)).terminal_ids;
        std::sort(ids.begin(), ids.end());
        out.push_back(std::move(ids));
    }
    return out;
}

} // namespace aog
