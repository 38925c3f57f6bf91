#pragma once

#include <vector>

#include "aog/grid_grammar.hpp"
#include "aog/parsing.hpp"

namespace aog {

template <typename Scalar = double>
struct BruteForceResult {
    Vector<Scalar> root;              // pre-normalization root score
    Scalar expected_terminals = 0;    // folding: terminal count under uniform OR branching
    std::vector<ParseTree> best;      // unfolding: per-class argmax tree
    std::size_t trees = 0;
};

/// Root score computed by enumerating every parse tree instead of dynamic
/// programming. Folding: expectation of tree sums with each OR choosing a
/// child uniformly. Unfolding: per-class maximum tree sum.
template <typename Scalar>
BruteForceResult<Scalar> brute_force_root(const Aog& aog, const std::vector<Vector<Scalar>>& terminal_scores,
                                          Mode mode, std::size_t limit = 100000) {
    if (terminal_scores.size() != aog.num_terminals() || terminal_scores.empty()) {
        throw InputError("brute force needs one score vector per terminal");
    }
    const Eigen::Index C = terminal_scores.front().size();
    const auto trees = enumerate_parse_trees(aog, limit);

    BruteForceResult<Scalar> out;
    out.trees = trees.size();
    out.root = mode == Mode::Folding ? Vector<Scalar>::Zero(C)
                                     : Vector<Scalar>::Constant(C, -std::numeric_limits<Scalar>::infinity());
    if (mode == Mode::Unfolding) out.best.resize(static_cast<std::size_t>(C));

    for (const auto& t : trees) {
        Vector<Scalar> sum = Vector<Scalar>::Zero(C);
        for (NodeId id : t.terminal_ids) sum += terminal_scores[static_cast<std::size_t>(aog.terminal_index(id))];
        if (mode == Mode::Folding) {
            Scalar p = 1;
            for (const auto& [or_id, child] : t.chosen) p /= static_cast<Scalar>(aog.node(or_id).children.size());
            out.root += p * sum;
            out.expected_terminals += p * static_cast<Scalar>(t.terminal_ids.size());
        } else {
            for (Eigen::Index c = 0; c < C; ++c) {
                if (sum(c) > out.root(c)) {
                    out.root(c) = sum(c);
                    out.best[static_cast<std::size_t>(c)] = t;
                    out.best[static_cast<std::size_t>(c)].class_index = static_cast<int>(c);
                }
            }
        }
    }
    return out;
}

} // namespace aog
