#include <map>
#include <random>
#include <set>
#include <tuple>

#include "aog/errors.hpp"
#include "aog/grid_grammar.hpp"
#include "doctest.h"

using namespace aog;

namespace {

// Independent counts for l_min = 1: every sub-rect is a terminal, every
// non-unit rect is an OR, and each rect has (w-1)+(h-1) cuts.
struct Tally {
    std::size_t terminals = 0, ands = 0, ors = 0;
};

Tally closed_form(int W, int H) {
    Tally t;
    for (int w = 1; w <= W; ++w) {
        for (int h = 1; h <= H; ++h) {
            const std::size_t placements = static_cast<std::size_t>((W - w + 1) * (H - h + 1));
            t.terminals += placements;
            if (w * h > 1) t.ors += placements;
            t.ands += placements * static_cast<std::size_t>((w - 1) + (h - 1));
        }
    }
    return t;
}

// Parse-tree count by rect size: N(w,h) = 1 + sum over cuts of N(a)N(b).
BigCount count_by_dims(int w, int h, int lmin, std::map<std::pair<int, int>, BigCount>& memo) {
    if (auto it = memo.find({w, h}); it != memo.end()) return it->second;
    BigCount n = 1;
    for (int l = lmin; w - l >= lmin; ++l) n += count_by_dims(l, h, lmin, memo) * count_by_dims(w - l, h, lmin, memo);
    for (int l = lmin; h - l >= lmin; ++l) n += count_by_dims(w, l, lmin, memo) * count_by_dims(w, h - l, lmin, memo);
    memo[{w, h}] = n;
    return n;
}

BigCount count_by_dims(int w, int h, int lmin) {
    std::map<std::pair<int, int>, BigCount> memo;
    return count_by_dims(w, h, lmin, memo);
}

bool tiles(const Configuration& c, const Rect& whole) {
    std::vector<int> hits(static_cast<std::size_t>(c.grid_w * c.grid_h), 0);
    for (const auto& r : c.rects) {
        for (int y = r.y; y < r.y + r.h; ++y) {
            for (int x = r.x; x < r.x + r.w; ++x) {
                if (!whole.contains(x, y)) return false;
                ++hits[static_cast<std::size_t>(y * c.grid_w + x)];
            }
        }
    }
    for (int y = whole.y; y < whole.y + whole.h; ++y) {
        for (int x = whole.x; x < whole.x + whole.w; ++x) {
            if (hits[static_cast<std::size_t>(y * c.grid_w + x)] != 1) return false;
        }
    }
    return true;
}

} // namespace

TEST_CASE("1x1 grid is a single terminal") {
    const Aog g = build_aog(1, 1, 1);
    CHECK(g.size() == 1);
    CHECK(g.node(g.root_id()).is_terminal());
    CHECK(g.full_grid_id() == g.root_id());
    CHECK(count_parse_trees(g) == 1);
}

TEST_CASE("2x1 grid") {
    const Aog g = build_aog(2, 1, 1);
    CHECK(g.count(NodeKind::Terminal) == 3);
    CHECK(g.count(NodeKind::And) == 1);
    CHECK(g.count(NodeKind::Or) == 1);
    CHECK(g.count(NodeKind::SuperOr) == 1);
    CHECK(g.size() == 6);
    CHECK(g.num_edges() == 5);
    const auto& root = g.node(g.root_id());
    CHECK(root.kind == NodeKind::SuperOr);
    REQUIRE(root.children.size() == 1);
    CHECK(root.children[0] == g.full_grid_id());

    // Or children: terminal first, then the cut.
    const auto& full = g.node(g.full_grid_id());
    REQUIRE(full.children.size() == 2);
    CHECK(g.node(full.children[0]).is_terminal());
    CHECK(g.node(full.children[1]).is_and());
}

TEST_CASE("3x3 node counts match the combinatorial oracle") {
    const Aog g = build_aog(3, 3, 1);
    const Tally t = closed_form(3, 3);
    CHECK(t.terminals == 36);
    CHECK(t.ands == 48);
    CHECK(t.ors == 27);
    CHECK(g.count(NodeKind::Terminal) == t.terminals);
    CHECK(g.count(NodeKind::And) == t.ands);
    CHECK(g.count(NodeKind::Or) == t.ors);
    CHECK(g.count(NodeKind::SuperOr) == 1);

    std::set<std::pair<int, int>> dims;
    for (NodeId c : g.node(g.root_id()).children) dims.insert({g.node(c).rect.w, g.node(c).rect.h});
    CHECK(g.node(g.root_id()).children.size() == 5);
    CHECK(dims == std::set<std::pair<int, int>>{{3, 3}, {3, 2}, {2, 3}});
}

TEST_CASE("node counts match the oracle on all grids up to 5x5") {
    for (int w = 1; w <= 5; ++w) {
        for (int h = 1; h <= 5; ++h) {
            CAPTURE(w);
            CAPTURE(h);
            const Aog g = build_aog(w, h, 1);
            const Tally t = closed_form(w, h);
            CHECK(g.count(NodeKind::Terminal) == t.terminals);
            CHECK(g.count(NodeKind::And) == t.ands);
            CHECK(g.count(NodeKind::Or) == t.ors);
        }
    }
}

TEST_CASE("super-or threshold") {
    SUBCASE("threshold 1 keeps only the whole grid") {
        const Aog g = build_aog(3, 3, 1, 1.0);
        const auto& root = g.node(g.root_id());
        REQUIRE(root.children.size() == 1);
        CHECK(root.children[0] == g.full_grid_id());
    }
    SUBCASE("small threshold admits every OR") {
        const Aog g = build_aog(3, 3, 1, 0.01);
        CHECK(g.node(g.root_id()).children.size() == g.count(NodeKind::Or));
    }
    SUBCASE("membership is strict") {
        // 2x3 on 3x3 has fraction 6/9; at exactly that threshold it drops out.
        const Aog g = build_aog(3, 3, 1, 6.0 / 9.0);
        CHECK(g.node(g.root_id()).children.size() == 1);
    }
    SUBCASE("disabled") {
        const Aog g = build_aog(3, 3, 1, 0.5, false);
        CHECK(g.root_id() == g.full_grid_id());
        CHECK(g.count(NodeKind::SuperOr) == 0);
    }
}

TEST_CASE("invalid parameters") {
    CHECK_THROWS_AS(build_aog(0, 3, 1), ParameterError);
    CHECK_THROWS_AS(build_aog(3, 3, 0), ParameterError);
    CHECK_THROWS_AS(build_aog(3, 2, 3), ParameterError);
    CHECK_THROWS_AS(build_aog(3, 3, 1, 0.0), ParameterError);
    CHECK_THROWS_AS(build_aog(3, 3, 1, 1.5), ParameterError);
}

TEST_CASE("structural invariants on grids up to 5x5") {
    for (int lmin = 1; lmin <= 2; ++lmin) {
        for (int w = lmin; w <= 5; ++w) {
            for (int h = lmin; h <= 5; ++h) {
                CAPTURE(w);
                CAPTURE(h);
                CAPTURE(lmin);
                const Aog g = build_aog(w, h, lmin);

                std::set<std::tuple<int, int, int, int, int, int, int>> identities;
                for (const auto& n : g.nodes()) {
                    const int axis = n.is_and() ? static_cast<int>(n.axis) : -1;
                    const int offset = n.is_and() ? n.offset : -1;
                    CHECK(identities.insert({static_cast<int>(n.kind), n.rect.x, n.rect.y, n.rect.w, n.rect.h, axis,
                                             offset})
                              .second);
                    CHECK(n.rect.w >= lmin);
                    CHECK(n.rect.h >= lmin);
                    if (n.is_and()) {
                        REQUIRE(n.children.size() == 2);
                        const Rect& a = g.node(n.children[0]).rect;
                        const Rect& b = g.node(n.children[1]).rect;
                        CHECK(a.area() + b.area() == n.rect.area());
                        CHECK(overlap_cells(a, b) == 0);
                        CHECK(overlap_cells(a, n.rect) == a.area());
                        CHECK(overlap_cells(b, n.rect) == b.area());
                    }
                    if (n.kind == NodeKind::Or) {
                        CHECK(g.node(n.children.front()).is_terminal());
                        for (NodeId c : n.children) CHECK(g.node(c).rect == n.rect);
                    }
                }

                std::vector<std::size_t> dpos(g.size()), bpos(g.size());
                for (std::size_t i = 0; i < g.size(); ++i) {
                    dpos[static_cast<std::size_t>(g.dfs_order()[i])] = i;
                    bpos[static_cast<std::size_t>(g.bfs_order()[i])] = i;
                }
                CHECK(g.dfs_order().size() == g.size());
                CHECK(g.bfs_order().size() == g.size());
                CHECK(g.bfs_order().front() == g.root_id());
                CHECK(g.dfs_order().back() == g.root_id());
                for (const auto& n : g.nodes()) {
                    for (NodeId c : n.children) {
                        CHECK(dpos[static_cast<std::size_t>(c)] < dpos[static_cast<std::size_t>(n.id)]);
                        CHECK(bpos[static_cast<std::size_t>(c)] > bpos[static_cast<std::size_t>(n.id)]);
                    }
                }

                CHECK(build_aog(w, h, lmin) == g);
            }
        }
    }
}

TEST_CASE("counts at the whole-grid node") {
    const std::vector<std::tuple<int, int, int>> expected{{1, 1, 1}, {2, 1, 2}, {2, 2, 9},
                                                          {3, 1, 5}, {2, 3, 62}, {3, 3, 1241}};
    for (const auto& [w, h, n] : expected) {
        CAPTURE(w);
        CAPTURE(h);
        const Aog g = build_aog(w, h, 1);
        CHECK(count_parse_trees(g, g.full_grid_id()) == n);
        CHECK(count_by_dims(w, h, 1) == n);
    }
}

TEST_CASE("counts match the size recurrence for other l_min") {
    for (int lmin = 1; lmin <= 3; ++lmin) {
        for (int w = lmin; w <= 6; ++w) {
            for (int h = lmin; h <= 6; ++h) {
                const Aog g = build_aog(w, h, lmin, 0.5, false);
                CHECK(count_parse_trees(g) == count_by_dims(w, h, lmin));
            }
        }
    }
}

TEST_CASE("root count adds the super-or alternatives") {
    const Aog g = build_aog(3, 1, 1);
    // 3x1 (5 trees) and the two 2x1 ORs (2 trees each).
    CHECK(count_parse_trees(g) == 9);
    const Aog big = build_aog(7, 7, 1);
    CHECK(count_parse_trees(big, big.full_grid_id()) == count_by_dims(7, 7, 1));
}

TEST_CASE("enumeration length equals the count") {
    for (int w = 1; w <= 3; ++w) {
        for (int h = 1; h <= 3; ++h) {
            const Aog g = build_aog(w, h, 1);
            for (const NodeId start : {g.full_grid_id(), g.root_id()}) {
                const auto trees = enumerate_parse_trees(g, 100000, start);
                CHECK(BigCount(trees.size()) == count_parse_trees(g, start));
                std::set<std::map<NodeId, NodeId>> distinct;
                for (const auto& t : trees) distinct.insert(t.chosen);
                CHECK(distinct.size() == trees.size());
            }
        }
    }
}

TEST_CASE("2x1 trees by hand") {
    const Aog g = build_aog(2, 1, 1);
    const auto trees = enumerate_parse_trees(g, 10, g.full_grid_id());
    REQUIRE(trees.size() == 2);
    std::set<std::vector<Rect>> layouts;
    for (const auto& t : trees) layouts.insert(collapse_configuration(g, t).rects);
    CHECK(layouts == std::set<std::vector<Rect>>{{{0, 0, 2, 1}}, {{0, 0, 1, 1}, {1, 0, 1, 1}}});
}

TEST_CASE("enumeration capacity") {
    const Aog g = build_aog(3, 3, 1);
    CHECK_THROWS_AS(enumerate_parse_trees(g, 1000, g.full_grid_id()), CapacityError);
    CHECK(enumerate_parse_trees(g, 1241, g.full_grid_id()).size() == 1241);
}

TEST_CASE("configurations") {
    SUBCASE("1x1") { CHECK(enumerate_configurations(build_aog(1, 1, 1), 10).size() == 1); }
    SUBCASE("2x2 has 8 layouts from 9 trees") {
        const Aog g = build_aog(2, 2, 1);
        CHECK(enumerate_configurations(g, 100, g.full_grid_id()).size() == 8);
    }
    SUBCASE("3x1 has 4 layouts from 5 trees") {
        const Aog g = build_aog(3, 1, 1);
        const auto cs = enumerate_configurations(g, 100, g.full_grid_id());
        std::set<std::vector<Rect>> got;
        for (const auto& c : cs) got.insert(c.rects);
        CHECK(got == std::set<std::vector<Rect>>{{{0, 0, 3, 1}},
                                                 {{0, 0, 1, 1}, {1, 0, 2, 1}},
                                                 {{0, 0, 2, 1}, {2, 0, 1, 1}},
                                                 {{0, 0, 1, 1}, {1, 0, 1, 1}, {2, 0, 1, 1}}});
    }
    SUBCASE("every 3x3 tree tiles its root rect") {
        const Aog g = build_aog(3, 3, 1);
        const auto trees = enumerate_parse_trees(g, 100000);
        std::set<Configuration> collapsed;
        for (const auto& t : trees) {
            const auto c = collapse_configuration(g, t);
            int area = 0;
            for (const auto& r : c.rects) area += r.area();
            const Rect whole = g.node(t.chosen.at(g.root_id())).rect;
            CHECK(area == whole.area());
            CHECK(tiles(c, whole));
            collapsed.insert(c);
        }
        const auto cs = enumerate_configurations(g, 100000);
        CHECK(cs.size() == collapsed.size());
        for (const auto& c : cs) CHECK(collapsed.count(c) == 1);
    }
}

TEST_CASE("complete_parse_tree rejects bad choices") {
    const Aog g = build_aog(2, 1, 1);
    const NodeId full = g.full_grid_id();
    const NodeId term = g.node(full).children[0];
    const auto t = complete_parse_tree(g, g.root_id(), {{g.root_id(), full}, {full, term}});
    CHECK(t.terminal_ids == std::vector<NodeId>{term});
    CHECK(t.node_ids.size() == 3);
    CHECK_THROWS_AS(complete_parse_tree(g, g.root_id(), {{g.root_id(), full}}), MismatchError);
    CHECK_THROWS_AS(complete_parse_tree(g, g.root_id(), {{g.root_id(), term}, {full, term}}), MismatchError);
    CHECK_THROWS_AS(complete_parse_tree(g, g.root_id(), {{g.root_id(), full}, {full, term}, {term, term}}),
                    MismatchError);
}

TEST_CASE("uniform sampler") {
    const Aog g = build_aog(2, 2, 1);
    const UniformTreeSampler sample(g, g.full_grid_id());
    std::mt19937_64 rng(3);
    std::map<std::map<NodeId, NodeId>, int> hist;
    const int draws = 18000;
    for (int i = 0; i < draws; ++i) {
        const auto t = sample(rng);
        CHECK(t.root_id == g.full_grid_id());
        ++hist[t.chosen];
    }
    CHECK(hist.size() == 9);
    // Each of 9 trees expects 2000 draws; 5 sigma is about 210.
    for (const auto& [k, n] : hist) CHECK(std::abs(n - draws / 9) < 250);
}

TEST_CASE("dot output") {
    const Aog one = build_aog(1, 1, 1);
    const std::string d1 = to_dot(one);
    CHECK(d1.find("digraph") == 0);
    CHECK(d1.find("->") == std::string::npos);

    const Aog g = build_aog(2, 1, 1);
    const std::string plain = to_dot(g);
    std::size_t edges = 0;
    for (std::size_t p = plain.find("->"); p != std::string::npos; p = plain.find("->", p + 2)) ++edges;
    CHECK(edges == 5);

    const auto trees = enumerate_parse_trees(g, 10);
    const ParseTree* two = nullptr;
    for (const auto& t : trees) {
        if (t.terminal_ids.size() == 2) two = &t;
    }
    REQUIRE(two);
    const std::string hl = to_dot(g, two);
    std::size_t emphasized = 0;
    for (std::size_t p = hl.find("penwidth"); p != std::string::npos; p = hl.find("penwidth", p + 1)) ++emphasized;
    CHECK(emphasized == 4);
}
