#include "aog/grid_grammar.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <set>
#include <sstream>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "aog/errors.hpp"

namespace aog {

int overlap_cells(const Rect& a, const Rect& b) {
    const int w = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    const int h = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    return (w > 0 && h > 0) ? w * h : 0;
}

const char* to_string(NodeKind kind) {
    switch (kind) {
    case NodeKind::Terminal: return "terminal";
    case NodeKind::And: return "and";
    case NodeKind::Or: return "or";
    case NodeKind::SuperOr: return "super_or";
    }
    return "?";
}

const char* to_string(CutAxis axis) {
    return axis == CutAxis::Vertical ? "vertical" : "horizontal";
}

const AogNode& Aog::node(NodeId id) const {
    if (!contains(id)) {
        throw LookupError("unknown AOG node id " + std::to_string(id));
    }
    return nodes_[static_cast<std::size_t>(id)];
}

int Aog::terminal_index(NodeId id) const {
    if (!contains(id) || terminal_index_[static_cast<std::size_t>(id)] < 0) {
        throw LookupError("node " + std::to_string(id) + " is not a terminal of this AOG");
    }
    return terminal_index_[static_cast<std::size_t>(id)];
}

std::size_t Aog::count(NodeKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [kind](const AogNode& n) { return n.kind == kind; }));
}

std::size_t Aog::num_edges() const {
    std::size_t e = 0;
    for (const auto& n : nodes_) e += n.children.size();
    return e;
}

// Derives parents, the terminal table, the whole-grid node, and the two
// traversal orders from nodes_ and root_.
void Aog::finalize() {
    for (auto& n : nodes_) n.parents.clear();
    for (const auto& n : nodes_) {
        for (NodeId c : n.children) nodes_[static_cast<std::size_t>(c)].parents.push_back(n.id);
    }

    terminals_.clear();
    terminal_index_.assign(nodes_.size(), -1);
    for (const auto& n : nodes_) {
        if (n.is_terminal()) {
            terminal_index_[static_cast<std::size_t>(n.id)] = static_cast<int>(terminals_.size());
            terminals_.push_back(n.id);
        }
    }

    const Rect whole{0, 0, params_.grid_w, params_.grid_h};
    full_grid_ = root_;
    if (nodes_[static_cast<std::size_t>(root_)].kind == NodeKind::SuperOr) {
        for (const auto& n : nodes_) {
            if (n.kind == NodeKind::Or && n.rect == whole) full_grid_ = n.id;
        }
    }

    // Post-order DFS from the root.
    dfs_order_.clear();
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<std::pair<NodeId, std::size_t>> stack{{root_, 0}};
    seen[static_cast<std::size_t>(root_)] = 1;
    while (!stack.empty()) {
        auto& [v, next] = stack.back();
        const auto& ch = nodes_[static_cast<std::size_t>(v)].children;
        if (next < ch.size()) {
            const NodeId c = ch[next++];
            if (!seen[static_cast<std::size_t>(c)]) {
                seen[static_cast<std::size_t>(c)] = 1;
                stack.emplace_back(c, 0);
            }
        } else {
            dfs_order_.push_back(v);
            stack.pop_back();
        }
    }

    // Breadth-first topological order (Kahn with a FIFO queue).
    bfs_order_.clear();
    std::vector<int> indegree(nodes_.size(), 0);
    for (const auto& n : nodes_) {
        for (NodeId c : n.children) ++indegree[static_cast<std::size_t>(c)];
    }
    std::deque<NodeId> queue{root_};
    while (!queue.empty()) {
        const NodeId v = queue.front();
        queue.pop_front();
        bfs_order_.push_back(v);
        for (NodeId c : nodes_[static_cast<std::size_t>(v)].children) {
            if (--indegree[static_cast<std::size_t>(c)] == 0) queue.push_back(c);
        }
    }
}

Aog build_aog(const AogParams& p) {
    if (p.grid_w < 1 || p.grid_h < 1) {
        throw ParameterError("grid dimensions must be >= 1, got " + std::to_string(p.grid_w) + "x" +
                             std::to_string(p.grid_h));
    }
    if (p.l_min < 1 || p.l_min > std::min(p.grid_w, p.grid_h)) {
        throw ParameterError("l_min must lie in [1, min(grid_w, grid_h)], got " + std::to_string(p.l_min));
    }
    if (!(p.super_or_threshold > 0.0 && p.super_or_threshold <= 1.0)) {
        throw ParameterError("super_or_threshold must lie in (0, 1]");
    }

    Aog g;
    g.params_ = p;
    std::map<Rect, NodeId> memo;

    auto add_node = [&g](NodeKind kind, const Rect& r) {
        AogNode n;
        n.id = static_cast<NodeId>(g.nodes_.size());
        n.kind = kind;
        n.rect = r;
        g.nodes_.push_back(n);
        return n.id;
    };

    std::function<NodeId(const Rect&)> expand = [&](const Rect& r) -> NodeId {
        if (auto it = memo.find(r); it != memo.end()) return it->second;

        const NodeId term = add_node(NodeKind::Terminal, r);
        const bool can_cut = r.w >= 2 * p.l_min || r.h >= 2 * p.l_min;
        if (!can_cut) {
            memo.emplace(r, term);
            return term;
        }

        const NodeId or_id = add_node(NodeKind::Or, r);
        memo.emplace(r, or_id);
        std::vector<NodeId> children{term};

        auto add_cut = [&](CutAxis axis, int l, const Rect& a, const Rect& b) {
            const NodeId first = expand(a);
            const NodeId second = expand(b);
            const NodeId and_id = add_node(NodeKind::And, r);
            auto& n = g.nodes_[static_cast<std::size_t>(and_id)];
            n.axis = axis;
            n.offset = l;
            n.children = {first, second};
            children.push_back(and_id);
        };
        for (int l = p.l_min; l <= r.w - p.l_min; ++l) {
            add_cut(CutAxis::Vertical, l, Rect{r.x, r.y, l, r.h}, Rect{r.x + l, r.y, r.w - l, r.h});
        }
        for (int l = p.l_min; l <= r.h - p.l_min; ++l) {
            add_cut(CutAxis::Horizontal, l, Rect{r.x, r.y, r.w, l}, Rect{r.x, r.y + l, r.w, r.h - l});
        }
        g.nodes_[static_cast<std::size_t>(or_id)].children = std::move(children);
        return or_id;
    };

    const Rect whole{0, 0, p.grid_w, p.grid_h};
    const NodeId top = expand(whole);
    g.root_ = top;

    if (p.super_or && g.nodes_[static_cast<std::size_t>(top)].kind == NodeKind::Or) {
        const double grid_area = static_cast<double>(whole.area());
        std::vector<NodeId> members;
        for (const auto& n : g.nodes_) {
            if (n.kind != NodeKind::Or) continue;
            if (n.id == top || static_cast<double>(n.rect.area()) / grid_area > p.super_or_threshold) {
                members.push_back(n.id);
            }
        }
        const NodeId super = add_node(NodeKind::SuperOr, whole);
        g.nodes_[static_cast<std::size_t>(super)].children = std::move(members);
        g.root_ = super;
    }

    g.finalize();
    return g;
}

int Configuration::covered_cells() const {
    int cells = 0;
    for (const auto& r : rects) cells += r.area();
    return cells;
}

Configuration make_configuration(int grid_w, int grid_h, std::vector<Rect> rects) {
    std::sort(rects.begin(), rects.end());
    return Configuration{grid_w, grid_h, std::move(rects)};
}

namespace {

std::vector<BigCount> subtree_counts(const Aog& aog) {
    std::vector<BigCount> counts(aog.size());
    for (NodeId v : aog.dfs_order()) {
        const auto& n = aog.node(v);
        BigCount c;
        switch (n.kind) {
        case NodeKind::Terminal:
            c = 1;
            break;
        case NodeKind::And:
            c = 1;
            for (NodeId u : n.children) c *= counts[static_cast<std::size_t>(u)];
            break;
        case NodeKind::Or:
        case NodeKind::SuperOr:
            c = 0;
            for (NodeId u : n.children) c += counts[static_cast<std::size_t>(u)];
            break;
        }
        counts[static_cast<std::size_t>(v)] = std::move(c);
    }
    return counts;
}

} // namespace

BigCount count_parse_trees(const Aog& aog, std::optional<NodeId> node) {
    const NodeId start = node.value_or(aog.root_id());
    aog.node(start);
    return subtree_counts(aog)[static_cast<std::size_t>(start)];
}

namespace {

struct Fragment {
    std::vector<std::pair<NodeId, NodeId>> chosen;
};

const std::vector<Fragment>& fragments_of(const Aog& aog, NodeId v,
                                          std::vector<std::optional<std::vector<Fragment>>>& memo) {
    auto& slot = memo[static_cast<std::size_t>(v)];
    if (slot) return *slot;

    const auto& n = aog.node(v);
    std::vector<Fragment> out;
    switch (n.kind) {
    case NodeKind::Terminal:
        out.emplace_back();
        break;
    case NodeKind::And: {
        const auto& left = fragments_of(aog, n.children[0], memo);
        const auto& right = fragments_of(aog, n.children[1], memo);
        out.reserve(left.size() * right.size());
        for (const auto& a : left) {
            for (const auto& b : right) {
                Fragment f = a;
                f.chosen.insert(f.chosen.end(), b.chosen.begin(), b.chosen.end());
                out.push_back(std::move(f));
            }
        }
        break;
    }
    case NodeKind::Or:
    case NodeKind::SuperOr:
        for (NodeId u : n.children) {
            for (const auto& sub : fragments_of(aog, u, memo)) {
                Fragment f;
                f.chosen.reserve(sub.chosen.size() + 1);
                f.chosen.emplace_back(v, u);
                f.chosen.insert(f.chosen.end(), sub.chosen.begin(), sub.chosen.end());
                out.push_back(std::move(f));
            }
        }
        break;
    }
    slot = std::move(out);
    return *slot;
}

} // namespace

std::vector<ParseTree> enumerate_parse_trees(const Aog& aog, std::size_t limit, std::optional<NodeId> node) {
    const NodeId start = node.value_or(aog.root_id());
    const BigCount total = count_parse_trees(aog, start);
    if (total > limit) {
        std::ostringstream msg;
        msg << "parse tree count " << total << " exceeds enumeration limit " << limit;
        throw CapacityError(msg.str());
    }

    std::vector<std::optional<std::vector<Fragment>>> memo(aog.size());
    const auto& frags = fragments_of(aog, start, memo);
    std::vector<ParseTree> trees;
    trees.reserve(frags.size());
    for (const auto& f : frags) {
        std::map<NodeId, NodeId> chosen(f.chosen.begin(), f.chosen.end());
        trees.push_back(complete_parse_tree(aog, start, chosen));
    }
    return trees;
}

ParseTree complete_parse_tree(const Aog& aog, NodeId root, const std::map<NodeId, NodeId>& chosen,
                              int class_index) {
    if (!aog.contains(root)) {
        throw MismatchError("parse tree root " + std::to_string(root) + " is not a node of this AOG");
    }
    ParseTree t;
    t.class_index = class_index;
    t.root_id = root;

    std::size_t used_choices = 0;
    std::deque<NodeId> queue{root};
    while (!queue.empty()) {
        const NodeId v = queue.front();
        queue.pop_front();
        t.node_ids.push_back(v);
        const auto& n = aog.node(v);
        if (n.is_or()) {
            auto it = chosen.find(v);
            if (it == chosen.end() ||
                std::find(n.children.begin(), n.children.end(), it->second) == n.children.end()) {
                throw MismatchError("parse tree has no valid choice at OR node " + std::to_string(v));
            }
            t.chosen.emplace(v, it->second);
            ++used_choices;
            queue.push_back(it->second);
        } else if (n.is_and()) {
            queue.insert(queue.end(), n.children.begin(), n.children.end());
        } else {
            t.terminal_ids.push_back(v);
        }
    }
    if (used_choices != chosen.size()) {
        throw MismatchError("parse tree carries choices for OR nodes it does not reach");
    }
    return t;
}

Configuration collapse_configuration(const Aog& aog, const ParseTree& tree) {
    std::vector<Rect> rects;
    rects.reserve(tree.terminal_ids.size());
    for (NodeId t : tree.terminal_ids) rects.push_back(aog.node(t).rect);
    return make_configuration(aog.grid_w(), aog.grid_h(), std::move(rects));
}

std::vector<Configuration> enumerate_configurations(const Aog& aog, std::size_t limit,
                                                    std::optional<NodeId> node) {
    std::vector<Configuration> out;
    std::set<Configuration> seen;
    for (const auto& t : enumerate_parse_trees(aog, limit, node)) {
        auto c = collapse_configuration(aog, t);
        if (seen.insert(c).second) out.push_back(std::move(c));
    }
    return out;
}

UniformTreeSampler::UniformTreeSampler(const Aog& aog, std::optional<NodeId> node)
    : aog_(&aog), start_(node.value_or(aog.root_id())), cumulative_(aog.size()) {
    using Wide = boost::multiprecision::cpp_bin_float_50;
    aog.node(start_);
    const auto counts = subtree_counts(aog);
    for (const auto& n : aog.nodes()) {
        if (!n.is_or()) continue;
        const Wide total(counts[static_cast<std::size_t>(n.id)]);
        Wide running = 0;
        auto& cum = cumulative_[static_cast<std::size_t>(n.id)];
        for (NodeId c : n.children) {
            running += Wide(counts[static_cast<std::size_t>(c)]);
            cum.push_back(static_cast<double>(running / total));
        }
        cum.back() = 1.0;
    }
}

ParseTree UniformTreeSampler::operator()(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::map<NodeId, NodeId> chosen;
    std::vector<NodeId> stack{start_};
    while (!stack.empty()) {
        const NodeId v = stack.back();
        stack.pop_back();
        const auto& n = aog_->node(v);
        if (n.is_or()) {
            const auto& cum = cumulative_[static_cast<std::size_t>(v)];
            const double u = unit(rng);
            const auto k = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
            const NodeId c = n.children[std::min(k, n.children.size() - 1)];
            chosen.emplace(v, c);
            stack.push_back(c);
        } else if (n.is_and()) {
            stack.insert(stack.end(), n.children.begin(), n.children.end());
        }
    }
    return complete_parse_tree(*aog_, start_, chosen);
}

} // namespace aog
