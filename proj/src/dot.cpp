#include <set>
#include <sstream>

#include "aog/errors.hpp"
#include "aog/grid_grammar.hpp"

namespace aog {

namespace {

std::string rect_label(const Rect& r) {
    std::ostringstream s;
    s << "(" << r.x << "," << r.y << "," << r.w << "," << r.h << ")";
    return s.str();
}

std::string node_label(const AogNode& n) {
    switch (n.kind) {
    case NodeKind::Terminal: return "t" + rect_label(n.rect);
    case NodeKind::Or: return "OR " + rect_label(n.rect);
    case NodeKind::SuperOr: return "SUPER-OR";
    case NodeKind::And:
        return std::string(n.axis == CutAxis::Vertical ? "AND ver " : "AND hor ") + std::to_string(n.offset) +
               " " + rect_label(n.rect);
    }
    return "?";
}

const char* node_shape(NodeKind kind) {
    switch (kind) {
    case NodeKind::Terminal: return "plaintext";
    case NodeKind::And: return "box";
    case NodeKind::Or:
    case NodeKind::SuperOr: return "ellipse";
    }
    return "ellipse";
}

} // namespace

std::string to_dot(const Aog& aog, const ParseTree* highlight) {
    std::set<std::pair<NodeId, NodeId>> tree_edges;
    std::set<NodeId> tree_nodes;
    if (highlight) {
        // Re-deriving the tree from its choices rejects trees of another AOG.
        ParseTree check;
        try {
            check = complete_parse_tree(aog, highlight->root_id, highlight->chosen);
        } catch (const LookupError& e) {
            throw MismatchError(std::string("highlighted parse tree does not belong to this AOG: ") + e.what());
        }
        if (check.terminal_ids != highlight->terminal_ids) {
            throw MismatchError("highlighted parse tree terminals disagree with its OR choices");
        }
        for (NodeId v : check.node_ids) {
            tree_nodes.insert(v);
            const auto& n = aog.node(v);
            if (n.is_or()) {
                tree_edges.emplace(v, check.chosen.at(v));
            } else if (n.is_and()) {
                for (NodeId c : n.children) tree_edges.emplace(v, c);
            }
        }
    }

    std::ostringstream out;
    out << "digraph aog {\n";
    out << "  rankdir=TB;\n";
    for (NodeId v : aog.bfs_order()) {
        const auto& n = aog.node(v);
        out << "  n" << v << " [label=\"" << node_label(n) << "\", shape=" << node_shape(n.kind);
        if (n.kind == NodeKind::SuperOr) out << ", peripheries=2";
        if (tree_nodes.count(v)) out << ", color=red, fontcolor=red";
        out << "];\n";
    }
    for (NodeId v : aog.bfs_order()) {
        for (NodeId c : aog.node(v).children) {
            out << "  n" << v << " -> n" << c;
            if (tree_edges.count({v, c})) out << " [color=red, penwidth=3]";
            out << ";\n";
        }
    }
    out << "}\n";
    return out.str();
}

} // namespace aog
