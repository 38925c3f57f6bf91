#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace aog {

using NodeId = int;
using BigCount = boost::multiprecision::cpp_int;

/// A sub-grid with left-top corner (x, y) and size (w, h), in grid cells.
struct Rect {
    int x = 0;
    int y = 0;
    int w = 1;
    int h = 1;

    int area() const { return w * h; }
    bool contains(int cx, int cy) const { return cx >= x && cx < x + w && cy >= y && cy < y + h; }

    friend auto operator<=>(const Rect&, const Rect&) = default;
};

/// Number of grid cells shared by two rects.
int overlap_cells(const Rect& a, const Rect& b);

enum class NodeKind { Terminal, And, Or, SuperOr };

/// Direction of an AND-node cut. A vertical cut splits the width at
/// column offset l; a horizontal cut splits the height at row offset l.
enum class CutAxis { Vertical, Horizontal };

const char* to_string(NodeKind kind);
const char* to_string(CutAxis axis);

struct AogNode {
    NodeId id = -1;
    NodeKind kind = NodeKind::Terminal;
    Rect rect;
    CutAxis axis = CutAxis::Vertical; // And only
    int offset = 0;                   // And only
    std::vector<NodeId> children;
    std::vector<NodeId> parents;

    bool is_or() const { return kind == NodeKind::Or || kind == NodeKind::SuperOr; }
    bool is_and() const { return kind == NodeKind::And; }
    bool is_terminal() const { return kind == NodeKind::Terminal; }

    friend bool operator==(const AogNode&, const AogNode&) = default;
};

struct AogParams {
    int grid_w = 3;
    int grid_h = 3;
    int l_min = 1;
    double super_or_threshold = 0.5;
    bool super_or = true;

    friend bool operator==(const AogParams&, const AogParams&) = default;
};

/// The AND-OR graph over a grid. Immutable once built; safe to share between
/// concurrent readers.
class Aog {
public:
    const AogParams& params() const { return params_; }
    int grid_w() const { return params_.grid_w; }
    int grid_h() const { return params_.grid_h; }
    int l_min() const { return params_.l_min; }

    std::size_t size() const { return nodes_.size(); }
    const std::vector<AogNode>& nodes() const { return nodes_; }
    const AogNode& node(NodeId id) const;
    bool contains(NodeId id) const { return id >= 0 && static_cast<std::size_t>(id) < nodes_.size(); }

    NodeId root_id() const { return root_; }
    /// Node standing for the whole-grid symbol: its Or node, or its Terminal
    /// when the grid admits no cut.
    NodeId full_grid_id() const { return full_grid_; }

    /// Children before parents.
    const std::vector<NodeId>& dfs_order() const { return dfs_order_; }
    /// Parents before children.
    const std::vector<NodeId>& bfs_order() const { return bfs_order_; }

    /// Terminal node ids in ascending id order; position in this list is the
    /// terminal's dense index used by parameter and score tables.
    const std::vector<NodeId>& terminal_ids() const { return terminals_; }
    std::size_t num_terminals() const { return terminals_.size(); }
    int terminal_index(NodeId id) const;

    std::size_t count(NodeKind kind) const;
    std::size_t num_edges() const;

    friend bool operator==(const Aog&, const Aog&) = default;

private:
    friend Aog build_aog(const AogParams&);
    friend Aog aog_from_json_text(const std::string&);

    void finalize();

    AogParams params_;
    std::vector<AogNode> nodes_;
    NodeId root_ = -1;
    NodeId full_grid_ = -1;
    std::vector<NodeId> dfs_order_;
    std::vector<NodeId> bfs_order_;
    std::vector<NodeId> terminals_;
    std::vector<int> terminal_index_;
};

/// Builds the grid AOG by memoized recursive expansion of the whole-grid
/// symbol. Children of an Or are ordered: Terminal, vertical cuts by
/// ascending offset, horizontal cuts by ascending offset.
Aog build_aog(const AogParams& params);
inline Aog build_aog(int grid_w, int grid_h, int l_min, double super_or_threshold = 0.5, bool super_or = true) {
    return build_aog(AogParams{grid_w, grid_h, l_min, super_or_threshold, super_or});
}

/// Instantiation of the AOG: one child per Or, both children per And.
struct ParseTree {
    int class_index = 0;
    NodeId root_id = -1;
    std::map<NodeId, NodeId> chosen; // Or id -> chosen child id
    std::vector<NodeId> node_ids;    // BFS order from root_id
    std::vector<NodeId> terminal_ids;

    friend bool operator==(const ParseTree&, const ParseTree&) = default;
};

/// Terminal rects of a parse tree collapsed onto the grid. Rects are kept
/// sorted so equal layouts compare equal.
struct Configuration {
    int grid_w = 0;
    int grid_h = 0;
    std::vector<Rect> rects;

    int covered_cells() const;
    friend auto operator<=>(const Configuration&, const Configuration&) = default;
};

Configuration make_configuration(int grid_w, int grid_h, std::vector<Rect> rects);

BigCount count_parse_trees(const Aog& aog, std::optional<NodeId> node = std::nullopt);

/// Exhaustive enumeration, deterministic in child order. Throws
/// CapacityError when the tree count at the start node exceeds limit.
std::vector<ParseTree> enumerate_parse_trees(const Aog& aog, std::size_t limit,
                                             std::optional<NodeId> node = std::nullopt);

Configuration collapse_configuration(const Aog& aog, const ParseTree& tree);

/// Distinct configurations in order of first appearance.
std::vector<Configuration> enumerate_configurations(const Aog& aog, std::size_t limit,
                                                    std::optional<NodeId> node = std::nullopt);

/// Walks from tree.root_id following tree.chosen; fills node_ids and
/// terminal_ids. Throws MismatchError when the choices do not describe a
/// parse tree of this AOG.
ParseTree complete_parse_tree(const Aog& aog, NodeId root, const std::map<NodeId, NodeId>& chosen,
                              int class_index = 0);

/// Draws parse trees uniformly from all trees rooted at a node, choosing OR
/// children in proportion to their subtree counts.
class UniformTreeSampler {
public:
    explicit UniformTreeSampler(const Aog& aog, std::optional<NodeId> node = std::nullopt);
    ParseTree operator()(std::mt19937_64& rng) const;

private:
    const Aog* aog_;
    NodeId start_;
    std::vector<std::vector<double>> cumulative_; // per OR node, over children
};

std::string to_dot(const Aog& aog, const ParseTree* highlight = nullptr);

// Serialization. The JSON layout is versioned by kAogSchemaVersion.
inline constexpr int kAogSchemaVersion = 1;

std::string aog_to_json_text(const Aog& aog);
Aog aog_from_json_text(const std::string& text);
void save_aog(const Aog& aog, const std::string& path);
Aog load_aog(const std::string& path);

std::string parse_tree_to_json_text(const Aog& aog, const ParseTree& tree);
ParseTree parse_tree_from_json_text(const Aog& aog, const std::string& text);

} // namespace aog
