#include <algorithm>
#include <fstream>
#include <sstream>

#include "aog/errors.hpp"
#include "aog/grid_grammar.hpp"
#include "json.hpp"

using nlohmann::json;

namespace aog {

namespace {

NodeKind kind_from_string(const std::string& s, const std::string& where) {
    if (s == "terminal") return NodeKind::Terminal;
    if (s == "and") return NodeKind::And;
    if (s == "or") return NodeKind::Or;
    if (s == "super_or") return NodeKind::SuperOr;
    throw ParseError(where + ": unknown node kind '" + s + "'");
}

// Typed field access that reports the JSON path on failure.
template <typename T>
T field(const json& j, const std::string& key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) {
        throw ParseError(where + ": missing field '" + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError(where + "/" + key + ": " + e.what());
    }
}

json parse_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "' for reading");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw InputError("failed writing '" + path + "'");
}

bool is_topological(const Aog& g, const std::vector<NodeId>& order, bool children_first) {
    if (order.size() != g.size()) return false;
    std::vector<int> pos(g.size(), -1);
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (!g.contains(order[i]) || pos[static_cast<std::size_t>(order[i])] >= 0) return false;
        pos[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
    }
    for (const auto& n : g.nodes()) {
        for (NodeId c : n.children) {
            const bool child_before = pos[static_cast<std::size_t>(c)] < pos[static_cast<std::size_t>(n.id)];
            if (child_before != children_first) return false;
        }
    }
    return true;
}

} // namespace

std::string aog_to_json_text(const Aog& aog) {
    json j;
    j["schema_version"] = kAogSchemaVersion;
    j["grid_w"] = aog.grid_w();
    j["grid_h"] = aog.grid_h();
    j["l_min"] = aog.l_min();
    j["super_or_threshold"] = aog.params().super_or_threshold;
    j["super_or"] = aog.params().super_or;
    j["root_id"] = aog.root_id();
    json nodes = json::array();
    for (const auto& n : aog.nodes()) {
        json jn;
        jn["id"] = n.id;
        jn["kind"] = to_string(n.kind);
        jn["rect"] = {n.rect.x, n.rect.y, n.rect.w, n.rect.h};
        if (n.is_and()) {
            jn["axis"] = to_string(n.axis);
            jn["offset"] = n.offset;
        }
        jn["children"] = n.children;
        nodes.push_back(std::move(jn));
    }
    j["nodes"] = std::move(nodes);
    j["dfs_order"] = aog.dfs_order();
    j["bfs_order"] = aog.bfs_order();
    return j.dump(1) + "\n";
}

Aog aog_from_json_text(const std::string& text) {
    const json j = parse_text(text);
    const int version = field<int>(j, "schema_version", "");
    if (version != kAogSchemaVersion) {
        throw VersionError("AOG schema version " + std::to_string(version) + " is not supported (expected " +
                           std::to_string(kAogSchemaVersion) + ")");
    }

    Aog g;
    g.params_.grid_w = field<int>(j, "grid_w", "");
    g.params_.grid_h = field<int>(j, "grid_h", "");
    g.params_.l_min = field<int>(j, "l_min", "");
    g.params_.super_or_threshold = field<double>(j, "super_or_threshold", "");
    g.params_.super_or = j.value("super_or", true);
    g.root_ = field<int>(j, "root_id", "");

    const json& nodes = j.contains("nodes") ? j.at("nodes") : json();
    if (!nodes.is_array()) throw ParseError("/nodes: expected an array");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const std::string where = "/nodes/" + std::to_string(i);
        const json& jn = nodes[i];
        AogNode n;
        n.id = field<int>(jn, "id", where);
        if (n.id != static_cast<int>(i)) throw ParseError(where + ": node ids must be dense and ordered");
        n.kind = kind_from_string(field<std::string>(jn, "kind", where), where);
        const auto r = field<std::vector<int>>(jn, "rect", where);
        if (r.size() != 4) throw ParseError(where + "/rect: expected [x,y,w,h]");
        n.rect = Rect{r[0], r[1], r[2], r[3]};
        if (n.is_and()) {
            const auto axis = field<std::string>(jn, "axis", where);
            if (axis != "vertical" && axis != "horizontal") throw ParseError(where + "/axis: bad axis '" + axis + "'");
            n.axis = axis == "vertical" ? CutAxis::Vertical : CutAxis::Horizontal;
            n.offset = field<int>(jn, "offset", where);
        }
        n.children = field<std::vector<NodeId>>(jn, "children", where);
        g.nodes_.push_back(std::move(n));
    }

    // Structural validation before deriving links.
    for (const auto& n : g.nodes_) {
        const std::string where = "/nodes/" + std::to_string(n.id);
        for (NodeId c : n.children) {
            if (!g.contains(c)) throw ParseError(where + "/children: unknown child id " + std::to_string(c));
        }
        const std::size_t k = n.children.size();
        if ((n.is_terminal() && k != 0) || (n.is_and() && k != 2) || (n.is_or() && k == 0)) {
            throw ParseError(where + ": wrong number of children for a " + to_string(n.kind) + " node");
        }
    }
    if (!g.contains(g.root_)) throw ParseError("/root_id: unknown node id");

    const auto dfs = field<std::vector<NodeId>>(j, "dfs_order", "");
    const auto bfs = field<std::vector<NodeId>>(j, "bfs_order", "");
    g.finalize();
    if (!is_topological(g, dfs, true)) throw ParseError("/dfs_order: not a children-first order over all nodes");
    if (!is_topological(g, bfs, false)) throw ParseError("/bfs_order: not a parents-first order over all nodes");
    g.dfs_order_ = dfs;
    g.bfs_order_ = bfs;
    return g;
}

void save_aog(const Aog& aog, const std::string& path) { write_file(path, aog_to_json_text(aog)); }

Aog load_aog(const std::string& path) {
    try {
        return aog_from_json_text(read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

std::string parse_tree_to_json_text(const Aog& aog, const ParseTree& tree) {
    json j;
    j["class"] = tree.class_index;
    j["root"] = tree.root_id;
    json chosen = json::object();
    for (const auto& [o, c] : tree.chosen) chosen[std::to_string(o)] = c;
    j["chosen"] = std::move(chosen);
    json terms = json::array();
    for (NodeId t : tree.terminal_ids) {
        const auto& r = aog.node(t).rect;
        terms.push_back({r.x, r.y, r.w, r.h});
    }
    j["terminals"] = std::move(terms);
    return j.dump() + "\n";
}

ParseTree parse_tree_from_json_text(const Aog& aog, const std::string& text) {
    const json j = parse_text(text);
    const int cls = field<int>(j, "class", "");
    const NodeId root = j.value("root", aog.root_id());
    if (!j.contains("chosen") || !j.at("chosen").is_object()) throw ParseError("/chosen: expected an object");
    std::map<NodeId, NodeId> chosen;
    for (const auto& [key, value] : j.at("chosen").items()) {
        try {
            chosen.emplace(std::stoi(key), value.get<NodeId>());
        } catch (const std::exception&) {
            throw ParseError("/chosen/" + key + ": expected integer OR id mapped to integer child id");
        }
    }
    ParseTree t = complete_parse_tree(aog, root, chosen, cls);

    const auto terms = field<std::vector<std::vector<int>>>(j, "terminals", "");
    std::vector<Rect> listed;
    for (const auto& r : terms) {
        if (r.size() != 4) throw ParseError("/terminals: expected [x,y,w,h] entries");
        listed.push_back(Rect{r[0], r[1], r[2], r[3]});
    }
    std::vector<Rect> derived;
    for (NodeId id : t.terminal_ids) derived.push_back(aog.node(id).rect);
    std::sort(listed.begin(), listed.end());
    std::sort(derived.begin(), derived.end());
    if (listed != derived) throw MismatchError("parse tree terminals disagree with its OR choices");
    return t;
}

} // namespace aog
