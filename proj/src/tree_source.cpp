#include "treekey/tree_source.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

#include "treekey/errors.hpp"

namespace treekey {

namespace {

std::pair<VertexId, VertexId> ordered(VertexId a, VertexId b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

}  // namespace

bool CorrelatedTree::has_vertex(VertexId v) const {
    return adj_.count(v) != 0;
}

const std::vector<VertexId>& CorrelatedTree::neighbors(VertexId v) const {
    auto it = adj_.find(v);
    if (it == adj_.end()) throw UnknownVertex("unknown vertex id " + std::to_string(v));
    return it->second;
}

bool CorrelatedTree::has_edge(VertexId u, VertexId v) const {
    return rho_.count(ordered(u, v)) != 0;
}

double CorrelatedTree::rho(VertexId u, VertexId v) const {
    auto it = rho_.find(ordered(u, v));
    if (it == rho_.end()) {
        throw UnknownVertex("no edge between " + std::to_string(u) + " and " +
                            std::to_string(v));
    }
    return it->second;
}

const std::string& CorrelatedTree::name(VertexId v) const {
    static const std::string empty;
    auto it = names_.find(v);
    return it == names_.end() ? empty : it->second;
}

CorrelatedTree build_tree(const std::vector<VertexId>& vertices,
                          const std::vector<TreeEdge>& edges,
                          const std::map<VertexId, std::string>& names) {
    if (vertices.empty()) throw NotATree("vertex set is empty");
    CorrelatedTree t;
    t.vertices_ = vertices;
    std::sort(t.vertices_.begin(), t.vertices_.end());
    if (std::adjacent_find(t.vertices_.begin(), t.vertices_.end()) != t.vertices_.end()) {
        throw NotATree("duplicate vertex id");
    }
    for (VertexId v : t.vertices_) t.adj_[v];

    if (edges.size() + 1 != t.vertices_.size()) {
        throw NotATree("a tree on " + std::to_string(t.vertices_.size()) +
                       " vertices needs exactly " + std::to_string(t.vertices_.size() - 1) +
                       " edges, got " + std::to_string(edges.size()));
    }
    for (const TreeEdge& e : edges) {
        if (!t.adj_.count(e.u) || !t.adj_.count(e.v)) {
            throw NotATree("edge endpoint not in vertex set");
        }
        if (e.u == e.v) throw NotATree("self loop on vertex " + std::to_string(e.u));
        if (!std::isfinite(e.rho) || std::abs(e.rho) >= 1.0) {
            std::ostringstream os;
            os << "correlation on edge (" << e.u << "," << e.v << ") must satisfy |rho| < 1, got "
               << e.rho;
            throw BadCorrelation(os.str());
        }
        auto key = ordered(e.u, e.v);
        if (t.rho_.count(key)) throw NotATree("duplicate edge");
        if (e.rho == 0.0) {
            t.warnings_.push_back("edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                                  ") has rho = 0: the tree factors into independent components");
        }
        t.rho_[key] = e.rho;
        t.adj_[e.u].push_back(e.v);
        t.adj_[e.v].push_back(e.u);
        t.edges_.push_back(e);
    }
    for (auto& [v, nbrs] : t.adj_) std::sort(nbrs.begin(), nbrs.end());

    // Edge count is right; connectivity makes it a tree.
    std::set<VertexId> seen;
    std::deque<VertexId> queue{t.vertices_.front()};
    seen.insert(t.vertices_.front());
    while (!queue.empty()) {
        VertexId v = queue.front();
        queue.pop_front();
        for (VertexId w : t.adj_[v]) {
            if (seen.insert(w).second) queue.push_back(w);
        }
    }
    if (seen.size() != t.vertices_.size()) throw NotATree("graph is not connected");

    for (const auto& [v, nm] : names) {
        if (!t.adj_.count(v)) throw UnknownVertex("name given for unknown vertex");
        t.names_[v] = nm;
    }
    return t;
}

double path_correlation(const CorrelatedTree& tree, VertexId u, VertexId v) {
    if (!tree.has_vertex(u)) throw UnknownVertex("unknown vertex id " + std::to_string(u));
    if (!tree.has_vertex(v)) throw UnknownVertex("unknown vertex id " + std::to_string(v));
    if (u == v) return 1.0;
    // BFS from u remembering the parent, then walk back from v.
    std::map<VertexId, VertexId> from;
    std::deque<VertexId> queue{u};
    from[u] = u;
    while (!queue.empty()) {
        VertexId a = queue.front();
        queue.pop_front();
        if (a == v) break;
        for (VertexId b : tree.neighbors(a)) {
            if (!from.count(b)) {
                from[b] = a;
                queue.push_back(b);
            }
        }
    }
    double prod = 1.0;
    for (VertexId a = v; a != u; a = from.at(a)) prod *= tree.rho(a, from.at(a));
    return prod;
}

SourceBlock sample_block(const CorrelatedTree& tree, int n, Rng& rng) {
    if (n <= 0) throw Error("sample_block needs n >= 1");
    SourceBlock block;
    block.n = n;
    GaussianSampler gauss;
    const VertexId root = tree.vertices().front();
    std::set<VertexId> seen{root};
    std::deque<std::pair<VertexId, VertexId>> queue{{root, root}};
    while (!queue.empty()) {
        auto [v, par] = queue.front();
        queue.pop_front();
        std::vector<double>& x = block.samples[v];
        x.resize(n);
        if (v == root) {
            for (int i = 0; i < n; ++i) x[i] = gauss(rng);
        } else {
            const double r = tree.rho(v, par);
            const double s = std::sqrt(1.0 - r * r);
            const std::vector<double>& xp = block.samples.at(par);
            for (int i = 0; i < n; ++i) x[i] = r * xp[i] + s * gauss(rng);
        }
        for (VertexId w : tree.neighbors(v)) {
            if (seen.insert(w).second) queue.push_back({w, v});
        }
    }
    return block;
}

bool RootedSubtree::is_member(VertexId v) const {
    return std::binary_search(members.begin(), members.end(), v);
}

RootedSubtree rooted_subtree_at(const CorrelatedTree& tree, VertexId root) {
    if (!tree.has_vertex(root)) throw UnknownVertex("unknown root " + std::to_string(root));
    if (tree.size() < 2) throw SingletonTree("a single vertex has no usable rooted subtree");

    // Orient the tree away from the root, then keep exactly the vertices that
    // have at least one child.
    std::map<VertexId, VertexId> par;
    std::deque<VertexId> queue{root};
    par[root] = root;
    std::set<VertexId> internal;
    while (!queue.empty()) {
        VertexId v = queue.front();
        queue.pop_front();
        for (VertexId w : tree.neighbors(v)) {
            if (!par.count(w)) {
                par[w] = v;
                internal.insert(v);
                queue.push_back(w);
            }
        }
    }

    RootedSubtree sub;
    sub.root = root;
    sub.members.assign(internal.begin(), internal.end());
    std::sort(sub.members.begin(), sub.members.end());
    for (VertexId v : sub.members) {
        if (v != root) sub.parent[v] = par.at(v);
        sub.tree_neighbors[v] = tree.neighbors(v);
    }
    return sub;
}

std::vector<RootedSubtree> enumerate_rooted_subtrees(const CorrelatedTree& tree) {
    if (tree.size() < 2) throw SingletonTree("a single vertex has no usable rooted subtree");
    std::vector<RootedSubtree> out;
    out.reserve(tree.size());
    for (VertexId v : tree.vertices()) out.push_back(rooted_subtree_at(tree, v));
    return out;
}

void check_subtree(const CorrelatedTree& tree, const RootedSubtree& sub) {
    if (sub.members.empty() || !sub.is_member(sub.root)) {
        throw MismatchedSubtree("subtree root is not a member");
    }
    for (VertexId v : sub.members) {
        if (!tree.has_vertex(v)) throw MismatchedSubtree("subtree member not in tree");
        auto it = sub.tree_neighbors.find(v);
        if (it == sub.tree_neighbors.end() || it->second != tree.neighbors(v)) {
            throw MismatchedSubtree("subtree neighbor lists disagree with the tree");
        }
        if (v != sub.root) {
            auto pit = sub.parent.find(v);
            if (pit == sub.parent.end() || !sub.is_member(pit->second) ||
                !tree.has_edge(v, pit->second)) {
                throw MismatchedSubtree("subtree parent link is not a tree edge");
            }
        }
    }
}

}  // namespace treekey
