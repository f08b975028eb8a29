#pragma once

#include <map>
#include <string>
#include <vector>

#include "treekey/rng.hpp"

namespace treekey {

using VertexId = int;

struct TreeEdge {
    VertexId u = 0;
    VertexId v = 0;
    double rho = 0.0;
};

// Undirected tree with a correlation coefficient on every edge. Vertices are
// small integer ids; display names for reporting ride along separately.
class CorrelatedTree {
  public:
    const std::vector<VertexId>& vertices() const { return vertices_; }
    const std::vector<TreeEdge>& edges() const { return edges_; }
    std::size_t size() const { return vertices_.size(); }

    bool has_vertex(VertexId v) const;
    // Neighbors in ascending id order.
    const std::vector<VertexId>& neighbors(VertexId v) const;
    bool has_edge(VertexId u, VertexId v) const;
    double rho(VertexId u, VertexId v) const;

    const std::string& name(VertexId v) const;
    const std::vector<std::string>& warnings() const { return warnings_; }

  private:
    friend CorrelatedTree build_tree(const std::vector<VertexId>&,
                                     const std::vector<TreeEdge>&,
                                     const std::map<VertexId, std::string>&);
    std::vector<VertexId> vertices_;
    std::vector<TreeEdge> edges_;
    std::map<VertexId, std::vector<VertexId>> adj_;
    std::map<std::pair<VertexId, VertexId>, double> rho_;
    std::map<VertexId, std::string> names_;
    std::vector<std::string> warnings_;
};

// Validates connectivity, the edge count, and every correlation (|rho| < 1,
// finite). rho == 0 is legal but flagged in warnings(). A single vertex with
// no edges is the trivial tree.
CorrelatedTree build_tree(const std::vector<VertexId>& vertices,
                          const std::vector<TreeEdge>& edges,
                          const std::map<VertexId, std::string>& names = {});

// Product of edge correlations along the unique u-v path; 1 when u == v.
double path_correlation(const CorrelatedTree& tree, VertexId u, VertexId v);

struct SourceBlock {
    int n = 0;  // samples per vertex
    std::map<VertexId, std::vector<double>> samples;
};

// n joint samples of the Gauss-Markov field: the smallest id acts as the
// sampling root, children follow X_c = rho X_parent + sqrt(1-rho^2) Z.
SourceBlock sample_block(const CorrelatedTree& tree, int n, Rng& rng);

// Subtree of communicating terminals obtained by rooting the full tree at
// `root` and deleting the leaves of the rooted version.
struct RootedSubtree {
    VertexId root = 0;
    std::vector<VertexId> members;                       // ascending, contains root
    std::map<VertexId, VertexId> parent;                 // members except root
    std::map<VertexId, std::vector<VertexId>> tree_neighbors;  // full-tree neighbors

    bool is_member(VertexId v) const;
};

RootedSubtree rooted_subtree_at(const CorrelatedTree& tree, VertexId root);

// One entry per vertex, in ascending root id order. Distinct roots may yield
// equal member sets; both entries are kept.
std::vector<RootedSubtree> enumerate_rooted_subtrees(const CorrelatedTree& tree);

// Throws MismatchedSubtree unless `sub` is structurally consistent with `tree`.
void check_subtree(const CorrelatedTree& tree, const RootedSubtree& sub);

}  // namespace treekey
