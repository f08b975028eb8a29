#pragma once

#include <map>
#include <vector>

#include "treekey/rng.hpp"
#include "treekey/tree_source.hpp"

namespace treekey::testutil {

// Uniform labeled tree on ids 0..nverts-1 via a Pruefer sequence, edge
// correlations uniform in [rho_lo, rho_hi].
inline CorrelatedTree random_tree(Rng& rng, int nverts, double rho_lo = 0.3,
                                  double rho_hi = 0.95) {
    std::vector<VertexId> verts(nverts);
    for (int i = 0; i < nverts; ++i) verts[i] = i;

    auto draw_rho = [&] {
        const double u = static_cast<double>(uniform_below(rng, 1u << 30)) / (1u << 30);
        return rho_lo + u * (rho_hi - rho_lo);
    };

    std::vector<TreeEdge> edges;
    if (nverts == 2) {
        edges.push_back({0, 1, draw_rho()});
        return build_tree(verts, edges);
    }

    std::vector<int> seq(nverts - 2);
    for (auto& s : seq) s = static_cast<int>(uniform_below(rng, nverts));
    std::vector<int> degree(nverts, 1);
    for (int s : seq) degree[s]++;

    std::vector<bool> used(nverts, false);
    for (int s : seq) {
        int leaf = -1;
        for (int v = 0; v < nverts; ++v) {
            if (degree[v] == 1 && !used[v]) { leaf = v; break; }
        }
        edges.push_back({leaf, s, draw_rho()});
        used[leaf] = true;
        degree[s]--;
    }
    int a = -1, b = -1;
    for (int v = 0; v < nverts; ++v) {
        if (degree[v] == 1 && !used[v]) { (a < 0 ? a : b) = v; }
    }
    edges.push_back({a, b, draw_rho()});
    return build_tree(verts, edges);
}

// Independent derivation of the members of the rooted subtree: BFS from the
// root, keep vertices that end up with at least one child.
inline std::vector<VertexId> brute_members(const CorrelatedTree& tree, VertexId root) {
    std::map<VertexId, int> child_count;
    std::vector<VertexId> order{root};
    std::map<VertexId, VertexId> parent{{root, root}};
    for (std::size_t i = 0; i < order.size(); ++i) {
        const VertexId v = order[i];
        for (VertexId w : tree.neighbors(v)) {
            if (parent.count(w)) continue;
            parent[w] = v;
            child_count[v]++;
            order.push_back(w);
        }
    }
    std::vector<VertexId> members;
    for (VertexId v : tree.vertices()) {
        if (child_count.count(v) && child_count[v] > 0) members.push_back(v);
    }
    return members;
}

}  // namespace treekey::testutil
