#include "treekey/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "treekey/errors.hpp"

namespace treekey {

namespace {

double exp_2r(double r, ExpBase base) {
    return base == ExpBase::Two ? std::exp2(2.0 * r) : std::exp(2.0 * r);
}

double half_log2(double x) {
    return 0.5 * std::log2(x);
}

void check_rate(double r) {
    if (!(r > 0.0) || !std::isfinite(r)) {
        throw Error("quantization rates must be positive and finite");
    }
}

// One member's communication term: worst neighbor in the full tree.
double com_term(const CorrelatedTree& tree, const RootedSubtree& sub,
                const RateConstraints& rc, VertexId v, ExpBase base, bool variant) {
    const double ev = exp_2r(rc.at(v), base);
    double worst = -std::numeric_limits<double>::infinity();
    for (VertexId u : sub.tree_neighbors.at(v)) {
        const double rho2 = tree.rho(v, u) * tree.rho(v, u);
        const double eu = exp_2r(rc.at(u), base);
        const double top = variant ? ev - 1.0 : ev;
        const double arg = (ev - 1.0) * (1.0 - rho2) + 1.0 + rho2 * top / (eu - 1.0);
        worst = std::max(worst, half_log2(arg));
    }
    return worst;
}

}  // namespace

double RateConstraints::at(VertexId v) const {
    auto it = rq.find(v);
    if (it == rq.end()) throw UnknownVertex("no quantization rate for vertex " + std::to_string(v));
    check_rate(it->second);
    return it->second;
}

void RateConstraints::check_against(const CorrelatedTree& tree) const {
    for (VertexId v : tree.vertices()) at(v);
}

double entropy_rate(const CorrelatedTree& tree, const RootedSubtree& sub,
                    const RateConstraints& rc, ExpBase base) {
    check_subtree(tree, sub);
    double total = rc.at(sub.root);
    for (VertexId u : sub.members) {
        if (u == sub.root) continue;
        const double rho = tree.rho(u, sub.parent.at(u));
        total += half_log2((exp_2r(rc.at(u), base) - 1.0) * (1.0 - rho * rho) + 1.0);
    }
    return total;
}

double communication_rate(const CorrelatedTree& tree, const RootedSubtree& sub,
                          const RateConstraints& rc, ExpBase base) {
    check_subtree(tree, sub);
    double total = 0.0;
    for (VertexId v : sub.members) total += com_term(tree, sub, rc, v, base, false);
    return total;
}

double communication_rate_variant(const CorrelatedTree& tree, const RootedSubtree& sub,
                                  const RateConstraints& rc, ExpBase base) {
    check_subtree(tree, sub);
    double total = 0.0;
    for (VertexId v : sub.members) total += com_term(tree, sub, rc, v, base, true);
    return total;
}

RateReport key_rate_report(const CorrelatedTree& tree, const RateConstraints& rc,
                           ExpBase base) {
    rc.check_against(tree);
    RateReport report;
    for (const RootedSubtree& sub : enumerate_rooted_subtrees(tree)) {
        SubtreeRecord rec;
        rec.subtree = sub;
        rec.r_ent = entropy_rate(tree, sub, rc, base);
        rec.r_com = communication_rate(tree, sub, rc, base);
        rec.candidate = rec.r_ent - rec.r_com;
        report.records.push_back(std::move(rec));
    }
    report.best_index = 0;
    for (std::size_t i = 1; i < report.records.size(); ++i) {
        // Strict improvement only: ties keep the smallest root id.
        if (report.records[i].candidate > report.records[report.best_index].candidate) {
            report.best_index = i;
        }
    }
    report.r_key = std::max(0.0, report.records[report.best_index].candidate);

    const RootedSubtree& best = report.records[report.best_index].subtree;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (VertexId v : best.members) {
        lo = std::min(lo, rc.at(v));
        hi = std::max(hi, rc.at(v));
    }
    report.alpha = hi / lo;
    return report;
}

FineLimitReport fine_limit_key_rate(const CorrelatedTree& tree) {
    FineLimitReport report;
    bool first = true;
    double best = 0.0;
    for (const RootedSubtree& sub : enumerate_rooted_subtrees(tree)) {
        double value = std::numeric_limits<double>::infinity();
        for (VertexId v : sub.tree_neighbors.at(sub.root)) {
            const double rho2 = tree.rho(sub.root, v) * tree.rho(sub.root, v);
            value = std::min(value, half_log2(1.0 / (1.0 - rho2)));
        }
        for (VertexId u : sub.members) {
            if (u == sub.root) continue;
            const double rp = tree.rho(u, sub.parent.at(u));
            double term = std::numeric_limits<double>::infinity();
            for (VertexId v : sub.tree_neighbors.at(u)) {
                const double rv = tree.rho(u, v);
                term = std::min(term, half_log2((1.0 - rp * rp) / (1.0 - rv * rv)));
            }
            value += term;
        }
        report.per_root.push_back(value);
        if (first || value > best) {
            best = value;
            report.witness_root = sub.root;
            first = false;
        }
    }
    report.value = std::max(0.0, best);
    return report;
}

double secret_key_capacity(const CorrelatedTree& tree) {
    double cap = std::numeric_limits<double>::infinity();
    for (const TreeEdge& e : tree.edges()) {
        cap = std::min(cap, half_log2(1.0 / (1.0 - e.rho * e.rho)));
    }
    if (tree.edges().empty()) return 0.0;
    return cap;
}

double two_user_rate(double rho, double rq_u, double rq_v, ExpBase base) {
    check_rate(rq_u);
    check_rate(rq_v);
    if (!(std::abs(rho) < 1.0)) throw BadCorrelation("|rho| must be < 1");
    const double eu = exp_2r(rq_u, base);
    const double ev = exp_2r(rq_v, base);
    const double rho2 = rho * rho;
    return half_log2(eu / ((eu - 1.0) * (1.0 - rho2) + 1.0 + rho2 * eu / (ev - 1.0)));
}

double one_sided_rate(double rho, double rq_u, ExpBase base) {
    check_rate(rq_u);
    if (!(std::abs(rho) < 1.0)) throw BadCorrelation("|rho| must be < 1");
    const double eu = exp_2r(rq_u, base);
    const double rho2 = rho * rho;
    return half_log2(eu / ((eu - 1.0) * (1.0 - rho2) + 1.0));
}

FineLimitClassification classify_fine_limit(const CorrelatedTree& tree, double tol) {
    FineLimitClassification out;
    FineLimitReport fine = fine_limit_key_rate(tree);
    out.fine_limit = fine.value;
    out.capacity = secret_key_capacity(tree);
    out.gap = out.capacity - out.fine_limit;
    out.witness_root = fine.witness_root;
    out.verdict = out.gap <= tol ? FineLimitClass::AchievesCapacity
                                 : FineLimitClass::StrictlyBelowCapacity;
    return out;
}

}  // namespace treekey
