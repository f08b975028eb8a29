#pragma once

#include <map>
#include <vector>

#include "treekey/tree_source.hpp"

namespace treekey {

// All rates are bits per source sample. ExpBase::Two evaluates the inner
// exponentials as 2^{2R}; ExpBase::E keeps natural exponentials (the printed
// mixed-base form, exposed for comparison only).
enum class ExpBase { Two, E };

struct RateConstraints {
    std::map<VertexId, double> rq;  // quantization rate per vertex, > 0

    double at(VertexId v) const;
    // Every tree vertex must have a positive finite rate.
    void check_against(const CorrelatedTree& tree) const;
};

// Joint entropy rate of the quantized outputs of the communicating set.
double entropy_rate(const CorrelatedTree& tree, const RootedSubtree& sub,
                    const RateConstraints& rc, ExpBase base = ExpBase::Two);

// Total public communication rate; each member's term takes the worst
// neighbor in the full tree.
double communication_rate(const CorrelatedTree& tree, const RootedSubtree& sub,
                          const RateConstraints& rc, ExpBase base = ExpBase::Two);

// Same shape, but the last numerator term carries 2^{2R}-1 instead of 2^{2R}
// (the form implied by the quantization-noise substitution). Diagnostic only.
double communication_rate_variant(const CorrelatedTree& tree, const RootedSubtree& sub,
                                  const RateConstraints& rc, ExpBase base = ExpBase::Two);

struct SubtreeRecord {
    RootedSubtree subtree;
    double r_ent = 0.0;
    double r_com = 0.0;
    double candidate = 0.0;  // r_ent - r_com, may be negative
};

struct RateReport {
    std::vector<SubtreeRecord> records;  // one per root, ascending root id
    std::size_t best_index = 0;          // argmax candidate, smallest root on ties
    double r_key = 0.0;                  // clipped at zero
    double alpha = 1.0;                  // max/min quantization rate over best members

    const SubtreeRecord& best() const { return records[best_index]; }
};

RateReport key_rate_report(const CorrelatedTree& tree, const RateConstraints& rc,
                           ExpBase base = ExpBase::Two);

struct FineLimitReport {
    double value = 0.0;          // clipped at zero
    VertexId witness_root = 0;   // root of the maximizing subtree
    std::vector<double> per_root;  // candidate per root, ascending root id
};

// Fine-quantization limit of the achievable key rate.
FineLimitReport fine_limit_key_rate(const CorrelatedTree& tree);

// Unconstrained secret-key capacity: weakest edge of the tree.
double secret_key_capacity(const CorrelatedTree& tree);

// Two-terminal rate with u communicating; rates must be positive.
double two_user_rate(double rho, double rq_u, double rq_v, ExpBase base = ExpBase::Two);

// Limit of two_user_rate as the silent terminal's rate grows without bound.
double one_sided_rate(double rho, double rq_u, ExpBase base = ExpBase::Two);

enum class FineLimitClass { AchievesCapacity, StrictlyBelowCapacity };

struct FineLimitClassification {
    FineLimitClass verdict = FineLimitClass::AchievesCapacity;
    double fine_limit = 0.0;
    double capacity = 0.0;
    double gap = 0.0;  // capacity - fine_limit, >= 0 up to tolerance
    VertexId witness_root = 0;
};

FineLimitClassification classify_fine_limit(const CorrelatedTree& tree, double tol = 1e-9);

}  // namespace treekey
