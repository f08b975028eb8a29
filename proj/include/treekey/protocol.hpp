#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "treekey/field.hpp"
#include "treekey/lattice.hpp"
#include "treekey/rates.hpp"
#include "treekey/reconcile.hpp"
#include "treekey/rng.hpp"
#include "treekey/stats.hpp"
#include "treekey/tree_source.hpp"

namespace treekey {

// Code dimension k_v for a target of k_v * log2(p) / n bits per sample;
// throws NonIntegralRate when no integer dimension matches within 1e-9.
int rate_to_code_dim(double bits_per_sample, int p, int n);

struct PlanOptions {
    int nout_cap = 10000;
    double extractor_margin = 0.05;  // backed off the closed-form entropy rate
    double extractor_floor = 0.05;   // bits per sample the key always targets
    ChainOptions chain;
    std::optional<VertexId> force_root;
    std::optional<int> force_middle_dim;
};

struct TerminalPlan {
    VertexId v = 0;
    int k_v = 0;
    int k_a = 0;
    FieldPtr symbol_field;  // GF(p^{k_v})
    RSCode rs;
    LatticeChain chain;
    double analog_bits_per_block = 0.0;
    double digital_bits_per_block = 0.0;
    double comm_bits_per_sample = 0.0;
};

// Everything fixed before any source sample is drawn: the communicating set,
// one lattice chain and one syndrome code per terminal, and the key extractor.
struct BlockPlan {
    int n = 0;
    int p = 0;
    double delta = 0.0;
    int n_out = 0;
    int k_out = 0;
    RootedSubtree sub;
    std::vector<TerminalPlan> terminals;  // ascending vertex id
    FieldPtr joint_field;                 // GF(p^K), K = sum of member k_v
    int joint_digits = 0;
    ExtractorMatrix extractor;
    std::uint64_t extractor_seed = 0;
    double extractor_rate = 0.0;     // targeted key bits per sample
    double key_bits_per_block = 0.0;
    double key_rate = 0.0;           // key bits per source sample
    double comm_rate = 0.0;          // accounted public bits per source sample
    RateReport rates;                // closed-form report for the full tree
    double r_ent = 0.0;              // closed-form values of the chosen subtree
    double r_com = 0.0;
    double r_key = 0.0;

    bool is_terminal(VertexId v) const;
    const TerminalPlan& terminal(VertexId v) const;
};

// code_dims maps every tree vertex to its fine code dimension in [1, n].
BlockPlan plan_blocks(const CorrelatedTree& tree, const std::map<VertexId, int>& code_dims,
                      int p, int n, double delta, Rng& rng, const PlanOptions& opt = {});

struct HopBound {
    double bound = 0.0;          // union bound on the per-symbol estimate error
    bool vacuous = false;        // some event sits below the exponent threshold
    std::vector<double> mus;     // volume-to-noise ratios entering the bound
};

// from_chain == nullptr models an estimator using its raw source.
HopBound hop_error_bound(int n, double rho, const LatticeChain* from_chain,
                         const LatticeChain& to_chain);
HopBound hop_error_bound(const CorrelatedTree& tree, const BlockPlan& plan, VertexId from,
                         VertexId to);

struct TerminalMessages {
    std::vector<std::vector<double>> dither;  // per symbol, public
    std::vector<std::vector<double>> w;       // analog broadcast, per symbol
    std::vector<std::uint32_t> syndromes;
};

struct TrialResult {
    int trial = 0;
    double agreement = 0.0;  // fraction of non-root vertices matching the root key
    bool all_agree = false;
    bool root_matches_truth = false;
    long long hops = 0;
    long long symbols_estimated = 0;
    long long analog_errors = 0;  // blocks whose estimated point missed the true y
    long long analog_identity_violations = 0;
    long long rs_failures = 0;
    long long miscorrections = 0;
    std::vector<std::uint32_t> root_key;
    std::vector<std::uint32_t> true_key;
    std::map<VertexId, TerminalMessages> transcript;
};

struct ProtocolOptions {
    int trials = 100;
    std::uint64_t seed = 1;
    int threads = 1;
    bool keep_transcripts = true;
};

struct ProtocolResult {
    std::vector<TrialResult> trials;
    double mean_agreement = 0.0;
    long long all_agree_count = 0;
    Interval all_agree_ci;
    double analog_error_rate = 0.0;
    double rs_failure_rate = 0.0;
    double comm_rate = 0.0;  // echoed from the plan
    double key_rate = 0.0;
    double key_bits_per_block = 0.0;
};

ProtocolResult run_protocol(const CorrelatedTree& tree, const BlockPlan& plan,
                            const ProtocolOptions& opt);

// One first-hop estimate statistic per ordered tree edge into a member.
struct HopStat {
    VertexId from = 0;
    VertexId to = 0;
    long long symbols = 0;
    long long errors = 0;
    HopBound bound;
};

// Analog phase alone: quantize the members, run every first-hop estimate, no
// syndromes and no key. delta may take any positive value here.
struct AnalogProbeResult {
    std::vector<HopStat> hops;
    long long symbols = 0;
    long long errors = 0;
    long long identity_violations = 0;
    double error_rate = 0.0;
};

AnalogProbeResult analog_probe(const CorrelatedTree& tree, const RootedSubtree& sub,
                               const std::map<VertexId, int>& code_dims, int p, int n,
                               double delta, int symbols_per_trial, int trials,
                               std::uint64_t seed, Rng& plan_rng,
                               const ChainOptions& chain_opt = {});

}  // namespace treekey
