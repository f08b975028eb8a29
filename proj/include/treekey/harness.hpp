#pragma once

#include <string>

#include "treekey/config.hpp"
#include "treekey/protocol.hpp"
#include "treekey/stats.hpp"

namespace treekey {

// Statistical look at the produced keys and the public transcript. The
// mutual-information and broadcast-entropy numbers are diagnostics, not
// proofs; the closed-form flags compare measured rates against the
// infinite-blocklength expressions.
struct SecrecyReport {
    int trials = 0;
    std::string cell_mode;  // "exact": one cell per possible key; "hashed": binned
    int cells = 0;
    double key_space_log2 = 0.0;
    int distinct_keys = 0;
    ChiSquare key_uniformity;
    double key_entropy_plugin = 0.0;
    double key_entropy_mm = 0.0;

    double comm_rate = 0.0;
    double r_com = 0.0;
    bool comm_within_closed_form = false;
    double key_rate = 0.0;
    double r_key = 0.0;
    bool key_within_closed_form = false;

    PermutationMI transcript_mi;          // key vs one public syndrome symbol
    double w_entropy_marginal = 0.0;      // analog broadcast, first coordinate
    double w_entropy_given_dither = 0.0;  // same, conditioned on the binned dither
};

// Needs >= 100 trials and kept transcripts.
SecrecyReport evaluate_secrecy(const BlockPlan& plan, const ProtocolResult& result,
                               const EvaluateConfig& eval, std::uint64_t seed);

void cmd_rate(const Config& cfg, const std::string& out_dir);
void cmd_fine(const Config& cfg, const std::string& out_dir);
void cmd_sweep_two_user(double rho, double r_total, int steps, const std::string& out_dir);
void cmd_simulate(const Config& cfg, const std::string& out_dir);
void cmd_lattice_diag(const Config& cfg, const std::string& out_dir);

}  // namespace treekey
