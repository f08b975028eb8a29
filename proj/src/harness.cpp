#include "treekey/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "json.hpp"
#include "treekey/errors.hpp"
#include "treekey/rates.hpp"

namespace treekey {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void write_text(const std::string& out_dir, const std::string& file,
                const std::string& content) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path path = std::filesystem::path(out_dir) / file;
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
}

void need_rates(const Config& cfg, const char* cmd) {
    if (!cfg.has_rates) {
        throw ConfigError(std::string(cmd) + " needs a \"rates\" section in the config");
    }
}

RateConstraints constraints_of(const Config& cfg) {
    RateConstraints rc;
    for (const auto& [v, k] : cfg.code_dims) {
        rc.rq[v] = k * std::log2(static_cast<double>(cfg.p)) / cfg.n;
    }
    return rc;
}

json classification_json(const FineLimitClassification& cls, const CorrelatedTree& tree) {
    return json{
        {"verdict", cls.verdict == FineLimitClass::AchievesCapacity
                        ? "achieves_capacity"
                        : "strictly_below_capacity"},
        {"fine_limit", cls.fine_limit},
        {"capacity", cls.capacity},
        {"gap", cls.gap},
        {"witness_root", tree.name(cls.witness_root)},
    };
}

PlanOptions plan_options(const Config& cfg) {
    PlanOptions opt;
    opt.nout_cap = cfg.protocol.nout_cap;
    opt.extractor_margin = cfg.protocol.extractor_margin;
    opt.extractor_floor = cfg.protocol.extractor_floor;
    opt.chain.sigma_samples = cfg.protocol.sigma_samples;
    opt.chain.retries = cfg.protocol.chain_retries;
    opt.force_root = cfg.root;
    opt.force_middle_dim = cfg.middle_dim;
    return opt;
}

json terminal_json(const Config& cfg, const BlockPlan& plan, const TerminalPlan& t) {
    json hops = json::array();
    for (VertexId c : cfg.tree.neighbors(t.v)) {
        const HopBound hb = hop_error_bound(cfg.tree, plan, c, t.v);
        hops.push_back(json{{"from", cfg.tree.name(c)},
                            {"bound", hb.bound},
                            {"vacuous", hb.vacuous},
                            {"mus", hb.mus}});
    }
    return json{
        {"vertex", cfg.tree.name(t.v)},
        {"k_v", t.k_v},
        {"k_a", t.k_a},
        {"gamma", t.chain.fine.gamma()},
        {"sigma2", t.chain.sigma2},
        {"sigma2_stderr", t.chain.sigma2_stderr},
        {"margin_coarse", t.chain.margin_coarse},
        {"margin_middle", t.chain.margin_middle},
        {"normalized_moment_2pie", t.chain.g2pe},
        {"covering_ratio", t.chain.cov_eff},
        {"analog_bits_per_block", t.analog_bits_per_block},
        {"digital_bits_per_block", t.digital_bits_per_block},
        {"comm_bits_per_sample", t.comm_bits_per_sample},
        {"estimate_error_bounds", hops},
    };
}

}  // namespace

SecrecyReport evaluate_secrecy(const BlockPlan& plan, const ProtocolResult& result,
                               const EvaluateConfig& eval, std::uint64_t seed) {
    const int trials = static_cast<int>(result.trials.size());
    if (trials < 100) throw TooFewTrials("secrecy evaluation needs at least 100 trials");
    for (const TrialResult& t : result.trials) {
        if (t.transcript.empty()) {
            throw Error("secrecy evaluation needs kept transcripts");
        }
    }

    SecrecyReport rep;
    rep.trials = trials;
    const int rows = plan.extractor.rows;
    const double q = static_cast<double>(plan.joint_field->q());
    rep.key_space_log2 = rows * std::log2(q);
    const bool exact = rep.key_space_log2 <= 12.0 + 1e-9;
    rep.cell_mode = exact ? "exact" : "hashed";
    rep.cells = exact ? static_cast<int>(std::llround(std::pow(q, rows))) : eval.bins;

    std::vector<long long> counts(rep.cells, 0);
    std::vector<int> key_cell(trials);
    std::set<std::vector<std::uint32_t>> distinct;
    for (int i = 0; i < trials; ++i) {
        const std::vector<std::uint32_t>& key = result.trials[i].root_key;
        distinct.insert(key);
        long long idx = 0;
        if (exact) {
            for (int j = rows - 1; j >= 0; --j) {
                idx = idx * plan.joint_field->q() + key[j];
            }
        } else {
            std::uint64_t h = 0x6b79u;
            for (std::uint32_t s : key) h = mix64(h ^ s);
            idx = static_cast<long long>(h % counts.size());
        }
        key_cell[i] = static_cast<int>(idx);
        counts[idx]++;
    }
    rep.distinct_keys = static_cast<int>(distinct.size());
    rep.key_uniformity = chi_square_uniform(counts);
    rep.key_entropy_plugin = entropy_plugin_bits(counts);
    rep.key_entropy_mm = entropy_miller_madow_bits(counts);

    rep.comm_rate = plan.comm_rate;
    rep.r_com = plan.r_com;
    rep.comm_within_closed_form = plan.comm_rate <= plan.r_com + 1e-9;
    rep.key_rate = plan.key_rate;
    rep.r_key = plan.r_key;
    rep.key_within_closed_form = plan.key_rate <= plan.r_key + 1e-9;

    // Diagnostics against the public transcript of the first terminal.
    const VertexId first = plan.terminals.front().v;
    std::vector<int> syndrome_label(trials);
    std::vector<double> w0;
    std::vector<double> d0;
    for (int i = 0; i < trials; ++i) {
        const TerminalMessages& msg = result.trials[i].transcript.at(first);
        syndrome_label[i] = static_cast<int>(msg.syndromes.front());
        for (const std::vector<double>& w : msg.w) w0.push_back(w.front());
        for (const std::vector<double>& d : msg.dither) d0.push_back(d.front());
    }
    Rng mi_rng = make_stream(seed, 0x4d49u);
    rep.transcript_mi =
        mutual_information_perm(key_cell, syndrome_label, eval.permutations, mi_rng);

    const int bins = eval.bins;
    auto bin_of = [bins](double v, double radius) {
        const int b = static_cast<int>(std::floor((v + radius) / (2.0 * radius) * bins));
        return std::min(bins - 1, std::max(0, b));
    };
    double wr = 1e-12;
    double dr = 1e-12;
    for (double v : w0) wr = std::max(wr, std::abs(v));
    for (double v : d0) dr = std::max(dr, std::abs(v));
    std::vector<long long> w_counts(bins, 0);
    std::vector<long long> d_counts(bins, 0);
    std::vector<long long> joint_counts(static_cast<std::size_t>(bins) * bins, 0);
    for (std::size_t i = 0; i < w0.size(); ++i) {
        const int wb = bin_of(w0[i], wr);
        const int db = bin_of(d0[i], dr);
        w_counts[wb]++;
        d_counts[db]++;
        joint_counts[static_cast<std::size_t>(db) * bins + wb]++;
    }
    rep.w_entropy_marginal = entropy_plugin_bits(w_counts);
    rep.w_entropy_given_dither =
        entropy_plugin_bits(joint_counts) - entropy_plugin_bits(d_counts);
    return rep;
}

void cmd_rate(const Config& cfg, const std::string& out_dir) {
    need_rates(cfg, "rate");
    const RateConstraints rc = constraints_of(cfg);
    const RateReport report = key_rate_report(cfg.tree, rc);
    const FineLimitReport fine = fine_limit_key_rate(cfg.tree);
    const FineLimitClassification cls = classify_fine_limit(cfg.tree);

    json roots = json::array();
    std::string csv = "root,r_ent,r_com,r_com_variant,candidate\n";
    for (const SubtreeRecord& rec : report.records) {
        const double variant = communication_rate_variant(cfg.tree, rec.subtree, rc);
        json members = json::array();
        for (VertexId m : rec.subtree.members) members.push_back(cfg.tree.name(m));
        roots.push_back(json{{"root", cfg.tree.name(rec.subtree.root)},
                             {"members", members},
                             {"r_ent", rec.r_ent},
                             {"r_com", rec.r_com},
                             {"r_com_variant", variant},
                             {"candidate", rec.candidate}});
        csv += cfg.tree.name(rec.subtree.root) + "," + fmt(rec.r_ent) + "," +
               fmt(rec.r_com) + "," + fmt(variant) + "," + fmt(rec.candidate) + "\n";
    }

    json out{
        {"p", cfg.p},
        {"n", cfg.n},
        {"roots", roots},
        {"best_root", cfg.tree.name(report.best().subtree.root)},
        {"r_key", report.r_key},
        {"alpha", report.alpha},
        {"fine_limit", fine.value},
        {"fine_limit_witness_root", cfg.tree.name(fine.witness_root)},
        {"capacity", secret_key_capacity(cfg.tree)},
        {"classification", classification_json(cls, cfg.tree)},
    };
    write_text(out_dir, "rate_report.json", out.dump(2) + "\n");
    write_text(out_dir, "roots.csv", csv);

    std::cout << "best root " << cfg.tree.name(report.best().subtree.root) << ", key rate "
              << fmt(report.r_key) << " bits/sample, rate spread " << fmt(report.alpha)
              << "\n";
    std::cout << "fine-quantization limit " << fmt(fine.value) << ", capacity "
              << fmt(secret_key_capacity(cfg.tree)) << " ("
              << (cls.verdict == FineLimitClass::AchievesCapacity
                      ? "achieves capacity"
                      : "strictly below capacity")
              << ")\n";
    std::cout << "wrote rate_report.json, roots.csv\n";
}

void cmd_fine(const Config& cfg, const std::string& out_dir) {
    const FineLimitReport fine = fine_limit_key_rate(cfg.tree);
    const FineLimitClassification cls = classify_fine_limit(cfg.tree);
    json per_root = json::array();
    const std::vector<RootedSubtree> subs = enumerate_rooted_subtrees(cfg.tree);
    for (std::size_t i = 0; i < subs.size(); ++i) {
        per_root.push_back(json{{"root", cfg.tree.name(subs[i].root)},
                                {"candidate", fine.per_root[i]}});
    }
    json out{
        {"fine_limit", fine.value},
        {"witness_root", cfg.tree.name(fine.witness_root)},
        {"per_root", per_root},
        {"classification", classification_json(cls, cfg.tree)},
    };
    write_text(out_dir, "fine_limit.json", out.dump(2) + "\n");
    std::cout << "fine-quantization limit " << fmt(fine.value) << " (root "
              << cfg.tree.name(fine.witness_root) << "), capacity " << fmt(cls.capacity)
              << ", gap " << fmt(cls.gap) << "\n";
    std::cout << "wrote fine_limit.json\n";
}

void cmd_sweep_two_user(double rho, double r_total, int steps, const std::string& out_dir) {
    if (!(std::abs(rho) < 1.0)) throw ConfigError("|rho| must be < 1");
    if (!(r_total > 0.0)) throw ConfigError("total rate must be positive");
    if (steps < 1) throw ConfigError("need at least one sweep step");

    std::string csv = "rq_u,rq_v,rate_uv,rate_vu,total,identity_residual\n";
    double best_total = -1.0;
    double best_rq = 0.0;
    for (int i = 1; i <= steps; ++i) {
        const double rq_u = r_total * i / (steps + 1);
        const double rq_v = r_total - rq_u;
        const double uv = two_user_rate(rho, rq_u, rq_v);
        const double vu = two_user_rate(rho, rq_v, rq_u);
        // Difference of the two directions in the exponent domain has a
        // closed form; track how far floating point drifts from it.
        const double au = std::exp2(2.0 * rq_u);
        const double av = std::exp2(2.0 * rq_v);
        const double lhs = std::exp2(-2.0 * uv) - std::exp2(-2.0 * vu);
        const double rhs = rho * rho * (1.0 / (av * (av - 1.0)) - 1.0 / (au * (au - 1.0)));
        const double residual = std::abs(lhs - rhs);
        const double total = uv + vu;
        if (total > best_total) {
            best_total = total;
            best_rq = rq_u;
        }
        csv += fmt(rq_u) + "," + fmt(rq_v) + "," + fmt(uv) + "," + fmt(vu) + "," +
               fmt(total) + "," + fmt(residual) + "\n";
    }
    write_text(out_dir, "two_user_sweep.csv", csv);
    std::cout << "swept " << steps << " splits of " << fmt(r_total) << " bits at rho "
              << fmt(rho) << "; largest two-way total " << fmt(best_total) << " at rq_u "
              << fmt(best_rq) << "\n";
    std::cout << "wrote two_user_sweep.csv\n";
}

void cmd_simulate(const Config& cfg, const std::string& out_dir) {
    need_rates(cfg, "simulate");
    Rng plan_rng = make_stream(cfg.protocol.seed, 0x504c414eu);
    const BlockPlan plan =
        plan_blocks(cfg.tree, cfg.code_dims, cfg.p, cfg.n, cfg.protocol.delta, plan_rng,
                    plan_options(cfg));

    ProtocolOptions popt;
    popt.trials = cfg.protocol.trials;
    popt.seed = cfg.protocol.seed;
    popt.threads = cfg.protocol.threads;
    popt.keep_transcripts = true;
    const ProtocolResult result = run_protocol(cfg.tree, plan, popt);

    std::string csv =
        "trial,agreement,all_agree,analog_errors,identity_violations,rs_failures,"
        "miscorrections,root_matches_truth,key_bits";
    for (const TerminalPlan& t : plan.terminals) {
        csv += ",comm_bits_" + cfg.tree.name(t.v);
    }
    csv += "\n";
    long long identity_total = 0;
    long long miscorrection_total = 0;
    long long truth_matches = 0;
    for (const TrialResult& t : result.trials) {
        identity_total += t.analog_identity_violations;
        miscorrection_total += t.miscorrections;
        if (t.root_matches_truth) ++truth_matches;
        csv += std::to_string(t.trial) + "," + fmt(t.agreement) + "," +
               (t.all_agree ? "1" : "0") + "," + std::to_string(t.analog_errors) +
               "," + std::to_string(t.analog_identity_violations) + "," +
               std::to_string(t.rs_failures) + "," + std::to_string(t.miscorrections) +
               "," + (t.root_matches_truth ? "1" : "0") + "," +
               fmt(plan.key_bits_per_block);
        for (const TerminalPlan& term : plan.terminals) {
            csv += "," + fmt(term.analog_bits_per_block + term.digital_bits_per_block);
        }
        csv += "\n";
    }
    write_text(out_dir, "trials.csv", csv);

    json members = json::array();
    for (VertexId m : plan.sub.members) members.push_back(cfg.tree.name(m));
    json terminals = json::array();
    for (const TerminalPlan& t : plan.terminals) {
        terminals.push_back(terminal_json(cfg, plan, t));
    }

    json summary{
        {"config",
         json{{"p", plan.p},
              {"n", plan.n},
              {"delta", plan.delta},
              {"n_out", plan.n_out},
              {"k_out", plan.k_out},
              {"root", cfg.tree.name(plan.sub.root)},
              {"members", members},
              {"trials", cfg.protocol.trials},
              {"seed", cfg.protocol.seed}}},
        {"plan",
         json{{"comm_rate", plan.comm_rate},
              {"key_rate", plan.key_rate},
              {"key_bits_per_block", plan.key_bits_per_block},
              {"extractor_rate_target", plan.extractor_rate},
              {"extractor_rows", plan.extractor.rows},
              {"extractor_seed", plan.extractor_seed},
              {"r_ent", plan.r_ent},
              {"r_com", plan.r_com},
              {"r_key", plan.r_key},
              {"rate_spread", plan.rates.alpha},
              {"terminals", terminals}}},
        {"results",
         json{{"mean_agreement", result.mean_agreement},
              {"all_agree_count", result.all_agree_count},
              {"all_agree_ci", json::array({result.all_agree_ci.lo, result.all_agree_ci.hi})},
              {"analog_error_rate", result.analog_error_rate},
              {"rs_failure_rate", result.rs_failure_rate},
              {"identity_violations", identity_total},
              {"miscorrections", miscorrection_total},
              {"root_matches_truth_count", truth_matches}}},
    };

    if (cfg.protocol.trials >= 100) {
        const SecrecyReport sec =
            evaluate_secrecy(plan, result, cfg.evaluate, cfg.protocol.seed);
        summary["secrecy"] = json{
            {"cell_mode", sec.cell_mode},
            {"cells", sec.cells},
            {"key_space_log2", sec.key_space_log2},
            {"distinct_keys", sec.distinct_keys},
            {"chi2_stat", sec.key_uniformity.stat},
            {"chi2_dof", sec.key_uniformity.dof},
            {"chi2_p", sec.key_uniformity.p_value},
            {"key_entropy_plugin", sec.key_entropy_plugin},
            {"key_entropy_mm", sec.key_entropy_mm},
            {"comm_within_closed_form", sec.comm_within_closed_form},
            {"key_within_closed_form", sec.key_within_closed_form},
            {"transcript_mi_diagnostic",
             json{{"mi_bits", sec.transcript_mi.mi_bits},
                  {"p_value", sec.transcript_mi.p_value},
                  {"permutations", sec.transcript_mi.permutations}}},
            {"w_entropy_marginal_diagnostic", sec.w_entropy_marginal},
            {"w_entropy_given_dither_diagnostic", sec.w_entropy_given_dither},
        };
    } else {
        summary["secrecy"] = nullptr;
        summary["secrecy_note"] = "needs at least 100 trials";
    }
    write_text(out_dir, "summary.json", summary.dump(2) + "\n");

    std::cout << "simulated " << cfg.protocol.trials << " trials: mean agreement "
              << fmt(result.mean_agreement) << ", all-agree " << result.all_agree_count
              << "/" << cfg.protocol.trials << "\n";
    std::cout << "comm rate " << fmt(plan.comm_rate) << " bits/sample (closed form "
              << fmt(plan.r_com) << "), key rate " << fmt(plan.key_rate)
              << " (closed form " << fmt(plan.r_key) << ")\n";
    std::cout << "wrote trials.csv, summary.json\n";
}

void cmd_lattice_diag(const Config& cfg, const std::string& out_dir) {
    need_rates(cfg, "lattice-diag");
    Rng plan_rng = make_stream(cfg.protocol.seed, 0x504c414eu);
    const BlockPlan plan =
        plan_blocks(cfg.tree, cfg.code_dims, cfg.p, cfg.n, cfg.protocol.delta, plan_rng,
                    plan_options(cfg));
    json terminals = json::array();
    for (const TerminalPlan& t : plan.terminals) {
        json entry = terminal_json(cfg, plan, t);
        entry["volume"] = t.chain.fine.volume();
        entry["volume_lu_check"] =
            std::abs(gram_volume(t.chain.fine) - t.chain.fine.volume()) /
            t.chain.fine.volume();
        entry["coarse_exponent"] = poltyrev_exponent(
            t.chain.coarse.volume_to_2_over_n() / (1.0 + t.chain.sigma2));
        entry["code_seed"] = t.chain.code_seed;
        entry["code"] = t.chain.fine.code();
        terminals.push_back(std::move(entry));
    }
    json out{
        {"p", plan.p},
        {"n", plan.n},
        {"delta", plan.delta},
        {"root", cfg.tree.name(plan.sub.root)},
        {"terminals", terminals},
    };
    write_text(out_dir, "lattice_diag.json", out.dump(2) + "\n");
    std::cout << "built " << plan.terminals.size() << " lattice chains (n " << plan.n
              << ", p " << plan.p << ")\n";
    std::cout << "wrote lattice_diag.json\n";
}

}  // namespace treekey
