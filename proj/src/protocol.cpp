#include "treekey/protocol.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <mutex>
#include <thread>

#include "treekey/errors.hpp"

namespace treekey {

namespace {

// Streams per trial: one source stream plus one dither stream per terminal.
constexpr std::uint64_t kRolesPerTrial = 64;

double log2p(int p) { return std::log2(static_cast<double>(p)); }

std::vector<std::vector<double>> slice_samples(const std::vector<double>& x, int n,
                                               int count) {
    std::vector<std::vector<double>> out(count);
    for (int s = 0; s < count; ++s) {
        out[s].assign(x.begin() + static_cast<std::size_t>(s) * n,
                      x.begin() + static_cast<std::size_t>(s + 1) * n);
    }
    return out;
}

struct TerminalTrialData {
    std::vector<std::vector<double>> dither;
    std::vector<std::vector<double>> y;  // dithered reconstruction, not a lattice point
    std::vector<std::vector<double>> w;  // analog broadcast
    std::vector<std::uint32_t> symbols;  // index of [y + d] mod coarse, the digital view
};

TerminalTrialData quantize_terminal(const LatticeChain& chain, const FieldSpec& field,
                                    const std::vector<std::vector<double>>& x, Rng& drng) {
    const int count = static_cast<int>(x.size());
    const int n = chain.fine.n();
    TerminalTrialData out;
    out.dither.resize(count);
    out.y.resize(count);
    out.w.resize(count);
    out.symbols.resize(count);
    std::vector<double> shifted(n);
    for (int s = 0; s < count; ++s) {
        out.dither[s] = sample_dither(chain.fine, drng);
        for (int j = 0; j < n; ++j) shifted[j] = x[s][j] + out.dither[s][j];
        const std::vector<double> q = nearest_point(chain.fine, shifted);
        for (int j = 0; j < n; ++j) shifted[j] = q[j] - out.dither[s][j];
        out.y[s] = mod_lattice(chain.coarse, shifted);
        out.w[s] = mod_lattice(chain.middle, out.y[s]);
        out.symbols[s] = field.from_digits(coset_index(chain, mod_lattice(chain.coarse, q)));
    }
    return out;
}

struct HopCounters {
    long long errors = 0;
    long long identity_violations = 0;
};

// One estimation hop: the estimator's sequence z times rho, snapped to the
// target's analog coset. An error is a block whose estimated point misses the
// true quantized point y; when the middle code dimension is 0 the miss sits in
// a coarse coset, so the recovered symbol can still be right. Also evaluates
// the direct form around the true y to confirm the two forms agree.
std::vector<std::uint32_t> estimate_hop(const LatticeChain& chain, const FieldSpec& field,
                                        double rho,
                                        const std::vector<std::vector<double>>& z,
                                        const TerminalTrialData& target,
                                        HopCounters& counters) {
    const int count = static_cast<int>(target.symbols.size());
    const int n = chain.fine.n();
    const double tol = 1e-6 * chain.fine.gamma();
    std::vector<std::uint32_t> est(count);
    std::vector<double> zv(n);
    std::vector<double> diff(n);
    std::vector<double> plus_d(n);
    for (int s = 0; s < count; ++s) {
        for (int j = 0; j < n; ++j) zv[j] = rho * z[s][j];

        for (int j = 0; j < n; ++j) diff[j] = zv[j] - target.w[s][j];
        const std::vector<double> qa = nearest_point(chain.middle, diff);

        for (int j = 0; j < n; ++j) diff[j] = zv[j] - target.y[s][j];
        const std::vector<double> qb = nearest_point(chain.middle, diff);

        bool mismatch = false;
        bool missed = false;
        for (int j = 0; j < n; ++j) {
            const double broadcast_form = target.w[s][j] + qa[j];
            const double direct_form = target.y[s][j] + qb[j];
            if (std::abs(broadcast_form - direct_form) > tol) mismatch = true;
            if (std::abs(broadcast_form - target.y[s][j]) > tol) missed = true;
        }
        if (mismatch) counters.identity_violations++;
        if (missed) counters.errors++;

        for (int j = 0; j < n; ++j) plus_d[j] = target.w[s][j] + qa[j] + target.dither[s][j];
        est[s] = field.from_digits(
            coset_index(chain, mod_lattice(chain.coarse, plus_d)));
    }
    return est;
}

std::map<VertexId, LatticeChain> build_member_chains(
    const CorrelatedTree& tree, const RootedSubtree& sub,
    const std::map<VertexId, int>& code_dims, int p, int n, double delta, Rng& rng,
    const ChainOptions& copt, const std::optional<int>& force_middle) {
    std::map<VertexId, LatticeChain> chains;
    auto specs_for = [&](VertexId v) {
        std::vector<NeighborSpec> specs;
        for (VertexId u : sub.tree_neighbors.at(v)) {
            NeighborSpec nb;
            nb.rho = tree.rho(u, v);
            if (auto it = chains.find(u); it != chains.end()) {
                nb.sigma2 = it->second.sigma2;
            } else {
                nb.sigma2 = sub.is_member(u) ? -1.0 : 0.0;
            }
            specs.push_back(nb);
        }
        return specs;
    };

    // First pass: members without a built neighbor use their own cell moment
    // as a stand-in.
    for (VertexId v : sub.members) {
        const int k_v = code_dims.at(v);
        const double rq = k_v * log2p(p) / n;
        chains.emplace(v, build_chain(n, p, k_v,
                                      force_middle ? *force_middle : kAutoMiddle,
                                      specs_for(v), rq, delta, rng, copt));
    }
    // Second pass: every member now has a measured moment, so the middle
    // dimension and margin are final.
    for (VertexId v : sub.members) {
        LatticeChain& chain = chains.at(v);
        const std::vector<NeighborSpec> specs = specs_for(v);
        int k_a = chain.k_a;
        if (!force_middle) {
            std::optional<int> best = best_middle_dim(chain, specs);
            if (!best) {
                throw InfeasibleChain("no feasible middle code dimension for vertex " +
                                      std::to_string(v));
            }
            k_a = *best;
        }
        set_middle_dim(chain, k_a, specs);
        if (chain.margin_middle < 1.0 - 1e-12) {
            throw InfeasibleChain("middle-cell volume constraint fails for vertex " +
                                  std::to_string(v));
        }
    }
    return chains;
}

}  // namespace

int rate_to_code_dim(double bits_per_sample, int p, int n) {
    if (!(bits_per_sample > 0.0) || !std::isfinite(bits_per_sample)) {
        throw NonIntegralRate("rate must be positive and finite");
    }
    const double exact = bits_per_sample * n / log2p(p);
    const int k = static_cast<int>(std::llround(exact));
    if (k < 1 || k > n || std::abs(k * log2p(p) / n - bits_per_sample) > 1e-9) {
        throw NonIntegralRate("rate is not k * log2(p) / n for an integer k in [1, n]");
    }
    return k;
}

bool BlockPlan::is_terminal(VertexId v) const {
    for (const TerminalPlan& t : terminals) {
        if (t.v == v) return true;
    }
    return false;
}

const TerminalPlan& BlockPlan::terminal(VertexId v) const {
    for (const TerminalPlan& t : terminals) {
        if (t.v == v) return t;
    }
    throw UnknownVertex("vertex " + std::to_string(v) + " is not a terminal");
}

BlockPlan plan_blocks(const CorrelatedTree& tree, const std::map<VertexId, int>& code_dims,
                      int p, int n, double delta, Rng& rng, const PlanOptions& opt) {
    if (n < 1) throw ConfigError("lattice dimension must be >= 1");
    if (!(delta > 0.0 && delta < 0.5)) throw ConfigError("delta must be in (0, 1/2)");
    for (VertexId v : tree.vertices()) {
        auto it = code_dims.find(v);
        if (it == code_dims.end()) {
            throw ConfigError("missing code dimension for vertex " + std::to_string(v));
        }
        if (it->second < 1 || it->second > n) {
            throw ConfigError("code dimension out of [1, n] for vertex " + std::to_string(v));
        }
    }

    RateConstraints rc;
    for (VertexId v : tree.vertices()) rc.rq[v] = code_dims.at(v) * log2p(p) / n;
    RateReport report = key_rate_report(tree, rc);

    const VertexId root = opt.force_root.value_or(report.best().subtree.root);
    const SubtreeRecord* record = nullptr;
    for (const SubtreeRecord& rec : report.records) {
        if (rec.subtree.root == root) {
            record = &rec;
            break;
        }
    }
    if (!record) throw UnknownVertex("requested root is not a tree vertex");
    if (!(record->candidate > 0.0)) {
        throw DegenerateKey("closed-form key rate is not positive at this root");
    }

    BlockPlan plan;
    plan.n = n;
    plan.p = p;
    plan.delta = delta;
    plan.sub = record->subtree;
    plan.rates = report;
    plan.r_ent = record->r_ent;
    plan.r_com = record->r_com;
    plan.r_key = std::max(0.0, record->candidate);

    if (plan.sub.members.size() > kRolesPerTrial - 2) {
        throw Error("too many terminals for the per-trial stream layout");
    }

    long long min_pk = -1;
    for (VertexId v : plan.sub.members) {
        long long pk = 1;
        for (int i = 0; i < code_dims.at(v); ++i) {
            pk *= p;
            if (pk > 2'000'000'000ll) break;
        }
        if (min_pk < 0 || pk < min_pk) min_pk = pk;
    }
    plan.n_out = static_cast<int>(std::min<long long>(min_pk - 1, opt.nout_cap));
    if (plan.n_out < 2) throw InfeasibleError("syndrome block length is below 2 symbols");
    plan.k_out = static_cast<int>(std::floor(plan.n_out * (1.0 - 2.0 * delta) + 1e-9));
    if (plan.k_out < 1) throw InfeasibleError("no message symbols left at this delta");

    std::map<VertexId, LatticeChain> chains = build_member_chains(
        tree, plan.sub, code_dims, p, n, delta, rng, opt.chain, opt.force_middle_dim);

    std::map<int, FieldPtr> fields;
    plan.joint_digits = 0;
    for (VertexId v : plan.sub.members) {
        const int k_v = code_dims.at(v);
        FieldPtr& field = fields[k_v];
        if (!field) field = std::make_shared<const FieldSpec>(make_field(p, k_v));
        TerminalPlan t;
        t.v = v;
        t.k_v = k_v;
        t.chain = chains.at(v);
        t.k_a = t.chain.k_a;
        t.symbol_field = field;
        t.rs = make_rs_code(field, plan.n_out, plan.k_out);
        t.analog_bits_per_block = static_cast<double>(plan.n_out) * (k_v - t.k_a) * log2p(p);
        t.digital_bits_per_block =
            static_cast<double>(plan.n_out - plan.k_out) * k_v * log2p(p);
        t.comm_bits_per_sample = (t.analog_bits_per_block + t.digital_bits_per_block) /
                                 (static_cast<double>(n) * plan.n_out);
        plan.comm_rate += t.comm_bits_per_sample;
        plan.joint_digits += k_v;
        plan.terminals.push_back(std::move(t));
    }

    plan.joint_field = std::make_shared<const FieldSpec>(make_field(p, plan.joint_digits));
    plan.extractor_rate =
        std::max(opt.extractor_floor, plan.r_ent - plan.comm_rate - opt.extractor_margin);
    const double bits_per_block =
        plan.extractor_rate * static_cast<double>(n) * plan.n_out;
    int rows = static_cast<int>(
        std::floor(bits_per_block / (plan.joint_digits * log2p(p)) + 1e-9));
    rows = std::min(rows, plan.n_out);
    if (rows < 1) throw DegenerateKey("key would be shorter than one extractor symbol");
    plan.extractor_seed = rng();
    plan.extractor = build_extractor(plan.joint_field, plan.n_out, rows, plan.extractor_seed);
    plan.key_bits_per_block = rows * plan.joint_digits * log2p(p);
    plan.key_rate = plan.key_bits_per_block / (static_cast<double>(n) * plan.n_out);
    return plan;
}

HopBound hop_error_bound(int n, double rho, const LatticeChain* from_chain,
                         const LatticeChain& to_chain) {
    constexpr double kTwoPiE = 17.079468445347132;  // 2 pi e
    HopBound out;
    const double s_u = from_chain ? from_chain->sigma2 : 0.0;
    if (from_chain) {
        out.mus.push_back(from_chain->coarse.volume_to_2_over_n() /
                          (1.0 + from_chain->sigma2));
    }
    out.mus.push_back(to_chain.coarse.volume_to_2_over_n() / (1.0 + to_chain.sigma2));
    out.mus.push_back(to_chain.middle.volume_to_2_over_n() /
                      (1.0 - rho * rho + to_chain.sigma2 + rho * rho * s_u));
    for (double mu : out.mus) {
        if (mu < kTwoPiE * (1.0 - 1e-12)) {
            out.vacuous = true;
            out.bound += 1.0;
        } else {
            out.bound += std::exp(-static_cast<double>(n) * poltyrev_exponent(mu));
        }
    }
    return out;
}

HopBound hop_error_bound(const CorrelatedTree& tree, const BlockPlan& plan, VertexId from,
                         VertexId to) {
    if (!tree.has_edge(from, to)) throw Error("estimation hop requires a tree edge");
    const LatticeChain* from_chain =
        plan.is_terminal(from) ? &plan.terminal(from).chain : nullptr;
    return hop_error_bound(plan.n, tree.rho(from, to), from_chain,
                           plan.terminal(to).chain);
}

namespace {

TrialResult run_trial(const CorrelatedTree& tree, const BlockPlan& plan,
                      const ProtocolOptions& opt, int trial) {
    TrialResult res;
    res.trial = trial;
    const int n = plan.n;
    const int n_out = plan.n_out;
    const std::uint64_t base = static_cast<std::uint64_t>(trial) * kRolesPerTrial;

    Rng src = make_stream(opt.seed, base);
    SourceBlock blk = sample_block(tree, n * n_out, src);

    std::map<VertexId, std::vector<std::vector<double>>> slices;
    for (VertexId v : tree.vertices()) {
        slices.emplace(v, slice_samples(blk.samples.at(v), n, n_out));
    }

    std::map<VertexId, TerminalTrialData> data;
    std::map<VertexId, std::vector<std::uint32_t>> syndromes;
    for (std::size_t i = 0; i < plan.terminals.size(); ++i) {
        const TerminalPlan& t = plan.terminals[i];
        Rng drng = make_stream(opt.seed, base + 1 + i);
        TerminalTrialData d =
            quantize_terminal(t.chain, *t.symbol_field, slices.at(t.v), drng);
        syndromes.emplace(t.v, coset_decompose(t.rs, d.symbols));
        data.emplace(t.v, std::move(d));
    }

    // Reference key from the true symbols.
    std::vector<std::uint32_t> joint(n_out);
    auto joint_symbols = [&](const std::map<VertexId, std::vector<std::uint32_t>>& per_term) {
        std::vector<int> digits(plan.joint_digits);
        for (int s = 0; s < n_out; ++s) {
            int at = 0;
            for (const TerminalPlan& t : plan.terminals) {
                const std::vector<int> part =
                    t.symbol_field->to_digits(per_term.at(t.v)[s]);
                for (int d : part) digits[at++] = d;
            }
            joint[s] = plan.joint_field->from_digits(digits);
        }
        return plan.extractor.apply(joint);
    };
    std::map<VertexId, std::vector<std::uint32_t>> true_symbols;
    for (const TerminalPlan& t : plan.terminals) true_symbols[t.v] = data.at(t.v).symbols;
    res.true_key = joint_symbols(true_symbols);

    // Every vertex reconstructs every terminal's sequence by walking the tree
    // outward: the first hop uses its own observation, later hops reuse the
    // just-recovered neighbor sequence.
    std::map<VertexId, std::vector<std::uint32_t>> keys;
    for (VertexId u : tree.vertices()) {
        std::map<VertexId, std::vector<std::uint32_t>> recovered;
        std::map<VertexId, const std::vector<std::vector<double>>*> z_of;
        std::map<VertexId, std::vector<std::vector<double>>> z_store;
        if (plan.is_terminal(u)) {
            recovered[u] = data.at(u).symbols;
            z_of[u] = &data.at(u).y;
        } else {
            z_of[u] = &slices.at(u);
        }

        std::deque<VertexId> frontier{u};
        std::map<VertexId, bool> visited{{u, true}};
        while (!frontier.empty()) {
            const VertexId c = frontier.front();
            frontier.pop_front();
            for (VertexId v : tree.neighbors(c)) {
                if (!plan.sub.is_member(v) || visited.count(v)) continue;
                visited[v] = true;
                const TerminalPlan& t = plan.terminal(v);
                HopCounters counters;
                std::vector<std::uint32_t> est =
                    estimate_hop(t.chain, *t.symbol_field, tree.rho(c, v), *z_of.at(c),
                                 data.at(v), counters);
                res.hops++;
                res.symbols_estimated += n_out;
                res.analog_errors += counters.errors;
                res.analog_identity_violations += counters.identity_violations;

                std::optional<std::vector<std::uint32_t>> corrected =
                    sw_correct(t.rs, est, syndromes.at(v));
                if (corrected) {
                    if (*corrected != data.at(v).symbols) res.miscorrections++;
                    recovered[v] = std::move(*corrected);
                } else {
                    res.rs_failures++;
                    recovered[v] = std::move(est);
                }

                if (recovered[v] == data.at(v).symbols) {
                    z_of[v] = &data.at(v).y;
                } else {
                    // Rebuild the estimator input from the wrong symbols:
                    // index to point, undo the public dither.
                    std::vector<std::vector<double>> ys(n_out);
                    const TerminalTrialData& target = data.at(v);
                    for (int s = 0; s < n_out; ++s) {
                        std::vector<double> pt = index_to_point(
                            t.chain, t.symbol_field->to_digits(recovered[v][s]));
                        for (int j = 0; j < n; ++j) pt[j] -= target.dither[s][j];
                        ys[s] = mod_lattice(t.chain.coarse, pt);
                    }
                    z_store[v] = std::move(ys);
                    z_of[v] = &z_store.at(v);
                }
                frontier.push_back(v);
            }
        }
        keys.emplace(u, joint_symbols(recovered));
    }

    res.root_key = keys.at(plan.sub.root);
    res.root_matches_truth = res.root_key == res.true_key;
    long long agreeing = 0;
    for (const auto& [u, key] : keys) {
        if (u == plan.sub.root) continue;
        if (key == res.root_key) ++agreeing;
    }
    const std::size_t others = tree.size() - 1;
    res.agreement = others == 0 ? 1.0 : static_cast<double>(agreeing) / others;
    res.all_agree = agreeing == static_cast<long long>(others);

    if (opt.keep_transcripts) {
        for (const TerminalPlan& t : plan.terminals) {
            TerminalTrialData& d = data.at(t.v);
            TerminalMessages msg;
            msg.dither = std::move(d.dither);
            msg.w = std::move(d.w);
            msg.syndromes = std::move(syndromes.at(t.v));
            res.transcript.emplace(t.v, std::move(msg));
        }
    }
    return res;
}

template <typename Fn>
void run_indexed(int count, int threads, Fn&& body) {
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int t = 0; t < count; ++t) body(t);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            const int t = next.fetch_add(1);
            if (t >= count) return;
            try {
                body(t);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

ProtocolResult run_protocol(const CorrelatedTree& tree, const BlockPlan& plan,
                            const ProtocolOptions& opt) {
    if (opt.trials < 1) throw Error("need at least one trial");
    check_subtree(tree, plan.sub);

    ProtocolResult out;
    out.trials.resize(opt.trials);
    run_indexed(opt.trials, opt.threads,
                [&](int t) { out.trials[t] = run_trial(tree, plan, opt, t); });

    long long symbols = 0;
    long long errors = 0;
    long long hops = 0;
    long long failures = 0;
    for (const TrialResult& res : out.trials) {
        out.mean_agreement += res.agreement;
        if (res.all_agree) out.all_agree_count++;
        symbols += res.symbols_estimated;
        errors += res.analog_errors;
        hops += res.hops;
        failures += res.rs_failures;
    }
    out.mean_agreement /= opt.trials;
    out.all_agree_ci = wilson95(out.all_agree_count, opt.trials);
    out.analog_error_rate =
        symbols == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(symbols);
    out.rs_failure_rate =
        hops == 0 ? 0.0 : static_cast<double>(failures) / static_cast<double>(hops);
    out.comm_rate = plan.comm_rate;
    out.key_rate = plan.key_rate;
    out.key_bits_per_block = plan.key_bits_per_block;
    return out;
}

AnalogProbeResult analog_probe(const CorrelatedTree& tree, const RootedSubtree& sub,
                               const std::map<VertexId, int>& code_dims, int p, int n,
                               double delta, int symbols_per_trial, int trials,
                               std::uint64_t seed, Rng& plan_rng,
                               const ChainOptions& chain_opt) {
    check_subtree(tree, sub);
    if (symbols_per_trial < 1) throw Error("need at least one symbol per trial");
    if (trials < 1) throw Error("need at least one trial");
    if (!(delta > 0.0)) throw Error("delta must be positive");
    if (sub.members.size() > kRolesPerTrial - 2) {
        throw Error("too many terminals for the per-trial stream layout");
    }

    std::map<VertexId, LatticeChain> chains = build_member_chains(
        tree, sub, code_dims, p, n, delta, plan_rng, chain_opt, std::nullopt);
    std::map<int, FieldPtr> fields;
    for (VertexId v : sub.members) {
        FieldPtr& f = fields[code_dims.at(v)];
        if (!f) f = std::make_shared<const FieldSpec>(make_field(p, code_dims.at(v)));
    }

    AnalogProbeResult out;
    for (VertexId v : sub.members) {
        for (VertexId c : tree.neighbors(v)) {
            HopStat hop;
            hop.from = c;
            hop.to = v;
            hop.bound = hop_error_bound(
                n, tree.rho(c, v), sub.is_member(c) ? &chains.at(c) : nullptr,
                chains.at(v));
            out.hops.push_back(std::move(hop));
        }
    }

    for (int t = 0; t < trials; ++t) {
        const std::uint64_t base = static_cast<std::uint64_t>(t) * kRolesPerTrial;
        Rng src = make_stream(seed, base);
        SourceBlock blk = sample_block(tree, n * symbols_per_trial, src);
        std::map<VertexId, std::vector<std::vector<double>>> slices;
        for (VertexId v : tree.vertices()) {
            slices.emplace(v, slice_samples(blk.samples.at(v), n, symbols_per_trial));
        }
        std::map<VertexId, TerminalTrialData> data;
        for (std::size_t i = 0; i < sub.members.size(); ++i) {
            const VertexId v = sub.members[i];
            Rng drng = make_stream(seed, base + 1 + i);
            data.emplace(v, quantize_terminal(chains.at(v), *fields.at(code_dims.at(v)),
                                              slices.at(v), drng));
        }
        for (HopStat& hop : out.hops) {
            const std::vector<std::vector<double>>& z =
                sub.is_member(hop.from) ? data.at(hop.from).y : slices.at(hop.from);
            HopCounters counters;
            estimate_hop(chains.at(hop.to), *fields.at(code_dims.at(hop.to)),
                         tree.rho(hop.from, hop.to), z, data.at(hop.to), counters);
            hop.symbols += symbols_per_trial;
            hop.errors += counters.errors;
            out.identity_violations += counters.identity_violations;
        }
    }
    for (const HopStat& hop : out.hops) {
        out.symbols += hop.symbols;
        out.errors += hop.errors;
    }
    out.error_rate =
        out.symbols == 0 ? 0.0 : static_cast<double>(out.errors) / out.symbols;
    return out;
}

}  // namespace treekey
