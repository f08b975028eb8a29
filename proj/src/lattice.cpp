#include "treekey/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <sstream>

#include "treekey/errors.hpp"

namespace treekey {

namespace {

constexpr double kTwoPiE = 2.0 * std::numbers::pi * std::numbers::e;

bool is_prime(int p) {
    if (p < 2) return false;
    for (int d = 2; d * d <= p; ++d) {
        if (p % d == 0) return false;
    }
    return true;
}

int mod_p(long long a, int p) {
    int r = static_cast<int>(a % p);
    return r < 0 ? r + p : r;
}

int inv_mod(int a, int p) {
    // p prime, a != 0 mod p
    int result = 1;
    int base = mod_p(a, p);
    int e = p - 2;
    while (e > 0) {
        if (e & 1) result = static_cast<int>((1ll * result * base) % p);
        base = static_cast<int>((1ll * base * base) % p);
        e >>= 1;
    }
    return result;
}

// Reduced row echelon form in place; returns pivot columns.
std::vector<int> rref(std::vector<std::vector<int>>& rows, int n, int p) {
    std::vector<int> pivots;
    std::size_t r = 0;
    for (int col = 0; col < n && r < rows.size(); ++col) {
        std::size_t sel = r;
        while (sel < rows.size() && rows[sel][col] == 0) ++sel;
        if (sel == rows.size()) continue;
        std::swap(rows[r], rows[sel]);
        const int inv = inv_mod(rows[r][col], p);
        for (int j = 0; j < n; ++j) rows[r][j] = mod_p(1ll * rows[r][j] * inv, p);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i == r || rows[i][col] == 0) continue;
            const int f = rows[i][col];
            for (int j = 0; j < n; ++j) {
                rows[i][j] = mod_p(rows[i][j] - 1ll * f * rows[r][j], p);
            }
        }
        pivots.push_back(col);
        ++r;
    }
    return pivots;
}

// Round half down: on an exact tie take the smaller integer, matching the
// coset-then-coordinate tie order of the exhaustive search.
long long round_half_down(double t) {
    return static_cast<long long>(std::ceil(t - 0.5));
}

}  // namespace

double Lattice::volume() const {
    return std::pow(gamma_, n_) * std::pow(static_cast<double>(p_), n_ - k());
}

double Lattice::volume_to_2_over_n() const {
    return gamma_ * gamma_ *
           std::pow(static_cast<double>(p_), 2.0 * (n_ - k()) / n_);
}

Lattice make_lattice(int n, int p, const std::vector<std::vector<int>>& code_rows,
                     double gamma) {
    if (n < 1) throw DimensionMismatch("lattice dimension must be >= 1");
    if (!is_prime(p)) throw Error("lattice modulus must be prime, got " + std::to_string(p));
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error("lattice scale must be positive");

    Lattice lat;
    lat.n_ = n;
    lat.p_ = p;
    lat.gamma_ = gamma;
    lat.code_ = code_rows;
    for (auto& row : lat.code_) {
        if (static_cast<int>(row.size()) != n) {
            throw DimensionMismatch("generator row length does not match dimension");
        }
        for (int& e : row) e = mod_p(e, p);
    }
    const int k = static_cast<int>(lat.code_.size());
    if (k > n) throw DimensionMismatch("code dimension exceeds lattice dimension");
    lat.pivots_ = rref(lat.code_, n, p);
    if (static_cast<int>(lat.pivots_.size()) != k) {
        throw Error("generator rows are linearly dependent");
    }

    double cosets = std::pow(static_cast<double>(p), k);
    if (cosets > static_cast<double>(1 << 20)) {
        throw Error("p^k too large for exhaustive decoding");
    }

    // Basis: the embedded code rows plus p*e_j on the non-pivot columns.
    lat.basis_ = lat.code_;
    std::vector<bool> is_pivot(n, false);
    for (int c : lat.pivots_) is_pivot[c] = true;
    for (int j = 0; j < n; ++j) {
        if (is_pivot[j]) continue;
        std::vector<int> row(n, 0);
        row[j] = p;
        lat.basis_.push_back(std::move(row));
    }
    return lat;
}

namespace {

// Exhaustive decode in units of gamma; returns integer coordinates.
std::vector<long long> decode_units(const Lattice& lat, const std::vector<double>& xg) {
    const int n = lat.n();
    const int p = lat.p();
    const int k = lat.k();

    std::vector<long long> best(n, 0);

    if (k == 0) {
        for (int j = 0; j < n; ++j) best[j] = p * round_half_down(xg[j] / p);
        return best;
    }
    if (k == n) {
        // gamma Z^n: per-coordinate nearest integer; an exact tie goes to the
        // candidate with the smaller mod-p digit, which is what the coset
        // enumeration would pick.
        for (int j = 0; j < n; ++j) {
            const double lo = std::floor(xg[j]);
            const double frac = xg[j] - lo;
            const long long l = static_cast<long long>(lo);
            if (frac > 0.5 + 1e-12) {
                best[j] = l + 1;
            } else if (frac < 0.5 - 1e-12) {
                best[j] = l;
            } else {
                best[j] = mod_p(l, p) <= mod_p(l + 1, p) ? l : l + 1;
            }
        }
        return best;
    }

    const auto& rows = lat.code();
    std::vector<int> digits(k, 0);
    std::vector<int> cw(n, 0);
    std::vector<long long> cand(n, 0);
    double best_d2 = std::numeric_limits<double>::max();
    bool more = true;
    while (more) {
        double d2 = 0.0;
        for (int j = 0; j < n; ++j) {
            const double t = (xg[j] - cw[j]) / p;
            cand[j] = cw[j] + static_cast<long long>(p) * round_half_down(t);
            const double diff = xg[j] - cand[j];
            d2 += diff * diff;
        }
        // Enumeration is ascending in the lexicographic coset index, so a tie
        // keeps the earlier candidate.
        if (d2 < best_d2 - 1e-9 * (1.0 + best_d2)) {
            best_d2 = d2;
            best = cand;
        }
        // Odometer step, digit 0 most significant, and incremental codeword.
        int i = k - 1;
        for (; i >= 0; --i) {
            if (digits[i] + 1 < p) {
                digits[i]++;
                for (int j = 0; j < n; ++j) cw[j] = mod_p(cw[j] + rows[i][j], p);
                break;
            }
            digits[i] = 0;
            for (int j = 0; j < n; ++j) {
                cw[j] = mod_p(cw[j] - 1ll * (p - 1) * rows[i][j], p);
            }
        }
        more = i >= 0;
    }
    return best;
}

}  // namespace

std::vector<long long> nearest_coords(const Lattice& lat, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != lat.n()) {
        throw DimensionMismatch("point dimension does not match lattice");
    }
    std::vector<double> xg(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) xg[j] = x[j] / lat.gamma();
    return decode_units(lat, xg);
}

std::vector<double> nearest_point(const Lattice& lat, const std::vector<double>& x) {
    std::vector<long long> m = nearest_coords(lat, x);
    std::vector<double> out(m.size());
    for (std::size_t j = 0; j < m.size(); ++j) out[j] = lat.gamma() * static_cast<double>(m[j]);
    return out;
}

std::vector<double> mod_lattice(const Lattice& lat, const std::vector<double>& x) {
    std::vector<long long> m = nearest_coords(lat, x);
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        out[j] = x[j] - lat.gamma() * static_cast<double>(m[j]);
    }
    return out;
}

std::vector<double> sample_dither(const Lattice& lat, Rng& rng) {
    const int n = lat.n();
    std::vector<double> u(n);
    for (int i = 0; i < n; ++i) u[i] = uniform01(rng);
    std::vector<double> x(n, 0.0);
    const auto& basis = lat.basis();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) x[j] += u[i] * basis[i][j];
    }
    for (int j = 0; j < n; ++j) x[j] *= lat.gamma();
    return mod_lattice(lat, x);
}

SecondMoment second_moment(const Lattice& lat, int samples, Rng& rng) {
    if (samples < 10000) throw Error("second_moment needs at least 1e4 samples");
    double mean = 0.0;
    double m2 = 0.0;
    double max_norm2 = 0.0;
    for (int t = 0; t < samples; ++t) {
        std::vector<double> d = sample_dither(lat, rng);
        double norm2 = 0.0;
        for (double v : d) norm2 += v * v;
        max_norm2 = std::max(max_norm2, norm2);
        const double s = norm2 / lat.n();
        const double delta = s - mean;
        mean += delta / (t + 1);
        m2 += delta * (s - mean);
    }
    SecondMoment out;
    out.per_dim = mean;
    out.std_error = std::sqrt(m2 / (static_cast<double>(samples) - 1.0) / samples);
    out.max_norm = std::sqrt(max_norm2);
    return out;
}

double gram_volume(const Lattice& lat) {
    const int n = lat.n();
    std::vector<std::vector<double>> a(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) a[i][j] = lat.gamma() * lat.basis()[i][j];
    }
    double det = 1.0;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        }
        if (a[piv][col] == 0.0) return 0.0;
        if (piv != col) {
            std::swap(a[piv], a[col]);
            det = -det;
        }
        det *= a[col][col];
        for (int r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (int j = col; j < n; ++j) a[r][j] -= f * a[col][j];
        }
    }
    return std::abs(det);
}

double poltyrev_exponent(double mu) {
    if (!(mu >= kTwoPiE * (1.0 - 1e-12))) {
        throw BelowThreshold("decoding exponent undefined below 2*pi*e");
    }
    if (mu >= 4.0 * kTwoPiE) return mu / (8.0 * kTwoPiE);
    if (mu >= 2.0 * kTwoPiE) return 0.5 * std::log(mu / (8.0 * std::numbers::pi));
    const double e = mu / (2.0 * kTwoPiE) - 0.5 * std::log(mu / (2.0 * std::numbers::pi));
    return std::max(0.0, e);
}

namespace {

double neighbor_target(const std::vector<NeighborSpec>& neighbors, double own_sigma2) {
    double worst = 0.0;
    for (const NeighborSpec& nb : neighbors) {
        if (!(std::abs(nb.rho) < 1.0)) throw BadCorrelation("|rho| must be < 1");
        const double s_u = nb.sigma2 >= 0.0 ? nb.sigma2 : own_sigma2;
        const double rho2 = nb.rho * nb.rho;
        worst = std::max(worst, 1.0 - rho2 + own_sigma2 + rho2 * s_u);
    }
    return worst;
}

std::vector<std::vector<int>> middle_rows(const Lattice& fine, int k_a) {
    return {fine.code().begin(), fine.code().begin() + k_a};
}

}  // namespace

double middle_margin(const LatticeChain& chain, const std::vector<NeighborSpec>& neighbors) {
    if (neighbors.empty()) return std::numeric_limits<double>::infinity();
    const double target =
        kTwoPiE * neighbor_target(neighbors, chain.sigma2) * (1.0 + chain.delta);
    return chain.middle.volume_to_2_over_n() / target;
}

std::optional<int> best_middle_dim(const LatticeChain& chain,
                                   const std::vector<NeighborSpec>& neighbors) {
    if (neighbors.empty()) return chain.k_v;
    const double target =
        kTwoPiE * neighbor_target(neighbors, chain.sigma2) * (1.0 + chain.delta);
    for (int k_a = chain.k_v; k_a >= 0; --k_a) {
        const double vol_a = chain.fine.gamma() * chain.fine.gamma() *
                             std::pow(static_cast<double>(chain.fine.p()),
                                      2.0 * (chain.fine.n() - k_a) / chain.fine.n());
        if (vol_a / target >= 1.0 - 1e-12) return k_a;
    }
    return std::nullopt;
}

void set_middle_dim(LatticeChain& chain, int k_a,
                    const std::vector<NeighborSpec>& neighbors) {
    if (k_a < 0 || k_a > chain.k_v) throw Error("middle code dimension out of range");
    chain.k_a = k_a;
    chain.middle = make_lattice(chain.fine.n(), chain.fine.p(), middle_rows(chain.fine, k_a),
                                chain.fine.gamma());
    chain.margin_middle = middle_margin(chain, neighbors);
}

LatticeChain build_chain(int n, int p, int k_v, int k_a,
                         const std::vector<NeighborSpec>& neighbors, double rq_target,
                         double delta, Rng& rng, const ChainOptions& opt) {
    if (k_v < 1 || k_v > n) throw InfeasibleChain("need 1 <= k_v <= n");
    if (k_a != kAutoMiddle && (k_a < 0 || k_a > k_v)) {
        throw InfeasibleChain("need 0 <= k_a <= k_v");
    }
    if (!(delta > 0.0)) throw Error("delta must be positive");
    if (rq_target > 0.0) {
        const double implied = k_v * std::log2(static_cast<double>(p)) / n;
        if (std::abs(implied - rq_target) > 1e-9) {
            throw NonIntegralRate("rate target does not equal k_v * log2(p) / n");
        }
    }

    std::string last_reason = "no attempt made";
    for (int attempt = 0; attempt <= opt.retries; ++attempt) {
        // Uniform full-rank code via rejection.
        std::vector<std::vector<int>> rows;
        const std::uint64_t code_seed = rng();
        Rng code_rng = make_stream(code_seed, 0);
        bool ok = false;
        for (int tries = 0; tries < 1000 && !ok; ++tries) {
            rows.assign(k_v, std::vector<int>(n));
            for (auto& row : rows) {
                for (int j = 0; j < n; ++j) {
                    row[j] = static_cast<int>(uniform_below(code_rng, p));
                }
            }
            auto reduced = rows;
            ok = static_cast<int>(rref(reduced, n, p).size()) == k_v;
        }
        if (!ok) {
            last_reason = "could not draw a full-rank code";
            continue;
        }

        Lattice unit = make_lattice(n, p, rows, 1.0);
        SecondMoment sm = second_moment(unit, opt.sigma_samples, rng);

        // Coarse-cell volume pinned to 2*pi*e(1+sigma2)(1+delta) with the
        // measured cell moment: solve for the scale.
        const double pb = std::pow(static_cast<double>(p), 2.0);  // vol_b^{2/n} at gamma=1
        const double denom = pb - kTwoPiE * sm.per_dim * (1.0 + delta);
        if (denom <= 0.0) {
            last_reason = "coarse-cell equation has no positive scale at this rate";
            continue;
        }
        const double gamma2 = kTwoPiE * (1.0 + delta) / denom;
        const double gamma = std::sqrt(gamma2);

        LatticeChain chain;
        chain.fine = make_lattice(n, p, unit.code(), gamma);
        chain.coarse = make_lattice(n, p, {}, gamma);
        chain.k_v = k_v;
        chain.delta = delta;
        chain.sigma2 = gamma2 * sm.per_dim;
        chain.sigma2_stderr = gamma2 * sm.std_error;
        chain.code_seed = code_seed;
        chain.margin_coarse = chain.coarse.volume_to_2_over_n() /
                              (kTwoPiE * (1.0 + chain.sigma2) * (1.0 + delta));
        const double vol_unit = std::pow(static_cast<double>(p), 2.0 * (n - k_v) / n);
        chain.g2pe = kTwoPiE * sm.per_dim / vol_unit;
        // Effective radius of a ball with the cell volume, via log-gamma.
        const double log_vn = 0.5 * n * std::log(std::numbers::pi) - std::lgamma(0.5 * n + 1.0);
        const double r_eff = std::exp((0.5 * n * std::log(vol_unit) - log_vn) / n);
        chain.cov_eff = sm.max_norm / r_eff;

        int chosen = k_a;
        if (k_a == kAutoMiddle) {
            std::optional<int> best = best_middle_dim(chain, neighbors);
            if (!best) {
                last_reason = "no middle code dimension satisfies the volume constraint";
                continue;
            }
            chosen = *best;
        }
        set_middle_dim(chain, chosen, neighbors);
        if (chain.margin_middle < 1.0 - 1e-12) {
            std::ostringstream os;
            os << "middle-cell volume constraint fails at k_a = " << chosen
               << " (margin " << chain.margin_middle << ")";
            last_reason = os.str();
            continue;
        }
        return chain;
    }
    throw InfeasibleChain("chain construction failed after retries: " + last_reason);
}

std::vector<int> coset_index(const LatticeChain& chain, const std::vector<double>& y) {
    const Lattice& fine = chain.fine;
    const int n = fine.n();
    const int p = fine.p();
    if (static_cast<int>(y.size()) != n) {
        throw DimensionMismatch("point dimension does not match lattice");
    }
    std::vector<long long> m(n);
    for (int j = 0; j < n; ++j) {
        const double t = y[j] / fine.gamma();
        m[j] = std::llround(t);
        if (std::abs(t - static_cast<double>(m[j])) > 1e-6) {
            throw NotInFundamentalCell("not a fine-lattice point");
        }
    }
    // Must already be the canonical representative of its coarse coset.
    for (long long c : nearest_coords(chain.coarse, y)) {
        if (c != 0) throw NotInFundamentalCell("point lies outside the coarse cell");
    }
    std::vector<int> cw(n);
    for (int j = 0; j < n; ++j) cw[j] = mod_p(m[j], p);
    // Rows are in reduced echelon form: coordinates sit on the pivot columns.
    std::vector<int> digits(chain.k_v);
    for (int i = 0; i < chain.k_v; ++i) digits[i] = cw[fine.pivot_columns()[i]];
    std::vector<int> check(n, 0);
    for (int i = 0; i < chain.k_v; ++i) {
        for (int j = 0; j < n; ++j) {
            check[j] = mod_p(check[j] + 1ll * digits[i] * fine.code()[i][j], p);
        }
    }
    if (check != cw) throw NotInFundamentalCell("residue is not a codeword");
    return digits;
}

std::vector<double> index_to_point(const LatticeChain& chain, const std::vector<int>& digits) {
    const Lattice& fine = chain.fine;
    if (static_cast<int>(digits.size()) != chain.k_v) {
        throw DimensionMismatch("index length does not match the code dimension");
    }
    const int n = fine.n();
    const int p = fine.p();
    std::vector<double> x(n, 0.0);
    for (int i = 0; i < chain.k_v; ++i) {
        const int d = mod_p(digits[i], p);
        for (int j = 0; j < n; ++j) {
            x[j] += fine.gamma() * static_cast<double>(d * fine.code()[i][j]);
        }
    }
    return mod_lattice(chain.coarse, x);
}

}  // namespace treekey
