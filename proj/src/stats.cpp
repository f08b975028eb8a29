#include "treekey/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "treekey/errors.hpp"

namespace treekey {

namespace {

// Regularized lower incomplete gamma P(a, x) by series expansion; valid for
// x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 1000; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x) by continued fraction; valid for
// x >= a + 1.
double gamma_q_cf(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1e300;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 1000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::abs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

double mi_bits_from_counts(const std::vector<std::vector<long long>>& joint,
                           const std::vector<long long>& mx,
                           const std::vector<long long>& my, long long total) {
    double mi = 0.0;
    for (std::size_t i = 0; i < joint.size(); ++i) {
        for (std::size_t j = 0; j < joint[i].size(); ++j) {
            const long long c = joint[i][j];
            if (c == 0) continue;
            const double pxy = static_cast<double>(c) / total;
            const double px = static_cast<double>(mx[i]) / total;
            const double py = static_cast<double>(my[j]) / total;
            mi += pxy * std::log2(pxy / (px * py));
        }
    }
    return std::max(0.0, mi);
}

}  // namespace

double chi_square_p(double stat, int dof) {
    if (dof < 1) throw Error("chi-square needs at least one degree of freedom");
    if (!(stat >= 0.0)) throw Error("chi-square statistic must be nonnegative");
    if (stat == 0.0) return 1.0;
    const double a = 0.5 * dof;
    const double x = 0.5 * stat;
    if (x < a + 1.0) return clamp01(1.0 - gamma_p_series(a, x));
    return clamp01(gamma_q_cf(a, x));
}

ChiSquare chi_square_uniform(const std::vector<long long>& counts) {
    if (counts.size() < 2) throw Error("uniformity test needs at least two cells");
    long long total = 0;
    for (long long c : counts) {
        if (c < 0) throw Error("negative count");
        total += c;
    }
    if (total == 0) throw Error("uniformity test needs observations");
    const double expected = static_cast<double>(total) / counts.size();
    ChiSquare out;
    for (long long c : counts) {
        const double d = c - expected;
        out.stat += d * d / expected;
    }
    out.dof = static_cast<int>(counts.size()) - 1;
    out.p_value = chi_square_p(out.stat, out.dof);
    return out;
}

ChiSquare chi_square_two_sample(const std::vector<long long>& a,
                                const std::vector<long long>& b) {
    if (a.size() != b.size()) throw DimensionMismatch("histograms have different cell counts");
    long long ta = 0;
    long long tb = 0;
    for (long long c : a) ta += c;
    for (long long c : b) tb += c;
    if (ta == 0 || tb == 0) throw Error("two-sample test needs observations on both sides");
    const double total = static_cast<double>(ta + tb);
    ChiSquare out;
    int cells = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const long long col = a[i] + b[i];
        if (col == 0) continue;
        ++cells;
        const double ea = ta * (col / total);
        const double eb = tb * (col / total);
        const double da = a[i] - ea;
        const double db = b[i] - eb;
        out.stat += da * da / ea + db * db / eb;
    }
    if (cells < 2) throw Error("two-sample test needs at least two occupied cells");
    out.dof = cells - 1;
    out.p_value = chi_square_p(out.stat, out.dof);
    return out;
}

double ks_uniform_p(std::vector<double> values) {
    if (values.empty()) throw Error("empty sample");
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    double d = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = values[i];
        if (v < 0.0 || v > 1.0) throw Error("sample value outside [0, 1]");
        d = std::max(d, std::abs(v - i / n));
        d = std::max(d, std::abs((i + 1) / n - v));
    }
    const double sq = std::sqrt(n);
    const double t = (sq + 0.12 + 0.11 / sq) * d;
    double p = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * t * t);
        p += sign * term;
        if (term < 1e-12) break;
        sign = -sign;
    }
    return clamp01(2.0 * p);
}

Interval wilson95(long long successes, long long trials) {
    if (trials <= 0) throw Error("interval needs trials");
    if (successes < 0 || successes > trials) throw Error("successes out of range");
    const double z = 1.959963984540054;
    const double n = static_cast<double>(trials);
    const double phat = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (phat + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
    return Interval{clamp01(center - half), clamp01(center + half)};
}

double entropy_plugin_bits(const std::vector<long long>& counts) {
    long long total = 0;
    for (long long c : counts) {
        if (c < 0) throw Error("negative count");
        total += c;
    }
    if (total == 0) throw Error("entropy of an empty sample");
    double h = 0.0;
    for (long long c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / total;
        h -= p * std::log2(p);
    }
    return h;
}

double entropy_miller_madow_bits(const std::vector<long long>& counts) {
    long long total = 0;
    long long occupied = 0;
    for (long long c : counts) {
        if (c < 0) throw Error("negative count");
        total += c;
        if (c > 0) ++occupied;
    }
    if (total == 0) throw Error("entropy of an empty sample");
    return entropy_plugin_bits(counts) +
           static_cast<double>(occupied - 1) / (2.0 * total * std::log(2.0));
}

PermutationMI mutual_information_perm(const std::vector<int>& x, const std::vector<int>& y,
                                      int permutations, Rng& rng) {
    if (x.size() != y.size()) throw DimensionMismatch("label sequences differ in length");
    if (x.empty()) throw Error("empty sample");
    if (permutations < 1) throw Error("need at least one permutation");

    // Compact the label alphabets.
    std::map<int, int> xs;
    std::map<int, int> ys;
    for (int v : x) xs.emplace(v, 0);
    for (int v : y) ys.emplace(v, 0);
    int next = 0;
    for (auto& kv : xs) kv.second = next++;
    next = 0;
    for (auto& kv : ys) kv.second = next++;

    std::vector<int> xi(x.size());
    std::vector<int> yi(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) xi[i] = xs[x[i]];
    for (std::size_t i = 0; i < y.size(); ++i) yi[i] = ys[y[i]];

    const long long total = static_cast<long long>(x.size());
    const std::size_t nx = xs.size();
    const std::size_t ny = ys.size();
    std::vector<long long> mx(nx, 0);
    std::vector<long long> my(ny, 0);
    for (int v : xi) mx[v]++;
    for (int v : yi) my[v]++;

    auto joint_of = [&](const std::vector<int>& yy) {
        std::vector<std::vector<long long>> joint(nx, std::vector<long long>(ny, 0));
        for (std::size_t i = 0; i < xi.size(); ++i) joint[xi[i]][yy[i]]++;
        return joint;
    };

    PermutationMI out;
    out.permutations = permutations;
    out.mi_bits = mi_bits_from_counts(joint_of(yi), mx, my, total);

    int at_least = 0;
    std::vector<int> shuffled = yi;
    for (int perm = 0; perm < permutations; ++perm) {
        for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_below(rng, i + 1));
            std::swap(shuffled[i], shuffled[j]);
        }
        if (mi_bits_from_counts(joint_of(shuffled), mx, my, total) >= out.mi_bits) {
            ++at_least;
        }
    }
    out.p_value = static_cast<double>(1 + at_least) / (permutations + 1);
    return out;
}

}  // namespace treekey
