#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "treekey/errors.hpp"
#include "treekey/lattice.hpp"
#include "treekey/rng.hpp"

using namespace treekey;
using doctest::Approx;

namespace {

constexpr double kTwoPiE = 2.0 * std::numbers::pi * std::numbers::e;

double dist2(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return s;
}

// Exhaustive nearest point: walk every coset, round per coordinate. Only the
// distance is compared against the library (tie-breaking is its own test).
double brute_best_dist2(const Lattice& lat, const std::vector<double>& x) {
    const int n = lat.n(), p = lat.p(), k = lat.k();
    long long count = 1;
    for (int i = 0; i < k; ++i) count *= p;
    double best = 1e300;
    for (long long idx = 0; idx < count; ++idx) {
        long long rem = idx;
        std::vector<int> dig(k);
        for (int i = k - 1; i >= 0; --i) { dig[i] = static_cast<int>(rem % p); rem /= p; }
        double d2 = 0.0;
        for (int j = 0; j < n; ++j) {
            long long cw = 0;
            for (int i = 0; i < k; ++i) cw += 1ll * dig[i] * lat.code()[i][j];
            cw %= p;
            const double g = x[j] / lat.gamma();
            const double m = std::floor((g - cw) / p + 0.5);
            const double cand = lat.gamma() * (cw + p * m);
            d2 += (x[j] - cand) * (x[j] - cand);
        }
        best = std::min(best, d2);
    }
    return best;
}

std::vector<double> random_point(Rng& rng, int n, double radius) {
    std::vector<double> x(n);
    for (auto& v : x) {
        v = radius * (static_cast<double>(uniform_below(rng, 1u << 30)) / (1u << 29) - 1.0);
    }
    return x;
}

}  // namespace

TEST_SUITE_BEGIN("lattice");

TEST_CASE("make_lattice validates its inputs") {
    CHECK_THROWS(make_lattice(3, 4, {}, 1.0));                    // p not prime
    CHECK_THROWS(make_lattice(3, 2, {{1, 0, 1}, {1, 0, 1}}, 1.0));  // rank deficient
    CHECK_THROWS(make_lattice(2, 2, {{1, 0}}, 0.0));              // bad scale
    std::vector<std::vector<int>> eye21(21, std::vector<int>(21, 0));
    for (int i = 0; i < 21; ++i) eye21[i][i] = 1;
    CHECK_THROWS(make_lattice(21, 2, eye21, 1.0));                // p^k enumeration guard
    Lattice ok = make_lattice(2, 3, {{2, 1}}, 0.5);
    CHECK(ok.k() == 1);
    CHECK(ok.code()[0] == std::vector<int>{1, 2});  // rescaled to pivot 1
}

TEST_CASE("row reduction produces echelon generators") {
    Lattice lat = make_lattice(4, 5, {{2, 4, 1, 3}, {1, 2, 3, 0}}, 1.0);
    REQUIRE(lat.k() == 2);
    const auto& rows = lat.code();
    const auto& piv = lat.pivot_columns();
    REQUIRE(piv.size() == 2);
    for (int i = 0; i < 2; ++i) {
        CHECK(rows[i][piv[i]] == 1);
        for (int l = 0; l < 2; ++l) {
            if (l != i) CHECK(rows[l][piv[i]] == 0);
        }
    }
    CHECK(lat.basis().size() == 4);
}

TEST_CASE("volume matches the determinant of the basis") {
    Rng rng = make_stream(55, 0);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 2 + static_cast<int>(uniform_below(rng, 5));
        const int p = (rep % 2 == 0) ? 3 : 5;
        const int k = static_cast<int>(uniform_below(rng, n + 1));
        std::vector<std::vector<int>> rows;
        Lattice lat = make_lattice(1, 2, {}, 1.0);
        for (int tries = 0;; ++tries) {
            REQUIRE(tries < 200);
            rows.assign(k, std::vector<int>(n));
            for (auto& r : rows) {
                for (auto& c : r) c = static_cast<int>(uniform_below(rng, p));
            }
            try {
                lat = make_lattice(n, p, rows, 0.75);
                break;
            } catch (const Error&) {
                continue;  // rank deficient draw
            }
        }
        CHECK(gram_volume(lat) == Approx(lat.volume()).epsilon(1e-9));
        CHECK(lat.volume() ==
              Approx(std::pow(0.75, n) * std::pow(p, n - k)).epsilon(1e-12));
        CHECK(lat.volume_to_2_over_n() ==
              Approx(std::pow(lat.volume(), 2.0 / n)).epsilon(1e-12));
    }
}

TEST_CASE("nearest point agrees with exhaustive search") {
    Rng rng = make_stream(77, 0);
    for (int rep = 0; rep < 30; ++rep) {
        const int n = 2 + static_cast<int>(uniform_below(rng, 4));
        const int p = (rep % 3 == 0) ? 2 : ((rep % 3 == 1) ? 3 : 5);
        const int k = 1 + static_cast<int>(uniform_below(rng, std::min(n, 3)));
        std::vector<std::vector<int>> rows(k, std::vector<int>(n));
        Lattice lat = make_lattice(1, 2, {}, 1.0);
        for (int tries = 0;; ++tries) {
            REQUIRE(tries < 200);
            for (auto& r : rows) {
                for (auto& c : r) c = static_cast<int>(uniform_below(rng, p));
            }
            try {
                lat = make_lattice(n, p, rows, 0.6 + 0.1 * (rep % 4));
                break;
            } catch (const Error&) {
                continue;
            }
        }
        for (int pt = 0; pt < 40; ++pt) {
            auto x = random_point(rng, n, 2.5 * p);
            auto got = nearest_point(lat, x);
            CHECK(dist2(x, got) == Approx(brute_best_dist2(lat, x)).epsilon(1e-9));
        }
    }
}

TEST_CASE("degenerate code dimensions take the closed-form decoders") {
    Rng rng = make_stream(78, 0);
    Lattice coarse = make_lattice(3, 5, {}, 0.8);  // 4 Z^3
    Lattice fine = make_lattice(3, 5, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, 0.8);
    for (int pt = 0; pt < 200; ++pt) {
        auto x = random_point(rng, 3, 9.0);
        CHECK(dist2(x, nearest_point(coarse, x)) ==
              Approx(brute_best_dist2(coarse, x)).epsilon(1e-9));
        CHECK(dist2(x, nearest_point(fine, x)) ==
              Approx(brute_best_dist2(fine, x)).epsilon(1e-9));
    }
    std::vector<double> half{2.0, 2.0, 2.0};  // exact tie in 4Z^3
    auto q = nearest_point(coarse, half);
    CHECK(q == std::vector<double>{0.0, 0.0, 0.0});  // half rounds down
}

TEST_CASE("mod reduction lands in the Voronoi cell and is shift invariant") {
    Rng rng = make_stream(91, 0);
    Lattice lat = make_lattice(4, 3, {{1, 0, 2, 1}, {0, 1, 1, 2}}, 0.9);
    for (int pt = 0; pt < 60; ++pt) {
        auto x = random_point(rng, 4, 8.0);
        auto r = mod_lattice(lat, x);
        // residual is at least as close to 0 as to any enumerated lattice point
        const double r2 = dist2(r, std::vector<double>(4, 0.0));
        CHECK(r2 <= brute_best_dist2(lat, r) + 1e-9);
        // shifting by a lattice point leaves the residue unchanged
        auto shifted = x;
        for (int j = 0; j < 4; ++j) {
            shifted[j] += 0.9 * (1.0 * lat.code()[0][j] + 3.0 * ((j == 2) ? 2.0 : 0.0));
        }
        auto r2v = mod_lattice(lat, shifted);
        for (int j = 0; j < 4; ++j) CHECK(r2v[j] == Approx(r[j]).epsilon(1e-9));
    }
}

TEST_CASE("dither is uniform over the cell") {
    // for gamma Z^n the cell is a cube: coordinates are iid uniform
    Lattice cube = make_lattice(2, 3, {{1, 0}, {0, 1}}, 2.0);
    Rng rng = make_stream(12, 0);
    const int cnt = 20000;
    double mean = 0.0, m2 = 0.0;
    int outside = 0;
    for (int i = 0; i < cnt; ++i) {
        auto d = sample_dither(cube, rng);
        for (double c : d) {
            if (c < -1.0 - 1e-12 || c > 1.0 + 1e-12) outside++;
            mean += c;
            m2 += c * c;
        }
    }
    mean /= 2 * cnt;
    m2 /= 2 * cnt;
    CHECK(outside == 0);
    CHECK(mean == Approx(0.0).scale(1.0).epsilon(0.02));
    CHECK(m2 == Approx(4.0 / 12.0).epsilon(0.05));
}

TEST_CASE("second moment of the integer lattice is 1/12") {
    Lattice z4 = make_lattice(4, 2, {}, 0.5);  // Z^4
    Rng rng = make_stream(7, 1);
    SecondMoment sm = second_moment(z4, 20000, rng);
    CHECK(sm.per_dim == Approx(1.0 / 12.0).epsilon(0.03));
    CHECK(sm.std_error < 0.002);
    CHECK(sm.max_norm <= std::sqrt(4.0) * 0.5 + 1e-9);  // half diagonal of the cube
    CHECK_THROWS(second_moment(z4, 100, rng));
}

TEST_CASE("decoding exponent branches and frozen values") {
    // threshold, the two interior branch points, and the linear tail
    CHECK(std::abs(poltyrev_exponent(kTwoPiE)) < 1e-10);
    CHECK(poltyrev_exponent(2.0 * kTwoPiE) == Approx(0.153426409720027).epsilon(1e-12));
    CHECK(poltyrev_exponent(4.0 * kTwoPiE) == Approx(0.5).epsilon(1e-12));
    CHECK(poltyrev_exponent(8.0 * kTwoPiE) == Approx(1.0).epsilon(1e-12));
    // continuity at the branch joins
    for (double mu : {2.0 * kTwoPiE, 4.0 * kTwoPiE}) {
        CHECK(poltyrev_exponent(mu * (1.0 - 1e-9)) ==
              Approx(poltyrev_exponent(mu * (1.0 + 1e-9))).epsilon(1e-6));
    }
    // monotone in mu
    double prev = 0.0;
    for (double mu = kTwoPiE; mu < 6.0 * kTwoPiE; mu += 0.37) {
        const double e = poltyrev_exponent(mu);
        CHECK(e >= prev - 1e-12);
        prev = e;
    }
    CHECK_THROWS_AS(poltyrev_exponent(kTwoPiE * 0.999), BelowThreshold);
}

TEST_CASE("error bound decays exponentially in the dimension") {
    // three decode events at volume-to-noise ratio 2.25 * 2 pi e
    const double e = poltyrev_exponent(2.25 * kTwoPiE);
    CHECK(3.0 * std::exp(-8.0 * e) == Approx(0.548849433110235).epsilon(1e-12));
    CHECK(3.0 * std::exp(-12.0 * e) == Approx(0.234757352246449).epsilon(1e-12));
    CHECK(3.0 * std::exp(-16.0 * e) == Approx(0.100411900075142).epsilon(1e-12));
}

TEST_CASE("chain construction pins the coarse cell to the measured moment") {
    Rng rng = make_stream(2024, 0);
    std::vector<NeighborSpec> nbrs{{0.9, -1.0}};
    LatticeChain chain = build_chain(4, 5, 2, kAutoMiddle, nbrs, 0.0, 0.2, rng);
    CHECK(chain.margin_coarse == Approx(1.0).epsilon(1e-9));
    const double g2p2 = chain.coarse.volume_to_2_over_n();
    CHECK(g2p2 == Approx(kTwoPiE * 1.2 * (1.0 + chain.sigma2)).epsilon(1e-9));
    CHECK(chain.margin_middle >= 1.0 - 1e-12);
    CHECK(chain.k_a >= 0);
    CHECK(chain.k_a <= chain.k_v);
    // nesting: middle generators are fine-lattice points, coarse inside middle
    CHECK(chain.middle.k() == chain.k_a);
    CHECK(chain.fine.gamma() == chain.coarse.gamma());
    // rate cross-check accepts the implied rate and rejects others
    Rng rng2 = make_stream(2024, 0);
    const double rq = 2.0 * std::log2(5.0) / 4.0;
    CHECK_NOTHROW(build_chain(4, 5, 2, kAutoMiddle, nbrs, rq, 0.2, rng2));
    Rng rng3 = make_stream(2024, 0);
    CHECK_THROWS(build_chain(4, 5, 2, kAutoMiddle, nbrs, rq + 0.25, 0.2, rng3));
}

TEST_CASE("auto middle dimension is the largest feasible one") {
    Rng rng = make_stream(31, 0);
    std::vector<NeighborSpec> nbrs{{0.9, -1.0}};
    LatticeChain chain = build_chain(4, 5, 2, kAutoMiddle, nbrs, 0.0, 0.2, rng);
    if (chain.k_a < chain.k_v) {
        LatticeChain probe = chain;
        set_middle_dim(probe, chain.k_a + 1, nbrs);
        CHECK(probe.margin_middle < 1.0);
    }
    // no neighbors: no constraint, margin reports infinite headroom
    LatticeChain free_probe = chain;
    set_middle_dim(free_probe, chain.k_v, {});
    CHECK(free_probe.margin_middle > 1.0);
}

TEST_CASE("chain construction is reproducible from the stream") {
    std::vector<NeighborSpec> nbrs{{0.8, 0.0}};
    Rng a = make_stream(5150, 0);
    Rng b = make_stream(5150, 0);
    LatticeChain ca = build_chain(6, 3, 2, kAutoMiddle, nbrs, 0.0, 0.15, a);
    LatticeChain cb = build_chain(6, 3, 2, kAutoMiddle, nbrs, 0.0, 0.15, b);
    CHECK(ca.fine.gamma() == cb.fine.gamma());
    CHECK(ca.code_seed == cb.code_seed);
    CHECK(ca.fine.code() == cb.fine.code());
    CHECK(ca.sigma2 == cb.sigma2);
}

TEST_CASE("coset index is a bijection on the fundamental cell") {
    Rng rng = make_stream(88, 0);
    std::vector<NeighborSpec> nbrs{{0.9, -1.0}};
    LatticeChain chain = build_chain(4, 5, 2, kAutoMiddle, nbrs, 0.0, 0.2, rng);
    std::vector<std::vector<double>> seen;
    std::vector<int> digits(2);
    for (int a = 0; a < 5; ++a) {
        for (int b = 0; b < 5; ++b) {
            digits[0] = a;
            digits[1] = b;
            auto pt = index_to_point(chain, digits);
            CHECK(coset_index(chain, pt) == digits);
            for (const auto& other : seen) {
                CHECK(dist2(pt, other) > 1e-12);
            }
            seen.push_back(pt);
        }
    }
    REQUIRE(seen.size() == 25);
}

TEST_CASE("coset index rejects points outside the fundamental cell") {
    Rng rng = make_stream(89, 0);
    std::vector<NeighborSpec> nbrs{{0.9, -1.0}};
    LatticeChain chain = build_chain(4, 5, 2, kAutoMiddle, nbrs, 0.0, 0.2, rng);
    auto pt = index_to_point(chain, {1, 2});
    auto shifted = pt;
    shifted[0] += chain.coarse.gamma() * 5.0;  // leave the coarse cell
    CHECK_THROWS_AS(coset_index(chain, shifted), NotInFundamentalCell);
    auto off = pt;
    off[1] += 0.37 * chain.fine.gamma();  // not a lattice point at all
    CHECK_THROWS_AS(coset_index(chain, off), NotInFundamentalCell);
    CHECK_THROWS_AS(index_to_point(chain, {1, 2, 3}), DimensionMismatch);
}

TEST_CASE("infeasible chains report the blocking constraint") {
    Rng rng = make_stream(3, 0);
    // p = 2 at full rate: coarse cell cannot reach the required volume
    std::vector<NeighborSpec> nbrs{{0.9, -1.0}};
    CHECK_THROWS_AS(build_chain(2, 2, 1, kAutoMiddle, nbrs, 0.0, 0.2, rng, {10000, 2}),
                    InfeasibleChain);
}

TEST_SUITE_END();
