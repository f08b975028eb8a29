#include <cstdint>
#include <set>
#include <vector>

#include "doctest.h"
#include "treekey/errors.hpp"
#include "treekey/field.hpp"

using namespace treekey;

TEST_SUITE_BEGIN("field");

TEST_CASE("prime field matches integer arithmetic") {
    FieldSpec f = make_field(7, 1);
    CHECK(f.q() == 7);
    CHECK(f.modulus() == std::vector<int>{0, 1});  // reduction by x
    CHECK(f.generator() == 3);                     // smallest primitive root mod 7
    for (std::uint32_t a = 0; a < 7; ++a) {
        for (std::uint32_t b = 0; b < 7; ++b) {
            CHECK(f.add(a, b) == (a + b) % 7);
            CHECK(f.mul(a, b) == (a * b) % 7);
        }
        CHECK(f.sub(a, a) == 0);
        if (a != 0) CHECK(f.mul(a, f.inv(a)) == 1);
    }
}

TEST_CASE("degree-two extension of F5") {
    FieldSpec f = make_field(5, 2);
    CHECK(f.q() == 25);
    // lexicographically first irreducible: x^2 + 2 (x^2 and x^2 + 1 both split)
    CHECK(f.modulus() == std::vector<int>{2, 0, 1});
    // smallest primitive element is x + 1, packed low digit first
    CHECK(f.generator() == 6);
}

TEST_CASE("degree-four extension of F2") {
    FieldSpec f = make_field(2, 4);
    CHECK(f.q() == 16);
    CHECK(f.modulus() == std::vector<int>{1, 1, 0, 0, 1});  // x^4 + x + 1
    CHECK(f.generator() == 2);                              // x itself is primitive
}

TEST_CASE("field axioms hold on every element") {
    for (auto [p, k] : std::vector<std::pair<int, int>>{{2, 4}, {3, 2}, {5, 2}}) {
        FieldSpec f = make_field(p, k);
        const std::uint32_t q = f.q();
        // additive and multiplicative identities, inverses
        for (std::uint32_t a = 0; a < q; ++a) {
            CHECK(f.add(a, 0) == a);
            CHECK(f.mul(a, 1) == a);
            CHECK(f.add(a, f.neg(a)) == 0);
            CHECK(f.mul(a, 0) == 0);
            if (a != 0) CHECK(f.mul(a, f.inv(a)) == 1);
        }
        // sampled associativity and distributivity
        for (std::uint32_t a = 1; a < q; a += 3) {
            for (std::uint32_t b = 2; b < q; b += 5) {
                for (std::uint32_t c = 0; c < q; c += 7) {
                    CHECK(f.mul(a, f.mul(b, c)) == f.mul(f.mul(a, b), c));
                    CHECK(f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c)));
                }
            }
        }
    }
}

TEST_CASE("generator powers enumerate the multiplicative group") {
    FieldSpec f = make_field(5, 2);
    std::set<std::uint32_t> seen;
    std::uint32_t x = 1;
    for (std::uint32_t e = 0; e < f.q() - 1; ++e) {
        CHECK(f.alpha_pow(e) == x);
        seen.insert(x);
        x = f.mul(x, f.generator());
    }
    CHECK(seen.size() == f.q() - 1);
    CHECK(x == 1);  // full cycle
    CHECK(f.alpha_pow(-1) == f.inv(f.generator()));
    CHECK(f.alpha_pow(f.q() - 1) == 1);
    CHECK(f.alpha_pow(-(static_cast<long long>(f.q()) - 1)) == 1);
}

TEST_CASE("pow handles zero and negative exponents") {
    FieldSpec f = make_field(3, 2);
    for (std::uint32_t a = 1; a < f.q(); ++a) {
        CHECK(f.pow(a, 0) == 1);
        CHECK(f.pow(a, f.q() - 1) == 1);
        CHECK(f.mul(f.pow(a, 3), f.pow(a, -3)) == 1);
    }
    CHECK(f.pow(0, 5) == 0);
    CHECK(f.pow(0, 0) == 1);
}

TEST_CASE("digit packing round trips") {
    FieldSpec f = make_field(5, 2);
    for (std::uint32_t a = 0; a < f.q(); ++a) {
        auto d = f.to_digits(a);
        REQUIRE(d.size() == 2);
        CHECK(f.from_digits(d) == a);
        CHECK(a == static_cast<std::uint32_t>(d[0] + 5 * d[1]));
    }
    CHECK_THROWS_AS(f.from_digits({1, 2, 3}), DimensionMismatch);
    CHECK_THROWS(f.from_digits({5, 0}));
}

TEST_CASE("construction guards") {
    CHECK_THROWS(make_field(4, 2));   // p must be prime
    CHECK_THROWS(make_field(2, 0));   // degree must be >= 1
    CHECK_THROWS(make_field(2, 23));  // table size limit
}

TEST_SUITE_END();
