#include "treekey/field.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "treekey/errors.hpp"

namespace treekey {

namespace {

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

using Poly = std::vector<int>;  // coefficients low-to-high, no trailing-zero guarantee

int degree(const Poly& f) {
    for (int i = static_cast<int>(f.size()) - 1; i >= 0; --i) {
        if (f[i] != 0) return i;
    }
    return -1;
}

// f mod g, g monic.
Poly poly_mod(Poly f, const Poly& g, int p) {
    const int dg = degree(g);
    for (int i = degree(f); i >= dg; --i) {
        const int c = f[i];
        if (c == 0) continue;
        for (int j = 0; j <= dg; ++j) {
            f[i - dg + j] = mod_p(f[i - dg + j] - 1ll * c * g[j], p);
        }
    }
    f.resize(dg);
    return f;
}

Poly poly_mul_mod(const Poly& a, const Poly& b, const Poly& g, int p) {
    Poly prod(a.size() + b.size() - 1, 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0) continue;
        for (std::size_t j = 0; j < b.size(); ++j) {
            prod[i + j] = mod_p(prod[i + j] + 1ll * a[i] * b[j], p);
        }
    }
    return poly_mod(std::move(prod), g, p);
}

Poly index_to_poly(std::uint32_t idx, int p, int len) {
    Poly f(len, 0);
    for (int i = 0; i < len; ++i) {
        f[i] = static_cast<int>(idx % p);
        idx /= p;
    }
    return f;
}

std::uint32_t poly_to_index(const Poly& f, int p) {
    std::uint32_t idx = 0;
    for (int i = static_cast<int>(f.size()) - 1; i >= 0; --i) {
        idx = idx * p + static_cast<std::uint32_t>(f[i]);
    }
    return idx;
}

bool divides(const Poly& divisor, const Poly& f, int p) {
    return degree(poly_mod(f, divisor, p)) < 0;
}

// Smallest monic irreducible of degree k: scan the low-order coefficients as a
// base-p counter and trial-divide by every monic polynomial of degree <= k/2.
Poly find_modulus(int p, int k) {
    std::uint64_t count = 1;
    for (int i = 0; i < k; ++i) count *= p;
    for (std::uint64_t t = 0; t < count; ++t) {
        Poly f = index_to_poly(static_cast<std::uint32_t>(t), p, k + 1);
        f[k] = 1;
        bool reducible = false;
        for (int d = 1; d <= k / 2 && !reducible; ++d) {
            std::uint64_t m = 1;
            for (int i = 0; i < d; ++i) m *= p;
            for (std::uint64_t s = 0; s < m && !reducible; ++s) {
                Poly g = index_to_poly(static_cast<std::uint32_t>(s), p, d + 1);
                g[d] = 1;
                reducible = divides(g, f, p);
            }
        }
        if (!reducible) return f;
    }
    throw Error("no irreducible polynomial found");  // unreachable for prime p
}

std::vector<std::uint64_t> prime_factors(std::uint64_t m) {
    std::vector<std::uint64_t> out;
    for (std::uint64_t d = 2; d * d <= m; ++d) {
        if (m % d == 0) {
            out.push_back(d);
            while (m % d == 0) m /= d;
        }
    }
    if (m > 1) out.push_back(m);
    return out;
}

}  // namespace

FieldSpec make_field(int p, int k) {
    if (!is_prime(p)) throw Error("field characteristic must be prime, got " + std::to_string(p));
    if (k < 1) throw Error("field extension degree must be >= 1");
    std::uint64_t q = 1;
    for (int i = 0; i < k; ++i) {
        q *= static_cast<std::uint64_t>(p);
        if (q > (1ull << 22)) throw Error("field order too large for table arithmetic");
    }

    FieldSpec fs;
    fs.p_ = p;
    fs.k_ = k;
    fs.q_ = static_cast<std::uint32_t>(q);
    fs.modulus_ = find_modulus(p, k);

    const std::uint64_t order = q - 1;
    const std::vector<std::uint64_t> factors = prime_factors(order);
    auto pow_raw = [&](std::uint32_t a, std::uint64_t e) {
        Poly base = index_to_poly(a, p, k);
        Poly acc(k, 0);
        acc[0] = 1;
        while (e > 0) {
            if (e & 1) acc = poly_mul_mod(acc, base, fs.modulus_, p);
            base = poly_mul_mod(base, base, fs.modulus_, p);
            e >>= 1;
        }
        return poly_to_index(acc, p);
    };

    std::uint32_t g = 0;
    for (std::uint32_t cand = 1; cand < fs.q_; ++cand) {
        bool primitive = true;
        for (std::uint64_t f : factors) {
            if (pow_raw(cand, order / f) == 1) {
                primitive = false;
                break;
            }
        }
        if (primitive) {
            g = cand;
            break;
        }
    }
    if (g == 0) throw Error("no primitive element found");  // unreachable
    fs.generator_ = g;

    fs.exp_.assign(2 * order, 0);
    fs.log_.assign(fs.q_, 0);
    Poly gp = index_to_poly(g, p, k);
    Poly acc(k, 0);
    acc[0] = 1;
    for (std::uint64_t i = 0; i < order; ++i) {
        const std::uint32_t v = poly_to_index(acc, p);
        fs.exp_[i] = v;
        fs.exp_[i + order] = v;
        fs.log_[v] = static_cast<std::uint32_t>(i);
        acc = poly_mul_mod(acc, gp, fs.modulus_, p);
    }
    if (poly_to_index(acc, p) != 1) throw Error("generator order check failed");
    return fs;
}

std::uint32_t FieldSpec::add(std::uint32_t a, std::uint32_t b) const {
    std::uint32_t out = 0;
    std::uint32_t scale = 1;
    for (int i = 0; i < k_; ++i) {
        const std::uint32_t da = a % p_;
        const std::uint32_t db = b % p_;
        a /= p_;
        b /= p_;
        std::uint32_t s = da + db;
        if (s >= static_cast<std::uint32_t>(p_)) s -= p_;
        out += s * scale;
        scale *= p_;
    }
    return out;
}

std::uint32_t FieldSpec::neg(std::uint32_t a) const {
    std::uint32_t out = 0;
    std::uint32_t scale = 1;
    for (int i = 0; i < k_; ++i) {
        const std::uint32_t da = a % p_;
        a /= p_;
        out += (da == 0 ? 0 : p_ - da) * scale;
        scale *= p_;
    }
    return out;
}

std::uint32_t FieldSpec::sub(std::uint32_t a, std::uint32_t b) const {
    return add(a, neg(b));
}

std::uint32_t FieldSpec::mul(std::uint32_t a, std::uint32_t b) const {
    if (a == 0 || b == 0) return 0;
    return exp_[log_[a] + log_[b]];
}

std::uint32_t FieldSpec::inv(std::uint32_t a) const {
    if (a == 0) throw Error("division by zero in finite field");
    const std::uint32_t order = q_ - 1;
    return exp_[(order - log_[a]) % order];
}

std::uint32_t FieldSpec::pow(std::uint32_t a, long long e) const {
    if (a == 0) {
        if (e > 0) return 0;
        if (e == 0) return 1;
        throw Error("division by zero in finite field");
    }
    const long long order = q_ - 1;
    long long le = (static_cast<long long>(log_[a]) * (e % order)) % order;
    if (le < 0) le += order;
    return exp_[le];
}

std::uint32_t FieldSpec::alpha_pow(long long e) const {
    const long long order = q_ - 1;
    long long le = e % order;
    if (le < 0) le += order;
    return exp_[le];
}

std::uint32_t FieldSpec::log(std::uint32_t a) const {
    if (a == 0) throw Error("log of zero in finite field");
    return log_[a];
}

std::vector<int> FieldSpec::to_digits(std::uint32_t a) const {
    std::vector<int> out(k_);
    for (int i = 0; i < k_; ++i) {
        out[i] = static_cast<int>(a % p_);
        a /= p_;
    }
    return out;
}

std::uint32_t FieldSpec::from_digits(const std::vector<int>& digits) const {
    if (static_cast<int>(digits.size()) != k_) {
        throw DimensionMismatch("digit count does not match the extension degree");
    }
    std::uint32_t out = 0;
    for (int i = k_ - 1; i >= 0; --i) {
        const int d = digits[i];
        if (d < 0 || d >= p_) throw Error("digit out of range for field characteristic");
        out = out * p_ + static_cast<std::uint32_t>(d);
    }
    return out;
}

}  // namespace treekey
