#include "treekey/reconcile.hpp"

#include <algorithm>
#include <string>

#include "treekey/errors.hpp"
#include "treekey/rng.hpp"

namespace treekey {

namespace {

void check_sequence(const RSCode& code, const std::vector<std::uint32_t>& y) {
    if (static_cast<int>(y.size()) != code.n_out) {
        throw DimensionMismatch("sequence length does not match the code length");
    }
    for (std::uint32_t v : y) {
        if (v >= code.field->q()) throw FieldMismatch("symbol outside the field");
    }
}

// Evaluate a polynomial given low-to-high coefficients.
std::uint32_t poly_eval(const FieldSpec& f, const std::vector<std::uint32_t>& c,
                        std::uint32_t x) {
    std::uint32_t acc = 0;
    for (int i = static_cast<int>(c.size()) - 1; i >= 0; --i) {
        acc = f.add(f.mul(acc, x), c[i]);
    }
    return acc;
}

}  // namespace

RSCode make_rs_code(FieldPtr field, int n_out, int k_out) {
    if (!field) throw Error("null field");
    if (n_out < 2 || n_out > static_cast<int>(field->q()) - 1) {
        throw Error("code length must be in [2, q-1], got " + std::to_string(n_out));
    }
    if (k_out < 1 || k_out >= n_out) {
        throw Error("message length must be in [1, n_out), got " + std::to_string(k_out));
    }
    return RSCode{std::move(field), n_out, k_out};
}

std::vector<std::uint32_t> coset_decompose(const RSCode& code,
                                           const std::vector<std::uint32_t>& y) {
    check_sequence(code, y);
    const FieldSpec& f = *code.field;
    std::vector<std::uint32_t> s(code.r(), 0);
    for (int j = 1; j <= code.r(); ++j) {
        std::uint32_t acc = 0;
        for (int i = 0; i < code.n_out; ++i) {
            if (y[i] == 0) continue;
            acc = f.add(acc, f.mul(y[i], f.alpha_pow(static_cast<long long>(i) * j)));
        }
        s[j - 1] = acc;
    }
    return s;
}

std::optional<std::vector<std::uint32_t>> sw_correct(
    const RSCode& code, const std::vector<std::uint32_t>& estimate,
    const std::vector<std::uint32_t>& target) {
    check_sequence(code, estimate);
    const FieldSpec& f = *code.field;
    const int r = code.r();
    if (static_cast<int>(target.size()) != r) {
        throw DimensionMismatch("syndrome length does not match the code redundancy");
    }

    // Syndromes of the error pattern estimate - truth.
    std::vector<std::uint32_t> own = coset_decompose(code, estimate);
    std::vector<std::uint32_t> syn(r);
    bool clean = true;
    for (int j = 0; j < r; ++j) {
        syn[j] = f.sub(own[j], target[j]);
        clean = clean && syn[j] == 0;
    }
    if (clean) return estimate;

    // Berlekamp-Massey for the shortest LFSR generating syn.
    std::vector<std::uint32_t> lambda{1};
    std::vector<std::uint32_t> prev{1};
    std::uint32_t prev_disc = 1;
    int shift = 1;
    int errs = 0;
    for (int i = 0; i < r; ++i) {
        std::uint32_t disc = 0;
        for (std::size_t j = 0; j < lambda.size() && j <= static_cast<std::size_t>(i); ++j) {
            disc = f.add(disc, f.mul(lambda[j], syn[i - j]));
        }
        if (disc == 0) {
            ++shift;
            continue;
        }
        const std::uint32_t ratio = f.mul(disc, f.inv(prev_disc));
        std::vector<std::uint32_t> next = lambda;
        if (next.size() < prev.size() + shift) next.resize(prev.size() + shift, 0);
        for (std::size_t j = 0; j < prev.size(); ++j) {
            next[j + shift] = f.sub(next[j + shift], f.mul(ratio, prev[j]));
        }
        if (2 * errs <= i) {
            prev = lambda;
            prev_disc = disc;
            errs = i + 1 - errs;
            shift = 1;
        } else {
            ++shift;
        }
        lambda = std::move(next);
    }
    if (errs > code.t()) return std::nullopt;

    // Chien search: position i is corrupted when lambda(alpha^{-i}) = 0.
    std::vector<int> positions;
    for (int i = 0; i < code.n_out; ++i) {
        if (poly_eval(f, lambda, f.alpha_pow(-i)) == 0) positions.push_back(i);
    }
    if (static_cast<int>(positions.size()) != errs) return std::nullopt;

    // Forney: omega = lambda * S mod x^r, value at locator X is -omega(1/X)/lambda'(1/X).
    std::vector<std::uint32_t> omega(r, 0);
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        if (lambda[i] == 0) continue;
        for (int j = 0; i + j < static_cast<std::size_t>(r); ++j) {
            omega[i + j] = f.add(omega[i + j], f.mul(lambda[i], syn[j]));
        }
    }
    std::vector<std::uint32_t> dlambda;
    for (std::size_t i = 1; i < lambda.size(); ++i) {
        // Formal derivative in characteristic p: coefficient i scales by i mod p,
        // and residues of integers embed as constant polynomials.
        dlambda.push_back(f.mul(lambda[i], static_cast<std::uint32_t>(i % f.p())));
    }

    std::vector<std::uint32_t> corrected = estimate;
    for (int i : positions) {
        const std::uint32_t x_inv = f.alpha_pow(-i);
        const std::uint32_t denom = poly_eval(f, dlambda, x_inv);
        if (denom == 0) return std::nullopt;
        const std::uint32_t value = f.neg(f.mul(poly_eval(f, omega, x_inv), f.inv(denom)));
        corrected[i] = f.sub(corrected[i], value);
    }

    // Reject a miscorrection: every syndrome of the result must match.
    if (coset_decompose(code, corrected) != target) return std::nullopt;
    return corrected;
}

std::vector<std::uint32_t> ExtractorMatrix::apply(const std::vector<std::uint32_t>& y) const {
    if (static_cast<int>(y.size()) != cols) {
        throw DimensionMismatch("sequence length does not match the extractor width");
    }
    const FieldSpec& f = *field;
    std::vector<std::uint32_t> out(rows, 0);
    for (int i = 0; i < rows; ++i) {
        std::uint32_t acc = 0;
        const std::uint32_t* row = entries.data() + static_cast<std::size_t>(i) * cols;
        for (int j = 0; j < cols; ++j) {
            if (y[j] == 0 || row[j] == 0) continue;
            acc = f.add(acc, f.mul(row[j], y[j]));
        }
        out[i] = acc;
    }
    return out;
}

ExtractorMatrix build_extractor(FieldPtr field, int cols, int rows, std::uint64_t seed) {
    if (!field) throw Error("null field");
    if (rows < 1) throw RateTooLow("extractor needs at least one output symbol");
    if (cols < rows) throw RateTooLow("extractor output longer than its input");
    ExtractorMatrix m;
    m.field = std::move(field);
    m.rows = rows;
    m.cols = cols;
    m.seed = seed;
    m.entries.resize(static_cast<std::size_t>(rows) * cols);
    Rng rng = make_stream(seed, 0x657874u);  // dedicated stream for the matrix
    for (auto& e : m.entries) {
        e = static_cast<std::uint32_t>(uniform_below(rng, m.field->q()));
    }
    return m;
}

ExtractorMatrix identity_extractor(FieldPtr field, int cols, int rows) {
    if (!field) throw Error("null field");
    if (rows < 1 || rows > cols) throw RateTooLow("identity extractor needs 1 <= rows <= cols");
    ExtractorMatrix m;
    m.field = std::move(field);
    m.rows = rows;
    m.cols = cols;
    m.seed = 0;
    m.entries.assign(static_cast<std::size_t>(rows) * cols, 0);
    for (int i = 0; i < rows; ++i) m.entries[static_cast<std::size_t>(i) * cols + i] = 1;
    return m;
}

}  // namespace treekey
