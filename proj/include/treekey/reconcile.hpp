#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "treekey/field.hpp"

namespace treekey {

// Shortened Reed-Solomon code used in syndrome form only: the holder of a
// sequence broadcasts its n_out - k_out syndromes and anyone with a close
// enough estimate recovers the sequence exactly.
struct RSCode {
    FieldPtr field;
    int n_out = 0;  // block length, <= q - 1
    int k_out = 0;  // message length
    int r() const { return n_out - k_out; }
    int t() const { return r() / 2; }  // correctable symbol errors
};

RSCode make_rs_code(FieldPtr field, int n_out, int k_out);

// Syndromes s_j = sum_i y_i alpha^{i j} for j = 1..r.
std::vector<std::uint32_t> coset_decompose(const RSCode& code,
                                           const std::vector<std::uint32_t>& y);

// Correct `estimate` toward the sequence whose syndromes are `target`.
// Returns the corrected sequence, or nullopt when more than t symbols differ
// or the corrected sequence fails the full syndrome recheck.
std::optional<std::vector<std::uint32_t>> sw_correct(
    const RSCode& code, const std::vector<std::uint32_t>& estimate,
    const std::vector<std::uint32_t>& target);

// Seeded random linear map over the field, applied to a length-cols sequence
// to produce a rows-symbol key.
struct ExtractorMatrix {
    FieldPtr field;
    int rows = 0;
    int cols = 0;
    std::uint64_t seed = 0;
    std::vector<std::uint32_t> entries;  // row-major, rows * cols

    std::vector<std::uint32_t> apply(const std::vector<std::uint32_t>& y) const;
};

ExtractorMatrix build_extractor(FieldPtr field, int cols, int rows, std::uint64_t seed);

// [I | 0] map, for tests that need a transparent extractor.
ExtractorMatrix identity_extractor(FieldPtr field, int cols, int rows);

}  // namespace treekey
