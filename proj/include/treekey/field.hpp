#pragma once

#include <cstdint>
#include <memory>
#include <vector>

namespace treekey {

// Arithmetic in GF(p^k). Elements are indices in [0, q): the base-p digits of
// an index are the coefficients (low degree first) of a polynomial residue.
class FieldSpec {
  public:
    int p() const { return p_; }
    int k() const { return k_; }
    std::uint32_t q() const { return q_; }
    std::uint32_t generator() const { return generator_; }
    const std::vector<int>& modulus() const { return modulus_; }

    std::uint32_t add(std::uint32_t a, std::uint32_t b) const;
    std::uint32_t sub(std::uint32_t a, std::uint32_t b) const;
    std::uint32_t neg(std::uint32_t a) const;
    std::uint32_t mul(std::uint32_t a, std::uint32_t b) const;
    std::uint32_t inv(std::uint32_t a) const;
    std::uint32_t pow(std::uint32_t a, long long e) const;

    // generator^e for any integer e.
    std::uint32_t alpha_pow(long long e) const;
    // Discrete log base the generator; a must be nonzero.
    std::uint32_t log(std::uint32_t a) const;

    std::vector<int> to_digits(std::uint32_t a) const;
    std::uint32_t from_digits(const std::vector<int>& digits) const;

  private:
    friend FieldSpec make_field(int p, int k);

    int p_ = 0;
    int k_ = 0;
    std::uint32_t q_ = 0;
    std::uint32_t generator_ = 0;
    std::vector<int> modulus_;        // monic, degree k, low-to-high, size k+1
    std::vector<std::uint32_t> exp_;  // size 2(q-1), doubled so sums of logs index directly
    std::vector<std::uint32_t> log_;  // size q, entry 0 unused
};

FieldSpec make_field(int p, int k);

using FieldPtr = std::shared_ptr<const FieldSpec>;

}  // namespace treekey
