#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "treekey/rng.hpp"

namespace treekey {

// Scaled mod-p lattice: gamma * (embed(C) + p Z^n) for a full-rank linear
// code C over F_p. k == 0 gives gamma*p*Z^n, k == n gives gamma*Z^n.
class Lattice {
  public:
    int n() const { return n_; }
    int p() const { return p_; }
    int k() const { return static_cast<int>(code_.size()); }
    double gamma() const { return gamma_; }

    // Generator rows in reduced row echelon form, entries in [0, p).
    const std::vector<std::vector<int>>& code() const { return code_; }
    const std::vector<int>& pivot_columns() const { return pivots_; }
    // Integer basis of the unscaled lattice embed(C)+pZ^n (rows).
    const std::vector<std::vector<int>>& basis() const { return basis_; }

    double volume() const;           // gamma^n p^(n-k), exact formula
    double volume_to_2_over_n() const;  // volume^(2/n) without overflow

  private:
    friend Lattice make_lattice(int, int, const std::vector<std::vector<int>>&, double);
    int n_ = 0;
    int p_ = 2;
    double gamma_ = 1.0;
    std::vector<std::vector<int>> code_;
    std::vector<int> pivots_;
    std::vector<std::vector<int>> basis_;
};

// Reduces the generator rows over F_p and requires full row rank.
Lattice make_lattice(int n, int p, const std::vector<std::vector<int>>& code_rows,
                     double gamma);

// Exact nearest lattice point: search over all p^k code cosets with
// per-coordinate rounding inside each coset. Distance ties prefer the
// lexicographically smallest coset index, then the smaller coordinates
// (rounding half down).
std::vector<double> nearest_point(const Lattice& lat, const std::vector<double>& x);
// Same point in integer coordinates (units of gamma).
std::vector<long long> nearest_coords(const Lattice& lat, const std::vector<double>& x);

// x minus its nearest lattice point: the representative in the Voronoi cell.
std::vector<double> mod_lattice(const Lattice& lat, const std::vector<double>& x);

// Uniform sample of the Voronoi cell: uniform on the fundamental
// parallelepiped of the basis, then folded by mod_lattice.
std::vector<double> sample_dither(const Lattice& lat, Rng& rng);

struct SecondMoment {
    double per_dim = 0.0;     // E ||d||^2 / n
    double std_error = 0.0;
    double max_norm = 0.0;    // largest sampled distance, crude covering probe
};

// Monte-Carlo normalized second moment of the Voronoi cell; needs >= 1e4 samples.
SecondMoment second_moment(const Lattice& lat, int samples, Rng& rng);

// |det| of the real generator matrix via LU; cross-checks volume().
double gram_volume(const Lattice& lat);

// Unrestricted decoding exponent. Throws BelowThreshold when mu < 2*pi*e.
double poltyrev_exponent(double mu);

struct NeighborSpec {
    double rho = 0.0;
    // Neighbor quantization noise: < 0 means "assume the own cell's moment",
    // 0 means the neighbor estimates from its raw source.
    double sigma2 = -1.0;
};

struct ChainOptions {
    int sigma_samples = 100000;
    int retries = 20;
};

inline constexpr int kAutoMiddle = -1;

// Nested triple sharing p, n and scale: coarse = gamma*p*Z^n inside
// middle inside fine. k_v = dim C, the middle code keeps the first k_a
// basis rows of C.
struct LatticeChain {
    Lattice fine;
    Lattice middle;
    Lattice coarse;
    int k_v = 0;
    int k_a = 0;
    double delta = 0.0;
    double sigma2 = 0.0;        // measured second moment of the fine cell
    double sigma2_stderr = 0.0;
    double margin_coarse = 1.0;  // vol_b^{2/n} / (2 pi e (1+sigma2)(1+delta)), == 1 by design
    double margin_middle = 1.0;  // vol_a^{2/n} / (2 pi e T (1+delta)); >= 1 when feasible
    double g2pe = 0.0;           // 2 pi e G(fine cell)
    double cov_eff = 0.0;        // sampled covering-to-effective radius ratio
    std::uint64_t code_seed = 0;
};

// Draws random nested codes, scales the chain so the coarse cell matches the
// fine cell's measured second moment with slack (1+delta), and verifies the
// middle-cell volume constraint against the supplied neighbors. k_a may be
// kAutoMiddle to take the largest feasible middle code dimension.
LatticeChain build_chain(int n, int p, int k_v, int k_a,
                         const std::vector<NeighborSpec>& neighbors, double rq_target,
                         double delta, Rng& rng, const ChainOptions& opt = {});

// Re-evaluates the middle-cell constraint for a built chain against fresh
// neighbor data; used once the whole terminal set has measured cells.
double middle_margin(const LatticeChain& chain, const std::vector<NeighborSpec>& neighbors);
// Largest middle dimension whose margin stays >= 1 (>= 0 always checked).
std::optional<int> best_middle_dim(const LatticeChain& chain,
                                   const std::vector<NeighborSpec>& neighbors);
// Replace the middle lattice by the span of the first k_a basis rows.
void set_middle_dim(LatticeChain& chain, int k_a,
                    const std::vector<NeighborSpec>& neighbors);

// Index of a fine-lattice point inside the coarse Voronoi cell: its codeword
// coordinates, a vector over F_p of length k_v. Bijective on that cell.
std::vector<int> coset_index(const LatticeChain& chain, const std::vector<double>& y);
std::vector<double> index_to_point(const LatticeChain& chain, const std::vector<int>& digits);

}  // namespace treekey
