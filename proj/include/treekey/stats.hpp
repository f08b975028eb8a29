#pragma once

#include <vector>

#include "treekey/rng.hpp"

namespace treekey {

// Upper-tail p-value of a chi-square statistic.
double chi_square_p(double stat, int dof);

struct ChiSquare {
    double stat = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

// Goodness of fit against the uniform distribution over the cells.
ChiSquare chi_square_uniform(const std::vector<long long>& counts);

// Homogeneity of two histograms over the same cells; columns with zero total
// are dropped.
ChiSquare chi_square_two_sample(const std::vector<long long>& a,
                                const std::vector<long long>& b);

// Kolmogorov-Smirnov test of values against Uniform[0,1), asymptotic p-value.
double ks_uniform_p(std::vector<double> values);

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

// Wilson 95% score interval for a binomial proportion.
Interval wilson95(long long successes, long long trials);

double entropy_plugin_bits(const std::vector<long long>& counts);
// Plug-in estimate plus the (m-1)/(2T ln 2) small-sample correction.
double entropy_miller_madow_bits(const std::vector<long long>& counts);

struct PermutationMI {
    double mi_bits = 0.0;
    double p_value = 1.0;
    int permutations = 0;
};

// Mutual information between two discrete label sequences with a permutation
// null: p-value = (1 + #{shuffled MI >= observed}) / (permutations + 1).
PermutationMI mutual_information_perm(const std::vector<int>& x, const std::vector<int>& y,
                                      int permutations, Rng& rng);

}  // namespace treekey
