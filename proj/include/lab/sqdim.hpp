#pragma once

#include <cstdint>
#include <vector>

#include "lab/sign_matrix.hpp"

namespace lab {

// Exact dyadic rational num / 2^k (num may be negative).
struct DyadicValue {
    std::int64_t num;
    int log2_den;

    double to_double() const {
        return static_cast<double>(num) / static_cast<double>(std::int64_t{1} << log2_den);
    }
    // value <= 1/d, compared in integers.
    bool leq_inverse(std::int64_t d) const {
        return num * d <= (std::int64_t{1} << log2_den);
    }
};

struct SqdimResult {
    std::int64_t d = 0;
    std::vector<Eigen::Index> witness;
    DyadicDistribution distribution = DyadicDistribution::point_mass(1, 0);
    bool exact = false;
};

// Exact E_{x~rho}[f_i(x) f_j(x)] as a dyadic rational.
DyadicValue pairwise_correlation(const SignMatrix& m, Eigen::Index i, Eigen::Index j,
                                 const DyadicDistribution& rho);

// Largest d admitting a d-subset of rows with all pairwise correlations
// <= 1/d (signed, as defined).  Branch-and-bound clique search per
// candidate d; rows capped at 24.
SqdimResult sqdim_exact(const SignMatrix& m, const DyadicDistribution& rho);

// Greedy set growing with random restarts; certified lower bound.
SqdimResult sqdim_greedy(const SignMatrix& m, const DyadicDistribution& rho, int restarts = 32,
                         std::uint64_t seed = 0);

// Max of sqdim_exact over a candidate family; a lower bound on sq(H).
SqdimResult sqdim_over_distributions(const SignMatrix& m,
                                     const std::vector<DyadicDistribution>& candidates);

// Re-verifies a witness with exact rational arithmetic.
bool verify_sq_witness(const SignMatrix& m, const DyadicDistribution& rho,
                       const std::vector<Eigen::Index>& witness);

// Theorem's query lower bound: k > (d*tau^2 - 1) / 2.
bool blum_lower_bound_check(std::int64_t d, std::int64_t k, double tau);

}  // namespace lab
