#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lab/rng.hpp"

namespace lab {

// Probability vector with dyadic rational weights: entry i has mass
// weights[i] / 2^scale_exponent.  Sampling uses scale_exponent fair bits,
// so draws are exact, never approximate.
class DyadicDistribution {
public:
    DyadicDistribution(std::vector<std::uint64_t> weights, int scale_exponent)
        : weights_(std::move(weights)), k_(scale_exponent) {
        if (weights_.empty()) throw std::invalid_argument("dyadic: empty weight vector");
        if (k_ < 0 || k_ > 62) throw std::invalid_argument("dyadic: scale exponent out of range");
        std::uint64_t total = 0;
        for (auto w : weights_) total += w;
        if (total != (std::uint64_t{1} << k_))
            throw std::invalid_argument("dyadic: weights do not sum to 2^k");
        build_cdf();
    }

    static DyadicDistribution uniform(std::size_t n) {
        int k = 0;
        while ((std::size_t{1} << k) < n) ++k;
        // Exact uniform when n is a power of two, otherwise the closest
        // dyadic approximation at scale k+10.
        if ((std::size_t{1} << k) == n)
            return DyadicDistribution(std::vector<std::uint64_t>(n, 1), k);
        return from_reals(std::vector<double>(n, 1.0 / static_cast<double>(n)), k + 10);
    }

    static DyadicDistribution point_mass(std::size_t n, std::size_t at) {
        if (at >= n) throw std::invalid_argument("dyadic: point mass index out of range");
        std::vector<std::uint64_t> w(n, 0);
        w[at] = 1;
        return DyadicDistribution(std::move(w), 0);
    }

    // Quantizes a nonnegative real vector to a dyadic distribution at scale k.
    // Rounding residue is absorbed into the heaviest entries so the weights
    // sum to 2^k exactly.
    static DyadicDistribution from_reals(const std::vector<double>& p, int k) {
        if (p.empty()) throw std::invalid_argument("dyadic: empty weight vector");
        double total = 0;
        for (double v : p) {
            if (v < 0) throw std::invalid_argument("dyadic: negative weight");
            total += v;
        }
        if (total <= 0) throw std::invalid_argument("dyadic: zero mass");
        const std::uint64_t scale = std::uint64_t{1} << k;
        std::vector<std::uint64_t> w(p.size());
        std::uint64_t acc = 0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            w[i] = static_cast<std::uint64_t>(p[i] / total * static_cast<double>(scale) + 0.5);
            acc += w[i];
        }
        // Fix the rounding residue one unit at a time on the largest entries.
        while (acc != scale) {
            std::size_t target = 0;
            for (std::size_t i = 1; i < w.size(); ++i)
                if (w[i] > w[target]) target = i;
            if (acc > scale) {
                --w[target];
                --acc;
            } else {
                ++w[target];
                ++acc;
            }
        }
        return DyadicDistribution(std::move(w), k);
    }

    std::size_t size() const { return weights_.size(); }
    int scale_exponent() const { return k_; }
    const std::vector<std::uint64_t>& weights() const { return weights_; }
    std::uint64_t denominator() const { return std::uint64_t{1} << k_; }

    double prob(std::size_t i) const {
        return static_cast<double>(weights_[i]) / static_cast<double>(denominator());
    }

    // Maps a k-bit uniform index to the outcome owning that slice of mass.
    std::size_t index_from_bits(std::uint64_t u) const {
        if (u >= denominator()) throw std::invalid_argument("dyadic: bit index out of range");
        // cdf_[i] is the first index owned by outcome i.
        std::size_t lo = 0, hi = weights_.size();
        while (lo + 1 < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (cdf_[mid] <= u)
                lo = mid;
            else
                hi = mid;
        }
        return lo;
    }

    std::size_t sample(std::mt19937_64& eng) const {
        return index_from_bits(fair_bits(eng, k_));
    }

    // Expands to the uniform-over-2^k index table: entry u holds the outcome
    // index that the bit pattern u maps to.
    std::vector<std::size_t> expand() const {
        std::vector<std::size_t> table(denominator());
        std::size_t pos = 0;
        for (std::size_t i = 0; i < weights_.size(); ++i)
            for (std::uint64_t r = 0; r < weights_[i]; ++r) table[pos++] = i;
        return table;
    }

    bool operator==(const DyadicDistribution& o) const {
        return k_ == o.k_ && weights_ == o.weights_;
    }

private:
    void build_cdf() {
        cdf_.resize(weights_.size());
        std::uint64_t acc = 0;
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            cdf_[i] = acc;
            acc += weights_[i];
        }
    }

    std::vector<std::uint64_t> weights_;
    int k_;
    std::vector<std::uint64_t> cdf_;
};

}  // namespace lab
