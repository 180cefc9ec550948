#include "lab/sqdim.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <stdexcept>

namespace lab {

DyadicValue pairwise_correlation(const SignMatrix& m, Eigen::Index i, Eigen::Index j,
                                 const DyadicDistribution& rho) {
    if (i == j) throw std::invalid_argument("pairwise_correlation: i == j");
    if (static_cast<Eigen::Index>(rho.size()) != m.cols())
        throw std::invalid_argument("pairwise_correlation: rho length != cols");
    std::int64_t num = 0;
    for (Eigen::Index x = 0; x < m.cols(); ++x)
        num += static_cast<std::int64_t>(rho.weights()[x]) * m(i, x) * m(j, x);
    return {num, rho.scale_exponent()};
}

bool verify_sq_witness(const SignMatrix& m, const DyadicDistribution& rho,
                       const std::vector<Eigen::Index>& witness) {
    const auto d = static_cast<std::int64_t>(witness.size());
    if (d == 0) return false;
    for (std::size_t a = 0; a < witness.size(); ++a)
        for (std::size_t b = a + 1; b < witness.size(); ++b)
            if (!pairwise_correlation(m, witness[a], witness[b], rho).leq_inverse(d)) return false;
    return true;
}

namespace {

using AdjMatrix = std::vector<std::uint32_t>;  // adjacency bitmask rows

// Classic branch-and-bound max-clique on <= 24 vertices, stopping as soon
// as a clique of size `target` is found.
bool find_clique(const AdjMatrix& adj, int target, std::uint32_t candidates,
                 std::vector<int>& current, std::vector<Eigen::Index>& out) {
    if (static_cast<int>(current.size()) == target) {
        out.assign(current.begin(), current.end());
        return true;
    }
    if (static_cast<int>(current.size()) + std::popcount(candidates) < target) return false;
    std::uint32_t rest = candidates;
    while (rest) {
        const int v = std::countr_zero(rest);
        rest &= rest - 1;
        current.push_back(v);
        if (find_clique(adj, target, candidates & adj[v] & ~((std::uint32_t{2} << v) - 1), current,
                        out))
            return true;
        current.pop_back();
        // v excluded: if remaining vertices cannot reach the target, stop.
        candidates &= ~(std::uint32_t{1} << v);
        if (static_cast<int>(current.size()) + std::popcount(candidates) < target) return false;
    }
    return false;
}

}  // namespace

SqdimResult sqdim_exact(const SignMatrix& m, const DyadicDistribution& rho) {
    const int n = static_cast<int>(m.rows());
    if (n > 24)
        throw SizeLimitError("sqdim_exact: more than 24 rows; use sqdim_greedy");

    // Precompute correlation numerators once; the threshold graph is rebuilt
    // per candidate d because the edge condition depends on d.
    std::vector<std::vector<std::int64_t>> num(n, std::vector<std::int64_t>(n, 0));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            num[i][j] = num[j][i] = pairwise_correlation(m, i, j, rho).num;
    const std::int64_t den = std::int64_t{1} << rho.scale_exponent();

    for (int d = n; d >= 1; --d) {
        if (d == 1) {
            return {1, {0}, rho, true};
        }
        AdjMatrix adj(n, 0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j && num[i][j] * d <= den) adj[i] |= std::uint32_t{1} << j;
        std::vector<int> current;
        std::vector<Eigen::Index> witness;
        const std::uint32_t all = (n == 32) ? ~std::uint32_t{0} : ((std::uint32_t{1} << n) - 1);
        if (find_clique(adj, d, all, current, witness)) {
            return {d, witness, rho, true};
        }
    }
    return {1, {0}, rho, true};  // unreachable: d == 1 always succeeds
}

SqdimResult sqdim_greedy(const SignMatrix& m, const DyadicDistribution& rho, int restarts,
                         std::uint64_t seed) {
    const auto n = m.rows();
    std::vector<Eigen::Index> best;
    for (int r = 0; r < restarts; ++r) {
        auto eng = make_engine(sub_seed(seed, static_cast<std::uint64_t>(r)));
        std::vector<Eigen::Index> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), eng);
        std::vector<Eigen::Index> set;
        for (auto cand : order) {
            // Adding cand must keep every pair within 1/(|set|+1).
            set.push_back(cand);
            if (!verify_sq_witness(m, rho, set)) set.pop_back();
        }
        // The grown set may violate the tighter 1/d bound at its final size;
        // shrink until the certificate holds.
        while (!set.empty() && !verify_sq_witness(m, rho, set)) set.pop_back();
        if (set.size() > best.size()) best = set;
    }
    if (best.empty()) best = {0};
    return {static_cast<std::int64_t>(best.size()), best, rho, false};
}

SqdimResult sqdim_over_distributions(const SignMatrix& m,
                                     const std::vector<DyadicDistribution>& candidates) {
    if (candidates.empty()) throw std::invalid_argument("sqdim_over_distributions: empty family");
    SqdimResult best = sqdim_exact(m, candidates.front());
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        auto r = sqdim_exact(m, candidates[i]);
        if (r.d > best.d) best = r;
    }
    return best;
}

bool blum_lower_bound_check(std::int64_t d, std::int64_t k, double tau) {
    if (d < 1 || k < 0 || tau <= 0 || tau > 1)
        throw std::invalid_argument("blum_lower_bound_check: bad arguments");
    return static_cast<double>(k) > (static_cast<double>(d) * tau * tau - 1.0) / 2.0;
}

}  // namespace lab
