#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "lab/sign_matrix.hpp"

namespace lab {

struct DegenerateRectangleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Rectangle {
    std::vector<Eigen::Index> row_set;
    std::vector<Eigen::Index> col_set;
};

struct DiscrepancyResult {
    double value = 0.0;  // exact: a dyadic rational well within double precision
    Rectangle witness;
    DyadicDistribution zeta_row = DyadicDistribution::point_mass(1, 0);
    DyadicDistribution zeta_col = DyadicDistribution::point_mass(1, 0);
    bool certified_exact_rectangle = false;
};

// Deterministic 2-bit protocol: the first speaker sends a bit that depends
// on its input, the other party answers with the output bit as a function
// of its own input and the received bit.  The last bit transmitted is the
// output, mapped bit 1 -> +1, bit 0 -> -1.
struct ProtocolTree {
    enum class Order { RowFirst, ColFirst };
    Order order = Order::RowFirst;
    std::vector<int> first_message;                 // speaker input -> bit
    std::vector<std::array<int, 2>> second_message; // (responder input, received bit) -> bit

    int output(Eigen::Index f, Eigen::Index x) const {
        const int b1 = (order == Order::RowFirst) ? first_message[f] : first_message[x];
        const int b2 = (order == Order::RowFirst) ? second_message[x][b1] : second_message[f][b1];
        return b2 ? 1 : -1;
    }
};

// The randomized 2-bit protocol built from a witness rectangle: both
// parties announce membership; inside the rectangle the output agrees with
// the matrix entry with probability (bias+1)/2, outside it is a fair coin.
struct RectangleProtocol {
    Rectangle rect;
    double bias = 0.0;          // conditional bias p of the zeta-weighted matrix on rect
    std::uint32_t bias_q16 = 0; // (bias+1)/2 quantized to denominator 2^16, for sampling
    double rect_mass = 0.0;
};

// Exact max over rectangles of |sum_{(f,x) in R} zeta(f,x) A(f;x)| for the
// product distribution zeta = zeta_row x zeta_col.
DiscrepancyResult discrepancy_under(const SignMatrix& m, const DyadicDistribution& zeta_row,
                                    const DyadicDistribution& zeta_col);

// Heuristic minimization of discrepancy over product distributions:
// coordinate descent on dyadic grids at resolution 2^-grid, random
// restarts, uniform always seeded.  The returned value is a certified
// upper bound on disc^x since every inner evaluation is exact.
DiscrepancyResult discprod_search(const SignMatrix& m, int grid = 6, int restarts = 32,
                                  std::uint64_t seed = 0);

RectangleProtocol protocol_from_rectangle(const SignMatrix& m, const DyadicDistribution& zeta_row,
                                          const DyadicDistribution& zeta_col,
                                          const Rectangle& rect);

// Exact expectation of pi(f,x) A(f;x) under zeta, protocol coins
// marginalized analytically.
double correlation(const SignMatrix& m, const ProtocolTree& pi, const DyadicDistribution& zeta_row,
                   const DyadicDistribution& zeta_col);
double correlation(const SignMatrix& m, const RectangleProtocol& pi,
                   const DyadicDistribution& zeta_row, const DyadicDistribution& zeta_col);

// Visits every deterministic 2-bit protocol for the given input sizes,
// once per distinct behavior table.  Returns the number of canonical
// protocols visited.
std::size_t enumerate_dcc2(Eigen::Index rows, Eigen::Index cols,
                           const std::function<void(const ProtocolTree&)>& visit);

// Exact R2(Eval) in factored form: E_{f,g~mu}[ corr_rho(f,g)^2 ].
double r2_norm(const SignMatrix& m, const DyadicDistribution& mu, const DyadicDistribution& rho);

// Test-only cross-check: raw 4-tuple enumeration over the expanded
// uniform domain.
double r2_norm_expanded(const SignMatrix& m, const DyadicDistribution& mu,
                        const DyadicDistribution& rho);

// Eval as a sign matrix on the expanded uniform domain 2^{k_mu} x 2^{k_rho}.
SignMatrix expand_eval(const SignMatrix& m, const DyadicDistribution& mu,
                       const DyadicDistribution& rho);

struct CorrBoundReport {
    double max_correlation = 0.0;
    double r2 = 0.0;
    double bound = 0.0;  // 4 * r2^{1/4}
    std::size_t protocols = 0;
    bool holds = false;
};

// Exhaustive 2-bit protocol check of the correlation bound on the
// expanded uniform domain.
CorrBoundReport corr_bound_check(const SignMatrix& m, const DyadicDistribution& mu,
                                 const DyadicDistribution& rho);

struct SandwichReport {
    std::int64_t sq_lb = 0;
    double disc_ub = 0.0;
    double left_lhs = 0.0;   // sqrt(sq_lb / 2)
    double left_rhs = 0.0;   // 1 / disc_ub
    bool left_certified = false;
    double right_rhs = 0.0;  // 8 * sq_lb^2
    bool right_consistent = false;  // indication only, not a certificate
};

SandwichReport sherstov_sandwich_check(std::int64_t sqdim_lb, double disc_ub);

}  // namespace lab
