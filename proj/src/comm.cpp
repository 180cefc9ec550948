#include "lab/comm.hpp"

#include <cmath>
#include <unordered_set>

namespace lab {

namespace {

using Int = __int128;

// Signed zeta-weighted mass of one rectangle, as an integer numerator over
// 2^{k_row + k_col}.
Int rect_numerator(const SignMatrix& m, const DyadicDistribution& zr, const DyadicDistribution& zc,
                   const Rectangle& rect) {
    Int total = 0;
    for (auto i : rect.row_set) {
        Int row_sum = 0;
        for (auto j : rect.col_set)
            row_sum += static_cast<Int>(zc.weights()[j]) * m(i, j);
        total += static_cast<Int>(zr.weights()[i]) * row_sum;
    }
    return total;
}

double to_value(Int num, int k) {
    return static_cast<double>(static_cast<long double>(num) /
                               static_cast<long double>(std::uint64_t{1} << k));
}

}  // namespace

DiscrepancyResult discrepancy_under(const SignMatrix& m, const DyadicDistribution& zeta_row,
                                    const DyadicDistribution& zeta_col) {
    if (m.rows() + m.cols() > 26)
        throw SizeLimitError("discrepancy_under: rows + cols exceeds 26");
    if (static_cast<Eigen::Index>(zeta_row.size()) != m.rows() ||
        static_cast<Eigen::Index>(zeta_col.size()) != m.cols())
        throw std::invalid_argument("discrepancy_under: distribution size mismatch");

    // Enumerate subsets of the smaller side; the optimal set on the other
    // side keeps exactly the indices whose signed marginal has the majority
    // sign, so each subset is scored in linear time.
    const bool over_cols = m.cols() <= m.rows();
    const Eigen::Index small = over_cols ? m.cols() : m.rows();
    const Eigen::Index big = over_cols ? m.rows() : m.cols();
    const auto& small_dist = over_cols ? zeta_col : zeta_row;
    const auto& big_dist = over_cols ? zeta_row : zeta_col;

    Int best = -1;
    std::uint32_t best_mask = 0;
    bool best_positive = true;
    for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << small); ++mask) {
        Int pos = 0, neg = 0;
        for (Eigen::Index i = 0; i < big; ++i) {
            Int s = 0;
            for (Eigen::Index j = 0; j < small; ++j) {
                if (!(mask & (std::uint32_t{1} << j))) continue;
                const int a = over_cols ? m(i, j) : m(j, i);
                s += static_cast<Int>(small_dist.weights()[j]) * a;
            }
            s *= static_cast<Int>(big_dist.weights()[i]);
            if (s > 0) pos += s;
            if (s < 0) neg += s;
        }
        if (pos > best) {
            best = pos;
            best_mask = mask;
            best_positive = true;
        }
        if (-neg > best) {
            best = -neg;
            best_mask = mask;
            best_positive = false;
        }
    }

    // Rebuild the witness rectangle from the winning subset.
    Rectangle witness;
    for (Eigen::Index j = 0; j < small; ++j)
        if (best_mask & (std::uint32_t{1} << j))
            (over_cols ? witness.col_set : witness.row_set).push_back(j);
    for (Eigen::Index i = 0; i < big; ++i) {
        Int s = 0;
        for (Eigen::Index j = over_cols ? 0 : 0; j < small; ++j) {
            if (!(best_mask & (std::uint32_t{1} << j))) continue;
            const int a = over_cols ? m(i, j) : m(j, i);
            s += static_cast<Int>(small_dist.weights()[j]) * a;
        }
        if ((best_positive && s > 0) || (!best_positive && s < 0))
            (over_cols ? witness.row_set : witness.col_set).push_back(i);
    }

    DiscrepancyResult out{to_value(best, zeta_row.scale_exponent() + zeta_col.scale_exponent()),
                          std::move(witness), zeta_row, zeta_col, true};
    return out;
}

namespace {

DyadicDistribution random_dyadic(std::size_t n, int k, std::mt19937_64& eng) {
    std::vector<double> p(n);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (auto& v : p) v = u(eng);
    return DyadicDistribution::from_reals(p, k);
}

// One unit of mass 2^-k moved from index a to index b, when legal.
bool shift_unit(std::vector<std::uint64_t>& w, std::size_t a, std::size_t b) {
    if (a == b || w[a] == 0) return false;
    --w[a];
    ++w[b];
    return true;
}

}  // namespace

DiscrepancyResult discprod_search(const SignMatrix& m, int grid, int restarts,
                                  std::uint64_t seed) {
    const auto rows = static_cast<std::size_t>(m.rows());
    const auto cols = static_cast<std::size_t>(m.cols());

    DiscrepancyResult best =
        discrepancy_under(m, DyadicDistribution::uniform(rows), DyadicDistribution::uniform(cols));

    for (int r = 0; r < restarts; ++r) {
        auto eng = make_engine(sub_seed(seed, static_cast<std::uint64_t>(r)));
        DyadicDistribution zr =
            (r == 0) ? DyadicDistribution::from_reals(std::vector<double>(rows, 1.0), grid)
                     : random_dyadic(rows, grid, eng);
        DyadicDistribution zc =
            (r == 0) ? DyadicDistribution::from_reals(std::vector<double>(cols, 1.0), grid)
                     : random_dyadic(cols, grid, eng);
        DiscrepancyResult current = discrepancy_under(m, zr, zc);
        bool improved = true;
        while (improved) {
            improved = false;
            // Row marginal moves, then column marginal moves.
            for (int side = 0; side < 2; ++side) {
                const std::size_t n = side == 0 ? rows : cols;
                for (std::size_t a = 0; a < n && !improved; ++a) {
                    for (std::size_t b = 0; b < n && !improved; ++b) {
                        auto wr = current.zeta_row.weights();
                        auto wc = current.zeta_col.weights();
                        auto& w = side == 0 ? wr : wc;
                        if (!shift_unit(w, a, b)) continue;
                        DyadicDistribution nr(wr, current.zeta_row.scale_exponent());
                        DyadicDistribution nc(wc, current.zeta_col.scale_exponent());
                        DiscrepancyResult cand = discrepancy_under(m, nr, nc);
                        if (cand.value < current.value) {
                            current = std::move(cand);
                            improved = true;
                        }
                    }
                }
            }
        }
        if (current.value < best.value) best = std::move(current);
    }
    return best;
}

RectangleProtocol protocol_from_rectangle(const SignMatrix& m, const DyadicDistribution& zeta_row,
                                          const DyadicDistribution& zeta_col,
                                          const Rectangle& rect) {
    Int mass_num = 0;
    for (auto i : rect.row_set)
        for (auto j : rect.col_set)
            mass_num += static_cast<Int>(zeta_row.weights()[i]) * zeta_col.weights()[j];
    if (mass_num == 0) throw DegenerateRectangleError("protocol_from_rectangle: zero-mass rectangle");
    const Int signed_num = rect_numerator(m, zeta_row, zeta_col, rect);
    const int k = zeta_row.scale_exponent() + zeta_col.scale_exponent();

    RectangleProtocol p;
    p.rect = rect;
    p.rect_mass = to_value(mass_num, k);
    p.bias = static_cast<double>(static_cast<long double>(signed_num) /
                                 static_cast<long double>(mass_num));
    const double agree = (p.bias + 1.0) / 2.0;
    p.bias_q16 = static_cast<std::uint32_t>(std::lround(agree * 65536.0));
    return p;
}

double correlation(const SignMatrix& m, const ProtocolTree& pi, const DyadicDistribution& zeta_row,
                   const DyadicDistribution& zeta_col) {
    Int num = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            num += static_cast<Int>(zeta_row.weights()[i]) * zeta_col.weights()[j] *
                   pi.output(i, j) * m(i, j);
    return to_value(num, zeta_row.scale_exponent() + zeta_col.scale_exponent());
}

double correlation(const SignMatrix& m, const RectangleProtocol& pi,
                   const DyadicDistribution& zeta_row, const DyadicDistribution& zeta_col) {
    // Inside the rectangle the output agrees with the matrix entry with
    // probability (bias+1)/2, so E[pi * A] = bias per cell; the fair coin
    // outside contributes nothing.
    Int mass_num = 0;
    for (auto i : pi.rect.row_set)
        for (auto j : pi.rect.col_set)
            mass_num += static_cast<Int>(zeta_row.weights()[i]) * zeta_col.weights()[j];
    const int k = zeta_row.scale_exponent() + zeta_col.scale_exponent();
    return pi.bias * to_value(mass_num, k);
}

std::size_t enumerate_dcc2(Eigen::Index rows, Eigen::Index cols,
                           const std::function<void(const ProtocolTree&)>& visit) {
    if (rows > 8 || cols > 8) throw SizeLimitError("enumerate_dcc2: inputs capped at 8 per party");
    if (rows * cols > 64) throw SizeLimitError("enumerate_dcc2: behavior table too large");

    std::unordered_set<std::uint64_t> seen;
    std::size_t visited = 0;

    auto behavior_key = [&](const ProtocolTree& pi) {
        std::uint64_t key = 0;
        for (Eigen::Index f = 0; f < rows; ++f)
            for (Eigen::Index x = 0; x < cols; ++x)
                if (pi.output(f, x) == 1) key |= std::uint64_t{1} << (f * cols + x);
        return key;
    };

    for (int order = 0; order < 2; ++order) {
        const Eigen::Index n1 = order == 0 ? rows : cols;
        const Eigen::Index n2 = order == 0 ? cols : rows;
        for (std::uint32_t fm = 0; fm < (std::uint32_t{1} << n1); ++fm) {
            for (std::uint64_t sm = 0; sm < (std::uint64_t{1} << (2 * n2)); ++sm) {
                ProtocolTree pi;
                pi.order = order == 0 ? ProtocolTree::Order::RowFirst : ProtocolTree::Order::ColFirst;
                pi.first_message.resize(n1);
                for (Eigen::Index i = 0; i < n1; ++i)
                    pi.first_message[i] = (fm >> i) & 1;
                pi.second_message.resize(n2);
                for (Eigen::Index i = 0; i < n2; ++i)
                    pi.second_message[i] = {static_cast<int>((sm >> (2 * i)) & 1),
                                            static_cast<int>((sm >> (2 * i + 1)) & 1)};
                if (seen.insert(behavior_key(pi)).second) {
                    visit(pi);
                    ++visited;
                }
            }
        }
    }
    return visited;
}

double r2_norm(const SignMatrix& m, const DyadicDistribution& mu, const DyadicDistribution& rho) {
    if (mu.scale_exponent() + rho.scale_exponent() > 20)
        throw SizeLimitError("r2_norm: expanded domain exceeds 2^20 cells");
    // R2 = E_{f,g~mu}[ (E_{x~rho}[f(x) g(x)])^2 ], numerically identical to
    // the 4-fold product expectation on the expanded domain.
    long double total = 0;
    const long double mu_den = static_cast<long double>(mu.denominator());
    const long double rho_den = static_cast<long double>(rho.denominator());
    for (Eigen::Index f = 0; f < m.rows(); ++f) {
        for (Eigen::Index g = 0; g < m.rows(); ++g) {
            std::int64_t corr_num = 0;
            for (Eigen::Index x = 0; x < m.cols(); ++x)
                corr_num += static_cast<std::int64_t>(rho.weights()[x]) * m(f, x) * m(g, x);
            const long double corr = static_cast<long double>(corr_num) / rho_den;
            total += static_cast<long double>(mu.weights()[f]) / mu_den *
                     static_cast<long double>(mu.weights()[g]) / mu_den * corr * corr;
        }
    }
    return static_cast<double>(total);
}

SignMatrix expand_eval(const SignMatrix& m, const DyadicDistribution& mu,
                       const DyadicDistribution& rho) {
    const auto row_table = mu.expand();
    const auto col_table = rho.expand();
    Eigen::MatrixXi entries(static_cast<Eigen::Index>(row_table.size()),
                            static_cast<Eigen::Index>(col_table.size()));
    for (std::size_t r = 0; r < row_table.size(); ++r)
        for (std::size_t w = 0; w < col_table.size(); ++w)
            entries(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(w)) =
                m(static_cast<Eigen::Index>(row_table[r]), static_cast<Eigen::Index>(col_table[w]));
    return SignMatrix(std::move(entries));
}

double r2_norm_expanded(const SignMatrix& m, const DyadicDistribution& mu,
                        const DyadicDistribution& rho) {
    const SignMatrix eval = expand_eval(m, mu, rho);
    const auto R = eval.rows();
    const auto W = eval.cols();
    std::int64_t total = 0;
    for (Eigen::Index r1 = 0; r1 < R; ++r1)
        for (Eigen::Index r2 = 0; r2 < R; ++r2)
            for (Eigen::Index w1 = 0; w1 < W; ++w1)
                for (Eigen::Index w2 = 0; w2 < W; ++w2)
                    total += eval(r1, w1) * eval(r1, w2) * eval(r2, w1) * eval(r2, w2);
    return static_cast<double>(total) /
           (static_cast<double>(R) * R * static_cast<double>(W) * W);
}

CorrBoundReport corr_bound_check(const SignMatrix& m, const DyadicDistribution& mu,
                                 const DyadicDistribution& rho) {
    const SignMatrix eval = expand_eval(m, mu, rho);
    const auto uniform_rows = DyadicDistribution::uniform(static_cast<std::size_t>(eval.rows()));
    const auto uniform_cols = DyadicDistribution::uniform(static_cast<std::size_t>(eval.cols()));

    CorrBoundReport report;
    report.r2 = r2_norm(m, mu, rho);
    report.bound = 4.0 * std::pow(report.r2, 0.25);
    report.protocols = enumerate_dcc2(eval.rows(), eval.cols(), [&](const ProtocolTree& pi) {
        const double c = std::abs(correlation(eval, pi, uniform_rows, uniform_cols));
        if (c > report.max_correlation) report.max_correlation = c;
    });
    report.holds = report.max_correlation <= report.bound + 1e-12;
    return report;
}

SandwichReport sherstov_sandwich_check(std::int64_t sqdim_lb, double disc_ub) {
    SandwichReport r;
    r.sq_lb = sqdim_lb;
    r.disc_ub = disc_ub;
    r.left_lhs = std::sqrt(static_cast<double>(sqdim_lb) / 2.0);
    r.left_rhs = 1.0 / disc_ub;
    r.left_certified = r.left_lhs <= r.left_rhs + 1e-12;
    r.right_rhs = 8.0 * static_cast<double>(sqdim_lb) * static_cast<double>(sqdim_lb);
    r.right_consistent = r.left_rhs <= r.right_rhs + 1e-12;
    return r;
}

}  // namespace lab
