#include "lab/sign_matrix.hpp"

#include <bit>

namespace lab {

SignMatrix make_parity_class(int n) {
    if (n < 1 || n > 14) throw SizeLimitError("parity class: n must be in [1,14]");
    const Eigen::Index m = Eigen::Index{1} << n;
    Eigen::MatrixXi entries(m, m);
    std::vector<std::string> row_labels, col_labels;
    for (Eigen::Index s = 0; s < m; ++s) {
        for (Eigen::Index x = 0; x < m; ++x) {
            const auto dot = std::popcount(static_cast<std::uint64_t>(s & x));
            entries(s, x) = (dot % 2 == 0) ? 1 : -1;
        }
        row_labels.push_back("S=" + std::to_string(s));
    }
    for (Eigen::Index x = 0; x < m; ++x) col_labels.push_back("x=" + std::to_string(x));
    return SignMatrix(std::move(entries), std::move(row_labels), std::move(col_labels));
}

namespace {

// Recursive search for a c x c all-(+1) submatrix: extend a row prefix,
// tracking the set of columns that are +1 on every chosen row.
bool has_all_ones_submatrix(const Eigen::MatrixXi& a, int c, Eigen::Index next_row, int chosen,
                            const std::vector<Eigen::Index>& live_cols) {
    if (chosen == c) return true;
    if (static_cast<int>(live_cols.size()) < c) return false;
    for (Eigen::Index r = next_row; r <= a.rows() - (c - chosen); ++r) {
        std::vector<Eigen::Index> narrowed;
        for (auto j : live_cols)
            if (a(r, j) == 1) narrowed.push_back(j);
        if (static_cast<int>(narrowed.size()) >= c &&
            has_all_ones_submatrix(a, c, r + 1, chosen + 1, narrowed))
            return true;
    }
    return false;
}

}  // namespace

bool zarankiewicz_member(const SignMatrix& m, int c) {
    if (m.rows() != m.cols()) throw std::invalid_argument("zarankiewicz: matrix not square");
    if (c > m.rows()) return true;  // no c x c submatrix exists
    std::vector<Eigen::Index> all_cols;
    for (Eigen::Index j = 0; j < m.cols(); ++j) all_cols.push_back(j);
    return !has_all_ones_submatrix(m.entries(), c, 0, 0, all_cols);
}

SignMatrix make_zarankiewicz_random(int N, int c, std::uint64_t seed, double plus_density,
                                    int max_retries) {
    if (N < c || c < 2) throw std::invalid_argument("zarankiewicz: need N >= c >= 2");
    auto eng = make_engine(seed);
    std::bernoulli_distribution plus(plus_density);
    for (int attempt = 0; attempt < max_retries; ++attempt) {
        Eigen::MatrixXi entries(N, N);
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) entries(i, j) = plus(eng) ? 1 : -1;
        SignMatrix candidate(std::move(entries));
        if (zarankiewicz_member(candidate, c)) return candidate;
    }
    throw GenerationFailedError("zarankiewicz: rejection sampling exhausted retries");
}

std::vector<LabeledSample> sample_source(const SourceDistribution& source, std::size_t count,
                                         std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("sample_source: count must be >= 1");
    auto eng = make_engine(seed);
    std::vector<LabeledSample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto x = static_cast<Eigen::Index>(source.example_dist.sample(eng));
        out.push_back({x, source.label(x)});
    }
    return out;
}

}  // namespace lab
