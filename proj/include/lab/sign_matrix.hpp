#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lab/dyadic.hpp"
#include "lab/rng.hpp"

namespace lab {

struct SizeLimitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GenerationFailedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ±1 table of a finite function class: rows are concepts f, columns are
// domain points x.  Immutable after construction.
class SignMatrix {
public:
    static constexpr std::int64_t kMaxCells = std::int64_t{1} << 24;

    SignMatrix(Eigen::MatrixXi entries, std::vector<std::string> row_labels = {},
               std::vector<std::string> col_labels = {})
        : entries_(std::move(entries)),
          row_labels_(std::move(row_labels)),
          col_labels_(std::move(col_labels)) {
        if (entries_.rows() < 1 || entries_.cols() < 1)
            throw std::invalid_argument("sign matrix: empty");
        if (static_cast<std::int64_t>(entries_.rows()) * entries_.cols() > kMaxCells)
            throw SizeLimitError("sign matrix: exceeds dense size cap");
        for (Eigen::Index i = 0; i < entries_.rows(); ++i)
            for (Eigen::Index j = 0; j < entries_.cols(); ++j)
                if (entries_(i, j) != 1 && entries_(i, j) != -1)
                    throw std::invalid_argument("sign matrix: entry not in {-1,+1}");
        if (row_labels_.empty())
            for (Eigen::Index i = 0; i < entries_.rows(); ++i)
                row_labels_.push_back("f" + std::to_string(i));
        if (col_labels_.empty())
            for (Eigen::Index j = 0; j < entries_.cols(); ++j)
                col_labels_.push_back("x" + std::to_string(j));
        if (static_cast<Eigen::Index>(row_labels_.size()) != entries_.rows() ||
            static_cast<Eigen::Index>(col_labels_.size()) != entries_.cols())
            throw std::invalid_argument("sign matrix: label count mismatch");
    }

    Eigen::Index rows() const { return entries_.rows(); }
    Eigen::Index cols() const { return entries_.cols(); }
    int operator()(Eigen::Index f, Eigen::Index x) const { return entries_(f, x); }
    const Eigen::MatrixXi& entries() const { return entries_; }
    const std::vector<std::string>& row_labels() const { return row_labels_; }
    const std::vector<std::string>& col_labels() const { return col_labels_; }

    SignMatrix negated() const { return SignMatrix(-entries_, row_labels_, col_labels_); }

private:
    Eigen::MatrixXi entries_;
    std::vector<std::string> row_labels_;
    std::vector<std::string> col_labels_;
};

// Labels x with the sign-matrix row of the target concept: D_{f,rho}.
struct SourceDistribution {
    const SignMatrix* matrix;
    Eigen::Index target_row;
    DyadicDistribution example_dist;

    SourceDistribution(const SignMatrix& m, Eigen::Index f, DyadicDistribution rho)
        : matrix(&m), target_row(f), example_dist(std::move(rho)) {
        if (f < 0 || f >= m.rows())
            throw std::invalid_argument("source: target row out of range");
        if (static_cast<Eigen::Index>(example_dist.size()) != m.cols())
            throw std::invalid_argument("source: distribution length != matrix cols");
    }

    int label(Eigen::Index x) const { return (*matrix)(target_row, x); }
};

struct LabeledSample {
    Eigen::Index col_index;
    int label;  // in {-1,+1}
};

// 2^n x 2^n parity table: entry (S, x) = (-1)^{<S,x> mod 2}.
SignMatrix make_parity_class(int n);

// Rejection sampling from a +1-density, each candidate exhaustively
// verified against the forbidden-submatrix condition.
SignMatrix make_zarankiewicz_random(int N, int c, std::uint64_t seed,
                                    double plus_density = 0.25, int max_retries = 10000);

// True iff no c x c submatrix of a square sign matrix is all +1.
bool zarankiewicz_member(const SignMatrix& m, int c);

std::vector<LabeledSample> sample_source(const SourceDistribution& source, std::size_t count,
                                         std::uint64_t seed);

}  // namespace lab
