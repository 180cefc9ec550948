#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "lab/sign_matrix.hpp"

using namespace lab;

TEST_CASE("parity n=1 table") {
    const auto m = make_parity_class(1);
    REQUIRE(m.rows() == 2);
    REQUIRE(m.cols() == 2);
    CHECK(m(0, 0) == 1);
    CHECK(m(0, 1) == 1);
    CHECK(m(1, 0) == 1);
    CHECK(m(1, 1) == -1);
}

TEST_CASE("parity rows are exactly orthogonal in integer arithmetic") {
    for (int n = 1; n <= 4; ++n) {
        const auto m = make_parity_class(n);
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            CHECK(m(i, 0) == 1);  // column x=0 has <S,0> = 0
            for (Eigen::Index j = i + 1; j < m.rows(); ++j) {
                long sum = 0;
                for (Eigen::Index x = 0; x < m.cols(); ++x) sum += m(i, x) * m(j, x);
                CHECK(sum == 0);
            }
        }
        // Row S=0 is the empty parity, constant +1.
        for (Eigen::Index x = 0; x < m.cols(); ++x) CHECK(m(0, x) == 1);
    }
}

TEST_CASE("parity size limits") {
    CHECK_THROWS_AS(make_parity_class(0), SizeLimitError);
    CHECK_THROWS_AS(make_parity_class(15), SizeLimitError);
}

TEST_CASE("sign matrix rejects bad entries and oversize tables") {
    Eigen::MatrixXi bad(1, 2);
    bad << 1, 0;
    CHECK_THROWS_AS(SignMatrix{bad}, std::invalid_argument);
}

TEST_CASE("zarankiewicz membership") {
    Eigen::MatrixXi ones = Eigen::MatrixXi::Ones(3, 3);
    CHECK_FALSE(zarankiewicz_member(SignMatrix(ones), 2));

    Eigen::MatrixXi ident = -Eigen::MatrixXi::Ones(3, 3);
    for (int i = 0; i < 3; ++i) ident(i, i) = 1;
    CHECK(zarankiewicz_member(SignMatrix(ident), 2));

    // c larger than the matrix: no c x c submatrix exists at all.
    CHECK(zarankiewicz_member(SignMatrix(ones), 4));

    Eigen::MatrixXi all_minus = -Eigen::MatrixXi::Ones(4, 4);
    CHECK(zarankiewicz_member(SignMatrix(all_minus), 2));
}

TEST_CASE("generated zarankiewicz matrices verify") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto m = make_zarankiewicz_random(4, 2, seed);
        CHECK(zarankiewicz_member(m, 2));
        const auto m8 = make_zarankiewicz_random(8, 2, seed);
        CHECK(zarankiewicz_member(m8, 2));
    }
}

TEST_CASE("dyadic distribution expand round trip") {
    const DyadicDistribution d({3, 1, 4}, 3);
    const auto table = d.expand();
    REQUIRE(table.size() == 8);
    std::map<std::size_t, std::uint64_t> counts;
    for (auto i : table) ++counts[i];
    CHECK(counts[0] == 3);
    CHECK(counts[1] == 1);
    CHECK(counts[2] == 4);
    // index_from_bits agrees with the expanded table on every bit pattern.
    for (std::uint64_t u = 0; u < 8; ++u) CHECK(d.index_from_bits(u) == table[u]);
}

TEST_CASE("dyadic constructor validates the mass") {
    CHECK_THROWS_AS(DyadicDistribution({1, 2}, 2), std::invalid_argument);
    CHECK_THROWS_AS(DyadicDistribution({}, 0), std::invalid_argument);
}

TEST_CASE("from_reals quantizes to an exact dyadic distribution") {
    const auto d = DyadicDistribution::from_reals({0.3, 0.3, 0.4}, 10);
    std::uint64_t total = 0;
    for (auto w : d.weights()) total += w;
    CHECK(total == 1024);
    CHECK(d.prob(2) == doctest::Approx(0.4).epsilon(0.01));
}

TEST_CASE("point mass source yields constant samples") {
    const auto m = make_parity_class(2);
    const SourceDistribution source(m, 1, DyadicDistribution::point_mass(4, 3));
    const auto samples = sample_source(source, 50, 7);
    for (const auto& s : samples) {
        CHECK(s.col_index == 3);
        CHECK(s.label == m(1, 3));
    }
}

TEST_CASE("uniform sampling concentrates and is seed deterministic") {
    const auto m = make_parity_class(2);
    const SourceDistribution source(m, 0, DyadicDistribution::uniform(4));
    const auto a = sample_source(source, 40000, 11);
    const auto b = sample_source(source, 40000, 11);
    std::map<Eigen::Index, int> counts;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].col_index == b[i].col_index);
        ++counts[a[i].col_index];
    }
    for (Eigen::Index x = 0; x < 4; ++x)
        CHECK(std::abs(counts[x] / 40000.0 - 0.25) < 0.02);
}
