#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lab/comm.hpp"
#include "lab/features.hpp"

using namespace lab;

namespace {

SignMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    auto eng = make_engine(seed);
    Eigen::MatrixXi m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = fair_bit(eng) ? 1 : -1;
    return SignMatrix(std::move(m));
}

DyadicDistribution random_dyadic(std::size_t n, int k, std::uint64_t seed) {
    auto eng = make_engine(seed);
    std::vector<double> p(n);
    for (auto& v : p) v = 1.0 + static_cast<double>(eng() % 1000);
    return DyadicDistribution::from_reals(p, k);
}

}  // namespace

TEST_CASE("predict_once sign algebra") {
    Eigen::MatrixXi e(2, 2);
    e.row(0) << 1, -1;
    e.row(1) << -1, 1;  // row 1 = -row 0
    const SignMatrix m(e);
    const auto rho = DyadicDistribution::uniform(2);

    // mu point mass on the target: g = f, so g(z) g(x) f(x) = f(z).
    const SourceDistribution on_f(m, 0, rho);
    for (std::uint64_t s = 0; s < 16; ++s) {
        CHECK(predict_once(on_f, DyadicDistribution::point_mass(2, 0), 1, s) == m(0, 1));
        // mu point mass on -f: the two sign flips cancel.
        CHECK(predict_once(on_f, DyadicDistribution::point_mass(2, 1), 1, s) == m(0, 1));
        CHECK(predict_once(on_f, DyadicDistribution::point_mass(2, 0), 1, s) ==
              predict_once(on_f, DyadicDistribution::point_mass(2, 0), 1, s));
    }
}

TEST_CASE("exact predict success on parity n=1") {
    const auto m = make_parity_class(1);
    const auto u2 = DyadicDistribution::uniform(2);
    CHECK(predict_correlation_exact(m, u2, u2) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(predict_success_prob_exact(m, u2, u2) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("predict correlation equals the two-party norm") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto m = random_matrix(3, 4, seed);
        const auto mu = random_dyadic(3, 4, seed * 7 + 1);
        const auto rho = random_dyadic(4, 4, seed * 7 + 2);
        CHECK(predict_correlation_exact(m, mu, rho) ==
              doctest::Approx(r2_norm(m, mu, rho)).epsilon(1e-12));
    }
}

TEST_CASE("monte carlo estimate concentrates around the exact value") {
    const auto m = make_parity_class(1);
    const auto u2 = DyadicDistribution::uniform(2);
    const double exact = predict_success_prob_exact(m, u2, u2);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto est = predict_success_prob(m, u2, u2, 20000, seed);
        CHECK(std::abs(est.value - exact) <= 4.0 * est.radius);
    }
}

TEST_CASE("derandomized features are signed rows with the exact flip law") {
    const auto m = make_parity_class(2);
    const auto u4 = DyadicDistribution::uniform(4);
    const auto flip = exact_flip_numerators(m, 1, u4);
    REQUIRE(flip.size() == 4);
    CHECK(flip[1] == 0);  // g = target never disagrees
    CHECK(flip[0] == 2);  // orthogonal rows disagree on half the mass

    int plus = 0, minus = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto f = derandomized_feature(m, u4, u4, flip, seed);
        CHECK(f.derandomized);
        bool matches_signed_row = false;
        for (Eigen::Index g = 0; g < 4 && !matches_signed_row; ++g) {
            bool plus_row = true, minus_row = true;
            for (Eigen::Index z = 0; z < 4; ++z) {
                plus_row = plus_row && f(z) == m(g, z);
                minus_row = minus_row && f(z) == -m(g, z);
            }
            matches_signed_row = plus_row || minus_row;
            if (plus_row) ++plus;
            if (minus_row) ++minus;
        }
        CHECK(matches_signed_row);
    }
    CHECK(plus > 0);
    CHECK(minus > 0);
}

TEST_CASE("feature loss complements under negation") {
    const auto m = make_parity_class(2);
    const SourceDistribution source(m, 2, DyadicDistribution::uniform(4));
    const auto drawn = sample_mu_feat(source, DyadicDistribution::uniform(4), 30, 5);
    for (const auto& [feature, report] : drawn) {
        CHECK(feature_loss(feature, source) == report.zero_one_loss);
        CHECK(feature_loss(feature.negated(), source) ==
              doctest::Approx(1.0 - report.zero_one_loss).epsilon(1e-12));
    }
}

TEST_CASE("point mass mu draws only the target up to sign") {
    const auto m = make_parity_class(1);
    const SourceDistribution source(m, 1, DyadicDistribution::uniform(2));
    const auto drawn = sample_mu_feat(source, DyadicDistribution::point_mass(2, 1), 40, 9);
    for (const auto& [feature, report] : drawn) {
        const bool is_f = feature(0) == m(1, 0) && feature(1) == m(1, 1);
        const bool is_neg = feature(0) == -m(1, 0) && feature(1) == -m(1, 1);
        CHECK((is_f || is_neg));
        if (is_f) CHECK(report.zero_one_loss == 0.0);
        if (is_neg) CHECK(report.zero_one_loss == 1.0);
    }
}

TEST_CASE("weak feature probability at the paper's scaling on parity n=1") {
    const auto m = make_parity_class(1);
    const auto u2 = DyadicDistribution::uniform(2);
    const SourceDistribution source(m, 1, u2);
    // sq = 2: features with loss <= 1/2 - 1/16 occur with probability >= 1/16.
    CHECK(weak_feature_probability(source, u2, 1.0 / 16.0) >= 1.0 / 16.0);
}

TEST_CASE("rfl verification on parity n=2") {
    const auto m = make_parity_class(2);
    const auto u4 = DyadicDistribution::uniform(4);
    const double gamma = default_gamma_target(4);
    const auto r = rfl_verify(m, u4, {u4}, gamma, gamma);
    CHECK(r.mass_passing >= 0.99);
    CHECK(r.passes);

    // Larger gamma never increases the passing mass.
    const auto tighter = rfl_verify(m, u4, {u4}, 0.4, gamma);
    CHECK(tighter.mass_passing <= r.mass_passing + 1e-12);

    // Impossible advantage: nothing passes.
    const auto impossible = rfl_verify(m, u4, {u4}, 0.6, gamma);
    CHECK(impossible.mass_passing == 0.0);
}

TEST_CASE("default gamma policy value") {
    const double base = 1.0 / 32.0;  // 1/(8*2^2)
    CHECK(default_gamma_target(2) == doctest::Approx(std::pow(base, 4) / 16.0).epsilon(1e-15));
}

TEST_CASE("averaging bound on enumerated seed values") {
    // X uniform on {0.2, 0.6, 1.0}: mean 0.6; Pr[X <= 0.3] = 1/3 <= (1-0.6)/(1-0.3).
    CHECK(averaging_bound_holds({0.2, 0.6, 1.0}, {1, 1, 1}, 0.5));
    // Degenerate distribution at the mean.
    CHECK(averaging_bound_holds({0.5, 0.5}, {1, 1}, 0.5));
}
