#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lab/boosting.hpp"

using namespace lab;

namespace {

BoostState fresh_state(const SourceDistribution& source) {
    BoostState state;
    state.round_weights.resize(static_cast<std::size_t>(source.matrix->cols()));
    for (Eigen::Index x = 0; x < source.matrix->cols(); ++x)
        state.round_weights[x] = source.example_dist.prob(x);
    state.pool_remaining = 100;
    return state;
}

Feature table_feature(std::initializer_list<int> values) {
    Feature f;
    f.values.resize(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (int v : values) f.values(i++) = v;
    return f;
}

}  // namespace

TEST_CASE("round budget arithmetic") {
    CHECK(adaboost_round_budget(0.1, 0.25) == 24);  // ceil(ln 20 / (2 * 0.0625))
    CHECK(adaboost_round_budget(0.1, 1e-10) == (std::uint64_t{1} << 62));  // saturated
}

TEST_CASE("adaboost round accept, reject, and short-circuit") {
    const auto m = make_parity_class(2);
    const SourceDistribution source(m, 0, DyadicDistribution::uniform(4));

    auto state = fresh_state(source);
    // Zero-error candidate: the run collapses to that single feature.
    Feature exact = table_feature({1, 1, 1, 1});  // row 0 of the parity table
    CHECK(adaboost_round(state, exact, source, 0.25) == RoundOutcome::ExactShortCircuit);
    CHECK(state.accepted.size() == 1);
    CHECK(state.exact_short_circuit);

    // Orthogonal row: error exactly 1/2, rejected at any positive gamma.
    state = fresh_state(source);
    Feature orth = table_feature({m(1, 0), m(1, 1), m(1, 2), m(1, 3)});
    CHECK(adaboost_round(state, orth, source, 0.05) == RoundOutcome::Rejected);

    // One disagreement out of four: err = 1/4, accepted with the textbook alpha.
    state = fresh_state(source);
    Feature weak = table_feature({1, 1, 1, -1});
    CHECK(adaboost_round(state, weak, source, 0.25) == RoundOutcome::Accepted);
    const double err = state.accepted.back().err;
    CHECK(err == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(state.accepted.back().alpha ==
          doctest::Approx(0.5 * std::log(3.0)).epsilon(1e-12));
    // Reweighting identity: the accepted feature has error exactly 1/2
    // under the updated weights.
    double reweighted_err = 0;
    for (Eigen::Index x = 0; x < 4; ++x)
        if (weak(x) != source.label(x)) reweighted_err += state.round_weights[x];
    CHECK(reweighted_err == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("synthetic weak learner error is positive and bounded") {
    const auto m = make_parity_class(3);
    const SourceDistribution source(m, 5, DyadicDistribution::uniform(8));
    auto state = fresh_state(source);
    for (int round = 0; round < 12; ++round) {
        const Feature f = synthetic_weak_feature(state, source, 0.25);
        double err = 0;
        for (Eigen::Index x = 0; x < 8; ++x)
            if (f(x) != source.label(x)) err += state.round_weights[x];
        CHECK(err > 0.0);
        CHECK(err <= 0.25 + 1e-12);
        const auto outcome = adaboost_round(state, f, source, 0.25);
        CHECK(outcome == RoundOutcome::Accepted);
    }
}

TEST_CASE("boosting synthetic gamma=1/4 learners meets the round budget") {
    // 16-column domain so every per-round distribution has a light column.
    const auto m = make_parity_class(4);
    const SourceDistribution source(m, 7, DyadicDistribution::uniform(16));
    auto state = fresh_state(source);
    double bound = 1.0;
    bool reached = false;
    for (std::uint64_t round = 0; round < 24 && !reached; ++round) {
        const Feature f = synthetic_weak_feature(state, source, 0.25);
        REQUIRE(adaboost_round(state, f, source, 0.25) == RoundOutcome::Accepted);
        const double err = state.accepted.back().err;
        bound *= 2.0 * std::sqrt(err * (1.0 - err));
        double train_err = 0;
        for (Eigen::Index x = 0; x < 16; ++x)
            if (state.vote(x) != source.label(x)) train_err += source.example_dist.prob(x);
        CHECK(train_err <= bound + 1e-12);  // the per-round bound dominates
        reached = train_err <= 0.1;
    }
    CHECK(reached);
}

TEST_CASE("boost_from_mu_feat learns a parity target") {
    const auto m = make_parity_class(2);
    const auto u4 = DyadicDistribution::uniform(4);
    const SourceDistribution source(m, 2, u4);
    BoostOptions opt;
    opt.epsilon_target = 0.1;
    opt.seed = 3;
    opt.sqdim_for_reference = 4;
    const auto r = boost_from_mu_feat(source, u4, opt);
    CHECK_FALSE(r.budget_exhausted);
    CHECK(r.estimate.epsilon_achieved <= 0.1);
    CHECK(r.estimate.d_used >= 1);
    CHECK(r.estimate.d_kept == r.model.features.size());
    CHECK(r.estimate.reference_bound == doctest::Approx(std::pow(4.0, 24.01) / 0.1));
    for (Eigen::Index x = 0; x < 4; ++x) CHECK(r.model.predict(x) == m(2, x));
}

TEST_CASE("adc estimate over the parity class") {
    const auto m = make_parity_class(2);
    const auto u4 = DyadicDistribution::uniform(4);
    const auto r = adc_estimate(m, u4, {u4}, 0.1, 0.05, 20, 1, {});
    CHECK(r.success_fraction == 1.0);
    CHECK(r.d_used_per_trial.size() == 20);
    CHECK(r.quantile_d_used >= 1);
    CHECK(r.markov_holds);
}

TEST_CASE("degenerate single-function class boosts immediately") {
    Eigen::MatrixXi e(1, 4);
    e << 1, -1, 1, -1;
    const SignMatrix m(e);
    const auto u4 = DyadicDistribution::uniform(4);
    const SourceDistribution source(m, 0, u4);
    const auto r = boost_from_mu_feat(source, DyadicDistribution::point_mass(1, 0), {});
    CHECK(r.estimate.epsilon_achieved == 0.0);
    CHECK(r.model.features.size() == 1);
}
