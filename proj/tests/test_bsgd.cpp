#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lab/bsgd.hpp"

using namespace lab;

namespace {

// Central finite differences of the per-output gradient.
double finite_diff_max_rel_error(const ParametricModel& model, const Eigen::VectorXd& w,
                                 const Eigen::VectorXd& x) {
    const double h = 1e-5;
    const auto analytic = model.gradient(w, x);
    double worst = 0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        Eigen::VectorXd wp = w, wm = w;
        wp(i) += h;
        wm(i) -= h;
        const double numeric = (model.evaluate(wp, x) - model.evaluate(wm, x)) / (2 * h);
        const double scale = std::max({std::abs(analytic(i)), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(analytic(i) - numeric) / scale);
    }
    return worst;
}

SourceDistribution parity_source(const SignMatrix& m, Eigen::Index row) {
    return SourceDistribution(m, row,
                              DyadicDistribution::uniform(static_cast<std::size_t>(m.cols())));
}

}  // namespace

TEST_CASE("analytic gradients match finite differences") {
    auto eng = make_engine(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const LinearTanhModel linear(4);
    const MlpTanhModel mlp(4, 5);
    for (int probe = 0; probe < 25; ++probe) {
        Eigen::VectorXd x(4);
        for (Eigen::Index i = 0; i < 4; ++i) x(i) = u(eng) > 0 ? 1.0 : -1.0;
        Eigen::VectorXd wl(linear.param_count()), wm(mlp.param_count());
        for (Eigen::Index i = 0; i < wl.size(); ++i) wl(i) = u(eng);
        for (Eigen::Index i = 0; i < wm.size(); ++i) wm(i) = u(eng);
        CHECK(finite_diff_max_rel_error(linear, wl, x) <= 1e-5);
        CHECK(finite_diff_max_rel_error(mlp, wm, x) <= 1e-5);
    }
}

TEST_CASE("encode_column produces the sign pattern of the index bits") {
    const auto x = encode_column(5, 4);  // binary 0101
    CHECK(x(0) == 1.0);
    CHECK(x(1) == -1.0);
    CHECK(x(2) == 1.0);
    CHECK(x(3) == -1.0);
}

TEST_CASE("grid rounding is a nearest multiple of c clamped to [-1,1]") {
    const double c = 0.0625;
    CHECK(round_to_grid(0.0, c) == 0.0);
    CHECK(round_to_grid(0.032, c) == 0.0625);  // just above the 0.03125 midpoint
    CHECK(round_to_grid(0.031, c) == 0.0);
    CHECK(round_to_grid(0.0625, c) == 0.0625);
    CHECK(round_to_grid(-0.99, c) == -1.0);
    CHECK(round_to_grid(5.0, c) == 1.0);
    CHECK(round_to_grid(-5.0, c) == -1.0);
}

TEST_CASE("minibatch gradient entries sit on the c grid within 3c/4") {
    const auto m = make_parity_class(3);
    const MlpTanhModel model(3, 4);
    auto eng = make_engine(7);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    Eigen::VectorXd w(model.param_count());
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = u(eng);

    std::vector<std::pair<Eigen::VectorXd, int>> batch;
    for (Eigen::Index x = 0; x < 8; ++x) batch.emplace_back(encode_column(x, 3), m(5, x));

    const double c = 0.0625;
    const auto g = clipped_minibatch_gradient(model, w, batch, c);
    // Recompute the clipped average independently.
    Eigen::VectorXd avg = Eigen::VectorXd::Zero(model.param_count());
    for (const auto& [x, y] : batch) {
        const double out = model.evaluate(w, x);
        Eigen::VectorXd grad = (out - y) * model.gradient(w, x);
        avg += grad.cwiseMax(-1.0).cwiseMin(1.0);
    }
    avg /= 8.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        const double steps = g(i) / c;
        CHECK(steps == std::nearbyint(steps));  // exact dyadic multiple
        CHECK(std::abs(g(i) - avg(i)) <= 0.75 * c);
        CHECK(std::abs(g(i)) <= 1.0);
    }
}

TEST_CASE("adversarial rounding hook is validated against the 3c/4 envelope") {
    const auto m = make_parity_class(2);
    const LinearTanhModel model(2);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(2);
    std::vector<std::pair<Eigen::VectorXd, int>> batch;
    for (Eigen::Index x = 0; x < 4; ++x) batch.emplace_back(encode_column(x, 2), m(1, x));
    const double c = 0.25;

    // A legal adversary: round away from zero onto the grid.
    AdversarialRounding legal = [c](const Eigen::VectorXd& avg) {
        Eigen::VectorXd g(avg.size());
        for (Eigen::Index i = 0; i < avg.size(); ++i) {
            double v = std::ceil(std::abs(avg(i)) / c) * c * (avg(i) >= 0 ? 1 : -1);
            g(i) = std::clamp(v, -1.0, 1.0);
        }
        return g;
    };
    const auto g = clipped_minibatch_gradient(model, w, batch, c, RoundingMode::AdversarialHook,
                                              legal);
    CHECK(g.size() == 2);

    AdversarialRounding cheater = [](const Eigen::VectorXd& avg) {
        return Eigen::VectorXd::Constant(avg.size(), 1.0).eval();
    };
    CHECK_THROWS_AS(clipped_minibatch_gradient(model, w, batch, c,
                                               RoundingMode::AdversarialHook, cheater),
                    InvalidRoundingError);
    CHECK_THROWS_AS(clipped_minibatch_gradient(model, w, batch, c,
                                               RoundingMode::AdversarialHook, nullptr),
                    InvalidRoundingError);
}

TEST_CASE("bsgd runs are deterministic and track exact population losses") {
    const auto m = make_parity_class(2);
    const auto source = parity_source(m, 3);
    const LinearTanhModel model(2);
    BsgdConfig config;
    config.T = 20;
    config.b = 8;
    config.seed = 5;
    const auto a = run_bsgd(model, source, config);
    const auto b = run_bsgd(model, source, config);
    CHECK(a.final_params == b.final_params);
    REQUIRE(a.population_sq_loss.size() == 21);  // initial point plus T steps
    for (double loss : a.population_01_loss) {
        CHECK(loss >= 0.0);
        CHECK(loss <= 1.0);
    }
}

TEST_CASE("sq-driven run is bit-exact against the full-support run") {
    const auto m = make_parity_class(2);
    const LinearTanhModel model(2);
    for (Eigen::Index row = 0; row < 4; ++row) {
        const auto source = parity_source(m, row);
        BsgdConfig config;
        config.T = 25;
        config.b = 0;  // full-support exact batch
        config.seed = 11 + static_cast<std::uint64_t>(row);
        const auto direct = run_bsgd(model, source, config);
        const auto via_sq =
            run_bsgd_via_sq(model, source, honest_exact_oracle(source, 2), config);
        CHECK(direct.final_params == via_sq.final_params);
        REQUIRE(direct.gradients.size() == via_sq.gradients.size());
        for (std::size_t t = 0; t < direct.gradients.size(); ++t)
            CHECK(direct.gradients[t] == via_sq.gradients[t]);
        CHECK(via_sq.query_count == config.T * static_cast<std::size_t>(model.param_count()));
    }
}

TEST_CASE("out-of-tolerance oracle responses raise the contract error") {
    const auto m = make_parity_class(2);
    const auto source = parity_source(m, 1);
    const LinearTanhModel model(2);
    BsgdConfig config;
    config.T = 3;
    config.b = 0;
    const auto honest = honest_exact_oracle(source, 2);

    // Shifting by the full tolerance stays valid.
    SqOracle shifted = [&honest](const SqQueryFn& q, double tol) {
        return honest(q, tol) + tol;
    };
    CHECK_NOTHROW(run_bsgd_via_sq(model, source, shifted, config));

    SqOracle broken = [&honest](const SqQueryFn& q, double tol) {
        return honest(q, tol) + 3.0 * tol;
    };
    CHECK_THROWS_AS(run_bsgd_via_sq(model, source, broken, config), OracleContractError);
}

TEST_CASE("precision regime classification") {
    BsgdConfig config;
    config.T = 100;

    config.b = 1000;
    config.c = 0.5;
    CHECK(precision_regime(config, 10).regime == PrecisionRegime::SqSimulable);

    config.b = 100;
    config.c = 0.001;
    CHECK(precision_regime(config, 10).regime == PrecisionRegime::SamplePowered);

    config.b = 1;
    config.c = 1.0;
    CHECK(precision_regime(config, 10).regime == PrecisionRegime::Indeterminate);

    CHECK(to_string(PrecisionRegime::SqSimulable) == "SQ-SIMULABLE");
    CHECK(to_string(PrecisionRegime::SamplePowered) == "SAMPLE-POWERED");
    CHECK(to_string(PrecisionRegime::Indeterminate) == "INDETERMINATE");
}

TEST_CASE("signed bit decomposition reconstructs within c") {
    // 0.625 = 2^-1 + 2^-3 is exactly representable at t = 3.
    const auto bits = signed_bits(0.625, 3);
    CHECK(from_signed_bits(bits) == 0.625);

    SqQueryFn q = [](const Eigen::VectorXd&, int) { return 0.625; };
    const auto d = bit_decompose_query(q, 0.125);
    REQUIRE(d.bit_queries.size() == 3);
    std::vector<double> responses;
    for (const auto& bq : d.bit_queries) responses.push_back(bq(Eigen::VectorXd::Zero(1), 1));
    CHECK(d.reconstruct(responses) == 0.625);

    auto eng = make_engine(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const double v = u(eng);
        CHECK(std::abs(from_signed_bits(signed_bits(v, 5)) - v) <= 1.0 / 32.0);
    }

    CHECK_THROWS_AS(bit_decompose_query(q, 0.3), PrecisionError);
}

TEST_CASE("distribution-free error reports the worst source") {
    const auto m = make_parity_class(2);
    const LinearTanhModel model(2);
    BsgdConfig config;
    config.T = 10;
    config.b = 4;
    std::vector<SourceDistribution> sources = {parity_source(m, 0), parity_source(m, 3)};
    const double worst = distribution_free_error(model, sources, config, 2, 77);
    CHECK(worst >= 0.0);
    CHECK(worst <= 2.0);
}
