#include "lab/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lab {

RoundOutcome adaboost_round(BoostState& state, const Feature& candidate,
                            const SourceDistribution& source, double gamma_accept) {
    const auto& m = *source.matrix;
    double err = 0;
    for (Eigen::Index x = 0; x < m.cols(); ++x)
        if (candidate(x) != source.label(x)) err += state.round_weights[x];

    if (err == 0.0) {
        state.accepted.clear();
        state.accepted.push_back({candidate, 1.0, 0.0, 0.5});
        state.exact_short_circuit = true;
        return RoundOutcome::ExactShortCircuit;
    }
    if (err > 0.5 - gamma_accept) return RoundOutcome::Rejected;

    const double alpha = 0.5 * std::log((1.0 - err) / err);
    state.accepted.push_back({candidate, alpha, err, 0.5 - err});
    double total = 0;
    for (Eigen::Index x = 0; x < m.cols(); ++x) {
        const double margin = static_cast<double>(source.label(x) * candidate(x));
        state.round_weights[x] *= std::exp(-alpha * margin);
        total += state.round_weights[x];
    }
    for (auto& w : state.round_weights) w /= total;
    if (state.pool_remaining > 0) --state.pool_remaining;
    return RoundOutcome::Accepted;
}

std::uint64_t adaboost_round_budget(double epsilon_target, double gamma) {
    const double z = std::ceil(std::log(2.0 / epsilon_target) / (2.0 * gamma * gamma));
    if (z > 1e18) return std::uint64_t{1} << 62;  // saturate; the loss stop rule governs
    return static_cast<std::uint64_t>(z);
}

namespace {

double training_error(const BoostState& state, const SourceDistribution& source) {
    const auto& rho = source.example_dist;
    std::uint64_t num = 0;
    for (Eigen::Index x = 0; x < source.matrix->cols(); ++x)
        if (state.vote(x) != source.label(x)) num += rho.weights()[x];
    return static_cast<double>(num) / static_cast<double>(rho.denominator());
}

}  // namespace

BoostResult boost_from_mu_feat(const SourceDistribution& source, const DyadicDistribution& mu,
                               const BoostOptions& opt) {
    if (opt.epsilon_target <= 0 || opt.epsilon_target >= 1)
        throw std::invalid_argument("boost: epsilon_target must be in (0,1)");
    if (opt.gamma_accept <= 0) throw std::invalid_argument("boost: gamma_accept must be positive");

    const auto& m = *source.matrix;
    const std::uint64_t rounds = adaboost_round_budget(opt.epsilon_target, opt.gamma_accept);

    BoostState state;
    state.round_weights.assign(static_cast<std::size_t>(m.cols()), 0.0);
    for (Eigen::Index x = 0; x < m.cols(); ++x)
        state.round_weights[x] = source.example_dist.prob(x);
    state.pool_remaining = rounds;

    BoostResult result;
    std::uint64_t draws = 0;
    double bound_product = 1.0;

    for (std::uint64_t t = 0; t < rounds; ++t) {
        const DyadicDistribution rho_t = state.round_distribution();
        const SourceDistribution round_source(m, source.target_row, rho_t);
        const auto flip = exact_flip_numerators(m, source.target_row, rho_t);

        bool accepted = false;
        while (!accepted) {
            if (draws >= opt.max_samples) {
                result.budget_exhausted = true;
                break;
            }
            Feature candidate = derandomized_feature(m, mu, rho_t, flip, sub_seed(opt.seed, draws));
            ++draws;
            const RoundOutcome outcome = adaboost_round(state, candidate, round_source,
                                                        opt.gamma_accept);
            if (outcome == RoundOutcome::ExactShortCircuit) {
                accepted = true;
                bound_product = 0.0;
            } else if (outcome == RoundOutcome::Accepted) {
                accepted = true;
                const double err = state.accepted.back().err;
                bound_product *= 2.0 * std::sqrt(err * (1.0 - err));
            }
        }
        if (result.budget_exhausted) break;

        result.per_round_bound.push_back(bound_product);
        result.per_round_error.push_back(training_error(state, source));
        if (state.exact_short_circuit || result.per_round_error.back() <= opt.epsilon_target / 2.0)
            break;
    }

    for (const auto& a : state.accepted) {
        result.model.features.push_back(a.feature);
        result.model.alphas.push_back(state.exact_short_circuit ? 1.0 : a.alpha);
    }
    result.estimate.d_used = draws;
    result.estimate.d_kept = result.model.features.size();
    result.estimate.epsilon_achieved =
        result.model.features.empty() ? 1.0 : training_error(state, source);
    result.estimate.l1_norm = result.model.l1_norm();
    if (opt.sqdim_for_reference) {
        const double sq = static_cast<double>(*opt.sqdim_for_reference);
        result.estimate.reference_bound = std::pow(sq, 24.01) / opt.epsilon_target;
    }
    return result;
}

AdcReport adc_estimate(const SignMatrix& m, const DyadicDistribution& mu,
                       const std::vector<DyadicDistribution>& rho_candidates, double epsilon,
                       double delta, std::size_t trials, std::uint64_t seed,
                       const BoostOptions& base_opt) {
    if (rho_candidates.empty()) throw std::invalid_argument("adc_estimate: empty rho family");
    if (trials < 1) throw std::invalid_argument("adc_estimate: trials must be >= 1");

    AdcReport report;
    std::size_t successes = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        auto eng = make_engine(sub_seed(seed, t));
        const auto f = static_cast<Eigen::Index>(mu.sample(eng));
        std::uint64_t max_d = 0;
        bool all_ok = true;
        for (std::size_t r = 0; r < rho_candidates.size(); ++r) {
            SourceDistribution source(m, f, rho_candidates[r]);
            BoostOptions opt = base_opt;
            opt.epsilon_target = epsilon;
            opt.seed = sub_seed(seed, (t + 1) * 1000003 + r);
            BoostResult b = boost_from_mu_feat(source, mu, opt);
            max_d = std::max(max_d, b.estimate.d_used);
            if (b.budget_exhausted || b.estimate.epsilon_achieved > epsilon) all_ok = false;
        }
        report.d_used_per_trial.push_back(max_d);
        if (all_ok) ++successes;
    }

    report.success_fraction = static_cast<double>(successes) / static_cast<double>(trials);
    auto sorted = report.d_used_per_trial;
    std::sort(sorted.begin(), sorted.end());
    const auto q_index = static_cast<std::size_t>(
        std::min(static_cast<double>(trials - 1),
                 std::ceil((1.0 - delta) * static_cast<double>(trials)) - 1.0));
    report.quantile_d_used = sorted[q_index];
    report.mean_d_used =
        static_cast<double>(std::accumulate(sorted.begin(), sorted.end(), std::uint64_t{0})) /
        static_cast<double>(trials);
    const double cutoff = (2.0 / epsilon) * report.mean_d_used;
    std::size_t tail = 0;
    for (auto d : sorted)
        if (static_cast<double>(d) >= cutoff) ++tail;
    report.markov_tail = static_cast<double>(tail) / static_cast<double>(trials);
    report.markov_holds = report.markov_tail <= epsilon / 2.0 + 1e-12;
    return report;
}

Feature synthetic_weak_feature(const BoostState& state, const SourceDistribution& source,
                               double max_err) {
    const auto& m = *source.matrix;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m.cols()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return state.round_weights[a] < state.round_weights[b];
    });

    Feature f;
    f.values.resize(m.cols());
    for (Eigen::Index x = 0; x < m.cols(); ++x) f.values(x) = source.label(x);
    // Flip lightest columns while the cumulative weight stays within
    // max_err; always flip at least one so the error is positive.
    double err = 0;
    bool flipped_any = false;
    for (auto x : order) {
        if (flipped_any && err + state.round_weights[x] > max_err) break;
        f.values(x) = -f.values(x);
        err += state.round_weights[x];
        flipped_any = true;
    }
    return f;
}

}  // namespace lab
