#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lab/features.hpp"
#include "lab/sign_matrix.hpp"

namespace lab {

struct AcceptedFeature {
    Feature feature;
    double alpha = 0.0;    // vote weight 1/2 ln((1-err)/err)
    double err = 0.0;      // weighted error at acceptance time
    double gamma = 0.0;    // 1/2 - err
};

// Mutable state of one AdaBoost run over a fixed source.
struct BoostState {
    std::vector<double> round_weights;  // distribution over training columns
    std::vector<AcceptedFeature> accepted;
    std::uint64_t pool_remaining = 0;   // Z - r
    bool exact_short_circuit = false;   // a candidate with zero error ended the run

    // Current round distribution quantized to dyadic scale 2^-30 for exact
    // feature sampling.
    DyadicDistribution round_distribution() const {
        return DyadicDistribution::from_reals(round_weights, 30);
    }

    int vote(Eigen::Index x) const {
        double s = 0;
        for (const auto& a : accepted) s += a.alpha * a.feature(x);
        return s >= 0 ? 1 : -1;
    }
};

enum class RoundOutcome { Accepted, Rejected, ExactShortCircuit };

// Weighted error of the candidate under the round distribution; accepted
// (non-strict) at err <= 1/2 - gamma_accept, with the classical
// multiplicative reweighting.  err = 0 short-circuits: the candidate alone
// is exact.
RoundOutcome adaboost_round(BoostState& state, const Feature& candidate,
                            const SourceDistribution& source, double gamma_accept);

struct LinearFeatureModel {
    std::vector<Feature> features;
    std::vector<double> alphas;

    int predict(Eigen::Index x) const {
        double s = 0;
        for (std::size_t i = 0; i < features.size(); ++i) s += alphas[i] * features[i](x);
        return s >= 0 ? 1 : -1;
    }
    double l1_norm() const {
        double s = 0;
        for (double a : alphas) s += std::abs(a);
        return s;
    }
};

struct AdcEstimate {
    std::uint64_t d_used = 0;    // features sampled (the random variable D)
    std::uint64_t d_kept = 0;    // features in the final combination
    double epsilon_achieved = 1.0;
    double l1_norm = 0.0;
    double reference_bound = 0.0;  // O(eps^-1 sq^24.01) reference value
};

struct BoostResult {
    LinearFeatureModel model;
    AdcEstimate estimate;
    bool budget_exhausted = false;
    std::vector<double> per_round_bound;  // prod 2 sqrt(err (1-err)) after each accept
    std::vector<double> per_round_error;  // training 0/1 error after each accept
};

struct BoostOptions {
    double epsilon_target = 0.1;
    double gamma_accept = 0.05;
    std::size_t max_samples = 2000;
    std::uint64_t seed = 0;
    std::optional<std::int64_t> sqdim_for_reference;  // fills reference_bound when set
};

// Rounds draw features from mu^feat of the current round distribution
// until one is accepted; stops at training loss <= eps/2 or after
// Z = ceil(ln(2/eps) / (2 gamma^2)) rounds.
BoostResult boost_from_mu_feat(const SourceDistribution& source, const DyadicDistribution& mu,
                               const BoostOptions& opt);

// The number of rounds the explicit AdaBoost bound prescribes.
std::uint64_t adaboost_round_budget(double epsilon_target, double gamma);

struct AdcReport {
    std::uint64_t quantile_d_used = 0;   // (1-delta)-quantile over f of max-over-rho d_used
    double success_fraction = 0.0;       // trials achieving eps for all rho
    double mean_d_used = 0.0;
    double markov_tail = 0.0;            // Pr_D[D >= (2/eps) E[D]]
    bool markov_holds = false;           // tail <= eps/2
    std::vector<std::uint64_t> d_used_per_trial;
};

AdcReport adc_estimate(const SignMatrix& m, const DyadicDistribution& mu,
                       const std::vector<DyadicDistribution>& rho_candidates, double epsilon,
                       double delta, std::size_t trials, std::uint64_t seed,
                       const BoostOptions& base_opt);

// Synthetic weak learner for boosting-contract checks: returns a feature
// equal to the target except on a minimal-weight column set of total
// round-weight in (0, max_err], so its weighted error is positive and at
// most max_err.
Feature synthetic_weak_feature(const BoostState& state, const SourceDistribution& source,
                               double max_err);

}  // namespace lab
