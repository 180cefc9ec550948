#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "lab/sign_matrix.hpp"

namespace lab {

// Random string of the derandomized predictor: bits selecting g ~ mu,
// bits selecting x ~ rho (frozen but unused once the Bernoulli stands in
// for g(x)f(x)), and bits for that Bernoulli.
struct PredictSeed {
    std::uint64_t g_bits = 0;
    std::uint64_t x_bits = 0;
    std::uint64_t bern_bits = 0;
};

// A realized ±1 function on X with provenance.
struct Feature {
    Eigen::VectorXi values;  // one ±1 entry per column of X
    bool derandomized = false;
    PredictSeed seed;

    int operator()(Eigen::Index z) const { return values(z); }
    Feature negated() const { return {-values, derandomized, seed}; }
};

struct WeakAdvantageReport {
    double zero_one_loss = 0.0;
    double advantage = 0.0;  // 1/2 - loss
    std::size_t sample_count = 0;  // 0 for exact population evaluation
    double confidence_radius = 0.0;
};

// Default policy for the advantage hidden in Omega(sq^-8): the Lemma 7
// correlation 1/(8 sq^2) pushed through the fourth-power step, halved once
// more per factor, i.e. (1/(8 sq^2))^4 / 2^4.
double default_gamma_target(std::int64_t sqdim);

// One run of the randomized predictor g(z) g(x) f(x).
int predict_once(const SourceDistribution& source, const DyadicDistribution& mu, Eigen::Index z,
                 std::uint64_t seed);

// Monte Carlo estimate of Pr_{f~mu, z~rho, Predict}[Predict(z) = f(z)],
// with a Hoeffding radius at confidence 1-delta.
struct SuccessEstimate {
    double value = 0.0;
    std::size_t samples = 0;
    double radius = 0.0;
};
SuccessEstimate predict_success_prob(const SignMatrix& m, const DyadicDistribution& mu,
                                     const DyadicDistribution& rho, std::size_t samples,
                                     std::uint64_t seed, double delta = 0.05);

// Exact success probability (1 + E[Predict(z) f(z)]) / 2 by full
// enumeration; E[Predict f] coincides with R2(Eval).
double predict_success_prob_exact(const SignMatrix& m, const DyadicDistribution& mu,
                                  const DyadicDistribution& rho);
double predict_correlation_exact(const SignMatrix& m, const DyadicDistribution& mu,
                                 const DyadicDistribution& rho);

// Exact flip probabilities p_g = Pr_{x~rho}[g(x) != f(x)], as numerators
// over 2^{k_rho}; this is the exact per-g law of the Bernoulli standing in
// for g(x) f(x).
std::vector<std::uint64_t> exact_flip_numerators(const SignMatrix& m, Eigen::Index target_row,
                                                 const DyadicDistribution& rho);

// Materializes one fixed feature Predict_rho(.; r) by drawing and freezing
// a random string: g via mu, x via rho, and the Bernoulli sign s with
// Pr[s = -1] = flip_num[g] / 2^{k_rho}.  The feature is z -> g(z) * s.
Feature derandomized_feature(const SignMatrix& m, const DyadicDistribution& mu,
                             const DyadicDistribution& rho,
                             const std::vector<std::uint64_t>& flip_num, std::uint64_t seed);

// Exact population 0/1 loss of a feature against D_{f,rho}.
double feature_loss(const Feature& feature, const SourceDistribution& source);

// Draws count features from mu^feat with omniscient per-g biases and
// scores each against the source.
std::vector<std::pair<Feature, WeakAdvantageReport>> sample_mu_feat(
    const SourceDistribution& source, const DyadicDistribution& mu, std::size_t count,
    std::uint64_t seed);

// Exact probability (over the feature distribution) that a sampled
// feature has population loss <= 1/2 - gamma, by marginalizing the seed
// space: sum over g of mu(g) * [Pr[s=+1] 1{loss(g) ok} + Pr[s=-1] 1{loss(-g) ok}].
double weak_feature_probability(const SourceDistribution& source, const DyadicDistribution& mu,
                                double gamma);

struct RflReport {
    // per target row: per candidate rho index: exact weak-feature probability
    std::map<Eigen::Index, std::vector<double>> per_f;
    double mass_passing = 0.0;  // mu-mass of f for which every rho succeeds
    double gamma_used = 0.0;
    double prob_target = 0.0;
    bool passes = false;
};

RflReport rfl_verify(const SignMatrix& m, const DyadicDistribution& mu,
                     const std::vector<DyadicDistribution>& rho_candidates, double gamma_target,
                     double prob_target, double mass_threshold = 0.99);

// The averaging step Pr[X <= c p] <= (1-p)/(1-c p) for a weighted
// empirical distribution of X in [0,1] with mean p.
bool averaging_bound_holds(const std::vector<double>& values, const std::vector<double>& weights,
                           double c);

}  // namespace lab
