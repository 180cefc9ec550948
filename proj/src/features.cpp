#include "lab/features.hpp"

#include <cmath>

namespace lab {

double default_gamma_target(std::int64_t sqdim) {
    const double base = 1.0 / (8.0 * static_cast<double>(sqdim) * static_cast<double>(sqdim));
    return std::pow(base, 4) / 16.0;
}

int predict_once(const SourceDistribution& source, const DyadicDistribution& mu, Eigen::Index z,
                 std::uint64_t seed) {
    auto eng = make_engine(seed);
    const auto g = static_cast<Eigen::Index>(mu.sample(eng));
    const auto x = static_cast<Eigen::Index>(source.example_dist.sample(eng));
    const auto& m = *source.matrix;
    return m(g, z) * m(g, x) * source.label(x);
}

SuccessEstimate predict_success_prob(const SignMatrix& m, const DyadicDistribution& mu,
                                     const DyadicDistribution& rho, std::size_t samples,
                                     std::uint64_t seed, double delta) {
    if (samples < 1) throw std::invalid_argument("predict_success_prob: samples must be >= 1");
    auto eng = make_engine(seed);
    std::size_t hits = 0;
    for (std::size_t t = 0; t < samples; ++t) {
        const auto f = static_cast<Eigen::Index>(mu.sample(eng));
        const auto g = static_cast<Eigen::Index>(mu.sample(eng));
        const auto x = static_cast<Eigen::Index>(rho.sample(eng));
        const auto z = static_cast<Eigen::Index>(rho.sample(eng));
        const int prediction = m(g, z) * m(g, x) * m(f, x);
        if (prediction == m(f, z)) ++hits;
    }
    SuccessEstimate est;
    est.samples = samples;
    est.value = static_cast<double>(hits) / static_cast<double>(samples);
    est.radius = std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(samples)));
    return est;
}

double predict_correlation_exact(const SignMatrix& m, const DyadicDistribution& mu,
                                 const DyadicDistribution& rho) {
    // E[Predict(z) f(z)] = E_{f,g,x,z}[g(z) g(x) f(x) f(z)], enumerated as
    // the full 4-tuple sum over the finite supports.
    long double total = 0;
    const long double mu_den = static_cast<long double>(mu.denominator());
    const long double rho_den = static_cast<long double>(rho.denominator());
    for (Eigen::Index f = 0; f < m.rows(); ++f)
        for (Eigen::Index g = 0; g < m.rows(); ++g)
            for (Eigen::Index x = 0; x < m.cols(); ++x)
                for (Eigen::Index z = 0; z < m.cols(); ++z)
                    total += static_cast<long double>(mu.weights()[f]) / mu_den *
                             static_cast<long double>(mu.weights()[g]) / mu_den *
                             static_cast<long double>(rho.weights()[x]) / rho_den *
                             static_cast<long double>(rho.weights()[z]) / rho_den *
                             (m(g, z) * m(g, x) * m(f, x) * m(f, z));
    return static_cast<double>(total);
}

double predict_success_prob_exact(const SignMatrix& m, const DyadicDistribution& mu,
                                  const DyadicDistribution& rho) {
    return (1.0 + predict_correlation_exact(m, mu, rho)) / 2.0;
}

std::vector<std::uint64_t> exact_flip_numerators(const SignMatrix& m, Eigen::Index target_row,
                                                 const DyadicDistribution& rho) {
    std::vector<std::uint64_t> num(static_cast<std::size_t>(m.rows()), 0);
    for (Eigen::Index g = 0; g < m.rows(); ++g)
        for (Eigen::Index x = 0; x < m.cols(); ++x)
            if (m(g, x) != m(target_row, x)) num[g] += rho.weights()[x];
    return num;
}

Feature derandomized_feature(const SignMatrix& m, const DyadicDistribution& mu,
                             const DyadicDistribution& rho,
                             const std::vector<std::uint64_t>& flip_num, std::uint64_t seed) {
    if (flip_num.size() != static_cast<std::size_t>(m.rows()))
        throw std::invalid_argument("derandomized_feature: bias table size mismatch");
    auto eng = make_engine(seed);
    PredictSeed r;
    r.g_bits = fair_bits(eng, mu.scale_exponent());
    r.x_bits = fair_bits(eng, rho.scale_exponent());
    r.bern_bits = fair_bits(eng, rho.scale_exponent());
    const auto g = static_cast<Eigen::Index>(mu.index_from_bits(r.g_bits));
    // Pr[s = -1] = flip_num[g] / 2^{k_rho}, exact in k_rho fair bits.
    const int s = (r.bern_bits < flip_num[g]) ? -1 : 1;
    Feature feature;
    feature.derandomized = true;
    feature.seed = r;
    feature.values.resize(m.cols());
    for (Eigen::Index z = 0; z < m.cols(); ++z) feature.values(z) = m(g, z) * s;
    return feature;
}

double feature_loss(const Feature& feature, const SourceDistribution& source) {
    std::uint64_t num = 0;
    const auto& m = *source.matrix;
    for (Eigen::Index x = 0; x < m.cols(); ++x)
        if (feature(x) != source.label(x)) num += source.example_dist.weights()[x];
    return static_cast<double>(num) / static_cast<double>(source.example_dist.denominator());
}

std::vector<std::pair<Feature, WeakAdvantageReport>> sample_mu_feat(
    const SourceDistribution& source, const DyadicDistribution& mu, std::size_t count,
    std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("sample_mu_feat: count must be >= 1");
    const auto flip = exact_flip_numerators(*source.matrix, source.target_row, source.example_dist);
    std::vector<std::pair<Feature, WeakAdvantageReport>> out;
    out.reserve(count);
    for (std::size_t t = 0; t < count; ++t) {
        Feature f = derandomized_feature(*source.matrix, mu, source.example_dist, flip,
                                         sub_seed(seed, t));
        WeakAdvantageReport rep;
        rep.zero_one_loss = feature_loss(f, source);
        rep.advantage = 0.5 - rep.zero_one_loss;
        out.emplace_back(std::move(f), rep);
    }
    return out;
}

double weak_feature_probability(const SourceDistribution& source, const DyadicDistribution& mu,
                                double gamma) {
    const auto& m = *source.matrix;
    const auto& rho = source.example_dist;
    const auto flip = exact_flip_numerators(m, source.target_row, rho);
    const double rho_den = static_cast<double>(rho.denominator());
    const double mu_den = static_cast<double>(mu.denominator());
    double prob = 0.0;
    for (Eigen::Index g = 0; g < m.rows(); ++g) {
        // loss(+g) = p_g, loss(-g) = 1 - p_g; both exact dyadic.
        const double p_flip = static_cast<double>(flip[g]) / rho_den;
        const double mu_g = static_cast<double>(mu.weights()[g]) / mu_den;
        if (p_flip <= 0.5 - gamma) prob += mu_g * (1.0 - p_flip);
        if (1.0 - p_flip <= 0.5 - gamma) prob += mu_g * p_flip;
    }
    return prob;
}

RflReport rfl_verify(const SignMatrix& m, const DyadicDistribution& mu,
                     const std::vector<DyadicDistribution>& rho_candidates, double gamma_target,
                     double prob_target, double mass_threshold) {
    if (rho_candidates.empty()) throw std::invalid_argument("rfl_verify: empty rho candidate set");
    RflReport report;
    report.gamma_used = gamma_target;
    report.prob_target = prob_target;
    const double mu_den = static_cast<double>(mu.denominator());
    for (Eigen::Index f = 0; f < m.rows(); ++f) {
        if (mu.weights()[f] == 0) continue;
        std::vector<double> per_rho;
        bool all_pass = true;
        for (const auto& rho : rho_candidates) {
            SourceDistribution source(m, f, rho);
            const double p = weak_feature_probability(source, mu, gamma_target);
            per_rho.push_back(p);
            if (p < prob_target) all_pass = false;
        }
        report.per_f[f] = std::move(per_rho);
        if (all_pass) report.mass_passing += static_cast<double>(mu.weights()[f]) / mu_den;
    }
    report.passes = report.mass_passing >= mass_threshold;
    return report;
}

bool averaging_bound_holds(const std::vector<double>& values, const std::vector<double>& weights,
                           double c) {
    if (values.size() != weights.size() || values.empty())
        throw std::invalid_argument("averaging_bound_holds: size mismatch");
    double total_w = 0, mean = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        total_w += weights[i];
        mean += weights[i] * values[i];
    }
    mean /= total_w;
    const double threshold = c * mean;
    double tail = 0;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] <= threshold + 1e-15) tail += weights[i];
    tail /= total_w;
    return tail <= (1.0 - mean) / (1.0 - threshold) + 1e-12;
}

}  // namespace lab
