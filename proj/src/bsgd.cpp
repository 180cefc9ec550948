#include "lab/bsgd.hpp"

#include <cmath>

namespace lab {

double LinearTanhModel::evaluate(const Eigen::VectorXd& w, const Eigen::VectorXd& x) const {
    return std::tanh(w.dot(x));
}

Eigen::VectorXd LinearTanhModel::gradient(const Eigen::VectorXd& w,
                                          const Eigen::VectorXd& x) const {
    const double t = std::tanh(w.dot(x));
    return (1.0 - t * t) * x;
}

namespace {

struct MlpViews {
    Eigen::Map<const Eigen::MatrixXd> w1;
    Eigen::Map<const Eigen::VectorXd> b1;
    Eigen::Map<const Eigen::VectorXd> v;
    double b2;
};

MlpViews unpack(const Eigen::VectorXd& w, Eigen::Index dim, Eigen::Index width) {
    const double* p = w.data();
    return {Eigen::Map<const Eigen::MatrixXd>(p, width, dim),
            Eigen::Map<const Eigen::VectorXd>(p + width * dim, width),
            Eigen::Map<const Eigen::VectorXd>(p + width * dim + width, width),
            w(width * dim + 2 * width)};
}

}  // namespace

double MlpTanhModel::evaluate(const Eigen::VectorXd& w, const Eigen::VectorXd& x) const {
    const auto views = unpack(w, dim_, width_);
    const Eigen::VectorXd h = (views.w1 * x + views.b1).array().tanh();
    return std::tanh(views.v.dot(h) + views.b2);
}

Eigen::VectorXd MlpTanhModel::gradient(const Eigen::VectorXd& w, const Eigen::VectorXd& x) const {
    const auto views = unpack(w, dim_, width_);
    const Eigen::VectorXd pre = views.w1 * x + views.b1;
    const Eigen::VectorXd h = pre.array().tanh();
    const double out = std::tanh(views.v.dot(h) + views.b2);
    const double s = 1.0 - out * out;

    Eigen::VectorXd grad(param_count());
    const Eigen::VectorXd hidden_delta =
        s * views.v.array() * (1.0 - h.array().square());  // d out / d pre_i
    Eigen::Map<Eigen::MatrixXd>(grad.data(), width_, dim_) = hidden_delta * x.transpose();
    grad.segment(width_ * dim_, width_) = hidden_delta;
    grad.segment(width_ * dim_ + width_, width_) = s * h;
    grad(width_ * dim_ + 2 * width_) = s;
    return grad;
}

Eigen::VectorXd encode_column(Eigen::Index col, Eigen::Index n_bits) {
    Eigen::VectorXd x(n_bits);
    for (Eigen::Index i = 0; i < n_bits; ++i) x(i) = ((col >> i) & 1) ? 1.0 : -1.0;
    return x;
}

double round_to_grid(double v, double c) {
    const auto max_steps = static_cast<long long>(std::floor(1.0 / c + 1e-9));
    long long n = std::llround(v / c);
    if (n > max_steps) n = max_steps;
    if (n < -max_steps) n = -max_steps;
    return static_cast<double>(n) * c;
}

namespace {

// Gradient of the per-sample squared loss 1/2 (f_w(x) - y)^2, clipped
// entrywise to [-1,1].
Eigen::VectorXd clipped_sample_gradient(const ParametricModel& model, const Eigen::VectorXd& w,
                                        const Eigen::VectorXd& x, int label) {
    const double out = model.evaluate(w, x);
    Eigen::VectorXd g = (out - static_cast<double>(label)) * model.gradient(w, x);
    return g.cwiseMax(-1.0).cwiseMin(1.0);
}

}  // namespace

Eigen::VectorXd clipped_minibatch_gradient(const ParametricModel& model, const Eigen::VectorXd& w,
                                           const std::vector<std::pair<Eigen::VectorXd, int>>& batch,
                                           double c, RoundingMode mode,
                                           const AdversarialRounding& hook) {
    if (batch.empty()) throw std::invalid_argument("clipped_minibatch_gradient: empty batch");
    Eigen::VectorXd avg = Eigen::VectorXd::Zero(model.param_count());
    for (const auto& [x, y] : batch) avg += clipped_sample_gradient(model, w, x, y);
    avg /= static_cast<double>(batch.size());
    avg = avg.cwiseMax(-1.0).cwiseMin(1.0);

    if (mode == RoundingMode::AdversarialHook) {
        if (!hook) throw InvalidRoundingError("adversarial mode requires a rounding hook");
        Eigen::VectorXd g = hook(avg);
        for (Eigen::Index i = 0; i < g.size(); ++i) {
            if (std::abs(g(i) - avg(i)) > 0.75 * c + 1e-12 || std::abs(g(i)) > 1.0 + 1e-12)
                throw InvalidRoundingError("adversarial rounding exceeds 3c/4 envelope");
            const double steps = g(i) / c;
            if (std::abs(steps - std::nearbyint(steps)) > 1e-9)
                throw InvalidRoundingError("adversarial rounding not on the c grid");
        }
        return g;
    }
    Eigen::VectorXd g(avg.size());
    for (Eigen::Index i = 0; i < avg.size(); ++i) g(i) = round_to_grid(avg(i), c);
    return g;
}

namespace {

struct DomainCache {
    std::vector<Eigen::VectorXd> inputs;
    Eigen::Index n_bits;
};

DomainCache make_domain_cache(const SignMatrix& m) {
    Eigen::Index n_bits = 0;
    while ((Eigen::Index{1} << n_bits) < m.cols()) ++n_bits;
    if (n_bits == 0) n_bits = 1;
    DomainCache cache;
    cache.n_bits = n_bits;
    cache.inputs.reserve(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index x = 0; x < m.cols(); ++x) cache.inputs.push_back(encode_column(x, n_bits));
    return cache;
}

void record_population_losses(const ParametricModel& model, const Eigen::VectorXd& w,
                              const SourceDistribution& source, const DomainCache& cache,
                              BsgdTrajectory& traj) {
    double sq = 0, zo = 0;
    for (Eigen::Index x = 0; x < source.matrix->cols(); ++x) {
        const double out = model.evaluate(w, cache.inputs[x]);
        if (std::abs(out) > 1.0 + 1e-12) throw DivergenceError("model output left [-1,1]");
        const double y = source.label(x);
        const double p = source.example_dist.prob(x);
        sq += p * 0.5 * (out - y) * (out - y);
        if ((out >= 0 ? 1.0 : -1.0) != y) zo += p;
    }
    traj.population_sq_loss.push_back(sq);
    traj.population_01_loss.push_back(zo);
}

Eigen::VectorXd initial_params(const ParametricModel& model, const BsgdConfig& config,
                               std::mt19937_64& eng) {
    std::uniform_real_distribution<double> u(-config.init_half_width, config.init_half_width);
    Eigen::VectorXd w(model.param_count());
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = u(eng);
    return w;
}

// Full-support expected clipped gradient: one coordinate-consistent pass
// used by both the exact-batch run and the SQ simulation, so their
// trajectories agree bit for bit.
Eigen::VectorXd expected_clipped_gradient(const ParametricModel& model, const Eigen::VectorXd& w,
                                          const SourceDistribution& source,
                                          const DomainCache& cache) {
    Eigen::VectorXd avg = Eigen::VectorXd::Zero(model.param_count());
    for (Eigen::Index x = 0; x < source.matrix->cols(); ++x)
        avg += source.example_dist.prob(x) *
               clipped_sample_gradient(model, w, cache.inputs[x], source.label(x));
    return avg;
}

}  // namespace

BsgdTrajectory run_bsgd(const ParametricModel& model, const SourceDistribution& source,
                        const BsgdConfig& config, const AdversarialRounding& hook) {
    if (config.T < 1 || config.c <= 0 || config.c > 1)
        throw std::invalid_argument("run_bsgd: invalid config");
    const DomainCache cache = make_domain_cache(*source.matrix);
    auto eng = make_engine(config.seed);
    Eigen::VectorXd w = initial_params(model, config, eng);

    BsgdTrajectory traj;
    record_population_losses(model, w, source, cache, traj);
    for (std::size_t t = 0; t < config.T; ++t) {
        Eigen::VectorXd g;
        if (config.b == 0) {
            Eigen::VectorXd avg = expected_clipped_gradient(model, w, source, cache);
            g.resize(avg.size());
            for (Eigen::Index i = 0; i < avg.size(); ++i) g(i) = round_to_grid(avg(i), config.c);
        } else {
            std::vector<std::pair<Eigen::VectorXd, int>> batch;
            batch.reserve(config.b);
            for (std::size_t i = 0; i < config.b; ++i) {
                const auto x = static_cast<Eigen::Index>(source.example_dist.sample(eng));
                batch.emplace_back(cache.inputs[x], source.label(x));
            }
            g = clipped_minibatch_gradient(model, w, batch, config.c, config.rounding_mode, hook);
        }
        w -= config.gamma_step * g;
        if (!w.allFinite()) throw DivergenceError("non-finite parameters at step " +
                                                  std::to_string(t));
        traj.gradients.push_back(g);
        record_population_losses(model, w, source, cache, traj);
    }
    traj.final_params = std::move(w);
    return traj;
}

SqOracle honest_exact_oracle(const SourceDistribution& source, Eigen::Index n_bits) {
    return [source, n_bits](const SqQueryFn& query, double /*tolerance*/) {
        double e = 0;
        for (Eigen::Index x = 0; x < source.matrix->cols(); ++x)
            e += source.example_dist.prob(x) * query(encode_column(x, n_bits), source.label(x));
        return e;
    };
}

BsgdTrajectory run_bsgd_via_sq(const ParametricModel& model, const SourceDistribution& source,
                               const SqOracle& oracle, const BsgdConfig& config) {
    if (config.T < 1 || config.c <= 0 || config.c > 1)
        throw std::invalid_argument("run_bsgd_via_sq: invalid config");
    const DomainCache cache = make_domain_cache(*source.matrix);
    const double tolerance = config.c / 8.0;
    auto eng = make_engine(config.seed);
    Eigen::VectorXd w = initial_params(model, config, eng);

    BsgdTrajectory traj;
    record_population_losses(model, w, source, cache, traj);
    for (std::size_t t = 0; t < config.T; ++t) {
        Eigen::VectorXd g(model.param_count());
        for (Eigen::Index i = 0; i < model.param_count(); ++i) {
            // One statistical query per coordinate: the clipped per-sample
            // gradient coordinate as a function of (x, y).
            SqQueryFn query = [&model, &w, i](const Eigen::VectorXd& x, int label) {
                return clipped_sample_gradient(model, w, x, label)(i);
            };
            const double response = oracle(query, tolerance);
            ++traj.query_count;
            // Validity check against the exact expectation.
            double exact = 0;
            for (Eigen::Index x = 0; x < source.matrix->cols(); ++x)
                exact += source.example_dist.prob(x) *
                         query(cache.inputs[x], source.label(x));
            if (std::abs(response - exact) > tolerance + 1e-12)
                throw OracleContractError("SQ response outside tolerance");
            g(i) = round_to_grid(response, config.c);
        }
        w -= config.gamma_step * g;
        if (!w.allFinite()) throw DivergenceError("non-finite parameters at step " +
                                                  std::to_string(t));
        traj.gradients.push_back(g);
        record_population_losses(model, w, source, cache, traj);
    }
    traj.final_params = std::move(w);
    return traj;
}

std::string to_string(PrecisionRegime r) {
    switch (r) {
        case PrecisionRegime::SqSimulable: return "SQ-SIMULABLE";
        case PrecisionRegime::SamplePowered: return "SAMPLE-POWERED";
        default: return "INDETERMINATE";
    }
}

RegimeReport precision_regime(const BsgdConfig& config, std::size_t p, double kappa,
                              double delta) {
    RegimeReport report;
    report.sq_threshold =
        kappa * std::log(static_cast<double>(config.T) * static_cast<double>(p) / delta);
    if (config.b == 0) {
        report.bc2 = std::numeric_limits<double>::infinity();
        report.sample_threshold = 0.0;
        report.regime = PrecisionRegime::SqSimulable;
        return report;
    }
    report.bc2 = static_cast<double>(config.b) * config.c * config.c;
    report.sample_threshold = 1.0 / (8.0 * static_cast<double>(config.b));
    if (report.bc2 >= report.sq_threshold)
        report.regime = PrecisionRegime::SqSimulable;
    else if (config.c < report.sample_threshold)
        report.regime = PrecisionRegime::SamplePowered;
    else
        report.regime = PrecisionRegime::Indeterminate;
    return report;
}

double distribution_free_error(const ParametricModel& model,
                               const std::vector<SourceDistribution>& sources,
                               const BsgdConfig& config, std::size_t repeats,
                               std::uint64_t seed) {
    if (sources.empty() || repeats < 1)
        throw std::invalid_argument("distribution_free_error: bad arguments");
    double worst = 0;
    for (std::size_t s = 0; s < sources.size(); ++s) {
        double total = 0;
        for (std::size_t r = 0; r < repeats; ++r) {
            BsgdConfig run_config = config;
            run_config.seed = sub_seed(seed, s * 7919 + r);
            const auto traj = run_bsgd(model, sources[s], run_config);
            total += traj.population_sq_loss.back();
        }
        worst = std::max(worst, total / static_cast<double>(repeats));
    }
    return worst;
}

std::vector<int> signed_bits(double v, int t) {
    std::vector<int> bits(t);
    double r = v;
    for (int i = 0; i < t; ++i) {
        bits[i] = r >= 0 ? 1 : -1;
        r -= bits[i] * std::pow(2.0, -(i + 1));
    }
    return bits;
}

double from_signed_bits(const std::vector<int>& bits) {
    double v = 0;
    for (std::size_t i = 0; i < bits.size(); ++i) v += bits[i] * std::pow(2.0, -(i + 1.0));
    return v;
}

BitDecomposition bit_decompose_query(const SqQueryFn& query, double c) {
    const double t_exact = -std::log2(c);
    const int t = static_cast<int>(std::lround(t_exact));
    if (t < 1 || std::abs(std::pow(2.0, -t) - c) > 1e-12)
        throw PrecisionError("bit_decompose_query: c must be a power of two");
    BitDecomposition d;
    for (int i = 0; i < t; ++i) {
        d.bit_queries.push_back([query, t, i](const Eigen::VectorXd& x, int label) {
            return static_cast<double>(signed_bits(query(x, label), t)[i]);
        });
    }
    return d;
}

double BitDecomposition::reconstruct(const std::vector<double>& responses) const {
    double v = 0;
    for (std::size_t i = 0; i < responses.size(); ++i)
        v += responses[i] * std::pow(2.0, -(i + 1.0));
    return v;
}

}  // namespace lab
