#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lab/sign_matrix.hpp"

namespace lab {

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PrecisionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvalidRoundingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OracleContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Differentiable model f_w: R^dim -> [-1,1] with a hand-derived gradient.
class ParametricModel {
public:
    virtual ~ParametricModel() = default;
    virtual Eigen::Index param_count() const = 0;
    virtual Eigen::Index input_dim() const = 0;
    virtual double evaluate(const Eigen::VectorXd& w, const Eigen::VectorXd& x) const = 0;
    // d f_w(x) / d w
    virtual Eigen::VectorXd gradient(const Eigen::VectorXd& w, const Eigen::VectorXd& x) const = 0;
};

// f_w(x) = tanh(w . x)
class LinearTanhModel final : public ParametricModel {
public:
    explicit LinearTanhModel(Eigen::Index dim) : dim_(dim) {}
    Eigen::Index param_count() const override { return dim_; }
    Eigen::Index input_dim() const override { return dim_; }
    double evaluate(const Eigen::VectorXd& w, const Eigen::VectorXd& x) const override;
    Eigen::VectorXd gradient(const Eigen::VectorXd& w, const Eigen::VectorXd& x) const override;

private:
    Eigen::Index dim_;
};

// f_w(x) = tanh(v . tanh(W x + b) + b2), one hidden layer of tanh units.
class MlpTanhModel final : public ParametricModel {
public:
    MlpTanhModel(Eigen::Index dim, Eigen::Index width) : dim_(dim), width_(width) {}
    Eigen::Index param_count() const override { return width_ * dim_ + width_ + width_ + 1; }
    Eigen::Index input_dim() const override { return dim_; }
    double evaluate(const Eigen::VectorXd& w, const Eigen::VectorXd& x) const override;
    Eigen::VectorXd gradient(const Eigen::VectorXd& w, const Eigen::VectorXd& x) const override;
    Eigen::Index width() const { return width_; }

private:
    Eigen::Index dim_;
    Eigen::Index width_;
};

// Column index -> ±1 bit vector of the index, the input encoding used for
// bit-string domains.
Eigen::VectorXd encode_column(Eigen::Index col, Eigen::Index n_bits);

enum class RoundingMode { Nearest, AdversarialHook };

struct BsgdConfig {
    std::size_t T = 100;
    double c = 0.0625;           // gradient precision
    std::size_t b = 32;          // batch size; 0 = full-support exact batch
    double gamma_step = 0.1;     // stepsize
    RoundingMode rounding_mode = RoundingMode::Nearest;
    std::uint64_t seed = 0;
    double init_half_width = 0.5;  // W = uniform on [-hw, hw]^p
};

// Nearest multiple of c inside [-1,1].
double round_to_grid(double v, double c);

// Per-sample gradients of the squared loss 1/2 (f_w(x) - y)^2, each
// clipped entrywise to [-1,1], averaged, then rounded to the c-grid.  The
// adversarial hook may replace the rounding, validated to stay within
// 3c/4 of the clipped average.
using AdversarialRounding = std::function<Eigen::VectorXd(const Eigen::VectorXd& clipped_avg)>;
Eigen::VectorXd clipped_minibatch_gradient(const ParametricModel& model, const Eigen::VectorXd& w,
                                           const std::vector<std::pair<Eigen::VectorXd, int>>& batch,
                                           double c, RoundingMode mode = RoundingMode::Nearest,
                                           const AdversarialRounding& hook = nullptr);

struct BsgdTrajectory {
    Eigen::VectorXd final_params;
    std::vector<double> population_sq_loss;  // per step, exact over the finite domain
    std::vector<double> population_01_loss;
    std::vector<Eigen::VectorXd> gradients;  // g_t audit trail
    std::size_t query_count = 0;             // SQ mode only
};

BsgdTrajectory run_bsgd(const ParametricModel& model, const SourceDistribution& source,
                        const BsgdConfig& config, const AdversarialRounding& hook = nullptr);

// A statistical query is a bounded function of (x, y); the oracle answers
// within tolerance.  Honest oracles answer the exact expectation.
using SqQueryFn = std::function<double(const Eigen::VectorXd& x, int label)>;
using SqOracle = std::function<double(const SqQueryFn& query, double tolerance)>;

SqOracle honest_exact_oracle(const SourceDistribution& source, Eigen::Index n_bits);

// The per-coordinate query simulation of the bSGD loop: T p queries at
// tolerance c/8, each response rounded to the c-grid.
BsgdTrajectory run_bsgd_via_sq(const ParametricModel& model, const SourceDistribution& source,
                               const SqOracle& oracle, const BsgdConfig& config);

enum class PrecisionRegime { SqSimulable, SamplePowered, Indeterminate };
std::string to_string(PrecisionRegime r);

struct RegimeReport {
    PrecisionRegime regime = PrecisionRegime::Indeterminate;
    double bc2 = 0.0;
    double sq_threshold = 0.0;      // kappa * ln(T p / delta)
    double sample_threshold = 0.0;  // 1 / (8 b)
};

RegimeReport precision_regime(const BsgdConfig& config, std::size_t p, double kappa = 1.0,
                              double delta = 0.05);

// Max over sources of the mean final population squared loss over repeats
// with fresh initialization and batches; a lower bound on the true sup.
double distribution_free_error(const ParametricModel& model,
                               const std::vector<SourceDistribution>& sources,
                               const BsgdConfig& config, std::size_t repeats, std::uint64_t seed);

// Signed-bit decomposition of a bounded query at precision c = 2^-t: t
// ±1-valued queries whose responses linearly reconstruct the original
// expectation to within c.
struct BitDecomposition {
    std::vector<SqQueryFn> bit_queries;
    // reconstruct(responses) = sum_i 2^-i responses[i]
    double reconstruct(const std::vector<double>& responses) const;
};
BitDecomposition bit_decompose_query(const SqQueryFn& query, double c);

// Signed binary expansion helpers used by the decomposition.
std::vector<int> signed_bits(double v, int t);
double from_signed_bits(const std::vector<int>& bits);

}  // namespace lab
