#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lab/boosting.hpp"
#include "lab/bsgd.hpp"
#include "lab/comm.hpp"
#include "lab/features.hpp"
#include "lab/sqdim.hpp"

namespace lab {

struct ChainOptions {
    double epsilon = 0.1;
    double delta = 0.05;
    std::size_t adc_trials = 20;
    double gamma_target = 0.0;  // 0 = default policy from the computed sq
    double prob_target = 0.0;   // 0 = same default policy value
    BoostOptions boost;
    BsgdConfig bsgd;
    std::string arch = "linear";  // "linear" or "mlp<width>"
    int disc_grid = 6;
    int disc_restarts = 32;
};

struct BsgdArmReport {
    std::string rho_name;
    Eigen::Index target_row = 0;
    std::uint64_t seed = 0;
    double final_sq_loss = 1.0;
    double final_01_loss = 1.0;
    std::size_t query_count = 0;
    bool sq_mode_bit_exact = false;  // SQ-driven run matches the exact-batch run
    std::string regime;
    bool blum_consistent = true;  // vacuous unless the arm reaches epsilon
};

struct ChainReport {
    std::uint64_t master_seed = 0;
    SqdimResult sq;
    DiscrepancyResult disc;
    SandwichReport sandwich;
    RflReport rfl;
    AdcReport adc;
    std::vector<BsgdArmReport> bsgd_arms;
    double gamma_used = 0.0;
    double prob_target_used = 0.0;
    double epsilon = 0.0;
    double delta = 0.0;
    bool all_certified_checks_pass = false;
};

ChainReport run_chain(const SignMatrix& m, const DyadicDistribution& mu,
                      const std::vector<DyadicDistribution>& rho_candidates,
                      const ChainOptions& opt, std::uint64_t master_seed);

struct SeparationPoint {
    double epsilon = 0.0;
    double mean_d_used = 0.0;
    std::uint64_t quantile_d_used = 0;
    double success_fraction = 0.0;
};

struct SeparationReport {
    std::uint64_t master_seed = 0;
    int N = 0;
    int c_zar = 0;
    std::int64_t sq = 0;
    std::vector<SeparationPoint> sweep;
    double loglog_slope = 0.0;  // of mean d_used against 1/epsilon
    std::string dc_side = "NOT COMPUTED";
};

struct SeparationOptions {
    std::vector<double> epsilon_sweep = {0.4, 0.2, 0.1};
    double delta = 0.05;
    std::size_t trials = 10;
    BoostOptions boost;
    double plus_density = 0.25;
};

SeparationReport run_separation(int N, int c_zar, const SeparationOptions& opt,
                                std::uint64_t master_seed);

struct ContrastArm {
    double bias = 0.5;
    std::vector<double> final_01_per_seed;
    std::vector<double> final_sq_per_seed;
    double median_01 = 1.0;
    double median_sq = 1.0;
};

struct ContrastReport {
    std::uint64_t master_seed = 0;
    int n = 0;
    std::string arch;
    BsgdConfig config;
    std::vector<ContrastArm> arms;  // first arm is uniform (bias 0.5)
};

struct ContrastOptions {
    std::vector<double> bias_levels = {0.9};
    std::size_t seeds = 5;
    BsgdConfig bsgd;
    Eigen::Index mlp_width = 32;  // 0 = linear model
};

ContrastReport run_parity_contrast(int n, const ContrastOptions& opt, std::uint64_t master_seed);

// Product distribution on the 2^n bit-string columns: each coordinate is
// +1 independently with the given bias, quantized dyadically.
DyadicDistribution biased_product_distribution(int n, double bias, int scale = 30);

nlohmann::json chain_report_to_json(const ChainReport& r);
nlohmann::json separation_report_to_json(const SeparationReport& r);
nlohmann::json contrast_report_to_json(const ContrastReport& r);

std::string separation_csv(const SeparationReport& r);
std::string contrast_csv(const ContrastReport& r);

// Minimal TOML-subset reader for run configs: [section] headers and
// key = value lines (strings, numbers, booleans, flat arrays of numbers).
// Keys are flattened to "section.key".
std::map<std::string, std::string> parse_toml_flat(const std::string& text);
double toml_number(const std::map<std::string, std::string>& t, const std::string& key,
                   double fallback);
std::string toml_string(const std::map<std::string, std::string>& t, const std::string& key,
                        const std::string& fallback);
std::vector<double> toml_numbers(const std::map<std::string, std::string>& t,
                                 const std::string& key, std::vector<double> fallback);

}  // namespace lab
