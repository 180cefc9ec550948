#include "lab/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <memory>
#include <sstream>

namespace lab {

namespace {

Eigen::Index bits_for_columns(Eigen::Index cols) {
    Eigen::Index n = 0;
    while ((Eigen::Index{1} << n) < cols) ++n;
    return std::max<Eigen::Index>(n, 1);
}

std::unique_ptr<ParametricModel> make_model(const std::string& arch, Eigen::Index input_dim) {
    if (arch == "linear") return std::make_unique<LinearTanhModel>(input_dim);
    if (arch.rfind("mlp", 0) == 0) {
        const auto width = static_cast<Eigen::Index>(std::stoll(arch.substr(3)));
        if (width < 1) throw std::invalid_argument("pipeline: mlp width must be >= 1");
        return std::make_unique<MlpTanhModel>(input_dim, width);
    }
    throw std::invalid_argument("pipeline: unknown architecture '" + arch + "'");
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool trajectories_identical(const BsgdTrajectory& a, const BsgdTrajectory& b) {
    if (a.final_params.size() != b.final_params.size() ||
        a.gradients.size() != b.gradients.size())
        return false;
    for (Eigen::Index i = 0; i < a.final_params.size(); ++i)
        if (a.final_params(i) != b.final_params(i)) return false;
    for (std::size_t t = 0; t < a.gradients.size(); ++t)
        if (a.gradients[t] != b.gradients[t]) return false;
    return true;
}

}  // namespace

ChainReport run_chain(const SignMatrix& m, const DyadicDistribution& mu,
                      const std::vector<DyadicDistribution>& rho_candidates,
                      const ChainOptions& opt, std::uint64_t master_seed) {
    if (rho_candidates.empty()) throw std::invalid_argument("run_chain: empty rho candidate set");
    ChainReport report;
    report.master_seed = master_seed;
    report.epsilon = opt.epsilon;
    report.delta = opt.delta;

    if (m.rows() <= 24) {
        report.sq = sqdim_over_distributions(m, rho_candidates);
    } else {
        for (std::size_t i = 0; i < rho_candidates.size(); ++i) {
            auto r = sqdim_greedy(m, rho_candidates[i], 32, sub_seed(master_seed, 900 + i));
            if (r.d > report.sq.d) report.sq = std::move(r);
        }
    }

    report.disc = discprod_search(m, opt.disc_grid, opt.disc_restarts, sub_seed(master_seed, 1));
    report.sandwich = sherstov_sandwich_check(report.sq.d, report.disc.value);

    report.gamma_used =
        opt.gamma_target > 0 ? opt.gamma_target : default_gamma_target(report.sq.d);
    report.prob_target_used =
        opt.prob_target > 0 ? opt.prob_target : default_gamma_target(report.sq.d);
    report.rfl = rfl_verify(m, mu, rho_candidates, report.gamma_used, report.prob_target_used);

    BoostOptions bopt = opt.boost;
    bopt.sqdim_for_reference = report.sq.d;
    report.adc = adc_estimate(m, mu, rho_candidates, opt.epsilon, opt.delta, opt.adc_trials,
                              sub_seed(master_seed, 2), bopt);

    const Eigen::Index n_bits = bits_for_columns(m.cols());
    const auto model = make_model(opt.arch, n_bits);
    auto arm_eng = make_engine(sub_seed(master_seed, 3));
    bool arms_ok = true;
    for (std::size_t r = 0; r < rho_candidates.size(); ++r) {
        BsgdArmReport arm;
        arm.rho_name = "rho" + std::to_string(r);
        arm.target_row = static_cast<Eigen::Index>(mu.sample(arm_eng));
        arm.seed = sub_seed(master_seed, 100 + r);
        SourceDistribution source(m, arm.target_row, rho_candidates[r]);

        BsgdConfig config = opt.bsgd;
        config.seed = arm.seed;
        config.b = 0;  // full-support exact batch, so the SQ pairing is bit-exact
        const auto exact_run = run_bsgd(*model, source, config);
        const auto sq_run =
            run_bsgd_via_sq(*model, source, honest_exact_oracle(source, n_bits), config);

        arm.final_sq_loss = exact_run.population_sq_loss.back();
        arm.final_01_loss = exact_run.population_01_loss.back();
        arm.query_count = sq_run.query_count;
        arm.sq_mode_bit_exact = trajectories_identical(exact_run, sq_run);
        arm.regime =
            to_string(precision_regime(opt.bsgd, static_cast<std::size_t>(model->param_count()),
                                       1.0, opt.delta)
                          .regime);
        if (arm.final_01_loss <= opt.epsilon)
            arm.blum_consistent = blum_lower_bound_check(
                report.sq.d, static_cast<std::int64_t>(arm.query_count), config.c / 8.0);
        arms_ok = arms_ok && arm.sq_mode_bit_exact && arm.blum_consistent;
        report.bsgd_arms.push_back(std::move(arm));
    }

    report.all_certified_checks_pass = report.sandwich.left_certified && report.rfl.passes &&
                                       arms_ok &&
                                       report.adc.success_fraction >= 1.0 - opt.delta - 1e-12;
    return report;
}

SeparationReport run_separation(int N, int c_zar, const SeparationOptions& opt,
                                std::uint64_t master_seed) {
    if (N > 12) throw SizeLimitError("run_separation: N capped at 12");
    SeparationReport report;
    report.master_seed = master_seed;
    report.N = N;
    report.c_zar = c_zar;

    const SignMatrix m =
        make_zarankiewicz_random(N, c_zar, sub_seed(master_seed, 0), opt.plus_density);
    const auto mu = DyadicDistribution::uniform(static_cast<std::size_t>(m.rows()));
    const auto rho = DyadicDistribution::uniform(static_cast<std::size_t>(m.cols()));
    report.sq = sqdim_exact(m, rho).d;

    BoostOptions bopt = opt.boost;
    bopt.sqdim_for_reference = report.sq;
    for (std::size_t i = 0; i < opt.epsilon_sweep.size(); ++i) {
        const double eps = opt.epsilon_sweep[i];
        const AdcReport adc = adc_estimate(m, mu, {rho}, eps, opt.delta, opt.trials,
                                           sub_seed(master_seed, 10 + i), bopt);
        SeparationPoint point;
        point.epsilon = eps;
        point.mean_d_used = adc.mean_d_used;
        point.quantile_d_used = adc.quantile_d_used;
        point.success_fraction = adc.success_fraction;
        report.sweep.push_back(point);
    }

    // Least-squares slope of ln(mean d_used) against ln(1/epsilon).
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto k = static_cast<double>(report.sweep.size());
    for (const auto& point : report.sweep) {
        const double x = std::log(1.0 / point.epsilon);
        const double y = std::log(std::max(point.mean_d_used, 1.0));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = k * sxx - sx * sx;
    report.loglog_slope = denom != 0.0 ? (k * sxy - sx * sy) / denom : 0.0;
    return report;
}

DyadicDistribution biased_product_distribution(int n, double bias, int scale) {
    if (bias <= 0 || bias >= 1) throw std::invalid_argument("bias must be in (0,1)");
    const std::size_t cols = std::size_t{1} << n;
    if (bias == 0.5) return DyadicDistribution::uniform(cols);
    std::vector<double> p(cols);
    for (std::size_t x = 0; x < cols; ++x) {
        double mass = 1.0;
        for (int j = 0; j < n; ++j) mass *= ((x >> j) & 1) ? bias : 1.0 - bias;
        p[x] = mass;
    }
    return DyadicDistribution::from_reals(p, scale);
}

ContrastReport run_parity_contrast(int n, const ContrastOptions& opt, std::uint64_t master_seed) {
    if (n > 12) throw SizeLimitError("run_parity_contrast: n capped at 12");
    ContrastReport report;
    report.master_seed = master_seed;
    report.n = n;
    report.config = opt.bsgd;
    report.arch = opt.mlp_width > 0 ? "mlp" + std::to_string(opt.mlp_width) : "linear";

    // Single-row table of the full n-bit parity; +1 on even-parity columns.
    const Eigen::Index cols = Eigen::Index{1} << n;
    Eigen::MatrixXi entries(1, cols);
    for (Eigen::Index x = 0; x < cols; ++x)
        entries(0, x) = (std::popcount(static_cast<std::uint64_t>(x)) % 2 == 0) ? 1 : -1;
    const SignMatrix m(std::move(entries), {"full_parity"});

    const auto model = opt.mlp_width > 0
                           ? std::unique_ptr<ParametricModel>(
                                 std::make_unique<MlpTanhModel>(n, opt.mlp_width))
                           : std::unique_ptr<ParametricModel>(std::make_unique<LinearTanhModel>(n));

    std::vector<double> biases = {0.5};
    biases.insert(biases.end(), opt.bias_levels.begin(), opt.bias_levels.end());
    for (std::size_t a = 0; a < biases.size(); ++a) {
        ContrastArm arm;
        arm.bias = biases[a];
        const SourceDistribution source(m, 0, biased_product_distribution(n, biases[a]));
        for (std::size_t s = 0; s < opt.seeds; ++s) {
            BsgdConfig config = opt.bsgd;
            config.seed = sub_seed(master_seed, a * 1009 + s);
            const auto traj = run_bsgd(*model, source, config);
            arm.final_01_per_seed.push_back(traj.population_01_loss.back());
            arm.final_sq_per_seed.push_back(traj.population_sq_loss.back());
        }
        arm.median_01 = median(arm.final_01_per_seed);
        arm.median_sq = median(arm.final_sq_per_seed);
        report.arms.push_back(std::move(arm));
    }
    return report;
}

namespace {

nlohmann::json rectangle_to_json(const Rectangle& r) {
    return {{"row_set", r.row_set}, {"col_set", r.col_set}};
}

nlohmann::json sqdim_to_json(const SqdimResult& r) {
    return {{"d", r.d},
            {"witness", r.witness},
            {"scale_exponent", r.distribution.scale_exponent()},
            {"weights", r.distribution.weights()},
            {"exact", r.exact}};
}

}  // namespace

nlohmann::json chain_report_to_json(const ChainReport& r) {
    nlohmann::json arms = nlohmann::json::array();
    for (const auto& a : r.bsgd_arms)
        arms.push_back({{"rho", a.rho_name},
                        {"target_row", a.target_row},
                        {"seed", a.seed},
                        {"final_sq_loss", a.final_sq_loss},
                        {"final_01_loss", a.final_01_loss},
                        {"query_count", a.query_count},
                        {"sq_mode_bit_exact", a.sq_mode_bit_exact},
                        {"regime", a.regime},
                        {"blum_consistent", a.blum_consistent}});
    nlohmann::json per_f = nlohmann::json::object();
    for (const auto& [f, probs] : r.rfl.per_f) per_f[std::to_string(f)] = probs;
    return {{"master_seed", r.master_seed},
            {"epsilon", r.epsilon},
            {"delta", r.delta},
            {"sq", sqdim_to_json(r.sq)},
            {"disc",
             {{"value", r.disc.value}, {"witness", rectangle_to_json(r.disc.witness)}}},
            {"sandwich",
             {{"sq_lb", r.sandwich.sq_lb},
              {"disc_ub", r.sandwich.disc_ub},
              {"left_lhs", r.sandwich.left_lhs},
              {"left_rhs", r.sandwich.left_rhs},
              {"left_certified", r.sandwich.left_certified},
              {"right_rhs", r.sandwich.right_rhs},
              {"right_consistent_indication", r.sandwich.right_consistent}}},
            {"rfl",
             {{"per_f", per_f},
              {"mass_passing", r.rfl.mass_passing},
              {"gamma_used", r.rfl.gamma_used},
              {"prob_target", r.rfl.prob_target},
              {"passes", r.rfl.passes}}},
            {"adc",
             {{"quantile_d_used", r.adc.quantile_d_used},
              {"mean_d_used", r.adc.mean_d_used},
              {"success_fraction", r.adc.success_fraction},
              {"markov_tail", r.adc.markov_tail},
              {"markov_holds", r.adc.markov_holds},
              {"d_used_per_trial", r.adc.d_used_per_trial}}},
            {"bsgd_arms", arms},
            {"gamma_used", r.gamma_used},
            {"prob_target_used", r.prob_target_used},
            {"all_certified_checks_pass", r.all_certified_checks_pass}};
}

nlohmann::json separation_report_to_json(const SeparationReport& r) {
    nlohmann::json sweep = nlohmann::json::array();
    for (const auto& point : r.sweep)
        sweep.push_back({{"epsilon", point.epsilon},
                         {"mean_d_used", point.mean_d_used},
                         {"quantile_d_used", point.quantile_d_used},
                         {"success_fraction", point.success_fraction}});
    return {{"master_seed", r.master_seed}, {"N", r.N},
            {"c_zar", r.c_zar},             {"sq", r.sq},
            {"sweep", sweep},               {"loglog_slope", r.loglog_slope},
            {"dc_side", r.dc_side}};
}

nlohmann::json contrast_report_to_json(const ContrastReport& r) {
    nlohmann::json arms = nlohmann::json::array();
    for (const auto& a : r.arms)
        arms.push_back({{"bias", a.bias},
                        {"final_01_per_seed", a.final_01_per_seed},
                        {"final_sq_per_seed", a.final_sq_per_seed},
                        {"median_01", a.median_01},
                        {"median_sq", a.median_sq}});
    return {{"master_seed", r.master_seed},
            {"n", r.n},
            {"arch", r.arch},
            {"T", r.config.T},
            {"c", r.config.c},
            {"b", r.config.b},
            {"lr", r.config.gamma_step},
            {"arms", arms}};
}

std::string separation_csv(const SeparationReport& r) {
    std::ostringstream out;
    out << "epsilon,inv_epsilon,mean_d_used,quantile_d_used,success_fraction\n";
    for (const auto& point : r.sweep)
        out << point.epsilon << ',' << 1.0 / point.epsilon << ',' << point.mean_d_used << ','
            << point.quantile_d_used << ',' << point.success_fraction << '\n';
    return out.str();
}

std::string contrast_csv(const ContrastReport& r) {
    std::ostringstream out;
    out << "bias,seed_index,final_01_loss,final_sq_loss\n";
    for (const auto& a : r.arms)
        for (std::size_t s = 0; s < a.final_01_per_seed.size(); ++s)
            out << a.bias << ',' << s << ',' << a.final_01_per_seed[s] << ','
                << a.final_sq_per_seed[s] << '\n';
    return out.str();
}

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

}  // namespace

std::map<std::string, std::string> parse_toml_flat(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line, section;
    while (std::getline(in, line)) {
        // Strip comments outside quotes.
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line = line.substr(0, i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        else if (value.size() >= 2 && value.front() == '[' && value.back() == ']')
            value = trim(value.substr(1, value.size() - 2));
        out[section.empty() ? key : section + "." + key] = value;
    }
    return out;
}

double toml_number(const std::map<std::string, std::string>& t, const std::string& key,
                   double fallback) {
    const auto it = t.find(key);
    if (it == t.end()) return fallback;
    return std::stod(it->second);
}

std::string toml_string(const std::map<std::string, std::string>& t, const std::string& key,
                        const std::string& fallback) {
    const auto it = t.find(key);
    return it == t.end() ? fallback : it->second;
}

std::vector<double> toml_numbers(const std::map<std::string, std::string>& t,
                                 const std::string& key, std::vector<double> fallback) {
    const auto it = t.find(key);
    if (it == t.end()) return fallback;
    std::vector<double> out;
    std::istringstream in(it->second);
    std::string token;
    while (std::getline(in, token, ',')) {
        token = trim(token);
        if (!token.empty()) out.push_back(std::stod(token));
    }
    return out.empty() ? fallback : out;
}

}  // namespace lab
