#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "lab/persistence.hpp"
#include "lab/pipeline.hpp"

namespace {

using nlohmann::json;

// Accepts either a bare payload JSON file or an artifact envelope.
json load_payload(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw lab::MalformedArtifactError("cannot open " + path);
    json j;
    in >> j;
    if (j.is_object() && j.contains("payload") && j.contains("content_hash"))
        return lab::load_artifact(path).payload;
    return j;
}

lab::SignMatrix load_matrix(const std::string& path) {
    return lab::matrix_from_json(load_payload(path));
}

lab::DyadicDistribution load_distribution(const std::string& path) {
    return lab::distribution_from_json(load_payload(path));
}

std::vector<lab::DyadicDistribution> load_distribution_list(const std::string& path) {
    const json j = load_payload(path);
    if (!j.is_array()) throw lab::MalformedArtifactError(path + ": expected an array");
    std::vector<lab::DyadicDistribution> out;
    for (const auto& entry : j) out.push_back(lab::distribution_from_json(entry));
    return out;
}

void emit(const json& report, const std::string& out_path) {
    const std::string text = lab::canonical_dump(report);
    if (out_path.empty()) {
        std::cout << text << '\n';
    } else {
        std::ofstream out(out_path, std::ios::trunc);
        out << text << '\n';
        std::cout << out_path << '\n';
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

lab::BsgdConfig bsgd_config_from_toml(const std::map<std::string, std::string>& cfg) {
    lab::BsgdConfig c;
    c.T = static_cast<std::size_t>(lab::toml_number(cfg, "bsgd.T", 100));
    c.c = lab::toml_number(cfg, "bsgd.c", 0.0625);
    c.b = static_cast<std::size_t>(lab::toml_number(cfg, "bsgd.b", 32));
    c.gamma_step = lab::toml_number(cfg, "bsgd.lr", 0.1);
    c.init_half_width = lab::toml_number(cfg, "bsgd.init_half_width", 0.5);
    return c;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale laboratory for SQ dimension, discrepancy, random features, "
                 "boosting, and precision-limited SGD"};
    app.require_subcommand(1);

    std::string matrix_path, dist_path, mu_path, rho_path, rhos_path, source_path;
    std::string out_path, config_path, out_dir, gamma_arg = "auto", arch = "linear";
    std::uint64_t seed = 0;
    int restarts = 32, grid = 6, trials = 20;
    double eps = 0.1, delta = 0.05;

    auto* sqdim_cmd = app.add_subcommand("sqdim", "SQ dimension of a sign matrix");
    sqdim_cmd->add_option("--matrix", matrix_path)->required();
    sqdim_cmd->add_option("--dist", dist_path)->required();
    bool greedy = false;
    sqdim_cmd->add_flag("--greedy", greedy, "greedy lower bound instead of exact search");
    sqdim_cmd->add_option("--restarts", restarts);
    sqdim_cmd->add_option("--seed", seed);
    sqdim_cmd->add_option("--out", out_path);
    sqdim_cmd->callback([&] {
        const auto m = load_matrix(matrix_path);
        const auto rho = load_distribution(dist_path);
        const auto r = greedy ? lab::sqdim_greedy(m, rho, restarts, seed)
                              : lab::sqdim_exact(m, rho);
        emit({{"d", r.d}, {"witness", r.witness}, {"exact", r.exact}}, out_path);
    });

    auto* disc_cmd = app.add_subcommand("disc", "discrepancy of a sign matrix");
    disc_cmd->add_option("--matrix", matrix_path)->required();
    std::string under_path;
    bool minimize = false;
    disc_cmd->add_option("--under", under_path, "product weighting {row, col} to evaluate under");
    disc_cmd->add_flag("--min", minimize, "search for a small product-discrepancy weighting");
    disc_cmd->add_option("--grid", grid);
    disc_cmd->add_option("--restarts", restarts);
    disc_cmd->add_option("--seed", seed);
    disc_cmd->add_option("--out", out_path);
    disc_cmd->callback([&] {
        const auto m = load_matrix(matrix_path);
        lab::DiscrepancyResult r;
        if (!under_path.empty()) {
            const json z = load_payload(under_path);
            r = lab::discrepancy_under(m, lab::distribution_from_json(z.at("row")),
                                       lab::distribution_from_json(z.at("col")));
        } else if (minimize) {
            r = lab::discprod_search(m, grid, restarts, seed);
        } else {
            throw CLI::ValidationError("disc", "pass --under or --min");
        }
        emit({{"value", r.value},
              {"witness", {{"row_set", r.witness.row_set}, {"col_set", r.witness.col_set}}},
              {"zeta_row", lab::distribution_to_json(r.zeta_row)},
              {"zeta_col", lab::distribution_to_json(r.zeta_col)},
              {"certified_exact_rectangle", r.certified_exact_rectangle}},
             out_path);
    });

    auto* r2_cmd = app.add_subcommand("r2", "two-party R2 norm of Eval");
    r2_cmd->add_option("--matrix", matrix_path)->required();
    r2_cmd->add_option("--mu", mu_path)->required();
    r2_cmd->add_option("--rho", rho_path)->required();
    r2_cmd->add_option("--out", out_path);
    r2_cmd->callback([&] {
        const auto m = load_matrix(matrix_path);
        const double r2 =
            lab::r2_norm(m, load_distribution(mu_path), load_distribution(rho_path));
        emit({{"r2", r2}, {"fourth_root_bound", 4.0 * std::pow(r2, 0.25)}}, out_path);
    });

    auto* corr_cmd = app.add_subcommand("corrbound", "2-bit protocol correlation bound check");
    corr_cmd->add_option("--matrix", matrix_path)->required();
    corr_cmd->add_option("--mu", mu_path)->required();
    corr_cmd->add_option("--rho", rho_path)->required();
    corr_cmd->add_option("--out", out_path);
    corr_cmd->callback([&] {
        const auto m = load_matrix(matrix_path);
        const auto r = lab::corr_bound_check(m, load_distribution(mu_path),
                                             load_distribution(rho_path));
        emit({{"max_correlation", r.max_correlation},
              {"r2", r.r2},
              {"bound", r.bound},
              {"protocols", r.protocols},
              {"holds", r.holds}},
             out_path);
    });

    auto* rfl_cmd = app.add_subcommand("rfl", "random-feature lemma verification");
    rfl_cmd->add_option("--matrix", matrix_path)->required();
    rfl_cmd->add_option("--mu", mu_path)->required();
    rfl_cmd->add_option("--rhos", rhos_path)->required();
    rfl_cmd->add_option("--gamma", gamma_arg, "advantage target, or 'auto'");
    rfl_cmd->add_option("--trials", trials);
    rfl_cmd->add_option("--seed", seed);
    rfl_cmd->add_option("--out", out_path);
    rfl_cmd->callback([&] {
        const auto m = load_matrix(matrix_path);
        const auto mu = load_distribution(mu_path);
        const auto rhos = load_distribution_list(rhos_path);
        double gamma;
        if (gamma_arg == "auto") {
            const auto sq = lab::sqdim_over_distributions(m, rhos);
            gamma = lab::default_gamma_target(sq.d);
        } else {
            gamma = std::stod(gamma_arg);
        }
        const auto r = lab::rfl_verify(m, mu, rhos, gamma, gamma);
        json per_f = json::object();
        for (const auto& [f, probs] : r.per_f) per_f[std::to_string(f)] = probs;
        emit({{"per_f", per_f},
              {"mass_passing", r.mass_passing},
              {"gamma_used", r.gamma_used},
              {"prob_target", r.prob_target},
              {"passes", r.passes}},
             out_path);
    });

    auto* boost_cmd = app.add_subcommand("boost", "boost random features into a strong model");
    boost_cmd->add_option("--matrix", matrix_path)->required();
    boost_cmd->add_option("--mu", mu_path)->required();
    boost_cmd->add_option("--rho", rho_path)->required();
    Eigen::Index target_row = 0;
    boost_cmd->add_option("--target", target_row, "target concept row");
    boost_cmd->add_option("--eps", eps);
    boost_cmd->add_option("--seed", seed);
    boost_cmd->add_option("--out", out_path);
    boost_cmd->callback([&] {
        const auto m = load_matrix(matrix_path);
        const lab::SourceDistribution source(m, target_row, load_distribution(rho_path));
        lab::BoostOptions opt;
        opt.epsilon_target = eps;
        opt.seed = seed;
        const auto r = lab::boost_from_mu_feat(source, load_distribution(mu_path), opt);
        emit({{"model", lab::model_to_json(r.model)},
              {"d_used", r.estimate.d_used},
              {"d_kept", r.estimate.d_kept},
              {"epsilon_achieved", r.estimate.epsilon_achieved},
              {"budget_exhausted", r.budget_exhausted},
              {"per_round_bound", r.per_round_bound},
              {"per_round_error", r.per_round_error}},
             out_path);
    });

    auto* adc_cmd = app.add_subcommand("adc", "average probabilistic dimension estimate");
    adc_cmd->add_option("--matrix", matrix_path)->required();
    adc_cmd->add_option("--mu", mu_path)->required();
    adc_cmd->add_option("--rhos", rhos_path)->required();
    adc_cmd->add_option("--eps", eps);
    adc_cmd->add_option("--delta", delta);
    adc_cmd->add_option("--trials", trials);
    adc_cmd->add_option("--seed", seed);
    adc_cmd->add_option("--out", out_path);
    adc_cmd->callback([&] {
        const auto m = load_matrix(matrix_path);
        const auto r = lab::adc_estimate(m, load_distribution(mu_path),
                                         load_distribution_list(rhos_path), eps, delta,
                                         static_cast<std::size_t>(trials), seed, {});
        emit({{"quantile_d_used", r.quantile_d_used},
              {"mean_d_used", r.mean_d_used},
              {"success_fraction", r.success_fraction},
              {"markov_tail", r.markov_tail},
              {"markov_holds", r.markov_holds},
              {"d_used_per_trial", r.d_used_per_trial}},
             out_path);
    });

    auto* bsgd_cmd = app.add_subcommand("bsgd", "precision-limited mini-batch SGD run");
    bsgd_cmd->add_option("--arch", arch, "linear or mlp<width>");
    bsgd_cmd->add_option("--source", source_path, "{matrix, target_row, rho}")->required();
    lab::BsgdConfig bsgd_config;
    bool via_sq = false;
    bsgd_cmd->add_option("--T", bsgd_config.T);
    bsgd_cmd->add_option("--c", bsgd_config.c);
    bsgd_cmd->add_option("--b", bsgd_config.b, "batch size; 0 = full-support exact batch");
    bsgd_cmd->add_option("--lr", bsgd_config.gamma_step);
    bsgd_cmd->add_option("--seed", bsgd_config.seed);
    bsgd_cmd->add_flag("--via-sq", via_sq, "drive the run through the SQ oracle");
    bsgd_cmd->add_option("--out", out_path);
    bsgd_cmd->callback([&] {
        const json src = load_payload(source_path);
        const auto m = lab::matrix_from_json(src.at("matrix"));
        const lab::SourceDistribution source(m, src.at("target_row").get<Eigen::Index>(),
                                             lab::distribution_from_json(src.at("rho")));
        Eigen::Index n_bits = 0;
        while ((Eigen::Index{1} << n_bits) < m.cols()) ++n_bits;
        if (n_bits == 0) n_bits = 1;
        std::unique_ptr<lab::ParametricModel> model;
        if (arch == "linear")
            model = std::make_unique<lab::LinearTanhModel>(n_bits);
        else
            model = std::make_unique<lab::MlpTanhModel>(
                n_bits, static_cast<Eigen::Index>(std::stoll(arch.substr(3))));
        const auto traj =
            via_sq ? lab::run_bsgd_via_sq(*model, source,
                                          lab::honest_exact_oracle(source, n_bits), bsgd_config)
                   : lab::run_bsgd(*model, source, bsgd_config);
        const auto regime = lab::precision_regime(
            bsgd_config, static_cast<std::size_t>(model->param_count()));
        emit({{"final_loss_sq", traj.population_sq_loss.back()},
              {"final_loss_01", traj.population_01_loss.back()},
              {"trajectory_sq", traj.population_sq_loss},
              {"trajectory_01", traj.population_01_loss},
              {"query_count", traj.query_count},
              {"regime", lab::to_string(regime.regime)}},
             out_path);
    });

    auto add_pipeline_options = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "TOML run configuration");
        cmd->add_option("--out", out_dir, "output directory")->required();
        cmd->add_option("--seed", seed);
    };

    auto* chain_cmd = app.add_subcommand("chain", "full verification chain on one class");
    add_pipeline_options(chain_cmd);
    chain_cmd->callback([&] {
        const auto cfg = config_path.empty()
                             ? std::map<std::string, std::string>{}
                             : lab::parse_toml_flat(read_file(config_path));
        const int n = static_cast<int>(lab::toml_number(cfg, "chain.parity_n", 2));
        const auto m = lab::make_parity_class(n);
        const auto mu = lab::DyadicDistribution::uniform(static_cast<std::size_t>(m.rows()));
        std::vector<lab::DyadicDistribution> rhos = {
            lab::DyadicDistribution::uniform(static_cast<std::size_t>(m.cols()))};
        lab::ChainOptions opt;
        opt.epsilon = lab::toml_number(cfg, "chain.eps", 0.1);
        opt.delta = lab::toml_number(cfg, "chain.delta", 0.05);
        opt.adc_trials = static_cast<std::size_t>(lab::toml_number(cfg, "chain.trials", 20));
        opt.arch = lab::toml_string(cfg, "chain.arch", "linear");
        opt.bsgd = bsgd_config_from_toml(cfg);
        const auto r = lab::run_chain(m, mu, rhos, opt,
                                      static_cast<std::uint64_t>(
                                          lab::toml_number(cfg, "chain.seed",
                                                           static_cast<double>(seed))));
        std::filesystem::create_directories(out_dir);
        write_text(std::filesystem::path(out_dir) / "chain.json",
                   lab::canonical_dump(lab::chain_report_to_json(r)) + "\n");
        std::cout << (std::filesystem::path(out_dir) / "chain.json").string() << '\n';
    });

    auto* sep_cmd = app.add_subcommand("separation", "adc vs 1/eps sweep on Zarankiewicz classes");
    add_pipeline_options(sep_cmd);
    sep_cmd->callback([&] {
        const auto cfg = config_path.empty()
                             ? std::map<std::string, std::string>{}
                             : lab::parse_toml_flat(read_file(config_path));
        lab::SeparationOptions opt;
        opt.epsilon_sweep = lab::toml_numbers(cfg, "separation.eps_sweep", {0.4, 0.2, 0.1});
        opt.delta = lab::toml_number(cfg, "separation.delta", 0.05);
        opt.trials = static_cast<std::size_t>(lab::toml_number(cfg, "separation.trials", 10));
        const int N = static_cast<int>(lab::toml_number(cfg, "separation.N", 8));
        const int c_zar = static_cast<int>(lab::toml_number(cfg, "separation.c", 2));
        const auto r = lab::run_separation(N, c_zar, opt,
                                           static_cast<std::uint64_t>(
                                               lab::toml_number(cfg, "separation.seed",
                                                                static_cast<double>(seed))));
        std::filesystem::create_directories(out_dir);
        write_text(std::filesystem::path(out_dir) / "separation.json",
                   lab::canonical_dump(lab::separation_report_to_json(r)) + "\n");
        write_text(std::filesystem::path(out_dir) / "separation.csv", lab::separation_csv(r));
        std::cout << (std::filesystem::path(out_dir) / "separation.json").string() << '\n';
    });

    auto* contrast_cmd =
        app.add_subcommand("parity-contrast", "uniform vs biased product parity training");
    add_pipeline_options(contrast_cmd);
    contrast_cmd->callback([&] {
        const auto cfg = config_path.empty()
                             ? std::map<std::string, std::string>{}
                             : lab::parse_toml_flat(read_file(config_path));
        lab::ContrastOptions opt;
        opt.bias_levels = lab::toml_numbers(cfg, "contrast.bias_levels", {0.9});
        opt.seeds = static_cast<std::size_t>(lab::toml_number(cfg, "contrast.seeds", 5));
        opt.mlp_width =
            static_cast<Eigen::Index>(lab::toml_number(cfg, "contrast.mlp_width", 32));
        opt.bsgd = bsgd_config_from_toml(cfg);
        const int n = static_cast<int>(lab::toml_number(cfg, "contrast.n", 10));
        const auto r = lab::run_parity_contrast(
            n, opt,
            static_cast<std::uint64_t>(
                lab::toml_number(cfg, "contrast.seed", static_cast<double>(seed))));
        std::filesystem::create_directories(out_dir);
        write_text(std::filesystem::path(out_dir) / "parity_contrast.json",
                   lab::canonical_dump(lab::contrast_report_to_json(r)) + "\n");
        write_text(std::filesystem::path(out_dir) / "parity_contrast.csv", lab::contrast_csv(r));
        std::cout << (std::filesystem::path(out_dir) / "parity_contrast.json").string() << '\n';
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
