#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spotforward/calibration.hpp"
#include "spotforward/closed_forms.hpp"
#include "spotforward/config.hpp"
#include "spotforward/deterministic.hpp"
#include "spotforward/format.hpp"
#include "spotforward/jump.hpp"
#include "spotforward/log.hpp"
#include "spotforward/model.hpp"
#include "spotforward/picard.hpp"
#include "spotforward/stats.hpp"

namespace sf = spotforward;
using nlohmann::json;

namespace {

struct CommandOutcome {
    std::string text;
    int exit_code = 0;
};

std::string csv_cell(double v) { return sf::format_sig12(v); }

//! calibration CSV cell: the stress level is undetermined at lambda = 0
std::string stress_cell(const sf::CalibrationResult& row) {
    if (std::isnan(row.c_stress_implied) && row.lambda_implied == 0.0 && row.converged)
        return "irrelevant";
    return csv_cell(row.c_stress_implied);
}

json quote_json(const sf::VenueQuote& q) {
    return json{{"forward", q.forward},
                {"spot0", q.spot0},
                {"premium", q.premium},
                {"P0", q.P0},
                {"delta0", q.delta0},
                {"expected_beta_T", q.expected_beta_T}};
}

sf::TimeGrid make_grid(const sf::RunConfig& cfg) {
    return sf::TimeGrid::uniform(cfg.params.horizon_T, cfg.n_steps);
}

CommandOutcome run_benchmark(const sf::RunConfig& cfg, const std::string& format) {
    const sf::CostProcess cost = sf::CostProcess::constant(cfg.c_onshore);
    sf::validate(sf::Model{cfg.params, cost, cfg.supply});
    const sf::TimeGrid grid = make_grid(cfg);
    const sf::MarketClearing mc = sf::clear_market(cfg.params, cost, cfg.supply, grid);

    const sf::CostCurve curve = sf::CostCurve::constant(cfg.c_onshore);
    const auto P = sf::solve_riccati_backward(curve, cfg.params.rho, grid);
    const auto delta =
        sf::solve_delta_backward(curve, P, cfg.supply.m_rate, cfg.params.rho, grid);
    const sf::CoefficientPaths paths = sf::assemble_paths(
        P, delta, mc.quantity, curve, cfg.supply.m_rate, cfg.params.rho, grid);
    const double alpha = sf::alpha_T(P, curve, cfg.params.rho, grid);

    if (format == "json") {
        json j;
        j["quote"] = quote_json(mc.quote);
        j["quantity"] = mc.quantity;
        j["alpha_T"] = alpha;
        j["paths"] = json{{"t", paths.grid.knots}, {"P", paths.P},
                          {"Lambda", paths.Lambda}, {"delta", paths.delta},
                          {"H", paths.H},           {"Q", paths.Q},
                          {"mu", paths.mu},         {"q", paths.q},
                          {"q_tilde", paths.q_tilde}};
        return {j.dump(2) + "\n", 0};
    }
    std::ostringstream os;
    os << "field,value\n";
    os << "forward," << csv_cell(mc.quote.forward) << "\n";
    os << "spot0," << csv_cell(mc.quote.spot0) << "\n";
    os << "premium," << csv_cell(mc.quote.premium) << "\n";
    os << "P0," << csv_cell(mc.quote.P0) << "\n";
    os << "delta0," << csv_cell(mc.quote.delta0) << "\n";
    os << "expected_beta_T," << csv_cell(mc.quote.expected_beta_T) << "\n";
    os << "alpha_T," << csv_cell(alpha) << "\n";
    os << "quantity," << csv_cell(mc.quantity) << "\n";
    os << "\n";
    os << "t,P,Lambda,delta,H,Q,mu,q,q_tilde\n";
    for (std::size_t i = 0; i < paths.grid.size(); ++i) {
        os << csv_cell(paths.grid.knots[i]) << ',' << csv_cell(paths.P[i]) << ','
           << csv_cell(paths.Lambda[i]) << ',' << csv_cell(paths.delta[i]) << ','
           << csv_cell(paths.H[i]) << ',' << csv_cell(paths.Q[i]) << ','
           << csv_cell(paths.mu[i]) << ',' << csv_cell(paths.q[i]) << ','
           << csv_cell(paths.q_tilde[i]) << "\n";
    }
    return {os.str(), 0};
}

CommandOutcome run_jump(const sf::RunConfig& cfg, const std::string& format) {
    if (cfg.cost.kind != sf::CostProcess::Kind::RegimeSwitch)
        throw std::invalid_argument("the jump command requires cost.kind = regime_switch");
    sf::validate(sf::Model{cfg.params, cfg.cost, cfg.supply});
    const sf::TimeGrid grid = make_grid(cfg);
    const sf::JumpCoefficients jc =
        sf::solve_jump_model(cfg.cost.c_normal, cfg.cost.c_stress, cfg.cost.lambda,
                             cfg.supply.m_rate, cfg.params.rho, grid);
    const double Eb = sf::expected_beta(jc);
    const double Ea = sf::expected_alpha(jc);
    const double identity_residual =
        1.0 - cfg.params.rho * Ea - std::exp(cfg.params.horizon_T) * jc.P_normal[0];
    const double T = cfg.params.horizon_T;
    const double b_quarter =
        sf::conditional_beta(sf::conditional_path(jc, T / 4.0), jc);
    const double b_half = sf::conditional_beta(sf::conditional_path(jc, T / 2.0), jc);
    const double b_three_quarter =
        sf::conditional_beta(sf::conditional_path(jc, 3.0 * T / 4.0), jc);
    const double b_no_event = sf::conditional_beta(sf::conditional_path(jc, std::nullopt), jc);

    if (format == "json") {
        json j;
        j["lambda"] = jc.lambda;
        j["c_normal"] = jc.c_normal;
        j["c_stress"] = jc.c_stress;
        j["expected_beta_T"] = Eb;
        j["expected_alpha_T"] = Ea;
        j["identity_residual"] = identity_residual;
        j["beta_given_event"] = json{{"quarter", b_quarter},
                                     {"half", b_half},
                                     {"three_quarter", b_three_quarter},
                                     {"no_event", b_no_event}};
        j["paths"] = json{{"t", jc.grid.knots},
                          {"P_normal", jc.P_normal},
                          {"P_stress", jc.P_stress},
                          {"delta_normal", jc.delta_normal},
                          {"delta_stress", jc.delta_stress}};
        return {j.dump(2) + "\n", 0};
    }
    std::ostringstream os;
    os << "field,value\n";
    os << "lambda," << csv_cell(jc.lambda) << "\n";
    os << "c_normal," << csv_cell(jc.c_normal) << "\n";
    os << "c_stress," << csv_cell(jc.c_stress) << "\n";
    os << "expected_beta_T," << csv_cell(Eb) << "\n";
    os << "expected_alpha_T," << csv_cell(Ea) << "\n";
    os << "identity_residual," << csv_cell(identity_residual) << "\n";
    os << "beta_given_event_quarter," << csv_cell(b_quarter) << "\n";
    os << "beta_given_event_half," << csv_cell(b_half) << "\n";
    os << "beta_given_event_three_quarter," << csv_cell(b_three_quarter) << "\n";
    os << "beta_no_event," << csv_cell(b_no_event) << "\n";
    os << "\n";
    os << "t,P_normal,P_stress,delta_normal,delta_stress\n";
    for (std::size_t i = 0; i < jc.grid.size(); ++i) {
        os << csv_cell(jc.grid.knots[i]) << ',' << csv_cell(jc.P_normal[i]) << ','
           << csv_cell(jc.P_stress[i]) << ',' << csv_cell(jc.delta_normal[i]) << ','
           << csv_cell(jc.delta_stress[i]) << "\n";
    }
    return {os.str(), 0};
}

CommandOutcome run_wedge(const sf::RunConfig& cfg, const std::string& format) {
    if (cfg.cost.kind != sf::CostProcess::Kind::RegimeSwitch)
        throw std::invalid_argument("the wedge command requires cost.kind = regime_switch");
    const sf::CostProcess onshore = sf::CostProcess::constant(cfg.c_onshore);
    const sf::TimeGrid grid = make_grid(cfg);
    const double parity =
        sf::parity_residual(cfg.params, onshore, cfg.cost, cfg.supply, grid);
    const double wedge = sf::forward_wedge(cfg.params, onshore, cfg.cost, cfg.supply, grid);
    const double implied =
        sf::parity_implied_demand(cfg.params, onshore, cfg.cost, cfg.supply, grid);
    const double d_bar = cfg.params.demand.d_bar;
    const sf::VenueQuote qy = sf::venue_quote(cfg.params, onshore, cfg.supply, d_bar, grid);
    const sf::VenueQuote qh = sf::venue_quote(cfg.params, cfg.cost, cfg.supply, d_bar, grid);

    if (format == "json") {
        json j;
        j["parity_residual"] = parity;
        j["forward_wedge"] = wedge;
        j["parity_implied_demand"] = implied;
        j["demand"] = d_bar;
        j["onshore"] = quote_json(qy);
        j["offshore"] = quote_json(qh);
        return {j.dump(2) + "\n", 0};
    }
    std::ostringstream os;
    os << "field,value\n";
    os << "parity_residual," << csv_cell(parity) << "\n";
    os << "forward_wedge," << csv_cell(wedge) << "\n";
    os << "parity_implied_demand," << csv_cell(implied) << "\n";
    os << "demand," << csv_cell(d_bar) << "\n";
    os << "onshore_forward," << csv_cell(qy.forward) << "\n";
    os << "onshore_spot0," << csv_cell(qy.spot0) << "\n";
    os << "onshore_premium," << csv_cell(qy.premium) << "\n";
    os << "offshore_forward," << csv_cell(qh.forward) << "\n";
    os << "offshore_spot0," << csv_cell(qh.spot0) << "\n";
    os << "offshore_premium," << csv_cell(qh.premium) << "\n";
    return {os.str(), 0};
}

sf::CalibrationSetup calibration_setup(const sf::RunConfig& cfg) {
    sf::CalibrationSetup setup;
    setup.params = cfg.params;
    setup.c_onshore = cfg.c_onshore;
    setup.c_normal = cfg.cost.kind == sf::CostProcess::Kind::RegimeSwitch
                         ? cfg.cost.c_normal
                         : cfg.cost.c;
    setup.supply = cfg.supply;
    setup.grid = make_grid(cfg);
    return setup;
}

std::string calibration_csv(const std::vector<sf::CalibrationResult>& rows) {
    std::ostringstream os;
    os << "target_wedge,lambda_implied,stress_prob_T,c_stress_implied,parity_residual,"
          "wedge_residual,converged\n";
    for (const auto& r : rows) {
        os << csv_cell(r.target_wedge) << ',' << csv_cell(r.lambda_implied) << ','
           << csv_cell(r.stress_probability) << ',' << stress_cell(r) << ','
           << csv_cell(r.parity_residual) << ',' << csv_cell(r.wedge_residual) << ','
           << (r.converged ? "true" : "false") << "\n";
    }
    return os.str();
}

json calibration_json(const std::vector<sf::CalibrationResult>& rows) {
    json arr = json::array();
    for (const auto& r : rows) {
        arr.push_back(json{{"target_wedge", r.target_wedge},
                           {"lambda_implied", r.lambda_implied},
                           {"stress_prob_T", r.stress_probability},
                           {"c_stress_implied", r.c_stress_implied},
                           {"parity_residual", r.parity_residual},
                           {"wedge_residual", r.wedge_residual},
                           {"iterations", r.iterations},
                           {"converged", r.converged},
                           {"multiple_roots", r.multiple_roots},
                           {"note", r.note}});
    }
    return arr;
}

CommandOutcome run_calibrate_like(const sf::RunConfig& cfg, const std::string& format,
                                  bool single) {
    std::vector<double> targets = cfg.calibration_targets;
    if (targets.empty()) throw std::invalid_argument("no calibration targets given");
    if (single && targets.size() > 1) {
        sf::logging::warn("calibrate uses the first target; %zu more ignored",
                          targets.size() - 1);
        targets.resize(1);
    }
    const sf::CalibrationSetup setup = calibration_setup(cfg);
    const std::vector<sf::CalibrationResult> rows = sf::sweep(targets, setup);
    int code = 0;
    for (const auto& r : rows) {
        if (!r.converged) code = 2;
        if (!r.note.empty()) sf::logging::info("target %.12g: %s", r.target_wedge, r.note.c_str());
    }
    if (format == "json") return {calibration_json(rows).dump(2) + "\n", code};
    return {calibration_csv(rows), code};
}

CommandOutcome run_picard_cmd(const sf::RunConfig& cfg, const std::string& format) {
    const double c_level = cfg.cost.kind == sf::CostProcess::Kind::Constant
                               ? cfg.cost.c
                               : cfg.c_onshore;
    const sf::CostCurve curve = sf::CostCurve::constant(c_level);
    const sf::TimeGrid grid = make_grid(cfg);
    const auto P = sf::solve_riccati_backward(curve, cfg.params.rho, grid);
    const auto delta =
        sf::solve_delta_backward(curve, P, cfg.supply.m_rate, cfg.params.rho, grid);
    const double quantity = cfg.params.demand.kind == sf::DemandCurve::Kind::Constant
                                ? cfg.params.demand.d_bar
                                : sf::clear_market(cfg.params,
                                                   sf::CostProcess::constant(c_level),
                                                   cfg.supply, grid)
                                      .quantity;
    const sf::CoefficientPaths benchmark = sf::assemble_paths(
        P, delta, quantity, curve, cfg.supply.m_rate, cfg.params.rho, grid);
    std::vector<double> sigma_bar(grid.size(), cfg.picard_sigma_bar);
    auto [state, report] =
        sf::run_picard(cfg.params, curve, benchmark, std::move(sigma_bar),
                       cfg.params.phi, cfg.picard_max_iter, cfg.picard_tol);

    const int code = report.converged ? 0 : 2;
    if (format == "json") {
        json j;
        j["eta"] = report.eta;
        j["phi"] = state.phi;
        j["phi_threshold_self_map"] = report.phi_thresholds.first;
        j["phi_threshold_contraction"] = report.phi_thresholds.second;
        j["converged"] = report.converged;
        j["iterations"] = report.iterate_norms.size();
        j["update_norms"] = report.iterate_norms;
        j["ratios"] = report.ratios;
        j["sup_hat_mu"] = [&] {
            double s = 0.0;
            for (double v : state.hat_mu) s = std::fmax(s, std::fabs(v));
            return s;
        }();
        return {j.dump(2) + "\n", code};
    }
    std::ostringstream os;
    os << "field,value\n";
    os << "eta," << csv_cell(report.eta) << "\n";
    os << "phi," << csv_cell(state.phi) << "\n";
    os << "phi_threshold_self_map," << csv_cell(report.phi_thresholds.first) << "\n";
    os << "phi_threshold_contraction," << csv_cell(report.phi_thresholds.second) << "\n";
    os << "converged," << (report.converged ? "true" : "false") << "\n";
    os << "iterations," << report.iterate_norms.size() << "\n";
    os << "\n";
    os << "iteration,update_norm,ratio\n";
    for (std::size_t i = 0; i < report.iterate_norms.size(); ++i) {
        os << (i + 1) << ',' << csv_cell(report.iterate_norms[i]) << ',';
        if (i >= 1 && i - 1 < report.ratios.size()) os << csv_cell(report.ratios[i - 1]);
        os << "\n";
    }
    return {os.str(), code};
}

CommandOutcome run_stats(const std::string& quotes_path, const std::string& format) {
    if (quotes_path.empty())
        throw std::invalid_argument("the stats command requires --quotes <file>");
    std::ifstream in(quotes_path);
    if (!in) throw std::invalid_argument("cannot open quotes file: " + quotes_path);
    const std::vector<sf::QuoteRow> rows = sf::read_quotes_csv(in);
    const std::vector<sf::WedgeStats> stats = sf::wedge_stats(rows);

    if (format == "json") {
        json arr = json::array();
        for (const auto& s : stats) {
            arr.push_back(json{{"tenor_months", s.tenor_months},
                               {"count", s.count},
                               {"mean", s.mean},
                               {"stddev", s.stddev},
                               {"q25", s.q25},
                               {"median", s.median},
                               {"q75", s.q75},
                               {"spot_log_ratio_mean", s.spot_log_ratio_mean}});
        }
        return {arr.dump(2) + "\n", 0};
    }
    std::ostringstream os;
    os << "tenor_months,count,mean,stddev,q25,median,q75,spot_log_ratio_mean\n";
    for (const auto& s : stats) {
        os << s.tenor_months << ',' << s.count << ',' << csv_cell(s.mean) << ','
           << csv_cell(s.stddev) << ',' << csv_cell(s.q25) << ',' << csv_cell(s.median)
           << ',' << csv_cell(s.q75) << ',' << csv_cell(s.spot_log_ratio_mean) << "\n";
    }
    return {os.str(), 0};
}

int fail(const std::string& message, int code) {
    json err{{"error", message}, {"code", code}};
    std::cerr << err.dump() << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"joint spot/forward dealer equilibrium with quadratic trading costs"};
    app.require_subcommand(1);

    std::string config_path, out_path, format = "csv", quotes_path, targets_arg;
    int grid_override = 0;
    app.add_option("--config", config_path, "config file with key = value lines");
    app.add_option("--out", out_path, "write output to this file instead of stdout");
    app.add_option("--format", format, "output format")
        ->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--grid", grid_override, "override grid.n_steps");
    app.add_option("--targets", targets_arg, "comma-separated wedge targets");
    app.add_option("--quotes", quotes_path, "input quotes CSV (stats command)");

    CLI::App* cmd_benchmark =
        app.add_subcommand("benchmark", "constant-cost venue quote and coefficient paths");
    CLI::App* cmd_jump =
        app.add_subcommand("jump", "regime-switching coefficients and expectations");
    CLI::App* cmd_wedge =
        app.add_subcommand("wedge", "two-venue parity residual and forward wedge");
    CLI::App* cmd_calibrate =
        app.add_subcommand("calibrate", "imply (lambda, c_stress) from one wedge target");
    CLI::App* cmd_sweep =
        app.add_subcommand("sweep", "calibrate a list of wedge targets");
    CLI::App* cmd_picard =
        app.add_subcommand("picard", "risk-sensitivity perturbation fixed point");
    CLI::App* cmd_stats = app.add_subcommand("stats", "per-tenor wedge statistics");
    for (CLI::App* sub : {cmd_benchmark, cmd_jump, cmd_wedge, cmd_calibrate, cmd_sweep,
                          cmd_picard, cmd_stats})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help / --version
        return fail(std::string("usage error: ") + e.what(), 1);
    }

    try {
        sf::RunConfig cfg =
            config_path.empty() ? sf::default_run_config() : sf::load_run_config(config_path);
        if (grid_override > 0) cfg.n_steps = grid_override;
        if (!targets_arg.empty()) {
            std::istringstream fake("calibration.targets = " + targets_arg + "\n");
            cfg.calibration_targets = sf::parse_run_config(fake).calibration_targets;
        }

        CommandOutcome outcome;
        if (cmd_benchmark->parsed()) outcome = run_benchmark(cfg, format);
        else if (cmd_jump->parsed()) outcome = run_jump(cfg, format);
        else if (cmd_wedge->parsed()) outcome = run_wedge(cfg, format);
        else if (cmd_calibrate->parsed()) outcome = run_calibrate_like(cfg, format, true);
        else if (cmd_sweep->parsed()) outcome = run_calibrate_like(cfg, format, false);
        else if (cmd_picard->parsed()) outcome = run_picard_cmd(cfg, format);
        else if (cmd_stats->parsed()) outcome = run_stats(quotes_path, format);
        else return fail("no command selected", 1);

        if (out_path.empty()) {
            std::cout << outcome.text;
        } else {
            std::ofstream out(out_path, std::ios::binary);
            if (!out) return fail("cannot open output file: " + out_path, 1);
            out << outcome.text;
        }
        if (outcome.exit_code != 0)
            return fail("solver did not converge; see output for details",
                        outcome.exit_code);
        return 0;
    } catch (const std::invalid_argument& e) {
        return fail(e.what(), 1);
    } catch (const std::domain_error& e) {
        return fail(e.what(), 1);
    } catch (const std::exception& e) {
        return fail(e.what(), 2);
    }
}
