#include "spotforward/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace spotforward {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key " + key + ": malformed number '" + value + "'");
    }
}

int to_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key " + key + ": malformed integer '" + value +
                                    "'");
    }
}

std::vector<double> to_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(to_double(key, item));
    }
    return out;
}

} // namespace

RunConfig default_run_config() {
    RunConfig cfg;
    cfg.params.horizon_T = 1.0;
    cfg.params.rho = 1000.0;
    cfg.params.phi = 0.0;
    cfg.params.expected_terminal = 1.0;
    cfg.params.demand = DemandCurve::constant(0.06);
    cfg.cost = CostProcess::regime_switch(0.02, 0.15, 0.67);
    cfg.supply.m_rate = 0.1333;
    cfg.supply.M0 = 0.0;
    cfg.c_onshore = 0.05;
    cfg.n_steps = 4096;
    cfg.calibration_targets = {0.003999, 0.00155, 0.0015, 0.001445, 0.00137, 0.00125};
    cfg.picard_sigma_bar = 1.0;
    cfg.picard_R = 1.0;
    cfg.picard_max_iter = 200;
    cfg.picard_tol = 1e-10;
    return cfg;
}

RunConfig parse_run_config(std::istream& in) {
    RunConfig cfg = default_run_config();
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": empty key or value");
        kv[key] = value;
    }

    for (const auto& [key, value] : kv) {
        if (key == "horizon_T") cfg.params.horizon_T = to_double(key, value);
        else if (key == "rho") cfg.params.rho = to_double(key, value);
        else if (key == "phi") cfg.params.phi = to_double(key, value);
        else if (key == "expected_terminal") cfg.params.expected_terminal = to_double(key, value);
        else if (key == "demand.kind") {
            if (value == "constant") cfg.params.demand.kind = DemandCurve::Kind::Constant;
            else if (value == "affine") cfg.params.demand.kind = DemandCurve::Kind::Affine;
            else throw std::invalid_argument("demand.kind must be constant or affine");
        } else if (key == "demand.d_bar") cfg.params.demand.d_bar = to_double(key, value);
        else if (key == "demand.d0") cfg.params.demand.d0 = to_double(key, value);
        else if (key == "demand.k") cfg.params.demand.k = to_double(key, value);
        else if (key == "cost.kind") {
            if (value == "constant") cfg.cost.kind = CostProcess::Kind::Constant;
            else if (value == "regime_switch") cfg.cost.kind = CostProcess::Kind::RegimeSwitch;
            else throw std::invalid_argument("cost.kind must be constant or regime_switch");
        } else if (key == "cost.c") cfg.cost.c = to_double(key, value);
        else if (key == "cost.c_normal") cfg.cost.c_normal = to_double(key, value);
        else if (key == "cost.c_stress") cfg.cost.c_stress = to_double(key, value);
        else if (key == "cost.lambda") cfg.cost.lambda = to_double(key, value);
        else if (key == "supply.m") cfg.supply.m_rate = to_double(key, value);
        else if (key == "supply.M0") cfg.supply.M0 = to_double(key, value);
        else if (key == "grid.n_steps") cfg.n_steps = to_int(key, value);
        else if (key == "onshore.c") cfg.c_onshore = to_double(key, value);
        else if (key == "calibration.targets")
            cfg.calibration_targets = to_double_list(key, value);
        else if (key == "picard.sigma_bar") cfg.picard_sigma_bar = to_double(key, value);
        else if (key == "picard.R") cfg.picard_R = to_double(key, value);
        else if (key == "picard.max_iter") cfg.picard_max_iter = to_int(key, value);
        else if (key == "picard.tol") cfg.picard_tol = to_double(key, value);
        else throw std::invalid_argument("unknown config key: " + key);
    }

    if (cfg.n_steps < 2) throw std::invalid_argument("grid.n_steps must be at least 2");
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    return parse_run_config(in);
}

} // namespace spotforward
