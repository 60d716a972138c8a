// gexpect: batch front-end for credal-expectation experiments.
//
//   gexpect <command> --config path.json [--seed N] [--out PATH]
//
// Commands: solve, gdist, clt, lln, props. Each run reads one JSON config,
// writes a CSV table plus a JSON sidecar (written atomically: temp file,
// renamed on success), and exits 0 on success, 1 on a property-suite
// failure, 2 on validation errors, 3 on numerical blow-up, 4 when a resource
// budget is exceeded.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gexpect/composition.hpp"
#include "gexpect/errors.hpp"
#include "gexpect/gfunction.hpp"
#include "gexpect/io.hpp"
#include "gexpect/limit.hpp"
#include "gexpect/pde.hpp"
#include "gexpect/test_functions.hpp"

namespace {

using gexpect::json;

constexpr int kExitOk = 0;
constexpr int kExitPropertyFailure = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitResource = 4;

struct GridSettings {
    double halfwidth = 6.0;
    double dx = 0.02;
    double safety = 1.0;
    double t = 1.0;
    double t_final = 1.0;
    bool full_form = false;
    gexpect::BoundaryMode boundary = gexpect::BoundaryMode::kFrozenInitial;
};

GridSettings parse_grid(const json& cfg) {
    GridSettings s;
    if (!cfg.contains("grid")) return s;
    const json& g = cfg.at("grid");
    s.halfwidth = g.value("L", s.halfwidth);
    s.dx = g.value("dx", s.dx);
    s.safety = g.value("safety", s.safety);
    s.t = g.value("t", s.t);
    s.t_final = g.value("t_final", std::max(s.t, 1.0));
    std::string form = g.value("form", std::string("reduced"));
    if (form == "full")
        s.full_form = true;
    else if (form != "reduced")
        gexpect::throw_validation("grid.form must be 'reduced' or 'full'");
    std::string bm = g.value("boundary", std::string("frozen_initial"));
    if (bm == "linear_extrapolation")
        s.boundary = gexpect::BoundaryMode::kLinearExtrapolation;
    else if (bm != "frozen_initial")
        gexpect::throw_validation(
            "grid.boundary must be 'frozen_initial' or 'linear_extrapolation'");
    return s;
}

gexpect::GFunction g_from_config(const json& cfg) {
    if (cfg.contains("g")) {
        gexpect::Aggregation agg = gexpect::Aggregation::kSup;
        std::string a = cfg.value("aggregation", std::string("sup"));
        if (a == "inf")
            agg = gexpect::Aggregation::kInf;
        else if (a != "sup")
            gexpect::throw_validation("aggregation must be 'sup' or 'inf'");
        return gexpect::GFunction::from_support(gexpect::theta_from_json(cfg.at("g")), agg);
    }
    if (cfg.contains("joint"))
        return gexpect::GFunction::from_joint(gexpect::distribution_from_json(cfg.at("joint")));
    if (cfg.contains("distribution_x")) {
        auto x = gexpect::distribution_from_json(cfg.at("distribution_x"));
        auto y = cfg.contains("distribution_y")
                     ? gexpect::distribution_from_json(cfg.at("distribution_y"))
                     : gexpect::DiscreteUncertainDistribution::point_mass(
                           std::vector<double>(x.dim(), 0.0));
        return gexpect::GFunction::from_marginals(x, y);
    }
    gexpect::throw_validation(
        "config must provide a Hamiltonian payload: 'g', 'joint' or 'distribution_x'");
}

gexpect::IIDPair pair_from_config(const json& cfg) {
    if (cfg.contains("joint"))
        return gexpect::IIDPair::joint(gexpect::distribution_from_json(cfg.at("joint")));
    if (!cfg.contains("distribution_x"))
        gexpect::throw_validation("clt config requires 'distribution_x' or 'joint'");
    auto x = gexpect::distribution_from_json(cfg.at("distribution_x"));
    auto y = cfg.contains("distribution_y")
                 ? gexpect::distribution_from_json(cfg.at("distribution_y"))
                 : gexpect::DiscreteUncertainDistribution::point_mass({0.0});
    return gexpect::IIDPair(std::move(x), std::move(y));
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

double parse_number(const std::string& s, const std::string& what) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        gexpect::throw_validation("cannot parse number '" + s + "' in " + what);
    }
}

// Named test functions: quad:A:p, abs_clipped:L, indicator_smooth:a:b,
// distance_to_hull (uses config "hull": [lo, hi]), custom_polyline (uses
// config "phi_nodes": [[x, y], ...]).
gexpect::TestFunction phi_from_config(const json& cfg, bool full_form) {
    if (!cfg.contains("phi")) gexpect::throw_validation("config requires a 'phi' name");
    std::string name = cfg.at("phi").get<std::string>();
    auto parts = split(name, ':');
    const std::string& kind = parts[0];

    if (kind == "quad") {
        if (parts.size() != 3) gexpect::throw_validation("phi quad requires quad:A:p");
        double a = parse_number(parts[1], "phi");
        double p = parse_number(parts[2], "phi");
        return full_form ? gexpect::make_quadratic_pair(a, p) : gexpect::make_quadratic(a, p);
    }

    gexpect::TestFunction psi;
    if (kind == "abs_clipped") {
        if (parts.size() != 2) gexpect::throw_validation("phi abs_clipped requires abs_clipped:L");
        psi = gexpect::make_abs_clipped(parse_number(parts[1], "phi"));
    } else if (kind == "indicator_smooth") {
        if (parts.size() != 3)
            gexpect::throw_validation("phi indicator_smooth requires indicator_smooth:a:b");
        psi = gexpect::make_indicator_smooth(parse_number(parts[1], "phi"),
                                             parse_number(parts[2], "phi"));
    } else if (kind == "distance_to_hull") {
        if (!cfg.contains("hull"))
            gexpect::throw_validation("phi distance_to_hull requires config field 'hull'");
        auto hull = cfg.at("hull").get<std::vector<double>>();
        if (hull.size() != 2)
            gexpect::throw_validation("'hull' must be [lo, hi]");
        psi = gexpect::make_distance_to_interval(hull[0], hull[1]);
    } else if (kind == "custom_polyline") {
        if (!cfg.contains("phi_nodes"))
            gexpect::throw_validation("phi custom_polyline requires config field 'phi_nodes'");
        auto rows = cfg.at("phi_nodes").get<std::vector<std::vector<double>>>();
        std::vector<std::pair<double, double>> nodes;
        for (const auto& r : rows) {
            if (r.size() != 2)
                gexpect::throw_validation("'phi_nodes' rows must be [x, y] pairs");
            nodes.emplace_back(r[0], r[1]);
        }
        psi = gexpect::make_polyline(std::move(nodes));
    } else {
        gexpect::throw_validation("unknown phi name '" + name + "'");
    }
    return full_form ? gexpect::compose_sum_reduction(psi) : psi;
}

std::vector<int> n_list_from_config(const json& cfg) {
    std::vector<int> n_list{8, 32, 128};
    if (cfg.contains("n_list")) n_list = cfg.at("n_list").get<std::vector<int>>();
    return n_list;
}

gexpect::HarnessOptions harness_options(const json& cfg) {
    gexpect::HarnessOptions opts;
    if (cfg.contains("budget")) opts.state_budget = cfg.at("budget").get<size_t>();
    return opts;
}

int cmd_solve(const json& cfg, const std::filesystem::path& out, bool value_only) {
    GridSettings gs = parse_grid(cfg);
    gexpect::GFunction g = g_from_config(cfg);
    gexpect::Grid grid = gexpect::build_grid(g, gs.halfwidth, gs.dx, gs.t_final, gs.safety,
                                             gs.full_form ? 2 : 1);
    gexpect::TestFunction phi = phi_from_config(cfg, gs.full_form);
    double t = value_only ? 1.0 : gs.t;
    gexpect::SolutionField field =
        gs.full_form ? gexpect::solve_full(phi, g, t, grid, gs.boundary)
                     : gexpect::solve(phi, g, t, grid, gs.boundary);
    if (value_only) {
        json side{{"t", field.time},
                  {"dx", grid.dx},
                  {"dt", grid.dt},
                  {"L", std::min(-grid.x_min, grid.x_max)},
                  {"boundary", cfg.contains("grid") ? cfg.at("grid").value(
                                   "boundary", std::string("frozen_initial"))
                                                     : std::string("frozen_initial")},
                  {"trunc_bound", field.truncation_error_bound}};
        gexpect::write_value_csv(field.center_value(), out, side);
    } else {
        gexpect::write_field_csv(field, out);
    }
    return kExitOk;
}

int cmd_clt(const json& cfg, const std::filesystem::path& out) {
    GridSettings gs = parse_grid(cfg);
    gexpect::IIDPair pair = pair_from_config(cfg);
    gexpect::GFunction g = pair.induced_g();
    gexpect::Grid grid =
        gexpect::build_grid(g, gs.halfwidth, gs.dx, gs.t_final, gs.safety, 1);
    gexpect::TestFunction phi = phi_from_config(cfg, false);
    gexpect::ConvergenceReport report =
        gexpect::clt_convergence_study(pair, phi, n_list_from_config(cfg), grid,
                                       harness_options(cfg));
    gexpect::write_report_csv(report, out);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
    return kExitOk;
}

int cmd_lln(const json& cfg, const std::filesystem::path& out) {
    if (!cfg.contains("distribution_y"))
        gexpect::throw_validation("lln config requires 'distribution_y'");
    auto y = gexpect::distribution_from_json(cfg.at("distribution_y"));
    gexpect::ConvergenceReport report =
        gexpect::lln_distance_study(y, n_list_from_config(cfg), harness_options(cfg));
    gexpect::write_report_csv(report, out);
    return kExitOk;
}

int cmd_props(const json& cfg, const std::filesystem::path& out, uint64_t seed) {
    if (!cfg.contains("g"))
        gexpect::throw_validation("props config requires a 'g' scenario-set payload");
    gexpect::SupportSetTheta theta = gexpect::theta_from_json(cfg.at("g"));

    double halfwidth = 3.0, dx = 0.1, t_final = 0.25, safety = 1.0;
    if (cfg.contains("grid")) {
        const json& g = cfg.at("grid");
        halfwidth = g.value("L", halfwidth);
        dx = g.value("dx", dx);
        t_final = g.value("t", t_final);
        safety = g.value("safety", safety);
    }
    int count = 100;
    if (cfg.contains("props")) count = cfg.at("props").value("count", count);

    gexpect::GFunction g = gexpect::GFunction::from_support(theta);
    gexpect::Grid grid = gexpect::build_grid(g, halfwidth, dx, t_final, safety, 1);
    gexpect::PropertySuiteResult result =
        gexpect::run_property_suite(theta, grid, count, seed);

    std::string csv = "property,checks,failures\n";
    for (const auto& c : result.checks)
        csv += c.name + "," + std::to_string(c.checks) + "," + std::to_string(c.failures) + "\n";
    gexpect::write_file_atomic(out, csv);
    json side{{"seed", seed}, {"conditions", count}, {"all_pass", result.all_pass()}};
    gexpect::write_file_atomic(gexpect::sidecar_path(out), side.dump(2) + "\n");

    if (!result.all_pass()) {
        for (const auto& c : result.checks)
            if (c.failures > 0)
                std::cerr << "property failure: " << c.name << " (" << c.witness << ")\n";
        return kExitPropertyFailure;
    }
    return kExitOk;
}

int dispatch(const std::string& command, const json& cfg, const std::filesystem::path& out,
             uint64_t seed) {
    if (cfg.contains("schema") && cfg.at("schema").get<int>() != 1)
        gexpect::throw_validation("unsupported config schema version");
    if (cfg.contains("command") && cfg.at("command").get<std::string>() != command)
        gexpect::throw_validation("config 'command' field does not match the subcommand");

    if (command == "solve") return cmd_solve(cfg, out, /*value_only=*/false);
    if (command == "gdist") return cmd_solve(cfg, out, /*value_only=*/true);
    if (command == "clt") return cmd_clt(cfg, out);
    if (command == "lln") return cmd_lln(cfg, out);
    if (command == "props") return cmd_props(cfg, out, seed);
    gexpect::throw_validation("unknown command '" + command + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"credal expectations, G-functions and the G-heat equation"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::optional<uint64_t> seed_override;

    for (const char* name : {"solve", "gdist", "clt", "lln", "props"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--seed", seed_override, "seed override");
        sub->add_option("--out", out_override, "output CSV path override");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitValidation;  // --help exits 0
    }
    std::string command = app.get_subcommands().front()->get_name();

    try {
        std::ifstream in(config_path);
        if (!in) gexpect::throw_validation("cannot open config file " + config_path);
        json cfg;
        try {
            cfg = json::parse(in);
        } catch (const json::exception& e) {
            gexpect::throw_validation(std::string("config is not valid JSON: ") + e.what());
        }

        uint64_t seed = seed_override.value_or(cfg.value("seed", 0ull));
        std::filesystem::path out = out_override.empty()
                                        ? cfg.value("output_path", command + "_out.csv")
                                        : out_override;
        return dispatch(command, cfg, out, seed);
    } catch (const gexpect::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.kind()) {
            case gexpect::ErrorKind::kNumerical:
                return kExitNumerical;
            case gexpect::ErrorKind::kResource:
                return kExitResource;
            default:
                return kExitValidation;
        }
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}
