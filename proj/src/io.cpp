#include "gexpect/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "gexpect/errors.hpp"

namespace gexpect {

json to_json(const DiscreteUncertainDistribution& d) {
    return json{{"dim", d.dim()}, {"support", d.support()}, {"credal", d.credal()}};
}

DiscreteUncertainDistribution distribution_from_json(const json& j) {
    if (!j.is_object() || !j.contains("dim") || !j.contains("support") || !j.contains("credal"))
        throw_validation("distribution JSON requires fields dim, support, credal");
    return DiscreteUncertainDistribution(
        j.at("dim").get<int>(), j.at("support").get<std::vector<std::vector<double>>>(),
        j.at("credal").get<std::vector<std::vector<double>>>());
}

json to_json(const CompositionTree& t) {
    if (t.is_leaf()) return json{{"leaf", to_json(t.leaf_distribution())}};
    return json{{"product", json::array({to_json(t.left()), to_json(t.right())})}};
}

CompositionTree tree_from_json(const json& j) {
    if (j.contains("leaf")) return CompositionTree::leaf(distribution_from_json(j.at("leaf")));
    if (j.contains("product")) {
        const auto& pr = j.at("product");
        if (!pr.is_array() || pr.size() != 2)
            throw_validation("tree JSON: product must hold exactly two subtrees");
        return product(tree_from_json(pr.at(0)), tree_from_json(pr.at(1)));
    }
    throw_validation("tree JSON requires either a leaf or a product field");
}

json to_json(const SupportSetTheta& theta) {
    json pairs = json::array();
    for (const auto& pr : theta.pairs()) {
        json q = pr.mean;
        json qm = json::array();
        for (int i = 0; i < pr.cov_factor.rows(); ++i) {
            json row = json::array();
            for (int k = 0; k < pr.cov_factor.cols(); ++k) row.push_back(pr.cov_factor(i, k));
            qm.push_back(row);
        }
        pairs.push_back(json{{"q", q}, {"Q", qm}});
    }
    json out{{"dim", theta.dim()}, {"pairs", pairs}};
    if (theta.ellipticity_lower_bound()) out["beta"] = *theta.ellipticity_lower_bound();
    return out;
}

SupportSetTheta theta_from_json(const json& j) {
    if (!j.is_object() || !j.contains("dim") || !j.contains("pairs"))
        throw_validation("scenario-set JSON requires fields dim, pairs");
    int dim = j.at("dim").get<int>();
    std::vector<ScenarioPair> pairs;
    for (const auto& pj : j.at("pairs")) {
        ScenarioPair pr;
        pr.mean = pj.at("q").get<std::vector<double>>();
        auto rows = pj.at("Q").get<std::vector<std::vector<double>>>();
        pr.cov_factor = Matrix(static_cast<int>(rows.size()),
                               rows.empty() ? 0 : static_cast<int>(rows[0].size()));
        for (size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != rows.size())
                throw_validation("scenario-set JSON: Q must be square");
            for (size_t k = 0; k < rows[i].size(); ++k)
                pr.cov_factor(static_cast<int>(i), static_cast<int>(k)) = rows[i][k];
        }
        pairs.push_back(std::move(pr));
    }
    std::optional<double> beta;
    if (j.contains("beta") && !j.at("beta").is_null()) beta = j.at("beta").get<double>();
    return SupportSetTheta(dim, std::move(pairs), beta);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw_config("cannot open output file " + tmp.string());
        out << content;
        if (!out) throw_config("failed writing output file " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p.replace_extension(".json");
    return p;
}

std::string format_double(double v) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

namespace {

std::string boundary_name(BoundaryMode bm) {
    return bm == BoundaryMode::kFrozenInitial ? "frozen_initial" : "linear_extrapolation";
}

}  // namespace

void write_field_csv(const SolutionField& field, const std::filesystem::path& path) {
    const Grid& g = field.grid;
    int n = g.nodes_per_axis();
    std::string csv;
    if (g.spatial_dim == 1) {
        csv = "x,value\n";
        for (int i = 0; i < n; ++i)
            csv += format_double(g.node(i)) + "," + format_double(field.values[i]) + "\n";
    } else {
        csv = "x,y,value\n";
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                csv += format_double(g.node(i)) + "," + format_double(g.node(j)) + "," +
                       format_double(field.values[static_cast<size_t>(i) * n + j]) + "\n";
    }
    write_file_atomic(path, csv);

    json side{{"t", field.time},
              {"dx", g.dx},
              {"dt", g.dt},
              {"L", std::min(-g.x_min, g.x_max)},
              {"boundary", boundary_name(field.boundary_mode)},
              {"trunc_bound", field.truncation_error_bound}};
    write_file_atomic(sidecar_path(path), side.dump(2) + "\n");
}

void write_report_csv(const ConvergenceReport& report, const std::filesystem::path& path) {
    std::string csv = "n,harness,reference,abs_error\n";
    for (size_t i = 0; i < report.n_values.size(); ++i)
        csv += std::to_string(report.n_values[i]) + "," +
               format_double(report.harness_values[i]) + "," +
               format_double(report.pde_reference) + "," +
               format_double(report.abs_errors[i]) + "\n";
    write_file_atomic(path, csv);

    json side{{"alpha_fit", report.fitted_rate},
              {"C", report.rate_constant},
              {"moment_bound", report.moment_bound},
              {"joint_mode", to_string(report.joint_mode)}};
    if (!report.warnings.empty()) side["warnings"] = report.warnings;
    write_file_atomic(sidecar_path(path), side.dump(2) + "\n");
}

void write_value_csv(double value, const std::filesystem::path& path, const json& sidecar) {
    write_file_atomic(path, "value\n" + format_double(value) + "\n");
    write_file_atomic(sidecar_path(path), sidecar.dump(2) + "\n");
}

}  // namespace gexpect
