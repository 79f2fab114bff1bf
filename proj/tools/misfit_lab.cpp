// misfit-lab: numerical experiments on dislocation energies at misfit
// interfaces. Subcommands wrap the library ops; `suite` runs a manifest of
// experiments and writes JSON records plus an aggregate CSV.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "misfit/suite.hpp"

namespace {

std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    return out;
}

void print_metric_rows(const std::map<std::string, double>& metrics,
                       const std::vector<std::string>& columns, std::ostream& os) {
    os << columns[0];
    for (std::size_t c = 1; c < columns.size(); ++c) os << "," << columns[c];
    os << "\n";
    for (int i = 0;; ++i) {
        std::vector<double> row;
        bool ok = true;
        for (const auto& col : columns) {
            auto it = metrics.find(col + "_" + std::to_string(i));
            if (it == metrics.end()) {
                ok = false;
                break;
            }
            row.push_back(it->second);
        }
        if (!ok) break;
        os << misfit::format_real(row[0]);
        for (std::size_t c = 1; c < row.size(); ++c) os << "," << misfit::format_real(row[c]);
        os << "\n";
    }
}

int run(const std::string& command, const nlohmann::json& params, std::uint64_t seed,
        const std::string& csv_columns, const std::string& out_path) {
    misfit::CommandResult r = misfit::run_command(command, params, seed);
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) {
            std::cerr << "cannot write " << out_path << "\n";
            return 1;
        }
        os = &file;
    }
    if (csv_columns.empty()) {
        *os << r.output.dump(2) << "\n";
    } else {
        std::vector<std::string> cols;
        std::stringstream ss(csv_columns);
        std::string tok;
        while (std::getline(ss, tok, ',')) cols.push_back(tok);
        print_metric_rows(r.metrics, cols, *os);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"misfit-lab: dislocation energy experiments"};
    app.require_subcommand(1);

    std::string config_path, method = "exact", out_path;
    double tol = 1e-10;
    auto* energy = app.add_subcommand("energy", "Energy of a configuration (JSON file)");
    energy->add_option("--config", config_path, "configuration JSON file")->required();
    energy->add_option("--method", method, "exact|quad");
    energy->add_option("--tol", tol, "quadrature tolerance");

    double lambda = 1.0, Lambda = 1.0, delta = 0.1, l = 1.0;
    int restarts = 16, n_window = 2, bins = 8, n = 2, trials = 100, workers = 0, seeds = 1;
    std::uint64_t seed = 0;
    double rho = 0.1;
    std::string l_list = "5,10,20,40", from_path, w_path, points_path, lambdas = "10,100,1000";
    std::string which = "both", manifest, out_dir = ".", kind, records_csv;

    auto add_params = [&](CLI::App* cmd) {
        cmd->add_option("--lambda", lambda, "misfit strain");
        cmd->add_option("--Lambda", Lambda, "core strain");
        cmd->add_option("--delta", delta, "core width");
    };

    auto* mincl = app.add_subcommand("minimize-cl", "Estimate c_l at one interface length");
    add_params(mincl);
    mincl->add_option("--l", l, "interface length")->required();
    mincl->add_option("--restarts", restarts, "multistart restarts");
    mincl->add_option("--seed", seed, "RNG seed");
    mincl->add_option("--n-window", n_window, "N scan half-width");

    auto* sweep = app.add_subcommand("sweep-cl", "c_l over a list of lengths (CSV)");
    add_params(sweep);
    sweep->add_option("--l-list", l_list, "comma-separated lengths");
    sweep->add_option("--restarts", restarts, "multistart restarts");
    sweep->add_option("--seed", seed, "RNG seed");
    sweep->add_option("--out", out_path, "CSV output path (default stdout)");

    auto* density = app.add_subcommand("density", "Histogram of a minimizer (CSV)");
    density->add_option("--from", from_path, "ClEstimate JSON file")->required();
    density->add_option("--bins", bins, "bin count");
    add_params(density);
    density->add_option("--out", out_path, "CSV output path (default stdout)");

    auto* recovery = app.add_subcommand("recovery", "Recovery construction for a target profile");
    recovery->add_option("--w", w_path, "piecewise-affine profile JSON")->required();
    recovery->add_option("--l", l, "interface length")->required();
    add_params(recovery);
    recovery->add_option("--restarts", restarts, "multistart restarts");
    recovery->add_option("--seed", seed, "RNG seed");

    auto* cmin = app.add_subcommand("circle-minimize", "Minimize the circle pair energy");
    cmin->add_option("--n", n, "point count")->required();
    cmin->add_option("--rho", rho, "separation cutoff")->required();
    cmin->add_option("--restarts", seeds, "independent starts");
    cmin->add_option("--seed", seed, "RNG seed");

    auto* cenergy = app.add_subcommand("circle-energy", "Circle energies of a point set");
    cenergy->add_option("--points", points_path, "points JSON file")->required();
    cenergy->add_option("--rho", rho, "separation cutoff")->required();
    cenergy->add_option("--which", which, "tilde|erho|both");
    cenergy->add_option("--lambda", lambda, "jump scale");

    auto* cgrad = app.add_subcommand("circle-gradcheck", "Analytic vs FD gradient (CSV)");
    cgrad->add_option("--n", n, "point count")->required();
    cgrad->add_option("--trials", trials, "random trials");
    cgrad->add_option("--seed", seed, "RNG seed");
    cgrad->add_option("--out", out_path, "CSV output path (default stdout)");

    auto* climit = app.add_subcommand("circle-lambda-limit", "Core-regularized convergence (CSV)");
    climit->add_option("--points", points_path, "points JSON file")->required();
    climit->add_option("--lambdas", lambdas, "comma-separated Lambda values");
    climit->add_option("--rho", rho, "separation cutoff")->required();
    climit->add_option("--lambda", lambda, "jump scale");
    climit->add_option("--out", out_path, "CSV output path (default stdout)");

    auto* suite = app.add_subcommand("suite", "Run a manifest of experiments");
    suite->add_option("--manifest", manifest, "JSON manifest")->required();
    suite->add_option("--workers", workers, "parallel workers (env MISFITLAB_WORKERS overrides)");
    suite->add_option("--out-dir", out_dir, "output directory");

    auto* plot = app.add_subcommand("plot-data", "Project result records to plot CSVs");
    plot->add_option("--kind", kind, "cl_vs_l|density_histogram|gap_convergence|lambda_limit")
        ->required();
    plot->add_option("--records", records_csv, "comma-separated record JSON files")->required();
    plot->add_option("--out", out_path, "CSV output path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (energy->parsed())
            return run("energy", {{"config_path", config_path}, {"method", method}, {"tol", tol}},
                       seed, "", "");
        if (mincl->parsed())
            return run("minimize-cl",
                       {{"lambda", lambda}, {"Lambda", Lambda}, {"delta", delta}, {"l", l},
                        {"restarts", restarts}, {"n_window", n_window}},
                       seed, "", "");
        if (sweep->parsed())
            return run("sweep-cl",
                       {{"lambda", lambda}, {"Lambda", Lambda}, {"delta", delta},
                        {"l_list", parse_list(l_list)}, {"restarts", restarts}},
                       seed, "l,N_star,c_l,runtime", out_path);
        if (density->parsed())
            return run("density",
                       {{"from", from_path}, {"bins", bins}, {"lambda", lambda},
                        {"Lambda", Lambda}, {"delta", delta}},
                       seed, "bin_center,density,n_star_lambda,n_star_Lambda", out_path);
        if (recovery->parsed())
            return run("recovery",
                       {{"w_path", w_path}, {"l", l}, {"lambda", lambda}, {"Lambda", Lambda},
                        {"delta", delta}, {"restarts", restarts}},
                       seed, "", "");
        if (cmin->parsed())
            return run("circle-minimize",
                       {{"n", n}, {"rho", rho}, {"restarts", seeds}}, seed, "", "");
        if (cenergy->parsed())
            return run("circle-energy",
                       {{"points_path", points_path}, {"rho", rho}, {"which", which},
                        {"lambda", lambda}},
                       seed, "", "");
        if (cgrad->parsed())
            return run("circle-gradcheck", {{"n", n}, {"trials", trials}}, seed,
                       "trial,rel_error", out_path);
        if (climit->parsed())
            return run("circle-lambda-limit",
                       {{"points_path", points_path}, {"lambdas", parse_list(lambdas)},
                        {"rho", rho}, {"lambda", lambda}},
                       seed, "Lambda,delta,gap", out_path);
        if (suite->parsed()) {
            auto records = misfit::run_suite(manifest, out_dir, workers);
            bool ok = true;
            for (const auto& r : records) {
                std::cout << (r.passed ? "[ ok ] " : "[fail] ") << r.name;
                if (!r.error.empty()) std::cout << " (" << r.error << ")";
                std::cout << "\n";
                ok = ok && r.passed;
            }
            return ok ? 0 : 1;
        }
        if (plot->parsed()) {
            std::vector<misfit::ResultRecord> records;
            std::stringstream ss(records_csv);
            std::string path;
            while (std::getline(ss, path, ',')) {
                std::ifstream in(path);
                if (!in) throw misfit::Error("cannot open " + path);
                nlohmann::json j;
                in >> j;
                const nlohmann::json& rec = j.contains("record") ? j.at("record") : j;
                misfit::ResultRecord r;
                r.name = rec.value("name", path);
                for (auto it = rec.at("metrics").begin(); it != rec.at("metrics").end(); ++it)
                    r.metrics[it.key()] = it.value().get<double>();
                records.push_back(std::move(r));
            }
            misfit::emit_plot_data(records, misfit::plot_kind_from_string(kind), out_path);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
