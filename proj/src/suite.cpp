#include "misfit/suite.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "misfit/circle_model.hpp"
#include "misfit/core.hpp"
#include "misfit/halfline_energy.hpp"
#include "misfit/interval_opt.hpp"

namespace misfit {
namespace {

namespace fs = std::filesystem;

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

double require_num(const nlohmann::json& p, const std::string& key) {
    if (!p.contains(key)) throw BadManifest("missing parameter '" + key + "'");
    return p.at(key).get<double>();
}

ModelParams params_from(const nlohmann::json& p) {
    ModelParams mp;
    mp.lambda = require_num(p, "lambda");
    mp.Lambda = require_num(p, "Lambda");
    mp.delta = require_num(p, "delta");
    mp.l = require_num(p, "l");
    return mp;
}

ClOptions cl_options_from(const nlohmann::json& p, std::uint64_t seed) {
    ClOptions o;
    o.restarts = static_cast<int>(p.value("restarts", 16.0));
    o.n_window = static_cast<int>(p.value("n_window", 2.0));
    if (p.contains("grad_tol")) o.solver.grad_tol = p.at("grad_tol").get<double>();
    if (p.contains("max_iterations"))
        o.solver.max_iterations = static_cast<int>(p.at("max_iterations").get<double>());
    o.seed = seed;
    return o;
}

nlohmann::json estimate_to_json(const ClEstimate& e) {
    return nlohmann::json{{"l", e.l},
                          {"N_star", e.N_star},
                          {"centers_star", e.centers_star},
                          {"c_l", e.c_l},
                          {"restarts", e.restarts},
                          {"solver_tol", e.solver_tol}};
}

CommandResult cmd_energy(const nlohmann::json& p) {
    nlohmann::json cfg_json =
        p.contains("config") ? p.at("config") : load_json_file(p.at("config_path").get<std::string>());
    DislocationConfig cfg = config_from_json(cfg_json);
    PiecewiseAffine u = displacement_from_config(cfg);
    const std::string method = p.value("method", std::string("exact"));
    EnergyReport rep;
    if (method == "exact")
        rep = energy_exact(u, cfg.params.l);
    else if (method == "quad")
        rep = energy_quadrature(u, cfg.params.l, p.value("tol", 1e-10));
    else
        throw BadManifest("energy: method must be 'exact' or 'quad'");
    CommandResult r;
    r.metrics["value"] = rep.value;
    r.metrics["abs_error_estimate"] = rep.abs_error_estimate;
    r.output = {{"value", rep.value},
                {"method", rep.method == EnergyMethod::ClosedForm ? "closed_form"
                                                                  : "adaptive_quadrature"},
                {"abs_error_estimate", rep.abs_error_estimate}};
    return r;
}

CommandResult cmd_minimize_cl(const nlohmann::json& p, std::uint64_t seed) {
    ModelParams mp = params_from(p);
    ClEstimate est = estimate_cl(mp, cl_options_from(p, seed));
    CommandResult r;
    r.metrics["c_l"] = est.c_l;
    r.metrics["N_star"] = static_cast<double>(est.N_star);
    r.metrics["solver_tol"] = est.solver_tol;
    r.output = estimate_to_json(est);
    return r;
}

CommandResult cmd_sweep_cl(const nlohmann::json& p, std::uint64_t seed) {
    ModelParams base = params_from(
        nlohmann::json{{"lambda", require_num(p, "lambda")},
                       {"Lambda", require_num(p, "Lambda")},
                       {"delta", require_num(p, "delta")},
                       {"l", 1.0}});
    if (!p.contains("l_list")) throw BadManifest("sweep-cl: missing l_list");
    CommandResult r;
    nlohmann::json rows = nlohmann::json::array();
    int idx = 0;
    for (const auto& lv : p.at("l_list")) {
        ModelParams mp = base;
        mp.l = lv.get<double>();
        const auto t0 = std::chrono::steady_clock::now();
        ClEstimate est = estimate_cl(mp, cl_options_from(p, seed));
        const double dt =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const std::string sfx = "_" + std::to_string(idx);
        r.metrics["l" + sfx] = mp.l;
        r.metrics["c_l" + sfx] = est.c_l;
        r.metrics["N_star" + sfx] = static_cast<double>(est.N_star);
        r.metrics["runtime" + sfx] = dt;
        rows.push_back(estimate_to_json(est));
        ++idx;
    }
    r.output = {{"sweep", rows}};
    return r;
}

CommandResult cmd_density(const nlohmann::json& p) {
    nlohmann::json src = p.contains("estimate")
                             ? p.at("estimate")
                             : load_json_file(p.at("from").get<std::string>());
    ModelParams mp;
    mp.lambda = p.value("lambda", 1.0);
    mp.Lambda = p.value("Lambda", 1.0);
    mp.delta = p.value("delta", 0.1);
    mp.l = src.at("l").get<double>();
    std::vector<double> centers = src.at("centers_star").get<std::vector<double>>();
    DislocationConfig cfg = validate_config(std::move(centers), mp);
    const int bins = static_cast<int>(p.value("bins", 8.0));
    DensityHistogram h = dislocation_density(cfg, bins);

    const double ns_lambda = predicted_density(mp);
    const double ns_Lambda = mp.Lambda / (mp.delta * (mp.Lambda + mp.lambda));
    CommandResult r;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const double center = 0.5 * (h.bin_edges[i] + h.bin_edges[i + 1]);
        const std::string sfx = "_" + std::to_string(i);
        r.metrics["bin_center" + sfx] = center;
        r.metrics["density" + sfx] = h.normalized_density[i];
        r.metrics["n_star_lambda" + sfx] = ns_lambda;
        r.metrics["n_star_Lambda" + sfx] = ns_Lambda;
        rows.push_back({{"bin_center", center},
                        {"count", h.counts[i]},
                        {"density", h.normalized_density[i]}});
    }
    r.metrics["n_star_lambda"] = ns_lambda;
    r.metrics["n_star_Lambda"] = ns_Lambda;
    r.output = {{"bins", rows}, {"n_star_lambda", ns_lambda}, {"n_star_Lambda", ns_Lambda}};
    return r;
}

CommandResult cmd_recovery(const nlohmann::json& p, std::uint64_t seed) {
    PiecewiseAffine w = piecewise_affine_from_json(
        p.contains("w") ? p.at("w") : load_json_file(p.at("w_path").get<std::string>()));
    ModelParams base;
    base.lambda = p.value("lambda", 1.0);
    base.Lambda = p.value("Lambda", 1.0);
    base.delta = p.value("delta", 0.1);
    base.l = require_num(p, "l");
    RecoveryBuild rb = build_recovery_sequence(w, base.l, base, cl_options_from(p, seed));
    CommandResult r;
    r.metrics["F_l"] = rb.F_l;
    r.metrics["markers"] = static_cast<double>(rb.markers.size());
    r.metrics["stretch"] = rb.stretch;
    r.output = {{"config", to_json(rb.config)},
                {"F_l", rb.F_l},
                {"markers", rb.markers},
                {"stretch", rb.stretch}};
    return r;
}

CircleConfig circle_config_from(const nlohmann::json& p) {
    nlohmann::json src = p.contains("points_path")
                             ? load_json_file(p.at("points_path").get<std::string>())
                             : p;
    std::vector<double> pts = src.at("points").get<std::vector<double>>();
    const double rho = p.contains("rho") ? p.at("rho").get<double>() : src.value("rho", 0.0);
    const double lambda =
        p.contains("lambda") ? p.at("lambda").get<double>() : src.value("lambda", 1.0);
    return validate_circle_config(std::move(pts), rho, lambda);
}

CommandResult cmd_circle_minimize(const nlohmann::json& p, std::uint64_t seed) {
    const int n = static_cast<int>(require_num(p, "n"));
    const double rho = require_num(p, "rho");
    const int seeds = static_cast<int>(p.value("seeds", 1.0));
    const int restarts = static_cast<int>(p.value("restarts", 1.0));

    CommandResult r;
    double worst_gap = 0.0;
    double best_energy = 0.0;
    nlohmann::json best_points;
    bool have = false;
    for (int s = 0; s < std::max(seeds, 1); ++s) {
        CircleMinimizeResult best;
        for (int k = 0; k < std::max(restarts, 1); ++k) {
            CircleMinimizeResult run = minimize_circle(
                n, rho, seed + static_cast<std::uint64_t>(s * 1000 + k));
            if (k == 0 || run.energy < best.energy) best = std::move(run);
        }
        worst_gap = std::max(worst_gap, best.max_gap_error);
        if (!have || best.energy < best_energy) {
            best_energy = best.energy;
            best_points = best.config.points;
            have = true;
        }
        if (seeds > 1)
            r.metrics["max_gap_error_seed_" + std::to_string(s)] = best.max_gap_error;
    }
    r.metrics["max_gap_error"] = worst_gap;
    r.metrics["energy_tilde"] = best_energy;
    r.output = {{"points", best_points},
                {"energy_tilde", best_energy},
                {"max_gap_error", worst_gap}};
    return r;
}

CommandResult cmd_circle_energy(const nlohmann::json& p) {
    CircleConfig cfg = circle_config_from(p);
    const std::string which = p.value("which", std::string("both"));
    CommandResult r;
    r.output = nlohmann::json::object();
    if (which == "tilde" || which == "both") {
        const double e = pair_energy(cfg);
        r.metrics["energy_tilde"] = e;
        r.output["energy_tilde"] = e;
    }
    if (which == "erho" || which == "both") {
        const double e = cutoff_energy(cfg);
        r.metrics["energy_erho"] = e;
        r.output["energy_erho"] = e;
    }
    if (r.metrics.empty()) throw BadManifest("circle-energy: which must be tilde|erho|both");
    return r;
}

CommandResult cmd_circle_gradcheck(const nlohmann::json& p, std::uint64_t seed) {
    const int n = static_cast<int>(require_num(p, "n"));
    const int trials = static_cast<int>(p.value("trials", 100.0));
    const double rho = p.value("rho", 0.25 / n);
    std::mt19937_64 rng(seed * 6364136223846793005ULL + 1442695040888963407ULL);

    CommandResult r;
    double worst = 0.0;
    const double step = 1e-6;
    for (int t = 0; t < trials; ++t) {
        CircleConfig cfg = random_circle_config(n, rho, rng);
        std::vector<double> g;
        try {
            g = pair_energy_gradient(cfg);
        } catch (const OnBoundary&) {
            --t;
            continue;
        }
        double num = 0.0, den = 0.0;
        for (int i = 0; i < n; ++i) {
            std::vector<double> plus = cfg.points, minus = cfg.points;
            plus[static_cast<std::size_t>(i)] += step;
            minus[static_cast<std::size_t>(i)] -= step;
            CircleConfig a{plus, cfg.rho, cfg.lambda};
            CircleConfig b{minus, cfg.rho, cfg.lambda};
            const double fd = (pair_energy(a) - pair_energy(b)) / (2.0 * step);
            num = std::max(num, std::abs(fd - g[static_cast<std::size_t>(i)]));
            den = std::max(den, std::abs(g[static_cast<std::size_t>(i)]));
        }
        const double rel = num / std::max(1.0, den);
        r.metrics["trial_" + std::to_string(t)] = t;
        r.metrics["rel_error_" + std::to_string(t)] = rel;
        worst = std::max(worst, rel);
    }
    r.metrics["max_rel_error"] = worst;
    r.output = {{"max_rel_error", worst}, {"trials", trials}};
    return r;
}

CommandResult cmd_circle_lambda_limit(const nlohmann::json& p) {
    CircleConfig cfg = circle_config_from(p);
    std::vector<double> lambdas = p.at("lambdas").get<std::vector<double>>();
    const double tol = p.value("quad_tol", 1e-7);
    std::vector<double> gaps = lambda_limit_convergence(cfg, lambdas, tol);
    CommandResult r;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        const double delta =
            cfg.lambda / (static_cast<double>(cfg.n()) * (cfg.lambda + lambdas[i]));
        const std::string sfx = "_" + std::to_string(i);
        r.metrics["Lambda" + sfx] = lambdas[i];
        r.metrics["delta" + sfx] = delta;
        r.metrics["gap" + sfx] = gaps[i];
        rows.push_back({{"Lambda", lambdas[i]}, {"delta", delta}, {"gap", gaps[i]}});
    }
    r.output = {{"gaps", rows}};
    return r;
}

bool check_asserts(const nlohmann::json& asserts, const std::map<std::string, double>& metrics) {
    for (auto it = asserts.begin(); it != asserts.end(); ++it) {
        auto found = metrics.find(it.key());
        if (found == metrics.end()) return false;
        const double v = found->second;
        const nlohmann::json& cond = it.value();
        if (cond.contains("le") && !(v <= cond.at("le").get<double>())) return false;
        if (cond.contains("ge") && !(v >= cond.at("ge").get<double>())) return false;
        if (cond.contains("lt") && !(v < cond.at("lt").get<double>())) return false;
        if (cond.contains("gt") && !(v > cond.at("gt").get<double>())) return false;
    }
    return true;
}

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

CommandResult run_command(const std::string& command, const nlohmann::json& parameters,
                          std::uint64_t seed) {
    if (command == "energy") return cmd_energy(parameters);
    if (command == "minimize-cl") return cmd_minimize_cl(parameters, seed);
    if (command == "sweep-cl") return cmd_sweep_cl(parameters, seed);
    if (command == "density") return cmd_density(parameters);
    if (command == "recovery") return cmd_recovery(parameters, seed);
    if (command == "circle-minimize") return cmd_circle_minimize(parameters, seed);
    if (command == "circle-energy") return cmd_circle_energy(parameters);
    if (command == "circle-gradcheck") return cmd_circle_gradcheck(parameters, seed);
    if (command == "circle-lambda-limit") return cmd_circle_lambda_limit(parameters);
    throw BadManifest("unknown command: " + command);
}

ExperimentSpec spec_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw BadManifest("spec must be a JSON object");
    ExperimentSpec s;
    s.name = j.value("name", std::string{});
    if (s.name.empty()) throw BadManifest("spec needs a name");
    s.command = j.value("command", std::string{});
    if (s.command.empty()) throw BadManifest("spec '" + s.name + "' needs a command");
    s.parameters = j.value("parameters", nlohmann::json::object());
    s.seed = j.value("seed", 0ULL);
    s.output_path = j.value("output_path", std::string{});
    s.asserts = j.value("assert", nlohmann::json::object());
    return s;
}

nlohmann::json record_to_json(const ResultRecord& r) {
    nlohmann::json m = nlohmann::json::object();
    for (const auto& [k, v] : r.metrics) m[k] = v;
    nlohmann::json j{{"name", r.name},
                     {"spec_hash", r.spec_hash},
                     {"timestamp", r.timestamp},
                     {"metrics", m},
                     {"runtime_seconds", r.runtime_seconds},
                     {"passed", r.passed}};
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

std::vector<ResultRecord> run_suite(const std::string& manifest_path, const std::string& out_dir,
                                    int workers) {
    nlohmann::json manifest = load_json_file(manifest_path);
    if (!manifest.is_array()) throw BadManifest("manifest must be a JSON array");

    std::vector<ExperimentSpec> specs;
    for (const auto& j : manifest) specs.push_back(spec_from_json(j));

    if (const char* env = std::getenv("MISFITLAB_WORKERS")) workers = std::atoi(env);
    if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min<int>(workers, static_cast<int>(specs.size()) + 1));

    fs::create_directories(out_dir);
    std::vector<ResultRecord> records(specs.size());

    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= specs.size()) return;
            const ExperimentSpec& s = specs[i];
            ResultRecord r;
            r.name = s.name;
            nlohmann::json canon{{"name", s.name},
                                 {"command", s.command},
                                 {"parameters", s.parameters},
                                 {"seed", s.seed}};
            r.spec_hash = fnv1a_hex(canon.dump());
            r.timestamp = iso_timestamp();
            const auto t0 = std::chrono::steady_clock::now();
            try {
                CommandResult cr = run_command(s.command, s.parameters, s.seed);
                r.metrics = std::move(cr.metrics);
                r.passed = check_asserts(s.asserts, r.metrics);
                r.output_path = s.output_path.empty()
                                    ? (fs::path(out_dir) / (s.name + ".json")).string()
                                    : s.output_path;
                std::ofstream out(r.output_path);
                out << nlohmann::json{{"record", record_to_json(r)}, {"output", cr.output}}
                           .dump(2)
                    << "\n";
            } catch (const std::exception& e) {
                r.error = e.what();
                r.passed = false;
            }
            r.runtime_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            records[i] = std::move(r);
        }
    };

    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();

    std::ofstream csv(fs::path(out_dir) / "suite_results.csv");
    csv << "name,spec_hash,passed,runtime_seconds,error\n";
    for (const auto& r : records)
        csv << r.name << "," << r.spec_hash << "," << (r.passed ? 1 : 0) << ","
            << format_real(r.runtime_seconds) << "," << r.error << "\n";
    return records;
}

PlotKind plot_kind_from_string(const std::string& s) {
    if (s == "cl_vs_l") return PlotKind::ClVsL;
    if (s == "density_histogram") return PlotKind::DensityHistogram;
    if (s == "gap_convergence") return PlotKind::GapConvergence;
    if (s == "lambda_limit") return PlotKind::LambdaLimit;
    throw UnknownKind("unknown plot kind: " + s);
}

std::string emit_plot_data(const std::vector<ResultRecord>& records, PlotKind kind,
                           const std::string& out_path) {
    std::ofstream out(out_path);
    if (!out) throw Error("cannot write " + out_path);

    auto indexed = [&](const ResultRecord& r, const std::string& key, int i,
                       double& v) -> bool {
        auto it = r.metrics.find(key + "_" + std::to_string(i));
        if (it == r.metrics.end()) return false;
        v = it->second;
        return true;
    };

    switch (kind) {
    case PlotKind::ClVsL: {
        out << "l,c_l\n";
        for (const auto& r : records)
            for (int i = 0;; ++i) {
                double l, c;
                if (!indexed(r, "l", i, l) || !indexed(r, "c_l", i, c)) break;
                out << format_real(l) << "," << format_real(c) << "\n";
            }
        break;
    }
    case PlotKind::DensityHistogram: {
        out << "bin_center,density,n_star_lambda,n_star_Lambda\n";
        for (const auto& r : records) {
            const double nsl = r.metrics.count("n_star_lambda")
                                   ? r.metrics.at("n_star_lambda")
                                   : 0.0;
            const double nsL = r.metrics.count("n_star_Lambda")
                                   ? r.metrics.at("n_star_Lambda")
                                   : 0.0;
            for (int i = 0;; ++i) {
                double b, d;
                if (!indexed(r, "bin_center", i, b) || !indexed(r, "density", i, d)) break;
                out << format_real(b) << "," << format_real(d) << "," << format_real(nsl)
                    << "," << format_real(nsL) << "\n";
            }
        }
        break;
    }
    case PlotKind::GapConvergence: {
        out << "seed,max_gap_error\n";
        for (const auto& r : records)
            for (int i = 0;; ++i) {
                auto it = r.metrics.find("max_gap_error_seed_" + std::to_string(i));
                if (it == r.metrics.end()) break;
                out << i << "," << format_real(it->second) << "\n";
            }
        break;
    }
    case PlotKind::LambdaLimit: {
        out << "Lambda,delta,gap\n";
        for (const auto& r : records)
            for (int i = 0;; ++i) {
                double L, d, g;
                if (!indexed(r, "Lambda", i, L) || !indexed(r, "delta", i, d) ||
                    !indexed(r, "gap", i, g))
                    break;
                out << format_real(L) << "," << format_real(d) << "," << format_real(g) << "\n";
            }
        break;
    }
    }
    return out_path;
}

} // namespace misfit
