#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "misfit/suite.hpp"

using namespace misfit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("misfit_test_" + std::to_string(std::rand()) + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

} // namespace

TEST_CASE("run_command: energy of an empty configuration") {
    nlohmann::json params{{"config", {{"lambda", 0.1},
                                      {"Lambda", 0.1},
                                      {"delta", 0.05},
                                      {"l", 1.0},
                                      {"centers", nlohmann::json::array()}}},
                          {"method", "exact"}};
    const auto r = run_command("energy", params, 0);
    CHECK(r.metrics.at("value") == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(r.output.at("method") == "closed_form");
}

TEST_CASE("run_command rejects unknown commands and bad parameters") {
    CHECK_THROWS_AS(run_command("no-such-thing", {}, 0), BadManifest);
    CHECK_THROWS_AS(run_command("minimize-cl", nlohmann::json{{"lambda", 1.0}}, 0), BadManifest);
}

TEST_CASE("identical spec and seed reproduce metrics bit for bit") {
    nlohmann::json params{{"n", 3}, {"rho", 0.05}};
    const auto a = run_command("circle-minimize", params, 9);
    const auto b = run_command("circle-minimize", params, 9);
    CHECK(a.metrics.at("energy_tilde") == b.metrics.at("energy_tilde"));
    CHECK(a.metrics.at("max_gap_error") == b.metrics.at("max_gap_error"));
}

TEST_CASE("suite: empty manifest") {
    TempDir tmp;
    write_file(tmp.path / "m.json", "[]");
    const auto records = run_suite((tmp.path / "m.json").string(), tmp.path.string());
    CHECK(records.empty());
    CHECK(fs::exists(tmp.path / "suite_results.csv"));
}

TEST_CASE("suite: isolation and asserts") {
    TempDir tmp;
    nlohmann::json manifest = nlohmann::json::array(
        {{{"name", "ok_energy"},
          {"command", "energy"},
          {"parameters",
           {{"config",
             {{"lambda", 1.0}, {"Lambda", 1.0}, {"delta", 0.1}, {"l", 2.0},
              {"centers", nlohmann::json::array()}}}}},
          {"assert", {{"value", {{"ge", 3.9}, {"le", 4.1}}}}}},
         {{"name", "broken"}, {"command", "definitely-not-a-command"}},
         {{"name", "failing_assert"},
          {"command", "energy"},
          {"parameters",
           {{"config",
             {{"lambda", 1.0}, {"Lambda", 1.0}, {"delta", 0.1}, {"l", 1.0},
              {"centers", nlohmann::json::array()}}}}},
          {"assert", {{"value", {{"le", 0.5}}}}}}});
    write_file(tmp.path / "m.json", manifest.dump());

    const auto records = run_suite((tmp.path / "m.json").string(), tmp.path.string(), 2);
    REQUIRE(records.size() == 3);
    CHECK(records[0].passed);
    CHECK(!records[1].passed);
    CHECK(!records[1].error.empty());
    CHECK(!records[2].passed);
    CHECK(records[2].error.empty());
    CHECK(fs::exists(tmp.path / "ok_energy.json"));
    CHECK(fs::exists(tmp.path / "failing_assert.json"));
    CHECK(!records[0].spec_hash.empty());

    // records round-trip through JSON
    std::ifstream in(tmp.path / "ok_energy.json");
    nlohmann::json j;
    in >> j;
    CHECK(j.at("record").at("metrics").at("value").get<double>() ==
          doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("suite: many-seed circle run aggregates the worst gap") {
    TempDir tmp;
    nlohmann::json manifest = nlohmann::json::array(
        {{{"name", "gap_sweep"},
          {"command", "circle-minimize"},
          {"parameters", {{"n", 3}, {"rho", 0.1}, {"seeds", 50}}},
          {"assert", {{"max_gap_error", {{"le", 1e-6}}}}}}});
    write_file(tmp.path / "m.json", manifest.dump());
    const auto records = run_suite((tmp.path / "m.json").string(), tmp.path.string(), 1);
    REQUIRE(records.size() == 1);
    CHECK(records[0].passed);
    CHECK(records[0].metrics.at("max_gap_error") <= 1e-6);
    CHECK(records[0].metrics.count("max_gap_error_seed_49") == 1);

    const auto csv = emit_plot_data({records[0]}, PlotKind::GapConvergence,
                                    (tmp.path / "gaps.csv").string());
    std::ifstream in(csv);
    std::string line;
    int rows = 0;
    std::getline(in, line);
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 50);
}

TEST_CASE("suite: small sweep feeds the l-curve projection") {
    TempDir tmp;
    nlohmann::json manifest = nlohmann::json::array(
        {{{"name", "mini_sweep"},
          {"command", "sweep-cl"},
          {"parameters",
           {{"lambda", 1.0}, {"Lambda", 1.0}, {"delta", 0.1},
            {"l_list", {2.0, 4.0}}, {"restarts", 2}}}}});
    write_file(tmp.path / "m.json", manifest.dump());
    const auto records = run_suite((tmp.path / "m.json").string(), tmp.path.string(), 1);
    REQUIRE(records.size() == 1);
    CHECK(records[0].passed);

    const auto csv =
        emit_plot_data(records, PlotKind::ClVsL, (tmp.path / "cl.csv").string());
    std::ifstream in(csv);
    std::string header, r0, r1;
    std::getline(in, header);
    CHECK(std::getline(in, r0));
    CHECK(std::getline(in, r1));
    CHECK(r0.substr(0, 2) == "2,");
    CHECK(r1.substr(0, 2) == "4,");
}

TEST_CASE("plot data: histogram and core-limit projections") {
    TempDir tmp;
    ResultRecord hist;
    hist.metrics = {{"bin_center_0", 0.25}, {"density_0", 4.9},
                    {"n_star_lambda_0", 5.0}, {"n_star_Lambda_0", 5.0},
                    {"n_star_lambda", 5.0},  {"n_star_Lambda", 5.0}};
    std::string path = emit_plot_data({hist}, PlotKind::DensityHistogram,
                                      (tmp.path / "h.csv").string());
    std::ifstream in(path);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "bin_center,density,n_star_lambda,n_star_Lambda");
    CHECK(row == "0.25,4.9000000000000004,5,5");

    ResultRecord lim;
    lim.metrics = {{"Lambda_0", 10.0}, {"delta_0", 0.045}, {"gap_0", 0.12}};
    path = emit_plot_data({lim}, PlotKind::LambdaLimit, (tmp.path / "L.csv").string());
    std::ifstream lin(path);
    std::getline(lin, header);
    CHECK(header == "Lambda,delta,gap");
}

TEST_CASE("suite: bad manifests") {
    TempDir tmp;
    write_file(tmp.path / "m.json", "{\"not\": \"an array\"}");
    CHECK_THROWS_AS(run_suite((tmp.path / "m.json").string(), tmp.path.string()), BadManifest);
    write_file(tmp.path / "m2.json", "[{\"command\": \"energy\"}]");
    CHECK_THROWS_AS(run_suite((tmp.path / "m2.json").string(), tmp.path.string()), BadManifest);
}

TEST_CASE("plot data projections") {
    TempDir tmp;
    ResultRecord sweep;
    sweep.name = "sweep";
    sweep.metrics = {{"l_0", 5.0}, {"c_l_0", 0.4}, {"l_1", 10.0}, {"c_l_1", 0.5}};
    const auto path = emit_plot_data({sweep}, PlotKind::ClVsL, (tmp.path / "cl.csv").string());
    std::ifstream in(path);
    std::string header, row0, row1;
    std::getline(in, header);
    std::getline(in, row0);
    std::getline(in, row1);
    CHECK(header == "l,c_l");
    CHECK(row0 == "5,0.40000000000000002");
    CHECK(row1 == "10,0.5");

    ResultRecord gaps;
    gaps.metrics = {{"max_gap_error_seed_0", 1e-9}, {"max_gap_error_seed_1", 2e-9}};
    const auto gpath =
        emit_plot_data({gaps}, PlotKind::GapConvergence, (tmp.path / "g.csv").string());
    std::ifstream gin(gpath);
    std::getline(gin, header);
    CHECK(header == "seed,max_gap_error");

    CHECK_THROWS_AS(plot_kind_from_string("nope"), UnknownKind);
}

TEST_CASE("real formatting uses up to 17 significant digits") {
    CHECK(format_real(0.5) == "0.5");
    CHECK(format_real(1.0 / 3.0) == "0.33333333333333331");
}
