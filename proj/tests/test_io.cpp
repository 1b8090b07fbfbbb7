#include "fluor/io.hpp"

#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace fluor;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    fs::path dir = fs::temp_directory_path() / "fluor_io_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

} // namespace

TEST_CASE("numbers are written with 17 significant digits and round-trip") {
    for (double v : {1.0 / 3.0, -2.718281828459045e-7, 1e17, 0.0, -0.1}) {
        CHECK(std::strtod(format_sig(v).c_str(), nullptr) == v);
    }
    CHECK(format_sig(0.1) == "0.10000000000000001");
}

TEST_CASE("trajectory CSV layout and terminal-row convention") {
    const fs::path dir = temp_dir();
    const MeasurementParams p{1.0, 0.0, 0.5, 0.01};
    const Trajectory tr = simulate_trajectory({1.0, 1.0, 0.0}, p, Scheme::Ito, 5, 3);
    const fs::path file = dir / "traj.csv";
    write_trajectory_csv(file, tr);

    const auto lines = read_lines(file);
    REQUIRE(lines.size() == 7); // header + 6 grid points
    CHECK(lines[0] == "t,u,x,y,I,Q,xi_I,xi_Q");
    const auto row1 = split(lines[1]);
    REQUIRE(row1.size() == 8);
    CHECK(std::strtod(row1[1].c_str(), nullptr) == tr.states[0].u);
    CHECK(std::strtod(row1[4].c_str(), nullptr) == tr.readout_i[0]);
    const auto last = split(lines.back());
    CHECK(std::strtod(last[0].c_str(), nullptr) == doctest::Approx(0.05));
    for (int col : {4, 5, 6, 7}) CHECK(last[col] == "nan");
}

TEST_CASE("ensemble directories carry member files and a manifest") {
    const fs::path dir = temp_dir() / "ens";
    const MeasurementParams p{1.0, 0.1, 0.3, 0.01};
    const Ensemble e = simulate_ensemble({1.2, 0.4, 0.0}, p, Scheme::Stratonovich, 10, 6, 42);
    write_ensemble(dir, e, 4);

    CHECK(fs::exists(dir / "traj_00000.csv"));
    CHECK(fs::exists(dir / "traj_00003.csv"));
    CHECK(!fs::exists(dir / "traj_00004.csv")); // capped by max_members

    std::ifstream in(dir / "manifest.json");
    REQUIRE(in.good());
    const nlohmann::json m = nlohmann::json::parse(in);
    CHECK(m.at("schema-version").get<int>() == 1);
    CHECK(m.at("scheme").get<std::string>() == "stratonovich");
    CHECK(m.at("n_trajectories").get<int>() == 6);
    CHECK(m.at("n_saved").get<int>() == 4);
    CHECK(m.at("params").at("eta").get<double>() == 0.3);
    CHECK(m.at("initial").at("u").get<double>() == 1.2);
    CHECK(m.at("seeds").size() == 6); // one per member, not only the saved ones
    CHECK(m.at("seeds")[2].get<std::uint64_t>() == 44);
}

TEST_CASE("stats and path CSVs have matched headers and widths") {
    const fs::path dir = temp_dir();
    const MeasurementParams p{1.0, 0.0, 0.4, 0.01};
    const Ensemble e = simulate_ensemble({1.0, 0.5, 0.2}, p, Scheme::Ito, 8, 5, 7);
    write_stats_csv(dir / "stats.csv", ensemble_stats(e));
    auto lines = read_lines(dir / "stats.csv");
    CHECK(lines[0] == "t,mean_u,mean_x,mean_y,var_u,var_x,var_y");
    REQUIRE(lines.size() == 10);
    CHECK(split(lines[3]).size() == 7);

    PhasePoint start;
    start.state = {1.0, 0.8, 0.0};
    start.p_u = 0.2;
    const MlpPath mlp = integrate_mlp(start, p, 0.05, 0.01);
    write_mlp_csv(dir / "mlp.csv", mlp);
    lines = read_lines(dir / "mlp.csv");
    CHECK(lines[0] == "t,u,x,y,p_u,p_x,p_y,I,Q,E");
    CHECK(split(lines[1]).size() == 10);

    const IdealPath ideal = solve_ideal_bvp(0.5, 1.0, 0.3, 1.0, 50);
    write_ideal_path_csv(dir / "ideal.csv", ideal);
    lines = read_lines(dir / "ideal.csv");
    CHECK(lines[0] == "t,theta,p_theta,I,E");
    REQUIRE(lines.size() == 52);
}

TEST_CASE("phase portrait blocks repeat the energy per row") {
    const fs::path dir = temp_dir();
    const std::vector<double> energies{0.1, 0.2};
    const std::vector<std::vector<IdealPhasePoint>> contours{
        ideal_energy_contour(0.1, 0.3, 2.5, 20, true),
        ideal_energy_contour(0.2, 0.3, 2.5, 20, true)};
    write_phase_portrait_csv(dir / "portrait.csv", energies, contours);
    const auto lines = read_lines(dir / "portrait.csv");
    CHECK(lines[0] == "theta,p_theta,energy");
    REQUIRE(lines.size() == 1 + contours[0].size() + contours[1].size());
    CHECK(split(lines[1])[2] == format_sig(0.1));
    CHECK(split(lines.back())[2] == format_sig(0.2));
}

TEST_CASE("covariance grids write a t2 header row and an optional sidecar") {
    const fs::path dir = temp_dir();
    const MeasurementParams p{1.0, 0.0, 0.2, 0.01};
    const std::vector<double> times{0.25, 0.5, 0.75};
    const CovarianceGrid grid = analytic_cov_grid(Var::X, Var::X, times, {1.2, 0.6, 0.3}, p);
    write_cov_grid_csv(dir / "grid.csv", grid, "{\"pair\": \"x-x\"}");

    const auto lines = read_lines(dir / "grid.csv");
    REQUIRE(lines.size() == 4);
    const auto head = split(lines[0]);
    CHECK(head[0] == "t1\\t2");
    CHECK(head[2] == format_sig(0.5));
    const auto row = split(lines[2]);
    CHECK(row[0] == format_sig(0.5));
    CHECK(std::strtod(row[3].c_str(), nullptr)
          == doctest::Approx(cov_xx(0.5, 0.75, {1.2, 0.6, 0.3}, p)));

    std::ifstream sidecar(dir / "grid.json");
    REQUIRE(sidecar.good());
    const nlohmann::json meta = nlohmann::json::parse(sidecar);
    CHECK(meta.at("pair").get<std::string>() == "x-x");
}

TEST_CASE("density-matrix trajectories flatten row-major with trailing outcomes") {
    const fs::path dir = temp_dir();
    const OperatorSet ops = fluorescence_operator_set(1.0, 0.0, 0.4);
    const SmeTrajectory tr = simulate_sme(to_density({1.0, 1.0, 0.0}), ops, 0.01, 4, 5);
    write_sme_csv(dir / "sme.csv", tr);
    const auto lines = read_lines(dir / "sme.csv");
    REQUIRE(lines.size() == 6);
    CHECK(lines[0] == "t,re_00,im_00,re_01,im_01,re_10,im_10,re_11,im_11,r_0,r_1");
    const auto row = split(lines[1]);
    REQUIRE(row.size() == 11);
    CHECK(std::strtod(row[1].c_str(), nullptr) == doctest::Approx(0.5)); // rho_ee of s0
    CHECK(std::strtod(row[9].c_str(), nullptr) == tr.outcomes[0][0]);
    const auto last = split(lines.back());
    CHECK(last[9] == "nan");
    CHECK(last[10] == "nan");
}
