#include "fluor/io.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace fluor {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    return out;
}

} // namespace

std::string format_sig(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& tr) {
    std::ofstream out = open_out(path);
    out << "t,u,x,y,I,Q,xi_I,xi_Q\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < tr.states.size(); ++k) {
        const bool has_step = k < tr.n_steps();
        const BlochState& s = tr.states[k];
        out << format_sig(tr.times[k]) << ',' << format_sig(s.u) << ','
            << format_sig(s.x) << ',' << format_sig(s.y) << ','
            << format_sig(has_step ? tr.readout_i[k] : nan) << ','
            << format_sig(has_step ? tr.readout_q[k] : nan) << ','
            << format_sig(has_step ? tr.noise_i[k] : nan) << ','
            << format_sig(has_step ? tr.noise_q[k] : nan) << '\n';
    }
}

void write_ensemble(const std::filesystem::path& dir, const Ensemble& e,
                    std::size_t max_members) {
    std::filesystem::create_directories(dir);
    const std::size_t n_save = std::min(max_members, e.members.size());
    nlohmann::json seeds = nlohmann::json::array();
    for (const auto& tr : e.members) seeds.push_back(tr.seed);
    for (std::size_t k = 0; k < n_save; ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "traj_%05zu.csv", k);
        write_trajectory_csv(dir / name, e.members[k]);
    }
    nlohmann::json manifest;
    manifest["schema-version"] = 1;
    manifest["params"] = {{"gamma1", e.params.gamma1},
                          {"gamma_phi", e.params.gamma_phi},
                          {"eta", e.params.eta},
                          {"dt", e.params.dt}};
    manifest["initial"] = {{"u", e.initial.u}, {"x", e.initial.x}, {"y", e.initial.y}};
    manifest["scheme"] = to_string(e.scheme);
    manifest["n_trajectories"] = e.members.size();
    manifest["n_saved"] = n_save;
    manifest["seeds"] = seeds;
    std::ofstream out = open_out(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
}

void write_stats_csv(const std::filesystem::path& path, const EnsembleStats& stats) {
    std::ofstream out = open_out(path);
    out << "t,mean_u,mean_x,mean_y,var_u,var_x,var_y\n";
    for (std::size_t k = 0; k < stats.times.size(); ++k) {
        out << format_sig(stats.times[k]) << ',' << format_sig(stats.mean_u[k]) << ','
            << format_sig(stats.mean_x[k]) << ',' << format_sig(stats.mean_y[k]) << ','
            << format_sig(stats.var_u[k]) << ',' << format_sig(stats.var_x[k]) << ','
            << format_sig(stats.var_y[k]) << '\n';
    }
}

void write_mlp_csv(const std::filesystem::path& path, const MlpPath& p) {
    std::ofstream out = open_out(path);
    out << "t,u,x,y,p_u,p_x,p_y,I,Q,E\n";
    for (std::size_t k = 0; k < p.times.size(); ++k) {
        const PhasePoint& pp = p.points[k];
        out << format_sig(p.times[k]) << ',' << format_sig(pp.state.u) << ','
            << format_sig(pp.state.x) << ',' << format_sig(pp.state.y) << ','
            << format_sig(pp.p_u) << ',' << format_sig(pp.p_x) << ','
            << format_sig(pp.p_y) << ',' << format_sig(p.readout_i[k]) << ','
            << format_sig(p.readout_q[k]) << ',' << format_sig(p.energy[k]) << '\n';
    }
}

void write_ideal_path_csv(const std::filesystem::path& path, const IdealPath& p) {
    std::ofstream out = open_out(path);
    out << "t,theta,p_theta,I,E\n";
    for (std::size_t k = 0; k < p.times.size(); ++k) {
        out << format_sig(p.times[k]) << ',' << format_sig(p.points[k].theta) << ','
            << format_sig(p.points[k].p_theta) << ',' << format_sig(p.readout_i[k]) << ','
            << format_sig(p.energy) << '\n';
    }
}

void write_phase_portrait_csv(const std::filesystem::path& path,
                              const std::vector<double>& energies,
                              const std::vector<std::vector<IdealPhasePoint>>& contours) {
    if (energies.size() != contours.size()) {
        throw std::invalid_argument("write_phase_portrait_csv: size mismatch");
    }
    std::ofstream out = open_out(path);
    out << "theta,p_theta,energy\n";
    for (std::size_t c = 0; c < contours.size(); ++c) {
        for (const IdealPhasePoint& pt : contours[c]) {
            out << format_sig(pt.theta) << ',' << format_sig(pt.p_theta) << ','
                << format_sig(energies[c]) << '\n';
        }
    }
}

void write_cov_grid_csv(const std::filesystem::path& path, const CovarianceGrid& grid,
                        const std::string& meta_json) {
    std::ofstream out = open_out(path);
    out << "t1\\t2";
    for (double t2 : grid.t2) out << ',' << format_sig(t2);
    out << '\n';
    for (std::size_t i = 0; i < grid.t1.size(); ++i) {
        out << format_sig(grid.t1[i]);
        for (std::size_t j = 0; j < grid.t2.size(); ++j) {
            out << ',' << format_sig(grid.value[i][j]);
        }
        out << '\n';
    }
    if (!meta_json.empty()) {
        std::filesystem::path side = path;
        side.replace_extension(".json");
        std::ofstream meta = open_out(side);
        meta << meta_json << '\n';
    }
}

void write_sme_csv(const std::filesystem::path& path, const SmeTrajectory& tr) {
    std::ofstream out = open_out(path);
    const auto n = tr.states.empty() ? 0 : tr.states.front().rows();
    const std::size_t m = tr.outcomes.empty() ? 0 : tr.outcomes.front().size();
    out << "t";
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            out << ",re_" << i << j << ",im_" << i << j;
        }
    }
    for (std::size_t nu = 0; nu < m; ++nu) out << ",r_" << nu;
    out << '\n';
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < tr.states.size(); ++k) {
        out << format_sig(tr.times[k]);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                out << ',' << format_sig(tr.states[k](i, j).real()) << ','
                    << format_sig(tr.states[k](i, j).imag());
            }
        }
        const bool has_step = k < tr.outcomes.size();
        for (std::size_t nu = 0; nu < m; ++nu) {
            out << ',' << format_sig(has_step ? tr.outcomes[k][nu] : nan);
        }
        out << '\n';
    }
}

} // namespace fluor
