#pragma once

#include "fluor/correlators.hpp"
#include "fluor/ideal_mlp.hpp"
#include "fluor/mlp.hpp"
#include "fluor/sme.hpp"
#include "fluor/trajectory.hpp"

#include <filesystem>
#include <string>

namespace fluor {

// All numeric output uses 17 significant digits for diffability.
std::string format_sig(double v);

// One row per time step: t,u,x,y,I,Q,xi_I,xi_Q. The terminal row carries the
// final state with nan in the readout/noise columns (they belong to steps,
// not grid points).
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& tr);

// Directory of member CSVs (traj_00000.csv, ...) plus manifest.json with
// params, scheme, seeds and the initial state.
void write_ensemble(const std::filesystem::path& dir, const Ensemble& e,
                    std::size_t max_members = SIZE_MAX);

// t,mean_u,mean_x,mean_y,var_u,var_x,var_y.
void write_stats_csv(const std::filesystem::path& path, const EnsembleStats& stats);

// t,u,x,y,p_u,p_x,p_y,I,Q,E.
void write_mlp_csv(const std::filesystem::path& path, const MlpPath& path_data);

// t,theta,p_theta,I,E for the reduced pure-state path.
void write_ideal_path_csv(const std::filesystem::path& path, const IdealPath& path_data);

// theta,p_theta,energy rows; one block per energy.
void write_phase_portrait_csv(const std::filesystem::path& path,
                              const std::vector<double>& energies,
                              const std::vector<std::vector<IdealPhasePoint>>& contours);

// Header row of the t2 grid, one row per t1 value; companion .json sidecar
// written next to it when meta is nonempty.
void write_cov_grid_csv(const std::filesystem::path& path, const CovarianceGrid& grid,
                        const std::string& meta_json = "");

// Matches trajectory CSV layout with the density-matrix entries flattened
// row-major: t,re_00,im_00,...,r_0,...,r_{m-1} (outcomes nan on the last row).
void write_sme_csv(const std::filesystem::path& path, const SmeTrajectory& tr);

} // namespace fluor
