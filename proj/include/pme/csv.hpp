// csv.hpp — Plot-ready CSV writers for trajectories, spectra, and reports

#pragma once

#include <string>
#include <vector>

#include "pme/observables.hpp"
#include "pme/polaron.hpp"

namespace pme {

// Formats a finite double; throws NumericalError on NaN/Inf so no bad value
// ever reaches an output file.
std::string csv_number(double x);

void write_trajectory_csv(const std::string& path, const Trajectory& traj);
void write_populations_csv(const std::string& path, const Trajectory& traj);
// Lab-frame coherences for every site pair; these are zeroth-order
// reconstructions and the file header says so.
void write_coherences_csv(const std::string& path, const Trajectory& traj);
void write_compare_csv(const std::string& path,
                       const std::vector<std::pair<std::string, const Trajectory*>>& runs);
void write_spectrum_csv(const std::string& path, const Spectrum& spec);
void write_spectrum_peaks_csv(const std::string& path, const Spectrum& spec);
void write_tracedist_csv(const std::string& path, const NonMarkovReport& report);
void write_frame_csv(const std::string& path, const PolaronFrame& frame);

} // namespace pme
