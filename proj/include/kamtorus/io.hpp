#pragma once

// Exchange formats for Fourier models: a CSV coefficient dump (header line
// with d/shape/cutoffs/grids, then k_1..k_d,row,col,re,im) and the "FMD1"
// little-endian binary round-trip format.

#include <string>

#include "kamtorus/fourier.hpp"

namespace kamtorus::io {

void save_csv(const fourier::FourierModel& m, const std::string& path);
fourier::FourierModel load_csv(const std::string& path);

void save_fmd(const fourier::FourierModel& m, const std::string& path);
fourier::FourierModel load_fmd(const std::string& path);

/// Sniffs the FMD1 magic; falls back to the CSV reader.
fourier::FourierModel load_model(const std::string& path);

}  // namespace kamtorus::io
