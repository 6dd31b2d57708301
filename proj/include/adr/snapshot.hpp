#pragma once

#include <filesystem>
#include <stdexcept>

#include "adr/integrate.hpp"
#include "adr/tensor.hpp"

namespace adr {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Field snapshot format, little-endian throughout:
//   magic "ADRF" | u32 version | u32 d | u32 sizes[d] | f64 data[N]
// with data in the tensor linearization order. Round trips are bit-exact.
inline constexpr std::uint32_t kSnapshotFormatVersion = 1;
inline constexpr std::uint32_t kIndicatorsFormatVersion = 1;

void write_snapshot(const std::filesystem::path& path, const TensorField& field);
TensorField read_snapshot(const std::filesystem::path& path);

// CSV with header "t,mean_u,increment_u_fro", one row per recorded sample.
// The t = 0 row, when present, carries increment 0 by convention.
void write_indicators_csv(const std::filesystem::path& path, const Indicators& indicators);

}  // namespace adr
