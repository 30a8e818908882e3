// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "shflbw/formats.hpp"

namespace shflbw {

struct HardwareModel {
    double peak_mac_per_s = 0.0;
    double llc_bandwidth_bytes_per_s = 0.0;
    double bytes_per_value = 2.0; // half-precision values by default
    std::uint32_t regfile_size = 4096; // accumulator elements

    void validate() const; // throws BadParams (all fields must be positive)
};

struct HardwareProfile {
    std::string name;
    std::string notes;
    HardwareModel model;
};

// Bundled profiles are calibrated approximations, not vendor data.
std::span<const HardwareProfile> bundled_profiles();
const HardwareProfile* find_profile(std::string_view name); // nullptr if absent
HardwareModel load_profile_json(const std::filesystem::path& path);

// ln(M!) - (M/V) * ln(V!), the natural log of the row-grouping candidate
// multiplier M! / (V!)^(M/V). Computed via lgamma; reported in log space
// to avoid overflow. Throws BadParams unless V divides M.
double flexibility_log_gain(std::uint64_t m, std::uint64_t v);

// sqrt(regfile_size) / 2 flop/byte: best reuse of a dense GEMM whose output
// tile fills the register file (T_opt = sqrt(regfile)).
double reuse_dense(std::uint32_t regfile_size);

// sqrt(alpha) * reuse_dense: best reuse of an unstructured/balanced sparse
// operand at non-zero ratio alpha. Throws BadParams unless 0 < alpha <= 1.
double max_reuse_closed_form(double alpha, std::uint32_t regfile_size);

struct BruteForceReuse {
    double flop_per_byte = 0.0;
    std::uint32_t t_m = 0;
    std::uint32_t t_n = 0;
};

// Exhaustive integer search over T_M * T_N <= regfile_size of
// 2*alpha*T_M*T_N*T_K / ((alpha*T_M*T_K + T_K*T_N) * bytes_per_value_factor)
// with T_K cancelling. First maximizer in ascending T_M order.
BruteForceReuse max_reuse_bruteforce(double alpha, std::uint32_t regfile_size,
                                     double bytes_per_value = 2.0);

// MACs that must be performed on each loaded value to keep the MAC units
// busy: peak_mac_per_s / (llc_bandwidth / bytes_per_value).
double required_reuse(const HardwareModel& hw);

struct IntensityReport {
    std::string pattern;
    double alpha = 1.0;
    std::uint32_t v = 0;
    double reuse_flop_per_byte = 0.0;
    double reuse_dense_flop_per_byte = 0.0;
    double ratio_to_dense = 1.0;
    double tile_opt = 0.0; // T_opt,dense = sqrt(regfile)
    // True when a block/vector/shfl pattern has V < T_opt and the reuse is
    // tile-bound at V/2 flop/byte; this regime extends the model beyond the
    // V >= T_opt case it was stated for.
    bool tile_limited = false;
};

// Achievable operation intensity per pattern: unstructured/balanced use the
// closed form at alpha; block-wise/vector-wise/shfl-bw reach dense reuse
// when V >= T_opt, otherwise V/2 flop/byte.
IntensityReport intensity_report(PatternKind pattern, double alpha,
                                 std::uint32_t v, const HardwareModel& hw);

std::string intensity_report_json(const IntensityReport& report,
                                  int indent = 2);

} // namespace shflbw
