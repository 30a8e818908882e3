// SPDX-License-Identifier: Apache-2.0
#include "shflbw/analysis.hpp"

#include <array>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace shflbw {

void HardwareModel::validate() const {
    if (!(peak_mac_per_s > 0.0) || !(llc_bandwidth_bytes_per_s > 0.0) ||
        !(bytes_per_value > 0.0) || regfile_size == 0)
        throw BadParams("hardware model fields must be positive");
}

namespace {

// Calibrated so the A100-like profile reproduces the ~63 MACs-per-loaded-
// value demand of a current tensor-core part; the bandwidth figure is an
// approximation chosen for that ratio, not a vendor number.
const std::array<HardwareProfile, 2> kProfiles = {{
    {"reference-A100-like",
     "calibrated approximation of a large tensor-core GPU "
     "(156e12 MAC/s, ~4.95 TB/s LLC)",
     {156e12, 4.95e12, 2.0, 4096}},
    {"reference-T4-like",
     "calibrated approximation of a small inference GPU "
     "(32.5e12 MAC/s, ~1.3 TB/s LLC)",
     {32.5e12, 1.3e12, 2.0, 4096}},
}};

} // namespace

std::span<const HardwareProfile> bundled_profiles() { return kProfiles; }

const HardwareProfile* find_profile(std::string_view name) {
    for (const auto& p : kProfiles)
        if (p.name == name) return &p;
    return nullptr;
}

HardwareModel load_profile_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open profile: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw BadParams("profile is not valid JSON: " + std::string(e.what()));
    }
    HardwareModel hw;
    try {
        hw.peak_mac_per_s = doc.at("peak_mac_per_s").get<double>();
        hw.llc_bandwidth_bytes_per_s =
            doc.at("llc_bandwidth_bytes_per_s").get<double>();
        hw.bytes_per_value = doc.value("bytes_per_value", 2.0);
        hw.regfile_size = doc.value("regfile_size", 4096u);
    } catch (const nlohmann::json::exception& e) {
        throw BadParams("profile missing field: " + std::string(e.what()));
    }
    hw.validate();
    return hw;
}

double flexibility_log_gain(std::uint64_t m, std::uint64_t v) {
    if (m == 0 || v == 0 || m % v != 0)
        throw BadParams("V must divide M");
    return std::lgamma(double(m) + 1.0) -
           double(m / v) * std::lgamma(double(v) + 1.0);
}

double reuse_dense(std::uint32_t regfile_size) {
    if (regfile_size == 0) throw BadParams("regfile_size must be positive");
    return std::sqrt(double(regfile_size)) / 2.0;
}

double max_reuse_closed_form(double alpha, std::uint32_t regfile_size) {
    if (!(alpha > 0.0) || alpha > 1.0)
        throw BadParams("alpha must be in (0, 1]");
    return std::sqrt(alpha) * reuse_dense(regfile_size);
}

BruteForceReuse max_reuse_bruteforce(double alpha,
                                     std::uint32_t regfile_size,
                                     double bytes_per_value) {
    if (!(alpha > 0.0) || alpha > 1.0)
        throw BadParams("alpha must be in (0, 1]");
    if (regfile_size == 0) throw BadParams("regfile_size must be positive");
    if (!(bytes_per_value > 0.0))
        throw BadParams("bytes_per_value must be positive");

    // flop/byte = 2*alpha*T_M*T_N*T_K / ((alpha*T_M + T_N)*T_K*bytes);
    // T_K cancels, and for fixed T_M the value grows with T_N, so only
    // T_N = floor(regfile / T_M) needs checking.
    BruteForceReuse best;
    for (std::uint32_t t_m = 1; t_m <= regfile_size; ++t_m) {
        const std::uint32_t t_n = regfile_size / t_m;
        const double value = 2.0 * alpha * t_m * t_n /
                             ((alpha * t_m + t_n) * bytes_per_value);
        if (value > best.flop_per_byte) best = {value, t_m, t_n};
    }
    return best;
}

double required_reuse(const HardwareModel& hw) {
    hw.validate();
    return hw.peak_mac_per_s /
           (hw.llc_bandwidth_bytes_per_s / hw.bytes_per_value);
}

IntensityReport intensity_report(PatternKind pattern, double alpha,
                                 std::uint32_t v, const HardwareModel& hw) {
    hw.validate();
    if (!(alpha > 0.0) || alpha > 1.0)
        throw BadParams("alpha must be in (0, 1]");

    IntensityReport rep;
    rep.pattern = std::string(pattern_name(pattern));
    rep.alpha = alpha;
    rep.v = v;
    rep.reuse_dense_flop_per_byte = reuse_dense(hw.regfile_size);
    rep.tile_opt = std::sqrt(double(hw.regfile_size));

    switch (pattern) {
    case PatternKind::Unstructured:
    case PatternKind::Balanced:
        rep.reuse_flop_per_byte = max_reuse_closed_form(alpha, hw.regfile_size);
        break;
    case PatternKind::BlockWise:
    case PatternKind::VectorWise:
    case PatternKind::ShflBW:
        if (v == 0) throw BadParams("V required for tiled patterns");
        if (double(v) >= rep.tile_opt) {
            rep.reuse_flop_per_byte = rep.reuse_dense_flop_per_byte;
        } else {
            // Tiles cannot outgrow the block size: dense reuse at tile V.
            rep.reuse_flop_per_byte = double(v) / 2.0;
            rep.tile_limited = true;
        }
        break;
    }
    rep.ratio_to_dense =
        rep.reuse_flop_per_byte / rep.reuse_dense_flop_per_byte;
    return rep;
}

std::string intensity_report_json(const IntensityReport& rep, int indent) {
    nlohmann::json doc = {
        {"pattern", rep.pattern},
        {"alpha", rep.alpha},
        {"V", rep.v},
        {"reuse_flop_per_byte", rep.reuse_flop_per_byte},
        {"reuse_dense_flop_per_byte", rep.reuse_dense_flop_per_byte},
        {"ratio_to_dense", rep.ratio_to_dense},
        {"tile_opt", rep.tile_opt},
        {"tile_limited", rep.tile_limited},
    };
    return doc.dump(indent);
}

} // namespace shflbw
