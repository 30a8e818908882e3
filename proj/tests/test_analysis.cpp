// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "shflbw/analysis.hpp"

using namespace shflbw;

namespace {

std::uint64_t binomial_u64(std::uint64_t n, std::uint64_t k) {
    std::uint64_t res = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        // exact at every step: res * (n-k+i) is divisible by i
        const unsigned __int128 t = (unsigned __int128)res * (n - k + i);
        res = std::uint64_t(t / i);
    }
    return res;
}

// Exact big-integer route: M!/(V!)^(M/V) as a product of binomials,
// which fits u64 for M <= 20 (bounded by 20!).
long double exact_log_gain(std::uint64_t m, std::uint64_t v) {
    std::uint64_t count = 1;
    for (std::uint64_t used = 0; used < m; used += v)
        count *= binomial_u64(m - used, v);
    return std::log((long double)count);
}

} // namespace

TEST_SUITE_BEGIN("analysis");

TEST_CASE("flexibility log gain basics") {
    CHECK(flexibility_log_gain(4, 4) == 0.0);
    CHECK(flexibility_log_gain(4, 2) ==
          doctest::Approx(std::log(6.0)).epsilon(1e-12));
    CHECK(flexibility_log_gain(512, 128) > 700.0);
    CHECK_THROWS_AS(flexibility_log_gain(10, 3), BadParams);
    CHECK_THROWS_AS(flexibility_log_gain(10, 0), BadParams);
}

TEST_CASE("flexibility matches the exact count for all M <= 20") {
    for (std::uint64_t m = 1; m <= 20; ++m)
        for (std::uint64_t v = 1; v <= m; ++v) {
            if (m % v != 0) continue;
            const double got = flexibility_log_gain(m, v);
            const double want = double(exact_log_gain(m, v));
            CHECK(std::abs(got - want) <= 1e-9);
        }
}

TEST_CASE("flexibility decreases as V grows") {
    for (std::uint64_t m : {16ull, 20ull, 24ull}) {
        double prev = flexibility_log_gain(m, 1);
        for (std::uint64_t v = 2; v <= m; ++v) {
            if (m % v != 0) continue;
            const double cur = flexibility_log_gain(m, v);
            CHECK(cur < prev);
            prev = cur;
        }
    }
}

TEST_CASE("dense reuse closed form") {
    CHECK(reuse_dense(4096) == 32.0);
    CHECK(reuse_dense(4) == 1.0);
    CHECK(reuse_dense(16384) == 64.0);
}

TEST_CASE("max reuse closed form") {
    CHECK(max_reuse_closed_form(1.0, 4096) == 32.0);
    CHECK(max_reuse_closed_form(0.25, 4096) == 16.0);
    CHECK(max_reuse_closed_form(0.5, 4096) ==
          doctest::Approx(22.627416997969522).epsilon(1e-12));
    CHECK_THROWS_AS(max_reuse_closed_form(0.0, 4096), BadParams);
    CHECK_THROWS_AS(max_reuse_closed_form(1.5, 4096), BadParams);
}

TEST_CASE("brute-force reuse finds the known optima") {
    const auto dense = max_reuse_bruteforce(1.0, 4096);
    CHECK(dense.flop_per_byte == 32.0);
    CHECK(dense.t_m == 64);
    CHECK(dense.t_n == 64);

    const auto quarter = max_reuse_bruteforce(0.25, 4096);
    CHECK(quarter.flop_per_byte == 16.0);
    CHECK(quarter.t_m == 128);
    CHECK(quarter.t_n == 32);

    const auto tiny = max_reuse_bruteforce(0.5, 1);
    CHECK(tiny.t_m == 1);
    CHECK(tiny.t_n == 1);
}

TEST_CASE("brute force sits under the closed form within rounding slack") {
    for (double alpha : {0.1, 0.25, 0.5, 0.75, 1.0})
        for (std::uint32_t regfile : {64u, 256u, 1024u, 4096u, 16384u}) {
            const double closed = max_reuse_closed_form(alpha, regfile);
            const double brute =
                max_reuse_bruteforce(alpha, regfile).flop_per_byte;
            CHECK(brute <= closed + 1e-12);
            CHECK(brute >=
                  closed * (1.0 - 2.0 / std::sqrt(double(regfile))) - 1e-12);
        }
}

TEST_CASE("required reuse") {
    CHECK(required_reuse({100.0, 50.0, 1.0, 4096}) == 2.0);
    const HardwareModel base{100.0, 50.0, 1.0, 4096};
    HardwareModel doubled = base;
    doubled.llc_bandwidth_bytes_per_s *= 2.0;
    CHECK(required_reuse(doubled) == required_reuse(base) / 2.0);

    const auto* a100 = find_profile("reference-A100-like");
    REQUIRE(a100 != nullptr);
    CHECK(std::abs(required_reuse(a100->model) - 63.0) <= 1.0);
}

TEST_CASE("intensity report per pattern") {
    const HardwareModel hw{1.0, 1.0, 2.0, 4096};

    const auto shfl = intensity_report(PatternKind::ShflBW, 0.5, 64, hw);
    CHECK(shfl.ratio_to_dense == 1.0);
    CHECK(shfl.reuse_flop_per_byte == 32.0);
    CHECK_FALSE(shfl.tile_limited);

    const auto unst =
        intensity_report(PatternKind::Unstructured, 0.25, 0, hw);
    CHECK(unst.ratio_to_dense == doctest::Approx(0.5).epsilon(1e-12));

    const auto small_v = intensity_report(PatternKind::ShflBW, 0.5, 32, hw);
    CHECK(small_v.reuse_flop_per_byte == 16.0);
    CHECK(small_v.ratio_to_dense == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(small_v.tile_limited);

    for (auto kind : {PatternKind::BlockWise, PatternKind::VectorWise,
                      PatternKind::ShflBW}) {
        const auto rep = intensity_report(kind, 1.0, 64, hw);
        CHECK(rep.reuse_flop_per_byte == reuse_dense(hw.regfile_size));
    }

    CHECK_THROWS_AS(intensity_report(PatternKind::ShflBW, 0.5, 0, hw),
                    BadParams);
    const auto doc =
        nlohmann::json::parse(intensity_report_json(shfl));
    CHECK(doc["pattern"] == "shfl_bw");
    CHECK(doc["ratio_to_dense"] == 1.0);
}

TEST_CASE("profiles load from JSON") {
    CHECK(bundled_profiles().size() == 2);
    CHECK(find_profile("nonesuch") == nullptr);

    const auto path =
        std::filesystem::temp_directory_path() / "shflbw_profile_test.json";
    {
        std::ofstream out(path);
        out << R"({"peak_mac_per_s": 2e12, "llc_bandwidth_bytes_per_s": 1e12,
                   "bytes_per_value": 2.0, "regfile_size": 1024})";
    }
    const auto hw = load_profile_json(path);
    CHECK(required_reuse(hw) == 4.0);
    CHECK(hw.regfile_size == 1024);
    std::filesystem::remove(path);

    {
        std::ofstream out(path);
        out << R"({"peak_mac_per_s": 2e12})";
    }
    CHECK_THROWS_AS(load_profile_json(path), BadParams);
    std::filesystem::remove(path);
}

TEST_SUITE_END();
