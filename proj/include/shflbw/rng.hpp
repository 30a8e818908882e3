// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

#include "shflbw/matrix.hpp"

namespace shflbw {

// std::uniform_real_distribution is implementation-defined; these helpers
// keep generated streams identical across standard libraries.

inline double uniform01(std::mt19937_64& rng) {
    return double(rng() >> 11) * 0x1.0p-53;
}

inline float uniform_float(std::mt19937_64& rng, float lo, float hi) {
    return lo + float(uniform01(rng)) * (hi - lo);
}

// Uniform values in [-1, 1).
DenseMatrix random_dense(std::uint32_t rows, std::uint32_t cols,
                         std::uint64_t seed);

} // namespace shflbw
