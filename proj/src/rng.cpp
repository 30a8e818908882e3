// SPDX-License-Identifier: Apache-2.0
#include "shflbw/rng.hpp"

namespace shflbw {

DenseMatrix random_dense(std::uint32_t rows, std::uint32_t cols,
                         std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    DenseMatrix m(rows, cols);
    for (auto& x : m.values) x = uniform_float(rng, -1.0f, 1.0f);
    return m;
}

} // namespace shflbw
