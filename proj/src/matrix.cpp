// SPDX-License-Identifier: Apache-2.0
#include "shflbw/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace shflbw {

DenseMatrix::DenseMatrix(std::uint32_t r, std::uint32_t c,
                         std::vector<float> v)
    : rows(r), cols(c), values(std::move(v)) {
    if (values.size() != std::size_t(rows) * cols)
        throw BadParams("DenseMatrix: values length != rows * cols");
    for (float x : values)
        if (!std::isfinite(x))
            throw BadParams("DenseMatrix: non-finite value");
}

SparsityMask::SparsityMask(std::uint32_t r, std::uint32_t c,
                           std::vector<std::uint8_t> b)
    : rows(r), cols(c), bits(std::move(b)) {
    if (bits.size() != std::size_t(rows) * cols)
        throw BadParams("SparsityMask: bits length != rows * cols");
    for (std::uint8_t x : bits)
        if (x > 1)
            throw BadParams("SparsityMask: entries must be 0 or 1");
}

std::size_t SparsityMask::popcount() const {
    return static_cast<std::size_t>(
        std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

double SparsityMask::density() const {
    if (bits.empty()) return 0.0;
    return double(popcount()) / double(size());
}

DenseMatrix apply_mask(const DenseMatrix& dense, const SparsityMask& mask) {
    if (dense.rows != mask.rows || dense.cols != mask.cols)
        throw ShapeMismatch("apply_mask: dense and mask shapes differ");
    DenseMatrix out(dense.rows, dense.cols);
    for (std::size_t i = 0; i < dense.values.size(); ++i)
        out.values[i] = mask.bits[i] ? dense.values[i] : 0.0f;
    return out;
}

} // namespace shflbw
