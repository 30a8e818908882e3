// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "shflbw/errors.hpp"

namespace shflbw {

// Row-major 2-D float matrix. All types in this library are treated as
// immutable after construction and are safe for concurrent read-only use.
struct DenseMatrix {
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<float> values; // rows * cols, row-major

    DenseMatrix() = default;

    DenseMatrix(std::uint32_t r, std::uint32_t c)
        : rows(r), cols(c), values(std::size_t(r) * c, 0.0f) {}

    // Validates length and finiteness; throws BadParams on violation.
    DenseMatrix(std::uint32_t r, std::uint32_t c, std::vector<float> v);

    std::size_t size() const { return std::size_t(rows) * cols; }

    float at(std::uint32_t r, std::uint32_t c) const {
        return values[std::size_t(r) * cols + c];
    }
    float& at(std::uint32_t r, std::uint32_t c) {
        return values[std::size_t(r) * cols + c];
    }

    std::span<const float> row(std::uint32_t r) const {
        return {values.data() + std::size_t(r) * cols, cols};
    }

    bool operator==(const DenseMatrix&) const = default;
};

// Binary mask marking kept weights (1 = kept). Entries stored unpacked,
// one byte per bit; the on-disk container packs them.
struct SparsityMask {
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<std::uint8_t> bits; // rows * cols, row-major, each 0 or 1

    SparsityMask() = default;

    SparsityMask(std::uint32_t r, std::uint32_t c)
        : rows(r), cols(c), bits(std::size_t(r) * c, 0) {}

    SparsityMask(std::uint32_t r, std::uint32_t c, std::vector<std::uint8_t> b);

    std::size_t size() const { return std::size_t(rows) * cols; }

    std::uint8_t at(std::uint32_t r, std::uint32_t c) const {
        return bits[std::size_t(r) * cols + c];
    }
    std::uint8_t& at(std::uint32_t r, std::uint32_t c) {
        return bits[std::size_t(r) * cols + c];
    }

    std::size_t popcount() const;

    // popcount / (rows*cols), in [0, 1]
    double density() const;

    bool operator==(const SparsityMask&) const = default;
};

// dense ⊙ mask, elementwise; shapes must agree.
DenseMatrix apply_mask(const DenseMatrix& dense, const SparsityMask& mask);

} // namespace shflbw
