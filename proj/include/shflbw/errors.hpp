// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace shflbw {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeMismatch : Error {
    using Error::Error;
};

struct NonConformantMask : Error {
    using Error::Error;
};

struct BadParams : Error {
    using Error::Error;
};

struct BadGeometry : Error {
    using Error::Error;
};

// Container errors
struct BadMagic : Error {
    using Error::Error;
};

struct UnsupportedVersion : Error {
    using Error::Error;
};

struct CorruptPayload : Error {
    using Error::Error;
};

} // namespace shflbw
