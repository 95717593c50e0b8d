/*
 * SPDX-FileCopyrightText: <text>Copyright 2026 The bnnsca Authors</text>
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 * This file is part of bnnsca, a side-channel workbench for binarized
 * neural network accelerators.
 */

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bnnsca {

/// Raised when a caller breaks an operation's precondition.
class ContractViolation : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

/// Raised for malformed model / trace / config files.
class FormatError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Raised when a file cannot be opened, read or written.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline void expects(bool cond, const char *what) {
    if (!cond)
        throw ContractViolation(what);
}

/// Two's complement bit pattern of `v` truncated to `width` bits.
constexpr std::uint64_t to_bits(std::int64_t v, unsigned width) {
    return width >= 64 ? static_cast<std::uint64_t>(v)
                       : static_cast<std::uint64_t>(v) & ((std::uint64_t{1} << width) - 1);
}

/// Sign-extends the low `width` bits of `bits`.
constexpr std::int64_t from_bits(std::uint64_t bits, unsigned width) {
    if (width >= 64)
        return static_cast<std::int64_t>(bits);
    const std::uint64_t sign = std::uint64_t{1} << (width - 1);
    bits &= (std::uint64_t{1} << width) - 1;
    return static_cast<std::int64_t>((bits ^ sign) - sign);
}

/// Smallest two's complement width holding every value in [-bound, bound].
constexpr unsigned signed_width_for(std::int64_t bound) {
    unsigned w = 1;
    while ((std::int64_t{1} << (w - 1)) - 1 < bound)
        ++w;
    return w;
}

} // namespace bnnsca
