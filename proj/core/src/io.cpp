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

#include "bnnsca/io.hpp"

#include "bnnsca/common.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <system_error>

namespace bnnsca::io {

void Writer::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

float Reader::f32() { return std::bit_cast<float>(u32()); }

std::span<const std::uint8_t> Reader::raw(std::size_t n) {
    if (remaining() < n)
        throw FormatError(what_ + ": truncated");
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
}

std::uint64_t Reader::get(int n) {
    if (remaining() < std::size_t(n))
        throw FormatError(what_ + ": truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
        v |= std::uint64_t(data_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
        throw IoError("read error on " + path.string());
    return data;
}

void write_file_atomic(const std::filesystem::path &path, std::span<const std::uint8_t> data) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot create " + tmp.string());
        out.write(reinterpret_cast<const char *>(data.data()), static_cast<std::streamsize>(data.size()));
        if (!out)
            throw IoError("write error on " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void write_text_atomic(const std::filesystem::path &path, std::string_view text) {
    write_file_atomic(path, {reinterpret_cast<const std::uint8_t *>(text.data()), text.size()});
}

} // namespace bnnsca::io
