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

#include "bnnsca/model.hpp"

#include "bnnsca/common.hpp"
#include "bnnsca/io.hpp"
#include "bnnsca/randomness.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <string>

namespace bnnsca {

namespace {

constexpr char kModelMagic[4] = {'B', 'N', 'N', 'M'};
constexpr std::uint16_t kModelVersion = 1;

constexpr std::int32_t kBiasMin = -(1 << (kBiasBits - 1));
constexpr std::int32_t kBiasMax = (1 << (kBiasBits - 1)) - 1;

} // namespace

DenseLayer::DenseLayer(std::size_t fan_in, std::size_t fan_out)
    : fan_in_(fan_in), fan_out_(fan_out), weights_(fan_in * fan_out, 0), biases_(fan_out, 0) {
    expects(fan_in > 0 && fan_out > 0, "layer dimensions must be positive");
}

void DenseLayer::set_bias(std::size_t neuron, std::int32_t value) {
    expects(value >= kBiasMin && value <= kBiasMax, "bias does not fit 16 bits");
    biases_.at(neuron) = value;
}

BnnModel::BnnModel(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    expects(dims_.size() >= 2, "a model needs at least an input and an output width");
    layers_.reserve(dims_.size() - 1);
    for (std::size_t i = 0; i + 1 < dims_.size(); ++i)
        layers_.emplace_back(dims_[i], dims_[i + 1]);
}

std::int64_t weighted_sum(std::span<const std::int64_t> inputs, std::span<const std::uint8_t> weights,
                          std::int64_t bias) {
    expects(inputs.size() == weights.size(), "weighted_sum: inputs and weights differ in length");
    std::int64_t acc = bias;
    for (std::size_t i = 0; i < inputs.size(); ++i)
        acc += weights[i] ? inputs[i] : -inputs[i];
    return acc;
}

int argmax_lowest(std::span<const std::int64_t> scores) {
    expects(!scores.empty(), "argmax of an empty score vector");
    return static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

ReferencePass forward_reference(const BnnModel &model, const InputImage &image) {
    expects(image.pixels.size() == model.input_width(), "image width does not match the model");
    ReferencePass pass;
    std::vector<std::int64_t> x(image.pixels.begin(), image.pixels.end());
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        const DenseLayer &layer = model.layer(l);
        std::vector<std::int64_t> sums(layer.fan_out());
        for (std::size_t n = 0; n < layer.fan_out(); ++n)
            sums[n] = weighted_sum(x, layer.weights(n), layer.bias(n));
        pass.sums.push_back(sums);
        if (l + 1 == model.num_layers())
            break;
        ActivationVector act(sums.size());
        x.assign(sums.size(), 0);
        for (std::size_t n = 0; n < sums.size(); ++n) {
            act[n] = sign_activation(sums[n]);
            x[n] = act[n] ? 1 : -1;
        }
        pass.activations.push_back(std::move(act));
    }
    pass.result.scores = pass.sums.back();
    pass.result.label = argmax_lowest(pass.result.scores);
    return pass;
}

ClassResult infer_reference(const BnnModel &model, const InputImage &image) {
    return forward_reference(model, image).result;
}

BnnModel generate_model(std::uint64_t seed, const std::vector<std::size_t> &dims, BiasRange range) {
    BnnModel model(dims);
    Xoshiro256 rng(seed);
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        DenseLayer &layer = model.layer(l);
        std::int32_t bound = l == 0 ? range.first_layer : (l + 1 == model.num_layers() ? range.output : range.hidden);
        bound = std::clamp(bound, 0, kBiasMax);
        for (std::size_t n = 0; n < layer.fan_out(); ++n) {
            for (std::size_t i = 0; i < layer.fan_in(); i += 64) {
                std::uint64_t bits = rng.next();
                for (std::size_t k = i; k < std::min(i + 64, layer.fan_in()); ++k, bits >>= 1)
                    layer.set_weight(n, k, bits & 1);
            }
            layer.set_bias(n, static_cast<std::int32_t>(rng.below(2 * std::uint64_t(bound) + 1)) - bound);
        }
    }
    return model;
}

InputImage generate_image(std::uint64_t seed, std::size_t width) {
    Xoshiro256 rng(seed);
    InputImage img;
    img.pixels.resize(width);
    for (auto &p : img.pixels)
        p = static_cast<std::uint8_t>(rng.next() >> 56);
    return img;
}

std::vector<std::uint8_t> serialize_model(const BnnModel &model) {
    io::Writer w;
    w.raw({reinterpret_cast<const std::uint8_t *>(kModelMagic), 4});
    w.u16(kModelVersion);
    w.u16(static_cast<std::uint16_t>(model.num_layers()));
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        const DenseLayer &layer = model.layer(l);
        const std::size_t rows = layer.fan_in(), cols = layer.fan_out();
        w.u32(static_cast<std::uint32_t>(rows));
        w.u32(static_cast<std::uint32_t>(cols));
        // bit (r, c) sits at position r * cols + c, LSB first; the matrix is padded to a whole byte
        std::vector<std::uint8_t> packed((rows * cols + 7) / 8, 0);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c)
                if (layer.weight(c, r)) {
                    const std::size_t pos = r * cols + c;
                    packed[pos / 8] |= std::uint8_t(1u << (pos % 8));
                }
        w.raw(packed);
        for (std::size_t c = 0; c < cols; ++c)
            w.i16(static_cast<std::int16_t>(layer.bias(c)));
    }
    return std::move(w.bytes());
}

BnnModel deserialize_model(std::span<const std::uint8_t> bytes) {
    io::Reader in(bytes, "model file");
    auto magic = in.raw(4);
    if (!std::equal(magic.begin(), magic.end(), kModelMagic))
        throw FormatError("model file: bad magic");
    if (const auto v = in.u16(); v != kModelVersion)
        throw FormatError("model file: unsupported version " + std::to_string(v));
    const std::size_t n_layers = in.u16();
    if (n_layers == 0)
        throw FormatError("model file: no layers");

    std::vector<std::size_t> dims;
    std::vector<std::vector<std::uint8_t>> packed;
    std::vector<std::vector<std::int16_t>> biases;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const std::size_t rows = in.u32(), cols = in.u32();
        if (rows == 0 || cols == 0)
            throw FormatError("model file: empty layer " + std::to_string(l));
        if (l == 0)
            dims.push_back(rows);
        else if (rows != dims.back())
            throw FormatError("model file: layer " + std::to_string(l) + " fan-in " + std::to_string(rows) +
                              " does not match previous width " + std::to_string(dims.back()));
        dims.push_back(cols);
        auto bits = in.raw((rows * cols + 7) / 8);
        packed.emplace_back(bits.begin(), bits.end());
        auto &b = biases.emplace_back(cols);
        for (auto &v : b)
            v = in.i16();
    }
    if (in.remaining() != 0)
        throw FormatError("model file: trailing bytes");

    BnnModel model(dims);
    for (std::size_t l = 0; l < n_layers; ++l) {
        DenseLayer &layer = model.layer(l);
        const std::size_t cols = layer.fan_out();
        for (std::size_t r = 0; r < layer.fan_in(); ++r)
            for (std::size_t c = 0; c < cols; ++c) {
                const std::size_t pos = r * cols + c;
                layer.set_weight(c, r, (packed[l][pos / 8] >> (pos % 8)) & 1);
            }
        for (std::size_t c = 0; c < cols; ++c)
            layer.set_bias(c, biases[l][c]);
    }
    return model;
}

void save_model(const BnnModel &model, const std::filesystem::path &path) {
    io::write_file_atomic(path, serialize_model(model));
}

BnnModel load_model(const std::filesystem::path &path) {
    try {
        return deserialize_model(io::read_file(path));
    } catch (const FormatError &e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::uint64_t model_hash(const BnnModel &model) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint8_t b : serialize_model(model)) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

InputImage load_image(const std::filesystem::path &path, std::size_t width) {
    const auto data = io::read_file(path);
    InputImage img;
    if (data.size() == width) {
        img.pixels = data;
        return img;
    }
    // textual form: integers separated by commas and/or whitespace
    const char *p = reinterpret_cast<const char *>(data.data());
    const char *end = p + data.size();
    while (p < end) {
        if (*p == ',' || std::isspace(static_cast<unsigned char>(*p))) {
            ++p;
            continue;
        }
        int v = 0;
        auto [next, ec] = std::from_chars(p, end, v);
        if (ec != std::errc() || v < 0 || v > 255)
            throw FormatError(path.string() + ": pixel " + std::to_string(img.pixels.size()) + " is not in [0, 255]");
        img.pixels.push_back(static_cast<std::uint8_t>(v));
        p = next;
    }
    if (img.pixels.size() != width)
        throw FormatError(path.string() + ": expected " + std::to_string(width) + " pixels, found " +
                          std::to_string(img.pixels.size()));
    return img;
}

void save_image(const InputImage &image, const std::filesystem::path &path) {
    io::write_file_atomic(path, image.pixels);
}

} // namespace bnnsca
