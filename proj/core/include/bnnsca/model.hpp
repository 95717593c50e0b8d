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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace bnnsca {

/// Widths of the reference network: 28x28 pixels, three hidden layers, ten classes.
inline const std::vector<std::size_t> kMnistTopology{784, 1024, 1024, 1024, 10};

/// Biases are stored and serialized as 16-bit signed integers.
inline constexpr int kBiasBits = 16;

/// One fully connected layer. Weight bit 1 stands for +1, bit 0 for -1.
class DenseLayer {
  public:
    DenseLayer(std::size_t fan_in, std::size_t fan_out);

    std::size_t fan_in() const { return fan_in_; }
    std::size_t fan_out() const { return fan_out_; }

    bool weight(std::size_t neuron, std::size_t input) const { return weights_[neuron * fan_in_ + input] != 0; }
    void set_weight(std::size_t neuron, std::size_t input, bool bit) { weights_[neuron * fan_in_ + input] = bit ? 1 : 0; }
    std::span<const std::uint8_t> weights(std::size_t neuron) const {
        return {weights_.data() + neuron * fan_in_, fan_in_};
    }

    std::int32_t bias(std::size_t neuron) const { return biases_[neuron]; }
    void set_bias(std::size_t neuron, std::int32_t value);

    bool operator==(const DenseLayer &) const = default;

  private:
    std::size_t fan_in_;
    std::size_t fan_out_;
    std::vector<std::uint8_t> weights_; // neuron-major
    std::vector<std::int32_t> biases_;
};

/// Binarized network: the last layer produces raw scores, the others are
/// binarized by the sign activation.
class BnnModel {
  public:
    explicit BnnModel(std::vector<std::size_t> dims = kMnistTopology);

    const std::vector<std::size_t> &dims() const { return dims_; }
    std::size_t input_width() const { return dims_.front(); }
    std::size_t num_classes() const { return dims_.back(); }
    std::size_t num_layers() const { return layers_.size(); }

    const DenseLayer &layer(std::size_t i) const { return layers_.at(i); }
    DenseLayer &layer(std::size_t i) { return layers_.at(i); }

    bool operator==(const BnnModel &) const = default;

  private:
    std::vector<std::size_t> dims_;
    std::vector<DenseLayer> layers_;
};

struct InputImage {
    std::vector<std::uint8_t> pixels;

    bool operator==(const InputImage &) const = default;
};

/// Bit b stands for the sign value 2b - 1.
using ActivationVector = std::vector<std::uint8_t>;

struct ClassResult {
    int label = 0;
    std::vector<std::int64_t> scores;

    bool operator==(const ClassResult &) const = default;
};

/// Exact sum of w_i ? +x_i : -x_i plus the bias.
std::int64_t weighted_sum(std::span<const std::int64_t> inputs, std::span<const std::uint8_t> weights,
                          std::int64_t bias);

/// 1 iff sum > 0.
constexpr std::uint8_t sign_activation(std::int64_t sum) { return sum > 0 ? 1 : 0; }

/// Index of the highest score, lowest index on ties.
int argmax_lowest(std::span<const std::int64_t> scores);

/// Pre-activation sums and activations of every layer.
struct ReferencePass {
    std::vector<std::vector<std::int64_t>> sums; // per layer, bias included
    std::vector<ActivationVector> activations;   // hidden layers only
    ClassResult result;
};

ReferencePass forward_reference(const BnnModel &model, const InputImage &image);
ClassResult infer_reference(const BnnModel &model, const InputImage &image);

/// Bias ranges used by generate_model, per layer position.
struct BiasRange {
    std::int32_t first_layer = 1024;
    std::int32_t hidden = 24;
    std::int32_t output = 24;
};

BnnModel generate_model(std::uint64_t seed, const std::vector<std::size_t> &dims = kMnistTopology,
                        BiasRange range = {});
InputImage generate_image(std::uint64_t seed, std::size_t width = 784);

void save_model(const BnnModel &model, const std::filesystem::path &path);
BnnModel load_model(const std::filesystem::path &path);
std::vector<std::uint8_t> serialize_model(const BnnModel &model);
BnnModel deserialize_model(std::span<const std::uint8_t> bytes);

/// FNV-1a 64 over the serialized model.
std::uint64_t model_hash(const BnnModel &model);

/// Raw bytes (exactly `width` of them) or a CSV / whitespace list of integers.
InputImage load_image(const std::filesystem::path &path, std::size_t width = 784);
void save_image(const InputImage &image, const std::filesystem::path &path);

} // namespace bnnsca
