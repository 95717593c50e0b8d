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

#include "bnnsca/leakage.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace bnnsca {

/// Default confidence level of every threshold in the toolkit.
inline constexpr double kConfidenceLevel = 0.9999;

/// One-sided standard normal quantile; z(0.9999) = 3.719.
double normal_quantile(double level);

/// |rho| above which a correlation over n traces is significant:
/// tanh(z(level) / sqrt(n - 3)) (Fisher transformation). Requires n >= 4.
double confidence_threshold(std::size_t n_traces, double level = kConfidenceLevel);

/// Streaming Pearson correlation of G predictors against T sample columns.
/// Uses co-moment (Welford) updates; two accumulators over disjoint trace
/// sets merge exactly as if the traces had been added to one (Chan et al.).
class CorrelationAccumulator {
  public:
    CorrelationAccumulator(std::size_t guesses, std::size_t samples);

    std::size_t guesses() const { return g_; }
    std::size_t samples() const { return t_; }
    std::size_t count() const { return n_; }

    void add(std::span<const double> predictions, std::span<const float> trace);
    void add(std::span<const double> predictions, std::span<const double> trace);
    void merge(const CorrelationAccumulator &other);

    /// 0 when either column has zero variance (see degenerate()).
    double correlation(std::size_t guess, std::size_t sample) const;
    bool degenerate(std::size_t guess, std::size_t sample) const;

  private:
    template <class T> void add_impl(std::span<const double> h, std::span<const T> x);

    std::size_t g_, t_;
    std::size_t n_ = 0;
    std::vector<double> mean_h_, m2_h_, mean_t_, m2_t_, c_;
};

/// Trace counts at which a running statistic is recorded. `fraction` 0.05
/// gives one checkpoint every 5% of the traces; the last one is always n.
std::vector<std::size_t> fractional_checkpoints(std::size_t n, double fraction = 0.05);
std::vector<std::size_t> stepped_checkpoints(std::size_t n, std::size_t step);

/// rho[guess][sample] after all traces, plus the same matrix at each checkpoint.
struct CorrelationSurface {
    std::size_t guesses = 0;
    std::size_t samples = 0;
    std::vector<double> rho;
    std::vector<std::uint8_t> degenerate;
    std::vector<std::size_t> checkpoints;
    std::vector<double> evolution; ///< [checkpoint][guess][sample]

    double at(std::size_t g, std::size_t t) const { return rho[g * samples + t]; }
    double evolution_at(std::size_t k, std::size_t g, std::size_t t) const {
        return evolution[(k * guesses + g) * samples + t];
    }
    /// Sample index maximizing |rho| for a guess.
    std::size_t peak_sample(std::size_t g) const;
};

/// Correlates predictions (n x G, row-major) with traces (n x T, row-major).
/// Traces are processed in fixed blocks merged in order, so the result does
/// not depend on `threads`.
CorrelationSurface correlate(std::span<const float> traces, std::size_t n, std::size_t samples,
                             std::span<const double> predictions, std::size_t guesses,
                             std::span<const std::size_t> checkpoints, unsigned threads = 0);

/// Fills the G predictions of trace i. Called concurrently for distinct traces.
using PredictionFn = std::function<void(std::size_t, std::span<double>)>;

/// As above with predictions computed on the fly, one block at a time.
CorrelationSurface correlate(std::span<const float> traces, std::size_t n, std::size_t samples, std::size_t guesses,
                             const PredictionFn &predict, std::span<const std::size_t> checkpoints,
                             unsigned threads = 0);

/// First checkpoint from which |value| stays at or above the threshold for
/// the checkpoint's trace count.
std::optional<std::size_t> first_crossing(std::span<const std::size_t> checkpoints, std::span<const double> values,
                                          double level = kConfidenceLevel);

/// Subtracts each column's mean, then squares every sample.
TraceSet center_square(const TraceSet &traces);
std::vector<float> center_square(std::span<const float> traces, std::size_t n, std::size_t samples);

/// Two-group running means and variances per sample.
class MeanDiffAccumulator {
  public:
    explicit MeanDiffAccumulator(std::size_t samples);

    void add(std::uint8_t label, std::span<const float> trace);
    void merge(const MeanDiffAccumulator &other);

    std::size_t count(std::uint8_t label) const { return n_[label & 1]; }
    /// mean(group 1) - mean(group 0)
    double difference(std::size_t sample) const;
    /// Welch statistic: difference over its standard error.
    double welch(std::size_t sample) const;

  private:
    std::size_t t_;
    std::size_t n_[2] = {0, 0};
    std::vector<double> mean_[2], m2_[2];
};

struct MeanDiffResult {
    std::vector<double> difference; ///< per sample
    std::vector<double> welch;      ///< per sample
    std::vector<std::size_t> checkpoints;
    std::vector<double> welch_evolution; ///< [checkpoint][sample]
    double z = 0;                        ///< interval half-width in standard errors
    std::optional<std::size_t> crossing; ///< at target_sample
};

/// Difference of means between traces labelled 1 and 0. The 99.99% interval
/// excludes zero once |welch| >= z(level).
MeanDiffResult difference_of_means(const TraceSet &traces, std::span<const std::uint8_t> labels,
                                   std::size_t target_sample, std::span<const std::size_t> checkpoints,
                                   double level = kConfidenceLevel);

} // namespace bnnsca
