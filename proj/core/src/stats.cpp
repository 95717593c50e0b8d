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

#include "bnnsca/stats.hpp"

#include "bnnsca/common.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <functional>
#include <thread>

namespace bnnsca {

double normal_quantile(double level) {
    expects(level > 0.0 && level < 1.0, "confidence level must be in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), level);
}

double confidence_threshold(std::size_t n_traces, double level) {
    expects(n_traces >= 4, "confidence_threshold: needs at least 4 traces");
    return std::tanh(normal_quantile(level) / std::sqrt(double(n_traces - 3)));
}

CorrelationAccumulator::CorrelationAccumulator(std::size_t guesses, std::size_t samples)
    : g_(guesses), t_(samples), mean_h_(guesses, 0.0), m2_h_(guesses, 0.0), mean_t_(samples, 0.0),
      m2_t_(samples, 0.0), c_(guesses * samples, 0.0) {}

template <class T> void CorrelationAccumulator::add_impl(std::span<const double> h, std::span<const T> x) {
    expects(h.size() == g_ && x.size() == t_, "correlation: row sizes do not match the accumulator");
    ++n_;
    const double inv = 1.0 / double(n_);
    // dt_new holds (x - new mean); the co-moment update pairs it with (h - old mean)
    thread_local std::vector<double> dt_new;
    dt_new.resize(t_);
    for (std::size_t t = 0; t < t_; ++t) {
        const double d = double(x[t]) - mean_t_[t];
        mean_t_[t] += d * inv;
        dt_new[t] = double(x[t]) - mean_t_[t];
        m2_t_[t] += d * dt_new[t];
    }
    for (std::size_t g = 0; g < g_; ++g) {
        const double dh = h[g] - mean_h_[g];
        mean_h_[g] += dh * inv;
        m2_h_[g] += dh * (h[g] - mean_h_[g]);
        double *c = c_.data() + g * t_;
        for (std::size_t t = 0; t < t_; ++t)
            c[t] += dh * dt_new[t];
    }
}

void CorrelationAccumulator::add(std::span<const double> predictions, std::span<const float> trace) {
    add_impl(predictions, trace);
}

void CorrelationAccumulator::add(std::span<const double> predictions, std::span<const double> trace) {
    add_impl(predictions, trace);
}

void CorrelationAccumulator::merge(const CorrelationAccumulator &o) {
    expects(o.g_ == g_ && o.t_ == t_, "correlation: merging accumulators of different shapes");
    if (o.n_ == 0)
        return;
    if (n_ == 0) {
        *this = o;
        return;
    }
    const double na = double(n_), nb = double(o.n_), n = na + nb;
    const double f = na * nb / n;
    std::vector<double> dt(t_);
    for (std::size_t t = 0; t < t_; ++t) {
        dt[t] = o.mean_t_[t] - mean_t_[t];
        m2_t_[t] += o.m2_t_[t] + dt[t] * dt[t] * f;
        mean_t_[t] += dt[t] * nb / n;
    }
    for (std::size_t g = 0; g < g_; ++g) {
        const double dh = o.mean_h_[g] - mean_h_[g];
        m2_h_[g] += o.m2_h_[g] + dh * dh * f;
        mean_h_[g] += dh * nb / n;
        for (std::size_t t = 0; t < t_; ++t)
            c_[g * t_ + t] += o.c_[g * t_ + t] + dh * dt[t] * f;
    }
    n_ += o.n_;
}

bool CorrelationAccumulator::degenerate(std::size_t g, std::size_t t) const {
    return n_ < 2 || !(m2_h_[g] > 0.0) || !(m2_t_[t] > 0.0);
}

double CorrelationAccumulator::correlation(std::size_t g, std::size_t t) const {
    if (degenerate(g, t))
        return 0.0;
    const double r = c_[g * t_ + t] / std::sqrt(m2_h_[g] * m2_t_[t]);
    return std::clamp(r, -1.0, 1.0);
}

std::vector<std::size_t> fractional_checkpoints(std::size_t n, double fraction) {
    expects(fraction > 0.0 && fraction <= 1.0, "checkpoint fraction must be in (0, 1]");
    std::vector<std::size_t> out;
    const auto steps = static_cast<std::size_t>(std::llround(1.0 / fraction));
    for (std::size_t k = 1; k <= steps; ++k) {
        const std::size_t c = (n * k + steps - 1) / steps;
        if (c > 0 && (out.empty() || c > out.back()))
            out.push_back(c);
    }
    if (out.empty() || out.back() != n)
        out.push_back(n);
    return out;
}

std::vector<std::size_t> stepped_checkpoints(std::size_t n, std::size_t step) {
    expects(step > 0, "checkpoint step must be positive");
    std::vector<std::size_t> out;
    for (std::size_t c = step; c < n; c += step)
        out.push_back(c);
    out.push_back(n);
    return out;
}

std::size_t CorrelationSurface::peak_sample(std::size_t g) const {
    std::size_t best = 0;
    for (std::size_t t = 1; t < samples; ++t)
        if (std::abs(at(g, t)) > std::abs(at(g, best)))
            best = t;
    return best;
}

CorrelationSurface correlate(std::span<const float> traces, std::size_t n, std::size_t samples,
                             std::span<const double> predictions, std::size_t guesses,
                             std::span<const std::size_t> checkpoints, unsigned threads) {
    expects(predictions.size() == n * guesses, "correlate: prediction matrix does not match the shape");
    return correlate(
        traces, n, samples, guesses,
        [&](std::size_t i, std::span<double> out) {
            std::copy_n(predictions.begin() + std::ptrdiff_t(i * guesses), guesses, out.begin());
        },
        checkpoints, threads);
}

CorrelationSurface correlate(std::span<const float> traces, std::size_t n, std::size_t samples, std::size_t guesses,
                             const PredictionFn &predict, std::span<const std::size_t> checkpoints,
                             unsigned threads) {
    expects(n >= 2, "correlation needs at least 2 traces");
    expects(traces.size() == n * samples, "correlate: trace matrix does not match the shape");
    std::vector<std::size_t> cps(checkpoints.begin(), checkpoints.end());
    if (cps.empty() || cps.back() != n)
        cps.push_back(n);
    expects(std::is_sorted(cps.begin(), cps.end()) && cps.back() == n && cps.front() > 0,
            "checkpoints must be increasing and end at the trace count");

    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    constexpr std::size_t kBlock = 4096;

    CorrelationSurface out;
    out.guesses = guesses;
    out.samples = samples;
    out.checkpoints = cps;
    out.evolution.reserve(cps.size() * guesses * samples);

    CorrelationAccumulator total(guesses, samples);
    auto accumulate = [&](std::size_t b, std::size_t e, CorrelationAccumulator &acc) {
        std::vector<double> h(guesses);
        for (std::size_t i = b; i < e; ++i) {
            predict(i, h);
            acc.add(h, traces.subspan(i * samples, samples));
        }
    };
    std::size_t done = 0;
    for (std::size_t cp : cps) {
        // fixed blocks of kBlock traces, merged in order
        std::vector<std::pair<std::size_t, std::size_t>> blocks;
        for (std::size_t b = done; b < cp; b += kBlock)
            blocks.emplace_back(b, std::min(cp, b + kBlock));
        std::vector<CorrelationAccumulator> parts(blocks.size(), CorrelationAccumulator(guesses, samples));
        if (threads > 1 && blocks.size() > 1) {
            std::vector<std::thread> pool;
            for (unsigned w = 0; w < threads; ++w)
                pool.emplace_back([&, w] {
                    for (std::size_t k = w; k < blocks.size(); k += threads)
                        accumulate(blocks[k].first, blocks[k].second, parts[k]);
                });
            for (auto &th : pool)
                th.join();
        } else {
            for (std::size_t k = 0; k < blocks.size(); ++k)
                accumulate(blocks[k].first, blocks[k].second, parts[k]);
        }
        for (const auto &p : parts)
            total.merge(p);
        done = cp;
        for (std::size_t g = 0; g < guesses; ++g)
            for (std::size_t t = 0; t < samples; ++t)
                out.evolution.push_back(total.correlation(g, t));
    }
    out.rho.resize(guesses * samples);
    out.degenerate.resize(guesses * samples);
    for (std::size_t g = 0; g < guesses; ++g)
        for (std::size_t t = 0; t < samples; ++t) {
            out.rho[g * samples + t] = total.correlation(g, t);
            out.degenerate[g * samples + t] = total.degenerate(g, t) ? 1 : 0;
        }
    return out;
}

namespace {

std::optional<std::size_t> first_stable(std::span<const std::size_t> checkpoints, std::span<const double> values,
                                        const std::function<bool(std::size_t, double)> &passes) {
    expects(checkpoints.size() == values.size(), "crossing: one value per checkpoint required");
    std::optional<std::size_t> since;
    for (std::size_t k = 0; k < checkpoints.size(); ++k) {
        if (passes(checkpoints[k], values[k])) {
            if (!since)
                since = checkpoints[k];
        } else {
            since.reset();
        }
    }
    return since;
}

} // namespace

std::optional<std::size_t> first_crossing(std::span<const std::size_t> checkpoints, std::span<const double> values,
                                          double level) {
    return first_stable(checkpoints, values, [level](std::size_t n, double v) {
        return n >= 4 && std::abs(v) >= confidence_threshold(n, level);
    });
}

std::vector<float> center_square(std::span<const float> traces, std::size_t n, std::size_t samples) {
    expects(n >= 2, "center_square needs at least 2 traces");
    expects(traces.size() == n * samples, "center_square: matrix size does not match the shape");
    std::vector<double> mean(samples, 0.0);
    // running means keep the result independent of the sample offset
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < samples; ++t)
            mean[t] += (double(traces[i * samples + t]) - mean[t]) / double(i + 1);
    std::vector<float> out(traces.size());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < samples; ++t) {
            const double d = double(traces[i * samples + t]) - mean[t];
            out[i * samples + t] = static_cast<float>(d * d);
        }
    return out;
}

TraceSet center_square(const TraceSet &traces) {
    TraceSet out = traces;
    out.samples = center_square(traces.samples, traces.n_traces, traces.n_samples);
    out.metadata["preprocess"] = "center-square";
    return out;
}

MeanDiffAccumulator::MeanDiffAccumulator(std::size_t samples) : t_(samples) {
    for (int g = 0; g < 2; ++g) {
        mean_[g].assign(samples, 0.0);
        m2_[g].assign(samples, 0.0);
    }
}

void MeanDiffAccumulator::add(std::uint8_t label, std::span<const float> trace) {
    expects(trace.size() == t_, "difference of means: trace length does not match");
    const int g = label & 1;
    const double inv = 1.0 / double(++n_[g]);
    for (std::size_t t = 0; t < t_; ++t) {
        const double d = double(trace[t]) - mean_[g][t];
        mean_[g][t] += d * inv;
        m2_[g][t] += d * (double(trace[t]) - mean_[g][t]);
    }
}

void MeanDiffAccumulator::merge(const MeanDiffAccumulator &o) {
    expects(o.t_ == t_, "difference of means: merging different shapes");
    for (int g = 0; g < 2; ++g) {
        if (o.n_[g] == 0)
            continue;
        const double na = double(n_[g]), nb = double(o.n_[g]), n = na + nb;
        for (std::size_t t = 0; t < t_; ++t) {
            const double d = o.mean_[g][t] - mean_[g][t];
            m2_[g][t] += o.m2_[g][t] + d * d * na * nb / n;
            mean_[g][t] += d * nb / n;
        }
        n_[g] += o.n_[g];
    }
}

double MeanDiffAccumulator::difference(std::size_t t) const { return mean_[1][t] - mean_[0][t]; }

double MeanDiffAccumulator::welch(std::size_t t) const {
    if (n_[0] < 2 || n_[1] < 2)
        return 0.0;
    const double v0 = m2_[0][t] / double(n_[0] - 1), v1 = m2_[1][t] / double(n_[1] - 1);
    const double se = std::sqrt(v0 / double(n_[0]) + v1 / double(n_[1]));
    return se > 0.0 ? difference(t) / se : 0.0;
}

MeanDiffResult difference_of_means(const TraceSet &traces, std::span<const std::uint8_t> labels,
                                   std::size_t target_sample, std::span<const std::size_t> checkpoints,
                                   double level) {
    expects(labels.size() == traces.n_traces, "difference of means: one label per trace required");
    expects(target_sample < traces.n_samples, "difference of means: target sample out of range");
    std::size_t ones = 0;
    for (auto l : labels)
        ones += l & 1;
    expects(ones > 0 && ones < labels.size(), "difference of means: a partition is empty");

    std::vector<std::size_t> cps(checkpoints.begin(), checkpoints.end());
    if (cps.empty() || cps.back() != traces.n_traces)
        cps.push_back(traces.n_traces);

    MeanDiffResult r;
    r.z = normal_quantile(level);
    r.checkpoints = cps;
    MeanDiffAccumulator acc(traces.n_samples);
    std::size_t i = 0;
    std::vector<double> at_target;
    for (std::size_t cp : cps) {
        for (; i < cp; ++i)
            acc.add(labels[i], traces.row(i));
        for (std::size_t t = 0; t < traces.n_samples; ++t)
            r.welch_evolution.push_back(acc.welch(t));
        at_target.push_back(acc.welch(target_sample));
    }
    for (std::size_t t = 0; t < traces.n_samples; ++t) {
        r.difference.push_back(acc.difference(t));
        r.welch.push_back(acc.welch(t));
    }
    const double z = r.z;
    r.crossing = first_stable(cps, at_target, [z](std::size_t, double v) { return std::abs(v) >= z; });
    return r;
}

} // namespace bnnsca
