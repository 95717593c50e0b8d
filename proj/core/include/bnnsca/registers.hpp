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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bnnsca {

enum class RailKind : std::uint8_t { Ordinary, DualRail };

/// A physical register: the unit of leakage. Values are unsigned bit patterns.
struct RegisterInfo {
    std::string name;
    unsigned width = 0;
    RailKind kind = RailKind::Ordinary;
    std::uint32_t logical = 0;  ///< owning logical register
    unsigned bit_offset = 0;    ///< position of this part inside the logical value
};

/// A datapath register as the design sees it. In the masked build its low
/// bits are ordinary flip-flops and the sign bits sit in a dual-rail part
/// named "<name>.msb".
struct LogicalRegister {
    std::string name;
    unsigned width = 0;
    std::vector<std::uint32_t> parts;
};

class RegisterMap {
  public:
    /// Adds a logical register whose low `ordinary_bits` are ordinary and the
    /// remaining high bits dual-rail. Returns the logical id.
    std::uint32_t add(std::string name, unsigned width, unsigned ordinary_bits);
    std::uint32_t add(std::string name, unsigned width) { return add(std::move(name), width, width); }

    std::size_t size() const { return regs_.size(); }
    const RegisterInfo &info(std::uint32_t id) const { return regs_.at(id); }
    std::size_t logical_count() const { return logical_.size(); }
    const LogicalRegister &logical(std::uint32_t id) const { return logical_.at(id); }

    std::optional<std::uint32_t> find(std::string_view name) const;
    std::optional<std::uint32_t> find_logical(std::string_view name) const;

    /// Physical registers whose name matches any of the shell-style globs
    /// (an empty list selects everything). One flag per register.
    std::vector<std::uint8_t> select(std::span<const std::string> patterns) const;

    /// Logical value from the bit patterns of its parts, sign-extended.
    std::int64_t combine(std::uint32_t logical, std::span<const std::uint64_t> part_values) const;

  private:
    std::vector<RegisterInfo> regs_;
    std::vector<LogicalRegister> logical_;
    std::unordered_map<std::string, std::uint32_t> by_name_;
    std::unordered_map<std::string, std::uint32_t> logical_by_name_;
};

/// Receives the register loads of a simulation, cycle by cycle. Cycles are
/// reported in increasing order, including cycles without loads.
class CycleSink {
  public:
    virtual ~CycleSink() = default;
    virtual void begin_cycle(std::int64_t cycle) = 0;
    virtual void load(std::uint32_t reg, std::uint64_t prev, std::uint64_t curr) = 0;
    virtual void end_cycle() {}
};

struct RegisterLoad {
    std::uint32_t reg = 0;
    std::uint64_t prev = 0;
    std::uint64_t curr = 0;
    bool operator==(const RegisterLoad &) const = default;
};

/// In-memory record of every load. Meant for reduced topologies and filtered
/// runs; a full-size unfiltered run holds millions of loads.
class CycleTrace : public CycleSink {
  public:
    void begin_cycle(std::int64_t cycle) override;
    void load(std::uint32_t reg, std::uint64_t prev, std::uint64_t curr) override;

    std::size_t cycle_count() const { return cycles_.size(); }
    std::int64_t cycle(std::size_t i) const { return cycles_[i]; }
    std::span<const RegisterLoad> loads(std::size_t i) const;
    std::size_t load_count() const { return loads_.size(); }

    /// (cycle, value) for every cycle in which any part of the logical
    /// register was loaded. Parts not loaded in that cycle keep their last value.
    std::vector<std::pair<std::int64_t, std::int64_t>> logical_history(const RegisterMap &map,
                                                                        std::uint32_t logical) const;

    bool operator==(const CycleTrace &o) const {
        return cycles_ == o.cycles_ && offsets_ == o.offsets_ && loads_ == o.loads_;
    }

  private:
    std::vector<std::int64_t> cycles_;
    std::vector<std::size_t> offsets_;
    std::vector<RegisterLoad> loads_;
};

/// CSV export: cycle,register_id,prev,curr.
void write_cycle_csv(const CycleTrace &trace, const RegisterMap &map, std::ostream &out);

} // namespace bnnsca
