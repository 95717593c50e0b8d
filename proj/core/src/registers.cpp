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

#include "bnnsca/registers.hpp"

#include "bnnsca/common.hpp"

#include <fnmatch.h>
#include <ostream>

namespace bnnsca {

std::uint32_t RegisterMap::add(std::string name, unsigned width, unsigned ordinary_bits) {
    expects(width >= 1 && width <= 64, "register width out of [1, 64]");
    expects(ordinary_bits <= width, "ordinary part wider than the register");
    expects(!logical_by_name_.contains(name), "duplicate register name");
    const auto lid = static_cast<std::uint32_t>(logical_.size());
    LogicalRegister lr{name, width, {}};
    auto add_part = [&](std::string pname, unsigned w, RailKind kind, unsigned offset) {
        const auto id = static_cast<std::uint32_t>(regs_.size());
        by_name_.emplace(pname, id);
        regs_.push_back({std::move(pname), w, kind, lid, offset});
        lr.parts.push_back(id);
    };
    if (ordinary_bits > 0)
        add_part(name, ordinary_bits, RailKind::Ordinary, 0);
    if (ordinary_bits < width)
        add_part(ordinary_bits > 0 ? name + ".msb" : name, width - ordinary_bits, RailKind::DualRail, ordinary_bits);
    logical_by_name_.emplace(name, lid);
    logical_.push_back(std::move(lr));
    return lid;
}

std::optional<std::uint32_t> RegisterMap::find(std::string_view name) const {
    if (auto it = by_name_.find(std::string(name)); it != by_name_.end())
        return it->second;
    return std::nullopt;
}

std::optional<std::uint32_t> RegisterMap::find_logical(std::string_view name) const {
    if (auto it = logical_by_name_.find(std::string(name)); it != logical_by_name_.end())
        return it->second;
    return std::nullopt;
}

std::vector<std::uint8_t> RegisterMap::select(std::span<const std::string> patterns) const {
    std::vector<std::uint8_t> out(regs_.size(), patterns.empty() ? 1 : 0);
    for (const auto &p : patterns)
        for (std::size_t i = 0; i < regs_.size(); ++i)
            if (!out[i] && fnmatch(p.c_str(), regs_[i].name.c_str(), 0) == 0)
                out[i] = 1;
    return out;
}

std::int64_t RegisterMap::combine(std::uint32_t logical, std::span<const std::uint64_t> part_values) const {
    const LogicalRegister &lr = logical_.at(logical);
    expects(part_values.size() == lr.parts.size(), "combine: wrong number of parts");
    std::uint64_t pattern = 0;
    for (std::size_t k = 0; k < lr.parts.size(); ++k) {
        const RegisterInfo &ri = regs_[lr.parts[k]];
        pattern |= to_bits(static_cast<std::int64_t>(part_values[k]), ri.width) << ri.bit_offset;
    }
    return from_bits(pattern, lr.width);
}

void CycleTrace::begin_cycle(std::int64_t cycle) {
    cycles_.push_back(cycle);
    offsets_.push_back(loads_.size());
}

void CycleTrace::load(std::uint32_t reg, std::uint64_t prev, std::uint64_t curr) { loads_.push_back({reg, prev, curr}); }

std::span<const RegisterLoad> CycleTrace::loads(std::size_t i) const {
    const std::size_t b = offsets_[i];
    const std::size_t e = i + 1 < offsets_.size() ? offsets_[i + 1] : loads_.size();
    return {loads_.data() + b, e - b};
}

std::vector<std::pair<std::int64_t, std::int64_t>> CycleTrace::logical_history(const RegisterMap &map,
                                                                                std::uint32_t logical) const {
    const LogicalRegister &lr = map.logical(logical);
    std::vector<std::uint64_t> parts(lr.parts.size(), 0);
    std::vector<std::pair<std::int64_t, std::int64_t>> out;
    for (std::size_t i = 0; i < cycles_.size(); ++i) {
        bool touched = false;
        for (const RegisterLoad &ld : loads(i))
            for (std::size_t k = 0; k < lr.parts.size(); ++k)
                if (ld.reg == lr.parts[k]) {
                    parts[k] = ld.curr;
                    touched = true;
                }
        if (touched)
            out.emplace_back(cycles_[i], map.combine(logical, parts));
    }
    return out;
}

void write_cycle_csv(const CycleTrace &trace, const RegisterMap &map, std::ostream &out) {
    out << "cycle,register_id,prev,curr\n";
    for (std::size_t i = 0; i < trace.cycle_count(); ++i)
        for (const RegisterLoad &ld : trace.loads(i))
            out << trace.cycle(i) << ',' << map.info(ld.reg).name << ',' << ld.prev << ',' << ld.curr << '\n';
}

} // namespace bnnsca
