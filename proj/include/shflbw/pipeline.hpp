// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shflbw/spmm.hpp"

namespace shflbw {

// Step-level simulator of the metadata-prefetch software pipeline:
// three counters advance together, offset so that metadata runs
// MetaPrefetchStage steps ahead of tile loads, which run `lead` steps
// ahead of compute. One StitchTile buffer slot per pipe stage.

enum class IterationOrder {
    LoadThenCompute, // BulkLoadMeta, StitchTile, WarpMMA (statement order)
    ComputeThenLoad, // WarpMMA first, then the loads
};

std::string_view iteration_order_name(IterationOrder order);
IterationOrder parse_iteration_order(std::string_view name); // throws BadParams

enum class PipeEventKind { BulkLoadMeta, StitchTile, WarpMMA };

struct PipeEvent {
    std::int64_t iteration = 0;
    PipeEventKind kind = PipeEventKind::BulkLoadMeta;
    std::int64_t step = 0; // the counter value the event acted on
    std::int64_t slot = -1; // buffer slot, -1 for BulkLoadMeta
};

struct PipeHazard {
    std::int64_t step = 0;
    std::int64_t slot = 0;
    std::string kind; // overwrite_before_read | read_before_write | meta_not_loaded
};

struct IterationRecord {
    std::int64_t metaload_step = 0;
    std::int64_t load_step = 0;
    std::int64_t step = 0;
};

struct ScheduleTrace {
    std::int64_t total_step = 0;
    std::uint32_t pipe_stage = 0;
    std::uint32_t meta_prefetch_stage = 0;
    std::int64_t lead = 0;
    IterationOrder order = IterationOrder::LoadThenCompute;

    std::vector<IterationRecord> iterations;
    std::vector<PipeEvent> events;
    std::vector<PipeHazard> hazards;

    std::int64_t meta_bulk_loads = 0;
    std::int64_t stitches = 0;
    std::int64_t mmas = 0;
};

// lead <= 0 selects the literal schedule's offset, pipe_stage + 1.
// Counters always come out as meta_bulk_loads = ceil(total_step / MPS),
// stitches = mmas = total_step; hazards record every buffer-slot conflict:
// an MMA reading a slot last written for a different step, a read of a
// never-written slot, or a stitch issued before its metadata bulk.
ScheduleTrace pipeline_simulate(std::int64_t total_step, const TileConfig& cfg,
                                IterationOrder order, std::int64_t lead = 0);

// {config, counters, hazards:[{step, slot, kind}]}
std::string trace_to_json(const ScheduleTrace& trace, int indent = 2);

} // namespace shflbw
