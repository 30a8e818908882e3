// SPDX-License-Identifier: Apache-2.0
#include "shflbw/pipeline.hpp"

#include <json.hpp>

namespace shflbw {

std::string_view iteration_order_name(IterationOrder order) {
    return order == IterationOrder::LoadThenCompute ? "load_then_compute"
                                                    : "compute_then_load";
}

IterationOrder parse_iteration_order(std::string_view name) {
    if (name == "load_then_compute") return IterationOrder::LoadThenCompute;
    if (name == "compute_then_load") return IterationOrder::ComputeThenLoad;
    throw BadParams("unknown iteration order: " + std::string(name));
}

namespace {

struct SlotState {
    bool written = false;
    std::int64_t tag = 0; // load_step of the last stitch into this slot
};

struct Sim {
    const std::int64_t total_step;
    const std::int64_t pipe_stage;
    const std::int64_t mps;
    ScheduleTrace& trace;
    std::vector<SlotState> slots;
    std::int64_t meta_loaded_upto = 0; // steps [0, meta_loaded_upto) covered
    std::int64_t iteration = 0;

    void bulk_load_meta(std::int64_t metaload_step) {
        // The schedule as written has no upper bound here; clamp so the
        // simulator never fetches metadata past the last step.
        if (metaload_step % mps == 0 && metaload_step < total_step) {
            trace.events.push_back({iteration, PipeEventKind::BulkLoadMeta,
                                    metaload_step, -1});
            ++trace.meta_bulk_loads;
            meta_loaded_upto = metaload_step + mps;
        }
    }

    void stitch(std::int64_t load_step) {
        if (load_step < 0 || load_step >= total_step) return;
        const std::int64_t slot = load_step % pipe_stage;
        if (load_step >= meta_loaded_upto)
            trace.hazards.push_back({load_step, slot, "meta_not_loaded"});
        trace.events.push_back(
            {iteration, PipeEventKind::StitchTile, load_step, slot});
        ++trace.stitches;
        slots[std::size_t(slot)] = {true, load_step};
    }

    void mma(std::int64_t step) {
        if (step < 0) return;
        const std::int64_t slot = step % pipe_stage;
        const SlotState& s = slots[std::size_t(slot)];
        if (!s.written)
            trace.hazards.push_back({step, slot, "read_before_write"});
        else if (s.tag != step)
            trace.hazards.push_back({step, slot, "overwrite_before_read"});
        trace.events.push_back(
            {iteration, PipeEventKind::WarpMMA, step, slot});
        ++trace.mmas;
    }
};

} // namespace

ScheduleTrace pipeline_simulate(std::int64_t total_step,
                                const TileConfig& cfg, IterationOrder order,
                                std::int64_t lead) {
    cfg.validate();
    if (total_step < 0) throw BadParams("total_step must be >= 0");
    if (lead <= 0) lead = std::int64_t(cfg.pipe_stage) + 1;

    ScheduleTrace trace;
    trace.total_step = total_step;
    trace.pipe_stage = cfg.pipe_stage;
    trace.meta_prefetch_stage = cfg.meta_prefetch_stage;
    trace.lead = lead;
    trace.order = order;

    Sim sim{total_step, std::int64_t(cfg.pipe_stage),
            std::int64_t(cfg.meta_prefetch_stage), trace,
            std::vector<SlotState>(cfg.pipe_stage)};

    std::int64_t metaload_step = 0;
    std::int64_t load_step = metaload_step - sim.mps;
    std::int64_t step = load_step - lead;

    while (step < total_step) {
        trace.iterations.push_back({metaload_step, load_step, step});
        if (order == IterationOrder::LoadThenCompute) {
            sim.bulk_load_meta(metaload_step);
            sim.stitch(load_step);
            sim.mma(step);
        } else {
            sim.mma(step);
            sim.bulk_load_meta(metaload_step);
            sim.stitch(load_step);
        }
        ++step;
        ++load_step;
        ++metaload_step;
        ++sim.iteration;
    }
    return trace;
}

std::string trace_to_json(const ScheduleTrace& trace, int indent) {
    nlohmann::json hazards = nlohmann::json::array();
    for (const auto& h : trace.hazards)
        hazards.push_back(
            {{"step", h.step}, {"slot", h.slot}, {"kind", h.kind}});
    nlohmann::json doc = {
        {"config",
         {{"total_step", trace.total_step},
          {"pipe_stage", trace.pipe_stage},
          {"meta_prefetch_stage", trace.meta_prefetch_stage},
          {"lead", trace.lead},
          {"order", std::string(iteration_order_name(trace.order))}}},
        {"counters",
         {{"meta_bulk_loads", trace.meta_bulk_loads},
          {"stitches", trace.stitches},
          {"mmas", trace.mmas},
          {"total_step", trace.total_step}}},
        {"hazards", hazards},
    };
    return doc.dump(indent);
}

} // namespace shflbw
