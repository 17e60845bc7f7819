#pragma once

// Builders mapping a parsed RunConfig onto domain objects. Shared by the
// CLI subcommands and the test harnesses.

#include <optional>

#include "facet/actmax.hpp"
#include "facet/config.hpp"
#include "facet/dataset.hpp"
#include "facet/network.hpp"

namespace facet {

// "layer:index" or "layer:index@r,c"
UnitSelector parse_unit(const std::string& text);

ShapesSpec shapes_spec_from_config(const RunConfig& cfg);

// [dataset] path = <exported dir> or preset = default|two_facet
LabeledDataset dataset_from_config(const RunConfig& cfg);

// clamp bounds from the dataset pixel range after mean subtraction
void default_clamp_from_dataset(const LabeledDataset* ds, float& lo, float& hi);

AMConfig am_from_config(const RunConfig& cfg, const Network& net, const LabeledDataset* ds);

// [schedule]: canvas/lambda/learning_rate list phases 1-3 (4-5 reuse phase
// 3), iterations lists all five; geometry rescales through base_input.
PhaseSchedule schedule_from_config(const RunConfig& cfg, const LabeledDataset* ds);

extern const std::vector<std::string> kDatasetKeys;
extern const std::vector<std::string> kAmKeys;
extern const std::vector<std::string> kScheduleKeys;

}  // namespace facet
