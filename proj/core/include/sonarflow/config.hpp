#pragma once

#include <string>

#include "sonarflow/tracking.hpp"

namespace sonarflow {

/// Flat JSON object keyed like the CLI flags (fb_levels, max_gap, ...).
std::string pipeline_config_to_json(const PipelineConfig& cfg);

/// Applies the keys present in `text` on top of `base`. A run-metadata file
/// is accepted too; its "pipeline" member is used. Unknown keys are rejected.
PipelineConfig pipeline_config_from_json(const std::string& text, PipelineConfig base = {});

}  // namespace sonarflow
