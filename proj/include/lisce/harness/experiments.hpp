#pragma once

// Experiment execution: runs the configured experiment, writes its CSVs,
// charts, and artifacts under cfg.out, and finishes with an atomically
// written manifest. A failing run removes everything it wrote.

#include "lisce/harness/config.hpp"
#include "lisce/harness/manifest.hpp"

namespace lisce::harness {

RunManifest run_experiment(const ExperimentConfig& cfg);

}  // namespace lisce::harness
