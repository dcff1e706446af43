// config.hpp — Run configuration: strict sectioned key-value files

#pragma once

#include <optional>
#include <string>

#include "pme/dynamics.hpp"
#include "pme/model.hpp"

namespace pme {

struct RunConfig {
    SiteNetwork net;
    BathSpec bath;
    ComplexMatrix rho0;                 // resolved initial state
    std::optional<ComplexMatrix> rho0_b; // second initial state (trace-distance runs)
    PropagatorConfig prop;
    std::string out_dir{"out"};
    std::vector<std::string> warnings;  // e.g. amplitude renormalization
};

// Parses a config file. Unknown sections or keys are schema errors and carry
// the offending line number. Bath keys may override a model preset.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& text, const std::string& origin = "<config>");

// Serializes a resolved configuration; re-ingesting the result reproduces the
// run. Extra provenance goes into comment lines.
std::string resolved_config_text(const RunConfig& config,
                                 const std::vector<std::string>& comments = {});

} // namespace pme
