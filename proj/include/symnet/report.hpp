#pragma once

#include "symnet/engine.hpp"
#include "symnet/verify.hpp"

#include <string>
#include <vector>

namespace symnet {

struct ReportOptions {
    /// Solver wall time is omitted (reported as 0) unless requested.
    bool timing = false;
    int indent = 2;
};

/// `{paths:[...], stats:{pathCount, solverCalls, solverMillis}, loops?:[...]}`.
std::string report_json(const std::vector<PathReport>& paths, const EngineStats& stats,
                        const std::vector<LoopReport>* loops = nullptr, ReportOptions options = {});

} // namespace symnet
