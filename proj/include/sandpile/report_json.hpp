#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "sandpile/config.hpp"
#include "sandpile/control.hpp"
#include "sandpile/state_solver.hpp"
#include "sandpile/verify.hpp"

namespace sandpile {

inline constexpr const char* kFormatVersion = "sandpile-report/1";

nlohmann::json grid_json(const Grid& g);
nlohmann::json params_json(const SolverParams& p);
nlohmann::json config_json(const Config& cfg);
/// Per-iteration arrays of one solve. Wall time is kept under "timing" so that
/// callers comparing runs can drop it.
nlohmann::json run_report_json(const RunReport& r);

/// Full solve document: format version, resolved config, grid and stages.
nlohmann::json solve_document(const Config& cfg, const std::vector<RunReport>& stages,
                              const std::string& status, const std::string& failure = {});
nlohmann::json trace_document(const Config& cfg, const OptimizeResult& res);
nlohmann::json verdict_document(const std::vector<Check>& checks, const std::string& selector,
                                std::uint64_t seed, const Config* cfg = nullptr);

/// Copy with every "timing" member removed, for bitwise run comparison.
nlohmann::json without_timing(nlohmann::json doc);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace sandpile
