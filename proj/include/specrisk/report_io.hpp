#pragma once

#include <string>

#include <specrisk/problem.hpp>
#include <specrisk/solver.hpp>

namespace specrisk {

inline constexpr const char* kReportSchema = "specrisk-report/1";

struct ReportOptions
{
   bool trace = true;
   /// Wall time is the only field that differs between identical runs.
   bool timing = true;
   /// JSON object whose members are added at the top level.
   std::string extra = "{}";
};

std::string report_json( const SolveReport& report, const ProblemSpec& problem,
                         const SolverConfig& config,
                         const ReportOptions& options = {} );

} // namespace specrisk
