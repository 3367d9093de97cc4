#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dtlfssc::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 2,
    exit_solver = 3,
};

/// Parameter values shipped with the tool, selected by `--preset`.
struct Preset {
    double alpha;
    double beta;
    double tau;
    double lambda;
    double tau1;
};

/// "motion" or "digits"; throws ConfigError for anything else.
Preset preset_by_name(const std::string& name);

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace dtlfssc::cli
