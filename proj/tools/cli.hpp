/// @file  cli.hpp
/// @brief Command-line front end: configuration store and subcommands.

#pragma once

#include <ordmargin/experiments.hpp>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace ordmargin::cli {

enum ExitCode : int {
    kOk = 0,
    kConfigError = 2,
    kSolverError = 3,
    kIoError = 4,
};

/// Flat `section.key = value` configuration with a fixed key set. Unknown
/// keys are rejected. List-valued keys take comma-separated values.
class ConfigStore {
public:
    ConfigStore();

    /// Reads `section.key = value` lines; '#' starts a comment.
    void loadFile(const std::string& path);
    void set(const std::string& key, const std::string& value);
    /// "key=value"
    void applyOverride(const std::string& assignment);

    const std::string& get(const std::string& key) const;
    bool isExplicit(const std::string& key) const;

    double getDouble(const std::string& key) const;
    int getInt(const std::string& key) const;
    std::uint64_t getU64(const std::string& key) const;
    std::vector<double> getDoubleList(const std::string& key) const;
    std::vector<int> getIntList(const std::string& key) const;
    std::vector<std::string> getList(const std::string& key) const;

    const std::map<std::string, std::string>& values() const { return values_; }

    /// Documentation line per key, for --help.
    static const std::map<std::string, std::string>& documentation();

private:
    std::map<std::string, std::string> values_;
    std::map<std::string, bool> explicit_;
};

SyntheticSpec syntheticSpec(const ConfigStore& cfg);
DatasetSource datasetSource(const ConfigStore& cfg);

/// DMOE configurations for every (lambda, nu) pair in the configured grids.
std::vector<DmoeConfig> dmoeGrid(const ConfigStore& cfg, int p);
/// Baseline configurations (GNMDS iterates its gamma0 grid).
std::vector<BaselineConfig> baselineGrid(const ConfigStore& cfg, BaselineMethod method, int p);

ExperimentPlan buildPlan(const ConfigStore& cfg);

/// Runs the CLI; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace ordmargin::cli
