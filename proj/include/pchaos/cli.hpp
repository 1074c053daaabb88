#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pchaos::cli {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ParamType { integer, real, string, real_list };

struct ParamSpec {
    std::string key;
    ParamType type = ParamType::real;
    std::string fallback;  // default value as written in the manifest
    std::string help;
    std::vector<std::string> choices;  // string parameters only; empty = free
};

using Sections = std::map<std::string, std::map<std::string, std::string>>;

// Resolved configuration: section "run" holds out/seed, the subcommand's section holds its parameters.
struct ExperimentConfig {
    std::string subcommand;
    Sections sections;
    std::filesystem::path out;
    std::uint64_t seed = 1;

    const std::string& raw(const std::string& key) const;
    long get_int(const std::string& key) const;
    double get_real(const std::string& key) const;
    const std::string& get_string(const std::string& key) const;
    std::vector<double> get_list(const std::string& key) const;
    void set(const std::string& key, const std::string& value);  // derived defaults
};

const std::vector<std::string>& subcommands();
const std::vector<ParamSpec>& parameters(const std::string& subcommand);

// "[name]" sections with "key = value" lines; '#' and ';' start comments.
Sections parse_ini(std::istream& is);

// Defaults ← file ← flags; validates types, choices and unknown keys.
ExperimentConfig resolve(const std::string& subcommand, const Sections& file,
                         const std::map<std::string, std::string>& flags);

void write_manifest(std::ostream& os, const ExperimentConfig& cfg);

struct ScalingReport {
    std::vector<int> N;
    std::vector<double> H1;
    double slope = 0.0, stderr_slope = 0.0;
    double slope_nm1 = 0.0, stderr_nm1 = 0.0;  // against log(N − 1)
    bool degenerate = false;
    std::string note;
};

// H¹ at the final time of the Liouville solution for each N, with log-log least-squares fits.
ScalingReport scaling_study(const ExperimentConfig& cfg);

// Exit codes: 0 success, 1 a checked inequality or identity failed, 2 usage/config error.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace pchaos::cli
