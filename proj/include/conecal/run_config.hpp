#pragma once

#include "conecal/minimality_lab.hpp"
#include "conecal/verifier.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace conecal {

enum class Command { identities, threshold, verify, flux, mincut };

const char* to_string(Command command);
/// Throws std::invalid_argument on an unknown name.
Command command_from_string(const std::string& name);

/// Everything a run depends on. Serializes to JSON and back; the JSON form is what
/// a --config file holds and what is echoed into the report.
struct RunConfig {
    Command command = Command::identities;
    std::string out_dir = "conecal-out";
    IdentitySuiteConfig identities;
    ThresholdSuiteConfig threshold;
    CalibrationSuiteConfig verify;
    FluxSuiteConfig flux;
    MincutSuiteConfig mincut;
    /// When nonempty, `mincut` runs these cases instead of the fixed suite.
    std::vector<MincutCase> mincut_cases;
    /// `mincut` only: also write each case's problem dump to the output directory.
    bool dump_problems = false;

    /// The command and the section it reads.
    Json to_json() const;
    /// Every section.
    Json to_json_full() const;

    /// Overlays a JSON object on this config. Keys are "command", "out" and one
    /// object per section ("identities", "threshold", "verify", "flux", "mincut");
    /// absent keys keep their current value, unknown keys throw std::invalid_argument.
    void merge(const Json& j);
};

/// The flags shared by every subcommand. Unset flags leave the config untouched.
struct CommonFlags {
    std::optional<std::vector<int>> n;
    std::optional<std::vector<LambdaChoice>> lambda;
    std::optional<double> gamma;
    std::optional<std::uint64_t> seed;
    std::optional<int> samples;
    std::optional<double> step;
    std::optional<double> tol;
    std::optional<std::string> out;
    std::optional<double> metric_fault;
    std::optional<double> spacing;
};

/// Applies the flags to the section of config.command. --tol sets the tolerance that
/// decides the command's headline check: identities -> identity, threshold ->
/// bisection and threshold, verify -> divergence, flux -> cone_face, mincut -> tol_h.
/// --step s sets identity step s and verify steps {10 s, s}. For mincut, --n,
/// --lambda or --spacing switch to explicit cases; missing values default to the
/// suite's unstable case for n = 2 and its minimal case otherwise.
/// Throws std::invalid_argument when a flag has no meaning for the command.
void apply_flags(RunConfig& config, const CommonFlags& flags);

/// Defaults, then the file (if any), then the flags.
RunConfig resolve_config(Command command, const std::optional<std::string>& config_path,
                         const CommonFlags& flags);

/// Runs the command's suite and stores the effective config in the report.
VerificationReport run(const RunConfig& config);

}  // namespace conecal
