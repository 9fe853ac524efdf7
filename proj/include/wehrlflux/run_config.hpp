#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wehrlflux/dicke_gaussian.hpp"
#include "wehrlflux/kerr_params.hpp"

namespace wehrlflux {

inline constexpr int kConfigSchemaVersion = 1;

enum class ModelKind { kerr, dicke, cavity };

const char* model_name(ModelKind m);

/// Batch run description read from JSON.
///
/// {
///   "schema_version": 1,
///   "model": "kerr",
///   "params": {"detuning": -2, "nonlinearity": 1, "kappa": 0.5},
///   "sweep": {"N": [10, 20], "eps": {"min": 0.5, "max": 1.4, "count": 40}},
///   "numerics": {"points_per_axis": 128},
///   "output": "kerr.csv"
/// }
///
/// Dicke runs take params omega0, omega, kappa, gamma and a sweep over
/// "lambda" or "lambda_over_lc"; cavity runs take params drive and kappa.
/// Any sweep axis is either a list or a {min, max, count} range.
struct RunConfig {
    int schema_version = kConfigSchemaVersion;
    ModelKind model = ModelKind::kerr;
    KerrParams kerr;    // kerr and cavity
    DickeParams dicke;
    std::vector<int> N_list{1};
    /// eps for kerr, drive for cavity, absolute lambda for dicke
    std::vector<double> scan;

    int n_max = 0;  // 0 = cutoff rule
    int points_per_axis = 128;
    double balance_tol = 1e-2;
    bool certify_cutoff = true;
    bool compute_gap = true;
    bool record_timing = false;  // non-zero wall times make output non-reproducible
    std::int64_t mc_samples = 0;  // dicke only: Monte-Carlo cross-check per point
    std::uint64_t seed = 1;

    std::string output;  // resolved against the config file's directory
    std::string canonical;  // normalised JSON text the hash is taken over
};

/// Parses and validates a configuration. Throws ConfigError carrying the line
/// of the offending text where one can be found.
RunConfig parse_config(const std::string& text, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

/// 64-bit FNV-1a of the canonical JSON, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);
std::string fnv1a_hex(const std::string& data);

}  // namespace wehrlflux
