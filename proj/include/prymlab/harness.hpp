#pragma once

#include "identity.hpp"
#include "io.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

// Configuration-driven runs of the verification suites and their machine-readable reports.

namespace prymlab {

inline constexpr int kReportSchemaVersion = 1;

struct RunConfig {
    std::string command = "all";
    std::string target; // identity for `verify`
    io::json curve;     // {"h_roots": [...]} or {"h_coeffs": [...]}
    std::array<cplx, 3> marked_x{};
    cplx extra_x{};
    ThetaPolicy policy;

    IndexWindow a_window{0, 5, 0, 5};
    IndexWindow five_term_window{0, 4, 0, 4};
    IndexWindow four_point_window{0, 3, 0, 3};
    IndexWindow nv_window{-30, 30, 0, 18};     // tau grid for the operator checks
    IndexWindow nv_fit_window{-10, 10, 0, 8};  // tau grid per sample of the derivative fit
    int nv_s_max = 8;

    int z_samples = 25;
    int five_term_samples = 10;
    int divisor_samples = 10;
    int nv_fit_samples = 6;
    int four_point_samples = 3;

    std::map<std::string, double> tolerances; // every key of default_tolerances(), filled in by the parser
    std::uint64_t seed = 1;
    int threads = 1;
    double perturbation = 1e-3; // negative-control magnitude

    io::json effective; // the parsed document with defaults applied, as hashed
};

const std::map<std::string, double>& default_tolerances();

// Throws ConfigError naming the offending field path ("config.marked_x: missing").
RunConfig parse_config(const io::json& doc);
RunConfig load_config(const std::filesystem::path& file);
void apply_seed(RunConfig& c, std::uint64_t seed);

struct RunReport {
    int schema_version = kReportSchemaVersion;
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    int genus = 0;
    // identities that hold only on Prym data; every one must fail under the negative control
    std::vector<IdentityReport> identities;
    // consistency checks that hold for any period matrix or any tau (period quadrature, operator algebra)
    std::vector<IdentityReport> checks;
    std::optional<SchroedingerConstants> constants;
    std::optional<double> w_sign;
    std::optional<bool> even_is_upper;
    io::json details = io::json::object();
    double wall_time_s = 0.0; // not part of the determinism contract
    bool pass = false;

    void conclude();
};

RunReport run(const RunConfig& config);
// The full suite with Pi moved off the Prym locus by `perturbation` in a symmetric pattern, while
// A, U, V, W and the constants stay those of the genuine data.
RunReport negative_control(const RunConfig& config, double perturbation);

io::json report_json(const RunReport& r);
RunReport report_from(const io::json& j, const std::string& path = "report");

// report.json and residuals.csv under `dir`, overwritten if present. Throws IoError.
void emit_report(const RunReport& r, const std::filesystem::path& dir);
RunReport load_report(const std::filesystem::path& dir);

// 0 pass, 1 fail, 2 configuration or output error, 3 numerical error
int exit_code(const RunReport& r);
int exit_code(Errc e);

std::string sha256_hex(const std::string& bytes);

} // namespace prymlab
