#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "windtrade/calib.hpp"
#include "windtrade/mc.hpp"

namespace windtrade::cli {

/// Seconds since the Unix epoch. Accepts YYYY-MM-DDTHH:MM[:SS[.fff]] followed
/// by Z or a +HH:MM / -HH:MM offset; naive timestamps are rejected.
double parse_timestamp(std::string_view text);
std::string format_timestamp(double seconds);

struct ProductionRecord {
    double time;
    double power_kw;
};

struct ForecastRecord {
    double issue;
    double target;
    double forecast_kw;
};

/// Header `timestamp,power`. Throws ParseError naming file and line.
std::vector<ProductionRecord> read_production_csv(const std::filesystem::path& file);
/// Header `issue_time,target_time,forecast`; target must follow issue.
std::vector<ForecastRecord> read_forecast_csv(const std::filesystem::path& file);

/// power / rated clamped to [0, 1]; `clamped` counts values moved.
double normalize_power(double kw, double rated_kw, std::size_t& clamped);

/// Pairs each forecast with the production sample nearest its target time,
/// within `tolerance_s`. Unmatched forecasts are counted in `dropped`.
std::vector<ForecastErrorPair> align_forecasts(const std::vector<ForecastRecord>& forecasts,
                                               const std::vector<ProductionRecord>& production, double rated_kw,
                                               double tolerance_s, std::size_t& dropped, std::size_t& clamped);

/// Physical run configuration after conversion to normalized units (time in
/// hours, power as a fraction of rated energy, costs in EUR).
struct RunConfig {
    LatentParams latent;
    double rated_mwh;
    double horizon;
    std::size_t steps;
    ThetaSchedule schedule;
    DriftCurve drift;
    PenaltyFunction penalty;
    double gamma;
    HjbGrid hjb;
    std::size_t updates;
    ThresholdConfig thresholds;
    std::size_t n_paths;
    std::uint64_t seed;
};

/// INI file with sections plant, horizon, forecast, market, hjb, thresholds
/// and simulation. Unknown sections or keys are rejected.
RunConfig load_config(const std::filesystem::path& file);

ExperimentSpec make_spec(const RunConfig& cfg, Policy policy);

/// Flat binary tensor: magic "WTTENSOR", uint64 rank, uint64 dims[rank], then
/// float64 values in row-major order; everything little-endian.
void write_tensor(const std::filesystem::path& file, const std::vector<std::uint64_t>& dims,
                  const std::vector<double>& values);

/// Shortest text that reads back to the same double.
std::string fmt(double x);

}  // namespace windtrade::cli
