#pragma once

// Scenario configuration: one JSON document describing the box, the
// coefficients, the region, the nonlinearity, the hbar list and solver knobs.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pnls/semiclassical.hpp"

namespace pnls {

/// Validation failure at a JSON pointer path such as "/V/period".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& message)
        : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

struct CoefficientConfig {
    std::string kind = "constant";  // constant | cosine | gaussian_well
    double value = 1.0;             // constant
    double base = 1.0;              // cosine, gaussian_well
    double amplitude = 0.0;         // cosine
    std::optional<double> period;   // cosine (required), others optional declaration
    double depth = 0.0;             // gaussian_well
    double width = 1.0;             // gaussian_well
    Coord center{};
    bool normalize = true;          // Gamma only
};

struct RegionConfig {
    std::string kind = "box";  // box | ball
    Coord center{};
    Coord half_widths{};
    double radius = 0.0;
    std::optional<double> band_width;
};

struct NonlinearityConfig {
    std::string kind = "power";  // power | combined
    double q = 4.0;
    std::vector<Nonlinearity::Term> terms;
    std::optional<double> theta;
    std::optional<double> p;
};

struct GridConfig {
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<std::size_t> nodes;
};

struct ScenarioConfig {
    int dimension = 1;
    GridConfig box;
    ConcentrationCase which = ConcentrationCase::Lambda1;
    Coord anchor{};
    CoefficientConfig V;
    CoefficientConfig Gamma;
    RegionConfig region;
    NonlinearityConfig nonlinearity;
    std::optional<double> k;
    std::optional<double> alpha;
    std::optional<double> beta;
    std::vector<double> hbar;
    SolverParams solver;
    std::optional<GridConfig> limit;
    SweepOptions sweep;
    std::string output = "out";
};

/// Parses and validates; throws ConfigError naming the offending path.
ScenarioConfig parse_config(const std::string& json_text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Everything needed to run solves for one configuration.
struct Scenario {
    ScenarioConfig config;
    GridPtr grid;
    ProblemSpec problem;
    DiscreteProblem discrete;
    std::optional<PenalizedNonlinearity> pen;
    /// Why `pen` is empty, if it is.
    std::optional<ConfigError> pen_error;
    GridPtr limit_grid;
    double band_width = 0.0;

    /// Throws the stored ConfigError when the penalization could not be built.
    const PenalizedNonlinearity& penalization() const;
};

/// Builds grid, problem and penalization; model errors become ConfigErrors.
Scenario build_scenario(const ScenarioConfig& config);

}  // namespace pnls
