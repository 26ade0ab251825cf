#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "speclab/empirical.hpp"
#include "speclab/filters.hpp"
#include "speclab/json_io.hpp"
#include "speclab/source.hpp"
#include "speclab/spectrum.hpp"

namespace speclab {

enum class RunMode { curve, sweep, verify_filter, verify_contour, saturation, interpolating };

std::string to_string(RunMode m);
RunMode run_mode_from_string(const std::string& s);

/// How lambda is chosen: a fixed log grid, an explicit list, or tied to n as a n^{-theta}.
struct LambdaRule {
    enum class Kind { grid, list, n_linked };
    Kind kind = Kind::n_linked;
    double lo = 1e-4;
    double hi = 1e-1;
    int per_decade = 32;
    std::vector<double> values;
    double a = 1.0;
    double theta = 2.0 / 3.0;

    std::vector<double> lambdas(double n) const;
};

struct ExperimentConfig {
    RunMode mode = RunMode::sweep;
    SystemDescriptor system;
    std::vector<json> filters;   // raw filter descriptors, resolved once kappa^2 is known
    SourceSpec source;
    double sigma_sq = 1.0;
    std::vector<double> n_grid;
    LambdaRule lambda_rule;
    std::vector<std::uint64_t> seeds{1};
    std::string output = ".";
    int threads = 0;
    int nodes_per_segment = 512;
    int matrix_size = 16;
    std::vector<double> contour_lambdas{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
    std::vector<double> matrix_lambdas{0.3, 0.05};
    int audit_points = 100;      // per axis for verify-filter
    json raw;                    // the document as given, after CLI overrides
};

/// Validates and fills defaults. Throws ConfigError naming the offending field.
ExperimentConfig parse_config(const json& j);
/// Reads and parses a JSON file; syntax errors carry the parser's line/column.
ExperimentConfig load_config(const std::string& path);

std::vector<FilterSpec> build_filters(const ExperimentConfig& cfg, double kappa_sq);

/// Throws ConfigError when the unrepresented part of N_2 exceeds 1e-3 of N_2 at `min_lambda`.
void check_truncation_budget(const EigenSystem& sys, const std::vector<FilterSpec>& filters,
                             double min_lambda);

/// One exact-risk evaluation on a design: which source, which filter, which lambda.
struct CellRequest {
    std::size_t source = 0;
    std::size_t filter = 0;
    double lambda = 0.0;
};

struct DesignTiming {
    double build_seconds = 0.0;
    double decompose_seconds = 0.0;
    double evaluate_seconds = 0.0;
    double total() const { return build_seconds + decompose_seconds + evaluate_seconds; }
};

/// Samples one design, builds the Gram pack and its eigendecomposition once, and evaluates
/// every requested cell (predictions not attached).
std::vector<RiskBreakdown> evaluate_design(const EigenSystem& sys,
                                           const std::vector<SourceFunction>& sources,
                                           const std::vector<FilterSpec>& filters, Eigen::Index n,
                                           std::uint64_t seed, const std::vector<CellRequest>& cells,
                                           double sigma_sq, DesignTiming* timing = nullptr);

/// Memoized deterministic predictions keyed by (source, filter, lambda).
class Predictor {
public:
    Predictor(const EigenSystem& sys, const std::vector<SourceFunction>& sources,
              const std::vector<FilterSpec>& filters)
        : sys_(&sys), sources_(&sources), filters_(&filters) {}

    /// (R^2_phi, N_2)
    std::pair<double, double> terms(std::size_t source, std::size_t filter, double lambda);
    void attach(RiskBreakdown& r, std::size_t source, std::size_t filter, double sigma_sq);

private:
    const EigenSystem* sys_;
    const std::vector<SourceFunction>* sources_;
    const std::vector<FilterSpec>* filters_;
    std::map<std::tuple<std::size_t, std::size_t, double>, std::pair<double, double>> memo_;
};

/// CSV with columns n,lambda,bias_sq,var,total,pred_bias_sq,pred_var,ratio,seed.
std::string risk_csv(const std::vector<RiskBreakdown>& rows, const std::string& config_hash);

struct RunResult {
    int exit_code = 0;           // 0 pass, 1 invariant failure
    json summary;
    std::vector<std::string> files;
};

/// Executes the configured mode, writing CSV/JSON into cfg.output.
RunResult run(const ExperimentConfig& cfg);

/// Per-key deltas (b - a) of the numeric "slopes" and "table" entries of two summaries.
/// Throws ConfigError when the schemas differ.
json report_diff(const json& a, const json& b);

} // namespace speclab
