#pragma once

// Experiment harness: parameter grids x seeds dispatched to a worker pool, per-row CSV output, summary
// statistics per parameter point, power-law fits and a provenance manifest.

#include "qem/tensor.hpp"

#include "json.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace qem::bench {

enum class ExperimentId { MpoInverseSweep, NoiseInverseDprime, DeepQem, SizeScaling, ErrThreshold, PepoInverse, AlphaVsNq };

std::string               to_string(ExperimentId id);
ExperimentId              parse_experiment(const std::string &s);
std::vector<ExperimentId> all_experiments();

enum class Statistic { Geometric, Arithmetic };
std::string to_string(Statistic s);

/// Geometric statistics for channel distances, arithmetic for state distances.
Statistic statistic_for(ExperimentId id);

struct ExperimentConfig {
    ExperimentId id = ExperimentId::MpoInverseSweep;

    std::vector<int>         n_qubits{10};
    std::vector<int>         depth{4};
    std::vector<std::string> families{"depolarizing"}; // noise family names, or "mixed"
    std::vector<double>      eps2{1e-2};
    std::vector<double>      global_rate{0.0};
    std::vector<Index>       d_inv{5};
    std::vector<Index>       d_prime{1};

    double        eps1            = -1.0; // negative: eps2 / 10
    int           layers_per_part = 4;    // d0 of the deep-circuit experiments
    Index         d_compile       = 0;    // bond cap of compiled MPOs; 0 = exact up to the cutoff
    double        correction_eps1 = 1e-3; // negative: noiseless corrections
    Index         chi             = 256;  // state-simulation bond cap
    int           max_sweeps      = 20;
    double        tol             = 1e-15;
    std::string   placement       = "staggered";
    int           grid_rows       = 3;
    int           grid_cols       = 3;
    Index         boundary_chi    = 0; // 0: square of the largest network link
    int           reps            = 1;
    std::uint64_t seed            = 1;
    int           threads         = 1;
    std::string   out_dir         = "results";

    /// Throws std::invalid_argument describing the first problem found.
    void validate() const;

    [[nodiscard]] nlohmann::json to_json() const;
    /// Overrides the fields present in `j`; unknown keys are rejected.
    void apply_json(const nlohmann::json &j);
};

/// Desk-scale defaults, or the published configurations when `full_scale`.
ExperimentConfig preset(ExperimentId id, bool full_scale = false);

struct FitResult {
    double              exponent  = 0.0;
    double              intercept = 0.0; // log10 intercept
    double              r2        = 0.0;
    std::vector<double> x;
    std::vector<double> y;
};

/// Ordinary least squares of log10(y) on log10(x).
FitResult fit_power_law(const std::vector<std::pair<double, double>> &points);

struct Summary {
    int    count  = 0;
    double mean   = 0.0; // geometric or arithmetic
    double spread = 0.0; // geometric standard deviation (a factor) or sample standard deviation
    double median = 0.0;
};

/// Non-finite values are skipped; the geometric statistic also skips non-positive values.
Summary summarize(const std::vector<double> &values, Statistic stat);

struct Metric {
    std::string name;
    Statistic   stat = Statistic::Arithmetic;
};

struct ResultRow {
    std::vector<std::string> params;
    std::uint64_t            seed = 0;
    std::vector<double>      metrics;
    std::string              status = "ok";
};

struct SummaryRow {
    std::vector<std::string> params;
    std::vector<Summary>     metrics;
};

struct FitRecord {
    std::string group; // fixed parameters, "key=value" joined by ';'
    std::string series;
    std::string x_column;
    FitResult   fit;
};

struct ResultTable {
    ExperimentId             id = ExperimentId::MpoInverseSweep;
    std::vector<std::string> param_columns;
    std::vector<Metric>      metrics;
    std::vector<ResultRow>   rows; // sorted by (point, seed)
    std::vector<SummaryRow>  summary;
    std::vector<FitRecord>   fits;
    double                   wall_seconds = 0.0;

    [[nodiscard]] int         failures() const;
    [[nodiscard]] std::string rows_csv() const;
    [[nodiscard]] std::string summary_csv() const;
    [[nodiscard]] std::string fits_csv() const;
    [[nodiscard]] int         metric_index(const std::string &name) const;
    [[nodiscard]] int         param_index(const std::string &name) const;
};

using Progress = std::function<void(int done, int total)>;

ResultTable run_experiment(const ExperimentConfig &cfg, const Progress &progress = {});

/// Groups rows by parameter point and summarizes every metric.
std::vector<SummaryRow> summarize_rows(const std::vector<std::string> &param_columns, const std::vector<Metric> &metrics,
                                       const std::vector<ResultRow> &rows);

/// Writes <id>.csv, <id>_summary.csv, <id>_fits.csv (when fits exist) and <id>_manifest.json into
/// cfg.out_dir. Only the first comment line of each CSV carries a timestamp.
std::vector<std::string> write_outputs(const ResultTable &table, const ExperimentConfig &cfg);

/// Re-reads <id>.csv and <id>_summary.csv, recomputes the summary and returns the largest relative
/// mismatch of any summary entry.
double check_summary_consistency(const std::string &rows_csv_path, const std::string &summary_csv_path);

} // namespace qem::bench
