#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lq/io.hpp"
#include "lq/jacobi.hpp"

namespace lq {

struct AnalysisConfig {
    double horizon = 30.0;
    double grid_step = 0.0;  ///< 0 = derive from the spectrum
    double eps_shift = 0.0;  ///< 0 = 10 * tolerance.time
    double t_min = 0.0;      ///< 0 = one grid step
    ToleranceConfig tolerances;
    std::uint64_t seed = 0x5eed;
};

/// Everything cmd_analyze knows about one input, in serializable form.
struct AnalysisReport {
    std::string input_kind; ///< "lq_problem" or "hamiltonian_field"
    int n = 0;

    bool controllable = false;
    bool vertical_psd = false;
    int kalman_rank = 0;
    bool q_asymmetry_warning = false;

    struct EigenvalueEntry {
        double re = 0.0;
        double im = 0.0;
        int multiplicity = 1;
        std::vector<int> blocks;
        std::string spectral_class; ///< "zero" | "pure_imaginary" | "hyperbolic"
    };
    std::vector<EigenvalueEntry> spectrum;

    struct FrequencyEntry {
        double beta = 0.0;
        int sign = 1;
        int multiplicity = 1;
    };
    std::vector<FrequencyEntry> frequencies;

    std::string verdict_kind; ///< "NoConjugateTimes" | "InfinitelyMany"
    struct WitnessEntry {
        double beta = 0.0;
        int block_size = 0;
    };
    std::vector<WitnessEntry> witnesses;

    bool bounds_available = false;
    std::string bounds_note;
    double sum_omega = 0.0;
    int k_reduced = 0;
    double first_time_bound = 0.0;
    int count_lower_bound_at_horizon = 0;

    double horizon = 0.0;
    double grid_step = 0.0;
    double eps_shift = 0.0;
    bool detection_ran = false;
    std::string detection_note;
    struct DetectedTime {
        double t = 0.0;
        int multiplicity = 0;
    };
    std::vector<DetectedTime> conjugate_times;

    bool maslov_ran = false;
    int maslov_count = 0;

    struct Check {
        std::string name;
        bool applicable = true;
        bool passed = true;
        std::string details;
    };
    std::vector<Check> checks;
    std::string status; ///< "agree" | "disagree" | "spectral_only"
};

AnalysisReport run_analysis(const ParsedInput& input, const AnalysisConfig& config);

nlohmann::json report_to_json(const AnalysisReport& report);
AnalysisReport report_from_json(const nlohmann::json& j);

/// CSV with columns t, det_X, sigma_min_X, intersection_dim; numbers
/// carry 17 significant digits.
void write_trace_csv(std::ostream& out, const std::vector<TracePoint>& trace);

/// Exit code contract: 0 = agree (or spectral-only), 2 = disagree.
int exit_code_for(const AnalysisReport& report);

} // namespace lq
