// lqct: conjugate-time analysis of linear-quadratic optimal control
// problems. Subcommands:
//   analyze  - spectral classification, dichotomy verdict, conjugate-time
//              detection and Maslov cross-validation; emits a JSON report
//   trace    - CSV trace of det X(t), sigma_min X(t) and intersection dim
//   fixture  - write a normal-form Hamiltonian with a prescribed pair of
//              Jordan blocks at +-i*beta

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

#include "lq/io.hpp"
#include "lq/report.hpp"
#include "lq/spectral.hpp"

namespace {

struct CommonOptions {
    double horizon = 30.0;
    double grid_step = 0.0;
    double tol_time = 0.0;
    double eps_shift = 0.0;
    std::uint64_t seed = 0x5eed;
    std::string output;
};

void add_common_flags(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--horizon", opts.horizon, "analysis horizon T (default 30)");
    cmd->add_option("--grid-step", opts.grid_step,
                    "detection grid step (default: derived from the spectrum)");
    cmd->add_option("--tol", opts.tol_time,
                    "root refinement tolerance |dt| (default 1e-8)");
    cmd->add_option("--eps-shift", opts.eps_shift,
                    "endpoint shift for Maslov queries (default 10*tol)");
    cmd->add_option("--seed", opts.seed, "RNG seed for randomized chart selection");
    cmd->add_option("--output", opts.output, "output path (default: stdout)");
}

lq::AnalysisConfig config_from(const CommonOptions& opts) {
    lq::AnalysisConfig config;
    config.horizon = opts.horizon;
    config.grid_step = opts.grid_step;
    config.eps_shift = opts.eps_shift;
    config.seed = opts.seed;
    if (opts.tol_time > 0.0) config.tolerances.time = opts.tol_time;
    return config;
}

void write_output(const std::string& path, const std::string& payload) {
    if (path.empty()) {
        std::cout << payload;
        return;
    }
    std::ofstream out(path);
    if (!out) {
        throw lq::IngestionError("cannot open output file '" + path + "'");
    }
    out << payload;
}

int run_analyze(const std::string& input_path, const CommonOptions& opts) {
    const lq::ParsedInput input = lq::load_input_file(input_path);
    if (std::holds_alternative<lq::LqProblem>(input) &&
        std::get<lq::LqProblem>(input).q_asymmetry_warning) {
        std::cerr << "warning: Q was not symmetric; using (Q + Q')/2\n";
    }
    const lq::AnalysisReport report = lq::run_analysis(input, config_from(opts));
    write_output(opts.output, lq::report_to_json(report).dump(2) + "\n");
    return lq::exit_code_for(report);
}

int run_trace(const std::string& input_path, const CommonOptions& opts) {
    const lq::ParsedInput input = lq::load_input_file(input_path);
    lq::HamiltonianField field = std::holds_alternative<lq::LqProblem>(input)
                                     ? lq::assemble(std::get<lq::LqProblem>(input))
                                     : std::get<lq::FixtureInput>(input).field;
    lq::ToleranceConfig tol;
    if (opts.tol_time > 0.0) tol.time = opts.tol_time;
    const double step =
        opts.grid_step > 0.0 ? opts.grid_step : lq::suggested_grid_step(field, tol);
    const auto trace =
        lq::curve_trace(lq::make_jacobi_curve(std::move(field)), opts.horizon, step, tol);

    std::ostringstream os;
    lq::write_trace_csv(os, trace);
    write_output(opts.output, os.str());
    return 0;
}

int run_fixture(const std::string& kind, int k, double beta, int sign,
                const std::string& output) {
    lq::BlockParity parity;
    if (kind == "even") {
        parity = lq::BlockParity::Even;
    } else if (kind == "odd") {
        parity = lq::BlockParity::Odd;
    } else {
        throw lq::ParameterError("fixture kind must be 'even' or 'odd'");
    }
    lq::FixtureInput fixture;
    fixture.field = lq::build_imaginary_jordan_fixture(parity, k, beta, sign);
    const lq::ToleranceConfig tol;
    const lq::AdmissibilityReport adm = lq::check_admissible(fixture.field, tol);
    fixture.admissible_lq = adm.controllable && adm.vertical_psd;
    fixture.metadata = {{"parity", kind},
                        {"k", k},
                        {"beta", beta},
                        {"sign", sign},
                        {"block_order", kind == "even" ? 2 * k : 2 * k + 1}};
    write_output(output, lq::fixture_to_json(fixture).dump(2) + "\n");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"conjugate-time analysis of LQ optimal control problems"};
    app.require_subcommand(1);

    CommonOptions analyze_opts;
    std::string analyze_input;
    CLI::App* analyze = app.add_subcommand("analyze", "full analysis -> JSON report");
    analyze->add_option("input", analyze_input, "problem or fixture JSON file")
        ->required();
    add_common_flags(analyze, analyze_opts);

    CommonOptions trace_opts;
    std::string trace_input;
    CLI::App* trace = app.add_subcommand("trace", "curve trace -> CSV");
    trace->add_option("input", trace_input, "problem or fixture JSON file")->required();
    add_common_flags(trace, trace_opts);

    std::string fixture_kind;
    int fixture_k = 0;
    double fixture_beta = 1.0;
    int fixture_sign = 1;
    std::string fixture_output;
    CLI::App* fixture =
        app.add_subcommand("fixture", "normal-form Hamiltonian fixture -> JSON");
    fixture->add_option("kind", fixture_kind, "'even' (order 2k) or 'odd' (order 2k+1)")
        ->required();
    fixture->add_option("k", fixture_k, "block order parameter")->required();
    fixture->add_option("beta", fixture_beta, "frequency beta != 0")->required();
    fixture->add_option("sign", fixture_sign, "+1 or -1")->required();
    fixture->add_option("--output", fixture_output, "output path (default: stdout)");

    try {
        app.parse(argc, argv);
        if (analyze->parsed()) return run_analyze(analyze_input, analyze_opts);
        if (trace->parsed()) return run_trace(trace_input, trace_opts);
        if (fixture->parsed()) {
            return run_fixture(fixture_kind, fixture_k, fixture_beta, fixture_sign,
                               fixture_output);
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const lq::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
