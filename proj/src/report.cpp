#include "lq/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace lq {

namespace {

std::string class_name(SpectralClass c) {
    switch (c) {
        case SpectralClass::Zero: return "zero";
        case SpectralClass::PureImaginary: return "pure_imaginary";
        case SpectralClass::Hyperbolic: return "hyperbolic";
    }
    return "hyperbolic";
}

void fill_spectral_part(AnalysisReport& report, const HamiltonianField& field,
                        const SpectrumReport& spectrum, const ToleranceConfig& tol) {
    for (const auto& entry : spectrum.eigenvalues) {
        AnalysisReport::EigenvalueEntry e;
        e.re = entry.jordan.eigenvalue.re;
        e.im = entry.jordan.eigenvalue.im;
        e.multiplicity = entry.jordan.eigenvalue.multiplicity;
        e.blocks = entry.jordan.block_sizes;
        e.spectral_class = class_name(entry.spectral_class);
        report.spectrum.push_back(std::move(e));
    }

    for (const auto& f : krein_frequencies(field, spectrum, tol)) {
        report.frequencies.push_back({f.beta, f.sign, f.multiplicity});
    }

    const DichotomyVerdict verdict = predict_dichotomy(spectrum);
    report.verdict_kind = verdict.kind == DichotomyVerdict::Kind::InfinitelyMany
                              ? "InfinitelyMany"
                              : "NoConjugateTimes";
    for (const auto& w : verdict.witnesses) {
        report.witnesses.push_back({w.beta, w.block_size});
    }
}

void fill_bounds(AnalysisReport& report, const SpectrumReport& spectrum,
                 const std::vector<KreinFrequency>& freqs, int n, double horizon) {
    int imaginary_mult = 0;
    bool all_diagonalizable = true;
    for (const auto& entry : spectrum.eigenvalues) {
        if (entry.spectral_class != SpectralClass::PureImaginary) continue;
        if (entry.jordan.eigenvalue.im <= 0.0) continue;
        imaginary_mult += entry.jordan.eigenvalue.multiplicity;
        for (int s : entry.jordan.block_sizes) {
            all_diagonalizable = all_diagonalizable && s == 1;
        }
    }
    if (imaginary_mult == 0) {
        report.bounds_note = "no pure imaginary spectrum";
        return;
    }
    if (!all_diagonalizable) {
        report.bounds_note =
            "pure imaginary spectrum is not diagonalizable; bounds apply to the "
            "reduced curve only";
        return;
    }
    const int k_reduced = n - imaginary_mult;
    try {
        const ConjugateTimeBound bound = conjugate_time_bounds(freqs, n, k_reduced);
        report.bounds_available = true;
        report.sum_omega = bound.sum_omega;
        report.k_reduced = bound.k_reduced;
        report.first_time_bound = bound.first_time_bound;
        report.count_lower_bound_at_horizon = bound.count_lower_bound(horizon);
    } catch (const ConsistencyError& e) {
        report.bounds_note = e.what();
    }
}

} // namespace

AnalysisReport run_analysis(const ParsedInput& input, const AnalysisConfig& config) {
    if (config.horizon <= 0.0) {
        throw ParameterError("analysis horizon must be positive");
    }

    AnalysisReport report;
    const ToleranceConfig& tol = config.tolerances;

    HamiltonianField field;
    if (std::holds_alternative<LqProblem>(input)) {
        const LqProblem& problem = std::get<LqProblem>(input);
        field = assemble(problem);
        report.input_kind = "lq_problem";
        report.q_asymmetry_warning = problem.q_asymmetry_warning;
        const AdmissibilityReport adm = check_admissible(problem, tol);
        report.controllable = adm.controllable;
        report.vertical_psd = adm.vertical_psd;
        report.kalman_rank = adm.kalman_rank;
    } else {
        field = std::get<FixtureInput>(input).field;
        report.input_kind = "hamiltonian_field";
        const AdmissibilityReport adm = check_admissible(field, tol);
        report.controllable = adm.controllable;
        report.vertical_psd = adm.vertical_psd;
        report.kalman_rank = adm.kalman_rank;
    }
    report.n = field.n;
    report.horizon = config.horizon;

    const SpectrumReport spectrum = classify_spectrum(field, tol);
    fill_spectral_part(report, field, spectrum, tol);
    const std::vector<KreinFrequency> freqs = krein_frequencies(field, spectrum, tol);
    fill_bounds(report, spectrum, freqs, field.n, config.horizon);

    const double grid =
        config.grid_step > 0.0 ? config.grid_step : suggested_grid_step(field, tol);
    const double eps =
        config.eps_shift > 0.0 ? config.eps_shift : tol.default_eps_shift();
    report.grid_step = grid;
    report.eps_shift = eps;

    if (!report.controllable || !report.vertical_psd) {
        report.detection_note = !report.controllable
                                    ? "not controllable; conjugate-time detection skipped"
                                    : "H is not positive semidefinite on the vertical "
                                      "subspace; conjugate-time detection skipped";
        report.status = "spectral_only";
        return report;
    }

    const JacobiCurve curve = make_jacobi_curve(field);
    const double t_min =
        config.t_min > 0.0 ? config.t_min : std::min(grid, config.horizon / 10.0);
    const std::vector<ConjugateTime> detected =
        detect_conjugate_times(curve, t_min, config.horizon, grid, tol);
    report.detection_ran = true;
    int detected_mult = 0;
    for (const auto& ct : detected) {
        report.conjugate_times.push_back({ct.t, ct.multiplicity});
        detected_mult += ct.multiplicity;
    }

    report.maslov_count =
        count_conjugate_times_via_maslov(curve, config.horizon, eps, tol, config.seed);
    report.maslov_ran = true;

    // Cross-validation: the detector, the Maslov count, the dichotomy
    // verdict and the corollary bounds must tell one story.
    {
        AnalysisReport::Check check;
        check.name = "maslov_equals_detection";
        bool endpoint_clash = false;
        for (const auto& ct : detected) {
            if (std::abs(ct.t - config.horizon) < 2.0 * eps) endpoint_clash = true;
        }
        if (endpoint_clash) {
            check.applicable = false;
            check.details = "a conjugate time lies within 2 eps of the horizon";
        } else {
            check.passed = report.maslov_count == detected_mult;
            std::ostringstream os;
            os << "maslov " << report.maslov_count << " vs detected " << detected_mult;
            check.details = os.str();
        }
        report.checks.push_back(check);
    }
    {
        AnalysisReport::Check check;
        check.name = "dichotomy_cross_validation";
        if (report.verdict_kind == "NoConjugateTimes") {
            check.passed = detected.empty();
            check.details = detected.empty() ? "no detections, as predicted"
                                             : "detections despite NoConjugateTimes";
        } else if (report.bounds_available) {
            check.passed = detected_mult >= report.count_lower_bound_at_horizon;
            std::ostringstream os;
            os << "detected " << detected_mult << " >= lower bound "
               << report.count_lower_bound_at_horizon;
            check.details = os.str();
        } else {
            check.applicable = false;
            check.details = "count bound unavailable: " + report.bounds_note;
        }
        report.checks.push_back(check);
    }
    {
        AnalysisReport::Check check;
        check.name = "first_time_bound";
        if (!report.bounds_available) {
            check.applicable = false;
            check.details = "bounds unavailable";
        } else if (report.first_time_bound <= config.horizon) {
            check.passed = !detected.empty() &&
                           detected.front().t <= report.first_time_bound + 1e-6;
            std::ostringstream os;
            if (detected.empty()) {
                os << "no detection although the first conjugate time is guaranteed by "
                   << report.first_time_bound;
            } else {
                os << "first detected " << detected.front().t << " <= bound "
                   << report.first_time_bound;
            }
            check.details = os.str();
        } else {
            check.applicable = false;
            check.details = "horizon shorter than the first-time bound";
        }
        report.checks.push_back(check);
    }
    {
        AnalysisReport::Check check;
        check.name = "monotonicity";
        // A local differential property: moderate times say everything,
        // and polynomially growing frames drown the finite differences
        // in roundoff at large t.
        const double span = std::min(config.horizon, 10.0);
        std::vector<double> samples;
        for (int i = 1; i <= 5; ++i) {
            samples.push_back(span * i / 6.0);
        }
        const MonotonicityReport mono = monotonicity_check(curve, samples, tol, config.seed);
        check.passed = mono.passed;
        std::ostringstream os;
        os << "max dS/dt eigenvalue " << mono.max_dS_eigenvalue << ", identity residual "
           << mono.max_identity_residual;
        check.details = os.str();
        report.checks.push_back(check);
    }
    if (report.verdict_kind == "NoConjugateTimes") {
        AnalysisReport::Check check;
        check.name = "no_self_intersections";
        Rng rng(config.seed);
        // Distinct subspaces along non-oscillating flows close in on each
        // other polynomially, so beyond moderate times the pair angle
        // drops under the certifiable floor; sample where the answer is
        // numerically meaningful.
        std::uniform_real_distribution<double> uniform(0.0, std::min(config.horizon, 10.0));
        bool ok = true;
        for (int trial = 0; trial < 25 && ok; ++trial) {
            const double a = uniform(rng);
            const double b = uniform(rng);
            if (std::abs(a - b) < 0.5) continue;
            ok = self_intersection_dim(curve, a, b, tol) == 0;
        }
        check.passed = ok;
        check.details = ok ? "sampled pairs are transversal" : "self-intersection found";
        report.checks.push_back(check);
    }

    bool agree = true;
    for (const auto& check : report.checks) {
        if (check.applicable && !check.passed) agree = false;
    }
    report.status = agree ? "agree" : "disagree";
    return report;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

} // namespace

nlohmann::json report_to_json(const AnalysisReport& r) {
    json spectrum = json::array();
    for (const auto& e : r.spectrum) {
        spectrum.push_back({{"re", e.re},
                            {"im", e.im},
                            {"multiplicity", e.multiplicity},
                            {"blocks", e.blocks},
                            {"class", e.spectral_class}});
    }
    json freqs = json::array();
    for (const auto& f : r.frequencies) {
        freqs.push_back({{"beta", f.beta}, {"sign", f.sign}, {"multiplicity", f.multiplicity}});
    }
    json witnesses = json::array();
    for (const auto& w : r.witnesses) {
        witnesses.push_back({{"beta", w.beta}, {"block_size", w.block_size}});
    }
    json times = json::array();
    for (const auto& t : r.conjugate_times) {
        times.push_back({{"t", t.t}, {"multiplicity", t.multiplicity}});
    }
    json checks = json::array();
    for (const auto& c : r.checks) {
        checks.push_back({{"name", c.name},
                          {"applicable", c.applicable},
                          {"passed", c.passed},
                          {"details", c.details}});
    }
    return json{
        {"input_kind", r.input_kind},
        {"n", r.n},
        {"admissibility",
         {{"controllable", r.controllable},
          {"vertical_psd", r.vertical_psd},
          {"kalman_rank", r.kalman_rank},
          {"q_asymmetry_warning", r.q_asymmetry_warning}}},
        {"spectrum", spectrum},
        {"krein_frequencies", freqs},
        {"verdict", {{"kind", r.verdict_kind}, {"witnesses", witnesses}}},
        {"bounds",
         {{"available", r.bounds_available},
          {"note", r.bounds_note},
          {"sum_omega", r.sum_omega},
          {"k_reduced", r.k_reduced},
          {"first_time_bound", r.first_time_bound},
          {"count_lower_bound_at_horizon", r.count_lower_bound_at_horizon}}},
        {"detection",
         {{"horizon", r.horizon},
          {"grid_step", r.grid_step},
          {"eps_shift", r.eps_shift},
          {"ran", r.detection_ran},
          {"note", r.detection_note},
          {"conjugate_times", times}}},
        {"maslov", {{"ran", r.maslov_ran}, {"count", r.maslov_count}}},
        {"cross_validation", {{"status", r.status}, {"checks", checks}}}};
}

AnalysisReport report_from_json(const nlohmann::json& j) {
    AnalysisReport r;
    r.input_kind = j.at("input_kind").get<std::string>();
    r.n = j.at("n").get<int>();
    const json& adm = j.at("admissibility");
    r.controllable = adm.at("controllable").get<bool>();
    r.vertical_psd = adm.at("vertical_psd").get<bool>();
    r.kalman_rank = adm.at("kalman_rank").get<int>();
    r.q_asymmetry_warning = adm.at("q_asymmetry_warning").get<bool>();
    for (const auto& e : j.at("spectrum")) {
        AnalysisReport::EigenvalueEntry entry;
        entry.re = e.at("re").get<double>();
        entry.im = e.at("im").get<double>();
        entry.multiplicity = e.at("multiplicity").get<int>();
        entry.blocks = e.at("blocks").get<std::vector<int>>();
        entry.spectral_class = e.at("class").get<std::string>();
        r.spectrum.push_back(std::move(entry));
    }
    for (const auto& f : j.at("krein_frequencies")) {
        r.frequencies.push_back({f.at("beta").get<double>(), f.at("sign").get<int>(),
                                 f.at("multiplicity").get<int>()});
    }
    const json& verdict = j.at("verdict");
    r.verdict_kind = verdict.at("kind").get<std::string>();
    for (const auto& w : verdict.at("witnesses")) {
        r.witnesses.push_back({w.at("beta").get<double>(), w.at("block_size").get<int>()});
    }
    const json& bounds = j.at("bounds");
    r.bounds_available = bounds.at("available").get<bool>();
    r.bounds_note = bounds.at("note").get<std::string>();
    r.sum_omega = bounds.at("sum_omega").get<double>();
    r.k_reduced = bounds.at("k_reduced").get<int>();
    r.first_time_bound = bounds.at("first_time_bound").get<double>();
    r.count_lower_bound_at_horizon = bounds.at("count_lower_bound_at_horizon").get<int>();
    const json& detection = j.at("detection");
    r.horizon = detection.at("horizon").get<double>();
    r.grid_step = detection.at("grid_step").get<double>();
    r.eps_shift = detection.at("eps_shift").get<double>();
    r.detection_ran = detection.at("ran").get<bool>();
    r.detection_note = detection.at("note").get<std::string>();
    for (const auto& t : detection.at("conjugate_times")) {
        r.conjugate_times.push_back(
            {t.at("t").get<double>(), t.at("multiplicity").get<int>()});
    }
    const json& maslov = j.at("maslov");
    r.maslov_ran = maslov.at("ran").get<bool>();
    r.maslov_count = maslov.at("count").get<int>();
    const json& cross = j.at("cross_validation");
    r.status = cross.at("status").get<std::string>();
    for (const auto& c : cross.at("checks")) {
        r.checks.push_back({c.at("name").get<std::string>(), c.at("applicable").get<bool>(),
                            c.at("passed").get<bool>(), c.at("details").get<std::string>()});
    }
    return r;
}

void write_trace_csv(std::ostream& out, const std::vector<TracePoint>& trace) {
    out << "t,det_X,sigma_min_X,intersection_dim\n";
    out << std::setprecision(17);
    for (const auto& p : trace) {
        out << p.t << ',' << p.det_x << ',' << p.sigma_min << ',' << p.intersection_dim
            << '\n';
    }
}

int exit_code_for(const AnalysisReport& report) {
    return report.status == "disagree" ? 2 : 0;
}

} // namespace lq
