#include "lq/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "lq/tolerances.hpp"

namespace lq {

namespace {

using nlohmann::json;

Mat matrix_from_json(const json& j, int rows, int cols, const std::string& name) {
    if (!j.is_array() || static_cast<int>(j.size()) != rows) {
        std::ostringstream os;
        os << "'" << name << "' must be a " << rows << " x " << cols << " nested array";
        throw IngestionError(os.str());
    }
    Mat M(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const json& row = j[static_cast<size_t>(r)];
        if (!row.is_array() || static_cast<int>(row.size()) != cols) {
            std::ostringstream os;
            os << "'" << name << "' row " << r << " must have " << cols << " entries";
            throw IngestionError(os.str());
        }
        for (int c = 0; c < cols; ++c) {
            const json& value = row[static_cast<size_t>(c)];
            if (!value.is_number()) {
                std::ostringstream os;
                os << "'" << name << "' entry (" << r << ", " << c << ") is not a number";
                throw IngestionError(os.str());
            }
            M(r, c) = value.get<double>();
        }
    }
    ensure_finite(M, name);
    return M;
}

json matrix_to_json(const Mat& M) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < M.cols(); ++c) {
            row.push_back(M(r, c));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& what) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (allowed.find(it.key()) == allowed.end()) {
            throw IngestionError("unknown key '" + it.key() + "' in " + what);
        }
    }
}

int positive_int_field(const json& j, const std::string& key) {
    if (!j.contains(key) || !j[key].is_number_integer()) {
        throw IngestionError("'" + key + "' must be an integer");
    }
    const int value = j[key].get<int>();
    if (value <= 0) {
        throw IngestionError("'" + key + "' must be positive");
    }
    return value;
}

} // namespace

LqProblem problem_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw IngestionError("problem file must contain a JSON object");
    }
    reject_unknown_keys(j, {"n", "k", "A", "B", "Q"}, "problem object");
    const int n = positive_int_field(j, "n");
    const int k = positive_int_field(j, "k");
    if (!j.contains("A") || !j.contains("B") || !j.contains("Q")) {
        throw IngestionError("problem object requires 'A', 'B' and 'Q'");
    }
    return make_problem(n, k, matrix_from_json(j["A"], n, n, "A"),
                        matrix_from_json(j["B"], n, k, "B"),
                        matrix_from_json(j["Q"], n, n, "Q"));
}

nlohmann::json problem_to_json(const LqProblem& problem) {
    return nlohmann::json{{"n", problem.n},
                          {"k", problem.k_ctrl},
                          {"A", matrix_to_json(problem.A)},
                          {"B", matrix_to_json(problem.B)},
                          {"Q", matrix_to_json(problem.Q)}};
}

FixtureInput fixture_from_json(const nlohmann::json& j) {
    reject_unknown_keys(j, {"kind", "n", "Hmat", "admissible_lq", "metadata"},
                        "fixture object");
    if (!j.contains("kind") || j["kind"] != "hamiltonian_field") {
        throw IngestionError("fixture object requires \"kind\": \"hamiltonian_field\"");
    }
    const int n = positive_int_field(j, "n");
    if (!j.contains("Hmat")) {
        throw IngestionError("fixture object requires 'Hmat'");
    }
    FixtureInput fixture;
    fixture.field = field_from_hmat(matrix_from_json(j["Hmat"], 2 * n, 2 * n, "Hmat"));
    if (j.contains("admissible_lq")) {
        if (!j["admissible_lq"].is_boolean()) {
            throw IngestionError("'admissible_lq' must be a boolean");
        }
        fixture.admissible_lq = j["admissible_lq"].get<bool>();
    } else {
        const ToleranceConfig tol;
        const AdmissibilityReport adm = check_admissible(fixture.field, tol);
        fixture.admissible_lq = adm.controllable && adm.vertical_psd;
    }
    if (j.contains("metadata")) fixture.metadata = j["metadata"];
    return fixture;
}

nlohmann::json fixture_to_json(const FixtureInput& fixture) {
    nlohmann::json j{{"kind", "hamiltonian_field"},
                     {"n", fixture.field.n},
                     {"Hmat", matrix_to_json(fixture.field.Hmat)},
                     {"admissible_lq", fixture.admissible_lq}};
    if (!fixture.metadata.is_null()) j["metadata"] = fixture.metadata;
    return j;
}

ParsedInput input_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw IngestionError("input file must contain a JSON object");
    }
    if (j.contains("kind")) {
        return fixture_from_json(j);
    }
    return problem_from_json(j);
}

ParsedInput load_input_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IngestionError("cannot open input file '" + path + "'");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IngestionError("malformed JSON in '" + path + "': " + e.what());
    }
    return input_from_json(j);
}

} // namespace lq
