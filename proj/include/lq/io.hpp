#pragma once

#include <string>
#include <variant>

#include <json.hpp>

#include "lq/model.hpp"

namespace lq {

/// Problem JSON: {"n": int, "k": int, "A": n x n, "B": n x k, "Q": n x n},
/// row-major nested arrays, no unknown keys.
LqProblem problem_from_json(const nlohmann::json& j);
nlohmann::json problem_to_json(const LqProblem& problem);

/// A serialized quadratic Hamiltonian that is not necessarily an LQ
/// problem (normal-form fixtures). Discriminated by
/// "kind": "hamiltonian_field".
struct FixtureInput {
    HamiltonianField field;
    /// True when the fixture happens to satisfy H|_V >= 0 and the
    /// generalized controllability condition.
    bool admissible_lq = false;
    nlohmann::json metadata; ///< parity / order / beta / sign when known
};

FixtureInput fixture_from_json(const nlohmann::json& j);
nlohmann::json fixture_to_json(const FixtureInput& fixture);

using ParsedInput = std::variant<LqProblem, FixtureInput>;

/// Dispatches on the "kind" discriminator; plain objects are problems.
ParsedInput input_from_json(const nlohmann::json& j);
ParsedInput load_input_file(const std::string& path);

} // namespace lq
