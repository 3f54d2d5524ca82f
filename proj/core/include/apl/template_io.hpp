#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "apl/model_family.hpp"

namespace apl {

/**
 * Parses an affine expression over named parameters:
 *
 *     expr := term (('+'|'-') term)*
 *     term := NUMBER | NUMBER '*' NAME | NAME
 *
 * The first NUMBER may carry a sign. Throws ParseError.
 */
ParamExpr parse_expr(std::string_view text, const std::vector<Parameter>& params);

/// Canonical text form; parse_expr(format_expr(e)) == e for expressions whose terms are non-zero.
std::string format_expr(const ParamExpr& expr, const std::vector<Parameter>& params);

/// Shortest decimal representation that reads back to the same double.
std::string format_number(double x);

/**
 * Template documents are JSON objects with `states`, `actions`, `observations`,
 * `discount`, `params` ([{"name": .., "beta": [a, b]} | {"name": .., "normal": [mu, sigma]}])
 * and tables `transition[a][s][s']`, `observation[a][s'][z]`, `initial[s]`,
 * `reward[a][s]` whose entries are expression strings (plain numbers accepted).
 */
ParametricTemplate template_from_json(std::string_view json_text);
std::string template_to_json(const ParametricTemplate& tpl);

ParametricTemplate load_template(const std::filesystem::path& path);
void save_template(const ParametricTemplate& tpl, const std::filesystem::path& path);

/// `builtin:tiger` or a path to a template document.
ParametricTemplate resolve_template(const std::string& spec);

}  // namespace apl
