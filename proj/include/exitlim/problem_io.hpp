#pragma once

// JSON problem files. Field components are DSL expression strings; see the
// README for the schema.

#include <string>

#include "exitlim/conditioned1d.hpp"
#include "exitlim/fields.hpp"

namespace exitlim {

ProblemSpec parse_problem_json(const std::string& text);
ProblemSpec load_problem_file(const std::string& path);

OneDProblem parse_one_d_json(const std::string& text);
OneDProblem load_one_d_file(const std::string& path);

}  // namespace exitlim
