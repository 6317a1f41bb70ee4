#pragma once

#include <string_view>

#include "ratopt/problem_file.hpp"

namespace ratopt {

/// Foxholes data: N whitespace-separated rows of n centre coordinates a_i,
/// then one row with the N constants c_i. Builds
///   minimize  sum_i -1 / (||x - a_i||^2 + c_i)
/// over variables x1..xn. Throws ParseError on ragged or non-numeric data.
ProblemFile shekel_problem(std::string_view data);

}  // namespace ratopt
