#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ratopt/sdp_problem.hpp"

namespace ratopt {

/// SDPA sparse text (.dat-s). SDPA reads the constraint as
/// sum_a F_a y_a - F_0 PSD, so F_0 = -A_0. Equalities become one trailing
/// diagonal block holding the pairs (By - b >= 0, b - By >= 0).
std::string export_sdpa(const SDPProblem& problem);

/// Parses .dat-s text. Lines starting with '"' or '*' are comments. Diagonal
/// blocks stay diagonal blocks; nothing is re-fused into equalities.
SDPProblem import_sdpa(std::string_view text);

struct ExternalResult {
  bool ok = false;
  double objective = 0.0;
  std::vector<double> y;
  std::string message;
};

/// Best-effort reader for an SDPA-style result file: looks for
/// "objValPrimal = v" and the "xVec = {...}" vector.
ExternalResult parse_sdpa_result(std::string_view text, int num_vars);

}  // namespace ratopt
