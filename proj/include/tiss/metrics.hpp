#pragma once

#include <string>
#include <vector>

#include "tiss/types.hpp"

namespace tiss {

using Signals = std::vector<std::vector<double>>;

struct EvalOptions {
  // Length of the FIR distortion filter the target projection may apply to
  // each reference.
  int filter_length = 512;
  double cap_db = 100.0;
};

// Scores of every (estimate i, reference j) pair.
struct PairScores {
  RMatrix sdr_db;  // K_est x K_ref
  RMatrix sir_db;
};

struct EvalReport {
  // Indexed by reference j; the matching estimate is permutation[j].
  std::vector<double> sdr_db;
  std::vector<double> sir_db;
  std::vector<int> permutation;
  std::vector<double> cost_trace;
};

// Time-domain least-squares decomposition of each estimate into target
// (projection onto delayed copies of reference j), interference (rest of the
// projection onto all references) and artifacts (residual).
//   SIR = 10 log10(|target|^2 / |interf|^2)
//   SDR = 10 log10(|target|^2 / |interf + artif|^2)
// References are zero-padded past their end, so delayed copies run
// filter_length - 1 samples beyond the estimate. Values are clamped to
// [-cap_db, cap_db].
PairScores score_pairs(const Signals& estimates, const Signals& references,
                       const EvalOptions& opts = {});

// Assignment maximizing the summed SIR over all K! permutations; ties go to
// the lexicographically first permutation. result[j] is the estimate used
// for reference j.
std::vector<int> permutation_align(const RMatrix& sir_db);
std::vector<int> permutation_align(const Signals& estimates, const Signals& references,
                                   const EvalOptions& opts = {});

EvalReport evaluate(const Signals& estimates, const Signals& references,
                    const EvalOptions& opts = {});

// {"sdr_db": [...], "sir_db": [...], "permutation": [...], "cost_trace": [...]}
std::string report_to_json(const EvalReport& report);

}  // namespace tiss
