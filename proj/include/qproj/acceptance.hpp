#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qproj/projections.hpp"
#include "qproj/record.hpp"
#include "qproj/rng.hpp"

namespace qproj {

struct SuiteOptions {
  std::uint64_t seed = 7;
  int jobs = 1;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::vector<std::string> notes;  // deterministic detail lines
  std::vector<ExperimentRecord> records;
  double seconds = 0;  // not part of any deterministic output
};

// Criteria 1..9 run in-process; 10 compares whole CLI runs and lives in the
// acceptance driver.
constexpr int kInProcessCriteria = 9;

CriterionResult run_criterion(int id, const SuiteOptions& opts);

// Per-instance generator seed; instance i of criterion c draws from
// Rng(instance_seed(root, c, i)).
std::uint64_t instance_seed(std::uint64_t root, int criterion, std::uint64_t index);

struct CnfInstance {
  Restriction tau;  // 1/4 of the cells fixed, the rest stars
  Cnf cnf;          // up to 5 clauses of width <= r, r in 1..3
  Rational p;       // k/16
};

CnfInstance random_cnf_instance(int max_n, Rng& rng);

// Tolerances.
constexpr double kGadgetTol = 1e-9;
constexpr double kSigmas = 3.0;
constexpr double kFbsDegSeconds = 60.0;

}  // namespace qproj
