#pragma once

#include "qproj/boolfn.hpp"
#include "qproj/rational.hpp"

// Slow reference implementations used to cross-check the main algorithms.
namespace qproj::oracle {

// Plain recursion over the set of still-consistent inputs.
int dt_depth(const PartialFn& f);
// Subsets in order of size, each checked against every defined input.
int cert_complexity(const PartialFn& f, Input x);
// Max disjoint family over all (not just minimal) sensitive blocks.
int block_sensitivity(const PartialFn& f, Input x);
// Largest |S| with nonzero Fourier coefficient.
int degree(const PartialFn& f);

}  // namespace qproj::oracle
