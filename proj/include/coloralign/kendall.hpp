#pragma once

#include <cstdint>
#include <span>

namespace coloralign {

// Pair counts behind Kendall's tau-b for two sequences of length n.
//   n0 = n(n-1)/2, n1 = pairs tied in x, n2 = pairs tied in y,
//   s  = concordant - discordant.
struct TauCounts {
    std::int64_t n0 = 0;
    std::int64_t n1 = 0;
    std::int64_t n2 = 0;
    std::int64_t s = 0;
};

struct TauB {
    double tau = 0.0;
    TauCounts counts;
    // Two-sided p from the tie-corrected normal approximation.
    double p_normal = 1.0;
};

// Tau-b via Knight's O(n log n) merge-sort algorithm. tau is NaN when either
// sequence is constant.
TauB kendall_tau_b(std::span<const double> x, std::span<const double> y);

double tau_from_counts(const TauCounts& c);

}  // namespace coloralign
