// stats.hpp — small correlation helpers for sweep summaries and checks.

#ifndef FWSSR_STATS_HPP
#define FWSSR_STATS_HPP

#include <vector>

namespace fwssr {

// Ranks with ties assigned their average rank (1-based).
std::vector<double> average_ranks(const std::vector<double>& values);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

// Spearman rank correlation (Pearson on tie-averaged ranks).
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace fwssr

#endif  // FWSSR_STATS_HPP
