#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace scarm {

// Nested cross-fitting layout. Outer folds produce out-of-fold nuisance
// predictions; inner folds select hyperparameters within each outer
// training set. Propensity folds are stratified on the treatment label,
// outcome folds are grouped by subject so no subject straddles folds.
struct CrossFitPlan {
    std::size_t outer_folds = 5;
    std::size_t inner_folds = 3;
    std::uint64_t seed = 0;
};

// fold id per row, sizes balanced within each stratum.
std::vector<std::size_t> stratified_folds(const std::vector<std::uint8_t>& label,
                                          std::size_t k, std::uint64_t seed);

// fold id per row; rows sharing a group land in the same fold.
std::vector<std::size_t> grouped_folds(const std::vector<std::string>& group,
                                       std::size_t k, std::uint64_t seed);

} // namespace scarm
