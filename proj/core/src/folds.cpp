#include "scarm/folds.hpp"

#include <map>
#include <numeric>
#include <stdexcept>

#include "scarm/rng.hpp"

namespace scarm {

std::vector<std::size_t> stratified_folds(const std::vector<std::uint8_t>& label,
                                          std::size_t k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("fold count must be >= 2");
    auto rng = make_rng(seed);
    std::vector<std::size_t> fold(label.size());
    for (std::uint8_t cls : {std::uint8_t{1}, std::uint8_t{0}}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < label.size(); ++i)
            if (label[i] == cls) idx.push_back(i);
        shuffle_inplace(idx, rng);
        for (std::size_t j = 0; j < idx.size(); ++j) fold[idx[j]] = j % k;
    }
    return fold;
}

std::vector<std::size_t> grouped_folds(const std::vector<std::string>& group,
                                       std::size_t k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("fold count must be >= 2");
    // first-appearance order keeps the assignment independent of string sort
    std::map<std::string, std::size_t> gid;
    std::vector<std::size_t> row_gid(group.size());
    for (std::size_t i = 0; i < group.size(); ++i) {
        auto [it, inserted] = gid.try_emplace(group[i], gid.size());
        row_gid[i] = it->second;
    }
    std::vector<std::size_t> order(gid.size());
    std::iota(order.begin(), order.end(), 0);
    auto rng = make_rng(seed);
    shuffle_inplace(order, rng);
    std::vector<std::size_t> group_fold(gid.size());
    for (std::size_t j = 0; j < order.size(); ++j) group_fold[order[j]] = j % k;
    std::vector<std::size_t> fold(group.size());
    for (std::size_t i = 0; i < group.size(); ++i) fold[i] = group_fold[row_gid[i]];
    return fold;
}

} // namespace scarm
