#pragma once

// Agreement and evaluation: Krippendorff's alpha (nominal) and set precision/recall/F1.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "itgkit/error.hpp"

namespace itgkit {

/// values[item][annotator]; an empty optional is a missing value.
template <class Category>
struct ReliabilityData {
    std::size_t annotators = 0;
    std::vector<std::vector<std::optional<Category>>> values;
};

struct AlphaResult {
    double alpha = 1.0;
    bool no_expected_disagreement = false;  // every pairable value identical; alpha set to 1
    std::size_t pairable_values = 0;        // n: values in items with >= 2 values
    std::size_t items_used = 0;
};

/// Nominal Krippendorff's alpha over the pooled coincidence matrix:
/// alpha = 1 - (n - 1) * sum_{c != k} o_ck / sum_{c != k} n_c n_k.
template <class Category>
AlphaResult krippendorff_alpha(const ReliabilityData<Category>& data) {
    if (data.annotators < 2) throw UsageError("reliability data needs at least two annotators");

    std::map<Category, std::size_t> index;
    for (const auto& row : data.values) {
        if (row.size() != data.annotators) throw UsageError("reliability row width differs from annotator count");
        for (const auto& v : row)
            if (v) index.emplace(*v, 0);
    }
    std::size_t next = 0;
    for (auto& [_, i] : index) i = next++;
    const std::size_t k = index.size();

    std::vector<double> coincidence(k * k, 0.0);
    AlphaResult r;
    std::vector<std::size_t> counts(k);
    for (const auto& row : data.values) {
        std::fill(counts.begin(), counts.end(), 0);
        std::size_t m = 0;
        for (const auto& v : row)
            if (v) {
                ++counts[index.at(*v)];
                ++m;
            }
        if (m < 2) continue;
        ++r.items_used;
        r.pairable_values += m;
        const double w = 1.0 / static_cast<double>(m - 1);
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            for (std::size_t d = 0; d < k; ++d) {
                const double pairs = static_cast<double>(counts[c]) *
                                     static_cast<double>(c == d ? counts[d] - 1 : counts[d]);
                coincidence[c * k + d] += pairs * w;
            }
        }
    }
    if (r.items_used == 0) throw UsageError("no item carries two or more values");

    std::vector<double> marginal(k, 0.0);
    double n = 0.0;
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t d = 0; d < k; ++d) {
            marginal[c] += coincidence[c * k + d];
            n += coincidence[c * k + d];
        }

    double observed = 0.0;
    double expected = 0.0;
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t d = 0; d < k; ++d) {
            if (c == d) continue;
            observed += coincidence[c * k + d];
            expected += marginal[c] * marginal[d];
        }
    if (expected == 0.0) {
        r.alpha = 1.0;
        r.no_expected_disagreement = true;
        return r;
    }
    r.alpha = 1.0 - (n - 1.0) * observed / expected;
    return r;
}

struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    bool both_empty = false;  // empty prediction and gold; all scores set to 1
};

inline PRF prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    PRF r{0.0, 0.0, 0.0, tp, fp, fn, false};
    if (tp + fp + fn == 0) {
        r.precision = r.recall = r.f1 = 1.0;
        r.both_empty = true;
        return r;
    }
    if (tp + fp > 0) r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (r.precision + r.recall > 0) r.f1 = 2 * r.precision * r.recall / (r.precision + r.recall);
    return r;
}

template <class T, class Compare>
PRF prf(const std::set<T, Compare>& predicted, const std::set<T, Compare>& gold) {
    std::size_t tp = 0;
    for (const auto& p : predicted)
        if (gold.contains(p)) ++tp;
    return prf_from_counts(tp, predicted.size() - tp, gold.size() - tp);
}

template <class T>
PRF prf(const std::vector<T>& predicted, const std::vector<T>& gold) {
    return prf(std::set<T>(predicted.begin(), predicted.end()), std::set<T>(gold.begin(), gold.end()));
}

}  // namespace itgkit
