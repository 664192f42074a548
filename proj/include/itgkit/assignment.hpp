#pragma once

// Exact maximum-weight bipartite matching (rectangular, partial) via the Hungarian
// method with a second lexicographic pass for deterministic tie-breaking.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace itgkit {

/// Row-major rows x cols weight matrix.
struct WeightMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> w;

    WeightMatrix() = default;
    WeightMatrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), w(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return w[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return w[i * cols + j]; }
};

struct HungarianResult {
    std::vector<std::size_t> row_to_col;
    std::vector<double> u;  // row potentials
    std::vector<double> v;  // column potentials
    double cost = 0.0;
};

/// Minimum-cost perfect assignment on an n x n cost matrix. Potentials satisfy
/// u[i] + v[j] <= cost(i, j) with equality on the returned assignment.
inline HungarianResult hungarian_min(const std::vector<double>& cost, std::size_t n) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0);
    std::vector<double> v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0);
    std::vector<std::size_t> way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    HungarianResult r;
    r.row_to_col.assign(n, 0);
    for (std::size_t j = 1; j <= n; ++j)
        if (p[j] != 0) r.row_to_col[p[j] - 1] = j - 1;
    r.u.assign(u.begin() + 1, u.end());
    r.v.assign(v.begin() + 1, v.end());
    for (std::size_t i = 0; i < n; ++i) r.cost += cost[i * n + r.row_to_col[i]];
    return r;
}

struct Matching {
    std::vector<std::optional<std::size_t>> row_to_col;  // only positive-weight pairs
    double objective = 0.0;
};

/// Secondary cost among optimal matchings; `None` marks an unmatched side (padding).
using TieCost = std::function<double(std::optional<std::size_t> row, std::optional<std::size_t> col)>;

/// Maximum total weight over partial one-to-one matchings of a non-negative weight
/// matrix. Among all optimal matchings the one minimizing `tie_cost` is returned.
/// Zero-weight pairs are never reported.
inline Matching max_weight_matching(const WeightMatrix& w, const TieCost& tie_cost = {}) {
    const std::size_t n = std::max(w.rows, w.cols);
    Matching out;
    out.row_to_col.assign(w.rows, std::nullopt);
    if (n == 0 || w.rows == 0 || w.cols == 0) return out;

    auto weight = [&](std::size_t i, std::size_t j) { return (i < w.rows && j < w.cols) ? w(i, j) : 0.0; };
    std::vector<double> cost(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = -weight(i, j);
    const auto primary = hungarian_min(cost, n);

    auto objective_of = [&](const std::vector<std::size_t>& assign) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += weight(i, assign[i]);
        return total;
    };
    std::vector<std::size_t> chosen = primary.row_to_col;
    const double best = objective_of(chosen);

    if (tie_cost) {
        // Every optimal assignment lives on edges that are tight under the optimal duals.
        constexpr double tol = 1e-9;
        double max_tie = 0.0;
        std::vector<double> tie(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const std::optional<std::size_t> r = i < w.rows ? std::optional(i) : std::nullopt;
                const std::optional<std::size_t> c = j < w.cols ? std::optional(j) : std::nullopt;
                tie[i * n + j] = tie_cost(r && c && weight(i, j) > 0 ? r : std::nullopt,
                                          r && c && weight(i, j) > 0 ? c : std::nullopt);
                max_tie = std::max(max_tie, std::abs(tie[i * n + j]));
            }
        const double big = (max_tie + 1.0) * static_cast<double>(n + 1);
        std::vector<double> restricted(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double slack = cost[i * n + j] - primary.u[i] - primary.v[j];
                restricted[i * n + j] = std::abs(slack) <= tol ? tie[i * n + j] : big;
            }
        const auto secondary = hungarian_min(restricted, n);
        if (objective_of(secondary.row_to_col) >= best - tol * static_cast<double>(n))
            chosen = secondary.row_to_col;
    }

    for (std::size_t i = 0; i < w.rows; ++i) {
        const std::size_t j = chosen[i];
        if (j < w.cols && w(i, j) > 0.0) {
            out.row_to_col[i] = j;
            out.objective += w(i, j);
        }
    }
    return out;
}

}  // namespace itgkit
