// SPDX-License-Identifier: Apache-2.0
#include "shflbw/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace shflbw {

namespace {

std::size_t keep_count(double ratio, std::size_t total) {
    return static_cast<std::size_t>(std::llround(ratio * double(total)));
}

std::vector<std::uint32_t> identity_permutation(std::uint32_t m) {
    std::vector<std::uint32_t> p(m);
    std::iota(p.begin(), p.end(), 0u);
    return p;
}

ImportanceMatrix permute_rows(const ImportanceMatrix& scores,
                              const std::vector<std::uint32_t>& perm) {
    std::vector<float> out(scores.size());
    for (std::uint32_t r = 0; r < scores.rows; ++r)
        std::copy_n(scores.scores.begin() + std::size_t(perm[r]) * scores.cols,
                    scores.cols, out.begin() + std::size_t(r) * scores.cols);
    return ImportanceMatrix(scores.rows, scores.cols, std::move(out));
}

} // namespace

ImportanceMatrix::ImportanceMatrix(std::uint32_t r, std::uint32_t c,
                                   std::vector<float> s)
    : rows(r), cols(c), scores(std::move(s)) {
    if (scores.size() != std::size_t(rows) * cols)
        throw BadParams("ImportanceMatrix: scores length != rows * cols");
    for (float x : scores)
        if (!std::isfinite(x) || x < 0.0f)
            throw BadParams("ImportanceMatrix: scores must be finite and "
                            "non-negative");
}

double PruneConfig::beta() const {
    return std::min(1.0, beta_factor * alpha);
}

void PruneConfig::validate(std::uint32_t rows) const {
    if (!(alpha > 0.0) || alpha > 1.0)
        throw BadParams("alpha must be in (0, 1]");
    if (!(beta_factor > 0.0)) throw BadParams("beta_factor must be positive");
    if (rows == 0 || v == 0 || rows % v != 0)
        throw BadParams("V must divide M, M >= 1");
    if (restarts == 0) throw BadParams("restarts must be >= 1");
    if (kmeans_max_iters == 0)
        throw BadParams("kmeans_max_iters must be >= 1");
}

ImportanceMatrix importance_scores(const DenseMatrix& weights) {
    std::vector<float> s(weights.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        s[i] = std::fabs(weights.values[i]);
    return ImportanceMatrix(weights.rows, weights.cols, std::move(s));
}

double kept_score(const ImportanceMatrix& scores, const SparsityMask& mask) {
    if (scores.rows != mask.rows || scores.cols != mask.cols)
        throw ShapeMismatch("kept_score: shapes differ");
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (mask.bits[i]) total += scores.scores[i];
    return total;
}

SparsityMask prune_unstructured(const ImportanceMatrix& scores,
                                double keep_ratio) {
    if (!(keep_ratio > 0.0) || keep_ratio > 1.0)
        throw BadParams("keep_ratio must be in (0, 1]");
    const std::size_t n = keep_count(keep_ratio, scores.size());
    std::vector<std::uint32_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) {
                  if (scores.scores[a] != scores.scores[b])
                      return scores.scores[a] > scores.scores[b];
                  return a < b;
              });
    SparsityMask mask(scores.rows, scores.cols);
    for (std::size_t i = 0; i < n; ++i) mask.bits[order[i]] = 1;
    return mask;
}

SparsityMask prune_vectorwise(const ImportanceMatrix& scores, std::uint32_t v,
                              double alpha) {
    if (v == 0 || scores.rows % v != 0) throw BadParams("V must divide M");
    if (!(alpha > 0.0) || alpha > 1.0)
        throw BadParams("alpha must be in (0, 1]");
    const std::uint32_t k = scores.cols;
    const std::size_t kcols = keep_count(alpha, k);
    SparsityMask mask(scores.rows, scores.cols);

    std::vector<double> sums(k);
    std::vector<std::uint32_t> order(k);
    for (std::uint32_t g = 0; g * v < scores.rows; ++g) {
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::uint32_t i = 0; i < v; ++i)
            for (std::uint32_t c = 0; c < k; ++c)
                sums[c] += scores.at(g * v + i, c);
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(),
                  [&](std::uint32_t a, std::uint32_t b) {
                      if (sums[a] != sums[b]) return sums[a] > sums[b];
                      return a < b;
                  });
        for (std::size_t j = 0; j < kcols; ++j)
            for (std::uint32_t i = 0; i < v; ++i)
                mask.at(g * v + i, order[j]) = 1;
    }
    return mask;
}

SparsityMask prune_blockwise(const ImportanceMatrix& scores, std::uint32_t v,
                             double alpha) {
    if (v == 0 || scores.rows % v != 0 || scores.cols % v != 0)
        throw BadParams("V must divide both M and K");
    if (alpha < 0.0 || alpha > 1.0)
        throw BadParams("alpha must be in [0, 1]");
    const std::uint32_t brows = scores.rows / v;
    const std::uint32_t bcols = scores.cols / v;
    const std::size_t nblocks =
        keep_count(alpha, std::size_t(brows) * bcols);

    std::vector<double> sums(std::size_t(brows) * bcols, 0.0);
    for (std::uint32_t r = 0; r < scores.rows; ++r)
        for (std::uint32_t c = 0; c < scores.cols; ++c)
            sums[std::size_t(r / v) * bcols + c / v] += scores.at(r, c);

    std::vector<std::uint32_t> order(sums.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) {
                  if (sums[a] != sums[b]) return sums[a] > sums[b];
                  return a < b; // linear index == (row, col) lexicographic
              });

    SparsityMask mask(scores.rows, scores.cols);
    for (std::size_t b = 0; b < nblocks; ++b) {
        const std::uint32_t br = order[b] / bcols;
        const std::uint32_t bc = order[b] % bcols;
        for (std::uint32_t i = 0; i < v; ++i)
            for (std::uint32_t j = 0; j < v; ++j)
                mask.at(br * v + i, bc * v + j) = 1;
    }
    return mask;
}

SparsityMask prune_balanced(const ImportanceMatrix& scores, std::uint32_t n,
                            std::uint32_t m) {
    if (m == 0 || n > m || scores.cols % m != 0)
        throw BadParams("balanced pruning needs n <= m and m | K");
    SparsityMask mask(scores.rows, scores.cols);
    std::vector<std::uint32_t> order(m);
    for (std::uint32_t r = 0; r < scores.rows; ++r)
        for (std::uint32_t w = 0; w * m < scores.cols; ++w) {
            std::iota(order.begin(), order.end(), 0u);
            std::sort(order.begin(), order.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                          const float sa = scores.at(r, w * m + a);
                          const float sb = scores.at(r, w * m + b);
                          if (sa != sb) return sa > sb;
                          return a < b;
                      });
            for (std::uint32_t j = 0; j < n; ++j)
                mask.at(r, w * m + order[j]) = 1;
        }
    return mask;
}

namespace {

// One balanced K-Means run; returns per-row group assignment.
std::vector<std::uint32_t> kmeans_assign(const SparsityMask& mask,
                                         std::uint32_t v, std::uint64_t seed,
                                         std::uint32_t max_iters) {
    const std::uint32_t m = mask.rows;
    const std::uint32_t k = mask.cols;
    const std::uint32_t g = m / v;

    auto row = [&](std::uint32_t r) {
        return mask.bits.data() + std::size_t(r) * k;
    };
    auto dist_to_row = [&](std::uint32_t a, std::uint32_t b) {
        const auto* x = row(a);
        const auto* y = row(b);
        double d = 0.0;
        for (std::uint32_t c = 0; c < k; ++c) {
            const double diff = double(x[c]) - double(y[c]);
            d += diff * diff;
        }
        return d;
    };

    // Farthest-point seeding.
    std::mt19937_64 rng(seed);
    std::vector<std::uint32_t> seeds_rows;
    seeds_rows.push_back(static_cast<std::uint32_t>(rng() % m));
    std::vector<double> nearest(m);
    for (std::uint32_t r = 0; r < m; ++r)
        nearest[r] = dist_to_row(r, seeds_rows[0]);
    while (seeds_rows.size() < g) {
        std::uint32_t best = 0;
        for (std::uint32_t r = 1; r < m; ++r)
            if (nearest[r] > nearest[best]) best = r;
        seeds_rows.push_back(best);
        for (std::uint32_t r = 0; r < m; ++r)
            nearest[r] = std::min(nearest[r], dist_to_row(r, best));
    }

    std::vector<double> centroids(std::size_t(g) * k);
    for (std::uint32_t c = 0; c < g; ++c)
        for (std::uint32_t j = 0; j < k; ++j)
            centroids[std::size_t(c) * k + j] = double(row(seeds_rows[c])[j]);

    std::vector<std::uint32_t> assign(m, g);
    std::vector<double> dist(std::size_t(m) * g);
    std::vector<double> margin(m);
    std::vector<std::uint32_t> row_order(m);
    std::vector<std::uint32_t> pref(g);
    std::vector<std::uint32_t> counts(g);

    for (std::uint32_t iter = 0; iter < max_iters; ++iter) {
        for (std::uint32_t r = 0; r < m; ++r) {
            const auto* x = row(r);
            double best = 0.0, second = 0.0;
            for (std::uint32_t c = 0; c < g; ++c) {
                const double* ctr = centroids.data() + std::size_t(c) * k;
                double d = 0.0;
                for (std::uint32_t j = 0; j < k; ++j) {
                    const double diff = double(x[j]) - ctr[j];
                    d += diff * diff;
                }
                dist[std::size_t(r) * g + c] = d;
                if (c == 0) {
                    best = second = d;
                } else if (d < best) {
                    second = best;
                    best = d;
                } else if (c == 1 || d < second) {
                    second = d;
                }
            }
            margin[r] = (g >= 2) ? second - best : 0.0;
        }

        // Confident rows (large margin) pick first.
        std::iota(row_order.begin(), row_order.end(), 0u);
        std::sort(row_order.begin(), row_order.end(),
                  [&](std::uint32_t a, std::uint32_t b) {
                      if (margin[a] != margin[b]) return margin[a] > margin[b];
                      return a < b;
                  });

        std::fill(counts.begin(), counts.end(), 0u);
        std::vector<std::uint32_t> next(m, g);
        for (std::uint32_t r : row_order) {
            const double* d = dist.data() + std::size_t(r) * g;
            std::iota(pref.begin(), pref.end(), 0u);
            std::sort(pref.begin(), pref.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                          if (d[a] != d[b]) return d[a] < d[b];
                          return a < b;
                      });
            for (std::uint32_t c : pref)
                if (counts[c] < v) {
                    next[r] = c;
                    ++counts[c];
                    break;
                }
        }

        std::fill(centroids.begin(), centroids.end(), 0.0);
        for (std::uint32_t r = 0; r < m; ++r) {
            double* ctr = centroids.data() + std::size_t(next[r]) * k;
            const auto* x = row(r);
            for (std::uint32_t j = 0; j < k; ++j) ctr[j] += double(x[j]);
        }
        for (double& x : centroids) x /= double(v);

        if (next == assign) break;
        assign = std::move(next);
    }
    return assign;
}

std::vector<std::uint32_t> assignment_to_order(
    const std::vector<std::uint32_t>& assign, std::uint32_t g) {
    std::vector<std::vector<std::uint32_t>> groups(g);
    for (std::uint32_t r = 0; r < assign.size(); ++r)
        groups[assign[r]].push_back(r); // ascending by construction
    std::sort(groups.begin(), groups.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    std::vector<std::uint32_t> order;
    order.reserve(assign.size());
    for (const auto& grp : groups)
        order.insert(order.end(), grp.begin(), grp.end());
    return order;
}

} // namespace

std::vector<std::uint32_t> kmeans_row_grouping(const SparsityMask& mask,
                                               std::uint32_t v,
                                               const PruneConfig& cfg,
                                               const ImportanceMatrix& scores) {
    if (v == 0 || mask.rows % v != 0) throw BadParams("V must divide M");
    if (mask.rows != scores.rows || mask.cols != scores.cols)
        throw ShapeMismatch("kmeans_row_grouping: mask and scores differ");
    cfg.validate(mask.rows);
    const std::uint32_t g = mask.rows / v;

    std::vector<std::uint32_t> best_order;
    double best_score = -1.0;
    for (std::uint32_t restart = 0; restart < cfg.restarts; ++restart) {
        auto assign = kmeans_assign(mask, v, cfg.seed + restart,
                                    cfg.kmeans_max_iters);
        auto order = assignment_to_order(assign, g);
        const auto permuted = permute_rows(scores, order);
        const double s =
            kept_score(permuted, prune_vectorwise(permuted, v, cfg.alpha));
        if (s > best_score) {
            best_score = s;
            best_order = std::move(order);
        }
    }
    return best_order;
}

PruneResult prune_shflbw(const ImportanceMatrix& scores,
                         const PruneConfig& cfg) {
    cfg.validate(scores.rows);
    const auto beta_mask = prune_unstructured(scores, cfg.beta());
    const auto perm = kmeans_row_grouping(beta_mask, cfg.v, cfg, scores);

    const auto permuted = permute_rows(scores, perm);
    const auto permuted_mask = prune_vectorwise(permuted, cfg.v, cfg.alpha);
    SparsityMask shuffled(scores.rows, scores.cols);
    for (std::uint32_t r = 0; r < scores.rows; ++r)
        std::copy_n(permuted_mask.bits.begin() + std::size_t(r) * scores.cols,
                    scores.cols,
                    shuffled.bits.begin() + std::size_t(perm[r]) * scores.cols);
    const double shuffled_score = kept_score(scores, shuffled);

    // Safety net: never lose to the identity-permutation vector-wise prune.
    auto identity_mask = prune_vectorwise(scores, cfg.v, cfg.alpha);
    const double identity_score = kept_score(scores, identity_mask);

    if (identity_score >= shuffled_score)
        return {std::move(identity_mask), identity_permutation(scores.rows),
                identity_score};
    return {std::move(shuffled), perm, shuffled_score};
}

} // namespace shflbw
