#pragma once

// Seeded k-means (k-means++ initialization + Lloyd iterations) on 3D points.
// Used to split the casting's boundary faces into wall-temperature domains.

#include <limits>
#include <vector>

#include "castopt/common.hpp"
#include "castopt/rng.hpp"

namespace castopt {

struct KMeansResult {
    std::vector<int> assignment;          // point -> cluster id
    std::vector<Vec3> centroids;          // final cluster centers
    std::vector<double> inertia_history;  // total squared distance after each assignment pass
    int iterations = 0;
};

/// k-means++ seeding: first center uniform, the rest sampled with probability
/// proportional to the squared distance to the nearest chosen center. Chosen
/// points have zero weight, so with distinct inputs the centers are distinct.
inline std::vector<Vec3> kmeans_plus_plus(const std::vector<Vec3>& pts, int k, Rng& rng) {
    std::vector<Vec3> centers;
    centers.reserve(static_cast<std::size_t>(k));
    centers.push_back(pts[rng.uniform_index(pts.size())]);
    std::vector<double> d2(pts.size());
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            double best = squared_distance(pts[i], centers[0]);
            for (std::size_t j = 1; j < centers.size(); ++j)
                best = std::min(best, squared_distance(pts[i], centers[j]));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            // All remaining points coincide with existing centers; reuse one.
            centers.push_back(pts[rng.uniform_index(pts.size())]);
            continue;
        }
        double target = rng.uniform01() * total;
        double run = 0.0;
        std::size_t pick = pts.size() - 1;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            run += d2[i];
            if (run >= target) {
                pick = i;
                break;
            }
        }
        centers.push_back(pts[pick]);
    }
    return centers;
}

inline KMeansResult kmeans(const std::vector<Vec3>& pts, int k, std::uint64_t seed,
                           int max_iterations = 300) {
    if (k <= 0) throw ValidationError("kmeans: cluster count must be positive");
    if (static_cast<std::size_t>(k) > pts.size())
        throw ValidationError("kmeans: more clusters than points");

    Rng rng(seed);
    KMeansResult r;
    r.centroids = kmeans_plus_plus(pts, k, rng);
    r.assignment.assign(pts.size(), -1);

    std::vector<Vec3> sums(static_cast<std::size_t>(k));
    std::vector<std::size_t> counts(static_cast<std::size_t>(k));

    for (int iter = 0; iter < max_iterations; ++iter) {
        // Assignment pass; ties go to the lowest cluster index.
        bool changed = false;
        double inertia = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            int best = 0;
            double bestd = squared_distance(pts[i], r.centroids[0]);
            for (int c = 1; c < k; ++c) {
                double d = squared_distance(pts[i], r.centroids[static_cast<std::size_t>(c)]);
                if (d < bestd) {
                    bestd = d;
                    best = c;
                }
            }
            if (r.assignment[i] != best) {
                r.assignment[i] = best;
                changed = true;
            }
            inertia += bestd;
        }
        r.inertia_history.push_back(inertia);
        r.iterations = iter + 1;
        if (!changed && iter > 0) break;

        // Update pass.
        for (int c = 0; c < k; ++c) {
            sums[static_cast<std::size_t>(c)] = {0.0, 0.0, 0.0};
            counts[static_cast<std::size_t>(c)] = 0;
        }
        for (std::size_t i = 0; i < pts.size(); ++i) {
            auto c = static_cast<std::size_t>(r.assignment[i]);
            for (int d = 0; d < 3; ++d) sums[c][static_cast<std::size_t>(d)] += pts[i][static_cast<std::size_t>(d)];
            counts[c]++;
        }
        for (int c = 0; c < k; ++c) {
            auto cs = static_cast<std::size_t>(c);
            if (counts[cs] == 0) {
                // Re-seed an emptied cluster to the point farthest from its
                // current centroid, so every domain keeps at least one face.
                double worst = -1.0;
                std::size_t pick = 0;
                for (std::size_t i = 0; i < pts.size(); ++i) {
                    double d = squared_distance(
                        pts[i], r.centroids[static_cast<std::size_t>(r.assignment[i])]);
                    if (d > worst) {
                        worst = d;
                        pick = i;
                    }
                }
                r.centroids[cs] = pts[pick];
            } else {
                for (int d = 0; d < 3; ++d)
                    r.centroids[cs][static_cast<std::size_t>(d)] =
                        sums[cs][static_cast<std::size_t>(d)] / static_cast<double>(counts[cs]);
            }
        }
    }
    return r;
}

}  // namespace castopt
