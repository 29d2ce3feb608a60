#pragma once

// Evolutionary optimizers on real-coded genomes inside a box.
//
// Shared machinery: binary-ish tournament built from 4 distinct contestants
// (the best two become the parents), uniform crossover (per-gene coin flip),
// and uniform-resample mutation (a mutated gene is redrawn uniformly from its
// interval). Single-objective search is a plain elitist GA; multi-objective
// search is the non-dominated-sorting GA: rank by Pareto front, break ties by
// crowding distance, survivors picked from the merged parent+offspring pool.
//
// Tie handling is deliberately order-free: contestants are drawn in random
// order and ranked with a stable sort, so equal-fitness candidates win with
// equal probability while runs stay reproducible for a fixed seed.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "castopt/common.hpp"
#include "castopt/rng.hpp"
#include "castopt/sampling.hpp"

namespace castopt {

struct EvolveConfig {
    int population = 25;
    int generations = 50;
    double crossover_p = 0.8;
    double mutation_p = 0.1;
    std::uint64_t seed = 0;
};

struct Individual {
    std::vector<double> genes;
    std::vector<double> objectives;
    int rank = 0;             // Pareto front index (multi-objective runs)
    double crowding = 0.0;    // crowding distance within its front
};

/// a dominates b: no objective worse, at least one strictly better.
inline bool dominates(const std::vector<double>& a, const std::vector<double>& b) {
    bool strictly = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) return false;
        if (a[i] < b[i]) strictly = true;
    }
    return strictly;
}

/// Draw 4 distinct contestants and return the two best under `better`.
/// `better` must be a strict weak ordering; ties keep the random draw order.
template <class Better>
std::pair<std::size_t, std::size_t> tournament_pick(std::size_t pool, Better&& better, Rng& rng) {
    if (pool < 4) throw ValidationError("tournament: need at least 4 candidates");
    std::vector<std::size_t> c = rng.sample_distinct(pool, 4);
    std::stable_sort(c.begin(), c.end(),
                     [&](std::size_t a, std::size_t b) { return better(a, b); });
    return {c[0], c[1]};
}

/// Uniform crossover: with probability crossover_p the child mixes both
/// parents gene-by-gene (fair coin per gene); otherwise it copies parent a.
inline std::vector<double> uniform_crossover(const std::vector<double>& a,
                                             const std::vector<double>& b, double crossover_p,
                                             Rng& rng) {
    std::vector<double> child = a;
    if (rng.uniform01() < crossover_p)
        for (std::size_t g = 0; g < child.size(); ++g)
            if (rng.uniform01() < 0.5) child[g] = b[g];
    return child;
}

/// Uniform-resample mutation: each gene is independently redrawn from its
/// interval with probability mutation_p. Results always stay in the box.
inline void mutate(std::vector<double>& genes, const std::vector<Interval>& bounds,
                   double mutation_p, Rng& rng) {
    for (std::size_t g = 0; g < genes.size(); ++g)
        if (rng.uniform01() < mutation_p) genes[g] = rng.uniform(bounds[g].lo, bounds[g].hi);
}

using ScalarObjective = std::function<double(const std::vector<double>&)>;
using VectorObjective = std::function<std::vector<double>(const std::vector<double>&)>;

struct GaResult {
    Individual best;
    std::vector<double> best_history;  // best fitness after each generation (incl. initial)
};

/// Elitist single-objective minimization. The initial population is a Latin
/// hypercube over the box; each later generation keeps the best individual
/// unchanged and fills the rest with tournament/crossover/mutation offspring.
inline GaResult ga_minimize(const ScalarObjective& f, const std::vector<Interval>& bounds,
                            const EvolveConfig& cfg) {
    if (cfg.population < 4) throw ValidationError("ga: population must be at least 4");
    if (bounds.empty()) throw ValidationError("ga: empty design box");
    Rng rng(derive_seed(cfg.seed, "ga"));

    auto evaluate = [&](const std::vector<double>& genes) {
        const double v = f(genes);
        if (!std::isfinite(v)) throw SolveError("ga: objective returned a non-finite value");
        return v;
    };

    std::vector<std::vector<double>> genes = latin_hypercube(
        static_cast<std::size_t>(cfg.population), bounds, derive_seed(cfg.seed, "ga-init"));
    std::vector<double> fit(genes.size());
    for (std::size_t i = 0; i < genes.size(); ++i) fit[i] = evaluate(genes[i]);

    GaResult out;
    auto best_of = [&]() {
        return static_cast<std::size_t>(
            std::min_element(fit.begin(), fit.end()) - fit.begin());
    };
    out.best_history.push_back(fit[best_of()]);

    for (int gen = 0; gen < cfg.generations; ++gen) {
        std::vector<std::vector<double>> next;
        std::vector<double> next_fit;
        next.reserve(genes.size());
        const std::size_t elite = best_of();
        next.push_back(genes[elite]);
        next_fit.push_back(fit[elite]);
        while (next.size() < genes.size()) {
            auto [pa, pb] = tournament_pick(
                genes.size(), [&](std::size_t a, std::size_t b) { return fit[a] < fit[b]; }, rng);
            std::vector<double> child = uniform_crossover(genes[pa], genes[pb], cfg.crossover_p, rng);
            mutate(child, bounds, cfg.mutation_p, rng);
            next_fit.push_back(evaluate(child));
            next.push_back(std::move(child));
        }
        genes.swap(next);
        fit.swap(next_fit);
        out.best_history.push_back(fit[best_of()]);
    }

    const std::size_t b = best_of();
    out.best.genes = genes[b];
    out.best.objectives = {fit[b]};
    return out;
}

/// Fast non-dominated sort; returns the front index per point (0 = best).
inline std::vector<int> fast_nondominated_sort(const std::vector<std::vector<double>>& objs) {
    const std::size_t n = objs.size();
    std::vector<int> rank(n, -1);
    std::vector<int> dominated_count(n, 0);
    std::vector<std::vector<std::size_t>> dominates_list(n);
    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (dominates(objs[i], objs[j])) {
                dominates_list[i].push_back(j);
                ++dominated_count[j];
            } else if (dominates(objs[j], objs[i])) {
                dominates_list[j].push_back(i);
                ++dominated_count[i];
            }
        }
    for (std::size_t i = 0; i < n; ++i)
        if (dominated_count[i] == 0) {
            rank[i] = 0;
            current.push_back(i);
        }
    int level = 0;
    while (!current.empty()) {
        std::vector<std::size_t> nxt;
        for (std::size_t i : current)
            for (std::size_t j : dominates_list[i])
                if (--dominated_count[j] == 0) {
                    rank[j] = level + 1;
                    nxt.push_back(j);
                }
        ++level;
        current.swap(nxt);
    }
    return rank;
}

/// Crowding distance within one front. Boundary points get +infinity; others
/// the sum over objectives of the neighbor gap normalized by the objective
/// range in the front. Duplicated objective vectors receive equal values.
inline std::vector<double> crowding_distance(const std::vector<std::vector<double>>& objs) {
    const std::size_t n = objs.size();
    std::vector<double> dist(n, 0.0);
    if (n == 0) return dist;
    if (n <= 2) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        return dist;
    }
    const std::size_t m = objs[0].size();
    std::vector<std::size_t> order(n);
    for (std::size_t obj = 0; obj < m; ++obj) {
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (objs[a][obj] != objs[b][obj]) return objs[a][obj] < objs[b][obj];
            return a < b;  // deterministic among duplicates
        });
        const double lo = objs[order.front()][obj], hi = objs[order.back()][obj];
        dist[order.front()] = std::numeric_limits<double>::infinity();
        dist[order.back()] = std::numeric_limits<double>::infinity();
        if (!(hi > lo)) continue;  // degenerate objective: no interior contribution
        for (std::size_t i = 1; i + 1 < n; ++i)
            dist[order[i]] += (objs[order[i + 1]][obj] - objs[order[i - 1]][obj]) / (hi - lo);
    }
    return dist;
}

struct NsgaGenerationStats {
    std::vector<double> best;  // per-objective minimum in the population
    std::size_t front_size = 0;
};

struct NsgaResult {
    std::vector<Individual> front;       // final first front
    std::vector<Individual> population;  // full final population
    std::vector<NsgaGenerationStats> history;
};

/// NSGA-II minimization of a vector objective over a box.
inline NsgaResult nsga2(const VectorObjective& f, const std::vector<Interval>& bounds,
                        const EvolveConfig& cfg) {
    if (cfg.population < 4) throw ValidationError("nsga2: population must be at least 4");
    Rng rng(derive_seed(cfg.seed, "nsga"));

    auto evaluate = [&](const std::vector<double>& genes) {
        std::vector<double> v = f(genes);
        if (v.empty()) throw ValidationError("nsga2: empty objective vector");
        for (double x : v)
            if (!std::isfinite(x)) throw SolveError("nsga2: objective returned non-finite value");
        return v;
    };

    std::vector<Individual> pop;
    for (auto& g : latin_hypercube(static_cast<std::size_t>(cfg.population), bounds,
                                   derive_seed(cfg.seed, "nsga-init"))) {
        Individual ind;
        ind.objectives = evaluate(g);
        ind.genes = std::move(g);
        pop.push_back(std::move(ind));
    }

    // Rank + crowding over an arbitrary population, in place.
    auto classify = [](std::vector<Individual>& p) {
        std::vector<std::vector<double>> objs;
        objs.reserve(p.size());
        for (const auto& ind : p) objs.push_back(ind.objectives);
        const std::vector<int> rank = fast_nondominated_sort(objs);
        int levels = 0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            p[i].rank = rank[i];
            levels = std::max(levels, rank[i] + 1);
        }
        for (int level = 0; level < levels; ++level) {
            std::vector<std::size_t> members;
            std::vector<std::vector<double>> fobjs;
            for (std::size_t i = 0; i < p.size(); ++i)
                if (rank[i] == level) {
                    members.push_back(i);
                    fobjs.push_back(objs[i]);
                }
            const std::vector<double> cd = crowding_distance(fobjs);
            for (std::size_t i = 0; i < members.size(); ++i) p[members[i]].crowding = cd[i];
        }
    };
    classify(pop);

    NsgaResult out;
    auto record = [&]() {
        NsgaGenerationStats st;
        st.best.assign(pop[0].objectives.size(), std::numeric_limits<double>::infinity());
        for (const auto& ind : pop) {
            if (ind.rank == 0) ++st.front_size;
            for (std::size_t o = 0; o < st.best.size(); ++o)
                st.best[o] = std::min(st.best[o], ind.objectives[o]);
        }
        out.history.push_back(std::move(st));
    };
    record();

    auto crowded_better = [&](std::size_t a, std::size_t b) {
        if (pop[a].rank != pop[b].rank) return pop[a].rank < pop[b].rank;
        return pop[a].crowding > pop[b].crowding;
    };

    for (int gen = 0; gen < cfg.generations; ++gen) {
        std::vector<Individual> merged = pop;
        for (int c = 0; c < cfg.population; ++c) {
            auto [pa, pb] = tournament_pick(pop.size(), crowded_better, rng);
            Individual child;
            child.genes = uniform_crossover(pop[pa].genes, pop[pb].genes, cfg.crossover_p, rng);
            mutate(child.genes, bounds, cfg.mutation_p, rng);
            child.objectives = evaluate(child.genes);
            merged.push_back(std::move(child));
        }
        classify(merged);

        // Survivor selection: whole fronts first, then crowding inside the
        // last partially admitted front (stable among exact ties).
        std::vector<std::size_t> order(merged.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (merged[a].rank != merged[b].rank) return merged[a].rank < merged[b].rank;
            return merged[a].crowding > merged[b].crowding;
        });
        std::vector<Individual> next;
        next.reserve(static_cast<std::size_t>(cfg.population));
        for (int i = 0; i < cfg.population; ++i) next.push_back(merged[order[static_cast<std::size_t>(i)]]);
        pop.swap(next);
        classify(pop);  // re-rank within the survivors
        record();
    }

    out.population = pop;
    for (const auto& ind : pop)
        if (ind.rank == 0) out.front.push_back(ind);
    return out;
}

}  // namespace castopt
