#pragma once

// Brute-force verification tools for the optimizers.
//
// The same boundary-condition reductions the original process study uses are
// provided here: a two-variable slice of the full design space is swept on a
// dense inclusive grid, minima are read off exactly, and the grid's
// non-dominated subset is extracted by pairwise comparison. Evolutionary
// results can then be checked against these exhaustive answers (argmin
// distance, objective value, hypervolume, and point-to-front distances).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "castopt/common.hpp"
#include "castopt/surrogate.hpp"
#include "castopt/text.hpp"

namespace castopt {

/// Two-variable restriction of the full (1 + n_domains)-dimensional design.
///  * uniform: a = melt temperature, b = common wall temperature
///  * split:   melt fixed, a = wall temperature of the first half of the
///             domains, b = wall temperature of the second half
struct Reduction {
    enum class Kind { uniform, split };

    Kind kind = Kind::uniform;
    int n_domains = 10;
    double fixed_t_init = 1000.0;

    const char* name() const { return kind == Kind::uniform ? "uniform" : "split"; }

    std::array<const char*, 2> axis_names() const {
        if (kind == Kind::uniform) return {"t_init", "t_wall"};
        return {"t_wall_front", "t_wall_back"};
    }

    std::array<Interval, 2> axes(const DesignBounds& b) const {
        if (kind == Kind::uniform) return {b.t_init, b.t_wall};
        return {b.t_wall, b.t_wall};
    }

    std::vector<double> expand(double a, double b) const {
        std::vector<double> design(static_cast<std::size_t>(n_domains) + 1);
        if (kind == Kind::uniform) {
            design[0] = a;
            for (int d = 0; d < n_domains; ++d) design[static_cast<std::size_t>(d) + 1] = b;
        } else {
            design[0] = fixed_t_init;
            const int half = n_domains / 2;
            for (int d = 0; d < n_domains; ++d)
                design[static_cast<std::size_t>(d) + 1] = d < half ? a : b;
        }
        return design;
    }
};

/// Inclusive linspace with n points (first = lo, last = hi).
inline std::vector<double> linspace(double lo, double hi, int n) {
    if (n < 2) throw ValidationError("linspace: need at least two points");
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        v[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    return v;
}

struct SweepGrid {
    Reduction reduction;
    std::vector<double> axis_a;  // n points
    std::vector<double> axis_b;  // n points
    std::vector<int> objective_ids;
    Matrix values;  // (n*n) x m, row = ia * n + ib

    std::size_t row_index(int ia, int ib) const {
        return static_cast<std::size_t>(ia) * axis_b.size() + static_cast<std::size_t>(ib);
    }
};

/// Evaluate selected surrogate objectives on the full dense grid.
inline SweepGrid sweep(const SurrogateModel& model, const Reduction& red,
                       const DesignBounds& bounds, const std::vector<int>& objective_ids,
                       int points_per_axis = 200) {
    SweepGrid g;
    g.reduction = red;
    g.objective_ids = objective_ids;
    const auto ax = red.axes(bounds);
    g.axis_a = linspace(ax[0].lo, ax[0].hi, points_per_axis);
    g.axis_b = linspace(ax[1].lo, ax[1].hi, points_per_axis);
    g.values = Matrix(g.axis_a.size() * g.axis_b.size(), objective_ids.size());
    for (std::size_t ia = 0; ia < g.axis_a.size(); ++ia)
        for (std::size_t ib = 0; ib < g.axis_b.size(); ++ib) {
            const std::vector<double> design = red.expand(g.axis_a[ia], g.axis_b[ib]);
            const std::size_t r = ia * g.axis_b.size() + ib;
            for (std::size_t m = 0; m < objective_ids.size(); ++m)
                g.values(r, m) =
                    model.nets[static_cast<std::size_t>(objective_ids[m])].predict(design);
        }
    return g;
}

struct SweepMin {
    int ia = 0, ib = 0;
    double a = 0.0, b = 0.0;
    double value = 0.0;
};

/// Exact argmin over the grid for one objective column (ties: first in row order).
inline SweepMin sweep_min(const SweepGrid& g, int column) {
    SweepMin best;
    best.value = g.values(0, static_cast<std::size_t>(column));
    for (std::size_t ia = 0; ia < g.axis_a.size(); ++ia)
        for (std::size_t ib = 0; ib < g.axis_b.size(); ++ib) {
            const double v = g.values(ia * g.axis_b.size() + ib, static_cast<std::size_t>(column));
            if (v < best.value) {
                best.value = v;
                best.ia = static_cast<int>(ia);
                best.ib = static_cast<int>(ib);
            }
        }
    best.a = g.axis_a[static_cast<std::size_t>(best.ia)];
    best.b = g.axis_b[static_cast<std::size_t>(best.ib)];
    return best;
}

/// Indices of the non-dominated rows, by direct pairwise comparison. A set of
/// identical rows dominates nothing, so it is returned whole.
inline std::vector<std::size_t> brute_pareto(const Matrix& objs) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < objs.rows; ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < objs.rows && !dominated; ++j) {
            if (j == i) continue;
            bool worse_somewhere = false, better_somewhere = false;
            for (std::size_t c = 0; c < objs.cols; ++c) {
                if (objs(j, c) > objs(i, c)) worse_somewhere = true;
                if (objs(j, c) < objs(i, c)) better_somewhere = true;
            }
            dominated = better_somewhere && !worse_somewhere;
        }
        if (!dominated) keep.push_back(i);
    }
    return keep;
}

/// Hypervolume dominated by a 2D minimization set relative to `ref`.
/// Points at or beyond the reference contribute nothing.
inline double hypervolume_2d(std::vector<std::array<double, 2>> pts, const std::array<double, 2>& ref) {
    std::erase_if(pts, [&](const auto& p) { return p[0] >= ref[0] || p[1] >= ref[1]; });
    std::sort(pts.begin(), pts.end());
    double hv = 0.0, best_y = ref[1];
    for (const auto& p : pts)
        if (p[1] < best_y) {
            hv += (ref[0] - p[0]) * (best_y - p[1]);
            best_y = p[1];
        }
    return hv;
}

/// 3D hypervolume by sweeping the third objective: between consecutive z
/// levels the dominated area is the 2D hypervolume of everything at or below
/// the slab, integrated over the slab thickness.
inline double hypervolume_3d(std::vector<std::array<double, 3>> pts, const std::array<double, 3>& ref) {
    std::erase_if(pts, [&](const auto& p) {
        return p[0] >= ref[0] || p[1] >= ref[1] || p[2] >= ref[2];
    });
    if (pts.empty()) return 0.0;
    std::sort(pts.begin(), pts.end(),
              [](const auto& a, const auto& b) { return a[2] < b[2]; });
    std::vector<double> levels;
    for (const auto& p : pts)
        if (levels.empty() || p[2] > levels.back()) levels.push_back(p[2]);
    levels.push_back(ref[2]);

    double hv = 0.0;
    std::vector<std::array<double, 2>> below;
    std::size_t next = 0;
    for (std::size_t l = 0; l + 1 < levels.size(); ++l) {
        while (next < pts.size() && pts[next][2] <= levels[l]) {
            below.push_back({pts[next][0], pts[next][1]});
            ++next;
        }
        hv += (levels[l + 1] - levels[l]) * hypervolume_2d(below, {ref[0], ref[1]});
    }
    return hv;
}

inline double hypervolume(const Matrix& pts, const std::vector<double>& ref) {
    if (pts.cols != ref.size()) throw ValidationError("hypervolume: ref dimension mismatch");
    if (pts.cols == 2) {
        std::vector<std::array<double, 2>> v(pts.rows);
        for (std::size_t i = 0; i < pts.rows; ++i) v[i] = {pts(i, 0), pts(i, 1)};
        return hypervolume_2d(std::move(v), {ref[0], ref[1]});
    }
    if (pts.cols == 3) {
        std::vector<std::array<double, 3>> v(pts.rows);
        for (std::size_t i = 0; i < pts.rows; ++i) v[i] = {pts(i, 0), pts(i, 1), pts(i, 2)};
        return hypervolume_3d(std::move(v), {ref[0], ref[1], ref[2]});
    }
    throw ValidationError("hypervolume: only 2 or 3 objectives supported");
}

struct FrontComparison {
    std::size_t count_a = 0, count_b = 0;
    double hv_a = 0.0, hv_b = 0.0;
    double hv_rel_diff = 0.0;          // |hv_a - hv_b| / hv_b
    double max_nearest_a_to_b = 0.0;   // worst distance from an A point to B
    double max_nearest_b_to_a = 0.0;
};

/// Compare a candidate front A against a reference front B. Objectives are
/// min-max normalized so the metrics are unit-free; `range` supplies the
/// normalizing spans (e.g. the full sweep grid's spread, which stays
/// well-conditioned even when a front collapses to a point) and defaults to
/// the combined range of the two fronts. A zero-width axis carries no
/// information and normalizes to 0. The hypervolume reference point sits
/// 0.05 beyond the per-axis maximum of the two normalized fronts.
inline FrontComparison compare_front(const Matrix& a, const Matrix& b,
                                     std::vector<Interval> range = {}) {
    if (a.cols != b.cols) throw ValidationError("compare_front: objective count mismatch");
    if (a.rows == 0 || b.rows == 0) throw ValidationError("compare_front: empty front");
    if (range.empty()) {
        range.resize(a.cols);
        for (std::size_t c = 0; c < a.cols; ++c) {
            range[c] = {a(0, c), a(0, c)};
            for (const Matrix* m : {&a, &b})
                for (std::size_t r = 0; r < m->rows; ++r) {
                    range[c].lo = std::min(range[c].lo, (*m)(r, c));
                    range[c].hi = std::max(range[c].hi, (*m)(r, c));
                }
        }
    } else if (range.size() != a.cols) {
        throw ValidationError("compare_front: normalization range dimension mismatch");
    }
    auto normalized = [&](const Matrix& m) {
        Matrix out(m.rows, m.cols);
        for (std::size_t r = 0; r < m.rows; ++r)
            for (std::size_t c = 0; c < m.cols; ++c) {
                const double w = range[c].hi - range[c].lo;
                out(r, c) = w > 0.0 ? (m(r, c) - range[c].lo) / w : 0.0;
            }
        return out;
    };
    const Matrix na = normalized(a), nb = normalized(b);

    FrontComparison cmp;
    cmp.count_a = a.rows;
    cmp.count_b = b.rows;
    std::vector<double> ref(a.cols, -std::numeric_limits<double>::infinity());
    for (const Matrix* m : {&na, &nb})
        for (std::size_t r = 0; r < m->rows; ++r)
            for (std::size_t c = 0; c < m->cols; ++c) ref[c] = std::max(ref[c], (*m)(r, c));
    for (auto& v : ref) v += 0.05;
    cmp.hv_a = hypervolume(na, ref);
    cmp.hv_b = hypervolume(nb, ref);
    cmp.hv_rel_diff = cmp.hv_b > 0.0 ? std::fabs(cmp.hv_a - cmp.hv_b) / cmp.hv_b
                                     : std::fabs(cmp.hv_a - cmp.hv_b);

    auto directed = [](const Matrix& from, const Matrix& to) {
        double worst = 0.0;
        for (std::size_t i = 0; i < from.rows; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < to.rows; ++j) {
                double d2 = 0.0;
                for (std::size_t c = 0; c < from.cols; ++c) d2 += sq(from(i, c) - to(j, c));
                best = std::min(best, d2);
            }
            worst = std::max(worst, best);
        }
        return std::sqrt(worst);
    };
    cmp.max_nearest_a_to_b = directed(na, nb);
    cmp.max_nearest_b_to_a = directed(nb, na);
    return cmp;
}

/// Key-value text report of a front comparison.
inline std::string comparison_report(const FrontComparison& c) {
    std::string out;
    out += "front_a_count = " + std::to_string(c.count_a) + "\n";
    out += "front_b_count = " + std::to_string(c.count_b) + "\n";
    out += "hv_a = " + fmt_double(c.hv_a) + "\n";
    out += "hv_b = " + fmt_double(c.hv_b) + "\n";
    out += "hv_rel_diff = " + fmt_double(c.hv_rel_diff) + "\n";
    out += "max_nearest_a_to_b = " + fmt_double(c.max_nearest_a_to_b) + "\n";
    out += "max_nearest_b_to_a = " + fmt_double(c.max_nearest_b_to_a) + "\n";
    return out;
}

}  // namespace castopt
