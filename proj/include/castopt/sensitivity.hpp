#pragma once

// Post-optimization sensitivity analysis over a Pareto front.
//
// For each front member the Jacobian of the surrogate objectives with respect
// to the design variables is estimated by central differences in *normalized*
// coordinates (inputs mapped to [0,1], outputs in training-range units), so
// the entries of different rows are comparable. Members are then ranked by
// the L1 norm of their Jacobian; the member with the smallest norm is the
// "stable optimum" - the compromise design least sensitive to process
// scatter.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "castopt/common.hpp"
#include "castopt/evolve.hpp"
#include "castopt/surrogate.hpp"
#include "castopt/text.hpp"

namespace castopt {

struct JacobianResult {
    Matrix j;                            // m x n, d f_i / d x_j
    std::vector<std::uint8_t> one_sided;  // per input: 1 when the step was folded at the box edge
};

/// Central-difference Jacobian of f: [0,1]^n -> R^m at x0. Steps that would
/// leave `box` fall back to a one-sided difference and are flagged.
inline JacobianResult jacobian_central(
    const std::function<std::vector<double>(const std::vector<double>&)>& f,
    const std::vector<double>& x0, double h, const std::vector<Interval>& box) {
    if (x0.size() != box.size()) throw ValidationError("jacobian: point/box size mismatch");
    if (!(h > 0.0)) throw ValidationError("jacobian: step must be positive");

    JacobianResult out;
    out.one_sided.assign(x0.size(), 0);
    std::vector<double> f0;  // only evaluated if some input needs a one-sided step

    for (std::size_t i = 0; i < x0.size(); ++i) {
        const bool hi_ok = x0[i] + h <= box[i].hi;
        const bool lo_ok = x0[i] - h >= box[i].lo;
        if (!hi_ok && !lo_ok)
            throw ValidationError("jacobian: interval narrower than the step");
        std::vector<double> xp = x0, xm = x0;
        double denom = 2.0 * h;
        if (hi_ok && lo_ok) {
            xp[i] += h;
            xm[i] -= h;
        } else {
            out.one_sided[i] = 1;
            denom = h;
            if (hi_ok)
                xp[i] += h;
            else
                xm[i] -= h;
            if (f0.empty()) f0 = f(x0);
        }
        const std::vector<double> fp = hi_ok ? f(xp) : f0;
        const std::vector<double> fm = lo_ok ? f(xm) : f0;
        if (out.j.rows == 0) out.j = Matrix(fp.size(), x0.size());
        if (fp.size() != out.j.rows || fm.size() != out.j.rows)
            throw ValidationError("jacobian: objective count changed between evaluations");
        for (std::size_t r = 0; r < out.j.rows; ++r) out.j(r, i) = (fp[r] - fm[r]) / denom;
    }
    return out;
}

inline double l1_norm(const Matrix& m) {
    double acc = 0.0;
    for (double v : m.a) acc += std::fabs(v);
    return acc;
}

struct SensitivityRecord {
    std::vector<double> design;      // physical design variables
    std::vector<double> objectives;  // the individual's objective vector
    Matrix jacobian;                 // normalized-coordinate Jacobian
    double l1 = 0.0;
    std::vector<std::uint8_t> one_sided;
    std::size_t front_index = 0;  // position in the input front
};

/// Jacobian + L1 norm for every front member, sorted ascending by norm
/// (rank 0 = least sensitive). `objective_ids` selects which surrogate nets
/// form the rows of the Jacobian.
inline std::vector<SensitivityRecord> rank_front(const std::vector<Individual>& front,
                                                 const SurrogateModel& model,
                                                 const std::vector<int>& objective_ids,
                                                 double h = 0.01) {
    if (front.empty()) throw ValidationError("rank_front: empty front");
    const auto& bounds = model.in_bounds();
    std::vector<Interval> unit(bounds.size(), Interval{0.0, 1.0});

    auto eval_normalized = [&](const std::vector<double>& xn) {
        std::vector<double> out;
        out.reserve(objective_ids.size());
        for (int id : objective_ids)
            out.push_back(model.nets[static_cast<std::size_t>(id)].eval_normalized(xn));
        return out;
    };

    std::vector<SensitivityRecord> records;
    records.reserve(front.size());
    for (std::size_t i = 0; i < front.size(); ++i) {
        const auto& ind = front[i];
        if (ind.genes.size() != bounds.size())
            throw ValidationError("rank_front: genome does not match the surrogate inputs");
        std::vector<double> xn(ind.genes.size());
        for (std::size_t g = 0; g < xn.size(); ++g) xn[g] = bounds[g].normalize(ind.genes[g]);
        JacobianResult jr = jacobian_central(eval_normalized, xn, h, unit);
        SensitivityRecord rec;
        rec.design = ind.genes;
        rec.objectives = ind.objectives;
        rec.l1 = l1_norm(jr.j);
        rec.jacobian = std::move(jr.j);
        rec.one_sided = std::move(jr.one_sided);
        rec.front_index = i;
        records.push_back(std::move(rec));
    }
    std::stable_sort(records.begin(), records.end(),
                     [](const SensitivityRecord& a, const SensitivityRecord& b) {
                         if (a.l1 != b.l1) return a.l1 < b.l1;
                         return a.front_index < b.front_index;
                     });
    return records;
}

/// Index of the minimum-norm record in an arbitrarily ordered list
/// (ties resolved to the earliest entry).
inline std::size_t stable_optimum(const std::vector<SensitivityRecord>& records) {
    if (records.empty()) throw ValidationError("stable_optimum: no records");
    std::size_t best = 0;
    for (std::size_t i = 1; i < records.size(); ++i)
        if (records[i].l1 < records[best].l1) best = i;
    return best;
}

struct Histogram {
    std::vector<double> edges;  // bins + 1 edges
    std::vector<int> counts;    // per bin; last bin closed on the right
};

inline Histogram histogram(const std::vector<double>& values, int bins) {
    if (values.empty()) throw ValidationError("histogram: no values");
    if (bins <= 0) throw ValidationError("histogram: bin count must be positive");
    double lo = values[0], hi = values[0];
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi > lo)) hi = lo + 1.0;  // all-equal input lands in the first bin
    Histogram hg;
    hg.counts.assign(static_cast<std::size_t>(bins), 0);
    for (int b = 0; b <= bins; ++b)
        hg.edges.push_back(lo + (hi - lo) * static_cast<double>(b) / bins);
    for (double v : values) {
        auto b = static_cast<long>((v - lo) / (hi - lo) * bins);
        if (b >= bins) b = bins - 1;  // the maximum belongs to the last bin
        if (b < 0) b = 0;
        hg.counts[static_cast<std::size_t>(b)]++;
    }
    return hg;
}

/// Adjusted Fisher-Pearson sample skewness; negative = left tail.
inline double sample_skewness(const std::vector<double>& values) {
    const auto n = static_cast<double>(values.size());
    if (values.size() < 3) throw ValidationError("skewness: need at least 3 values");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double m2 = 0.0, m3 = 0.0;
    for (double v : values) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if (!(m2 > 0.0)) return 0.0;
    const double g1 = m3 / std::pow(m2, 1.5);
    return std::sqrt(n * (n - 1.0)) / (n - 2.0) * g1;
}

/// ranking.csv: sorted records with design, objectives, norm, and flags.
inline std::string ranking_csv(const std::vector<SensitivityRecord>& records,
                               const std::vector<std::string>& design_names,
                               const std::vector<std::string>& objective_names) {
    CsvWriter w;
    std::vector<std::string> head{"rank"};
    for (const auto& n : design_names) head.push_back(n);
    for (const auto& n : objective_names) head.push_back(n);
    head.emplace_back("l1_norm");
    head.emplace_back("one_sided_flags");
    head.emplace_back("front_index");
    w.header(head);
    for (std::size_t r = 0; r < records.size(); ++r) {
        std::vector<std::string> row{std::to_string(r)};
        for (double v : records[r].design) row.push_back(fmt_double(v));
        for (double v : records[r].objectives) row.push_back(fmt_double(v));
        row.push_back(fmt_double(records[r].l1));
        std::string flags;
        for (auto f : records[r].one_sided) flags.push_back(f ? '1' : '0');
        row.push_back(flags);
        row.push_back(std::to_string(records[r].front_index));
        w.row(row);
    }
    return w.str();
}

inline std::string histogram_csv(const Histogram& hg) {
    CsvWriter w;
    w.header({"bin_lo", "bin_hi", "count"});
    for (std::size_t b = 0; b < hg.counts.size(); ++b)
        w.row({fmt_double(hg.edges[b]), fmt_double(hg.edges[b + 1]), std::to_string(hg.counts[b])});
    return w.str();
}

/// Human-readable report for the least-sensitive front member.
inline std::string stable_optimum_report(const SensitivityRecord& rec, const SurrogateModel& model) {
    std::string out;
    out += "stable optimum: front member with minimum L1 sensitivity norm\n";
    out += "l1_norm = " + fmt_double(rec.l1) + "\n";
    out += "T_init = " + fmt_double(rec.design[0]) + " K\n";
    for (std::size_t d = 1; d < rec.design.size(); ++d)
        out += "T_wall_" + std::to_string(d - 1) + " = " + fmt_double(rec.design[d]) + " K\n";
    const Objectives pred = model.predict(rec.design);
    out += "solidification_time = " + fmt_double(pred.time_s) + " s\n";
    out += "max_grain = " + fmt_double(pred.grain_um) + " um\n";
    out += "min_yield = " + fmt_double(-pred.neg_yield_mpa) + " MPa\n";
    return out;
}

}  // namespace castopt
