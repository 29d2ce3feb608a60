#pragma once

// Surrogate model: one MLP per casting objective, plus the fixed input/output
// normalization. Inputs are min-max normalized with the *design box* (not the
// data), so the mapping is independent of the sampled set; outputs are
// min-max normalized with the training-split range.

#include <array>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "castopt/common.hpp"
#include "castopt/microstructure.hpp"
#include "castopt/mlp.hpp"
#include "castopt/sampling.hpp"
#include "castopt/text.hpp"

namespace castopt {

inline constexpr const char* kObjectiveColumns[kNumObjectives] = {"obj_time_s", "obj_grain_um",
                                                                  "obj_neg_yield_mpa"};

/// Sampled design -> objectives table with a train/val/test split.
struct Dataset {
    int n_domains = 0;
    Matrix X;  // rows x (1 + n_domains), physical units
    std::array<std::vector<double>, kNumObjectives> y;
    std::vector<int> split;  // 0 train, 1 val, 2 test

    static constexpr const char* kSplitNames[3] = {"train", "val", "test"};

    std::size_t rows() const { return X.rows; }

    std::size_t count(int which) const {
        std::size_t n = 0;
        for (int s : split) n += (s == which);
        return n;
    }

    /// Extract one split as a dense matrix plus one objective column.
    void gather(int which, int objective, Matrix& Xs, std::vector<double>& ys) const {
        Xs = Matrix(count(which), X.cols);
        ys.clear();
        std::size_t r = 0;
        for (std::size_t i = 0; i < rows(); ++i) {
            if (split[i] != which) continue;
            for (std::size_t c = 0; c < X.cols; ++c) Xs(r, c) = X(i, c);
            ys.push_back(y[static_cast<std::size_t>(objective)][i]);
            ++r;
        }
    }

    std::string csv() const {
        CsvWriter w;
        std::vector<std::string> head{"t_init"};
        for (int d = 0; d < n_domains; ++d) head.push_back("t_wall_" + std::to_string(d));
        for (const char* c : kObjectiveColumns) head.emplace_back(c);
        w.header(head);
        for (std::size_t i = 0; i < rows(); ++i) {
            std::vector<std::string> row;
            for (std::size_t c = 0; c < X.cols; ++c) row.push_back(fmt_double(X(i, c)));
            for (int o = 0; o < kNumObjectives; ++o)
                row.push_back(fmt_double(y[static_cast<std::size_t>(o)][i]));
            w.row(row);
        }
        return w.str();
    }

    std::string splits_csv() const {
        CsvWriter w;
        w.header({"index", "split"});
        for (std::size_t i = 0; i < split.size(); ++i)
            w.row({std::to_string(i), kSplitNames[split[i]]});
        return w.str();
    }

    static Dataset from_csv(const std::string& data_path, const std::string& splits_path) {
        CsvTable t = read_csv(data_path);
        Dataset ds;
        ds.n_domains = static_cast<int>(t.header.size()) - 1 - kNumObjectives;
        if (ds.n_domains < 1 || t.header.front() != "t_init")
            throw ParseError(data_path + ": unexpected dataset header");
        const auto n_in = static_cast<std::size_t>(1 + ds.n_domains);
        ds.X = Matrix(t.rows.size(), n_in);
        for (auto& col : ds.y) col.resize(t.rows.size());
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            for (std::size_t c = 0; c < n_in; ++c) ds.X(i, c) = parse_double(t.rows[i][c]);
            for (int o = 0; o < kNumObjectives; ++o)
                ds.y[static_cast<std::size_t>(o)][i] =
                    parse_double(t.rows[i][n_in + static_cast<std::size_t>(o)]);
        }
        CsvTable sp = read_csv(splits_path);
        if (sp.rows.size() != t.rows.size())
            throw ParseError(splits_path + ": split count does not match dataset");
        ds.split.resize(sp.rows.size());
        const auto icol = sp.column("index"), scol = sp.column("split");
        for (const auto& row : sp.rows) {
            auto idx = static_cast<std::size_t>(parse_int(row[icol], "split index"));
            int v = -1;
            for (int s = 0; s < 3; ++s)
                if (row[scol] == kSplitNames[s]) v = s;
            if (idx >= ds.split.size() || v < 0)
                throw ParseError(splits_path + ": bad split row");
            ds.split[idx] = v;
        }
        return ds;
    }
};

/// One trained net plus its frozen normalization.
struct SurrogateNet {
    Mlp net;
    std::vector<Interval> in_bounds;
    Interval out_range;

    double predict(const std::vector<double>& design) const {
        if (design.size() != in_bounds.size())
            throw ValidationError("surrogate: design size mismatch");
        std::vector<double> xn(design.size());
        for (std::size_t i = 0; i < design.size(); ++i) {
            if (design[i] < in_bounds[i].lo - 1e-9 || design[i] > in_bounds[i].hi + 1e-9)
                throw ValidationError("surrogate: design component " + std::to_string(i) +
                                      " outside the trained box");
            xn[i] = in_bounds[i].normalize(design[i]);
        }
        return out_range.denormalize(net.forward(xn));
    }

    /// Forward pass in normalized coordinates (in: [0,1]^n, out: train-range units).
    double eval_normalized(const std::vector<double>& xn) const { return net.forward(xn); }

    std::vector<double> gradient_normalized(const std::vector<double>& xn) const {
        return net.input_gradient(xn);
    }

    void save(std::ostream& out) const {
        out << "surrogate 1\n";
        out << "inputs " << in_bounds.size() << '\n';
        out << "in_bounds";
        for (const auto& b : in_bounds)
            out << ' ' << fmt_double_hex(b.lo) << ' ' << fmt_double_hex(b.hi);
        out << '\n';
        out << "out_range " << fmt_double_hex(out_range.lo) << ' ' << fmt_double_hex(out_range.hi)
            << '\n';
        net.save(out);
    }

    void save_file(const std::string& path) const {
        std::ostringstream ss;
        save(ss);
        write_file(path, ss.str());
    }

    static SurrogateNet load(std::istream& in) {
        SurrogateNet s;
        std::string line;
        if (!std::getline(in, line) || trim(line) != "surrogate 1")
            throw ParseError("surrogate: bad magic line");
        if (!std::getline(in, line)) throw ParseError("surrogate: truncated header");
        auto tok = split(std::string(trim(line)), ' ');
        if (tok.size() != 2 || tok[0] != "inputs") throw ParseError("surrogate: expected inputs");
        const auto n = static_cast<std::size_t>(parse_int(tok[1], "input count"));
        if (!std::getline(in, line)) throw ParseError("surrogate: truncated bounds");
        tok = split(std::string(trim(line)), ' ');
        if (tok.size() != 1 + 2 * n || tok[0] != "in_bounds")
            throw ParseError("surrogate: bad in_bounds line");
        for (std::size_t i = 0; i < n; ++i)
            s.in_bounds.push_back(
                {parse_double(tok[1 + 2 * i], "bound"), parse_double(tok[2 + 2 * i], "bound")});
        if (!std::getline(in, line)) throw ParseError("surrogate: truncated range");
        tok = split(std::string(trim(line)), ' ');
        if (tok.size() != 3 || tok[0] != "out_range")
            throw ParseError("surrogate: bad out_range line");
        s.out_range = {parse_double(tok[1], "range"), parse_double(tok[2], "range")};
        s.net = Mlp::load(in);
        if (s.net.n_inputs() != static_cast<int>(n))
            throw ParseError("surrogate: net width does not match bounds");
        return s;
    }

    static SurrogateNet load_file(const std::string& path) {
        std::istringstream in(read_file(path));
        return load(in);
    }
};

/// The three per-objective nets that together predict a casting design.
struct SurrogateModel {
    std::array<SurrogateNet, kNumObjectives> nets;

    Objectives predict(const std::vector<double>& design) const {
        Objectives o;
        o.time_s = nets[0].predict(design);
        o.grain_um = nets[1].predict(design);
        o.neg_yield_mpa = nets[2].predict(design);
        return o;
    }

    const std::vector<Interval>& in_bounds() const { return nets[0].in_bounds; }
};

/// Mean relative error in percent over one split (the standard report metric).
inline double mean_relative_error_pct(const SurrogateNet& s, const Dataset& ds, int objective,
                                      int which_split) {
    double acc = 0.0;
    std::size_t n = 0;
    std::vector<double> design(ds.X.cols);
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        if (ds.split[i] != which_split) continue;
        for (std::size_t c = 0; c < ds.X.cols; ++c) design[c] = ds.X(i, c);
        const double truth = ds.y[static_cast<std::size_t>(objective)][i];
        acc += std::fabs(s.predict(design) - truth) / std::fabs(truth);
        ++n;
    }
    if (n == 0) throw ValidationError("error metric: empty split");
    return 100.0 * acc / static_cast<double>(n);
}

struct SurrogateTraining {
    SurrogateModel model;
    std::array<TrainHistory, kNumObjectives> history;
    // error_pct[objective][split], split order train/val/test
    std::array<std::array<double, 3>, kNumObjectives> error_pct{};
};

/// Train the three nets from a dataset. Normalization: inputs by the design
/// box, outputs by the training-split min/max of each objective.
inline SurrogateTraining train_surrogate(const Dataset& ds, const DesignBounds& bounds,
                                         const std::array<MlpConfig, kNumObjectives>& cfgs,
                                         std::uint64_t seed) {
    SurrogateTraining out;
    const std::vector<Interval> box = design_box(bounds, ds.n_domains);

    for (int obj = 0; obj < kNumObjectives; ++obj) {
        Matrix Xtr, Xva;
        std::vector<double> ytr, yva;
        ds.gather(0, obj, Xtr, ytr);
        ds.gather(1, obj, Xva, yva);

        Interval range{ytr[0], ytr[0]};
        for (double v : ytr) {
            range.lo = std::min(range.lo, v);
            range.hi = std::max(range.hi, v);
        }
        if (!(range.hi > range.lo))
            throw TrainError(std::string("objective '") + kObjectiveNames[obj] +
                             "' is constant on the training split");

        auto normalize_matrix = [&](Matrix& M) {
            for (std::size_t r = 0; r < M.rows; ++r)
                for (std::size_t c = 0; c < M.cols; ++c)
                    M(r, c) = box[c].normalize(M(r, c));
        };
        normalize_matrix(Xtr);
        normalize_matrix(Xva);
        for (auto* v : {&ytr, &yva})
            for (double& t : *v) t = range.normalize(t);

        const auto& cfg = cfgs[static_cast<std::size_t>(obj)];
        std::vector<int> sizes{static_cast<int>(box.size())};
        for (int l = 0; l < cfg.hidden_layers; ++l) sizes.push_back(cfg.hidden_width);
        sizes.push_back(1);

        SurrogateNet& snet = out.model.nets[static_cast<std::size_t>(obj)];
        snet.net = Mlp::init(sizes, derive_seed(seed, "mlp-init", static_cast<std::uint64_t>(obj)));
        snet.in_bounds = box;
        snet.out_range = range;
        out.history[static_cast<std::size_t>(obj)] =
            train_mlp(snet.net, Xtr, ytr, Xva, yva, cfg,
                      derive_seed(seed, "mlp-train", static_cast<std::uint64_t>(obj)));

        for (int sp = 0; sp < 3; ++sp)
            out.error_pct[static_cast<std::size_t>(obj)][static_cast<std::size_t>(sp)] =
                mean_relative_error_pct(snet, ds, obj, sp);
    }
    return out;
}

}  // namespace castopt
