#pragma once

// Run configuration: plain "key = value" text files, two built-in presets,
// and the canonical serialization used for stage fingerprints.

#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "castopt/common.hpp"
#include "castopt/evolve.hpp"
#include "castopt/material.hpp"
#include "castopt/microstructure.hpp"
#include "castopt/mlp.hpp"
#include "castopt/solver.hpp"
#include "castopt/text.hpp"

namespace castopt {

/// Minimal key=value file. '#' starts a comment, values run to end of line.
/// Keys that were never consumed are reported so typos fail loudly.
class KeyValues {
  public:
    static KeyValues parse(const std::string& content, const std::string& name) {
        KeyValues kv;
        std::istringstream in(content);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto t = trim(line);
            if (t.empty() || t.front() == '#') continue;
            auto eq = t.find('=');
            if (eq == std::string_view::npos)
                throw ConfigError(name + ":" + std::to_string(lineno) + ": expected 'key = value'");
            std::string key(trim(t.substr(0, eq)));
            std::string value(trim(t.substr(eq + 1)));
            if (key.empty()) throw ConfigError(name + ":" + std::to_string(lineno) + ": empty key");
            kv.values_[key] = value;
        }
        return kv;
    }

    static KeyValues parse_file(const std::string& path) {
        return parse(read_file(path), path);
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) {
        touched_.insert(key);
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) {
        touched_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            return parse_double(it->second, key);
        } catch (const ParseError& e) {
            throw ConfigError(e.what());
        }
    }

    long long get_int(const std::string& key, long long fallback) {
        touched_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            return parse_int(it->second, key);
        } catch (const ParseError& e) {
            throw ConfigError(e.what());
        }
    }

    /// Property table value: either a scalar or "T:v T:v ..." knot pairs.
    PiecewiseLinear get_table(const std::string& key, const PiecewiseLinear& fallback) {
        touched_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        const std::string& text = it->second;
        if (text.find(':') == std::string::npos)
            return PiecewiseLinear(parse_double(text, key));
        std::vector<std::pair<double, double>> knots;
        for (const auto& part : split(text, ' ')) {
            if (trim(part).empty()) continue;
            auto pieces = split(trim(part), ':');
            if (pieces.size() != 2)
                throw ConfigError(key + ": expected 'T:value' pairs separated by spaces");
            knots.emplace_back(parse_double(pieces[0], key), parse_double(pieces[1], key));
        }
        // The table type itself sorts, but a config author listing knots out
        // of order has more likely transposed a pair than intended reordering.
        for (std::size_t i = 1; i < knots.size(); ++i)
            if (knots[i].first <= knots[i - 1].first)
                throw ConfigError(key + ": knot temperatures must be strictly increasing");
        try {
            return PiecewiseLinear(knots);
        } catch (const ValidationError& e) {
            throw ConfigError(key + ": " + e.what());
        }
    }

    /// Keys present in the file but never consumed by the schema.
    std::vector<std::string> unknown_keys() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : values_)
            if (!touched_.count(k)) out.push_back(k);
        return out;
    }

  private:
    std::map<std::string, std::string> values_;
    std::set<std::string> touched_;
};

/// Population/generation sizes for one evolutionary run.
struct RunSizes {
    int population = 0;
    int generations = 0;
};

struct RunConfig {
    std::string geometry_path = "data/lbracket_40x24x12.geom";
    std::string out_dir = "out";
    std::uint64_t seed = 5;
    int jobs = 1;
    int n_domains = 10;

    DesignBounds bounds;
    std::size_t n_train = 500, n_val = 200, n_test = 200;

    MaterialProperties material = default_material();
    MicroConstants micro;
    SolverConfig solver;

    std::array<MlpConfig, kNumObjectives> train_cfg = default_train_cfgs();

    double crossover_p = 0.8;
    double mutation_p = 0.1;
    RunSizes ga{50, 400};           // single-objective runs
    RunSizes nsga_verify{1000, 50}; // reduced runs checked against the sweep
    RunSizes nsga_bi{500, 5000};    // full-space bi-objective runs
    RunSizes nsga_tri{2000, 250};   // full-space tri-objective run

    int sweep_points = 200;
    double sensitivity_step = 0.01;
    int histogram_bins = 20;

    /// Per-objective trainer settings (layers x width, lr, epochs, l2, dropout).
    static std::array<MlpConfig, kNumObjectives> default_train_cfgs() {
        std::array<MlpConfig, kNumObjectives> c{};
        c[0] = {4, 50, 0.001, 300, 0.004, 0.0};   // solidification time
        c[1] = {6, 75, 0.001, 300, 0.005, 0.2};   // max grain size
        c[2] = {4, 25, 0.003, 400, 0.01, 0.0};    // min yield strength
        return c;
    }

    /// Named presets: "paper" is the full study scale, "desk" a laptop-sized
    /// smoke configuration with the same structure.
    static RunConfig preset(const std::string& name) {
        RunConfig cfg;
        if (name == "paper" || name.empty()) return cfg;
        if (name == "desk") {
            cfg.n_train = 200;
            cfg.n_val = 50;
            cfg.n_test = 50;
            cfg.nsga_bi = {400, 300};
            cfg.nsga_tri = {800, 120};
            return cfg;
        }
        throw ConfigError("unknown preset '" + name + "' (expected 'desk' or 'paper')");
    }

    static RunConfig from_file(const std::string& path, const std::string& preset_name = "") {
        RunConfig cfg = preset(preset_name);
        KeyValues kv = KeyValues::parse_file(path);
        cfg.apply(kv);
        return cfg;
    }

    void apply(KeyValues& kv) {
        geometry_path = kv.get_string("geometry", geometry_path);
        out_dir = kv.get_string("out", out_dir);
        seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(seed)));
        jobs = static_cast<int>(kv.get_int("jobs", jobs));
        n_domains = static_cast<int>(kv.get_int("domains", n_domains));

        bounds.t_init.lo = kv.get_double("bounds.t_init_lo", bounds.t_init.lo);
        bounds.t_init.hi = kv.get_double("bounds.t_init_hi", bounds.t_init.hi);
        bounds.t_wall.lo = kv.get_double("bounds.t_wall_lo", bounds.t_wall.lo);
        bounds.t_wall.hi = kv.get_double("bounds.t_wall_hi", bounds.t_wall.hi);

        n_train = static_cast<std::size_t>(kv.get_int("samples.train", static_cast<long long>(n_train)));
        n_val = static_cast<std::size_t>(kv.get_int("samples.val", static_cast<long long>(n_val)));
        n_test = static_cast<std::size_t>(kv.get_int("samples.test", static_cast<long long>(n_test)));

        material.density = kv.get_table("material.density", material.density);
        material.specific_heat = kv.get_table("material.specific_heat", material.specific_heat);
        material.conductivity = kv.get_table("material.conductivity", material.conductivity);
        material.latent_heat = kv.get_double("material.latent_heat", material.latent_heat);
        material.partition_k = kv.get_double("material.partition_k", material.partition_k);
        material.t_freeze = kv.get_double("material.t_freeze", material.t_freeze);
        material.t_liquidus = kv.get_double("material.t_liquidus", material.t_liquidus);
        material.t_solidus = kv.get_double("material.t_solidus", material.t_solidus);

        micro.sdas_coeff = kv.get_double("micro.sdas_coeff", micro.sdas_coeff);
        micro.sdas_exp = kv.get_double("micro.sdas_exp", micro.sdas_exp);
        micro.strength_coeff = kv.get_double("micro.strength_coeff", micro.strength_coeff);
        micro.strength_offset = kv.get_double("micro.strength_offset", micro.strength_offset);
        micro.diffusivity = kv.get_double("micro.diffusivity", micro.diffusivity);
        micro.nominal_conc = kv.get_double("micro.nominal_conc", micro.nominal_conc);
        micro.initial_radius = kv.get_double("micro.initial_radius", micro.initial_radius);

        solver.fs_done = kv.get_double("solver.fs_done", solver.fs_done);
        solver.cfl = kv.get_double("solver.cfl", solver.cfl);
        solver.max_steps = kv.get_int("solver.max_steps", solver.max_steps);

        static constexpr const char* kTrainKeys[kNumObjectives] = {"time", "grain", "yield"};
        for (int o = 0; o < kNumObjectives; ++o) {
            auto& t = train_cfg[static_cast<std::size_t>(o)];
            const std::string p = std::string("train.") + kTrainKeys[o] + ".";
            t.hidden_layers = static_cast<int>(kv.get_int(p + "layers", t.hidden_layers));
            t.hidden_width = static_cast<int>(kv.get_int(p + "width", t.hidden_width));
            t.learning_rate = kv.get_double(p + "lr", t.learning_rate);
            t.epochs = static_cast<int>(kv.get_int(p + "epochs", t.epochs));
            t.l2 = kv.get_double(p + "l2", t.l2);
            t.dropout = kv.get_double(p + "dropout", t.dropout);
            t.batch_size = static_cast<int>(kv.get_int(p + "batch", t.batch_size));
        }

        crossover_p = kv.get_double("evolve.crossover", crossover_p);
        mutation_p = kv.get_double("evolve.mutation", mutation_p);
        ga.population = static_cast<int>(kv.get_int("ga.population", ga.population));
        ga.generations = static_cast<int>(kv.get_int("ga.generations", ga.generations));
        for (auto [sizes, key] : {std::pair{&nsga_verify, "nsga.verify"},
                                  std::pair{&nsga_bi, "nsga.bi"},
                                  std::pair{&nsga_tri, "nsga.tri"}}) {
            sizes->population = static_cast<int>(
                kv.get_int(std::string(key) + ".population", sizes->population));
            sizes->generations = static_cast<int>(
                kv.get_int(std::string(key) + ".generations", sizes->generations));
        }

        sweep_points = static_cast<int>(kv.get_int("sweep.points", sweep_points));
        sensitivity_step = kv.get_double("sensitivity.step", sensitivity_step);
        histogram_bins = static_cast<int>(kv.get_int("sensitivity.bins", histogram_bins));

        const auto unknown = kv.unknown_keys();
        if (!unknown.empty())
            throw ConfigError("unknown configuration keys: " + join(unknown, ','));
        validate();
    }

    void validate() const {
        if (n_domains < 1) throw ConfigError("domains must be at least 1");
        if (!(bounds.t_init.hi > bounds.t_init.lo) || !(bounds.t_wall.hi > bounds.t_wall.lo))
            throw ConfigError("design bounds must be non-empty intervals");
        if (n_train < 2 || n_val < 1 || n_test < 1)
            throw ConfigError("sample counts too small (need train>=2, val>=1, test>=1)");
        if (sweep_points < 2) throw ConfigError("sweep.points must be at least 2");
        if (!(sensitivity_step > 0.0 && sensitivity_step < 0.5))
            throw ConfigError("sensitivity.step must lie in (0, 0.5)");
        if (histogram_bins < 1) throw ConfigError("sensitivity.bins must be positive");
        if (jobs < 0) throw ConfigError("jobs must be non-negative");
        for (auto [s, label] : {std::pair{&ga, "ga"}, std::pair{&nsga_verify, "nsga.verify"},
                                std::pair{&nsga_bi, "nsga.bi"}, std::pair{&nsga_tri, "nsga.tri"}})
            if (s->population < 4 || s->generations < 1)
                throw ConfigError(std::string(label) + ": population >= 4 and generations >= 1");
    }

    /// Canonical one-line-per-key serialization; stable across runs, used for
    /// fingerprints and the config hash stamped into result files.
    std::string canonical() const {
        std::string s;
        auto add = [&](const std::string& key, const std::string& value) {
            s += key + "=" + value + "\n";
        };
        add("geometry", geometry_path);
        add("seed", std::to_string(seed));
        add("domains", std::to_string(n_domains));
        add("bounds", fmt_double(bounds.t_init.lo) + " " + fmt_double(bounds.t_init.hi) + " " +
                          fmt_double(bounds.t_wall.lo) + " " + fmt_double(bounds.t_wall.hi));
        add("samples", std::to_string(n_train) + " " + std::to_string(n_val) + " " +
                           std::to_string(n_test));
        add("material",
            fmt_double(material.latent_heat) + " " + fmt_double(material.partition_k) + " " +
                fmt_double(material.t_freeze) + " " + fmt_double(material.t_liquidus) + " " +
                fmt_double(material.t_solidus));
        add("material.density", material.density.describe());
        add("material.specific_heat", material.specific_heat.describe());
        add("material.conductivity", material.conductivity.describe());
        add("micro", fmt_double(micro.sdas_coeff) + " " + fmt_double(micro.sdas_exp) + " " +
                         fmt_double(micro.strength_coeff) + " " + fmt_double(micro.strength_offset) +
                         " " + fmt_double(micro.diffusivity) + " " + fmt_double(micro.nominal_conc) +
                         " " + fmt_double(micro.initial_radius));
        add("solver", fmt_double(solver.fs_done) + " " + fmt_double(solver.cfl) + " " +
                          std::to_string(solver.max_steps));
        for (int o = 0; o < kNumObjectives; ++o) {
            const auto& t = train_cfg[static_cast<std::size_t>(o)];
            add("train." + std::string(kObjectiveNames[o]),
                std::to_string(t.hidden_layers) + " " + std::to_string(t.hidden_width) + " " +
                    fmt_double(t.learning_rate) + " " + std::to_string(t.epochs) + " " +
                    fmt_double(t.l2) + " " + fmt_double(t.dropout) + " " +
                    std::to_string(t.batch_size));
        }
        add("evolve", fmt_double(crossover_p) + " " + fmt_double(mutation_p));
        add("ga", std::to_string(ga.population) + " " + std::to_string(ga.generations));
        add("nsga.verify",
            std::to_string(nsga_verify.population) + " " + std::to_string(nsga_verify.generations));
        add("nsga.bi", std::to_string(nsga_bi.population) + " " + std::to_string(nsga_bi.generations));
        add("nsga.tri",
            std::to_string(nsga_tri.population) + " " + std::to_string(nsga_tri.generations));
        add("sweep", std::to_string(sweep_points));
        add("sensitivity", fmt_double(sensitivity_step) + " " + std::to_string(histogram_bins));
        return s;
    }

    std::string config_hash() const { return hex_u64(fnv1a(canonical())); }

    EvolveConfig evolve_config(const RunSizes& sizes, std::uint64_t run_seed) const {
        EvolveConfig e;
        e.population = sizes.population;
        e.generations = sizes.generations;
        e.crossover_p = crossover_p;
        e.mutation_p = mutation_p;
        e.seed = run_seed;
        return e;
    }
};

}  // namespace castopt
