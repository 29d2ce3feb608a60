#pragma once

// End-to-end pipeline: geometry -> dataset -> surrogate training ->
// optimization -> sensitivity -> plot exports, with content-hash staging.
//
// Every stage writes its products under the output directory and records a
// fingerprint of its inputs (config subset + upstream fingerprints + raw
// geometry bytes) in manifest.json. A stage re-runs only when its fingerprint
// changed or one of its outputs is missing, so `all` is cheap to re-invoke.
// All products except the manifest (which stores wall-clock timings) are
// byte-identical across runs with the same config and seed.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "castopt/common.hpp"
#include "castopt/config.hpp"
#include "castopt/evolve.hpp"
#include "castopt/geometry.hpp"
#include "castopt/material.hpp"
#include "castopt/microstructure.hpp"
#include "castopt/oracle.hpp"
#include "castopt/sampling.hpp"
#include "castopt/sensitivity.hpp"
#include "castopt/solver.hpp"
#include "castopt/surrogate.hpp"
#include "castopt/text.hpp"

namespace castopt {

/// Full physics evaluation of one design vector (melt temperature + wall
/// temperatures): thermal solve with history, then the microstructure chain.
struct DesignEvaluation {
    SolveRecord record;
    std::vector<double> sdas_um;
    std::vector<double> yield_mpa;
    std::vector<double> grain_m;
    Objectives objectives;
};

inline DesignEvaluation evaluate_design(const ThermalMesh& mesh, const MaterialProperties& mat,
                                        const MicroConstants& micro, SolverConfig solver_cfg,
                                        const std::vector<double>& design) {
    if (static_cast<int>(design.size()) != mesh.n_domains() + 1)
        throw ValidationError("evaluate_design: expected 1 melt + one wall temperature per domain");
    ThermalBC bc;
    bc.t_init = design[0];
    bc.t_wall.assign(design.begin() + 1, design.end());
    solver_cfg.record_history = true;  // the grain model integrates over it

    DesignEvaluation ev;
    ev.record = solve(mesh, bc, mat, solver_cfg);
    const auto n = ev.record.cooling_rate.size();
    ev.sdas_um.resize(n);
    ev.yield_mpa.resize(n);
    for (std::size_t c = 0; c < n; ++c) {
        ev.sdas_um[c] = sdas_from_rate(ev.record.cooling_rate[c], micro);
        ev.yield_mpa[c] = yield_from_sdas(ev.sdas_um[c], micro);
    }
    ev.grain_m = grain_radius_field(ev.record, mat.partition_k, micro);
    ev.objectives = reduce_objectives(ev.record, ev.grain_m, ev.yield_mpa);
    ev.record.history_fs.clear();  // bulky; nothing downstream needs it
    ev.record.history_times.clear();
    return ev;
}

/// Run fn(i) for i in [0, n) on up to `jobs` threads. Results must be written
/// to disjoint slots; the first exception is rethrown on the caller thread.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs == 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w)
        threads.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// Pareto-front CSV with the run stamp in a comment line.
inline std::string front_csv(const std::vector<Individual>& members,
                             const std::vector<std::string>& design_names,
                             const std::vector<int>& objective_ids, std::uint64_t seed,
                             const std::string& config_hash) {
    CsvWriter w;
    w.comment("seed=" + std::to_string(seed) + " config=" + config_hash);
    std::vector<std::string> head = design_names;
    for (int id : objective_ids) head.emplace_back(kObjectiveColumns[id]);
    head.emplace_back("rank");
    head.emplace_back("crowding");
    w.header(head);
    for (const auto& ind : members) {
        std::vector<std::string> row;
        for (double g : ind.genes) row.push_back(fmt_double(g));
        for (double o : ind.objectives) row.push_back(fmt_double(o));
        row.push_back(std::to_string(ind.rank));
        row.push_back(fmt_double(ind.crowding));
        w.row(row);
    }
    return w.str();
}

struct LoadedFront {
    std::vector<Individual> members;
    std::vector<int> objective_ids;
};

/// Read a front CSV back; design column count must be known by the caller.
inline LoadedFront read_front_csv(const std::string& path, std::size_t n_design) {
    CsvTable t = read_csv(path);
    const std::size_t rank_col = t.column("rank");
    if (rank_col <= n_design) throw ParseError(path + ": no objective columns");
    LoadedFront f;
    for (std::size_t c = n_design; c < rank_col; ++c) {
        int id = -1;
        for (int o = 0; o < kNumObjectives; ++o)
            if (t.header[c] == kObjectiveColumns[o]) id = o;
        if (id < 0) throw ParseError(path + ": unknown objective column " + t.header[c]);
        f.objective_ids.push_back(id);
    }
    const std::size_t crowd_col = t.column("crowding");
    for (const auto& row : t.rows) {
        Individual ind;
        for (std::size_t c = 0; c < n_design; ++c)
            ind.genes.push_back(parse_double(row[c], "gene"));
        for (std::size_t c = n_design; c < rank_col; ++c)
            ind.objectives.push_back(parse_double(row[c], "objective"));
        ind.rank = static_cast<int>(parse_int(row[rank_col], "rank"));
        ind.crowding = parse_double(row[crowd_col], "crowding");
        f.members.push_back(std::move(ind));
    }
    return f;
}

struct StageOutcome {
    std::string name;
    bool reran = false;  // false = fingerprint matched, outputs present
    double seconds = 0.0;
};

class Pipeline {
  public:
    explicit Pipeline(RunConfig cfg) : cfg_(std::move(cfg)) {
        out_ = std::filesystem::path(cfg_.out_dir);
    }

    const RunConfig& config() const { return cfg_; }

    static const std::vector<std::string>& stage_names() {
        static const std::vector<std::string> names = {
            "geometry",    "dataset",         "train",        "optimize_single",
            "optimize_bi", "optimize_verify", "optimize_tri", "sensitivity",
            "plots"};
        return names;
    }

    /// Stages (in order) behind each CLI verb.
    static std::vector<std::string> verb_stages(const std::string& verb) {
        if (verb == "geometry") return {"geometry"};
        if (verb == "dataset") return {"geometry", "dataset"};
        if (verb == "train") return {"geometry", "dataset", "train"};
        if (verb == "optimize")
            return {"geometry", "dataset", "train", "optimize_single", "optimize_bi",
                    "optimize_verify", "optimize_tri"};
        if (verb == "sensitivity")
            return {"geometry", "dataset", "train", "optimize_bi", "optimize_tri", "sensitivity"};
        if (verb == "plots" || verb == "all") {
            auto v = stage_names();
            return v;
        }
        throw ConfigError("unknown verb '" + verb + "'");
    }

    std::vector<StageOutcome> run_verb(const std::string& verb) {
        std::vector<StageOutcome> outcomes;
        for (const auto& stage : verb_stages(verb)) outcomes.push_back(run_stage(stage));
        return outcomes;
    }

    StageOutcome run_stage(const std::string& name) {
        const std::string fp = fingerprint(name);
        const std::vector<std::string> outputs = stage_outputs(name);
        StageOutcome outcome;
        outcome.name = name;
        if (up_to_date(name, fp, outputs)) return outcome;

        const auto t0 = std::chrono::steady_clock::now();
        std::filesystem::create_directories(out_);
        if (name == "geometry")
            stage_geometry();
        else if (name == "dataset")
            stage_dataset();
        else if (name == "train")
            stage_train();
        else if (name == "optimize_single")
            stage_optimize_single();
        else if (name == "optimize_bi")
            stage_optimize_bi();
        else if (name == "optimize_verify")
            stage_optimize_verify();
        else if (name == "optimize_tri")
            stage_optimize_tri();
        else if (name == "sensitivity")
            stage_sensitivity();
        else if (name == "plots")
            stage_plots();
        else
            throw ConfigError("unknown stage '" + name + "'");
        const auto t1 = std::chrono::steady_clock::now();

        outcome.reran = true;
        outcome.seconds = std::chrono::duration<double>(t1 - t0).count();
        record_stage(name, fp, outputs, outcome.seconds);
        return outcome;
    }

    // ---- stage inputs -----------------------------------------------------

    std::string fingerprint(const std::string& name) {
        if (name == "geometry")
            return hex_u64(fnv1a("geometry-v1|" + hex_u64(fnv1a(read_file(cfg_.geometry_path))) +
                                 "|" + std::to_string(cfg_.n_domains) + "|" +
                                 std::to_string(cfg_.seed)));
        const std::string canon = cfg_.canonical();
        auto section = [&](const std::string& tag, std::initializer_list<const char*> keys,
                           std::initializer_list<std::string> upstream) {
            std::string s = tag;
            for (const auto& u : upstream) s += "|" + u;
            std::istringstream in(canon);
            std::string line;
            while (std::getline(in, line))
                for (const char* k : keys)
                    if (line.rfind(k, 0) == 0) s += "|" + line;
            return hex_u64(fnv1a(s));
        };
        if (name == "dataset")
            return section("dataset-v1",
                           {"bounds=", "samples=", "material", "micro=", "solver=", "seed=",
                            "domains="},
                           {fingerprint("geometry")});
        if (name == "train")
            return section("train-v1", {"train.", "seed="}, {fingerprint("dataset")});
        if (name == "optimize_single")
            return section("optimize-single-v1", {"evolve=", "ga=", "sweep=", "seed="},
                           {fingerprint("train")});
        if (name == "optimize_bi")
            return section("optimize-bi-v1", {"evolve=", "nsga.bi=", "seed="},
                           {fingerprint("train")});
        if (name == "optimize_verify")
            return section("optimize-verify-v1", {"evolve=", "nsga.verify=", "sweep=", "seed="},
                           {fingerprint("train")});
        if (name == "optimize_tri")
            return section("optimize-tri-v1", {"evolve=", "nsga.tri=", "seed="},
                           {fingerprint("train")});
        if (name == "sensitivity")
            return section("sensitivity-v1", {"sensitivity="},
                           {fingerprint("optimize_bi"), fingerprint("optimize_tri"),
                            fingerprint("train")});
        if (name == "plots")
            return section("plots-v1", {},
                           {fingerprint("optimize_single"), fingerprint("optimize_verify"),
                            fingerprint("sensitivity")});
        throw ConfigError("unknown stage '" + name + "'");
    }

    std::vector<std::string> stage_outputs(const std::string& name) const {
        std::vector<std::string> out;
        if (name == "geometry") out = {"geometry/decomposition.csv"};
        if (name == "dataset") out = {"dataset/dataset.csv", "dataset/splits.csv"};
        if (name == "train") {
            for (const char* n : kObjectiveNames) {
                out.push_back(std::string("models/") + n + ".net");
                out.push_back(std::string("models/train_history_") + n + ".csv");
            }
            out.emplace_back("models/report.csv");
        }
        if (name == "optimize_single") {
            out.emplace_back("optimize/single/summary.csv");
            for (const char* red : {"uniform", "split"})
                for (const char* obj : kObjectiveNames)
                    out.push_back(std::string("optimize/single/history_") + red + "_" + obj +
                                  ".csv");
        }
        if (name == "optimize_bi")
            for (const char* pair : {"time_yield", "grain_yield"}) {
                out.push_back(std::string("optimize/bi/front_") + pair + ".csv");
                out.push_back(std::string("optimize/bi/history_") + pair + ".csv");
            }
        if (name == "optimize_verify")
            for (const char* red : {"uniform", "split"})
                for (const char* pair : {"time_yield", "grain_yield"}) {
                    out.push_back(std::string("optimize/verify/front_") + red + "_" + pair + ".csv");
                    out.push_back(std::string("optimize/verify/compare_") + red + "_" + pair +
                                  ".txt");
                }
        if (name == "optimize_tri")
            out = {"optimize/tri/front.csv", "optimize/tri/history.csv"};
        if (name == "sensitivity") {
            for (const char* tag : {"tri", "bi_time_yield", "bi_grain_yield"}) {
                out.push_back(std::string("sensitivity/ranking_") + tag + ".csv");
                out.push_back(std::string("sensitivity/hist_") + tag + ".csv");
                out.push_back(std::string("sensitivity/stable_") + tag + ".txt");
            }
            out.emplace_back("sensitivity/stable_thermal.csv");
            out.emplace_back("sensitivity/stable_micro.csv");
            out.emplace_back("sensitivity/stable_check.txt");
        }
        if (name == "plots") {
            for (const char* red : {"uniform", "split"})
                for (const char* obj : kObjectiveNames)
                    out.push_back(std::string("plots/response_") + red + "_" + obj + ".dat");
            out.emplace_back("plots/pareto_tri.dat");
            out.emplace_back("plots/sensitivity_hist.dat");
        }
        if (out.empty()) throw ConfigError("unknown stage '" + name + "'");
        return out;
    }

  private:
    // ---- manifest ----------------------------------------------------------

    std::filesystem::path manifest_path() const { return out_ / "manifest.json"; }

    bool up_to_date(const std::string& name, const std::string& fp,
                    const std::vector<std::string>& outputs) const {
        std::error_code ec;
        if (!std::filesystem::exists(manifest_path(), ec)) return false;
        nlohmann::json m;
        try {
            m = nlohmann::json::parse(read_file(manifest_path().string()));
        } catch (...) {
            return false;
        }
        if (!m.contains("stages") || !m["stages"].contains(name)) return false;
        if (m["stages"][name].value("fingerprint", "") != fp) return false;
        for (const auto& rel : outputs)
            if (!std::filesystem::exists(out_ / rel, ec)) return false;
        return true;
    }

    void record_stage(const std::string& name, const std::string& fp,
                      const std::vector<std::string>& outputs, double seconds) const {
        nlohmann::json m;
        std::error_code ec;
        if (std::filesystem::exists(manifest_path(), ec)) {
            try {
                m = nlohmann::json::parse(read_file(manifest_path().string()));
            } catch (...) {
                m = nlohmann::json::object();
            }
        }
        m["version"] = 1;
        nlohmann::json entry;
        entry["fingerprint"] = fp;
        entry["outputs"] = outputs;
        entry["wall_clock_s"] = seconds;
        m["stages"][name] = entry;
        write_file(manifest_path().string(), m.dump(2) + "\n");
    }

    void save(const std::string& rel, const std::string& content) const {
        const auto path = out_ / rel;
        std::filesystem::create_directories(path.parent_path());
        write_file(path.string(), content);
    }

    // ---- shared artifacts --------------------------------------------------

    const VoxelGeometry& geometry() {
        if (!geom_) geom_ = load_voxel_geometry(cfg_.geometry_path);
        return *geom_;
    }

    const std::vector<BoundaryFace>& faces() {
        if (faces_.empty()) {
            faces_ = extract_boundary_faces(geometry());
            const WallDecomposition d =
                decompose_wall(faces_, cfg_.n_domains, derive_seed(cfg_.seed, "kmeans"));
            stamp_domains(faces_, d);
        }
        return faces_;
    }

    const ThermalMesh& mesh() {
        if (!mesh_) mesh_ = std::make_unique<ThermalMesh>(geometry(), faces(), cfg_.n_domains);
        return *mesh_;
    }

    SurrogateModel load_model() const {
        SurrogateModel model;
        for (int o = 0; o < kNumObjectives; ++o)
            model.nets[static_cast<std::size_t>(o)] = SurrogateNet::load_file(
                (out_ / "models" / (std::string(kObjectiveNames[o]) + ".net")).string());
        return model;
    }

    std::vector<std::string> design_names() const {
        std::vector<std::string> names{"t_init"};
        for (int d = 0; d < cfg_.n_domains; ++d) names.push_back("t_wall_" + std::to_string(d));
        return names;
    }

    static constexpr std::array<std::array<int, 2>, 2> kBiPairs{{{0, 2}, {1, 2}}};
    static constexpr const char* kBiNames[2] = {"time_yield", "grain_yield"};

    Reduction reduction_by_index(int r) const {
        Reduction red;
        red.kind = r == 0 ? Reduction::Kind::uniform : Reduction::Kind::split;
        red.n_domains = cfg_.n_domains;
        return red;
    }

    // ---- stages --------------------------------------------------------------

    void stage_geometry() {
        validate_voxel_geometry(geometry());
        save("geometry/decomposition.csv", decomposition_csv(faces()));
    }

    void stage_dataset() {
        const std::size_t total = cfg_.n_train + cfg_.n_val + cfg_.n_test;
        const auto box = design_box(cfg_.bounds, cfg_.n_domains);
        const auto designs = latin_hypercube(total, box, derive_seed(cfg_.seed, "lhs"));

        std::vector<Objectives> results(total);
        std::vector<std::string> failures(total);
        const ThermalMesh& m = mesh();
        parallel_for(total, cfg_.jobs, [&](std::size_t i) {
            try {
                results[i] =
                    evaluate_design(m, cfg_.material, cfg_.micro, cfg_.solver, designs[i])
                        .objectives;
            } catch (const std::exception& e) {
                failures[i] = e.what();
            }
        });

        std::size_t n_failed = 0;
        for (const auto& f : failures) n_failed += !f.empty();
        if (n_failed * 100 > total)
            throw SolveError("dataset: " + std::to_string(n_failed) + " of " +
                             std::to_string(total) + " samples failed (over the 1% budget)");

        Dataset ds;
        ds.n_domains = cfg_.n_domains;
        ds.X = Matrix(total - n_failed, box.size());
        for (auto& col : ds.y) col.resize(total - n_failed);
        std::size_t r = 0;
        std::string failure_log;
        for (std::size_t i = 0; i < total; ++i) {
            if (!failures[i].empty()) {
                failure_log += "sample " + std::to_string(i) + ": " + failures[i] + "\n";
                continue;
            }
            for (std::size_t c = 0; c < box.size(); ++c) ds.X(r, c) = designs[i][c];
            const auto obj = results[i].as_array();
            for (int o = 0; o < kNumObjectives; ++o)
                ds.y[static_cast<std::size_t>(o)][r] = obj[static_cast<std::size_t>(o)];
            ++r;
        }

        // Split assignment: shuffle row indices, then cut train/val/test in
        // order. Failed samples are dropped before the shuffle, off the end
        // of the test slice.
        std::vector<std::size_t> order(ds.rows());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng rng(derive_seed(cfg_.seed, "split"));
        rng.shuffle(order);
        ds.split.assign(ds.rows(), 2);
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (i < cfg_.n_train)
                ds.split[order[i]] = 0;
            else if (i < cfg_.n_train + cfg_.n_val)
                ds.split[order[i]] = 1;
        }

        save("dataset/dataset.csv", ds.csv());
        save("dataset/splits.csv", ds.splits_csv());
        if (!failure_log.empty()) save("dataset/failures.txt", failure_log);
    }

    void stage_train() {
        const Dataset ds = Dataset::from_csv((out_ / "dataset/dataset.csv").string(),
                                             (out_ / "dataset/splits.csv").string());
        const SurrogateTraining tr =
            train_surrogate(ds, cfg_.bounds, cfg_.train_cfg, derive_seed(cfg_.seed, "train"));

        CsvWriter report;
        report.header({"objective", "train_error_pct", "val_error_pct", "test_error_pct",
                       "epochs_run"});
        std::filesystem::create_directories(out_ / "models");
        for (int o = 0; o < kNumObjectives; ++o) {
            const auto os = static_cast<std::size_t>(o);
            tr.model.nets[os].save_file(
                (out_ / "models" / (std::string(kObjectiveNames[o]) + ".net")).string());
            CsvWriter hist;
            hist.header({"epoch", "train_loss", "val_loss"});
            for (std::size_t e = 0; e < tr.history[os].train_loss.size(); ++e)
                hist.row({std::to_string(e), fmt_double(tr.history[os].train_loss[e]),
                          fmt_double(tr.history[os].val_loss[e])});
            save(std::string("models/train_history_") + kObjectiveNames[o] + ".csv", hist.str());
            report.row({kObjectiveNames[o], fmt_double(tr.error_pct[os][0]),
                        fmt_double(tr.error_pct[os][1]), fmt_double(tr.error_pct[os][2]),
                        std::to_string(tr.history[os].stopped_epoch)});
        }
        save("models/report.csv", report.str());
    }

    void stage_optimize_single() {
        const SurrogateModel model = load_model();
        CsvWriter summary;
        summary.comment("seed=" + std::to_string(cfg_.seed) + " config=" + cfg_.config_hash());
        summary.header({"reduction", "objective", "sweep_a", "sweep_b", "sweep_value", "ga_a",
                        "ga_b", "ga_value"});
        for (int r = 0; r < 2; ++r) {
            const Reduction red = reduction_by_index(r);
            const auto axes = red.axes(cfg_.bounds);
            for (int obj = 0; obj < kNumObjectives; ++obj) {
                const SweepGrid grid =
                    sweep(model, red, cfg_.bounds, {obj}, cfg_.sweep_points);
                const SweepMin smin = sweep_min(grid, 0);

                const auto& net = model.nets[static_cast<std::size_t>(obj)];
                ScalarObjective f = [&](const std::vector<double>& ab) {
                    return net.predict(red.expand(ab[0], ab[1]));
                };
                const GaResult ga = ga_minimize(
                    f, {axes[0], axes[1]},
                    cfg_.evolve_config(cfg_.ga, derive_seed(cfg_.seed, "ga-single",
                                                            static_cast<std::uint64_t>(r * 3 + obj))));

                CsvWriter hist;
                hist.comment("seed=" + std::to_string(cfg_.seed) + " config=" + cfg_.config_hash());
                hist.header({"generation", "best"});
                for (std::size_t g = 0; g < ga.best_history.size(); ++g)
                    hist.row({std::to_string(g), fmt_double(ga.best_history[g])});
                save(std::string("optimize/single/history_") + red.name() + "_" +
                         kObjectiveNames[obj] + ".csv",
                     hist.str());

                summary.row({red.name(), kObjectiveNames[obj], fmt_double(smin.a),
                             fmt_double(smin.b), fmt_double(smin.value),
                             fmt_double(ga.best.genes[0]), fmt_double(ga.best.genes[1]),
                             fmt_double(ga.best.objectives[0])});
            }
        }
        save("optimize/single/summary.csv", summary.str());
    }

    VectorObjective surrogate_objective(const SurrogateModel& model,
                                        const std::vector<int>& ids) const {
        return [&model, ids](const std::vector<double>& design) {
            std::vector<double> out;
            out.reserve(ids.size());
            for (int id : ids)
                out.push_back(model.nets[static_cast<std::size_t>(id)].predict(design));
            return out;
        };
    }

    void write_nsga_outputs(const std::string& front_rel, const std::string& hist_rel,
                            const NsgaResult& res, const std::vector<std::string>& names,
                            const std::vector<int>& ids) {
        save(front_rel, front_csv(res.front, names, ids, cfg_.seed, cfg_.config_hash()));
        if (hist_rel.empty()) return;
        CsvWriter hist;
        hist.comment("seed=" + std::to_string(cfg_.seed) + " config=" + cfg_.config_hash());
        std::vector<std::string> head{"generation"};
        for (int id : ids) head.push_back(std::string("best_") + kObjectiveColumns[id]);
        head.emplace_back("front_size");
        hist.header(head);
        for (std::size_t g = 0; g < res.history.size(); ++g) {
            std::vector<std::string> row{std::to_string(g)};
            for (double b : res.history[g].best) row.push_back(fmt_double(b));
            row.push_back(std::to_string(res.history[g].front_size));
            hist.row(row);
        }
        save(hist_rel, hist.str());
    }

    void stage_optimize_bi() {
        const SurrogateModel model = load_model();
        const auto box = design_box(cfg_.bounds, cfg_.n_domains);
        for (int p = 0; p < 2; ++p) {
            const std::vector<int> ids{kBiPairs[static_cast<std::size_t>(p)][0],
                                       kBiPairs[static_cast<std::size_t>(p)][1]};
            const NsgaResult res =
                nsga2(surrogate_objective(model, ids), box,
                      cfg_.evolve_config(cfg_.nsga_bi,
                                         derive_seed(cfg_.seed, "nsga-bi",
                                                     static_cast<std::uint64_t>(p))));
            write_nsga_outputs(std::string("optimize/bi/front_") + kBiNames[p] + ".csv",
                               std::string("optimize/bi/history_") + kBiNames[p] + ".csv", res,
                               design_names(), ids);
        }
    }

    void stage_optimize_verify() {
        const SurrogateModel model = load_model();
        for (int r = 0; r < 2; ++r) {
            const Reduction red = reduction_by_index(r);
            const auto axes = red.axes(cfg_.bounds);
            for (int p = 0; p < 2; ++p) {
                const std::vector<int> ids{kBiPairs[static_cast<std::size_t>(p)][0],
                                           kBiPairs[static_cast<std::size_t>(p)][1]};
                VectorObjective f = [&](const std::vector<double>& ab) {
                    const auto design = red.expand(ab[0], ab[1]);
                    std::vector<double> out;
                    for (int id : ids)
                        out.push_back(model.nets[static_cast<std::size_t>(id)].predict(design));
                    return out;
                };
                const NsgaResult res = nsga2(
                    f, {axes[0], axes[1]},
                    cfg_.evolve_config(cfg_.nsga_verify,
                                       derive_seed(cfg_.seed, "nsga-verify",
                                                   static_cast<std::uint64_t>(r * 2 + p))));

                const SweepGrid grid = sweep(model, red, cfg_.bounds, ids, cfg_.sweep_points);
                const std::vector<std::size_t> pareto = brute_pareto(grid.values);
                Matrix brute(pareto.size(), ids.size());
                for (std::size_t i = 0; i < pareto.size(); ++i)
                    for (std::size_t c = 0; c < ids.size(); ++c)
                        brute(i, c) = grid.values(pareto[i], c);
                Matrix mine(res.front.size(), ids.size());
                for (std::size_t i = 0; i < res.front.size(); ++i)
                    for (std::size_t c = 0; c < ids.size(); ++c)
                        mine(i, c) = res.front[i].objectives[c];

                // Normalize against the whole sweep grid's spread: when the
                // true front degenerates to a point (aligned objectives), the
                // fronts' own range would stretch numerical dust to unit size.
                std::vector<Interval> basis(ids.size());
                for (std::size_t c = 0; c < ids.size(); ++c) {
                    basis[c] = {grid.values(0, c), grid.values(0, c)};
                    for (std::size_t r = 0; r < grid.values.rows; ++r) {
                        basis[c].lo = std::min(basis[c].lo, grid.values(r, c));
                        basis[c].hi = std::max(basis[c].hi, grid.values(r, c));
                    }
                }
                const FrontComparison cmp = compare_front(mine, brute, basis);
                const auto an = red.axis_names();
                write_nsga_outputs(std::string("optimize/verify/front_") + red.name() + "_" +
                                       kBiNames[p] + ".csv",
                                   "", res, {an[0], an[1]}, ids);
                save(std::string("optimize/verify/compare_") + red.name() + "_" + kBiNames[p] +
                         ".txt",
                     comparison_report(cmp));
            }
        }
    }

    void stage_optimize_tri() {
        const SurrogateModel model = load_model();
        const auto box = design_box(cfg_.bounds, cfg_.n_domains);
        const std::vector<int> ids{0, 1, 2};
        const NsgaResult res = nsga2(surrogate_objective(model, ids), box,
                                     cfg_.evolve_config(cfg_.nsga_tri, derive_seed(cfg_.seed, "nsga-tri")));
        write_nsga_outputs("optimize/tri/front.csv", "optimize/tri/history.csv", res,
                           design_names(), ids);
    }

    void stage_sensitivity() {
        const SurrogateModel model = load_model();
        const std::size_t n_design = static_cast<std::size_t>(cfg_.n_domains) + 1;

        struct FrontJob {
            std::string tag;
            std::string front_rel;
        };
        const std::vector<FrontJob> jobs = {
            {"tri", "optimize/tri/front.csv"},
            {"bi_time_yield", "optimize/bi/front_time_yield.csv"},
            {"bi_grain_yield", "optimize/bi/front_grain_yield.csv"},
        };

        std::vector<SensitivityRecord> tri_records;
        for (const auto& job : jobs) {
            const LoadedFront front = read_front_csv((out_ / job.front_rel).string(), n_design);
            const std::vector<SensitivityRecord> records =
                rank_front(front.members, model, front.objective_ids, cfg_.sensitivity_step);

            std::vector<std::string> objective_names;
            for (int id : front.objective_ids)
                objective_names.emplace_back(kObjectiveColumns[id]);
            save("sensitivity/ranking_" + job.tag + ".csv",
                 ranking_csv(records, design_names(), objective_names));

            std::vector<double> norms;
            for (const auto& rec : records) norms.push_back(rec.l1);
            save("sensitivity/hist_" + job.tag + ".csv",
                 histogram_csv(histogram(norms, cfg_.histogram_bins)));

            const SensitivityRecord& stable = records[stable_optimum(records)];
            save("sensitivity/stable_" + job.tag + ".txt",
                 stable_optimum_report(stable, model));
            if (job.tag == "tri") tri_records = records;
        }

        // Close the loop on the tri-objective stable optimum: run the actual
        // solver + microstructure chain at that design and report both CSVs
        // plus surrogate-vs-simulation deltas.
        const SensitivityRecord& stable = tri_records[stable_optimum(tri_records)];
        const DesignEvaluation ev =
            evaluate_design(mesh(), cfg_.material, cfg_.micro, cfg_.solver, stable.design);
        save("sensitivity/stable_thermal.csv", thermal_csv(mesh(), ev.record));
        save("sensitivity/stable_micro.csv",
             micro_csv(mesh(), ev.sdas_um, ev.yield_mpa, ev.grain_m));
        const Objectives pred = model.predict(stable.design);
        std::string check;
        auto line = [&](const char* name, double surrogate, double simulated) {
            check += std::string(name) + ": surrogate=" + fmt_double(surrogate) +
                     " simulated=" + fmt_double(simulated) + " rel_err=" +
                     fmt_double(std::fabs(surrogate - simulated) /
                                std::max(1e-300, std::fabs(simulated))) +
                     "\n";
        };
        line("solidification_time_s", pred.time_s, ev.objectives.time_s);
        line("max_grain_um", pred.grain_um, ev.objectives.grain_um);
        line("min_yield_mpa", -pred.neg_yield_mpa, -ev.objectives.neg_yield_mpa);
        save("sensitivity/stable_check.txt", check);
    }

    void stage_plots() {
        const SurrogateModel model = load_model();
        // Response surfaces in gnuplot block format.
        for (int r = 0; r < 2; ++r) {
            const Reduction red = reduction_by_index(r);
            for (int obj = 0; obj < kNumObjectives; ++obj) {
                const SweepGrid grid = sweep(model, red, cfg_.bounds, {obj}, cfg_.sweep_points);
                std::string dat = "# " + std::string(red.axis_names()[0]) + " " +
                                  red.axis_names()[1] + " " + kObjectiveColumns[obj] + "\n";
                for (std::size_t ia = 0; ia < grid.axis_a.size(); ++ia) {
                    for (std::size_t ib = 0; ib < grid.axis_b.size(); ++ib)
                        dat += fmt_double(grid.axis_a[ia]) + " " + fmt_double(grid.axis_b[ib]) +
                               " " + fmt_double(grid.values(grid.row_index(static_cast<int>(ia),
                                                                           static_cast<int>(ib)),
                                                            0)) +
                               "\n";
                    dat += "\n";
                }
                save(std::string("plots/response_") + red.name() + "_" + kObjectiveNames[obj] +
                         ".dat",
                     dat);
            }
        }

        // Tri-objective front colored by sensitivity norm.
        const CsvTable rk = read_csv((out_ / "sensitivity/ranking_tri.csv").string());
        std::string dat = "# obj_time_s obj_grain_um obj_neg_yield_mpa l1_norm\n";
        const std::size_t c1 = rk.column("obj_time_s"), c2 = rk.column("obj_grain_um"),
                          c3 = rk.column("obj_neg_yield_mpa"), cl = rk.column("l1_norm");
        for (const auto& row : rk.rows)
            dat += row[c1] + " " + row[c2] + " " + row[c3] + " " + row[cl] + "\n";
        save("plots/pareto_tri.dat", dat);

        const CsvTable hg = read_csv((out_ / "sensitivity/hist_tri.csv").string());
        std::string hist = "# bin_lo bin_hi count\n";
        const std::size_t lo = hg.column("bin_lo"), hi = hg.column("bin_hi"),
                          ct = hg.column("count");
        for (const auto& row : hg.rows)
            hist += row[lo] + " " + row[hi] + " " + row[ct] + "\n";
        save("plots/sensitivity_hist.dat", hist);
    }

    RunConfig cfg_;
    std::filesystem::path out_;
    std::optional<VoxelGeometry> geom_;
    std::vector<BoundaryFace> faces_;
    std::unique_ptr<ThermalMesh> mesh_;
};

}  // namespace castopt
