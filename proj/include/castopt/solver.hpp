#pragma once

// Transient solidification solver.
//
// Finite-volume discretization on the voxel grid (one control volume per
// filled cell), explicit Euler in time. Latent heat enters through the
// apparent heat capacity C_eff(T) = C_p(T) + L_f * (-df_s/dT), so the energy
// equation stays in temperature form:
//
//     rho C_eff V dT/dt = sum_faces k_f A (T_nb - T) / d
//
// Interior faces use the harmonic mean of the two cell conductivities with
// d = spacing; wall faces apply a fixed wall temperature through a half-cell
// ghost flux (d = spacing/2). The per-step diagnostics report the discrete
// enthalpy change and the boundary energy inflow assembled from the exact
// same face fluxes, so conservation holds to rounding error by construction.
//
// The explicit stability bound used throughout is
//
//     dt_max = min_cells rho C_eff dx^2 / (2 * 3 * k)
//
// (the classic 3D conduction limit). step() refuses anything larger; solve()
// runs at a configurable fraction of it (default 0.4).

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "castopt/common.hpp"
#include "castopt/geometry.hpp"
#include "castopt/material.hpp"
#include "castopt/text.hpp"

namespace castopt {

/// Boundary condition: uniform melt temperature plus one wall temperature per
/// domain. The insulation flags exist for verification runs (pure conduction,
/// conservation checks); production runs leave them unset.
struct ThermalBC {
    double t_init = 0.0;
    std::vector<double> t_wall;
    std::vector<std::uint8_t> insulated;  // optional, per domain
    bool all_insulated = false;

    bool domain_insulated(int d) const {
        if (all_insulated) return true;
        return !insulated.empty() && insulated[static_cast<std::size_t>(d)] != 0;
    }
};

/// Admissible design-variable box for casting runs.
struct DesignBounds {
    Interval t_init{900.0, 1100.0};
    Interval t_wall{500.0, 700.0};
};

struct SolverConfig {
    double fs_done = 0.99;  // solid fraction that counts as "solidified"
    double cfl = 0.4;       // fraction of the explicit stability limit
    long max_steps = 2000000;
    bool enforce_bounds = true;
    DesignBounds bounds;
    bool record_history = false;  // keep per-step solid-fraction frames
};

/// Compact connectivity built once per geometry + wall decomposition.
class ThermalMesh {
  public:
    struct Interior {
        int a, b;  // compact cell ids on either side
    };
    struct Wall {
        int cell;    // compact cell id
        int domain;  // wall-temperature domain
    };

    ThermalMesh(const VoxelGeometry& g, const std::vector<BoundaryFace>& faces, int n_domains)
        : spacing_(g.spacing), n_domains_(n_domains) {
        compact_.assign(g.mask.size(), -1);
        for (int k = 0; k < g.dims[2]; ++k)
            for (int j = 0; j < g.dims[1]; ++j)
                for (int i = 0; i < g.dims[0]; ++i)
                    if (g.filled(i, j, k)) {
                        compact_[g.linear_index(i, j, k)] = static_cast<int>(cells_.size());
                        cells_.push_back({i, j, k});
                    }
        if (cells_.empty()) throw EmptyMaskError("thermal mesh over empty geometry");

        // Interior faces once each: positive-direction neighbors only.
        for (std::size_t c = 0; c < cells_.size(); ++c) {
            auto [i, j, k] = cells_[c];
            for (FaceDir dir : {FaceDir::xp, FaceDir::yp, FaceDir::zp}) {
                auto s = face_dir_step(dir);
                int ni = i + s[0], nj = j + s[1], nk = k + s[2];
                if (!g.filled(ni, nj, nk)) continue;
                interior_.push_back({static_cast<int>(c), compact_[g.linear_index(ni, nj, nk)]});
            }
        }

        wall_.reserve(faces.size());
        for (const auto& f : faces) {
            if (!g.filled(f.cell[0], f.cell[1], f.cell[2]))
                throw ValidationError("boundary face attached to an empty cell");
            auto s = face_dir_step(f.dir);
            if (g.filled(f.cell[0] + s[0], f.cell[1] + s[1], f.cell[2] + s[2]))
                throw ValidationError("boundary face normal points into the casting");
            if (f.domain < 0 || f.domain >= n_domains)
                throw ValidationError("boundary face domain id out of range");
            wall_.push_back({compact_[g.linear_index(f.cell[0], f.cell[1], f.cell[2])], f.domain});
        }
    }

    int n_cells() const { return static_cast<int>(cells_.size()); }
    int n_domains() const { return n_domains_; }
    double spacing() const { return spacing_; }
    const std::vector<std::array<int, 3>>& cells() const { return cells_; }
    const std::vector<Interior>& interior_faces() const { return interior_; }
    const std::vector<Wall>& wall_faces() const { return wall_; }

  private:
    double spacing_;
    int n_domains_;
    std::vector<std::array<int, 3>> cells_;
    std::vector<int> compact_;
    std::vector<Interior> interior_;
    std::vector<Wall> wall_;
};

struct ThermalField {
    std::vector<double> temperature;
    std::vector<double> solid_frac;
    double time = 0.0;

    static ThermalField uniform(const ThermalMesh& mesh, double T, const MaterialProperties& m) {
        ThermalField f;
        f.temperature.assign(static_cast<std::size_t>(mesh.n_cells()), T);
        f.solid_frac.assign(static_cast<std::size_t>(mesh.n_cells()), solid_fraction(T, m));
        return f;
    }
};

struct StepDiagnostics {
    double dt = 0.0;
    double enthalpy_change = 0.0;  // sum of rho C_eff V dT over cells, J
    double boundary_energy = 0.0;  // dt * net conductive inflow through walls, J
    double stable_dt = 0.0;        // the limit that applied to this step
};

/// Current explicit stability limit, min over cells of rho C_eff dx^2 / (6 k).
inline double stable_dt_limit(const ThermalField& f, const ThermalMesh& mesh,
                              const MaterialProperties& mat) {
    double limit = std::numeric_limits<double>::infinity();
    const double s2 = sq(mesh.spacing());
    for (double T : f.temperature) {
        const double rho = mat.density.clamped(T);
        const double ceff = effective_heat_capacity(T, mat);
        const double k = mat.conductivity.clamped(T);
        limit = std::min(limit, rho * ceff * s2 / (6.0 * k));
    }
    return limit;
}

/// One explicit Euler step of length dt. Throws SolveError if dt exceeds the
/// stability limit or the update produces non-finite values.
inline StepDiagnostics step(ThermalField& f, const ThermalMesh& mesh, const ThermalBC& bc,
                            const MaterialProperties& mat, double dt) {
    const int n = mesh.n_cells();
    if (static_cast<int>(f.temperature.size()) != n)
        throw ValidationError("field size does not match mesh");
    if (static_cast<int>(bc.t_wall.size()) != mesh.n_domains())
        throw ValidationError("wall temperature count does not match domain count");
    if (!(dt > 0.0)) throw SolveError("step: dt must be positive");

    const double s = mesh.spacing();
    const double area = s * s;
    const double volume = s * s * s;

    // Per-cell properties at the start-of-step temperature.
    static thread_local std::vector<double> cond, cap, net;
    cond.resize(static_cast<std::size_t>(n));
    cap.resize(static_cast<std::size_t>(n));
    net.assign(static_cast<std::size_t>(n), 0.0);
    double limit = std::numeric_limits<double>::infinity();
    for (int c = 0; c < n; ++c) {
        const double T = f.temperature[static_cast<std::size_t>(c)];
        const double rho = mat.density.clamped(T);
        const double ceff = effective_heat_capacity(T, mat);
        cond[static_cast<std::size_t>(c)] = mat.conductivity.clamped(T);
        cap[static_cast<std::size_t>(c)] = rho * ceff * volume;
        limit = std::min(limit, rho * ceff * sq(s) / (6.0 * cond[static_cast<std::size_t>(c)]));
    }
    if (dt > limit * (1.0 + 1e-12))
        throw SolveError("step: dt " + fmt_double(dt) + " exceeds stability limit " +
                         fmt_double(limit));

    // Each face flux is computed once and scattered with opposite signs, so
    // interior faces cancel exactly in the total enthalpy budget.
    for (const auto& face : mesh.interior_faces()) {
        const auto a = static_cast<std::size_t>(face.a), b = static_cast<std::size_t>(face.b);
        const double ka = cond[a], kb = cond[b];
        const double kf = 2.0 * ka * kb / (ka + kb);
        const double flux = kf * area * (f.temperature[b] - f.temperature[a]) / s;
        net[a] += flux;
        net[b] -= flux;
    }
    double boundary_power = 0.0;
    for (const auto& face : mesh.wall_faces()) {
        if (bc.domain_insulated(face.domain)) continue;
        const auto c = static_cast<std::size_t>(face.cell);
        const double tw = bc.t_wall[static_cast<std::size_t>(face.domain)];
        const double kw = mat.conductivity.clamped(tw);
        const double kf = 2.0 * cond[c] * kw / (cond[c] + kw);
        const double flux = kf * area * (tw - f.temperature[c]) / (0.5 * s);
        net[c] += flux;
        boundary_power += flux;
    }

    StepDiagnostics diag;
    diag.dt = dt;
    diag.stable_dt = limit;
    diag.boundary_energy = dt * boundary_power;
    for (int c = 0; c < n; ++c) {
        const auto cs = static_cast<std::size_t>(c);
        const double dT = dt * net[cs] / cap[cs];
        f.temperature[cs] += dT;
        diag.enthalpy_change += cap[cs] * dT;
        if (!std::isfinite(f.temperature[cs]))
            throw SolveError("step: non-finite temperature in cell " + std::to_string(c));
        f.solid_frac[cs] = solid_fraction(f.temperature[cs], mat);
    }
    f.time += dt;
    return diag;
}

/// Full transient result. Per-cell times are linearly interpolated inside the
/// step on which the respective threshold was crossed.
struct SolveRecord {
    std::vector<double> solidification_time;  // time to reach fs_done, s
    std::vector<double> cooling_rate;         // (T_liq - T_sol) / (t_sol - t_liq), K/s
    double total_time = 0.0;                  // max solidification_time
    long steps = 0;
    std::vector<double> history_times;             // only with record_history
    std::vector<std::vector<double>> history_fs;   // frames parallel to history_times
};

/// March until every cell has passed fs_done and crossed the solidus.
inline SolveRecord solve(const ThermalMesh& mesh, const ThermalBC& bc,
                         const MaterialProperties& mat, const SolverConfig& cfg) {
    if (bc.all_insulated) throw ValidationError("solve: fully insulated run cannot terminate");
    if (static_cast<int>(bc.t_wall.size()) != mesh.n_domains())
        throw ValidationError("solve: wall temperature count does not match domain count");
    if (cfg.enforce_bounds) {
        if (!cfg.bounds.t_init.contains(bc.t_init))
            throw ValidationError("solve: melt temperature outside admissible bounds");
        for (std::size_t d = 0; d < bc.t_wall.size(); ++d)
            if (!bc.domain_insulated(static_cast<int>(d)) &&
                !cfg.bounds.t_wall.contains(bc.t_wall[d]))
                throw ValidationError("solve: wall temperature outside admissible bounds");
    }
    if (!(bc.t_init > mat.t_liquidus))
        throw ValidationError("solve: melt must start above the liquidus");
    for (std::size_t d = 0; d < bc.t_wall.size(); ++d)
        if (!bc.domain_insulated(static_cast<int>(d)) && !(bc.t_wall[d] < mat.t_solidus))
            throw ValidationError("solve: wall temperatures must sit below the solidus");
    mat.validate(bc.t_init);
    if (!(cfg.cfl > 0.0 && cfg.cfl <= 1.0))
        throw ValidationError("solve: cfl must lie in (0, 1]");

    const auto n = static_cast<std::size_t>(mesh.n_cells());
    ThermalField f = ThermalField::uniform(mesh, bc.t_init, mat);

    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> t_liq(n, nan), t_sol(n, nan), t_done(n, nan);
    std::vector<double> prev_T(n), prev_fs(n);
    std::size_t remaining = n;  // cells still missing t_sol or t_done

    SolveRecord rec;
    if (cfg.record_history) {
        rec.history_times.push_back(0.0);
        rec.history_fs.push_back(f.solid_frac);
    }

    while (remaining > 0) {
        if (rec.steps >= cfg.max_steps)
            throw SolveError("solve: exceeded step budget of " + std::to_string(cfg.max_steps));
        prev_T = f.temperature;
        prev_fs = f.solid_frac;
        const double t_prev = f.time;
        const double dt = cfg.cfl * stable_dt_limit(f, mesh, mat);
        step(f, mesh, bc, mat, dt);
        ++rec.steps;

        for (std::size_t c = 0; c < n; ++c) {
            const bool was_open = std::isnan(t_sol[c]) || std::isnan(t_done[c]);
            if (std::isnan(t_liq[c]) && f.temperature[c] <= mat.t_liquidus)
                t_liq[c] = t_prev + dt * (prev_T[c] - mat.t_liquidus) /
                                        (prev_T[c] - f.temperature[c]);
            if (std::isnan(t_sol[c]) && f.temperature[c] <= mat.t_solidus)
                t_sol[c] = t_prev + dt * (prev_T[c] - mat.t_solidus) /
                                        (prev_T[c] - f.temperature[c]);
            if (std::isnan(t_done[c]) && f.solid_frac[c] >= cfg.fs_done)
                t_done[c] = t_prev + dt * (cfg.fs_done - prev_fs[c]) /
                                         (f.solid_frac[c] - prev_fs[c]);
            if (was_open && !std::isnan(t_sol[c]) && !std::isnan(t_done[c])) --remaining;
        }
        if (cfg.record_history) {
            rec.history_times.push_back(f.time);
            rec.history_fs.push_back(f.solid_frac);
        }
    }

    rec.solidification_time = std::move(t_done);
    rec.cooling_rate.resize(n);
    const double window = mat.t_liquidus - mat.t_solidus;
    for (std::size_t c = 0; c < n; ++c) {
        const double span = t_sol[c] - t_liq[c];
        if (!(span > 0.0)) throw SolveError("solve: degenerate freezing window in a cell");
        rec.cooling_rate[c] = window / span;
    }
    rec.total_time =
        *std::max_element(rec.solidification_time.begin(), rec.solidification_time.end());
    return rec;
}

/// thermal.csv: per-cell solidification time and mean freezing-window cooling rate.
inline std::string thermal_csv(const ThermalMesh& mesh, const SolveRecord& rec) {
    CsvWriter w;
    w.header({"i", "j", "k", "solidification_time", "cooling_rate"});
    for (std::size_t c = 0; c < mesh.cells().size(); ++c) {
        const auto& ijk = mesh.cells()[c];
        w.row({std::to_string(ijk[0]), std::to_string(ijk[1]), std::to_string(ijk[2]),
               fmt_double(rec.solidification_time[c]), fmt_double(rec.cooling_rate[c])});
    }
    return w.str();
}

}  // namespace castopt
