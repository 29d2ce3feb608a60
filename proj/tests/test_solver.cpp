#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <functional>
#include <vector>

#include "castopt/rng.hpp"
#include "castopt/solver.hpp"

using namespace castopt;

namespace {

VoxelGeometry box(int nx, int ny, int nz, double spacing) {
    VoxelGeometry g;
    g.dims = {nx, ny, nz};
    g.spacing = spacing;
    g.mask.assign(static_cast<std::size_t>(nx) * ny * nz, 1);
    return g;
}

/// Mesh over a full box with domains assigned by an arbitrary rule.
ThermalMesh make_mesh(const VoxelGeometry& g, int n_domains,
                      const std::function<int(const BoundaryFace&)>& rule) {
    auto faces = extract_boundary_faces(g);
    for (auto& f : faces) f.domain = rule(f);
    return ThermalMesh(g, faces, n_domains);
}

ThermalMesh single_domain_mesh(const VoxelGeometry& g) {
    return make_mesh(g, 1, [](const BoundaryFace&) { return 0; });
}

/// Pure-conduction fixture: the mushy zone sits far below every temperature
/// the tests visit, so C_eff reduces to C_p and the heat equation is linear.
MaterialProperties conduction_material() {
    MaterialProperties m;
    m.density = PiecewiseLinear(1000.0);
    m.specific_heat = PiecewiseLinear(1000.0);
    m.conductivity = PiecewiseLinear(100.0);
    m.latent_heat = 1.0e5;
    m.partition_k = 0.5;
    m.t_freeze = 520.0;
    m.t_liquidus = 500.0;
    m.t_solidus = 450.0;
    return m;
}

/// Series solution for a slab at uniform T0 whose two faces are held at Tw:
/// theta = (T - Tw)/(T0 - Tw) = sum over odd n of 4/(n pi) sin(n pi x / L)
/// exp(-(n pi / L)^2 alpha t).
double slab_series(double x, double t, double length, double alpha) {
    long double theta = 0.0L;
    for (int n = 1; n <= 399; n += 2) {
        const long double w = n * M_PIl / length;
        theta += 4.0L / (n * M_PIl) * std::sin(static_cast<long double>(w * x)) *
                 std::exp(static_cast<long double>(-w * w * alpha * t));
    }
    return static_cast<double>(theta);
}

}  // namespace

TEST_CASE("stability limit follows rho C_eff s^2 / (6 k)", "[solver]") {
    const auto g = box(3, 3, 3, 0.004);
    const auto mesh = single_domain_mesh(g);
    const auto mat = default_material();

    ThermalField f = ThermalField::uniform(mesh, 1000.0, mat);
    const double expected = 2500.0 * 1000.0 * sq(0.004) / (6.0 * 150.0);
    CHECK_THAT(stable_dt_limit(f, mesh, mat), Catch::Matchers::WithinRel(expected, 1e-12));

    // A single mushy cell with its inflated apparent capacity raises the
    // limit there, so the minimum is still the all-liquid value...
    f.temperature[4] = 870.0;
    const double ceff = effective_heat_capacity(870.0, mat);
    REQUIRE(ceff > 1000.0);
    CHECK_THAT(stable_dt_limit(f, mesh, mat), Catch::Matchers::WithinRel(expected, 1e-12));

    // ...while a conductivity table that grows with temperature lowers it.
    MaterialProperties hot = mat;
    hot.conductivity = PiecewiseLinear({{700.0, 150.0}, {1100.0, 300.0}});
    ThermalField u = ThermalField::uniform(mesh, 1100.0, hot);
    CHECK_THAT(stable_dt_limit(u, mesh, hot),
               Catch::Matchers::WithinRel(expected / 2.0, 1e-12));
}

TEST_CASE("steps larger than the stability limit are refused", "[solver]") {
    const auto g = box(4, 3, 2, 0.004);
    const auto mesh = single_domain_mesh(g);
    const auto mat = default_material();
    ThermalBC bc;
    bc.t_init = 1000.0;
    bc.t_wall = {600.0};

    ThermalField f = ThermalField::uniform(mesh, 1000.0, mat);
    const double limit = stable_dt_limit(f, mesh, mat);
    CHECK_THROWS_AS(step(f, mesh, bc, mat, limit * 1.01), SolveError);
    CHECK_THROWS_AS(step(f, mesh, bc, mat, 0.0), SolveError);
    CHECK_NOTHROW(step(f, mesh, bc, mat, limit));
}

TEST_CASE("insulated stepping conserves total enthalpy", "[solver]") {
    const auto g = box(5, 4, 3, 0.004);
    const auto mesh = single_domain_mesh(g);
    const auto mat = default_material();
    ThermalBC bc;
    bc.t_init = 1000.0;
    bc.t_wall = {600.0};  // irrelevant, every domain insulated
    bc.all_insulated = true;

    ThermalField f = ThermalField::uniform(mesh, 1000.0, mat);
    Rng rng(31);
    for (auto& T : f.temperature) T = rng.uniform(950.0, 1050.0);  // stays above liquidus

    // Constant properties above the liquidus, so sum(cap * T) is the exact
    // discrete enthalpy and must not drift.
    const double cap = 2500.0 * 1000.0 * std::pow(0.004, 3);
    double initial = 0.0;
    for (double T : f.temperature) initial += cap * T;

    const double dt = 0.9 * stable_dt_limit(f, mesh, mat);
    double worst_step = 0.0;
    for (int s = 0; s < 2000; ++s) {
        const StepDiagnostics d = step(f, mesh, bc, mat, dt);
        CHECK(d.boundary_energy == 0.0);
        worst_step = std::max(worst_step, std::abs(d.enthalpy_change));
    }
    double final = 0.0;
    for (double T : f.temperature) final += cap * T;

    CHECK(worst_step < 1e-8 * initial);
    CHECK(std::abs(final - initial) < 1e-10 * initial);

    // And the field has relaxed toward its mean.
    const auto [lo, hi] = std::minmax_element(f.temperature.begin(), f.temperature.end());
    CHECK(*hi - *lo < 1.0);
}

TEST_CASE("per-step enthalpy change equals the boundary inflow", "[solver]") {
    const auto g = box(6, 5, 4, 0.004);
    const auto mesh = make_mesh(g, 2, [](const BoundaryFace& f) {
        return (f.dir == FaceDir::xm || f.dir == FaceDir::xp) ? 0 : 1;
    });
    const auto mat = default_material();
    ThermalBC bc;
    bc.t_init = 1000.0;
    bc.t_wall = {560.0, 620.0};

    ThermalField f = ThermalField::uniform(mesh, bc.t_init, mat);
    for (int s = 0; s < 400; ++s) {
        const double dt = 0.4 * stable_dt_limit(f, mesh, mat);
        const StepDiagnostics d = step(f, mesh, bc, mat, dt);
        const double scale = std::max({1.0, std::abs(d.enthalpy_change),
                                       std::abs(d.boundary_energy)});
        CHECK(std::abs(d.enthalpy_change - d.boundary_energy) < 1e-10 * scale);
    }
}

TEST_CASE("temperatures respect the maximum principle", "[solver]") {
    const auto g = box(6, 5, 4, 0.004);
    const auto mesh = single_domain_mesh(g);
    const auto mat = default_material();
    ThermalBC bc;
    bc.t_init = 1000.0;
    bc.t_wall = {600.0};

    ThermalField f = ThermalField::uniform(mesh, bc.t_init, mat);
    for (int s = 0; s < 1500; ++s) {
        const double dt = 0.4 * stable_dt_limit(f, mesh, mat);
        step(f, mesh, bc, mat, dt);
        const auto [lo, hi] = std::minmax_element(f.temperature.begin(), f.temperature.end());
        REQUIRE(*lo >= 600.0 - 1e-9);
        REQUIRE(*hi <= 1000.0 + 1e-9);
    }
}

TEST_CASE("1d slab transient matches the series solution", "[solver]") {
    const int nx = 40;
    const double s = 0.01, length = nx * s;
    const auto g = box(nx, 1, 1, s);
    // End faces get their own domains; every side face is insulated, which
    // reduces the run to genuine one-dimensional conduction.
    const auto mesh = make_mesh(g, 3, [&](const BoundaryFace& f) {
        if (f.dir == FaceDir::xm && f.cell[0] == 0) return 0;
        if (f.dir == FaceDir::xp && f.cell[0] == nx - 1) return 1;
        return 2;
    });
    const auto mat = conduction_material();
    ThermalBC bc;
    bc.t_init = 1000.0;
    bc.t_wall = {800.0, 800.0, 0.0};
    bc.insulated = {0, 0, 1};

    const double alpha = 100.0 / (1000.0 * 1000.0);  // k / (rho c_p)
    const double t_end = 0.05 * length * length / alpha;
    ThermalField f = ThermalField::uniform(mesh, bc.t_init, mat);
    const int n_steps = 1200;
    const double dt = t_end / n_steps;
    REQUIRE(dt < stable_dt_limit(f, mesh, mat));
    for (int i = 0; i < n_steps; ++i) step(f, mesh, bc, mat, dt);

    double worst = 0.0;
    for (int i = 0; i < nx; ++i) {
        const double x = (i + 0.5) * s;
        const double exact = 800.0 + 200.0 * slab_series(x, t_end, length, alpha);
        worst = std::max(worst, std::abs(f.temperature[static_cast<std::size_t>(i)] - exact));
    }
    CHECK(worst < 1.0);  // 0.5% of the 200 K drop
}

TEST_CASE("1d slab relaxes to the exact linear steady state", "[solver]") {
    const int nx = 16;
    const double s = 0.01;
    const auto g = box(nx, 1, 1, s);
    const auto mesh = make_mesh(g, 3, [&](const BoundaryFace& f) {
        if (f.dir == FaceDir::xm && f.cell[0] == 0) return 0;
        if (f.dir == FaceDir::xp && f.cell[0] == nx - 1) return 1;
        return 2;
    });
    const auto mat = conduction_material();
    ThermalBC bc;
    bc.t_init = 1000.0;
    bc.t_wall = {800.0, 900.0, 0.0};
    bc.insulated = {0, 0, 1};

    ThermalField f = ThermalField::uniform(mesh, bc.t_init, mat);
    for (int i = 0; i < 12000; ++i) {
        const double dt = 0.9 * stable_dt_limit(f, mesh, mat);
        step(f, mesh, bc, mat, dt);
    }
    // With constant conductivity the discrete steady profile is exactly the
    // linear interpolant between the wall temperatures at the cell centers.
    for (int i = 0; i < nx; ++i) {
        const double exact = 800.0 + 100.0 * (i + 0.5) / nx;
        CHECK_THAT(f.temperature[static_cast<std::size_t>(i)],
                   Catch::Matchers::WithinAbs(exact, 1e-6));
    }
}

TEST_CASE("steady face fluxes are uniform under variable conductivity", "[solver]") {
    const int nx = 12;
    const double s = 0.01;
    const auto g = box(nx, 1, 1, s);
    const auto mesh = make_mesh(g, 3, [&](const BoundaryFace& f) {
        if (f.dir == FaceDir::xm && f.cell[0] == 0) return 0;
        if (f.dir == FaceDir::xp && f.cell[0] == nx - 1) return 1;
        return 2;
    });
    MaterialProperties mat = conduction_material();
    mat.conductivity = PiecewiseLinear({{300.0, 50.0}, {1200.0, 250.0}});
    ThermalBC bc;
    bc.t_init = 1000.0;
    bc.t_wall = {700.0, 1000.0, 0.0};
    bc.insulated = {0, 0, 1};

    ThermalField f = ThermalField::uniform(mesh, bc.t_init, mat);
    for (int i = 0; i < 40000; ++i) {
        const double dt = 0.9 * stable_dt_limit(f, mesh, mat);
        step(f, mesh, bc, mat, dt);
    }
    // In the discrete steady state every interior face carries the same flux,
    // whatever the conductivity profile; that pins the harmonic-mean assembly.
    std::vector<double> flux;
    for (const auto& face : mesh.interior_faces()) {
        const double ka = mat.conductivity.clamped(f.temperature[face.a]);
        const double kb = mat.conductivity.clamped(f.temperature[face.b]);
        const double kf = 2.0 * ka * kb / (ka + kb);
        flux.push_back(kf * s * s * (f.temperature[face.b] - f.temperature[face.a]) / s);
    }
    REQUIRE(flux.size() == static_cast<std::size_t>(nx - 1));
    for (double q : flux) CHECK_THAT(q, Catch::Matchers::WithinRel(flux.front(), 1e-6));
}

TEST_CASE("full solve yields finite times and positive cooling rates", "[solver]") {
    const auto g = box(6, 5, 4, 0.004);
    const auto mesh = make_mesh(g, 2, [](const BoundaryFace& f) {
        return (f.dir == FaceDir::zm || f.dir == FaceDir::zp) ? 1 : 0;
    });
    const auto mat = default_material();
    ThermalBC bc;
    bc.t_init = 1000.0;
    bc.t_wall = {620.0, 560.0};
    SolverConfig cfg;
    cfg.record_history = true;

    const SolveRecord rec = solve(mesh, bc, mat, cfg);
    REQUIRE(rec.solidification_time.size() == static_cast<std::size_t>(mesh.n_cells()));
    double max_time = 0.0;
    for (double t : rec.solidification_time) {
        REQUIRE(std::isfinite(t));
        REQUIRE(t > 0.0);
        max_time = std::max(max_time, t);
    }
    CHECK(rec.total_time == max_time);
    for (double r : rec.cooling_rate) {
        REQUIRE(std::isfinite(r));
        REQUIRE(r > 0.0);
    }
    CHECK(rec.steps > 0);

    // Solid fraction history is non-decreasing cell by cell (monotone cooling).
    REQUIRE(rec.history_times.size() == rec.history_fs.size());
    REQUIRE(rec.history_times.front() == 0.0);
    for (std::size_t t = 1; t < rec.history_fs.size(); ++t) {
        REQUIRE(rec.history_times[t] > rec.history_times[t - 1]);
        for (std::size_t c = 0; c < rec.history_fs[t].size(); ++c)
            REQUIRE(rec.history_fs[t][c] >= rec.history_fs[t - 1][c] - 1e-12);
    }

    // Hotter walls keep the casting liquid longer.
    ThermalBC slower = bc;
    slower.t_wall = {700.0, 640.0};
    SolverConfig plain;
    CHECK(solve(mesh, slower, mat, plain).total_time > rec.total_time);
}

TEST_CASE("time step refinement converges from below", "[solver]") {
    // The apparent-capacity scheme samples C_eff at the start-of-step
    // temperature, so a coarse step that enters the mushy band skips part of
    // the latent heat and finishes too early. Refinement must recover it:
    // solidification times increase monotonically and the remaining gap
    // shrinks as dt drops.
    const auto g = box(5, 4, 3, 0.004);
    const auto mesh = single_domain_mesh(g);
    const auto mat = default_material();
    ThermalBC bc;
    bc.t_init = 1000.0;
    bc.t_wall = {600.0};

    SolverConfig coarse, mid, fine;
    coarse.cfl = 0.4;
    mid.cfl = 0.1;
    fine.cfl = 0.025;
    const double a = solve(mesh, bc, mat, coarse).total_time;
    const double b = solve(mesh, bc, mat, mid).total_time;
    const double c = solve(mesh, bc, mat, fine).total_time;
    CHECK(a < b);
    CHECK(b < c);
    CHECK(c - b < 0.5 * (b - a));
}

TEST_CASE("solve validates its inputs", "[solver]") {
    const auto g = box(3, 3, 3, 0.004);
    const auto mesh = single_domain_mesh(g);
    const auto mat = default_material();
    SolverConfig cfg;

    ThermalBC bc;
    bc.t_init = 1000.0;
    bc.t_wall = {600.0};

    ThermalBC all_ins = bc;
    all_ins.all_insulated = true;
    CHECK_THROWS_AS(solve(mesh, all_ins, mat, cfg), ValidationError);

    ThermalBC cold_melt = bc;
    cold_melt.t_init = 890.0;  // below the liquidus; also outside the box
    CHECK_THROWS_AS(solve(mesh, cold_melt, mat, cfg), ValidationError);

    ThermalBC hot_wall = bc;
    hot_wall.t_wall = {699.0};
    SolverConfig loose = cfg;
    loose.enforce_bounds = false;
    loose.bounds.t_wall = {500.0, 900.0};
    MaterialProperties low_sol = mat;
    low_sol.t_solidus = 650.0;  // wall no longer below the solidus
    CHECK_THROWS_AS(solve(mesh, hot_wall, low_sol, loose), ValidationError);

    ThermalBC mismatched = bc;
    mismatched.t_wall = {600.0, 600.0};
    CHECK_THROWS_AS(solve(mesh, mismatched, mat, cfg), ValidationError);

    ThermalBC outside = bc;
    outside.t_wall = {450.0};  // below the admissible wall range
    CHECK_THROWS_AS(solve(mesh, outside, mat, cfg), ValidationError);
    SolverConfig unbounded = cfg;
    unbounded.enforce_bounds = false;
    CHECK_NOTHROW(solve(mesh, outside, mat, unbounded));

    SolverConfig bad_cfl = cfg;
    bad_cfl.cfl = 1.5;
    CHECK_THROWS_AS(solve(mesh, bc, mat, bad_cfl), ValidationError);

    SolverConfig starved = cfg;
    starved.max_steps = 3;
    CHECK_THROWS_AS(solve(mesh, bc, mat, starved), SolveError);
}

TEST_CASE("thermal csv lists one row per cell", "[solver]") {
    const auto g = box(3, 2, 2, 0.004);
    const auto mesh = single_domain_mesh(g);
    ThermalBC bc;
    bc.t_init = 1000.0;
    bc.t_wall = {600.0};
    const SolveRecord rec = solve(mesh, bc, default_material(), SolverConfig{});

    const std::string path =
        (std::filesystem::temp_directory_path() / "castopt_thermal_test.csv").string();
    write_file(path, thermal_csv(mesh, rec));
    const CsvTable t = read_csv(path);
    REQUIRE(t.header == std::vector<std::string>{"i", "j", "k", "solidification_time",
                                                 "cooling_rate"});
    REQUIRE(t.rows.size() == static_cast<std::size_t>(mesh.n_cells()));
    CHECK(parse_double(t.rows[0][3], "time") > 0.0);
}
