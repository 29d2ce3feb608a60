#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <vector>

#include "castopt/microstructure.hpp"

using namespace castopt;

namespace {

const MicroConstants kMc{};

/// Reference arm spacing through expl/logl instead of std::pow.
double sdas_oracle(double rate) {
    return 44.6 * static_cast<double>(expl(-0.359L * logl(static_cast<long double>(rate))));
}

}  // namespace

TEST_CASE("arm spacing follows the power fit", "[micro]") {
    CHECK_THAT(sdas_from_rate(1.0, kMc), Catch::Matchers::WithinRel(44.6, 1e-12));
    for (double rate : {0.3, 2.0, 10.0, 57.0, 300.0})
        CHECK_THAT(sdas_from_rate(rate, kMc), Catch::Matchers::WithinRel(sdas_oracle(rate), 1e-12));
    // Faster cooling refines the structure.
    CHECK(sdas_from_rate(100.0, kMc) < sdas_from_rate(1.0, kMc));
    CHECK_THROWS_AS(sdas_from_rate(0.0, kMc), ValidationError);
    CHECK_THROWS_AS(sdas_from_rate(-2.0, kMc), ValidationError);
}

TEST_CASE("yield strength follows the inverse square root fit", "[micro]") {
    CHECK_THAT(yield_from_sdas(1.0, kMc), Catch::Matchers::WithinRel(179.3, 1e-12));
    CHECK_THAT(yield_from_sdas(25.0, kMc), Catch::Matchers::WithinRel(59.0 / 5.0 + 120.3, 1e-12));
    CHECK(yield_from_sdas(10.0, kMc) > yield_from_sdas(40.0, kMc));  // finer is stronger
    CHECK_THROWS_AS(yield_from_sdas(0.0, kMc), ValidationError);
}

TEST_CASE("supersaturation matches the concentration definition", "[micro]") {
    const double kp = 0.6, c0 = 7.0;
    for (double fs : {0.05, 0.3, 0.6, 0.721, 0.9, 0.99}) {
        const double cl = c0 * std::pow(1.0 - fs, kp - 1.0);
        const double cs = kp * cl;
        const double direct = 2.0 * (cs - c0) / (cs - cl);
        CHECK_THAT(supersaturation(fs, kp), Catch::Matchers::WithinRel(direct, 1e-12));
    }
    // Closed endpoints: S(0) = 2 for every k_p, and the overflow-free form
    // stays finite at f_s = 1 where the liquid concentration diverges.
    CHECK(supersaturation(0.0, 0.6) == 2.0);
    CHECK(supersaturation(0.0, 0.13) == 2.0);
    CHECK_THAT(supersaturation(1.0, 0.6),
               Catch::Matchers::WithinRel(2.0 * 0.6 / (0.6 - 1.0), 1e-12));

    // Sign change exactly at f_s* = 1 - k_p^(1/(1-k_p)).
    const double fs_zero = 1.0 - std::pow(kp, 1.0 / (1.0 - kp));
    CHECK(supersaturation(fs_zero - 1e-6, kp) > 0.0);
    CHECK(supersaturation(fs_zero + 1e-6, kp) < 0.0);
    CHECK_THAT(supersaturation(fs_zero, kp), Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("growth coefficient solves its defining quadratic", "[micro]") {
    // lambda is defined by lambda^2 + S lambda / sqrt(pi) + S = 0; any
    // non-clamped return value must satisfy that residual.
    for (double S : {-0.1, -1.0, -3.0, -10.0, 13.0, 50.0}) {
        bool clamped = false;
        const double lam = growth_coeff_from_supersat(S, &clamped);
        if (clamped) continue;
        const double residual = lam * lam + S * lam / std::sqrt(M_PI) + S;
        CHECK_THAT(residual, Catch::Matchers::WithinAbs(0.0, 1e-9 * (1.0 + S * S)));
        CHECK(lam >= 0.0);
    }
    // Inside (0, 4 pi) the radicand is negative: no growth solution.
    for (double S : {0.5, 2.0, 6.0, 12.0}) {
        bool clamped = false;
        CHECK(growth_coeff_from_supersat(S, &clamped) == 0.0);
        CHECK(clamped);
    }
    // Negative supersaturation always grows.
    CHECK(growth_coeff_from_supersat(-2.0) > 0.0);
}

TEST_CASE("grain state tracks the solute balance", "[micro]") {
    const GrainState at0 = grain_state(0.0, 0.6, kMc);
    CHECK_THAT(at0.conc_liquid, Catch::Matchers::WithinRel(7.0, 1e-12));
    CHECK_THAT(at0.conc_solid, Catch::Matchers::WithinRel(4.2, 1e-12));
    CHECK(at0.supersat == 2.0);
    CHECK(at0.growth_coeff == 0.0);
    CHECK(at0.clamped);

    const GrainState mid = grain_state(0.9, 0.6, kMc);
    CHECK(mid.conc_liquid > at0.conc_liquid);  // solute piles up in the liquid
    CHECK_THAT(mid.conc_solid, Catch::Matchers::WithinRel(0.6 * mid.conc_liquid, 1e-12));
    CHECK(mid.supersat < 0.0);
    CHECK(mid.growth_coeff > 0.0);
    CHECK_FALSE(mid.clamped);

    CHECK_THROWS_AS(grain_state(-0.1, 0.6, kMc), ValidationError);
    CHECK_THROWS_AS(grain_state(0.5, 1.2, kMc), ValidationError);
}

TEST_CASE("constant-coefficient growth matches the closed form", "[micro]") {
    // dr/dt = lam^2 D / (2r) has the exact solution r = sqrt(r0^2 + lam^2 D t).
    const double lam = 2.0, d = 3.0e-9;
    std::vector<double> times;
    for (int i = 0; i <= 32000; ++i) times.push_back(10.0 * i / 32000.0);
    auto lam_fn = [&](double, bool&) { return lam; };

    // Generous radius: the parabola still curves hard while lam^2 D t is
    // comparable to r0^2, and the midpoint rule needs this fine a grid for
    // its O(h^2) error to clear 1e-9.
    const double r0 = 1.0e-4;
    const GrainGrowthResult smooth = integrate_grain_radius(times, lam_fn, d, r0);
    CHECK_THAT(smooth.radius,
               Catch::Matchers::WithinRel(std::sqrt(r0 * r0 + lam * lam * d * 10.0), 1e-9));
    CHECK_FALSE(smooth.clamped);

    // Stiff start: tiny nucleus, the square-root kickoff costs some accuracy
    // but the trajectory still lands on the parabola.
    const double r1 = 1.0e-6;
    const GrainGrowthResult stiff = integrate_grain_radius(times, lam_fn, d, r1);
    CHECK_THAT(stiff.radius,
               Catch::Matchers::WithinRel(std::sqrt(r1 * r1 + lam * lam * d * 10.0), 2e-3));

    CHECK_THROWS_AS(integrate_grain_radius({}, lam_fn, d, r0), ValidationError);
    CHECK_THROWS_AS(integrate_grain_radius(times, lam_fn, d, 0.0), ValidationError);
    const std::vector<double> backwards{0.0, 1.0, 0.5};
    CHECK_THROWS_AS(integrate_grain_radius(backwards, lam_fn, d, r0), ValidationError);
}

TEST_CASE("history-driven growth reduces to the closed form at fixed f_s", "[micro]") {
    // A constant f_s history is a legal non-decreasing trajectory, so the
    // full interpolation path must reproduce the constant-lambda parabola.
    MicroConstants mc = kMc;
    mc.initial_radius = 1.0e-4;
    const double kp = 0.6, fs = 0.9;
    // The parabola has strong curvature while lambda^2 D t is still comparable
    // to r0^2, so the second-order midpoint rule needs a fine grid to reach
    // 1e-9 over this horizon.
    std::vector<double> times, hist;
    for (int i = 0; i <= 12800; ++i) {
        times.push_back(5.0 * i / 12800.0);
        hist.push_back(fs);
    }
    const double lam = growth_coeff_from_supersat(supersaturation(fs, kp));
    REQUIRE(lam > 0.0);
    const GrainGrowthResult got = grain_growth(times, hist, kp, mc);
    const double exact =
        std::sqrt(sq(mc.initial_radius) + sq(lam) * mc.diffusivity * times.back());
    CHECK_THAT(got.radius, Catch::Matchers::WithinRel(exact, 1e-9));
    CHECK_FALSE(got.clamped);

    // An early low-f_s stretch contributes nothing but sets the clamp flag.
    std::vector<double> mixed_fs = hist;
    for (int i = 0; i <= 40; ++i) mixed_fs[static_cast<std::size_t>(i)] = 0.2;
    // (still non-decreasing: 0.2 ... 0.2, 0.9 ... 0.9)
    const GrainGrowthResult mixed = grain_growth(times, mixed_fs, kp, mc);
    CHECK(mixed.clamped);
    CHECK(mixed.radius < got.radius);
    CHECK(mixed.radius > mc.initial_radius);

    std::vector<double> decreasing = hist;
    decreasing.back() = 0.1;
    CHECK_THROWS_AS(grain_growth(times, decreasing, kp, mc), ValidationError);
}

TEST_CASE("per-cell growth truncates at each cell's own finish time", "[micro]") {
    SolveRecord rec;
    rec.history_times = {0.0, 1.0, 2.0, 3.0};
    rec.history_fs = {
        {0.90, 0.00},
        {0.95, 0.30},
        {0.99, 0.80},
        {1.00, 0.95},
    };
    rec.solidification_time = {1.5, 3.0};
    const double kp = 0.6;

    const std::vector<double> radii = grain_radius_field(rec, kp, kMc);
    REQUIRE(radii.size() == 2);
    CHECK(radii[0] > kMc.initial_radius);
    CHECK(radii[1] > kMc.initial_radius);

    // Cell 0 must match a hand-truncated series ending exactly at t = 1.5
    // with the interpolated f_s = 0.97.
    const GrainGrowthResult manual =
        grain_growth({0.0, 1.0, 1.5}, {0.90, 0.95, 0.97}, kp, kMc);
    CHECK_THAT(radii[0], Catch::Matchers::WithinRel(manual.radius, 1e-12));

    // More time in the growth window means a larger grain.
    SolveRecord longer = rec;
    longer.solidification_time = {2.5, 3.0};
    CHECK(grain_radius_field(longer, kp, kMc)[0] > radii[0]);

    SolveRecord no_history;
    no_history.solidification_time = {1.0};
    CHECK_THROWS_AS(grain_radius_field(no_history, kp, kMc), ValidationError);
}

TEST_CASE("objective reduction takes the documented extrema", "[micro]") {
    SolveRecord rec;
    rec.solidification_time = {2.0, 5.0, 3.0};
    rec.total_time = 5.0;
    const std::vector<double> grain_m{1.0e-6, 3.0e-6, 2.0e-6};
    const std::vector<double> yield{150.0, 140.0, 160.0};
    const Objectives o = reduce_objectives(rec, grain_m, yield);
    CHECK(o.time_s == 5.0);
    CHECK_THAT(o.grain_um, Catch::Matchers::WithinRel(3.0, 1e-12));
    CHECK(o.neg_yield_mpa == -140.0);
    CHECK(o.as_array() == std::array<double, 3>{5.0, o.grain_um, -140.0});

    CHECK_THROWS_AS(reduce_objectives(rec, {1.0e-6}, yield), ValidationError);
}

TEST_CASE("microstructure fields from a real solve are physical", "[micro]") {
    VoxelGeometry g;
    g.dims = {5, 4, 3};
    g.spacing = 0.004;
    g.mask.assign(60, 1);
    auto faces = extract_boundary_faces(g);
    for (auto& f : faces) f.domain = 0;
    const ThermalMesh mesh(g, faces, 1);
    const auto mat = default_material();
    ThermalBC bc;
    bc.t_init = 1000.0;
    bc.t_wall = {600.0};
    SolverConfig cfg;
    cfg.record_history = true;
    const SolveRecord rec = solve(mesh, bc, mat, cfg);

    std::vector<double> sdas, yield;
    for (double rate : rec.cooling_rate) {
        sdas.push_back(sdas_from_rate(rate, kMc));
        yield.push_back(yield_from_sdas(sdas.back(), kMc));
    }
    const std::vector<double> grain = grain_radius_field(rec, mat.partition_k, kMc);
    for (std::size_t c = 0; c < grain.size(); ++c) {
        CHECK(sdas[c] > 0.0);
        CHECK(yield[c] > kMc.strength_offset);
        CHECK(grain[c] >= kMc.initial_radius);
        CHECK(grain[c] < 1e-2);  // sanity: grains stay far below centimeter scale
    }
    // The growth window actually opens for this alloy: grains really grow.
    CHECK(*std::max_element(grain.begin(), grain.end()) > 2.0 * kMc.initial_radius);

    const Objectives o = reduce_objectives(rec, grain, yield);
    CHECK(o.time_s == rec.total_time);
    CHECK(o.grain_um > 0.0);
    CHECK(o.neg_yield_mpa < 0.0);

    const std::string path =
        (std::filesystem::temp_directory_path() / "castopt_micro_test.csv").string();
    write_file(path, micro_csv(mesh, sdas, yield, grain));
    const CsvTable t = read_csv(path);
    REQUIRE(t.header ==
            std::vector<std::string>{"i", "j", "k", "sdas_um", "yield_mpa", "grain_um"});
    CHECK(t.rows.size() == static_cast<std::size_t>(mesh.n_cells()));
}
