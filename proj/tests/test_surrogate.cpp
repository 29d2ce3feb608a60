#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "castopt/surrogate.hpp"

using namespace castopt;

namespace {

/// Analytic stand-in for the casting objectives: cheap, smooth, and known
/// exactly, so surrogate accuracy can be measured against ground truth.
Dataset synthetic_dataset(std::size_t n, int n_domains, std::uint64_t seed) {
    DesignBounds bounds;
    const auto box = design_box(bounds, n_domains);
    const auto pts = latin_hypercube(n, box, seed);
    Dataset ds;
    ds.n_domains = n_domains;
    ds.X = Matrix(n, box.size());
    for (auto& col : ds.y) col.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < box.size(); ++c) ds.X(i, c) = pts[i][c];
        const double u0 = box[0].normalize(pts[i][0]);
        const double u1 = box[1].normalize(pts[i][1]);
        ds.y[0][i] = 3.0 + 2.0 * u0 + u1 * u1;
        ds.y[1][i] = 10.0 + 5.0 * u1 + 2.0 * u0 * u1;
        ds.y[2][i] = -(140.0 + 10.0 * u0 + 6.0 * (1.0 - u1));
    }
    ds.split.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (i % 8 == 6) ds.split[i] = 1;
        if (i % 8 == 7) ds.split[i] = 2;
    }
    return ds;
}

SurrogateNet linear_surrogate() {
    SurrogateNet s;
    s.net = Mlp::init({2, 1}, 0);
    s.net.weights()[0] = {0.5, 0.25};
    s.net.biases()[0] = {0.1};
    s.in_bounds = {{900.0, 1100.0}, {500.0, 700.0}};
    s.out_range = {10.0, 30.0};
    return s;
}

}  // namespace

TEST_CASE("dataset csv and split files round-trip", "[surrogate]") {
    const Dataset ds = synthetic_dataset(24, 2, 3);
    write_file("dataset_test.csv", ds.csv());
    write_file("splits_test.csv", ds.splits_csv());
    const Dataset back = Dataset::from_csv("dataset_test.csv", "splits_test.csv");
    REQUIRE(back.n_domains == 2);
    REQUIRE(back.rows() == ds.rows());
    CHECK(back.X.a == ds.X.a);  // shortest-round-trip formatting is exact
    for (int o = 0; o < kNumObjectives; ++o)
        CHECK(back.y[static_cast<std::size_t>(o)] == ds.y[static_cast<std::size_t>(o)]);
    CHECK(back.split == ds.split);

    const CsvTable t = read_csv("dataset_test.csv");
    REQUIRE(t.header.size() == 1 + 2 + 3);
    CHECK(t.header[0] == "t_init");
    CHECK(t.header[1] == "t_wall_0");
    CHECK(t.header[3] == "obj_time_s");
    CHECK(t.header[5] == "obj_neg_yield_mpa");
}

TEST_CASE("gather extracts exactly one split", "[surrogate]") {
    const Dataset ds = synthetic_dataset(24, 2, 4);
    Matrix X;
    std::vector<double> y;
    std::size_t total = 0;
    for (int which = 0; which < 3; ++which) {
        ds.gather(which, 1, X, y);
        CHECK(X.rows == ds.count(which));
        CHECK(y.size() == X.rows);
        total += X.rows;
    }
    CHECK(total == ds.rows());
    ds.gather(2, 0, X, y);
    std::size_t r = 0;
    for (std::size_t i = 0; i < ds.rows(); ++i)
        if (ds.split[i] == 2) {
            CHECK(X(r, 0) == ds.X(i, 0));
            CHECK(y[r] == ds.y[0][i]);
            ++r;
        }
}

TEST_CASE("prediction applies both normalizations", "[surrogate]") {
    const SurrogateNet s = linear_surrogate();
    // design (1000, 600) -> normalized (0.5, 0.5) -> raw 0.475 ->
    // denormalized 10 + 0.475 * 20 = 19.5
    CHECK_THAT(s.predict({1000.0, 600.0}), Catch::Matchers::WithinRel(19.5, 1e-12));
    // Corners map to the exact box edges.
    CHECK_THAT(s.predict({900.0, 500.0}), Catch::Matchers::WithinRel(10.0 + 0.1 * 20.0, 1e-12));
    CHECK_THROWS_AS(s.predict({880.0, 600.0}), ValidationError);
    CHECK_THROWS_AS(s.predict({1000.0, 720.0}), ValidationError);
    CHECK_THROWS_AS(s.predict({1000.0}), ValidationError);
    // The 1e-9 slack admits boundary values produced by round-tripping.
    CHECK_NOTHROW(s.predict({900.0 - 1e-10, 700.0}));

    CHECK(s.eval_normalized({0.5, 0.5}) == 0.475);
    const auto g = s.gradient_normalized({0.5, 0.5});
    CHECK(g[0] == 0.5);
    CHECK(g[1] == 0.25);
}

TEST_CASE("surrogate files round-trip exactly", "[surrogate]") {
    SurrogateNet s = linear_surrogate();
    s.net = Mlp::init({2, 8, 1}, 77);
    std::stringstream buf;
    s.save(buf);
    const SurrogateNet back = SurrogateNet::load(buf);
    CHECK(back.in_bounds.size() == 2);
    CHECK(back.out_range.lo == 10.0);
    CHECK(back.out_range.hi == 30.0);
    for (double x0 : {900.0, 987.5, 1100.0})
        CHECK(back.predict({x0, 650.0}) == s.predict({x0, 650.0}));

    std::stringstream bad("surrogate 2\n");
    CHECK_THROWS_AS(SurrogateNet::load(bad), ParseError);

    s.save_file("surrogate_test.net");
    const SurrogateNet from_disk = SurrogateNet::load_file("surrogate_test.net");
    CHECK(from_disk.predict({950.0, 550.0}) == s.predict({950.0, 550.0}));
}

TEST_CASE("relative error metric matches a hand computation", "[surrogate]") {
    const SurrogateNet s = linear_surrogate();
    Dataset ds;
    ds.n_domains = 1;
    ds.X = Matrix(2, 2);
    ds.X(0, 0) = 1000.0;
    ds.X(0, 1) = 600.0;  // predicts 19.5
    ds.X(1, 0) = 900.0;
    ds.X(1, 1) = 500.0;  // predicts 12.0
    for (auto& col : ds.y) col = {20.0, 10.0};
    ds.split = {2, 2};
    // errors: |19.5-20|/20 = 0.025, |12-10|/10 = 0.2 -> mean 11.25%
    CHECK_THAT(mean_relative_error_pct(s, ds, 0, 2),
               Catch::Matchers::WithinRel(11.25, 1e-12));
    CHECK_THROWS_AS(mean_relative_error_pct(s, ds, 0, 1), ValidationError);  // empty split
}

TEST_CASE("training learns smooth objectives to a few percent", "[surrogate]") {
    const Dataset ds = synthetic_dataset(160, 2, 5);
    DesignBounds bounds;
    std::array<MlpConfig, kNumObjectives> cfgs;
    for (auto& c : cfgs) {
        c.hidden_layers = 2;
        c.hidden_width = 16;
        c.learning_rate = 0.01;
        c.epochs = 400;
        c.l2 = 0.0;
        c.dropout = 0.0;
    }
    const SurrogateTraining tr = train_surrogate(ds, bounds, cfgs, 42);
    for (int o = 0; o < kNumObjectives; ++o) {
        INFO("objective " << kObjectiveNames[o]);
        CHECK(tr.error_pct[static_cast<std::size_t>(o)][0] < 5.0);
        CHECK(tr.error_pct[static_cast<std::size_t>(o)][2] < 5.0);
        CHECK(tr.history[static_cast<std::size_t>(o)].stopped_epoch >= 1);
    }
    // A prediction in the middle of the box tracks the generating functions.
    const Objectives mid = tr.model.predict({1000.0, 600.0, 600.0});
    CHECK_THAT(mid.time_s, Catch::Matchers::WithinAbs(3.0 + 2.0 * 0.5 + 0.25, 0.3));
    CHECK_THAT(mid.grain_um, Catch::Matchers::WithinAbs(10.0 + 2.5 + 0.5, 0.7));
    CHECK_THAT(mid.neg_yield_mpa, Catch::Matchers::WithinAbs(-148.0, 5.0));
    CHECK(tr.model.in_bounds().size() == 3);
}

TEST_CASE("surrogate training is seed-reproducible", "[surrogate]") {
    const Dataset ds = synthetic_dataset(48, 1, 6);
    DesignBounds bounds;
    std::array<MlpConfig, kNumObjectives> cfgs;
    for (auto& c : cfgs) {
        c.hidden_layers = 1;
        c.hidden_width = 8;
        c.epochs = 30;
        c.learning_rate = 0.01;
    }
    const SurrogateTraining a = train_surrogate(ds, bounds, cfgs, 9);
    const SurrogateTraining b = train_surrogate(ds, bounds, cfgs, 9);
    for (int o = 0; o < kNumObjectives; ++o)
        CHECK(a.model.nets[static_cast<std::size_t>(o)].net.weights() ==
              b.model.nets[static_cast<std::size_t>(o)].net.weights());
    const SurrogateTraining c = train_surrogate(ds, bounds, cfgs, 10);
    CHECK(a.model.nets[0].net.weights() != c.model.nets[0].net.weights());
}

TEST_CASE("a constant objective cannot be normalized for training", "[surrogate]") {
    Dataset ds = synthetic_dataset(32, 1, 7);
    std::fill(ds.y[1].begin(), ds.y[1].end(), 4.2);
    DesignBounds bounds;
    std::array<MlpConfig, kNumObjectives> cfgs;
    for (auto& c : cfgs) c.epochs = 5;
    CHECK_THROWS_AS(train_surrogate(ds, bounds, cfgs, 1), TrainError);
}
