#pragma once

// Shared basics: error types, a 3-vector alias, and a few numeric helpers
// used across the solidification/optimization modules.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace castopt {

using Vec3 = std::array<double, 3>;

/// Malformed input file (voxel grid, CSV, config, model file).
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Geometry mask contains no filled cells.
struct EmptyMaskError : std::runtime_error {
    explicit EmptyMaskError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Geometry mask splits into more than one face-connected component.
struct DisconnectedMaskError : std::runtime_error {
    explicit DisconnectedMaskError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Input violated a documented precondition (bounds, table coverage, sizes).
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Time integration failed (unstable step, non-finite state, step budget).
struct SolveError : std::runtime_error {
    explicit SolveError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Training failed (divergence, bad shapes).
struct TrainError : std::runtime_error {
    explicit TrainError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad run configuration (unknown key, unparsable value, missing file).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Closed interval [lo, hi].
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double width() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
    double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }

    /// Map x into [0,1]; zero-width intervals map everything to 0.
    double normalize(double x) const {
        const double w = width();
        return w > 0.0 ? (x - lo) / w : 0.0;
    }
    double denormalize(double u) const { return lo + u * width(); }
};

/// The three casting objectives, in canonical order: total solidification
/// time, largest grain size, negated minimum yield strength.
inline constexpr int kNumObjectives = 3;
inline constexpr const char* kObjectiveNames[kNumObjectives] = {"solidification_time", "max_grain",
                                                                "min_yield"};

inline double sq(double x) { return x * x; }

inline double squared_distance(const Vec3& a, const Vec3& b) {
    return sq(a[0] - b[0]) + sq(a[1] - b[1]) + sq(a[2] - b[2]);
}

/// Dense row-major matrix; deliberately minimal (storage + indexing only).
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

    const double* row(std::size_t r) const { return a.data() + r * cols; }
    double* row(std::size_t r) { return a.data() + r * cols; }
};

}  // namespace castopt
