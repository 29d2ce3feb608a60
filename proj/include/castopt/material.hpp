#pragma once

// Alloy description used by the thermal solver and the microstructure models.
//
// Solidification is modeled with the classic non-equilibrium (no back
// diffusion) solute redistribution curve: below the liquidus the solid
// fraction follows
//
//     f_s(T) = 1 - ((T - T_f) / (T_liq - T_f))^(1/(k_p - 1))
//
// down to the eutectic/solidus temperature T_sol, where the remaining liquid
// freezes at once (f_s jumps to 1). T_f is the melting point of the pure
// solvent, k_p the equilibrium partition coefficient.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "castopt/common.hpp"
#include "castopt/text.hpp"

namespace castopt {

/// Piecewise-linear property table over temperature. A single-knot table acts
/// as a constant. operator() is strict (throws outside the knot range) so
/// accidental extrapolation in user code is caught; the solver deliberately
/// uses clamped() because cells keep cooling below any finite table range.
class PiecewiseLinear {
  public:
    PiecewiseLinear() : PiecewiseLinear(0.0) {}

    explicit PiecewiseLinear(double constant) : t_{0.0}, v_{constant} {}

    explicit PiecewiseLinear(std::vector<std::pair<double, double>> knots) {
        if (knots.empty()) throw ValidationError("property table: no knots");
        std::sort(knots.begin(), knots.end());
        for (std::size_t i = 1; i < knots.size(); ++i)
            if (knots[i].first == knots[i - 1].first)
                throw ValidationError("property table: duplicate temperature knot");
        for (auto& [t, v] : knots) {
            t_.push_back(t);
            v_.push_back(v);
        }
    }

    bool constant() const { return t_.size() == 1; }
    double min_knot() const { return t_.front(); }
    double max_knot() const { return t_.back(); }

    /// Strict interpolation; throws ValidationError outside [min_knot, max_knot].
    double operator()(double T) const {
        if (constant()) return v_[0];
        if (T < t_.front() || T > t_.back())
            throw ValidationError("property lookup at " + std::to_string(T) +
                                  " K outside table range [" + std::to_string(t_.front()) + ", " +
                                  std::to_string(t_.back()) + "]");
        return eval(T);
    }

    /// Constant extension outside the knot range.
    double clamped(double T) const {
        if (constant()) return v_[0];
        if (T <= t_.front()) return v_.front();
        if (T >= t_.back()) return v_.back();
        return eval(T);
    }

    /// True when the knot range covers [lo, hi] (constants cover everything).
    bool covers(double lo, double hi) const {
        return constant() || (t_.front() <= lo && t_.back() >= hi);
    }

    double min_value() const { return *std::min_element(v_.begin(), v_.end()); }

    /// Canonical "T:v T:v" text form (exact digits), for hashing and exports.
    std::string describe() const {
        std::string s;
        for (std::size_t i = 0; i < t_.size(); ++i) {
            if (i) s.push_back(' ');
            s += fmt_double(t_[i]) + ":" + fmt_double(v_[i]);
        }
        return s;
    }

  private:
    double eval(double T) const {
        auto it = std::upper_bound(t_.begin(), t_.end(), T);
        std::size_t i = (it == t_.end()) ? t_.size() - 1 : static_cast<std::size_t>(it - t_.begin());
        if (i == 0) i = 1;
        const double u = (T - t_[i - 1]) / (t_[i] - t_[i - 1]);
        return v_[i - 1] + u * (v_[i] - v_[i - 1]);
    }

    std::vector<double> t_;
    std::vector<double> v_;
};

struct MaterialProperties {
    PiecewiseLinear density;        // kg/m^3
    PiecewiseLinear specific_heat;  // J/(kg K)
    PiecewiseLinear conductivity;   // W/(m K)
    double latent_heat = 0.0;       // J/kg
    double partition_k = 0.0;       // solute partition coefficient, in (0,1)
    double t_freeze = 0.0;          // pure-solvent melting point, K
    double t_liquidus = 0.0;        // K
    double t_solidus = 0.0;         // K

    /// Check ordering, positivity, and that the tables cover every temperature
    /// the solver can visit: [t_solidus - 100, t_init_max + 50].
    void validate(double t_init_max) const {
        if (!(partition_k > 0.0 && partition_k < 1.0))
            throw ValidationError("partition coefficient must lie in (0,1)");
        if (!(t_solidus < t_liquidus && t_liquidus < t_freeze))
            throw ValidationError("require t_solidus < t_liquidus < t_freeze");
        if (!(latent_heat > 0.0)) throw ValidationError("latent heat must be positive");
        const double lo = t_solidus - 100.0;
        const double hi = t_init_max + 50.0;
        for (auto [tbl, name] : {std::pair{&density, "density"},
                                 std::pair{&specific_heat, "specific heat"},
                                 std::pair{&conductivity, "conductivity"}}) {
            if (!tbl->covers(lo, hi))
                throw ValidationError(std::string(name) + " table must cover [" +
                                      std::to_string(lo) + ", " + std::to_string(hi) + "] K");
            if (!(tbl->min_value() > 0.0))
                throw ValidationError(std::string(name) + " must be positive");
        }
    }
};

/// Solid fraction at temperature T. Exactly 0 above the liquidus, exactly 1
/// below the solidus; in between the non-equilibrium freezing curve applies
/// (evaluated inclusively at both ends, so f_s jumps at T_sol).
inline double solid_fraction(double T, const MaterialProperties& m) {
    if (T > m.t_liquidus) return 0.0;
    if (T < m.t_solidus) return 1.0;
    // 1 - u^p with u = (T-Tf)/(Tliq-Tf), evaluated as -expm1(p log1p(u-1)).
    // Near the liquidus u -> 1, and both forming u itself and the final
    // subtraction would each wipe out most significant digits; u-1 has an
    // exactly representable numerator (T - Tliq), so this form keeps full
    // relative accuracy all the way to f_s = 0.
    const double um1 = (T - m.t_liquidus) / (m.t_liquidus - m.t_freeze);
    return -std::expm1(std::log1p(um1) / (m.partition_k - 1.0));
}

/// d f_s / dT. Zero outside the open mushy interval (t_solidus, t_liquidus);
/// the jump at the solidus is not representable as a slope and is handled by
/// the solver through the crossing bookkeeping, not through this derivative.
inline double solid_fraction_slope(double T, const MaterialProperties& m) {
    if (T <= m.t_solidus || T >= m.t_liquidus) return 0.0;
    const double p = 1.0 / (m.partition_k - 1.0);
    const double u = (T - m.t_freeze) / (m.t_liquidus - m.t_freeze);
    return -p * std::pow(u, p - 1.0) / (m.t_liquidus - m.t_freeze);
}

/// Effective (apparent) heat capacity: sensible part plus latent heat released
/// over the mushy interval, C_eff = C_p + L_f * (-df_s/dT).
inline double effective_heat_capacity(double T, const MaterialProperties& m) {
    return m.specific_heat.clamped(T) + m.latent_heat * (-solid_fraction_slope(T, m));
}

/// Default die-casting aluminum alloy. Thermal constants are generic A356/A380
/// class values; the partition coefficient is chosen so the solute-driven
/// grain growth window opens before the solidus cutoff (smaller k_p pushes the
/// window entirely past the eutectic jump and growth never happens).
inline MaterialProperties default_material() {
    MaterialProperties m;
    m.density = PiecewiseLinear(2500.0);
    m.specific_heat = PiecewiseLinear(1000.0);
    m.conductivity = PiecewiseLinear(150.0);
    m.latent_heat = 4.0e5;
    m.partition_k = 0.6;
    m.t_freeze = 933.0;
    m.t_liquidus = 893.0;
    m.t_solidus = 830.0;
    return m;
}

}  // namespace castopt
