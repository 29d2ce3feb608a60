#pragma once

// Microstructure and property models evaluated on top of a thermal solution.
//
//  * Secondary dendrite arm spacing from the mean cooling rate over the
//    freezing window:  sdas[um] = A * rate^B          (A=44.6, B=-0.359)
//  * Yield strength from a Hall-Petch style fit:      ys = C/sqrt(sdas) + Y0
//  * Grain radius from a parabolic solute-driven growth law
//        dr/dt = lambda_s^2 * D_s / (2 r)
//    where the growth coefficient lambda_s follows from the local
//    supersaturation S of the interdendritic liquid:
//        S        = 2 (C_s - C_0) / (C_s - C_l)
//        C_l      = C_0 (1 - f_s)^(k_p - 1),  C_s = k_p C_l
//        lambda_s = -S/(2 sqrt(pi)) + (S^2/(4 pi) - S)^(1/2)
//    A negative radicand (early solidification, S > 0) means no parabolic
//    growth solution exists yet; lambda_s is clamped to zero and flagged.
//
// The growth ODE is integrated per cell with an explicit midpoint rule over
// the recorded solid-fraction history, truncated at that cell's own
// solidification time.

#include <algorithm>
#include <cmath>
#include <vector>

#include "castopt/common.hpp"
#include "castopt/solver.hpp"
#include "castopt/text.hpp"

namespace castopt {

struct MicroConstants {
    double sdas_coeff = 44.6;      // um (K/s)^-sdas_exp
    double sdas_exp = -0.359;
    double strength_coeff = 59.0;  // MPa um^1/2
    double strength_offset = 120.3;  // MPa
    double diffusivity = 3.0e-9;   // solute diffusivity in the solid, m^2/s
    double nominal_conc = 7.0;     // alloy solute content, wt%
    double initial_radius = 1.0e-6;  // nucleus radius, m
};

/// Secondary dendrite arm spacing in micrometers from a positive mean cooling
/// rate in K/s.
inline double sdas_from_rate(double cooling_rate, const MicroConstants& mc) {
    if (!(cooling_rate > 0.0)) throw ValidationError("sdas: cooling rate must be positive");
    return mc.sdas_coeff * std::pow(cooling_rate, mc.sdas_exp);
}

/// 0.2% yield strength in MPa from the arm spacing in micrometers.
inline double yield_from_sdas(double sdas_um, const MicroConstants& mc) {
    if (!(sdas_um > 0.0)) throw ValidationError("yield: arm spacing must be positive");
    return mc.strength_coeff / std::sqrt(sdas_um) + mc.strength_offset;
}

/// Solute state of the interdendritic liquid at a given solid fraction.
struct GrainState {
    double supersat = 0.0;     // S
    double growth_coeff = 0.0;  // lambda_s, clamped at zero when no solution exists
    double conc_liquid = 0.0;  // C_l (infinite at f_s = 1)
    double conc_solid = 0.0;   // C_s
    bool clamped = false;      // lambda radicand was negative
};

/// Supersaturation via the overflow-free form S = 2 (k_p - v) / (k_p - 1)
/// with v = (1 - f_s)^(1 - k_p); finite for all f_s in [0, 1], including the
/// f_s = 1 endpoint where the liquid concentration itself diverges.
inline double supersaturation(double fs, double kp) {
    const double v = std::pow(1.0 - fs, 1.0 - kp);
    return 2.0 * (kp - v) / (kp - 1.0);
}

inline double growth_coeff_from_supersat(double S, bool* clamped = nullptr) {
    const double radicand = S * S / (4.0 * M_PI) - S;
    if (radicand < 0.0) {
        if (clamped) *clamped = true;
        return 0.0;
    }
    const double lam = -S / (2.0 * std::sqrt(M_PI)) + std::sqrt(radicand);
    if (lam < 0.0) {
        if (clamped) *clamped = true;
        return 0.0;
    }
    return lam;
}

inline GrainState grain_state(double fs, double kp, const MicroConstants& mc) {
    if (!(fs >= 0.0 && fs <= 1.0)) throw ValidationError("grain_state: f_s outside [0,1]");
    if (!(kp > 0.0 && kp < 1.0)) throw ValidationError("grain_state: k_p outside (0,1)");
    GrainState st;
    st.conc_liquid = mc.nominal_conc * std::pow(1.0 - fs, kp - 1.0);
    st.conc_solid = kp * st.conc_liquid;
    st.supersat = supersaturation(fs, kp);
    st.growth_coeff = growth_coeff_from_supersat(st.supersat, &st.clamped);
    return st;
}

struct GrainGrowthResult {
    double radius = 0.0;  // m, at the final sample time
    bool clamped = false;  // lambda was clamped at least once along the way
};

/// Integrate dr/dt = lambda(t)^2 D / (2 r) with the explicit midpoint rule
/// over arbitrary strictly increasing sample times. `lambda_of_t` is
/// evaluated at interval midpoints as well as endpoints.
template <class LambdaFn>
GrainGrowthResult integrate_grain_radius(const std::vector<double>& times, LambdaFn&& lambda_of_t,
                                         double diffusivity, double r0) {
    if (times.empty()) throw ValidationError("grain growth: empty time series");
    if (!(r0 > 0.0)) throw ValidationError("grain growth: initial radius must be positive");
    GrainGrowthResult out;
    double r = r0;
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double h = times[i] - times[i - 1];
        if (!(h > 0.0)) throw ValidationError("grain growth: times must be strictly increasing");
        const double lam0 = lambda_of_t(times[i - 1], out.clamped);
        const double k1 = sq(lam0) * diffusivity / (2.0 * r);
        const double r_mid = r + 0.5 * h * k1;
        const double lam_mid = lambda_of_t(times[i - 1] + 0.5 * h, out.clamped);
        const double k2 = sq(lam_mid) * diffusivity / (2.0 * r_mid);
        r += h * k2;
    }
    out.radius = r;
    return out;
}

/// Grain growth over a recorded (t, f_s) trajectory; f_s is interpolated
/// linearly between samples when the midpoint rule needs values between them.
inline GrainGrowthResult grain_growth(const std::vector<double>& times,
                                      const std::vector<double>& fs, double kp,
                                      const MicroConstants& mc) {
    if (times.size() != fs.size() || times.empty())
        throw ValidationError("grain growth: time/fs series mismatch");
    for (std::size_t i = 1; i < fs.size(); ++i)
        if (fs[i] < fs[i - 1] - 1e-12)
            throw ValidationError("grain growth: f_s history must be non-decreasing");
    auto lambda_of_t = [&](double t, bool& clamped_flag) {
        // Locate the bracketing samples (t is always within range here).
        auto it = std::upper_bound(times.begin(), times.end(), t);
        std::size_t hi = (it == times.end()) ? times.size() - 1
                                             : static_cast<std::size_t>(it - times.begin());
        if (hi == 0) hi = 1;
        const std::size_t lo = hi - 1;
        const double u = (t - times[lo]) / (times[hi] - times[lo]);
        const double f = std::clamp(fs[lo] + u * (fs[hi] - fs[lo]), 0.0, 1.0);
        bool c = false;
        const double lam = growth_coeff_from_supersat(supersaturation(f, kp), &c);
        clamped_flag = clamped_flag || c;
        return lam;
    };
    return integrate_grain_radius(times, lambda_of_t, mc.diffusivity, mc.initial_radius);
}

/// Per-cell grain radii (meters) from a solve record with history. Each cell's
/// trajectory is truncated at its own solidification time, with one final
/// interpolated sample exactly at that time.
inline std::vector<double> grain_radius_field(const SolveRecord& rec, double kp,
                                              const MicroConstants& mc) {
    if (rec.history_times.empty())
        throw ValidationError("grain_radius_field: solve record carries no history");
    const std::size_t n = rec.solidification_time.size();
    std::vector<double> out(n);
    std::vector<double> ts, fss;
    for (std::size_t c = 0; c < n; ++c) {
        const double t_end = rec.solidification_time[c];
        ts.clear();
        fss.clear();
        std::size_t f = 0;
        for (; f < rec.history_times.size() && rec.history_times[f] < t_end; ++f) {
            ts.push_back(rec.history_times[f]);
            fss.push_back(rec.history_fs[f][c]);
        }
        if (f < rec.history_times.size()) {
            // Interpolate f_s at t_end between frames f-1 and f.
            const double t0 = rec.history_times[f - 1], t1 = rec.history_times[f];
            const double u = (t_end - t0) / (t1 - t0);
            ts.push_back(t_end);
            fss.push_back(rec.history_fs[f - 1][c] +
                          u * (rec.history_fs[f][c] - rec.history_fs[f - 1][c]));
        }
        out[c] = grain_growth(ts, fss, kp, mc).radius;
    }
    return out;
}

/// The three scalar objectives of a casting run. All are minimized; the yield
/// objective carries a negative sign so that maximizing the weakest-point
/// strength is a minimization too.
struct Objectives {
    double time_s = 0.0;         // total solidification time
    double grain_um = 0.0;       // largest grain diameter-equivalent radius, um
    double neg_yield_mpa = 0.0;  // minus the minimum yield strength

    std::array<double, 3> as_array() const { return {time_s, grain_um, neg_yield_mpa}; }
};

inline Objectives reduce_objectives(const SolveRecord& rec, const std::vector<double>& grain_m,
                                    const std::vector<double>& yield_mpa) {
    if (grain_m.size() != rec.solidification_time.size() || grain_m.size() != yield_mpa.size())
        throw ValidationError("reduce_objectives: field size mismatch");
    Objectives o;
    o.time_s = rec.total_time;
    o.grain_um = *std::max_element(grain_m.begin(), grain_m.end()) * 1e6;
    o.neg_yield_mpa = -*std::min_element(yield_mpa.begin(), yield_mpa.end());
    return o;
}

/// micro.csv: per-cell arm spacing, yield strength, and grain radius.
inline std::string micro_csv(const ThermalMesh& mesh, const std::vector<double>& sdas_um,
                             const std::vector<double>& yield_mpa,
                             const std::vector<double>& grain_m) {
    CsvWriter w;
    w.header({"i", "j", "k", "sdas_um", "yield_mpa", "grain_um"});
    for (std::size_t c = 0; c < mesh.cells().size(); ++c) {
        const auto& ijk = mesh.cells()[c];
        w.row({std::to_string(ijk[0]), std::to_string(ijk[1]), std::to_string(ijk[2]),
               fmt_double(sdas_um[c]), fmt_double(yield_mpa[c]), fmt_double(grain_m[c] * 1e6)});
    }
    return w.str();
}

}  // namespace castopt
