//! Physical constants (CODATA 2018) and the unit conversions used throughout.
//!
//! Internal unit policy: energies are frequencies E/h in GHz, lengths are
//! Bohr radii at the atomic-structure level and micrometers at the
//! interaction level.

/// Planck constant, J s (exact).
pub const PLANCK_H: f64 = 6.626_070_15e-34;

/// Elementary charge, C (exact).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// Bohr radius, m.
pub const BOHR_RADIUS_M: f64 = 5.291_772_109_03e-11;

/// Infinite-mass Rydberg constant as a frequency, GHz (R_inf * c).
pub const RYDBERG_INF_GHZ: f64 = 3.289_841_960_250_8e6;

/// e^2 / (4 pi eps0 h), in Hz m.
const E2_OVER_H_HZ_M: f64 = ELEMENTARY_CHARGE * ELEMENTARY_CHARGE
    / (4.0 * std::f64::consts::PI * VACUUM_PERMITTIVITY * PLANCK_H);

/// e^2 / (4 pi eps0 h) in GHz um: sets the quadrupole-dominance length scale.
pub const E2_OVER_H_GHZ_UM: f64 = E2_OVER_H_HZ_M * 1e6 * 1e-9;

/// e^2 a0^2 / (4 pi eps0 h) in GHz um^3.
///
/// Multiplying a product of two radial integrals in a0^2 by this constant
/// gives the resonant dipole-dipole coefficient C3 in GHz um^3.
pub const C3_GHZ_UM3_PER_A0SQ: f64 =
    E2_OVER_H_HZ_M * BOHR_RADIUS_M * BOHR_RADIUS_M * 1e18 * 1e-9;

/// Micrometers per Bohr radius.
pub const UM_PER_A0: f64 = BOHR_RADIUS_M * 1e6;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c3_conversion_magnitude() {
        // e^2 a0^2/(4 pi eps0 h) = 975.0 Hz um^3 to 4 digits.
        assert!((C3_GHZ_UM3_PER_A0SQ * 1e9 - 975.01).abs() < 0.05);
    }

    #[test]
    fn quadrupole_length_scale() {
        // e^2/(4 pi eps0 h) / (1 GHz) ~ 350 um.
        assert!((E2_OVER_H_GHZ_UM - 348.2).abs() < 0.2);
    }
}
