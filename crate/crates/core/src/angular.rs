//! Angular momentum coupling coefficients for half-integer arguments.
//!
//! Clebsch-Gordan, 3j, 6j and 9j coefficients are evaluated from the Racah
//! factorial sums using exact big-integer rational arithmetic internally and
//! converted to `f64` once at the end; the alternating sums cancel
//! catastrophically in floating point for moderate j. The Condon-Shortley
//! phase convention is used throughout.
//!
//! All entry points are pure; small per-thread memo caches make repeated
//! operator builds cheap without any cross-thread locking.

use std::cell::RefCell;
use std::collections::HashMap;

use nalgebra::DMatrix;
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;
use crate::halfint::HalfInt;

/// Factorial as a big integer, memoized per thread.
fn factorial(n: i32) -> BigInt {
    thread_local! {
        static TABLE: RefCell<Vec<BigInt>> = RefCell::new(vec![BigInt::one()]);
    }
    assert!(n >= 0, "factorial of negative argument");
    TABLE.with(|t| {
        let mut t = t.borrow_mut();
        while t.len() <= n as usize {
            let next = t.last().unwrap() * BigInt::from(t.len());
            t.push(next);
        }
        t[n as usize].clone()
    })
}

/// Triangle coefficient Delta(abc) as an exact rational, or None when the
/// triad violates the triangle or integrality conditions. Arguments are
/// twice-values.
fn triangle_coeff(ta: i32, tb: i32, tc: i32) -> Option<BigRational> {
    let s1 = ta + tb - tc;
    let s2 = ta - tb + tc;
    let s3 = -ta + tb + tc;
    if s1 < 0 || s2 < 0 || s3 < 0 || s1 % 2 != 0 {
        return None;
    }
    let denom = (ta + tb + tc) / 2 + 1;
    Some(BigRational::new(
        factorial(s1 / 2) * factorial(s2 / 2) * factorial(s3 / 2),
        factorial(denom),
    ))
}

fn phase(k: i32) -> i32 {
    if k % 2 == 0 {
        1
    } else {
        -1
    }
}

/// sign * sqrt(|q|) as f64 where the sign is carried by q.
fn signed_sqrt(q: &BigRational) -> f64 {
    let v = q.abs().to_f64().unwrap_or(0.0).sqrt();
    if q.is_negative() {
        -v
    } else {
        v
    }
}

fn check_magnitude(name: &str, j: HalfInt) -> Result<(), Error> {
    if j.is_negative() {
        return Err(Error::InvalidQuantumNumbers(format!("{name} = {j} is negative")));
    }
    Ok(())
}

/// Wigner 3j symbol (j1 j2 j3; m1 m2 m3).
///
/// Zero when the projection or triangle selection rules fail; an error only
/// for malformed inputs (negative magnitude, j + m not an integer).
pub fn wigner_3j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    m1: HalfInt,
    m2: HalfInt,
    m3: HalfInt,
) -> Result<f64, Error> {
    for (name, j, m) in [("j1", j1, m1), ("j2", j2, m2), ("j3", j3, m3)] {
        check_magnitude(name, j)?;
        if (j.twice() + m.twice()) % 2 != 0 {
            return Err(Error::InvalidQuantumNumbers(format!(
                "{name} = {j} with projection {m}: j + m must be an integer"
            )));
        }
    }
    if m1.abs() > j1.abs() || m2.abs() > j2.abs() || m3.abs() > j3.abs() {
        return Ok(0.0);
    }
    if m1.twice() + m2.twice() + m3.twice() != 0 || !HalfInt::triangle(j1, j2, j3) {
        return Ok(0.0);
    }
    Ok(three_j_exact(
        j1.twice(),
        j2.twice(),
        j3.twice(),
        m1.twice(),
        m2.twice(),
        m3.twice(),
    ))
}

/// Racah's single-sum form of the 3j symbol; all selection rules already
/// checked. Twice-value arguments.
fn three_j_exact(tj1: i32, tj2: i32, tj3: i32, tm1: i32, tm2: i32, tm3: i32) -> f64 {
    let delta = match triangle_coeff(tj1, tj2, tj3) {
        Some(d) => d,
        None => return 0.0,
    };
    // All of these are integers by the selection rules.
    let a1 = (tj1 + tm1) / 2;
    let a2 = (tj1 - tm1) / 2;
    let a3 = (tj2 + tm2) / 2;
    let a4 = (tj2 - tm2) / 2;
    let a5 = (tj3 + tm3) / 2;
    let a6 = (tj3 - tm3) / 2;
    let pref = delta
        * BigRational::from_integer(
            factorial(a1) * factorial(a2) * factorial(a3) * factorial(a4) * factorial(a5)
                * factorial(a6),
        );

    let t1 = (tj1 + tj2 - tj3) / 2; // j1 + j2 - j3
    let t2 = (tj1 - tm1) / 2; // j1 - m1
    let t3 = (tj2 + tm2) / 2; // j2 + m2
    let t4 = (tj3 - tj2 + tm1) / 2; // j3 - j2 + m1
    let t5 = (tj3 - tj1 - tm2) / 2; // j3 - j1 - m2
    let k_min = 0.max(-t4).max(-t5);
    let k_max = t1.min(t2).min(t3);
    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let den = factorial(k)
            * factorial(t1 - k)
            * factorial(t2 - k)
            * factorial(t3 - k)
            * factorial(t4 + k)
            * factorial(t5 + k);
        let term = BigRational::new(BigInt::from(phase(k)), den);
        sum += term;
    }
    if sum.is_zero() {
        return 0.0;
    }
    let sign = phase((tj1 - tj2 - tm3) / 2);
    f64::from(sign) * signed_sqrt(&pref) * sum.to_f64().unwrap()
}

/// Clebsch-Gordan coefficient C^{JM}_{j1 m1 j2 m2} in the Condon-Shortley
/// convention.
///
/// Zero when M != m1 + m2 or the triangle rule fails; malformed quantum
/// numbers (j + m not an integer, negative magnitudes) are an error.
pub fn clebsch_gordan(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    j: HalfInt,
    m: HalfInt,
) -> Result<f64, Error> {
    thread_local! {
        static CACHE: RefCell<HashMap<[i32; 6], f64>> = RefCell::new(HashMap::new());
    }
    let key = [j1.twice(), m1.twice(), j2.twice(), m2.twice(), j.twice(), m.twice()];
    if let Some(v) = CACHE.with(|c| c.borrow().get(&key).copied()) {
        return Ok(v);
    }
    let w = wigner_3j(j1, j2, j, m1, m2, -m)?;
    let v = phase((j1.twice() - j2.twice() + m.twice()) / 2)
        as f64
        * ((j.twice() + 1) as f64).sqrt()
        * w;
    CACHE.with(|c| c.borrow_mut().insert(key, v));
    Ok(v)
}

/// Wigner 6j symbol {j1 j2 j3; j4 j5 j6}.
///
/// Zero when any of the four triads violates the triangle or integrality
/// conditions.
pub fn wigner_6j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    j4: HalfInt,
    j5: HalfInt,
    j6: HalfInt,
) -> Result<f64, Error> {
    for (name, j) in [("j1", j1), ("j2", j2), ("j3", j3), ("j4", j4), ("j5", j5), ("j6", j6)] {
        check_magnitude(name, j)?;
    }
    thread_local! {
        static CACHE: RefCell<HashMap<[i32; 6], f64>> = RefCell::new(HashMap::new());
    }
    let key = [j1.twice(), j2.twice(), j3.twice(), j4.twice(), j5.twice(), j6.twice()];
    if let Some(v) = CACHE.with(|c| c.borrow().get(&key).copied()) {
        return Ok(v);
    }
    let v = six_j_exact(key);
    CACHE.with(|c| c.borrow_mut().insert(key, v));
    Ok(v)
}

fn six_j_exact(t: [i32; 6]) -> f64 {
    let [a, b, c, d, e, f] = t;
    let deltas = [
        triangle_coeff(a, b, c),
        triangle_coeff(a, e, f),
        triangle_coeff(d, b, f),
        triangle_coeff(d, e, c),
    ];
    let mut pref = BigRational::one();
    for dl in deltas {
        match dl {
            Some(x) => pref *= x,
            None => return 0.0,
        }
    }
    // Racah sum over z (twice-values are even by the triangle checks above).
    let t1 = (a + b + c) / 2;
    let t2 = (a + e + f) / 2;
    let t3 = (d + b + f) / 2;
    let t4 = (d + e + c) / 2;
    let q1 = (a + b + d + e) / 2;
    let q2 = (b + c + e + f) / 2;
    let q3 = (a + c + d + f) / 2;
    let z_min = t1.max(t2).max(t3).max(t4);
    let z_max = q1.min(q2).min(q3);
    let mut sum = BigRational::zero();
    for z in z_min..=z_max {
        let den = factorial(z - t1)
            * factorial(z - t2)
            * factorial(z - t3)
            * factorial(z - t4)
            * factorial(q1 - z)
            * factorial(q2 - z)
            * factorial(q3 - z);
        sum += BigRational::new(BigInt::from(phase(z)) * factorial(z + 1), den);
    }
    if sum.is_zero() {
        return 0.0;
    }
    signed_sqrt(&pref) * sum.to_f64().unwrap()
}

/// Wigner 9j symbol, evaluated as the standard single-sum contraction of
/// three 6j symbols.
#[allow(clippy::too_many_arguments)]
pub fn wigner_9j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    j4: HalfInt,
    j5: HalfInt,
    j6: HalfInt,
    j7: HalfInt,
    j8: HalfInt,
    j9: HalfInt,
) -> Result<f64, Error> {
    let rows = [(j1, j2, j3), (j4, j5, j6), (j7, j8, j9)];
    let cols = [(j1, j4, j7), (j2, j5, j8), (j3, j6, j9)];
    for (a, b, c) in rows.iter().chain(cols.iter()) {
        check_magnitude("j", *a)?;
        if !HalfInt::triangle(*a, *b, *c) {
            return Ok(0.0);
        }
    }
    let x_min = (j1 - j9).abs().twice().max((j2 - j6).abs().twice()).max((j4 - j8).abs().twice());
    let x_max = (j1 + j9).twice().min((j2 + j6).twice()).min((j4 + j8).twice());
    let mut sum = 0.0;
    let mut tx = x_min;
    while tx <= x_max {
        let x = HalfInt::from_twice(tx);
        let w1 = wigner_6j(j1, j4, j7, j8, j9, x)?;
        let w2 = wigner_6j(j2, j5, j8, j4, x, j6)?;
        let w3 = wigner_6j(j3, j6, j9, x, j1, j2)?;
        sum += f64::from(phase(tx)) * f64::from(tx + 1) * w1 * w2 * w3;
        tx += 2;
    }
    Ok(sum)
}

/// f64 factorial for the rotation matrix sums (arguments stay small).
fn fact_f64(n: i32) -> f64 {
    debug_assert!((0..=170).contains(&n));
    let mut v = 1.0;
    for k in 2..=n {
        v *= f64::from(k);
    }
    v
}

/// Wigner rotation matrix element d^j_{m_row m_col}(theta) for a rotation by
/// `theta` about the y axis: d^j_{m'm} = <j m'|exp(-i theta J_y)|j m>.
pub fn wigner_small_d(
    j: HalfInt,
    m_row: HalfInt,
    m_col: HalfInt,
    theta: f64,
) -> Result<f64, Error> {
    check_magnitude("j", j)?;
    if !theta.is_finite() {
        return Err(Error::InvalidInput("rotation angle must be finite".into()));
    }
    for m in [m_row, m_col] {
        if (j.twice() + m.twice()) % 2 != 0 {
            return Err(Error::InvalidQuantumNumbers(format!(
                "projection {m} incompatible with j = {j}"
            )));
        }
        if m.abs() > j {
            return Err(Error::InvalidQuantumNumbers(format!("|{m}| exceeds j = {j}")));
        }
    }
    let tj = j.twice();
    let tmp = m_row.twice();
    let tm = m_col.twice();
    let jpmp = (tj + tmp) / 2;
    let jmmp = (tj - tmp) / 2;
    let jpm = (tj + tm) / 2;
    let jmm = (tj - tm) / 2;
    let pref = (fact_f64(jpmp) * fact_f64(jmmp) * fact_f64(jpm) * fact_f64(jmm)).sqrt();
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let k_min = 0.max((tm - tmp) / 2);
    let k_max = jpm.min(jmmp);
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let den = fact_f64(jpm - k) * fact_f64(k) * fact_f64((tmp - tm) / 2 + k) * fact_f64(jmmp - k);
        let cos_pow = (tj + tm - tmp) / 2 - 2 * k; // 2j - 2k + m - m'
        let sin_pow = (tmp - tm) / 2 + 2 * k;
        sum += f64::from(phase((tmp - tm) / 2 + k)) * c.powi(cos_pow) * s.powi(sin_pow) / den;
    }
    Ok(pref * sum)
}

/// Full rotation matrix at fixed j: element (r, c) is d^j_{m_r m_c}(theta)
/// with projections ordered m = +j, j-1, ..., -j, matching the Zeeman basis
/// ordering used by the channel operators.
pub fn small_d_matrix(j: HalfInt, theta: f64) -> DMatrix<f64> {
    let dim = j.multiplicity();
    DMatrix::from_fn(dim, dim, |r, c| {
        let mr = HalfInt::from_twice(j.twice() - 2 * r as i32);
        let mc = HalfInt::from_twice(j.twice() - 2 * c as i32);
        wigner_small_d(j, mr, mc, theta).expect("valid projections by construction")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn h(t: i32) -> HalfInt {
        HalfInt::from_twice(t)
    }

    #[test]
    fn cg_hand_values() {
        // C^{20}_{10 10} = sqrt(2/3), singlet of two spins = +1/sqrt(2),
        // projection rule zero.
        let v = clebsch_gordan(h(2), h(0), h(2), h(0), h(4), h(0)).unwrap();
        assert_abs_diff_eq!(v, (2.0f64 / 3.0).sqrt(), epsilon = 1e-14);
        let v = clebsch_gordan(h(1), h(1), h(1), h(-1), h(0), h(0)).unwrap();
        assert_abs_diff_eq!(v, 0.5f64.sqrt(), epsilon = 1e-14);
        let v = clebsch_gordan(h(2), h(2), h(2), h(2), h(4), h(0)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn cg_malformed_inputs() {
        assert!(clebsch_gordan(h(2), h(1), h(2), h(0), h(4), h(1)).is_err());
        assert!(clebsch_gordan(h(-2), h(0), h(2), h(0), h(4), h(0)).is_err());
    }

    #[test]
    fn six_j_hand_values() {
        let v = wigner_6j(h(1), h(1), h(2), h(1), h(1), h(2)).unwrap();
        assert_abs_diff_eq!(v, 1.0 / 6.0, epsilon = 1e-14);
        // {0 b b; c d d} = (-1)^(b+c+d)/sqrt((2b+1)(2d+1)) at b = c = d = 1.
        let v = wigner_6j(h(0), h(2), h(2), h(2), h(2), h(2)).unwrap();
        assert_abs_diff_eq!(v, -1.0 / 3.0, epsilon = 1e-14);
        // Triangle violation.
        let v = wigner_6j(h(6), h(2), h(2), h(2), h(2), h(2)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn nine_j_reduction_to_six_j() {
        // One zero argument reduces to a 6j with a known prefactor:
        // {a b c; d e f; g h 0} = delta_{cf} delta_{gh} (-1)^{b+c+d+g}
        //   / sqrt((2c+1)(2g+1)) * {a b c; e d g}.
        let (a, b, c, d, e, g) = (h(2), h(2), h(4), h(2), h(2), h(2));
        let lhs = wigner_9j(a, b, c, d, e, c, g, g, h(0)).unwrap();
        let rhs = f64::from(phase((b.twice() + c.twice() + d.twice() + g.twice()) / 2))
            / (f64::from(c.twice() + 1) * f64::from(g.twice() + 1)).sqrt()
            * wigner_6j(a, b, c, e, d, g).unwrap();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-13);
    }

    #[test]
    fn nine_j_triangle_violation() {
        let v = wigner_9j(h(2), h(2), h(8), h(2), h(2), h(4), h(4), h(4), h(0)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn small_d_identity_and_half() {
        let j = h(5);
        let m = small_d_matrix(j, 0.0);
        assert!(m.is_identity(1e-14));
        let v = wigner_small_d(h(1), h(1), h(1), 0.7).unwrap();
        assert_abs_diff_eq!(v, (0.35f64).cos(), epsilon = 1e-14);
        let v = wigner_small_d(h(1), h(1), h(-1), 0.7).unwrap();
        assert_abs_diff_eq!(v, -(0.35f64).sin(), epsilon = 1e-14);
    }

    #[test]
    fn small_d_row_orthonormality() {
        let j = h(5); // j = 5/2
        let theta = 1.234;
        let d = small_d_matrix(j, theta);
        for r in 0..d.nrows() {
            let s: f64 = (0..d.ncols()).map(|c| d[(r, c)] * d[(r, c)]).sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn small_d_composition() {
        let j = h(3);
        let (t1, t2) = (0.37, 1.91);
        let prod = small_d_matrix(j, t1) * small_d_matrix(j, t2);
        let direct = small_d_matrix(j, t1 + t2);
        assert!((prod - direct).amax() < 1e-12);
    }
}
