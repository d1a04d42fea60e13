//! Half-integer angular momentum quantum numbers.
//!
//! Values are stored as twice their physical value so that j = 1/2, 3/2, ...
//! and integer j share one exact representation and quantum numbers never
//! meet floating-point equality tests.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// An exact integer or half-integer quantum number (j, l, m, J, M ...).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HalfInt {
    twice: i32,
}

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt { twice: 0 };
    pub const HALF: HalfInt = HalfInt { twice: 1 };
    pub const ONE: HalfInt = HalfInt { twice: 2 };

    /// Builds from twice the value: `from_twice(3)` is 3/2.
    pub const fn from_twice(twice: i32) -> Self {
        HalfInt { twice }
    }

    pub const fn from_int(v: i32) -> Self {
        HalfInt { twice: 2 * v }
    }

    pub const fn twice(self) -> i32 {
        self.twice
    }

    pub fn value(self) -> f64 {
        f64::from(self.twice) / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }

    /// The integer value, if this is an integer.
    pub fn as_int(self) -> Option<i32> {
        if self.is_integer() {
            Some(self.twice / 2)
        } else {
            None
        }
    }

    pub const fn is_negative(self) -> bool {
        self.twice < 0
    }

    pub fn abs(self) -> Self {
        HalfInt { twice: self.twice.abs() }
    }

    /// True when `m` is a valid projection of this magnitude: |m| <= j and
    /// j + m integer.
    pub fn admits_projection(self, m: HalfInt) -> bool {
        m.twice.abs() <= self.twice && (self.twice + m.twice) % 2 == 0
    }

    /// The projections -j, -j+1, ..., +j in increasing order.
    pub fn projections(self) -> impl DoubleEndedIterator<Item = HalfInt> {
        let j = self.twice;
        (-j..=j).step_by(2).map(HalfInt::from_twice)
    }

    /// Number of projections 2j + 1.
    pub fn multiplicity(self) -> usize {
        (self.twice + 1) as usize
    }

    /// Triangle rule |a - b| <= c <= a + b with integer perimeter.
    pub fn triangle(a: HalfInt, b: HalfInt, c: HalfInt) -> bool {
        c.twice >= (a.twice - b.twice).abs()
            && c.twice <= a.twice + b.twice
            && (a.twice + b.twice + c.twice) % 2 == 0
    }

    /// Parses "2", "1/2", "5/2".
    pub fn parse(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            if den.trim() != "2" {
                return Err(Error::Parse(format!("half-integer denominator must be 2: {s}")));
            }
            let n: i32 = num
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad half-integer: {s}")))?;
            if n % 2 == 0 {
                return Err(Error::Parse(format!("{s} is not in lowest terms")));
            }
            Ok(HalfInt::from_twice(n))
        } else {
            let n: i32 = s
                .parse()
                .map_err(|_| Error::Parse(format!("bad integer quantum number: {s}")))?;
            Ok(HalfInt::from_int(n))
        }
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt { twice: self.twice + rhs.twice }
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt { twice: self.twice - rhs.twice }
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt { twice: -self.twice }
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

// Debug prints like Display; quantum numbers read better as "3/2" than a
// struct dump.
impl fmt::Debug for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
