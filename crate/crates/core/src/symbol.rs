use std::fmt;
use std::ops::{Mul, Neg};

/// Message alphabet of the ternary decoder: `-1`, erasure `0`, `+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(i8)]
pub enum TernarySymbol {
    Minus = -1,
    Erasure = 0,
    Plus = 1,
}

impl TernarySymbol {
    pub const ALL: [TernarySymbol; 3] = [Self::Minus, Self::Erasure, Self::Plus];

    #[inline]
    pub fn value(self) -> i8 {
        self as i8
    }

    /// Maps any integer to its sign symbol.
    #[inline]
    pub fn from_sign(x: i64) -> Self {
        match x.signum() {
            -1 => Self::Minus,
            0 => Self::Erasure,
            _ => Self::Plus,
        }
    }

    #[inline]
    pub fn is_erasure(self) -> bool {
        self == Self::Erasure
    }
}

impl From<TernarySymbol> for i8 {
    fn from(s: TernarySymbol) -> i8 {
        s as i8
    }
}

impl TryFrom<i8> for TernarySymbol {
    type Error = i8;

    fn try_from(v: i8) -> Result<Self, i8> {
        match v {
            -1 => Ok(Self::Minus),
            0 => Ok(Self::Erasure),
            1 => Ok(Self::Plus),
            other => Err(other),
        }
    }
}

impl Mul for TernarySymbol {
    type Output = TernarySymbol;

    #[inline]
    fn mul(self, rhs: Self) -> Self {
        // the product of two values in {-1,0,1} stays in {-1,0,1}
        match (self as i8) * (rhs as i8) {
            -1 => Self::Minus,
            0 => Self::Erasure,
            _ => Self::Plus,
        }
    }
}

impl Neg for TernarySymbol {
    type Output = TernarySymbol;

    fn neg(self) -> Self {
        match self {
            Self::Minus => Self::Plus,
            Self::Erasure => Self::Erasure,
            Self::Plus => Self::Minus,
        }
    }
}

impl std::iter::Product for TernarySymbol {
    fn product<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(TernarySymbol::Plus, |acc, s| acc * s)
    }
}

impl fmt::Display for TernarySymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Minus => write!(f, "-1"),
            Self::Erasure => write!(f, "0"),
            Self::Plus => write!(f, "+1"),
        }
    }
}
