//! Exact extended weights.
//!
//! Every cost in the solver is a nonnegative exact number of some scalar type
//! `S`, or the `Infinite` sentinel. Addition saturates at infinity and no
//! operation ever rounds, so equality against the oracles is meaningful.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::Add;

use num_traits::Zero;

/// Scalar types usable as edge weights.
///
/// Anything totally ordered with an exact additive zero qualifies: the
/// machine integers and `num_rational::Ratio` over them. Floats are excluded
/// on purpose since they are not `Ord`.
pub trait Scalar:
    Copy + Ord + Zero + Add<Output = Self> + fmt::Debug + fmt::Display + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Copy + Ord + Zero + Add<Output = T> + fmt::Debug + fmt::Display + Send + Sync + 'static
{
}

/// A nonnegative weight or `+∞`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub enum Weight<S> {
    Finite(S),
    Infinite,
}

impl<S: Scalar> Weight<S> {
    pub fn zero() -> Self {
        Weight::Finite(S::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Weight::Finite(_))
    }

    pub fn is_infinite(&self) -> bool {
        !self.is_finite()
    }

    pub fn finite(self) -> Option<S> {
        match self {
            Weight::Finite(s) => Some(s),
            Weight::Infinite => None,
        }
    }

    /// `true` when the finite value is strictly below zero.
    pub fn is_negative(&self) -> bool {
        match self {
            Weight::Finite(s) => *s < S::zero(),
            Weight::Infinite => false,
        }
    }
}

impl<S: Scalar> From<S> for Weight<S> {
    fn from(s: S) -> Self {
        Weight::Finite(s)
    }
}

impl<S: Scalar> Add for Weight<S> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (Weight::Finite(a), Weight::Finite(b)) => Weight::Finite(a + b),
            _ => Weight::Infinite,
        }
    }
}

impl<S: Scalar> Sum for Weight<S> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Weight::zero(), |acc, w| acc + w)
    }
}

impl<S: Scalar> PartialOrd for Weight<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: Scalar> Ord for Weight<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Weight::Finite(a), Weight::Finite(b)) => a.cmp(b),
            (Weight::Finite(_), Weight::Infinite) => Ordering::Less,
            (Weight::Infinite, Weight::Finite(_)) => Ordering::Greater,
            (Weight::Infinite, Weight::Infinite) => Ordering::Equal,
        }
    }
}

impl<S: fmt::Debug> fmt::Debug for Weight<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Finite(s) => write!(f, "{s:?}"),
            Weight::Infinite => f.write_str("inf"),
        }
    }
}

impl<S: fmt::Display> fmt::Display for Weight<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Finite(s) => write!(f, "{s}"),
            Weight::Infinite => f.write_str("inf"),
        }
    }
}
