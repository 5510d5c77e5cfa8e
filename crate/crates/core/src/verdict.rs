//! Tri-state outcome of a numerical property check.

use std::fmt;

/// `Holds` when the residual is within `tol`, `Fails` when it exceeds `10·tol`,
/// `Inconclusive` in between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

/// Width of the band between "holds" and "fails", as a multiple of the tolerance.
pub const INCONCLUSIVE_BAND: f64 = 10.0;

impl Verdict {
    pub fn from_residual(residual: f64, tol: f64) -> Self {
        if !residual.is_finite() {
            Verdict::Fails
        } else if residual <= tol {
            Verdict::Holds
        } else if residual > INCONCLUSIVE_BAND * tol {
            Verdict::Fails
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn holds(self) -> bool {
        self == Verdict::Holds
    }

    pub fn fails(self) -> bool {
        self == Verdict::Fails
    }

    /// Both verdicts hold, or either fails.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fails, _) | (_, Verdict::Fails) => Verdict::Fails,
            (Verdict::Holds, Verdict::Holds) => Verdict::Holds,
            _ => Verdict::Inconclusive,
        }
    }

    /// `Some(bool)` for decided verdicts.
    pub fn decided(self) -> Option<bool> {
        match self {
            Verdict::Holds => Some(true),
            Verdict::Fails => Some(false),
            Verdict::Inconclusive => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bands() {
        assert_eq!(Verdict::from_residual(1e-9, 1e-8), Verdict::Holds);
        assert_eq!(Verdict::from_residual(5e-8, 1e-8), Verdict::Inconclusive);
        assert_eq!(Verdict::from_residual(1e-6, 1e-8), Verdict::Fails);
        assert_eq!(Verdict::from_residual(f64::NAN, 1.0), Verdict::Fails);
        assert_eq!(Verdict::Holds.and(Verdict::Inconclusive), Verdict::Inconclusive);
        assert_eq!(Verdict::Inconclusive.and(Verdict::Fails), Verdict::Fails);
    }
}
