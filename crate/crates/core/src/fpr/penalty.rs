use serde::{Deserialize, Serialize};

use crate::error::{ensure_param, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PenaltyKind<T> {
    L1,
    /// `(λ/2) β²`.
    L2,
    Scad {
        a: T,
    },
    Mcp {
        a: T,
    },
}

impl<T: Scalar> PenaltyKind<T> {
    /// SCAD with the customary `a = 3.7`.
    pub fn scad() -> Self {
        PenaltyKind::Scad { a: T::c(3.7) }
    }

    /// MCP with `a = 3`.
    pub fn mcp() -> Self {
        PenaltyKind::Mcp { a: T::c(3.0) }
    }
}

/// Penalty kind, strength `λ`, and whether the intercept is penalized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Penalty<T> {
    pub kind: PenaltyKind<T>,
    pub lambda: T,
    pub penalize_intercept: bool,
}

impl<T: Scalar> Penalty<T> {
    pub fn new(kind: PenaltyKind<T>, lambda: T) -> Self {
        Self {
            kind,
            lambda,
            penalize_intercept: false,
        }
    }

    pub fn l1(lambda: T) -> Self {
        Self::new(PenaltyKind::L1, lambda)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_param!(self.lambda >= T::zero(), "lambda must be >= 0, got {}", self.lambda);
        match self.kind {
            PenaltyKind::Scad { a } => ensure_param!(a > T::c(2.0), "SCAD requires a > 2, got {a}"),
            PenaltyKind::Mcp { a } => ensure_param!(a > T::one(), "MCP requires a > 1, got {a}"),
            _ => {}
        }
        Ok(())
    }

    /// Whether coordinate `index` carries the penalty (coordinate 0 is the intercept).
    #[inline]
    pub fn applies_to(&self, index: usize) -> bool {
        index != 0 || self.penalize_intercept
    }

    /// Penalty of one coefficient.
    pub fn value_at(&self, b: T) -> T {
        let lam = self.lambda;
        let ab = b.abs();
        let half = T::c(0.5);
        match self.kind {
            PenaltyKind::L1 => lam * ab,
            PenaltyKind::L2 => half * lam * b * b,
            PenaltyKind::Scad { a } => {
                if ab <= lam {
                    lam * ab
                } else if ab <= a * lam {
                    (T::c(2.0) * a * lam * ab - b * b - lam * lam) / (T::c(2.0) * (a - T::one()))
                } else {
                    half * lam * lam * (a + T::one())
                }
            }
            PenaltyKind::Mcp { a } => {
                if ab <= a * lam {
                    lam * ab - b * b / (T::c(2.0) * a)
                } else {
                    half * a * lam * lam
                }
            }
        }
    }

    /// Total penalty of a coefficient vector.
    pub fn value(&self, beta: &[T]) -> T {
        beta.iter()
            .enumerate()
            .filter(|(c, _)| self.applies_to(*c))
            .map(|(_, &b)| self.value_at(b))
            .sum()
    }

    /// Thresholding operator at effective strength `λ · step`; assumes
    /// [`Penalty::validate`] passed.
    #[inline]
    pub(crate) fn threshold(&self, v: T, step: T) -> T {
        let lam = self.lambda * step;
        let av = v.abs();
        let soft = || v.signum() * (av - lam).max(T::zero());
        match self.kind {
            PenaltyKind::L1 => soft(),
            PenaltyKind::L2 => v / (T::one() + lam),
            PenaltyKind::Scad { a } => {
                if av <= T::c(2.0) * lam {
                    soft()
                } else if av <= a * lam {
                    ((a - T::one()) * v - v.signum() * a * lam) / (a - T::c(2.0))
                } else {
                    v
                }
            }
            PenaltyKind::Mcp { a } => {
                if av <= a * lam {
                    soft() / (T::one() - T::one() / a)
                } else {
                    v
                }
            }
        }
    }
}

/// Scalar proximal operator of `pen` with step size `step`.
pub fn prox<T: Scalar>(pen: &Penalty<T>, v: T, step: T) -> Result<T> {
    pen.validate()?;
    ensure_param!(step > T::zero(), "step must be > 0, got {step}");
    Ok(pen.threshold(v, step))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(prox(&Penalty::l1(1.0), 0.5, 1.0).unwrap(), 0.0);
        let scad = Penalty::new(PenaltyKind::Scad { a: 3.7 }, 1.0);
        assert_eq!(prox(&scad, 5.0, 1.0).unwrap(), 5.0);
        let mcp = Penalty::new(PenaltyKind::Mcp { a: 2.0_f64 }, 1.0);
        assert!((prox(&mcp, 1.5, 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_shapes_rejected() {
        assert!(prox(&Penalty::new(PenaltyKind::Scad { a: 2.0 }, 1.0), 1.0, 1.0).is_err());
        assert!(prox(&Penalty::new(PenaltyKind::Mcp { a: 1.0 }, 1.0), 1.0, 1.0).is_err());
        assert!(prox(&Penalty::l1(-1.0), 1.0, 1.0).is_err());
    }

    #[test]
    fn penalty_values_continuous_at_knots() {
        let lam = 0.8_f64;
        for kind in [PenaltyKind::scad(), PenaltyKind::mcp()] {
            let p = Penalty::new(kind, lam);
            let a = match kind {
                PenaltyKind::Scad { a } | PenaltyKind::Mcp { a } => a,
                _ => unreachable!(),
            };
            for knot in [lam, a * lam] {
                let lo = p.value_at(knot - 1e-9);
                let hi = p.value_at(knot + 1e-9);
                assert!((lo - hi).abs() < 1e-8, "{kind:?} at {knot}");
            }
        }
    }

    #[test]
    fn l1_threshold_is_exact_prox() {
        // brute-force argmin of (x − v)²/2 + step·λ|x| on a fine grid
        let pen = Penalty::l1(0.7);
        for v in [-2.0, -0.5, 0.1, 0.69, 1.3] {
            let step = 1.0;
            let got = prox(&pen, v, step).unwrap();
            let best = (-40_000..=40_000)
                .map(|i| i as f64 * 1e-4)
                .min_by(|&x, &y| {
                    let f = |x: f64| 0.5 * (x - v) * (x - v) + step * pen.value_at(x);
                    f(x).total_cmp(&f(y))
                })
                .unwrap();
            assert!((got - best).abs() < 2e-4, "v={v}: {got} vs {best}");
        }
    }
}
