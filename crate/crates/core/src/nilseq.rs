//! Nilsequences `ψ(n) = F(gⁿx)` on tori and the Heisenberg nilmanifold,
//! the closed form of the rotation example, and mollified approximants.
//!
//! The example: on `𝕋` with rotation `R(x) = x + 1/√2`, `f₀ = e(x)`,
//! `f₁ = e(−x)` and `q(n) = √2 n`, the multicorrelation is
//! `α(n) = e({√2 n}/√2) = F({√2 n})` for the discontinuous `F(x) = e({x}/√2)`.
//! Smoothing `F` over `w`-neighbourhoods of its jump gives the continuous
//! `F_w` and the 1-step nilsequence `ψ_w(n) = F_w({√2 n})`, which differs
//! from `α` only when `{√2 n} ∈ [0, w) ∪ (1−w, 1)`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use num_rational::Ratio;

use crate::correlate::{CorrelationSpec, Iterate, Sequence};
use crate::error::{Error, Result};
use crate::fixed::Fixed;
use crate::observables::{Obs, Observable, SampledObservable, TrigObservable};
use crate::poly::{Coefficient, Surd, VectorPolynomial};
use crate::scalar::{e, e_fixed, Real, Scalar};
use crate::systems::{
    HeisenbergAction, HeisenbergElement, LatticeAction, NilPoint, TorusAction, TorusPoint,
};

/// The orbit `gⁿx` a nilsequence reads.
#[derive(Clone)]
pub enum Orbit<T> {
    /// `x + n·g` on `𝕋^D`.
    Torus {
        g: TorusAction,
        x: TorusPoint<T>,
        f: Obs<TorusPoint<T>, T>,
    },
    /// `nil_reduce(gⁿ · x)` on `G/Γ`.
    Heisenberg {
        g: HeisenbergAction<T>,
        x: NilPoint<T>,
        f: Obs<NilPoint<T>, T>,
    },
}

/// `ψ(n) = F(gⁿx)` with a declared nilpotency step.
#[derive(Clone)]
pub struct Nilsequence<T> {
    orbit: Orbit<T>,
    step: u32,
}

impl<T> fmt::Debug for Nilsequence<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let space = match self.orbit {
            Orbit::Torus { .. } => "torus",
            Orbit::Heisenberg { .. } => "heisenberg",
        };
        f.debug_struct("Nilsequence")
            .field("space", &space)
            .field("step", &self.step)
            .finish_non_exhaustive()
    }
}

impl<T: Real + Scalar> Nilsequence<T> {
    pub fn new(orbit: Orbit<T>, step: u32) -> Result<Self> {
        if step == 0 {
            return Err(Error::invalid("nilsequence step must be ≥ 1"));
        }
        if let Orbit::Torus { g, x, .. } = &orbit {
            if g.angles().len() != 1 {
                return Err(Error::invalid("a torus nilsequence needs a single rotation"));
            }
            if g.dim() != x.dim() {
                return Err(Error::DimensionMismatch {
                    expected: g.dim(),
                    found: x.dim(),
                });
            }
        }
        if let Orbit::Heisenberg { g, .. } = &orbit {
            if g.generators().len() != 1 {
                return Err(Error::invalid("a Heisenberg nilsequence needs a single element g"));
            }
        }
        Ok(Nilsequence { orbit, step })
    }

    /// `F(x + n·g)` on a torus, step 1.
    pub fn torus(g: TorusAction, x: TorusPoint<T>, f: Obs<TorusPoint<T>, T>) -> Result<Self> {
        Self::new(Orbit::Torus { g, x, f }, 1)
    }

    /// `F(gⁿx)` on the Heisenberg nilmanifold, step 2.
    pub fn heisenberg(g: HeisenbergElement<T>, x: NilPoint<T>, f: Obs<NilPoint<T>, T>) -> Result<Self> {
        Self::new(
            Orbit::Heisenberg {
                g: HeisenbergAction::translation(g)?,
                x,
                f,
            },
            2,
        )
    }

    pub fn orbit(&self) -> &Orbit<T> {
        &self.orbit
    }

    pub fn step(&self) -> u32 {
        self.step
    }

    /// `sup |F|`, a bound for every value.
    pub fn sup_bound(&self) -> T {
        match &self.orbit {
            Orbit::Torus { f, .. } => f.sup_bound(),
            Orbit::Heisenberg { f, .. } => f.sup_bound(),
        }
    }

    pub fn eval(&self, n: i128) -> Result<Complex<T>> {
        match &self.orbit {
            Orbit::Torus { g, x, f } => f.eval(&g.apply(&[n], x)?),
            Orbit::Heisenberg { g, x, f } => f.eval(&g.apply(&[n], x)?),
        }
    }
}

impl<T: Real + Scalar> Sequence<T> for Nilsequence<T> {
    fn at(&self, n: i128) -> Result<Complex<T>> {
        self.eval(n)
    }
}

fn sqrt2() -> Fixed {
    Coefficient::sqrt(2).fixed()
}

fn half_sqrt2() -> Fixed {
    Coefficient::scaled_surd(Ratio::new(1, 2), Surd::Sqrt(2))
        .expect("nonzero scale")
        .fixed()
}

/// `α(n) = e({√2 n}/√2)`, with `{√2 n}` and the division by `√2` carried in
/// 128-bit fixed point.
pub fn example_alpha<T: Real>(n: i128) -> Result<Complex<T>> {
    let frac = sqrt2().mul_int(n)?.fract();
    Ok(e_fixed(frac.mul(half_sqrt2())?.frac_bits()))
}

/// The correlation spec whose multicorrelation is [`example_alpha`].
pub fn example_spec<T: Real>() -> Result<CorrelationSpec<TorusAction, T>> {
    let chr = |k: i64| -> Result<Obs<TorusPoint<T>, T>> {
        Ok(Arc::new(TrigObservable::character(vec![k], Complex::new(T::one(), T::zero()))?))
    };
    let action = TorusAction::rotation(Coefficient::scaled_surd(Ratio::new(1, 2), Surd::Sqrt(2))?);
    let q = VectorPolynomial::scalar(vec![Coefficient::zero(), Coefficient::sqrt(2)])?;
    CorrelationSpec::new(action, chr(1)?, vec![Iterate::floor(chr(-1)?, q)], Default::default())
}

/// `F(x) = e({x}/√2)` on `𝕋`, discontinuous at 0 only.
pub fn example_observable<T: Real>() -> Result<Obs<TorusPoint<T>, T>> {
    let scale = T::FRAC_1_SQRT_2();
    Ok(Arc::new(SampledObservable::new(T::one(), move |x: &TorusPoint<T>| {
        e(x.coords()[0] * scale)
    })?))
}

/// A circle function made continuous by linear interpolation across
/// `(d − w, d + w)` for each declared discontinuity `d`.
pub struct MollifiedObservable<T> {
    base: Obs<TorusPoint<T>, T>,
    width: T,
    /// `(d, F(d − w), F(d + w))`, ascending in `d`.
    jumps: Vec<(T, Complex<T>, Complex<T>)>,
}

impl<T: Real> fmt::Debug for MollifiedObservable<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MollifiedObservable")
            .field("width", &self.width)
            .field("jumps", &self.jumps.len())
            .finish_non_exhaustive()
    }
}

impl<T: Real> MollifiedObservable<T> {
    pub fn width(&self) -> T {
        self.width
    }

    pub fn discontinuities(&self) -> Vec<T> {
        self.jumps.iter().map(|j| j.0).collect()
    }
}

/// Signed circular offset `x − d` in `[−1/2, 1/2)` for `x, d ∈ [0, 1)`.
fn offset<T: Real>(x: T, d: T) -> T {
    let half = T::from_f64(0.5).expect("f64 converts");
    let t = x - d;
    if t >= half {
        t - T::one()
    } else if t < -half {
        t + T::one()
    } else {
        t
    }
}

/// Replaces `f` on the `w`-neighbourhood of each listed discontinuity by
/// the chord between its boundary values. The result differs from `f` on a
/// set of measure at most `2w` per discontinuity.
pub fn mollify<T: Real>(
    f: Obs<TorusPoint<T>, T>,
    discontinuities: &[T],
    w: T,
) -> Result<MollifiedObservable<T>> {
    let half = T::from_f64(0.5).expect("f64 converts");
    if !(w > T::zero() && w < half) {
        return Err(Error::invalid(format!("mollifier width {w} outside (0, 1/2)")));
    }
    let mut points: Vec<T> = discontinuities
        .iter()
        .map(|&d| {
            if d.is_finite() {
                Ok(d - d.floor())
            } else {
                Err(Error::NonFinite)
            }
        })
        .collect::<Result<_>>()?;
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    points.dedup();
    if points.len() > 1 {
        let gaps = points.windows(2).map(|p| p[1] - p[0]);
        let wrap = points[0] + T::one() - points[points.len() - 1];
        let min_gap = gaps.fold(wrap, T::min);
        if w + w >= min_gap {
            return Err(Error::invalid(format!(
                "mollifier width {w} not below half the minimal gap {min_gap}"
            )));
        }
    }
    let at = |t: T| f.eval(&TorusPoint::new(vec![t]));
    let jumps = points
        .into_iter()
        .map(|d| Ok((d, at(d - w)?, at(d + w)?)))
        .collect::<Result<_>>()?;
    Ok(MollifiedObservable { base: f, width: w, jumps })
}

impl<T: Real> Observable<TorusPoint<T>, T> for MollifiedObservable<T> {
    fn eval(&self, x: &TorusPoint<T>) -> Result<Complex<T>> {
        let t = x.coords()[0];
        for &(d, left, right) in &self.jumps {
            let off = offset(t, d);
            if off.abs() < self.width {
                let s = (off + self.width) / (self.width + self.width);
                return Ok(left * (T::one() - s) + right * s);
            }
        }
        self.base.eval(x)
    }

    fn sup_bound(&self) -> T {
        self.base.sup_bound()
    }
}

/// The 1-step approximant `ψ_w(n) = F_w({√2 n})` with `w = ε/4`: the
/// sequences differ by at most 2 and only on a set of density `2w`, so both
/// averages of `|α − ψ_w|` tend to at most `ε`.
pub fn example_nil_approx<T: Real + Scalar>(epsilon: f64) -> Result<Nilsequence<T>> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!("epsilon {epsilon} outside (0,1)")));
    }
    let w = T::from_f64(epsilon / 4.0).ok_or(Error::NonFinite)?;
    let f = mollify(example_observable()?, &[T::zero()], w)?;
    Nilsequence::torus(
        TorusAction::rotation(Coefficient::sqrt(2)),
        TorusPoint::origin(1),
        Arc::new(f),
    )
}
