//! Point spaces and the actions on them.
//!
//! A [`Space`] parametrizes its fundamental domain by the unit cube so that
//! the invariant probability measure is Lebesgue measure on the cube. A
//! [`LatticeAction`] is a ℤ^ℓ-action, a [`FlowFamily`] a family of commuting
//! ℝ^ℓ-actions. Shipped families are torus rotations and flows and
//! translations on the Heisenberg nilmanifold; anything satisfying the
//! cocycle contract can be plugged in.

mod heisenberg;
mod torus;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use heisenberg::{
    heis_mul, heis_pow, nil_reduce, HeisenbergAction, HeisenbergElement, NilPoint, NilSpace,
};
pub use torus::{TorusAction, TorusFlow, TorusPoint, TorusSpace};

use crate::error::{Error, Result};
use crate::fixed::Fixed;
use crate::scalar::Real;

/// A probability space with a concrete fundamental domain.
pub trait Space<T: Real>: Send + Sync {
    type Point: Clone + Send + Sync;

    /// Dimension of the parametrizing cube.
    fn dim(&self) -> usize;

    /// The point with cube coordinates `u ∈ [0,1)^dim`.
    fn point(&self, u: &[T]) -> Self::Point;

    /// A metric compatible with the quotient topology.
    fn distance(&self, a: &Self::Point, b: &Self::Point) -> T;

    /// Checks that `x` belongs to this space.
    fn check(&self, x: &Self::Point) -> Result<()>;
}

/// A measure-preserving ℤ^ℓ-action.
pub trait LatticeAction<T: Real>: Send + Sync {
    type Space: Space<T>;

    fn space(&self) -> &Self::Space;

    fn rank(&self) -> usize;

    /// `T^n x`. Must satisfy `apply(m + n, x) = apply(m, apply(n, x))`.
    fn apply(
        &self,
        n: &[i128],
        x: &<Self::Space as Space<T>>::Point,
    ) -> Result<<Self::Space as Space<T>>::Point>;

    /// The action as a torus rotation, when it is one. Enables the exact
    /// character path of the correlation engine.
    fn as_torus(&self) -> Option<&TorusAction> {
        None
    }
}

/// Commuting measure-preserving ℝ^ℓ-actions `S_1, …, S_m` on one space.
pub trait FlowFamily<T: Real>: Send + Sync {
    type Space: Space<T>;

    fn space(&self) -> &Self::Space;

    /// Number of flows `m`.
    fn count(&self) -> usize;

    /// Acting rank `ℓ`.
    fn rank(&self) -> usize;

    /// `S_i^t x` for a fixed-point time vector.
    fn apply_fixed(
        &self,
        i: usize,
        t: &[Fixed],
        x: &<Self::Space as Space<T>>::Point,
    ) -> Result<<Self::Space as Space<T>>::Point>;

    /// `S_i^t x`.
    fn apply_flow(
        &self,
        i: usize,
        t: &[T],
        x: &<Self::Space as Space<T>>::Point,
    ) -> Result<<Self::Space as Space<T>>::Point> {
        let t = t
            .iter()
            .map(|v| Fixed::from_float(*v))
            .collect::<Result<Vec<_>>>()?;
        self.apply_fixed(i, &t, x)
    }

    fn as_torus(&self) -> Option<&TorusFlow> {
        None
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn check_index(index: usize, count: usize) -> Result<()> {
    if index < count {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { index, count })
    }
}

/// Number of random samples in commutation spot checks.
pub const SPOT_CHECK_SAMPLES: usize = 100;

/// Tolerance of commutation spot checks.
pub const SPOT_CHECK_TOL: f64 = 1e-9;

/// Deterministic random points of a space.
pub fn sample_points<T: Real, S: Space<T>>(space: &S, count: usize, seed: u64) -> Vec<S::Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let u: Vec<T> = (0..space.dim())
                .map(|_| T::from_f64(rng.random::<f64>()).expect("f64 converts"))
                .collect();
            space.point(&u)
        })
        .collect()
}

/// Checks `S_i^t S_j^u x = S_j^u S_i^t x` on random samples.
pub fn check_flows_commute<T: Real, F: FlowFamily<T>>(flow: &F, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = flow.count();
    let points = sample_points::<T, _>(flow.space(), SPOT_CHECK_SAMPLES, seed ^ 0x5eed);
    let tol = T::from_f64(SPOT_CHECK_TOL).expect("f64 converts");
    for x in &points {
        let i = rng.random_range(0..m);
        let j = rng.random_range(0..m);
        let t: Vec<T> = (0..flow.rank())
            .map(|_| T::from_f64(rng.random_range(-2.0..2.0)).expect("f64 converts"))
            .collect();
        let u: Vec<T> = (0..flow.rank())
            .map(|_| T::from_f64(rng.random_range(-2.0..2.0)).expect("f64 converts"))
            .collect();
        let a = flow.apply_flow(i, &t, &flow.apply_flow(j, &u, x)?)?;
        let b = flow.apply_flow(j, &u, &flow.apply_flow(i, &t, x)?)?;
        if flow.space().distance(&a, &b) > tol {
            return Err(Error::NotCommuting);
        }
    }
    Ok(())
}

/// Checks `T_i^a T_j^b x = T_j^b T_i^a x` for lattice actions on one space.
pub fn check_actions_commute<T: Real, A: LatticeAction<T>>(actions: &[A], seed: u64) -> Result<()> {
    let Some(first) = actions.first() else {
        return Ok(());
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = sample_points::<T, _>(first.space(), SPOT_CHECK_SAMPLES, seed ^ 0x5eed);
    let tol = T::from_f64(SPOT_CHECK_TOL).expect("f64 converts");
    for x in &points {
        let i = rng.random_range(0..actions.len());
        let j = rng.random_range(0..actions.len());
        let a: Vec<i128> = (0..actions[i].rank())
            .map(|_| rng.random_range(-5..=5))
            .collect();
        let b: Vec<i128> = (0..actions[j].rank())
            .map(|_| rng.random_range(-5..=5))
            .collect();
        let p = actions[i].apply(&a, &actions[j].apply(&b, x)?)?;
        let q = actions[j].apply(&b, &actions[i].apply(&a, x)?)?;
        if first.space().distance(&p, &q) > tol {
            return Err(Error::NotCommuting);
        }
    }
    Ok(())
}
