//! Suspensions of lattice actions with constant ceiling 1, and the reduction
//! of polynomial flow iterates to lattice actions.
//!
//! Over a ℤ^ℓ-action `T` on `X`, the space `Y = X × [0,1)^{mℓ}` carries the
//! commuting ℝ^ℓ-flows `S_i^t(x; b) = (T^{⌊b_i+t⌋}x; …, {b_i+t}, …)`, each
//! touching the base and fiber `i` only. Lifting `f₀` to
//! `1_{X×[0,δ]^{mℓ}} · f₀∘π` and the other observables to `f_i∘π` turns
//! the flow correlation into
//! `α̃(n) = ∫_{[0,δ]^{mℓ}} ∫_X f₀ · Π f_i ∘ T^{⌊q_i(n)+b_i⌋} dμ db`,
//! which equals `δ^{mℓ} α(n)` whenever every `{q_{ij}(n)}` is below `1 − δ`.

use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;

use crate::correlate::{CorrelationSpec, PointOf};
use crate::error::{Error, Result};
use crate::fixed::Fixed;
use crate::observables::{Coordinates, Obs, Observable};
use crate::poly::{BracketKind, Coefficient, VectorPolynomial};
use crate::scalar::{circle_dist, clamp_unit, Real};
use crate::systems::{check_flows_commute, check_index, check_len, FlowFamily, LatticeAction, Space};

/// `(x; b_1, …, b_m)` with the fibers flattened, fiber `i` occupying
/// `b[iℓ..(i+1)ℓ]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SuspensionPoint<P, T> {
    pub base: P,
    pub fibers: Vec<T>,
}

impl<P: Coordinates<T>, T: Copy> Coordinates<T> for SuspensionPoint<P, T> {
    fn coord_dim(&self) -> usize {
        self.base.coord_dim() + self.fibers.len()
    }

    fn coord(&self, k: usize) -> T {
        let d = self.base.coord_dim();
        if k < d {
            self.base.coord(k)
        } else {
            self.fibers[k - d]
        }
    }
}

/// `X × [0,1)^{mℓ}` with the product of the base measure and Lebesgue
/// measure.
#[derive(Clone, Debug, PartialEq)]
pub struct SuspensionSpace<S> {
    base: S,
    m: usize,
    ell: usize,
}

impl<S> SuspensionSpace<S> {
    pub fn base(&self) -> &S {
        &self.base
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn fiber_dim(&self) -> usize {
        self.m * self.ell
    }
}

impl<S: Space<T>, T: Real> Space<T> for SuspensionSpace<S> {
    type Point = SuspensionPoint<S::Point, T>;

    fn dim(&self) -> usize {
        self.base.dim() + self.fiber_dim()
    }

    fn point(&self, u: &[T]) -> Self::Point {
        let d = self.base.dim();
        SuspensionPoint {
            base: self.base.point(&u[..d]),
            fibers: u[d..].iter().map(|v| clamp_unit(*v - v.floor())).collect(),
        }
    }

    fn distance(&self, a: &Self::Point, b: &Self::Point) -> T {
        a.fibers
            .iter()
            .zip(&b.fibers)
            .map(|(x, y)| circle_dist(*x, *y))
            .fold(self.base.distance(&a.base, &b.base), T::max)
    }

    fn check(&self, x: &Self::Point) -> Result<()> {
        self.base.check(&x.base)?;
        check_len(self.fiber_dim(), x.fibers.len())
    }
}

/// The flows `S_1, …, S_m` on the suspension of `T`.
#[derive(Clone, Debug)]
pub struct SuspensionFlow<A: LatticeAction<T>, T: Real> {
    action: A,
    space: SuspensionSpace<A::Space>,
}

/// Seed of the commutation spot check run at construction.
pub const SUSPENSION_CHECK_SEED: u64 = 0x5e_5e_5e;

/// Builds the `m` suspension flows over `action` and spot-checks that they
/// commute.
pub fn build_suspension<A, T>(action: A, m: usize) -> Result<SuspensionFlow<A, T>>
where
    A: LatticeAction<T>,
    A::Space: Clone,
    T: Real,
{
    if m == 0 {
        return Err(Error::invalid("a suspension needs m ≥ 1 fibers"));
    }
    let space = SuspensionSpace {
        base: action.space().clone(),
        m,
        ell: action.rank(),
    };
    let flow = SuspensionFlow { action, space };
    check_flows_commute::<T, _>(&flow, SUSPENSION_CHECK_SEED)?;
    Ok(flow)
}

impl<A: LatticeAction<T>, T: Real> SuspensionFlow<A, T> {
    pub fn action(&self) -> &A {
        &self.action
    }

    pub fn suspension(&self) -> &SuspensionSpace<A::Space> {
        &self.space
    }
}

impl<A: LatticeAction<T>, T: Real> FlowFamily<T> for SuspensionFlow<A, T> {
    type Space = SuspensionSpace<A::Space>;

    fn space(&self) -> &Self::Space {
        &self.space
    }

    fn count(&self) -> usize {
        self.space.m
    }

    fn rank(&self) -> usize {
        self.space.ell
    }

    fn apply_fixed(
        &self,
        i: usize,
        t: &[Fixed],
        x: &SuspensionPoint<PointOf<A, T>, T>,
    ) -> Result<SuspensionPoint<PointOf<A, T>, T>> {
        check_index(i, self.space.m)?;
        check_len(self.space.ell, t.len())?;
        self.space.check(x)?;
        let ell = self.space.ell;
        let mut fibers = x.fibers.clone();
        let mut kick = Vec::with_capacity(ell);
        for (b, tj) in fibers[i * ell..(i + 1) * ell].iter_mut().zip(t) {
            let s = Fixed::from_float(*b)?.add(*tj)?;
            kick.push(s.floor());
            *b = s.frac_nearest();
        }
        Ok(SuspensionPoint {
            base: self.action.apply(&kick, &x.base)?,
            fibers,
        })
    }
}

/// `f∘π`, optionally multiplied by the indicator of the closed box
/// `[0,δ]^{mℓ}` in the fiber coordinates.
pub struct LiftedObservable<P, T> {
    inner: Obs<P, T>,
    delta: Option<T>,
}

impl<P, T: Real> Observable<SuspensionPoint<P, T>, T> for LiftedObservable<P, T> {
    fn eval(&self, x: &SuspensionPoint<P, T>) -> Result<Complex<T>> {
        if let Some(delta) = self.delta {
            if x.fibers.iter().any(|b| *b > delta) {
                return Ok(Complex::zero());
            }
        }
        self.inner.eval(&x.base)
    }

    fn sup_bound(&self) -> T {
        self.inner.sup_bound()
    }
}

/// `f̂₀ = 1_{X×[0,δ]^{mℓ}} · f₀∘π` and `f̂_i = f_i∘π`.
pub struct LiftedObservables<P, T> {
    pub delta: T,
    pub f0: Obs<SuspensionPoint<P, T>, T>,
    pub fs: Vec<Obs<SuspensionPoint<P, T>, T>>,
}

fn check_delta<T: Real>(delta: T) -> Result<()> {
    if delta > T::zero() && delta < T::one() {
        Ok(())
    } else {
        Err(Error::invalid(format!("delta {delta} outside (0,1)")))
    }
}

pub fn lift_observables<P: 'static, T: Real>(
    f0: &Obs<P, T>,
    fs: &[Obs<P, T>],
    delta: T,
) -> Result<LiftedObservables<P, T>> {
    check_delta(delta)?;
    Ok(LiftedObservables {
        delta,
        f0: Arc::new(LiftedObservable {
            inner: f0.clone(),
            delta: Some(delta),
        }),
        fs: fs
            .iter()
            .map(|f| {
                Arc::new(LiftedObservable {
                    inner: f.clone(),
                    delta: None,
                }) as Obs<SuspensionPoint<P, T>, T>
            })
            .collect(),
    })
}

/// `1 − δ` in fixed point, the threshold of the exceptional tests.
fn upper_threshold<T: Real>(delta: T) -> Result<u128> {
    check_delta(delta)?;
    Ok(Fixed::ONE.sub(Fixed::from_float(delta)?)?.frac_bits())
}

/// Whether some `i` has `{q_i(n)} ∈ [1−δ,1)^ℓ`: every coordinate of one
/// iterate near the top of the unit interval.
pub fn exceptional<T: Real>(polys: &[VectorPolynomial], delta: T, n: i128) -> Result<bool> {
    let threshold = upper_threshold(delta)?;
    for q in polys {
        let values = q.eval_int(n)?;
        if values.iter().all(|v| v.frac_bits() >= threshold) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Whether some single coordinate `{q_{ij}(n)}` lies in `[1−δ,1)`. Outside
/// this set the identity `α = δ^{−mℓ} α̃` holds for every `ℓ`.
pub fn exceptional_coordinate<T: Real>(polys: &[VectorPolynomial], delta: T, n: i128) -> Result<bool> {
    let threshold = upper_threshold(delta)?;
    for q in polys {
        if q.eval_int(n)?.iter().any(|v| v.frac_bits() >= threshold) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// `α̃(n)` by exact splitting of the fiber box.
///
/// For `b ∈ [0,δ]`, `⌊q + b⌋` is `⌊q⌋` on `[0, 1−{q})` and `⌊q⌋ + 1` on
/// `[1−{q}, δ]`, so the fiber integral is a finite sum over the `2^{mℓ}`
/// cells of the split. The boundary point goes to the left cell.
pub fn alpha_tilde<A: LatticeAction<T>, T: Real>(
    spec: &CorrelationSpec<A, T>,
    delta: T,
    n: i128,
) -> Result<Complex<T>> {
    check_delta(delta)?;
    for it in spec.iterates() {
        if it.brackets.kinds().iter().any(|k| *k != BracketKind::Floor) {
            return Err(Error::invalid("the suspension construction needs floor brackets"));
        }
    }
    let delta_fixed = Fixed::from_float(delta)?;
    // (floor, length of the low cell, length of the high cell) per (i, j).
    let mut cells: Vec<(i128, T, T)> = Vec::new();
    for it in spec.iterates() {
        for v in it.poly.eval_int(n)? {
            let room = Fixed::ONE.sub(v.fract())?;
            let (low, high) = if room.frac_bits() == 0 || room.floor() >= 1 || room > delta_fixed {
                (delta, T::zero())
            } else {
                let low = room.to_real::<T>();
                (low, delta - low)
            };
            cells.push((v.floor(), low, high));
        }
    }
    let ell = spec.ell();
    let mut total = Complex::zero();
    for mask in 0u64..(1u64 << cells.len()) {
        let mut weight = T::one();
        let mut ks: Vec<Vec<i128>> = vec![Vec::with_capacity(ell); spec.m()];
        for (c, (floor, low, high)) in cells.iter().enumerate() {
            let up = mask >> c & 1 == 1;
            weight = weight * if up { *high } else { *low };
            ks[c / ell].push(floor + i128::from(up));
        }
        if weight == T::zero() {
            continue;
        }
        total = total + spec.at_exponents(&ks)? * weight;
    }
    Ok(total)
}

/// One line of a suspension report.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuspensionRow<T> {
    pub n: i128,
    pub exceptional: bool,
    pub alpha: Complex<T>,
    /// `δ^{−mℓ} α̃(n)`.
    pub alpha_tilde_scaled: Complex<T>,
    pub abs_diff: T,
}

pub fn suspension_row<A: LatticeAction<T>, T: Real>(
    spec: &CorrelationSpec<A, T>,
    delta: T,
    n: i128,
) -> Result<SuspensionRow<T>> {
    let polys: Vec<VectorPolynomial> = spec.iterates().iter().map(|it| it.poly.clone()).collect();
    let alpha = spec.multicorrelation(n)?;
    let volume = delta.powi((spec.m() * spec.ell()) as i32);
    let scaled = alpha_tilde(spec, delta, n)? / volume;
    Ok(SuspensionRow {
        n,
        exceptional: exceptional(&polys, delta, n)?,
        alpha,
        alpha_tilde_scaled: scaled,
        abs_diff: (alpha - scaled).norm(),
    })
}

/// Rows for `n ∈ [start, end)`, in order.
pub fn suspension_rows<A: LatticeAction<T>, T: Real>(
    spec: &CorrelationSpec<A, T>,
    delta: T,
    start: i128,
    end: i128,
) -> Result<Vec<SuspensionRow<T>>> {
    if start >= end {
        return Err(Error::EmptyRange { start, end });
    }
    let len = u64::try_from(end - start).map_err(|_| Error::Overflow("range length"))?;
    (0..len)
        .into_par_iter()
        .map(|k| suspension_row(spec, delta, start + i128::from(k)))
        .collect()
}

/// `T_i^{(n₀,…,n_d)} = Π_h S_i^{n_h a_{·,h}}`, where `a_{·,h}` is the
/// degree-`h` coefficient column of `q_i`.
#[derive(Clone, Debug)]
pub struct ReducedAction<F> {
    flow: Arc<F>,
    index: usize,
    /// `columns[h][j] = a_{j,h}`.
    columns: Vec<Vec<Coefficient>>,
}

impl<F> ReducedAction<F> {
    pub fn flow_index(&self) -> usize {
        self.index
    }
}

impl<F: FlowFamily<T>, T: Real> LatticeAction<T> for ReducedAction<F> {
    type Space = F::Space;

    fn space(&self) -> &F::Space {
        self.flow.space()
    }

    fn rank(&self) -> usize {
        self.columns.len()
    }

    fn apply(
        &self,
        n: &[i128],
        x: &<F::Space as Space<T>>::Point,
    ) -> Result<<F::Space as Space<T>>::Point> {
        check_len(self.columns.len(), n.len())?;
        let mut y = x.clone();
        for (column, &k) in self.columns.iter().zip(n) {
            if k == 0 {
                continue;
            }
            let t = column
                .iter()
                .map(|a| a.fixed().mul_int(k))
                .collect::<Result<Vec<_>>>()?;
            y = self.flow.apply_fixed(self.index, &t, &y)?;
        }
        Ok(y)
    }
}

/// The ℤ^{d+1}-actions `T_1, …, T_m` replacing the flow iterates
/// `S_i^{q_i(n)}` by `T_i^{(1, n, …, n^d)}`.
#[derive(Clone, Debug)]
pub struct LatticeReduction<F> {
    flow: Arc<F>,
    polys: Vec<VectorPolynomial>,
    actions: Vec<ReducedAction<F>>,
}

/// Seed of the commutation spot check run by [`flow_to_lattice`].
pub const REDUCTION_CHECK_SEED: u64 = 0x2ed_0c7;

pub fn flow_to_lattice<F: FlowFamily<T>, T: Real>(
    flow: F,
    polys: Vec<VectorPolynomial>,
) -> Result<LatticeReduction<F>> {
    check_len(flow.count(), polys.len())?;
    for q in &polys {
        check_len(flow.rank(), q.ell())?;
    }
    check_flows_commute::<T, F>(&flow, REDUCTION_CHECK_SEED)?;
    let flow = Arc::new(flow);
    let actions = polys
        .iter()
        .enumerate()
        .map(|(i, q)| ReducedAction {
            flow: flow.clone(),
            index: i,
            columns: (0..=q.degree())
                .map(|h| (0..q.ell()).map(|j| q.coefficient(j, h).clone()).collect())
                .collect(),
        })
        .collect();
    Ok(LatticeReduction {
        flow,
        polys,
        actions,
    })
}

/// `(1, n, …, n^d)` in 128-bit integers.
pub fn q_vec(n: i128, degree: usize) -> Result<Vec<i128>> {
    let mut out = Vec::with_capacity(degree + 1);
    let mut p = 1i128;
    for h in 0..=degree {
        if h > 0 {
            p = p.checked_mul(n).ok_or(Error::Overflow("n^h"))?;
        }
        out.push(p);
    }
    Ok(out)
}

impl<F> LatticeReduction<F> {
    pub fn actions(&self) -> &[ReducedAction<F>] {
        &self.actions
    }

    pub fn flow(&self) -> &F {
        &self.flow
    }

    pub fn polys(&self) -> &[VectorPolynomial] {
        &self.polys
    }

    /// `T_i^{q_vec(n)} x`.
    pub fn apply_reduced<T: Real>(
        &self,
        i: usize,
        n: i128,
        x: &<F::Space as Space<T>>::Point,
    ) -> Result<<F::Space as Space<T>>::Point>
    where
        F: FlowFamily<T>,
    {
        check_index(i, self.actions.len())?;
        let a = &self.actions[i];
        a.apply(&q_vec(n, a.columns.len() - 1)?, x)
    }

    /// `S_i^{q_i(n)} x`.
    pub fn apply_direct<T: Real>(
        &self,
        i: usize,
        n: i128,
        x: &<F::Space as Space<T>>::Point,
    ) -> Result<<F::Space as Space<T>>::Point>
    where
        F: FlowFamily<T>,
    {
        check_index(i, self.polys.len())?;
        self.flow.apply_fixed(i, &self.polys[i].eval_int(n)?, x)
    }

    /// Distance between the two sides of `T_i^{q_vec(n)} x = S_i^{q_i(n)} x`.
    pub fn discrepancy<T: Real>(&self, i: usize, n: i128, x: &<F::Space as Space<T>>::Point) -> Result<T>
    where
        F: FlowFamily<T>,
    {
        let a = self.apply_reduced(i, n, x)?;
        let b = self.apply_direct(i, n, x)?;
        Ok(self.flow.space().distance(&a, &b))
    }
}
