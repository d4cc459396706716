//! Complex-valued observables on point spaces and their integrals.
//!
//! Trigonometric polynomials carry their Fourier coefficients, so products,
//! translations and integrals are exact on them. Any other observable is a
//! pure evaluator with a declared sup bound and is integrated on a midpoint
//! tensor grid.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::fixed::Fixed;
use crate::reduce::try_par_sum_map;
use crate::scalar::{e, e_fixed, Real};
use crate::systems::{NilPoint, Space, TorusPoint};

/// Points exposing the cube coordinates of their fundamental-domain
/// representative.
pub trait Coordinates<T> {
    fn coord_dim(&self) -> usize;
    fn coord(&self, k: usize) -> T;
}

impl<T: Real> Coordinates<T> for TorusPoint<T> {
    fn coord_dim(&self) -> usize {
        self.dim()
    }

    fn coord(&self, k: usize) -> T {
        self.coords()[k]
    }
}

impl<T: Copy> Coordinates<T> for NilPoint<T>
where
    T: crate::scalar::Scalar,
{
    fn coord_dim(&self) -> usize {
        3
    }

    fn coord(&self, k: usize) -> T {
        let r = self.rep();
        [r.x, r.y, r.z][k]
    }
}

/// A complex-valued function on the points `P` of a space.
pub trait Observable<P, T: Real>: Send + Sync {
    fn eval(&self, x: &P) -> Result<Complex<T>>;

    /// A bound on `|f|` over the whole space.
    fn sup_bound(&self) -> T;

    /// The observable as a trigonometric polynomial, when it is one.
    fn as_trig(&self) -> Option<&TrigObservable<T>> {
        None
    }
}

/// Shared handle to an observable.
pub type Obs<P, T> = Arc<dyn Observable<P, T>>;

/// `Σ a_k e(k·x)` over finitely many integer frequencies `k ∈ ℤ^D`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigObservable<T> {
    dim: usize,
    terms: BTreeMap<Vec<i64>, Complex<T>>,
}

impl<T: Real> TrigObservable<T> {
    /// Sums amplitudes of repeated frequencies.
    pub fn new(dim: usize, terms: impl IntoIterator<Item = (Vec<i64>, Complex<T>)>) -> Result<Self> {
        let mut map: BTreeMap<Vec<i64>, Complex<T>> = BTreeMap::new();
        for (k, a) in terms {
            if k.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: k.len(),
                });
            }
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::NonFinite);
            }
            let slot = map.entry(k).or_insert_with(Complex::zero);
            *slot = *slot + a;
        }
        Ok(TrigObservable { dim, terms: map })
    }

    /// `amp · e(k·x)`.
    pub fn character(freq: Vec<i64>, amp: Complex<T>) -> Result<Self> {
        let dim = freq.len();
        Self::new(dim, [(freq, amp)])
    }

    pub fn constant(dim: usize, c: Complex<T>) -> Self {
        Self::new(dim, [(vec![0; dim], c)]).expect("finite constant")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[i64], &Complex<T>)> {
        self.terms.iter().map(|(k, a)| (k.as_slice(), a))
    }

    pub fn amplitude(&self, freq: &[i64]) -> Complex<T> {
        self.terms.get(freq).copied().unwrap_or_else(Complex::zero)
    }

    /// Exact integral over the cube: the zero-frequency amplitude.
    pub fn integral(&self) -> Complex<T> {
        self.amplitude(&vec![0; self.dim])
    }

    /// `Σ |a_k|`.
    pub fn sup(&self) -> T {
        self.terms.values().fold(T::zero(), |s, a| s + a.norm())
    }

    pub fn eval_coords(&self, x: &[T]) -> Result<Complex<T>> {
        if x.len() != self.dim {
            return Err(Error::SpaceMismatch(format!(
                "observable on dimension {} evaluated at a point of dimension {}",
                self.dim,
                x.len()
            )));
        }
        let mut sum = Complex::zero();
        for (k, a) in &self.terms {
            let phase = k
                .iter()
                .zip(x)
                .fold(T::zero(), |p, (kd, xd)| p + T::from_i64(*kd).expect("i64 converts") * *xd);
            sum = sum + *a * e(phase);
        }
        Ok(sum)
    }

    /// Frequency-wise convolution.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::SpaceMismatch(format!(
                "product of observables on dimensions {} and {}",
                self.dim, other.dim
            )));
        }
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (k1, a1) in &self.terms {
            for (k2, a2) in &other.terms {
                let k = k1
                    .iter()
                    .zip(k2)
                    .map(|(a, b)| a.checked_add(*b).ok_or(Error::Overflow("frequency sum")))
                    .collect::<Result<Vec<_>>>()?;
                terms.push((k, *a1 * *a2));
            }
        }
        Self::new(self.dim, terms)
    }

    /// `x ↦ f(x + s)`: each amplitude gains the factor `e(k·s)`, with the
    /// phase accumulated modulo 1 in 128-bit fixed point.
    pub fn translated(&self, shift: &[Fixed]) -> Result<Self> {
        if shift.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: shift.len(),
            });
        }
        let terms = self
            .terms
            .iter()
            .map(|(k, a)| {
                let phase = k.iter().zip(shift).fold(0u128, |p, (kd, s)| {
                    p.wrapping_add((*kd as i128 as u128).wrapping_mul(s.frac_bits()))
                });
                (k.clone(), *a * e_fixed::<T>(phase))
            })
            .collect();
        Ok(TrigObservable {
            dim: self.dim,
            terms,
        })
    }

    pub fn scaled(&self, c: Complex<T>) -> Self {
        TrigObservable {
            dim: self.dim,
            terms: self.terms.iter().map(|(k, a)| (k.clone(), *a * c)).collect(),
        }
    }

    /// The observable on `𝕋^{total}` reading coordinates `offset..offset+dim`.
    pub fn embed(&self, total: usize, offset: usize) -> Result<Self> {
        if offset + self.dim > total {
            return Err(Error::DimensionMismatch {
                expected: total,
                found: offset + self.dim,
            });
        }
        Self::new(
            total,
            self.terms.iter().map(|(k, a)| {
                let mut wide = vec![0; total];
                wide[offset..offset + self.dim].copy_from_slice(k);
                (wide, *a)
            }),
        )
    }
}

impl<T: Real> fmt::Display for TrigObservable<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, a) in &self.terms {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            write!(f, "({}{:+}i)*e({:?}·x)", a.re, a.im, k)?;
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

impl<P: Coordinates<T>, T: Real> Observable<P, T> for TrigObservable<T> {
    fn eval(&self, x: &P) -> Result<Complex<T>> {
        if x.coord_dim() != self.dim {
            return Err(Error::SpaceMismatch(format!(
                "observable on dimension {} evaluated at a point of dimension {}",
                self.dim,
                x.coord_dim()
            )));
        }
        let coords: Vec<T> = (0..self.dim).map(|k| x.coord(k)).collect();
        self.eval_coords(&coords)
    }

    fn sup_bound(&self) -> T {
        self.sup()
    }

    fn as_trig(&self) -> Option<&TrigObservable<T>> {
        Some(self)
    }
}

type Evaluator<P, T> = dyn Fn(&P) -> Complex<T> + Send + Sync;

/// A pure evaluator with a declared sup bound. Values above the bound are
/// reported as errors.
#[derive(Clone)]
pub struct SampledObservable<P, T> {
    f: Arc<Evaluator<P, T>>,
    sup: T,
}

/// Relative slack allowed between a sampled value and its declared bound.
const SUP_SLACK: f64 = 1e-12;

impl<P, T: Real> SampledObservable<P, T> {
    pub fn new(sup: T, f: impl Fn(&P) -> Complex<T> + Send + Sync + 'static) -> Result<Self> {
        if !(sup >= T::zero()) || !sup.is_finite() {
            return Err(Error::invalid("sup bound must be finite and ≥ 0"));
        }
        Ok(SampledObservable { f: Arc::new(f), sup })
    }
}

impl<P, T: Real> fmt::Debug for SampledObservable<P, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledObservable")
            .field("sup", &self.sup)
            .finish_non_exhaustive()
    }
}

impl<P, T: Real> Observable<P, T> for SampledObservable<P, T> {
    fn eval(&self, x: &P) -> Result<Complex<T>> {
        let v = (self.f)(x);
        let slack = T::one() + T::from_f64(SUP_SLACK).expect("f64 converts");
        if !(v.norm() <= self.sup * slack) {
            return Err(Error::invalid(format!(
                "observable value of modulus {} exceeds its declared bound {}",
                v.norm(),
                self.sup
            )));
        }
        Ok(v)
    }

    fn sup_bound(&self) -> T {
        self.sup
    }
}

/// Pointwise product of observables.
pub struct Product<P, T> {
    factors: Vec<Obs<P, T>>,
}

impl<P, T: Real> Observable<P, T> for Product<P, T> {
    fn eval(&self, x: &P) -> Result<Complex<T>> {
        self.factors
            .iter()
            .try_fold(Complex::one(), |acc, f| Ok(acc * f.eval(x)?))
    }

    fn sup_bound(&self) -> T {
        self.factors.iter().fold(T::one(), |s, f| s * f.sup_bound())
    }
}

/// `c · f`.
pub struct Scaled<P, T> {
    inner: Obs<P, T>,
    factor: Complex<T>,
}

impl<P, T: Real> Observable<P, T> for Scaled<P, T> {
    fn eval(&self, x: &P) -> Result<Complex<T>> {
        Ok(self.inner.eval(x)? * self.factor)
    }

    fn sup_bound(&self) -> T {
        self.inner.sup_bound() * self.factor.norm()
    }
}

/// Pointwise product. Two trigonometric polynomials give a trigonometric
/// polynomial.
pub fn product_obs<P: Coordinates<T> + 'static, T: Real>(
    f: &Obs<P, T>,
    g: &Obs<P, T>,
) -> Result<Obs<P, T>> {
    if let (Some(a), Some(b)) = (f.as_trig(), g.as_trig()) {
        return Ok(Arc::new(a.product(b)?));
    }
    Ok(Arc::new(Product {
        factors: vec![f.clone(), g.clone()],
    }))
}

/// `c · f`, staying trigonometric when `f` is.
pub fn scale_obs<P: Coordinates<T> + 'static, T: Real>(f: &Obs<P, T>, c: Complex<T>) -> Obs<P, T> {
    match f.as_trig() {
        Some(t) => Arc::new(t.scaled(c)),
        None => Arc::new(Scaled {
            inner: f.clone(),
            factor: c,
        }),
    }
}

/// Rescales `f` to sup bound at most 1. Returns the observable and the
/// factor applied.
pub fn normalize<P: Coordinates<T> + 'static, T: Real>(f: &Obs<P, T>) -> (Obs<P, T>, T) {
    let sup = f.sup_bound();
    if sup <= T::one() {
        (f.clone(), T::one())
    } else {
        let c = T::one() / sup;
        (scale_obs(f, Complex::new(c, T::zero())), c)
    }
}

/// Midpoint tensor grid with `points` nodes per dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuadratureRule {
    pub points: u32,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule { points: 4096 }
    }
}

/// Largest number of grid nodes a quadrature may visit.
pub const MAX_QUADRATURE_NODES: u64 = 1 << 36;

impl QuadratureRule {
    pub fn new(points: u32) -> Result<Self> {
        if points == 0 {
            return Err(Error::invalid("quadrature needs at least one point per dimension"));
        }
        Ok(QuadratureRule { points })
    }

    /// Number of nodes on a `dim`-dimensional grid.
    pub fn nodes(&self, dim: usize) -> Result<u64> {
        let exp = u32::try_from(dim).map_err(|_| Error::Overflow("quadrature grid"))?;
        u64::from(self.points)
            .checked_pow(exp)
            .filter(|n| *n <= MAX_QUADRATURE_NODES)
            .ok_or(Error::Overflow("quadrature grid"))
    }

    /// Cube coordinates of node `index`; the first dimension varies slowest.
    pub fn node<T: Real>(&self, dim: usize, mut index: u64) -> Vec<T> {
        let q = u64::from(self.points);
        let scale = T::from_u32(self.points).expect("u32 converts");
        let half = T::from_f64(0.5).expect("f64 converts");
        let mut u = vec![T::zero(); dim];
        for slot in u.iter_mut().rev() {
            let i = index % q;
            index /= q;
            *slot = (T::from_u64(i).expect("u64 converts") + half) / scale;
        }
        u
    }

    /// Grid average of `g` over `[0,1)^dim`.
    pub fn average<T, G>(&self, dim: usize, g: G) -> Result<Complex<T>>
    where
        T: Real,
        G: Fn(&[T]) -> Result<Complex<T>> + Sync,
    {
        let nodes = self.nodes(dim)?;
        let sum = try_par_sum_map(nodes, |i| g(&self.node::<T>(dim, i)))?;
        Ok(sum / T::from_u64(nodes).expect("u64 converts"))
    }
}

/// How an integral over the space is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integration {
    /// Exact when the integrand is trigonometric, quadrature otherwise.
    Auto(QuadratureRule),
    Exact,
    Quadrature(QuadratureRule),
}

impl Default for Integration {
    fn default() -> Self {
        Integration::Auto(QuadratureRule::default())
    }
}

/// `∫ f dμ`.
pub fn integrate<S, T>(f: &dyn Observable<S::Point, T>, space: &S, how: Integration) -> Result<Complex<T>>
where
    S: Space<T>,
    T: Real,
{
    match (how, f.as_trig()) {
        (Integration::Exact | Integration::Auto(_), Some(t)) => Ok(t.integral()),
        (Integration::Exact, None) => Err(Error::NotCharacter(
            "exact integration needs a trigonometric polynomial".into(),
        )),
        (Integration::Auto(rule) | Integration::Quadrature(rule), _) => {
            rule.average(space.dim(), |u| f.eval(&space.point(u)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::TorusSpace;

    fn chr(k: i64) -> Obs<TorusPoint<f64>, f64> {
        Arc::new(TrigObservable::character(vec![k], Complex::new(1.0, 0.0)).unwrap())
    }

    fn at(x: f64) -> TorusPoint<f64> {
        TorusPoint::new(vec![x])
    }

    #[test]
    fn eval_examples() {
        let v = chr(1).eval(&at(0.25)).unwrap();
        assert!((v - Complex::i()).norm() < 1e-15);
        let v = chr(-1).eval(&at(1.0 / 3.0)).unwrap();
        assert!((v - Complex::new(-0.5, -0.75f64.sqrt())).norm() < 1e-15);
        let one: Obs<TorusPoint<f64>, f64> =
            Arc::new(TrigObservable::constant(1, Complex::new(1.0, 0.0)));
        assert_eq!(one.eval(&at(0.7)).unwrap(), Complex::new(1.0, 0.0));
        assert!(matches!(
            chr(1).eval(&TorusPoint::new(vec![0.0, 0.0])),
            Err(Error::SpaceMismatch(_))
        ));
    }

    #[test]
    fn integral_examples() {
        let s = TorusSpace { dim: 1 };
        let q = Integration::Quadrature(QuadratureRule::new(4096).unwrap());
        for how in [Integration::Exact, q] {
            assert!(integrate(&*chr(1), &s, how).unwrap().norm() < 1e-12);
            let p = product_obs(&chr(1), &chr(-1)).unwrap();
            assert!((integrate(&*p, &s, how).unwrap() - 1.0).norm() < 1e-12);
        }
        let sampled: Obs<TorusPoint<f64>, f64> = Arc::new(
            SampledObservable::new(1.0, |x: &TorusPoint<f64>| Complex::new(x.coords()[0], 0.0))
                .unwrap(),
        );
        assert!(matches!(
            integrate(&*sampled, &s, Integration::Exact),
            Err(Error::NotCharacter(_))
        ));
        let v = integrate(&*sampled, &s, Integration::default()).unwrap();
        assert!((v.re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn product_examples() {
        let p = product_obs(&chr(1), &chr(1)).unwrap();
        assert_eq!(p.as_trig().unwrap().amplitude(&[2]), Complex::new(1.0, 0.0));
        let half: Obs<TorusPoint<f64>, f64> =
            Arc::new(SampledObservable::new(0.5, |_: &TorusPoint<f64>| Complex::new(0.5, 0.0)).unwrap());
        let two = scale_obs(&chr(0), Complex::new(2.0, 0.0));
        let p = product_obs(&half, &two).unwrap();
        assert_eq!(p.sup_bound(), 1.0);
        let (n, c) = normalize(&two);
        assert_eq!((n.sup_bound(), c), (1.0, 0.5));
    }

    #[test]
    fn translation_phase() {
        let f = TrigObservable::character(vec![3], Complex::new(1.0, 0.0)).unwrap();
        let s = Fixed::from_ratio(1, 3).unwrap();
        let g = f.translated(&[s]).unwrap();
        assert!((g.amplitude(&[3]) - 1.0).norm() < 1e-15);
        let y = f.translated(&[Fixed::from_float(0.1).unwrap()]).unwrap();
        let x = 0.27;
        let lhs = y.eval_coords(&[x]).unwrap();
        let rhs = f.eval_coords(&[x + 0.1]).unwrap();
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn sampled_bound_is_enforced() {
        let f = SampledObservable::new(0.5, |_: &TorusPoint<f64>| Complex::new(1.0, 0.0)).unwrap();
        assert!(f.eval(&at(0.0)).is_err());
    }
}
