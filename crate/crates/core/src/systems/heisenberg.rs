//! The Heisenberg group `G` of 3×3 upper unitriangular matrices in Mal'cev
//! coordinates, its integer lattice `Γ`, and translations on `G/Γ`.
//!
//! Float powers use the closed form directly. For exponents above
//! [`FIXED_POWER_THRESHOLD`] in magnitude the orbit is computed in 128.128
//! fixed point: `n·x` and `n·y` are exact, `x·y` is truncated once below
//! 2⁻¹²⁸ and then scaled exactly by `C(n,2)`, so the central coordinate
//! carries an absolute error of at most `C(n,2)·2⁻¹²⁸` before reduction.

use super::{check_len, LatticeAction, Space};
use crate::error::{Error, Result};
use crate::fixed::Fixed;
use crate::poly::Coefficient;
use crate::scalar::{circle_dist, Real, Scalar};

/// Exponents beyond this magnitude take the fixed-point path.
pub const FIXED_POWER_THRESHOLD: i128 = 1_000_000;

/// `(x, y, z)` with law `(x₁,y₁,z₁)·(x₂,y₂,z₂) = (x₁+x₂, y₁+y₂, z₁+z₂+x₁y₂)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct HeisenbergElement<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> HeisenbergElement<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        HeisenbergElement { x, y, z }
    }

    pub fn identity() -> Self {
        HeisenbergElement::new(T::zero(), T::zero(), T::zero())
    }

    pub fn mul(&self, other: &Self) -> Self {
        heis_mul(self, other)
    }

    pub fn inverse(&self) -> Self {
        HeisenbergElement::new(
            -self.x.clone(),
            -self.y.clone(),
            self.x.clone() * self.y.clone() - self.z.clone(),
        )
    }

    pub fn pow(&self, n: i64) -> Self {
        heis_pow(self, n)
    }

    /// Whether every coordinate is an integer, i.e. the element lies in `Γ`.
    pub fn is_lattice(&self) -> bool {
        [&self.x, &self.y, &self.z]
            .iter()
            .all(|c| c.int_floor() == **c)
    }
}

pub fn heis_mul<T: Scalar>(a: &HeisenbergElement<T>, b: &HeisenbergElement<T>) -> HeisenbergElement<T> {
    HeisenbergElement {
        x: a.x.clone() + b.x.clone(),
        y: a.y.clone() + b.y.clone(),
        z: a.z.clone() + b.z.clone() + a.x.clone() * b.y.clone(),
    }
}

/// `gⁿ = (n·x, n·y, n·z + C(n,2)·x·y)`, valid for every integer `n`.
pub fn heis_pow<T: Scalar>(g: &HeisenbergElement<T>, n: i64) -> HeisenbergElement<T> {
    let n = i128::from(n);
    let nt = T::from_int(n);
    let choose = T::from_int(n * (n - 1) / 2);
    HeisenbergElement {
        x: nt.clone() * g.x.clone(),
        y: nt.clone() * g.y.clone(),
        z: nt * g.z.clone() + choose * g.x.clone() * g.y.clone(),
    }
}

/// The representative of `gΓ` in `[0,1)³`: `({x}, {y}, {z − x⌊y⌋})`,
/// obtained by right multiplication with `(−⌊x⌋, −⌊y⌋, c)`.
pub fn nil_reduce<T: Scalar>(g: &HeisenbergElement<T>) -> NilPoint<T> {
    let fy = g.y.int_floor();
    let z = g.z.clone() - g.x.clone() * fy;
    NilPoint {
        rep: HeisenbergElement {
            x: g.x.unit_fract(),
            y: g.y.unit_fract(),
            z: z.unit_fract(),
        },
    }
}

/// A point of `G/Γ`, held as its representative in `[0,1)³`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NilPoint<T> {
    rep: HeisenbergElement<T>,
}

impl<T: Scalar> NilPoint<T> {
    /// The coset `gΓ`.
    pub fn new(g: HeisenbergElement<T>) -> Self {
        nil_reduce(&g)
    }

    pub fn rep(&self) -> &HeisenbergElement<T> {
        &self.rep
    }

    /// `g · (this coset)`.
    pub fn translate(&self, g: &HeisenbergElement<T>) -> Self {
        nil_reduce(&heis_mul(g, &self.rep))
    }
}

/// The Heisenberg nilmanifold, parametrized by its fundamental domain
/// `[0,1)³`, on which Haar measure is Lebesgue measure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NilSpace;

impl<T: Real + Scalar> Space<T> for NilSpace {
    type Point = NilPoint<T>;

    fn dim(&self) -> usize {
        3
    }

    fn point(&self, u: &[T]) -> NilPoint<T> {
        NilPoint::new(HeisenbergElement::new(u[0], u[1], u[2]))
    }

    /// Sup norm of the shortest `a⁻¹bγ`, `γ` ranging over lattice elements
    /// adjacent to the identity.
    fn distance(&self, a: &NilPoint<T>, b: &NilPoint<T>) -> T {
        let d = heis_mul(&a.rep.inverse(), &b.rep);
        let mut best = T::infinity();
        for p in [-1i8, 0, 1] {
            for q in [-1i8, 0, 1] {
                let p = T::from_i8(p).expect("small int");
                let q = T::from_i8(q).expect("small int");
                let z = circle_dist(d.z + d.x * q, T::zero());
                let norm = (d.x + p).abs().max((d.y + q).abs()).max(z);
                best = best.min(norm);
            }
        }
        best
    }

    fn check(&self, _x: &NilPoint<T>) -> Result<()> {
        Ok(())
    }
}

type FixedTriple = [Fixed; 3];

fn fixed_mul(a: &FixedTriple, b: &FixedTriple) -> Result<FixedTriple> {
    Ok([
        a[0].add(b[0])?,
        a[1].add(b[1])?,
        a[2].add(b[2])?.add(a[0].mul(b[1])?)?,
    ])
}

fn fixed_pow(g: &FixedTriple, n: i128) -> Result<FixedTriple> {
    let choose = n
        .checked_mul(n - 1)
        .ok_or(Error::Overflow("Heisenberg power"))?
        / 2;
    Ok([
        g[0].mul_int(n)?,
        g[1].mul_int(n)?,
        g[2].mul_int(n)?.add(g[0].mul(g[1])?.mul_int(choose)?)?,
    ])
}

fn fixed_reduce(g: &FixedTriple) -> Result<FixedTriple> {
    let z = g[2].sub(g[0].mul_int(g[1].floor())?)?;
    Ok([g[0].fract(), g[1].fract(), z.fract()])
}

/// `n · x = g_1^{n_1} ⋯ g_ℓ^{n_ℓ} x Γ` for pairwise commuting translations.
///
/// Left translations by `g` and `h` commute on `G/Γ` exactly when their
/// commutator `(0, 0, x_g y_h − x_h y_g)` lies in `Γ`; this is checked at
/// construction.
#[derive(Clone, Debug, PartialEq)]
pub struct HeisenbergAction<T> {
    generators: Vec<HeisenbergElement<T>>,
    fixed: Vec<FixedTriple>,
}

/// Tolerance for the integrality of generator commutators.
const COMMUTATOR_TOL: f64 = 1e-9;

impl<T: Real + Scalar> HeisenbergAction<T> {
    pub fn new(generators: Vec<HeisenbergElement<T>>) -> Result<Self> {
        let fixed = generators
            .iter()
            .map(|g| {
                Ok([
                    Fixed::from_float(g.x)?,
                    Fixed::from_float(g.y)?,
                    Fixed::from_float(g.z)?,
                ])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::build(generators, fixed)
    }

    /// Generators given as tagged coefficients; the fixed-point path then
    /// uses their 128-bit expansions.
    pub fn from_coefficients(generators: Vec<[Coefficient; 3]>) -> Result<Self> {
        let float = generators
            .iter()
            .map(|g| {
                let c = |k: usize| T::from_f64(g[k].value()).ok_or(Error::NonFinite);
                Ok(HeisenbergElement::new(c(0)?, c(1)?, c(2)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let fixed = generators
            .iter()
            .map(|g| [g[0].fixed(), g[1].fixed(), g[2].fixed()])
            .collect();
        Self::build(float, fixed)
    }

    fn build(generators: Vec<HeisenbergElement<T>>, fixed: Vec<FixedTriple>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::invalid("a Heisenberg action needs rank ℓ ≥ 1"));
        }
        for (i, g) in generators.iter().enumerate() {
            for h in &generators[i + 1..] {
                let c = (g.x * h.y - h.x * g.y).to_f64().ok_or(Error::NonFinite)?;
                if !c.is_finite() {
                    return Err(Error::NonFinite);
                }
                if (c - c.round()).abs() > COMMUTATOR_TOL {
                    return Err(Error::NotCommuting);
                }
            }
        }
        Ok(HeisenbergAction { generators, fixed })
    }

    /// The ℤ-action by left translation with `g`.
    pub fn translation(g: HeisenbergElement<T>) -> Result<Self> {
        Self::new(vec![g])
    }

    pub fn generators(&self) -> &[HeisenbergElement<T>] {
        &self.generators
    }

    fn apply_fixed_path(&self, n: &[i128], x: &NilPoint<T>) -> Result<NilPoint<T>> {
        let mut acc = [
            Fixed::from_float(x.rep.x)?,
            Fixed::from_float(x.rep.y)?,
            Fixed::from_float(x.rep.z)?,
        ];
        for (g, &k) in self.fixed.iter().zip(n).rev() {
            acc = fixed_mul(&fixed_pow(g, k)?, &acc)?;
        }
        let r = fixed_reduce(&acc)?;
        Ok(NilPoint {
            rep: HeisenbergElement::new(r[0].frac_to(), r[1].frac_to(), r[2].frac_to()),
        })
    }
}

impl<T: Real + Scalar> LatticeAction<T> for HeisenbergAction<T> {
    type Space = NilSpace;

    fn space(&self) -> &NilSpace {
        &NilSpace
    }

    fn rank(&self) -> usize {
        self.generators.len()
    }

    fn apply(&self, n: &[i128], x: &NilPoint<T>) -> Result<NilPoint<T>> {
        check_len(self.generators.len(), n.len())?;
        if n.iter().any(|k| k.abs() > FIXED_POWER_THRESHOLD) {
            return self.apply_fixed_path(n, x);
        }
        let mut acc = x.rep;
        for (g, &k) in self.generators.iter().zip(n).rev() {
            acc = heis_mul(&heis_pow(g, k as i64), &acc);
        }
        Ok(nil_reduce(&acc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    type Q = HeisenbergElement<Ratio<i64>>;

    fn q(x: i64, y: i64, z: i64) -> Q {
        HeisenbergElement::new(
            Ratio::from_integer(x),
            Ratio::from_integer(y),
            Ratio::from_integer(z),
        )
    }

    #[test]
    fn group_law_examples() {
        assert_eq!(heis_mul(&q(1, 0, 0), &q(0, 1, 0)), q(1, 1, 1));
        assert_eq!(heis_mul(&q(0, 1, 0), &q(1, 0, 0)), q(1, 1, 0));
        let g = HeisenbergElement::new(Ratio::new(3, 10), Ratio::new(7, 10), Ratio::new(1, 5));
        assert_eq!(g.mul(&g.inverse()), Q::identity());
        assert_eq!(heis_pow(&q(1, 1, 0), 3), q(3, 3, 3));
        assert_eq!(heis_pow(&g, 0), Q::identity());
        assert_eq!(heis_pow(&g, -1), g.inverse());
    }

    #[test]
    fn reduce_examples() {
        let h = |x: i64, y: i64, z: i64| {
            HeisenbergElement::new(Ratio::new(x, 2), Ratio::new(y, 2), Ratio::new(z, 2))
        };
        assert_eq!(*nil_reduce(&h(1, 1, 1)).rep(), h(1, 1, 1));
        assert_eq!(*nil_reduce(&h(3, 1, 1)).rep(), h(1, 1, 1));
        let g = h(1, 1, 1);
        for gamma in [q(2, -3, 5), q(-1, 4, 0), q(0, 0, -7)] {
            assert_eq!(nil_reduce(&g.mul(&gamma)), nil_reduce(&g));
        }
    }

    #[test]
    fn commutation_is_checked() {
        let a = HeisenbergElement::new(0.5_f64, 0.0, 0.0);
        let b = HeisenbergElement::new(0.0_f64, 0.5, 0.0);
        assert!(matches!(
            HeisenbergAction::new(vec![a, b]),
            Err(Error::NotCommuting)
        ));
        let c = HeisenbergElement::new(0.0_f64, 2.0, 0.0);
        let act = HeisenbergAction::new(vec![a, c]).unwrap();
        crate::systems::check_actions_commute::<f64, _>(&[act], 3).unwrap();
    }

    #[test]
    fn fixed_path_agrees_at_threshold() {
        let g = HeisenbergElement::new(
            std::f64::consts::SQRT_2 - 1.0,
            0.25 * std::f64::consts::PI,
            0.1,
        );
        let act = HeisenbergAction::translation(g).unwrap();
        let x = NilPoint::new(HeisenbergElement::new(0.2, 0.4, 0.6));
        let n = FIXED_POWER_THRESHOLD;
        let float = act.apply(&[n], &x).unwrap();
        let fixed = act.apply_fixed_path(&[n], &x).unwrap();
        assert!(Space::<f64>::distance(&NilSpace, &float, &fixed) < 1e-4);
        let far = act.apply(&[n * 1000], &x).unwrap();
        for c in [far.rep().x, far.rep().y, far.rep().z] {
            assert!((0.0..1.0).contains(&c));
        }
    }
}
