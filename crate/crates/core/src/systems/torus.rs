use super::{check_index, check_len, FlowFamily, LatticeAction, Space};
use crate::error::{Error, Result};
use crate::fixed::Fixed;
use crate::poly::Coefficient;
use crate::scalar::{circle_dist, clamp_unit, Real};

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedMul, Zero};

/// A point of the torus `𝕋^D`, coordinates in `[0, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusPoint<T> {
    coords: Vec<T>,
}

impl<T: Real> TorusPoint<T> {
    /// Reduces every coordinate modulo 1.
    pub fn new(coords: Vec<T>) -> Self {
        TorusPoint {
            coords: coords
                .into_iter()
                .map(|c| clamp_unit(c - c.floor()))
                .collect(),
        }
    }

    pub fn origin(dim: usize) -> Self {
        TorusPoint {
            coords: vec![T::zero(); dim],
        }
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Translation by a fixed-point vector; the single reduction point for
    /// torus orbits. The sum is formed exactly and rounded once.
    pub fn translate(&self, shift: &[Fixed]) -> Result<Self> {
        let coords = self
            .coords
            .iter()
            .zip(shift)
            .map(|(c, s)| Ok(Fixed::from_float(*c)?.add(*s)?.frac_nearest::<T>()))
            .collect::<Result<Vec<T>>>()?;
        Ok(TorusPoint { coords })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TorusSpace {
    pub dim: usize,
}

impl<T: Real> Space<T> for TorusSpace {
    type Point = TorusPoint<T>;

    fn dim(&self) -> usize {
        self.dim
    }

    fn point(&self, u: &[T]) -> TorusPoint<T> {
        TorusPoint::new(u.to_vec())
    }

    fn distance(&self, a: &TorusPoint<T>, b: &TorusPoint<T>) -> T {
        a.coords
            .iter()
            .zip(&b.coords)
            .map(|(x, y)| circle_dist(*x, *y))
            .fold(T::zero(), T::max)
    }

    fn check(&self, x: &TorusPoint<T>) -> Result<()> {
        check_len(self.dim, x.dim())
    }
}

/// The rotation action `n · x = x + nᵀA mod 1` of ℤ^ℓ on `𝕋^D`.
///
/// Row `k` of the angle table is the translation of generator `k`. Angles
/// are tagged coefficients so translations by large `n` are computed in
/// fixed point from the exact (or 128-bit) angle.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusAction {
    space: TorusSpace,
    angles: Vec<Vec<Coefficient>>,
}

impl TorusAction {
    pub fn new(angles: Vec<Vec<Coefficient>>) -> Result<Self> {
        let dim = angles
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::invalid("a torus action needs rank ℓ ≥ 1"))?;
        if dim == 0 {
            return Err(Error::invalid("torus dimension must be ≥ 1"));
        }
        for row in &angles {
            check_len(dim, row.len())?;
        }
        Ok(TorusAction {
            space: TorusSpace { dim },
            angles,
        })
    }

    /// The circle rotation `x ↦ x + angle`.
    pub fn rotation(angle: Coefficient) -> Self {
        TorusAction::new(vec![vec![angle]]).expect("1×1 table")
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    pub fn angles(&self) -> &[Vec<Coefficient>] {
        &self.angles
    }

    /// `nᵀA`. Rational angles contribute exactly; the others through their
    /// 128-bit expansions.
    pub fn shift(&self, n: &[i128]) -> Result<Vec<Fixed>> {
        check_len(self.angles.len(), n.len())?;
        let overflow = || Error::Overflow("torus shift");
        let mut exact = vec![Ratio::<i128>::zero(); self.dim()];
        let mut shift = vec![Fixed::ZERO; self.dim()];
        for (row, &k) in self.angles.iter().zip(n) {
            if k == 0 {
                continue;
            }
            for ((s, e), a) in shift.iter_mut().zip(exact.iter_mut()).zip(row) {
                match a.as_rational() {
                    Some(r) => {
                        let r = Ratio::new(*r.numer() as i128, *r.denom() as i128);
                        let term = r.checked_mul(&Ratio::from_integer(k)).ok_or_else(overflow)?;
                        *e = e.checked_add(&term).ok_or_else(overflow)?;
                    }
                    None => *s = s.add(a.fixed().mul_int(k)?)?,
                }
            }
        }
        shift
            .into_iter()
            .zip(exact)
            .map(|(s, e)| s.add(Fixed::from_ratio(*e.numer(), *e.denom())?))
            .collect()
    }

    /// The inverse action `n ↦ T^{−n}`.
    pub fn inverse(&self) -> Self {
        TorusAction {
            space: self.space,
            angles: self
                .angles
                .iter()
                .map(|row| row.iter().map(Coefficient::neg).collect())
                .collect(),
        }
    }

    /// The ℤ^{ℓ₁+…+ℓ_m}-action `T^{(n_1,…,n_m)} = T_1^{n_1}⋯T_m^{n_m}`.
    pub fn stack(actions: &[TorusAction]) -> Result<Self> {
        let dim = actions
            .first()
            .map(TorusAction::dim)
            .ok_or_else(|| Error::invalid("nothing to stack"))?;
        let mut angles = Vec::new();
        for a in actions {
            check_len(dim, a.dim())?;
            angles.extend(a.angles.iter().cloned());
        }
        TorusAction::new(angles)
    }
}

impl<T: Real> LatticeAction<T> for TorusAction {
    type Space = TorusSpace;

    fn space(&self) -> &TorusSpace {
        &self.space
    }

    fn rank(&self) -> usize {
        self.angles.len()
    }

    fn apply(&self, n: &[i128], x: &TorusPoint<T>) -> Result<TorusPoint<T>> {
        Space::<T>::check(&self.space, x)?;
        x.translate(&self.shift(n)?)
    }

    fn as_torus(&self) -> Option<&TorusAction> {
        Some(self)
    }
}

/// Translation flows `S_i^t x = x + tᵀA_i mod 1`, `t ∈ ℝ^ℓ`, on `𝕋^D`.
/// Translations commute, so any family of angle tables is admissible.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusFlow {
    space: TorusSpace,
    rank: usize,
    angles: Vec<Vec<Vec<Coefficient>>>,
}

impl TorusFlow {
    /// `angles[i]` is the `ℓ × D` table of flow `i`.
    pub fn new(angles: Vec<Vec<Vec<Coefficient>>>) -> Result<Self> {
        let first = angles
            .first()
            .ok_or_else(|| Error::invalid("a flow family needs m ≥ 1"))?;
        let rank = first.len();
        let dim = first
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::invalid("a flow needs rank ℓ ≥ 1"))?;
        for table in &angles {
            check_len(rank, table.len())?;
            for row in table {
                check_len(dim, row.len())?;
            }
        }
        Ok(TorusFlow {
            space: TorusSpace { dim },
            rank,
            angles,
        })
    }

    /// One circle flow `x ↦ x + t·speed`.
    pub fn circle(speed: Coefficient) -> Self {
        TorusFlow::new(vec![vec![vec![speed]]]).expect("1×1×1 table")
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    pub fn angles(&self, i: usize) -> &[Vec<Coefficient>] {
        &self.angles[i]
    }

    /// `tᵀA_i` in fixed point.
    pub fn shift(&self, i: usize, t: &[Fixed]) -> Result<Vec<Fixed>> {
        check_index(i, self.angles.len())?;
        check_len(self.rank, t.len())?;
        let mut shift = vec![Fixed::ZERO; self.dim()];
        for (row, tj) in self.angles[i].iter().zip(t) {
            for (s, a) in shift.iter_mut().zip(row) {
                *s = s.add(a.fixed().mul(*tj)?)?;
            }
        }
        Ok(shift)
    }
}

impl<T: Real> FlowFamily<T> for TorusFlow {
    type Space = TorusSpace;

    fn space(&self) -> &TorusSpace {
        &self.space
    }

    fn count(&self) -> usize {
        self.angles.len()
    }

    fn rank(&self) -> usize {
        self.rank
    }

    fn apply_fixed(&self, i: usize, t: &[Fixed], x: &TorusPoint<T>) -> Result<TorusPoint<T>> {
        Space::<T>::check(&self.space, x)?;
        x.translate(&self.shift(i, t)?)
    }

    fn as_torus(&self) -> Option<&TorusFlow> {
        Some(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::check_flows_commute;

    fn rot(text: &str) -> TorusAction {
        TorusAction::rotation(Coefficient::parse(text).unwrap())
    }

    #[test]
    fn example_rotation() {
        let t = rot("1/2*sqrt(2)");
        let y = t.apply(&[1], &TorusPoint::<f64>::origin(1)).unwrap();
        assert!((y.coords()[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-16);
    }

    #[test]
    fn zero_is_identity() {
        let t = rot("sqrt(3)");
        let x = TorusPoint::new(vec![0.123_f64]);
        assert_eq!(t.apply(&[0], &x).unwrap(), x);
    }

    #[test]
    fn rational_rotation_returns() {
        let t = TorusAction::new(vec![vec![
            Coefficient::rational(1, 3).unwrap(),
            Coefficient::zero(),
        ]])
        .unwrap();
        let x = TorusPoint::new(vec![0.0_f64, 0.5]);
        assert_eq!(t.apply(&[3], &x).unwrap(), x);
    }

    #[test]
    fn dimension_mismatch() {
        let t = rot("sqrt(2)");
        let x = TorusPoint::new(vec![0.0_f64]);
        assert!(matches!(
            t.apply(&[1, 2], &x),
            Err(Error::DimensionMismatch { .. })
        ));
        let y = TorusPoint::new(vec![0.0_f64, 0.0]);
        assert!(t.apply(&[1], &y).is_err());
    }

    #[test]
    fn flow_examples() {
        let f = TorusFlow::new(vec![vec![vec![Coefficient::integer(1)], vec![Coefficient::zero()]]])
            .unwrap();
        let x = TorusPoint::new(vec![0.5_f64]);
        let y = f.apply_flow(0, &[0.25, 0.0], &x).unwrap();
        assert_eq!(y.coords(), &[0.75]);
        assert_eq!(f.apply_flow(0, &[0.0, 0.0], &x).unwrap(), x);

        let g = TorusFlow::circle(Coefficient::sqrt(2));
        let o = TorusPoint::<f64>::origin(1);
        let a = g.apply_flow(0, &[0.3], &g.apply_flow(0, &[0.9], &o).unwrap()).unwrap();
        let b = g.apply_flow(0, &[1.2], &o).unwrap();
        assert!((a.coords()[0] - 0.697_056_274_847_714).abs() < 1e-12);
        assert!((b.coords()[0] - 0.697_056_274_847_714).abs() < 1e-12);
        assert!(matches!(
            g.apply_flow(1, &[0.0], &o),
            Err(Error::IndexOutOfRange { .. })
        ));
        check_flows_commute::<f64, _>(&g, 7).unwrap();
    }
}
