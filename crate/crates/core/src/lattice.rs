//! Uniform sampling lattices, their dual frequency lattices, and sampled fields.
//!
//! Every integral in the crate is a left-endpoint Riemann sum on one of these
//! lattices: `∫ f ≈ Δⁿ Σ f(t_j)`. Storage is row-major with the last axis
//! fastest.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatticeRecord")]
pub struct Lattice {
    origin: Vec<f64>,
    step: Vec<f64>,
    count: Vec<usize>,
}

#[derive(Deserialize)]
struct LatticeRecord {
    origin: Vec<f64>,
    step: Vec<f64>,
    count: Vec<usize>,
}

impl TryFrom<LatticeRecord> for Lattice {
    type Error = Error;

    fn try_from(r: LatticeRecord) -> Result<Self> {
        Lattice::new(r.origin, r.step, r.count)
    }
}

#[derive(Deserialize)]
struct FrequencyRecord {
    step: Vec<f64>,
    count: Vec<usize>,
}

impl TryFrom<FrequencyRecord> for FrequencyLattice {
    type Error = Error;

    fn try_from(r: FrequencyRecord) -> Result<Self> {
        FrequencyLattice::new(r.step, r.count)
    }
}

impl Lattice {
    pub fn new(origin: Vec<f64>, step: Vec<f64>, count: Vec<usize>) -> Result<Self> {
        let n = origin.len();
        if n == 0 {
            return Err(Error::InvalidLattice("dimension must be positive".into()));
        }
        if step.len() != n || count.len() != n {
            return Err(Error::InvalidLattice(format!(
                "origin/step/count lengths differ ({}, {}, {})",
                n,
                step.len(),
                count.len()
            )));
        }
        if let Some(a) = step.iter().position(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidLattice(format!(
                "step[{a}] = {} is not strictly positive",
                step[a]
            )));
        }
        if let Some(a) = count.iter().position(|&c| c < 2) {
            return Err(Error::InvalidLattice(format!("count[{a}] = {} < 2", count[a])));
        }
        if let Some(a) = origin.iter().position(|o| !o.is_finite()) {
            return Err(Error::InvalidLattice(format!("origin[{a}] is not finite")));
        }
        Ok(Self {
            origin,
            step,
            count,
        })
    }

    /// Lattice with `count` points per axis centered so that `0` is a sample:
    /// origin `-⌊N/2⌋·Δ`.
    pub fn centered(step: Vec<f64>, count: Vec<usize>) -> Result<Self> {
        let origin = step
            .iter()
            .zip(&count)
            .map(|(&s, &c)| -((c / 2) as f64) * s)
            .collect();
        Self::new(origin, step, count)
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn step(&self) -> &[f64] {
        &self.step
    }

    pub fn count(&self) -> &[usize] {
        &self.count
    }

    pub fn len(&self) -> usize {
        self.count.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `∏ Δ_a`.
    pub fn cell_volume(&self) -> f64 {
        self.step.iter().product()
    }

    /// Last point along each axis.
    pub fn end(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|a| self.origin[a] + (self.count[a] - 1) as f64 * self.step[a])
            .collect()
    }

    pub fn axis_coord(&self, axis: usize, j: usize) -> f64 {
        self.origin[axis] + j as f64 * self.step[axis]
    }

    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.count[axis])
            .map(|j| self.axis_coord(axis, j))
            .collect()
    }

    pub fn point(&self, index: &[usize]) -> Vec<f64> {
        index
            .iter()
            .enumerate()
            .map(|(a, &j)| self.axis_coord(a, j))
            .collect()
    }

    pub fn point_flat(&self, flat: usize) -> Vec<f64> {
        self.point(&self.unravel(flat))
    }

    /// Fills `out` with the point at flat index `flat` without allocating.
    pub fn point_flat_into(&self, mut flat: usize, out: &mut [f64]) {
        for a in (0..self.dim()).rev() {
            let j = flat % self.count[a];
            flat /= self.count[a];
            out[a] = self.axis_coord(a, j);
        }
    }

    pub fn ravel(&self, index: &[usize]) -> usize {
        index
            .iter()
            .zip(&self.count)
            .fold(0, |acc, (&j, &c)| acc * c + j)
    }

    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            idx[a] = flat % self.count[a];
            flat /= self.count[a];
        }
        idx
    }

    /// Multi-index of `p` if it is (to rounding) a lattice point.
    pub fn index_of(&self, p: &[f64]) -> Option<Vec<usize>> {
        if p.len() != self.dim() {
            return None;
        }
        let mut idx = Vec::with_capacity(self.dim());
        for a in 0..self.dim() {
            let r = (p[a] - self.origin[a]) / self.step[a];
            let j = r.round();
            if (r - j).abs() > 1e-9 || j < 0.0 || j >= self.count[a] as f64 {
                return None;
            }
            idx.push(j as usize);
        }
        Some(idx)
    }

    pub fn dual(&self) -> FrequencyLattice {
        FrequencyLattice {
            step: self
                .step
                .iter()
                .zip(&self.count)
                .map(|(&d, &c)| 1.0 / (c as f64 * d))
                .collect(),
            count: self.count.clone(),
        }
    }

    /// Same sampling geometry up to `rel` relative tolerance on floats.
    pub fn approx_eq(&self, other: &Lattice, rel: f64) -> bool {
        self.count == other.count
            && close_all(&self.step, &other.step, rel)
            && self
                .origin
                .iter()
                .zip(&other.origin)
                .zip(&self.step)
                .all(|((a, b), s)| (a - b).abs() <= rel * s.max(a.abs()))
    }
}

fn close_all(a: &[f64], b: &[f64], rel: f64) -> bool {
    a.len() == b.len()
        && a
            .iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= rel * x.abs().max(y.abs()))
}

/// Frequencies dual to a [`Lattice`], reported in centered order with
/// physical units: bin `m ∈ [-⌊N/2⌋, ⌈N/2⌉)` sits at `m·Δξ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FrequencyRecord")]
pub struct FrequencyLattice {
    step: Vec<f64>,
    count: Vec<usize>,
}

impl FrequencyLattice {
    pub fn new(step: Vec<f64>, count: Vec<usize>) -> Result<Self> {
        if step.len() != count.len() || step.is_empty() {
            return Err(Error::InvalidLattice("frequency lattice shape".into()));
        }
        if step.iter().any(|&s| !(s > 0.0 && s.is_finite())) || count.iter().any(|&c| c < 2) {
            return Err(Error::InvalidLattice(
                "frequency steps must be positive and counts ≥ 2".into(),
            ));
        }
        Ok(Self { step, count })
    }

    pub fn dim(&self) -> usize {
        self.step.len()
    }

    pub fn step(&self) -> &[f64] {
        &self.step
    }

    pub fn count(&self) -> &[usize] {
        &self.count
    }

    pub fn len(&self) -> usize {
        self.count.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.step.iter().product()
    }

    pub fn nyquist(&self, axis: usize) -> f64 {
        0.5 * self.step[axis] * self.count[axis] as f64
    }

    pub fn min_nyquist(&self) -> f64 {
        (0..self.dim())
            .map(|a| self.nyquist(a))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_step(&self) -> f64 {
        self.step.iter().copied().fold(0.0, f64::max)
    }

    /// Signed bin number of centered position `c` along `axis`.
    pub fn bin(&self, axis: usize, c: usize) -> i64 {
        c as i64 - (self.count[axis] / 2) as i64
    }

    pub fn axis_freq(&self, axis: usize, c: usize) -> f64 {
        self.bin(axis, c) as f64 * self.step[axis]
    }

    pub fn point(&self, index: &[usize]) -> Vec<f64> {
        index
            .iter()
            .enumerate()
            .map(|(a, &c)| self.axis_freq(a, c))
            .collect()
    }

    pub fn point_flat(&self, flat: usize) -> Vec<f64> {
        self.point(&self.unravel(flat))
    }

    pub fn ravel(&self, index: &[usize]) -> usize {
        index
            .iter()
            .zip(&self.count)
            .fold(0, |acc, (&j, &c)| acc * c + j)
    }

    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            idx[a] = flat % self.count[a];
            flat /= self.count[a];
        }
        idx
    }

    /// Centered multi-index of frequency `xi` if it is a lattice bin.
    pub fn index_of(&self, xi: &[f64]) -> Option<Vec<usize>> {
        if xi.len() != self.dim() {
            return None;
        }
        let mut idx = Vec::with_capacity(self.dim());
        for a in 0..self.dim() {
            let r = xi[a] / self.step[a];
            let m = r.round();
            if (r - m).abs() > 1e-9 {
                return None;
            }
            let c = m as i64 + (self.count[a] / 2) as i64;
            if c < 0 || c >= self.count[a] as i64 {
                return None;
            }
            idx.push(c as usize);
        }
        Some(idx)
    }

    /// Permutation from centered flat index to natural FFT flat index
    /// (bin `m` stored at `m mod N`).
    pub(crate) fn fft_permutation(&self) -> Vec<usize> {
        let n = self.dim();
        let mut perm = vec![0usize; self.len()];
        let mut idx = vec![0usize; n];
        for (c_flat, slot) in perm.iter_mut().enumerate() {
            let mut rem = c_flat;
            for a in (0..n).rev() {
                idx[a] = rem % self.count[a];
                rem /= self.count[a];
            }
            let mut f = 0usize;
            for a in 0..n {
                let nn = self.count[a] as i64;
                let m = self.bin(a, idx[a]);
                f = f * self.count[a] + m.rem_euclid(nn) as usize;
            }
            *slot = f;
        }
        perm
    }

    pub fn approx_eq(&self, other: &FrequencyLattice, rel: f64) -> bool {
        self.count == other.count && close_all(&self.step, &other.step, rel)
    }
}

/// Complex samples of a function on a [`Lattice`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub lattice: Lattice,
    pub values: Vec<Complex64>,
    pub label: String,
}

impl SampledField {
    pub fn new(lattice: Lattice, values: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a lattice of {} points",
                values.len(),
                lattice.len()
            )));
        }
        Ok(Self {
            lattice,
            values,
            label: label.into(),
        })
    }

    pub fn zeros(lattice: Lattice, label: impl Into<String>) -> Self {
        let n = lattice.len();
        Self {
            lattice,
            values: vec![Complex64::new(0.0, 0.0); n],
            label: label.into(),
        }
    }

    pub fn from_real(lattice: Lattice, values: &[f64], label: impl Into<String>) -> Result<Self> {
        let values = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Self::new(lattice, values, label)
    }

    pub fn from_fn<F>(lattice: Lattice, label: impl Into<String>, mut f: F) -> Self
    where
        F: FnMut(&[f64]) -> Complex64,
    {
        let mut p = vec![0.0; lattice.dim()];
        let values = (0..lattice.len())
            .map(|j| {
                lattice.point_flat_into(j, &mut p);
                f(&p)
            })
            .collect();
        Self {
            lattice,
            values,
            label: label.into(),
        }
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    /// `Δⁿ Σ |f|²`.
    pub fn norm_l2_sq(&self) -> f64 {
        self.lattice.cell_volume() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    pub fn norm_l2(&self) -> f64 {
        self.norm_l2_sq().sqrt()
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        Self {
            lattice: self.lattice.clone(),
            values: self.values.iter().map(|v| v * alpha).collect(),
            label: self.label.clone(),
        }
    }

    /// Relative L² distance `‖self − other‖ / ‖other‖` on a shared lattice.
    pub fn rel_l2_error(&self, reference: &SampledField) -> Result<f64> {
        check_same_lattice(&self.lattice, &reference.lattice)?;
        let num: f64 = self
            .values
            .iter()
            .zip(&reference.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = reference.values.iter().map(|v| v.norm_sqr()).sum();
        if den == 0.0 {
            return Ok(if num == 0.0 { 0.0 } else { f64::INFINITY });
        }
        Ok((num / den).sqrt())
    }
}

/// Left-endpoint Riemann sum `Δⁿ Σ f(t_j)`.
pub fn riemann_integral(field: &SampledField) -> Complex64 {
    field.values.iter().sum::<Complex64>() * field.lattice.cell_volume()
}

/// `(a, b) = Δⁿ Σ a · conj(b)`.
pub fn inner_product(a: &SampledField, b: &SampledField) -> Result<Complex64> {
    check_same_lattice(&a.lattice, &b.lattice)?;
    let s: Complex64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| x * y.conj())
        .sum();
    Ok(s * a.lattice.cell_volume())
}

pub(crate) fn check_same_lattice(a: &Lattice, b: &Lattice) -> Result<()> {
    if a.approx_eq(b, 1e-12) {
        Ok(())
    } else {
        Err(Error::LatticeMismatch(format!("{a:?} vs {b:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn points_of_small_1d_lattice() {
        let l = Lattice::new(vec![-1.0], vec![0.5], vec![4]).unwrap();
        let pts: Vec<f64> = (0..4).map(|j| l.point(&[j])[0]).collect();
        assert_eq!(pts, vec![-1.0, -0.5, 0.0, 0.5]);
    }

    #[test]
    fn rejects_bad_steps_and_counts() {
        assert!(Lattice::new(vec![0.0], vec![0.0], vec![4]).is_err());
        assert!(Lattice::new(vec![0.0], vec![-1.0], vec![4]).is_err());
        assert!(Lattice::new(vec![0.0], vec![1.0], vec![1]).is_err());
        assert!(Lattice::new(vec![0.0, 0.0], vec![1.0], vec![4, 4]).is_err());
    }

    #[test]
    fn dual_steps_and_nyquist() {
        let l = Lattice::new(vec![0.0], vec![0.1], vec![100]).unwrap();
        let d = l.dual();
        assert_abs_diff_eq!(d.step()[0], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(d.nyquist(0), 5.0, epsilon = 1e-12);

        let l2 = Lattice::new(vec![0.0, 0.0], vec![0.5, 0.25], vec![8, 16]).unwrap();
        assert_eq!(l2.dual().step(), &[0.25, 0.25]);
    }

    #[test]
    fn dual_product_is_one() {
        for (d, n) in [(0.1, 100usize), (0.125, 128), (1.0 / 3.0, 7), (0.0625, 256)] {
            let l = Lattice::new(vec![0.0], vec![d], vec![n]).unwrap();
            let p = l.dual().step()[0] * d * n as f64;
            assert!((p - 1.0).abs() <= 2.0 * f64::EPSILON, "{p}");
        }
    }

    #[test]
    fn centered_frequency_bins() {
        let f = Lattice::new(vec![0.0], vec![1.0], vec![5]).unwrap().dual();
        let bins: Vec<i64> = (0..5).map(|c| f.bin(0, c)).collect();
        assert_eq!(bins, vec![-2, -1, 0, 1, 2]);
        let f = Lattice::new(vec![0.0], vec![1.0], vec![4]).unwrap().dual();
        let bins: Vec<i64> = (0..4).map(|c| f.bin(0, c)).collect();
        assert_eq!(bins, vec![-2, -1, 0, 1]);
        assert_eq!(f.fft_permutation(), vec![2, 3, 0, 1]);
    }

    #[test]
    fn integral_of_zero_and_constant() {
        let l = Lattice::new(vec![0.0], vec![0.1], vec![10]).unwrap();
        assert_eq!(riemann_integral(&SampledField::zeros(l.clone(), "")), Complex64::new(0.0, 0.0));
        let one = SampledField::from_fn(l, "one", |_| Complex64::new(1.0, 0.0));
        assert_abs_diff_eq!(riemann_integral(&one).re, 1.0, epsilon = 1e-14);
    }

    fn gaussian_2d(step: f64) -> SampledField {
        let n = (16.0 / step).round() as usize;
        let l = Lattice::new(vec![-8.0, -8.0], vec![step, step], vec![n, n]).unwrap();
        let c = 1.0 / (2.0 * std::f64::consts::PI);
        SampledField::from_fn(l, "g", |p| {
            Complex64::new(c * (-(p[0] * p[0] + p[1] * p[1]) / 2.0).exp(), 0.0)
        })
    }

    #[test]
    fn gaussian_integral_matches_fine_oracle() {
        let coarse = riemann_integral(&gaussian_2d(0.0625)).re;
        let fine = riemann_integral(&gaussian_2d(0.0625 / 4.0)).re;
        assert_abs_diff_eq!(coarse, fine, epsilon = 1e-10);
        assert_abs_diff_eq!(coarse, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn orthogonal_exponentials() {
        let n = 32;
        let l = Lattice::new(vec![0.0], vec![1.0 / n as f64], vec![n]).unwrap();
        let e = |k: f64| {
            SampledField::from_fn(l.clone(), "", move |p| {
                Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k * p[0])
            })
        };
        let ip = inner_product(&e(3.0), &e(5.0)).unwrap();
        assert!(ip.norm() < 1e-12);
        let ip = inner_product(&e(3.0), &e(3.0)).unwrap();
        assert_abs_diff_eq!(ip.re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn unit_norm_gaussian_self_product() {
        // ‖exp(-t²/2)‖² = √π over ℝ.
        let l = Lattice::new(vec![-10.0], vec![0.01], vec![2000]).unwrap();
        let c = std::f64::consts::PI.powf(-0.25);
        let g = SampledField::from_fn(l, "", |p| Complex64::new(c * (-p[0] * p[0] / 2.0).exp(), 0.0));
        let ip = inner_product(&g, &g).unwrap();
        assert_abs_diff_eq!(ip.re, 1.0, epsilon = 1e-8);
        assert_eq!(ip.im, 0.0);
        assert_abs_diff_eq!(ip.re, g.norm_l2_sq(), epsilon = 1e-15);
    }

    #[test]
    fn mismatched_lattices_rejected() {
        let a = SampledField::zeros(Lattice::new(vec![0.0], vec![1.0], vec![4]).unwrap(), "");
        let b = SampledField::zeros(Lattice::new(vec![0.0], vec![1.0], vec![5]).unwrap(), "");
        assert!(matches!(inner_product(&a, &b), Err(Error::LatticeMismatch(_))));
    }

    fn arb_lattice() -> impl Strategy<Value = Lattice> {
        prop::collection::vec((-5.0f64..5.0, 0.01f64..2.0, 2usize..7), 1..4).prop_map(|axes| {
            let (o, (s, c)): (Vec<_>, (Vec<_>, Vec<_>)) =
                axes.into_iter().map(|(o, s, c)| (o, (s, c))).unzip();
            Lattice::new(o, s, c).unwrap()
        })
    }

    fn arb_field() -> impl Strategy<Value = (SampledField, SampledField)> {
        arb_lattice().prop_flat_map(|l| {
            let n = l.len();
            (
                prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n),
                prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n),
            )
                .prop_map(move |(a, b)| {
                    let mk = |v: Vec<(f64, f64)>| {
                        SampledField::new(
                            l.clone(),
                            v.into_iter().map(|(r, i)| Complex64::new(r, i)).collect(),
                            "",
                        )
                        .unwrap()
                    };
                    (mk(a), mk(b))
                })
        })
    }

    proptest! {
        #[test]
        fn index_point_round_trip(l in arb_lattice()) {
            for flat in 0..l.len() {
                let idx = l.unravel(flat);
                prop_assert_eq!(l.ravel(&idx), flat);
                prop_assert_eq!(l.index_of(&l.point(&idx)), Some(idx));
            }
        }

        #[test]
        fn integral_is_linear((a, b) in arb_field(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let combo = SampledField::new(
                a.lattice.clone(),
                a.values.iter().zip(&b.values).map(|(x, y)| x * alpha + y * beta).collect(),
                "",
            ).unwrap();
            let lhs = riemann_integral(&combo);
            let rhs = riemann_integral(&a) * alpha + riemann_integral(&b) * beta;
            let scale = 1.0 + (riemann_integral(&a).norm() + riemann_integral(&b).norm()) * 3.0;
            prop_assert!((lhs - rhs).norm() <= 1e-12 * scale * a.lattice.len() as f64);
        }

        #[test]
        fn inner_product_conjugate_symmetric((a, b) in arb_field()) {
            let ab = inner_product(&a, &b).unwrap();
            let ba = inner_product(&b, &a).unwrap();
            prop_assert!((ab - ba.conj()).norm() <= 1e-12 * (1.0 + ab.norm()));
        }
    }
}
