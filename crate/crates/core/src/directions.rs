//! Direction frames and the change of variables `t = C s` that turns a
//! transform along `u₁..u_k` into one along the first `k` coordinate axes.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, SampledField};

const RANK_TOL: f64 = 1e-10;
const DET_TOL: f64 = 1e-10;

/// How rows `k+1..n` of `B` were filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Completion {
    /// Unit rows `e_{k+1}..e_n`.
    Identity,
    /// Orthonormal basis of the orthogonal complement of `span(u)`.
    Orthonormal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionFrame {
    n: usize,
    u: Vec<Vec<f64>>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    det_c: f64,
    completion: Completion,
}

impl DirectionFrame {
    /// Normalizes `u`, completes `B` with unit rows, and falls back to an
    /// orthonormal completion when that `B` is singular.
    pub fn new(u: &[Vec<f64>], n: usize) -> Result<Self> {
        match Self::with_identity_completion(u, n) {
            Err(Error::SingularB { .. }) => {
                let u = normalize_all(u, n)?;
                let rows = orthonormal_completion(&u, n);
                Self::from_rows(u, rows, n, Completion::Orthonormal)
            }
            other => other,
        }
    }

    /// Strict construction: rows `k+1..n` of `B` are always `e_{k+1}..e_n`.
    pub fn with_identity_completion(u: &[Vec<f64>], n: usize) -> Result<Self> {
        let u = normalize_all(u, n)?;
        let rows = (u.len()..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                e
            })
            .collect();
        Self::from_rows(u, rows, n, Completion::Identity)
    }

    /// The frame `e₁..e_k` in `ℝⁿ`.
    pub fn canonical(k: usize, n: usize) -> Result<Self> {
        let u: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect();
        Self::with_identity_completion(&u, n)
    }

    fn from_rows(u: Vec<Vec<f64>>, tail: Vec<Vec<f64>>, n: usize, completion: Completion) -> Result<Self> {
        let k = u.len();
        let a = DMatrix::from_fn(k, n, |i, j| u[i][j]);
        let sv = a.singular_values();
        let sigma_min = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if !(sigma_min > RANK_TOL) {
            return Err(Error::DependentDirections { sigma_min });
        }
        let b = DMatrix::from_fn(n, n, |i, j| if i < k { u[i][j] } else { tail[i - k][j] });
        let det_b = b.determinant();
        if !(det_b.abs() > DET_TOL) {
            return Err(Error::SingularB { det: det_b });
        }
        let c = b.clone().try_inverse().ok_or(Error::SingularB { det: det_b })?;
        Ok(Self {
            n,
            u,
            b,
            c,
            det_c: 1.0 / det_b,
            completion,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.u.len()
    }

    pub fn direction(&self, i: usize) -> &[f64] {
        &self.u[i]
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.u
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn det_c(&self) -> f64 {
        self.det_c
    }

    pub fn completion(&self) -> Completion {
        self.completion
    }

    /// `uᵢ = eᵢ` for every `i`.
    pub fn is_canonical(&self) -> bool {
        self.u
            .iter()
            .enumerate()
            .all(|(i, v)| v.iter().enumerate().all(|(j, &x)| x == if i == j { 1.0 } else { 0.0 }))
    }

    /// `(u₁·t, …, u_k·t)`.
    pub fn project(&self, t: &[f64]) -> Vec<f64> {
        self.u
            .iter()
            .map(|v| v.iter().zip(t).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `η = Cᵀ ξ`.
    pub fn pullback_frequency(&self, xi: &[f64]) -> Vec<f64> {
        let v = self.c.transpose() * DVector::from_column_slice(xi);
        v.iter().copied().collect()
    }

    /// Lattice with the given step covering `B·(box of field_lattice)`.
    pub fn target_lattice_for(&self, field_lattice: &Lattice, step: &[f64]) -> Result<Lattice> {
        let n = self.n;
        if field_lattice.dim() != n || step.len() != n {
            return Err(Error::DimensionMismatch("target lattice dimension".into()));
        }
        let lo = field_lattice.origin();
        let hi = field_lattice.end();
        let mut min = vec![f64::INFINITY; n];
        let mut max = vec![f64::NEG_INFINITY; n];
        for corner in 0..(1usize << n) {
            let t = DVector::from_fn(n, |a, _| if corner >> a & 1 == 1 { hi[a] } else { lo[a] });
            let s = &self.b * t;
            for a in 0..n {
                min[a] = min[a].min(s[a]);
                max[a] = max[a].max(s[a]);
            }
        }
        let count = (0..n)
            .map(|a| (((max[a] - min[a]) / step[a]).ceil() as usize + 1).max(2))
            .collect();
        Lattice::new(min, step.to_vec(), count)
    }

    /// Samples `|det C|·f(C s)` on `target` by multilinear interpolation of
    /// `field`, reading 0 outside the field's box.
    pub fn pushforward(&self, field: &SampledField, target: &Lattice) -> Result<SampledField> {
        let n = self.n;
        if field.lattice.dim() != n || target.dim() != n {
            return Err(Error::DimensionMismatch("pushforward dimension".into()));
        }
        let jac = self.det_c.abs();
        let values = (0..target.len())
            .into_par_iter()
            .map_init(
                || (vec![0.0; n], vec![0.0; n]),
                |(s, t), j| {
                    target.point_flat_into(j, s);
                    for a in 0..n {
                        t[a] = (0..n).map(|b| self.c[(a, b)] * s[b]).sum();
                    }
                    interpolate(field, t) * jac
                },
            )
            .collect();
        SampledField::new(target.clone(), values, format!("pushforward({})", field.label))
    }
}

fn normalize_all(u: &[Vec<f64>], n: usize) -> Result<Vec<Vec<f64>>> {
    let bad = |reason: String| Error::InvalidDirections {
        token: format!("{u:?}"),
        reason,
    };
    if u.is_empty() || u.len() > n {
        return Err(bad(format!("need 1 ≤ k ≤ n = {n}, got k = {}", u.len())));
    }
    u.iter()
        .map(|v| {
            if v.len() != n {
                return Err(bad(format!("vector of length {} in ℝ^{n}", v.len())));
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(bad("zero or non-finite vector".into()));
            }
            Ok(v.iter().map(|x| x / norm).collect())
        })
        .collect()
}

/// Greedy Gram–Schmidt: repeatedly adds the unit vector with the largest
/// residual against the current basis (lowest index on ties).
fn orthonormal_completion(u: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let residual = |basis: &[Vec<f64>], mut v: Vec<f64>| {
        for _ in 0..2 {
            for q in basis {
                let d: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(x, qq)| *x -= d * qq);
            }
        }
        v
    };
    for v in u {
        let r = residual(&basis, v.clone());
        let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        basis.push(r.into_iter().map(|x| x / norm).collect());
    }
    let mut tail = Vec::new();
    while basis.len() < n {
        let best = (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                let r = residual(&basis, e);
                let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
                (norm, r)
            })
            .fold(None::<(f64, Vec<f64>)>, |acc, cand| match acc {
                Some(a) if a.0 >= cand.0 => Some(a),
                _ => Some(cand),
            })
            .expect("n ≥ 1");
        let q: Vec<f64> = best.1.into_iter().map(|x| x / best.0).collect();
        basis.push(q.clone());
        tail.push(q);
    }
    tail
}

/// Multilinear interpolation of `field` at `t`; 0 outside the lattice box.
pub fn interpolate(field: &SampledField, t: &[f64]) -> num_complex::Complex64 {
    let l = &field.lattice;
    let n = l.dim();
    let mut base = vec![0usize; n];
    let mut frac = vec![0.0; n];
    for a in 0..n {
        let r = (t[a] - l.origin()[a]) / l.step()[a];
        let last = (l.count()[a] - 1) as f64;
        if !(r >= 0.0 && r <= last) {
            return num_complex::Complex64::new(0.0, 0.0);
        }
        let j = (r.floor() as usize).min(l.count()[a] - 2);
        base[a] = j;
        frac[a] = r - j as f64;
    }
    let mut acc = num_complex::Complex64::new(0.0, 0.0);
    let mut idx = vec![0usize; n];
    for corner in 0..(1usize << n) {
        let mut w = 1.0;
        for a in 0..n {
            let up = corner >> a & 1 == 1;
            idx[a] = base[a] + up as usize;
            w *= if up { frac[a] } else { 1.0 - frac[a] };
        }
        if w != 0.0 {
            acc += field.values[l.ravel(&idx)] * w;
        }
    }
    acc
}

/// Parses `"0.7071,0.7071;1,0"` into vectors (not yet normalized).
pub fn parse_directions(text: &str) -> Result<Vec<Vec<f64>>> {
    let bad = |reason: String| Error::InvalidDirections {
        token: text.to_string(),
        reason,
    };
    let dirs: Vec<Vec<f64>> = text
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|v| {
            v.split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|_| bad(format!("`{}` is not a number", x.trim()))))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    if dirs.is_empty() {
        return Err(bad("no vectors".into()));
    }
    Ok(dirs)
}

#[derive(Serialize, Deserialize)]
struct FrameRecord {
    n: usize,
    directions: Vec<Vec<f64>>,
    completion: Completion,
}

impl Serialize for DirectionFrame {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FrameRecord {
            n: self.n,
            directions: self.u.clone(),
            completion: self.completion,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DirectionFrame {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = FrameRecord::deserialize(d)?;
        let frame = match r.completion {
            Completion::Identity => DirectionFrame::with_identity_completion(&r.directions, r.n),
            Completion::Orthonormal => DirectionFrame::new(&r.directions, r.n),
        };
        frame.map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn canonical_frame_is_identity() {
        let f = DirectionFrame::new(&[vec![1.0, 0.0]], 2).unwrap();
        assert_eq!(f.b(), &DMatrix::identity(2, 2));
        assert_eq!(f.c(), &DMatrix::identity(2, 2));
        assert_eq!(f.det_c(), 1.0);
        assert!(f.is_canonical());
    }

    #[test]
    fn diagonal_frame_matrices() {
        // Oracle: inverse of [[h,h],[0,1]] is [[1/h,-1],[0,1]].
        let f = DirectionFrame::new(&[vec![H, H]], 2).unwrap();
        let expect_b = [[H, H], [0.0, 1.0]];
        let expect_c = [[std::f64::consts::SQRT_2, -1.0], [0.0, 1.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(f.b()[(i, j)], expect_b[i][j], epsilon = 1e-12);
                assert_abs_diff_eq!(f.c()[(i, j)], expect_c[i][j], epsilon = 1e-12);
            }
        }
        assert_abs_diff_eq!(f.det_c(), std::f64::consts::SQRT_2, epsilon = 1e-12);
        let eta = f.pullback_frequency(&[1.0, 0.0]);
        assert_abs_diff_eq!(eta[0], std::f64::consts::SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(eta[1], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn permutation_frame_has_unit_abs_det() {
        let f = DirectionFrame::new(&[vec![0.0, 1.0], vec![1.0, 0.0]], 2).unwrap();
        assert_abs_diff_eq!(f.det_c(), -1.0, epsilon = 1e-15);
        assert_eq!(f.completion(), Completion::Identity);
    }

    #[test]
    fn singular_identity_completion_falls_back() {
        let strict = DirectionFrame::with_identity_completion(&[vec![0.0, 1.0]], 2);
        assert!(matches!(strict, Err(Error::SingularB { .. })));
        let f = DirectionFrame::new(&[vec![0.0, 1.0]], 2).unwrap();
        assert_eq!(f.completion(), Completion::Orthonormal);
        let bc = f.b() * f.c();
        assert!((bc - DMatrix::<f64>::identity(2, 2)).amax() < 1e-10);
        assert_abs_diff_eq!(f.det_c().abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dependent_directions_rejected() {
        let err = DirectionFrame::new(&[vec![1.0, 1.0], vec![2.0, 2.0]], 2).unwrap_err();
        assert!(matches!(err, Error::DependentDirections { .. }));
        assert!(DirectionFrame::new(&[vec![0.0, 0.0]], 2).is_err());
        assert!(DirectionFrame::new(&[vec![1.0, 0.0, 0.0]], 2).is_err());
    }

    #[test]
    fn direction_grammar() {
        let d = parse_directions("0.7071,0.7071;1,0").unwrap();
        assert_eq!(d, vec![vec![0.7071, 0.7071], vec![1.0, 0.0]]);
        assert!(parse_directions("1,x").is_err());
        assert!(parse_directions("").is_err());
    }

    #[test]
    fn identity_pushforward_copies_values() {
        let l = Lattice::new(vec![-1.0, -1.0], vec![0.25, 0.5], vec![8, 4]).unwrap();
        let field = SampledField::from_fn(l.clone(), "f", |p| Complex64::new(p[0] * p[1] + 1.0, p[0]));
        let f = DirectionFrame::canonical(1, 2).unwrap();
        let out = f.pushforward(&field, &l).unwrap();
        assert_eq!(out.values, field.values);
    }

    #[test]
    fn constant_pushforward_is_jacobian_inside_box() {
        let l = Lattice::new(vec![-2.0, -2.0], vec![0.125, 0.125], vec![33, 33]).unwrap();
        let field = SampledField::from_fn(l.clone(), "one", |_| Complex64::new(1.0, 0.0));
        let f = DirectionFrame::new(&[vec![H, H]], 2).unwrap();
        let target = f.target_lattice_for(&l, &[0.1, 0.1]).unwrap();
        let out = f.pushforward(&field, &target).unwrap();
        for (j, v) in out.values.iter().enumerate() {
            let s = target.point_flat(j);
            let t = [std::f64::consts::SQRT_2 * s[0] - s[1], s[1]];
            let inside = t.iter().all(|x| (-1.999..=1.999).contains(x));
            if inside {
                assert_abs_diff_eq!(v.re, f.det_c().abs(), epsilon = 1e-12);
            }
        }
    }

    fn gaussian_mass_after_pushforward(step: f64) -> (f64, f64) {
        let n = (12.0 / step) as usize;
        let l = Lattice::new(vec![-6.0, -6.0], vec![step, step], vec![n, n]).unwrap();
        let field = SampledField::from_fn(l.clone(), "g", |p| {
            Complex64::new((-((p[0] - 0.3).powi(2) + (p[1] + 0.2).powi(2)) / 2.0).exp(), 0.0)
        });
        let f = DirectionFrame::new(&[vec![0.6, 0.8]], 2).unwrap();
        let target = f.target_lattice_for(&l, &[step, step]).unwrap();
        let out = f.pushforward(&field, &target).unwrap();
        (
            crate::lattice::riemann_integral(&field).re,
            crate::lattice::riemann_integral(&out).re,
        )
    }

    #[test]
    fn pushforward_preserves_mass() {
        let (before, after) = gaussian_mass_after_pushforward(1.0 / 64.0);
        assert!(((after - before) / before).abs() <= 0.02, "{before} vs {after}");
        // The error shrinks with resolution, so the tolerance is not masking a bias.
        let (b2, a2) = gaussian_mass_after_pushforward(1.0 / 16.0);
        assert!(((a2 - b2) / b2).abs() <= 0.02);
    }

    proptest! {
        #[test]
        fn frames_are_scale_invariant(
            v in prop::array::uniform3(-1.0f64..1.0),
            w in prop::array::uniform3(-1.0f64..1.0),
            s in 0.1f64..10.0,
        ) {
            let v = v.to_vec();
            let w = w.to_vec();
            prop_assume!(v.iter().map(|x| x * x).sum::<f64>() > 1e-2);
            prop_assume!(w.iter().map(|x| x * x).sum::<f64>() > 1e-2);
            if let Ok(a) = DirectionFrame::new(&[v.clone(), w.clone()], 3) {
                let scaled: Vec<f64> = v.iter().map(|x| x * s).collect();
                let b = DirectionFrame::new(&[scaled, w], 3).unwrap();
                prop_assert!((a.b() - b.b()).amax() < 1e-12);
                prop_assert!((a.c() - b.c()).amax() < 1e-9 * (1.0 + a.c().amax()));
            }
        }

        #[test]
        fn b_times_c_is_identity(v in prop::array::uniform3(-1.0f64..1.0)) {
            prop_assume!(v.iter().map(|x| x * x).sum::<f64>() > 1e-2);
            let f = DirectionFrame::new(&[v.to_vec()], 3).unwrap();
            let bc = f.b() * f.c();
            prop_assert!((bc - DMatrix::<f64>::identity(3, 3)).amax() < 1e-10);
            for i in 0..f.k() {
                let norm: f64 = f.direction(i).iter().map(|x| x * x).sum::<f64>().sqrt();
                prop_assert!((norm - 1.0).abs() < 1e-12);
            }
            prop_assert!((f.det_c() * f.b().determinant() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn pullback_is_linear(a in prop::array::uniform2(-5.0f64..5.0), b in prop::array::uniform2(-5.0f64..5.0)) {
            let f = DirectionFrame::new(&[vec![H, H]], 2).unwrap();
            let sum = [a[0] + b[0], a[1] + b[1]];
            let lhs = f.pullback_frequency(&sum);
            let pa = f.pullback_frequency(&a);
            let pb = f.pullback_frequency(&b);
            for i in 0..2 {
                prop_assert!((lhs[i] - pa[i] - pb[i]).abs() < 1e-12);
            }
        }
    }
}
