//! Changing the analysis window of a coefficient field through a convolution
//! with the cross kernel `K = DS_h γ`.
//!
//! With `F = DS_g f` and `(γ, g) ≠ 0`,
//!
//! `DS_h f(y, η) = (γ,g)⁻¹ Σ_x Δx Σ_ξ Δξ F(x, ξ) e^{−2πi x·(η−ξ)} K(y − x, η − ξ)`.
//!
//! The phase factor comes from moving the window of `K` to the origin; the
//! plain convolution `F * K` differs from `DS_h f` whenever `x ≠ 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::directions::DirectionFrame;
use crate::error::{Error, Result};
use crate::fftn::FftNd;
use crate::lattice::{Lattice, SampledField};
use crate::transform::{dstft_forward, CoefficientField};
use crate::windows::{WindowBank, WindowKind, WindowSpec};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Shifts within `shift_margin` of the shift-lattice edge and frequencies
/// above `freq_limit` (per axis) are affected by truncation of the sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidRegion {
    pub shift_margin: f64,
    pub freq_limit: Vec<f64>,
}

impl ValidRegion {
    pub fn contains(&self, field: &CoefficientField, shift: usize, freq: usize) -> bool {
        let l = &field.shift_lattice;
        let y = l.point_flat(shift);
        let lo = l.origin();
        let hi = l.end();
        let eps = 1e-9 * l.step().iter().copied().fold(0.0, f64::max);
        let inside_shift = (0..l.dim()).all(|a| y[a] - lo[a] >= self.shift_margin - eps && hi[a] - y[a] >= self.shift_margin - eps);
        inside_shift && {
            let xi = field.freq_lattice.point_flat(freq);
            xi.iter().zip(&self.freq_limit).all(|(v, lim)| v.abs() <= *lim)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionGrids {
    pub signal_step: Vec<f64>,
    pub signal_count: Vec<usize>,
    pub shift_step: Vec<f64>,
    pub shift_count: Vec<usize>,
    pub kernel_shift_count: Vec<usize>,
    pub padded_freq_shape: Vec<usize>,
    pub interior_shift_margin: f64,
    pub interior_freq_limit: Vec<f64>,
    pub interior_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowChangeReport {
    /// L² norm of the directly computed `DS_h f` over the interior.
    pub lhs_norm: f64,
    /// L² norm of the convolution side over the interior.
    pub rhs_norm: f64,
    pub rel_err: f64,
    pub grids: ConvolutionGrids,
}

/// Radius beyond which window-edge effects of `h` are ignored when scoring.
fn interior_margin(h: &WindowSpec) -> f64 {
    match h.kind {
        WindowKind::Gaussian { sigma } => 4.0 * sigma,
        _ => h.support_radius(),
    }
}

/// Shift lattice for the cross kernel: same step, `2N−1` points centered on 0.
pub fn kernel_shift_lattice(shifts: &Lattice) -> Result<Lattice> {
    let count: Vec<usize> = shifts.count().iter().map(|&c| 2 * c - 1).collect();
    let origin = shifts
        .step()
        .iter()
        .zip(shifts.count())
        .map(|(&s, &c)| -((c - 1) as f64) * s)
        .collect();
    Lattice::new(origin, shifts.step().to_vec(), count)
}

/// `DS_h γ` on the canonical frame, where `γ(t) = ∏_{i<k} γᵢ(tᵢ)` is sampled
/// on a lattice with the signal's step and count centered on 0, constant 1
/// along the trailing `n−k` axes.
pub fn cross_kernel(
    h: &[WindowSpec],
    gamma: &[WindowSpec],
    signal: &Lattice,
    shifts: &Lattice,
) -> Result<CoefficientField> {
    let k = h.len();
    let n = signal.dim();
    if gamma.len() != k || shifts.dim() != k || k > n {
        return Err(Error::DimensionMismatch(format!(
            "cross kernel: {} h windows, {} γ windows, {}-D shifts, n = {n}",
            h.len(),
            gamma.len(),
            shifts.dim()
        )));
    }
    let centered = Lattice::centered(signal.step().to_vec(), signal.count().to_vec())?;
    let field = SampledField::from_fn(centered, "gamma", |t| {
        gamma
            .iter()
            .zip(t)
            .fold(Complex64::new(1.0, 0.0), |acc, (w, &s)| acc * w.eval(s))
    });
    let frame = DirectionFrame::canonical(k, n)?;
    let bank = WindowBank::analysis_only(h.to_vec())?;
    dstft_forward(&field, &frame, &bank, &kernel_shift_lattice(shifts)?)
}

fn padded_index(shape: &[usize], idx: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (&j, &c)| acc * c + j)
}

/// Evaluates the convolution side of the identity on the lattices of
/// `coeffs_g`. The returned field carries the analysis windows of `kernel`.
pub fn window_change(
    coeffs_g: &CoefficientField,
    kernel: &CoefficientField,
    gamma: &[WindowSpec],
) -> Result<(CoefficientField, ValidRegion)> {
    let frame = &coeffs_g.frame;
    let (n, k) = (frame.n(), frame.k());
    if !frame.is_canonical() || !kernel.frame.is_canonical() {
        return Err(Error::NonCanonicalFrame);
    }
    if kernel.frame.k() != k || kernel.frame.n() != n || gamma.len() != k {
        return Err(Error::DimensionMismatch("window change frames".into()));
    }
    if !coeffs_g.freq_lattice.approx_eq(&kernel.freq_lattice, 1e-12) {
        return Err(Error::LatticeMismatch("coefficient and kernel frequency lattices differ".into()));
    }
    let expected = kernel_shift_lattice(&coeffs_g.shift_lattice)?;
    if !expected.approx_eq(&kernel.shift_lattice, 1e-9) {
        return Err(Error::LatticeMismatch("kernel shift lattice must be the centered 2N−1 lattice with the coefficient step".into()));
    }
    let pair = WindowBank::with_floor(
        coeffs_g.bank.analysis().to_vec(),
        gamma.to_vec(),
        coeffs_g.bank.pairing_floor(),
    )?
    .pairing(None)?;
    // (γ, g) = conj((g, γ)).
    let norm = pair.conj().inv();

    let freqs = &coeffs_g.freq_lattice;
    let fshape = freqs.count().to_vec();
    let pshape: Vec<usize> = fshape.iter().map(|&c| 2 * c).collect();
    let plen: usize = pshape.iter().product();
    let nf = freqs.len();
    let fwd = FftNd::forward(&pshape);
    let inv = FftNd::inverse(&pshape);
    let half: Vec<usize> = fshape.iter().map(|&c| c / 2).collect();

    let embed: Vec<usize> = (0..nf).map(|c| padded_index(&pshape, &freqs.unravel(c))).collect();
    let extract: Vec<usize> = (0..nf)
        .map(|c| {
            let idx: Vec<usize> = freqs.unravel(c).iter().zip(&half).map(|(a, b)| a + b).collect();
            padded_index(&pshape, &idx)
        })
        .collect();

    let ns = coeffs_g.num_shifts();
    let xi_dot = |x: &[f64], c: usize| -> f64 {
        let xi = freqs.point_flat(c);
        x.iter().zip(&xi).map(|(a, b)| a * b).sum()
    };

    // FFT of F(x, ·)·e^{2πi x·ξ}, zero padded.
    let g_hat: Vec<Option<Vec<Complex64>>> = (0..ns)
        .into_par_iter()
        .map(|s| {
            let slice = coeffs_g.slice(s);
            if slice.iter().all(|v| *v == ZERO) {
                return None;
            }
            let x = coeffs_g.shift_lattice.point_flat(s);
            let mut buf = vec![ZERO; plen];
            for c in 0..nf {
                buf[embed[c]] = slice[c] * Complex64::from_polar(1.0, 2.0 * PI * xi_dot(&x, c));
            }
            fwd.process(&mut buf);
            Some(buf)
        })
        .collect();

    let k_hat: Vec<Option<Vec<Complex64>>> = (0..kernel.num_shifts())
        .into_par_iter()
        .map(|s| {
            let slice = kernel.slice(s);
            if slice.iter().all(|v| *v == ZERO) {
                return None;
            }
            let mut buf = vec![ZERO; plen];
            for c in 0..nf {
                buf[embed[c]] = slice[c];
            }
            fwd.process(&mut buf);
            Some(buf)
        })
        .collect();

    let weight = coeffs_g.shift_lattice.cell_volume() * freqs.cell_volume();
    let scount = coeffs_g.shift_lattice.count().to_vec();
    let klat = &kernel.shift_lattice;

    let mut values = vec![ZERO; ns * nf];
    values.par_chunks_mut(nf).enumerate().for_each_init(
        || vec![ZERO; plen],
        |buf, (ys, out)| {
            let yi = coeffs_g.shift_lattice.unravel(ys);
            for (xs, gh) in g_hat.iter().enumerate() {
                let Some(gh) = gh else { continue };
                let xi_idx = coeffs_g.shift_lattice.unravel(xs);
                let kidx: Vec<usize> = (0..k).map(|a| yi[a] + scount[a] - 1 - xi_idx[a]).collect();
                let Some(kh) = &k_hat[klat.ravel(&kidx)] else { continue };
                for ((b, a), c) in buf.iter_mut().zip(gh).zip(kh) {
                    *b = a * c;
                }
                inv.process(buf);
                let x = coeffs_g.shift_lattice.point_flat(xs);
                let scale = weight / plen as f64;
                for (c, o) in out.iter_mut().enumerate() {
                    let phase = Complex64::from_polar(scale, -2.0 * PI * xi_dot(&x, c));
                    *o += buf[extract[c]] * phase;
                }
            }
            out.iter_mut().for_each(|v| *v *= norm);
        },
    );

    let region = ValidRegion {
        shift_margin: kernel
            .bank
            .analysis()
            .iter()
            .map(interior_margin)
            .fold(0.0, f64::max),
        freq_limit: (0..n).map(|a| 0.5 * freqs.nyquist(a)).collect(),
    };
    let field = CoefficientField {
        frame: frame.clone(),
        bank: kernel.bank.clone(),
        signal_lattice: coeffs_g.signal_lattice.clone(),
        shift_lattice: coeffs_g.shift_lattice.clone(),
        freq_lattice: freqs.clone(),
        values,
        provenance: coeffs_g.provenance,
    };
    Ok((field, region))
}

/// Shift lattices must sit on multiples of the signal step along the window
/// axes so that `t − x` stays on the signal lattice.
fn check_alignment(signal: &Lattice, shifts: &Lattice) -> Result<()> {
    for a in 0..shifts.dim() {
        let d = signal.step()[a];
        let on_grid = |v: f64| ((v / d) - (v / d).round()).abs() < 1e-9;
        let origin_offset = signal.origin()[a] - shifts.origin()[a];
        if !on_grid(shifts.step()[a]) || !on_grid(origin_offset) {
            return Err(Error::LatticeMismatch(format!(
                "shift lattice axis {a} is not aligned with the signal step {d}"
            )));
        }
    }
    Ok(())
}

/// Computes `DS_h f` directly and through the window-change identity and
/// compares them on the interior region.
pub fn verify_window_change(
    f: &SampledField,
    g: &[WindowSpec],
    gamma: &[WindowSpec],
    h: &[WindowSpec],
    shifts: &Lattice,
) -> Result<WindowChangeReport> {
    let k = g.len();
    let n = f.lattice.dim();
    if gamma.len() != k || h.len() != k || shifts.dim() != k || k > n {
        return Err(Error::DimensionMismatch("window change: window counts and shift dimension must agree".into()));
    }
    WindowBank::new(g.to_vec(), gamma.to_vec())?;
    check_alignment(&f.lattice, shifts)?;
    let frame = DirectionFrame::canonical(k, n)?;
    let coeffs_g = dstft_forward(f, &frame, &WindowBank::analysis_only(g.to_vec())?, shifts)?;
    let direct = dstft_forward(f, &frame, &WindowBank::analysis_only(h.to_vec())?, shifts)?;
    let kernel = cross_kernel(h, gamma, &f.lattice, shifts)?;
    let (conv, region) = window_change(&coeffs_g, &kernel, gamma)?;

    let nf = direct.num_freqs();
    let (mut num, mut lhs, mut rhs) = (0.0, 0.0, 0.0);
    let mut points = 0usize;
    for s in 0..direct.num_shifts() {
        for c in 0..nf {
            if !region.contains(&direct, s, c) {
                continue;
            }
            let a = direct.values[s * nf + c];
            let b = conv.values[s * nf + c];
            num += (a - b).norm_sqr();
            lhs += a.norm_sqr();
            rhs += b.norm_sqr();
            points += 1;
        }
    }
    let rel_err = if lhs == 0.0 {
        if num == 0.0 { 0.0 } else { f64::INFINITY }
    } else {
        (num / lhs).sqrt()
    };
    Ok(WindowChangeReport {
        lhs_norm: lhs.sqrt(),
        rhs_norm: rhs.sqrt(),
        rel_err,
        grids: ConvolutionGrids {
            signal_step: f.lattice.step().to_vec(),
            signal_count: f.lattice.count().to_vec(),
            shift_step: shifts.step().to_vec(),
            shift_count: shifts.count().to_vec(),
            kernel_shift_count: kernel.shift_lattice.count().to_vec(),
            padded_freq_shape: f.lattice.count().iter().map(|c| 2 * c).collect(),
            interior_shift_margin: region.shift_margin,
            interior_freq_limit: region.freq_limit,
            interior_points: points,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub signal_step: f64,
    pub shift_step: f64,
    pub rel_err: f64,
    /// `log₂(previous error / this error)`; absent on the first row.
    pub order: Option<f64>,
}

/// Repeats [`verify_window_change`] while halving both the signal step and
/// the shift step over fixed boxes. `signal` samples the input on a lattice.
pub fn convergence_study<F>(
    signal: F,
    g: &[WindowSpec],
    gamma: &[WindowSpec],
    h: &[WindowSpec],
    base_signal: &Lattice,
    base_shifts: &Lattice,
    levels: usize,
) -> Result<Vec<ConvergenceRow>>
where
    F: Fn(&Lattice) -> SampledField,
{
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels);
    let mut sig = base_signal.clone();
    let mut sh = base_shifts.clone();
    for level in 0..levels {
        if level > 0 {
            sig = Lattice::new(
                sig.origin().to_vec(),
                sig.step().iter().map(|s| s / 2.0).collect(),
                sig.count().iter().map(|c| 2 * c).collect(),
            )?;
            sh = Lattice::new(
                sh.origin().to_vec(),
                sh.step().iter().map(|s| s / 2.0).collect(),
                sh.count().iter().map(|c| 2 * c - 1).collect(),
            )?;
        }
        let rep = verify_window_change(&signal(&sig), g, gamma, h, &sh)?;
        let order = rows.last().map(|p| (p.rel_err / rep.rel_err).log2());
        rows.push(ConvergenceRow {
            signal_step: sig.step()[0],
            shift_step: sh.step()[0],
            rel_err: rep.rel_err,
            order,
        });
    }
    Ok(rows)
}

/// CSV rendering of a convergence table.
pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from("signal_step,shift_step,rel_err,order\n");
    for r in rows {
        let order = r.order.map_or(String::new(), |o| format!("{o:.6}"));
        s.push_str(&format!("{},{},{:.6e},{}\n", r.signal_step, r.shift_step, r.rel_err, order));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::riemann_integral;

    fn test_signal(l: &Lattice) -> SampledField {
        SampledField::from_fn(l.clone(), "f", |p| {
            Complex64::new((-(p[0] - 0.3).powi(2) / 2.0).exp() * (2.0 * p[0]).cos(), 0.0)
        })
    }

    fn grids(step: f64, shift_step: f64) -> (Lattice, Lattice) {
        let n = (24.0 / step).round() as usize;
        let sig = Lattice::new(vec![-12.0], vec![step], vec![n]).unwrap();
        let ns = (16.0 / shift_step).round() as usize + 1;
        let sh = Lattice::new(vec![-8.0], vec![shift_step], vec![ns]).unwrap();
        (sig, sh)
    }

    fn unit_gamma(g: &WindowSpec) -> WindowSpec {
        g.clone().with_scale(1.0 / g.norm_sq())
    }

    #[test]
    fn kernel_at_origin_is_gamma_energy() {
        let gam = WindowSpec::bump(1.0).unwrap();
        let (sig, sh) = grids(0.125, 1.0);
        let k = cross_kernel(&[gam.clone()], &[gam.clone()], &sig, &sh).unwrap();
        let s0 = k.shift_lattice.index_of(&[0.0]).unwrap();
        let f0 = k.freq_lattice.index_of(&[0.0]).unwrap();
        let v = k.get(&s0, &f0);
        let oracle = SampledField::from_fn(Lattice::centered(vec![0.125], vec![192]).unwrap(), "", |p| {
            gam.eval(p[0]) * gam.eval(p[0])
        });
        assert!(v.re > 0.0);
        assert!((v - riemann_integral(&oracle)).norm() < 1e-14);
    }

    #[test]
    fn kernel_vanishes_beyond_joint_support() {
        let h = WindowSpec::hann(1.0).unwrap();
        let gam = WindowSpec::bump(1.5).unwrap();
        let (sig, sh) = grids(0.125, 0.5);
        let k = cross_kernel(&[h], &[gam], &sig, &sh).unwrap();
        for s in 0..k.num_shifts() {
            if k.shift_lattice.point_flat(s)[0].abs() >= 2.5 {
                assert!(k.slice(s).iter().all(|v| *v == ZERO));
            }
        }
    }

    #[test]
    fn kernel_mass_matches_center_value_times_window_integral() {
        // Σ_ζ Δζ K(s, ζ) = γ(0)·conj(h(−s)) exactly; the shift sum is then a
        // Riemann sum of ∫ conj(h).
        let h = WindowSpec::hann(2.0).unwrap();
        let gam = WindowSpec::gaussian(1.0).unwrap();
        let (sig, sh) = grids(0.125, 0.25);
        let k = cross_kernel(&[h.clone()], &[gam.clone()], &sig, &sh).unwrap();
        let mass: Complex64 = k.values.iter().sum::<Complex64>()
            * k.shift_lattice.cell_volume()
            * k.freq_lattice.cell_volume();
        let h_int = riemann_integral(&h.sample_on(&crate::windows::default_quad_lattice(2.0)));
        assert!((mass - gam.center_value() * h_int.conj()).norm() < 1e-6, "{mass}");
    }

    #[test]
    fn gaussian_to_hann_identity_holds() {
        let g = WindowSpec::gaussian(1.0).unwrap();
        let gam = unit_gamma(&g);
        let h = WindowSpec::hann(2.0).unwrap();
        let (sig, sh) = grids(0.125, 1.0);
        let rep = verify_window_change(&test_signal(&sig), &[g], &[gam], &[h], &sh).unwrap();
        assert!(rep.rel_err <= 1e-2, "{rep:?}");
        assert!(rep.grids.interior_points > 0);
    }

    #[test]
    fn same_window_reproduces_coefficients() {
        let g = WindowSpec::gaussian(1.0).unwrap();
        let gam = unit_gamma(&g);
        let (sig, sh) = grids(0.125, 1.0);
        let rep = verify_window_change(&test_signal(&sig), &[g.clone()], &[gam], &[g], &sh).unwrap();
        assert!(rep.rel_err <= 1e-2, "{rep:?}");
    }

    #[test]
    fn zero_signal_has_zero_error() {
        let g = WindowSpec::gaussian(1.0).unwrap();
        let (sig, sh) = grids(0.25, 2.0);
        let z = SampledField::zeros(sig, "0");
        let rep = verify_window_change(&z, &[g.clone()], &[g.clone()], &[g], &sh).unwrap();
        assert_eq!(rep.rel_err, 0.0);
    }

    #[test]
    fn window_change_is_linear() {
        let g = WindowSpec::gaussian(1.0).unwrap();
        let gam = unit_gamma(&g);
        let h = WindowSpec::hann(2.0).unwrap();
        let (sig, sh) = grids(0.25, 2.0);
        let frame = DirectionFrame::canonical(1, 1).unwrap();
        let c = dstft_forward(&test_signal(&sig), &frame, &WindowBank::analysis_only(vec![g]).unwrap(), &sh).unwrap();
        let k = cross_kernel(&[h], &[gam.clone()], &sig, &sh).unwrap();
        let alpha = Complex64::new(-0.4, 1.3);
        let (a, _) = window_change(&c.scaled(alpha), &k, &[gam.clone()]).unwrap();
        let (b, _) = window_change(&c, &k, &[gam.clone()]).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y * alpha).norm() <= 1e-12 * (1.0 + y.norm()));
        }
        let (z, _) = window_change(&c.scaled(Complex64::new(0.0, 0.0)), &k, &[gam]).unwrap();
        assert!(z.values.iter().all(|v| *v == ZERO));
    }

    #[test]
    fn translation_commutes_on_interior() {
        // Translating f by one shift step translates both sides by one step.
        let g = WindowSpec::gaussian(1.0).unwrap();
        let gam = unit_gamma(&g);
        let h = WindowSpec::hann(2.0).unwrap();
        let (sig, sh) = grids(0.125, 1.0);
        let frame = DirectionFrame::canonical(1, 1).unwrap();
        let bank = WindowBank::analysis_only(vec![g]).unwrap();
        let k = cross_kernel(&[h], &[gam.clone()], &sig, &sh).unwrap();
        let f = test_signal(&sig);
        let shifted = SampledField::from_fn(sig.clone(), "f1", |p| {
            Complex64::new((-(p[0] - 1.3).powi(2) / 2.0).exp() * (2.0 * (p[0] - 1.0)).cos(), 0.0)
        });
        let (a, region) = window_change(&dstft_forward(&f, &frame, &bank, &sh).unwrap(), &k, &[gam.clone()]).unwrap();
        let (b, _) = window_change(&dstft_forward(&shifted, &frame, &bank, &sh).unwrap(), &k, &[gam]).unwrap();
        let nf = a.num_freqs();
        for s in 0..a.num_shifts() - 1 {
            for c in 0..nf {
                if !region.contains(&a, s, c) || !region.contains(&a, s + 1, c) {
                    continue;
                }
                let xi = a.freq_lattice.point_flat(c)[0];
                let expect = a.values[s * nf + c] * Complex64::from_polar(1.0, -2.0 * PI * xi);
                assert!((b.values[(s + 1) * nf + c] - expect).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn degenerate_pairing_is_reported() {
        let g = WindowSpec::bump(0.5).unwrap();
        let far = Lattice::new(vec![3.0], vec![0.125], vec![3]).unwrap();
        let rec = crate::windows::CustomSamples { origin: far.origin()[0], step: 0.125, values: vec![0.0, 1.0, 0.0], imag: None };
        let gam = WindowSpec::custom("offset.json", rec).unwrap();
        let (sig, sh) = grids(0.25, 2.0);
        let err = verify_window_change(&test_signal(&sig), &[g.clone()], &[gam], &[g], &sh).unwrap_err();
        assert!(matches!(err, Error::PairingDegenerate { .. }), "{err}");
    }

    #[test]
    fn misaligned_shifts_are_rejected() {
        let g = WindowSpec::gaussian(1.0).unwrap();
        let (sig, _) = grids(0.25, 2.0);
        let sh = Lattice::new(vec![-8.1], vec![2.0], vec![9]).unwrap();
        let err = verify_window_change(&test_signal(&sig), &[g.clone()], &[g.clone()], &[g], &sh).unwrap_err();
        assert!(matches!(err, Error::LatticeMismatch(_)));
    }

    #[test]
    fn two_dimensional_signal_with_one_direction() {
        let g = WindowSpec::gaussian(1.0).unwrap();
        let gam = unit_gamma(&g);
        let h = WindowSpec::hann(2.0).unwrap();
        let sig = Lattice::new(vec![-8.0, -4.0], vec![0.25, 0.25], vec![64, 32]).unwrap();
        let sh = Lattice::new(vec![-6.0], vec![1.0], vec![13]).unwrap();
        let f = SampledField::from_fn(sig.clone(), "f", |p| {
            Complex64::new((-(p[0] * p[0] + p[1] * p[1]) / 2.0).exp(), 0.0)
        });
        let rep = verify_window_change(&f, &[g], &[gam], &[h], &sh).unwrap();
        assert!(rep.rel_err <= 1e-2, "{rep:?}");
    }
}
