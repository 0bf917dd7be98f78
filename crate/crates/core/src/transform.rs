//! Forward directional STFT, its synthesis operator, inversion and the
//! Parseval diagnostic.
//!
//! For a shift `x` the forward transform is the Riemann sum
//! `Δⁿ Σ_t f(t) ∏ conj(gᵢ(uᵢ·t − xᵢ)) e^{−2πi t·ξ}` evaluated at every bin of
//! the dual lattice with one n-dimensional FFT. The quadrature path evaluates
//! the same sum term by term and serves as the oracle.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::directions::DirectionFrame;
use crate::error::{Error, Result};
use crate::fftn::FftNd;
use crate::lattice::{inner_product, FrequencyLattice, Lattice, SampledField};
use crate::windows::{window_pair_product, WindowBank, WindowSpec};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest `|2π t·η|` accepted by [`dstft_at`].
pub const MAX_GROWTH_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    FastFft,
    Quadrature,
}

/// Accumulation order for sums over shifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    /// Shift contributions are added in shift order; results do not depend
    /// on the thread count.
    #[default]
    Ordered,
    /// Per-thread partial sums combined in whatever order rayon chooses.
    Fast,
}

/// `ξ + iη`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexFrequencyPoint {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
}

impl ComplexFrequencyPoint {
    pub fn real(xi: Vec<f64>) -> Self {
        let eta = vec![0.0; xi.len()];
        Self { xi, eta }
    }
}

/// Transform values indexed by (shift, frequency); frequencies in centered
/// order, shifts row-major over the shift lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    pub frame: DirectionFrame,
    pub bank: WindowBank,
    pub signal_lattice: Lattice,
    pub shift_lattice: Lattice,
    pub freq_lattice: FrequencyLattice,
    pub values: Vec<Complex64>,
    pub provenance: Provenance,
}

impl CoefficientField {
    pub fn num_shifts(&self) -> usize {
        self.shift_lattice.len()
    }

    pub fn num_freqs(&self) -> usize {
        self.freq_lattice.len()
    }

    /// All frequencies at shift index `s`.
    pub fn slice(&self, s: usize) -> &[Complex64] {
        let f = self.num_freqs();
        &self.values[s * f..(s + 1) * f]
    }

    pub fn get(&self, shift: &[usize], freq: &[usize]) -> Complex64 {
        self.values[self.shift_lattice.ravel(shift) * self.num_freqs() + self.freq_lattice.ravel(freq)]
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

fn check_inputs(f: &SampledField, frame: &DirectionFrame, bank: &WindowBank, shift: &Lattice) -> Result<()> {
    if f.lattice.dim() != frame.n() {
        return Err(Error::DimensionMismatch(format!(
            "signal is {}-D but frame lives in ℝ^{}",
            f.lattice.dim(),
            frame.n()
        )));
    }
    if bank.k() != frame.k() {
        return Err(Error::DimensionMismatch(format!(
            "{} windows for {} directions",
            bank.k(),
            frame.k()
        )));
    }
    if shift.dim() != frame.k() {
        return Err(Error::DimensionMismatch(format!(
            "shift lattice is {}-D, expected {}",
            shift.dim(),
            frame.k()
        )));
    }
    Ok(())
}

/// `uᵢ·t` for every sample `t`, laid out direction-major.
fn projections(lattice: &Lattice, frame: &DirectionFrame) -> Vec<Vec<f64>> {
    let n = lattice.dim();
    let mut p = vec![0.0; n];
    let mut out = vec![Vec::with_capacity(lattice.len()); frame.k()];
    for j in 0..lattice.len() {
        lattice.point_flat_into(j, &mut p);
        for (i, row) in out.iter_mut().enumerate() {
            row.push(frame.direction(i).iter().zip(&p).map(|(a, b)| a * b).sum());
        }
    }
    out
}

/// `∏ wᵢ(projᵢ[j] − xᵢ)` for all samples `j`, conjugated if requested.
fn window_product(windows: &[WindowSpec], proj: &[Vec<f64>], shift: &[f64], conj: bool, out: &mut [Complex64]) {
    out.iter_mut().for_each(|v| *v = Complex64::new(1.0, 0.0));
    for (i, w) in windows.iter().enumerate() {
        let r = w.support_radius();
        for (v, &p) in out.iter_mut().zip(&proj[i]) {
            if *v == ZERO {
                continue;
            }
            let s = p - shift[i];
            if s.abs() >= r {
                *v = ZERO;
                continue;
            }
            let g = w.eval(s);
            *v *= if conj { g.conj() } else { g };
        }
    }
}

/// `e^{∓2πi t₀·ξ}` for every centered frequency bin.
fn origin_phases(origin: &[f64], freqs: &FrequencyLattice, sign: f64) -> Vec<Complex64> {
    (0..freqs.len())
        .map(|c| {
            let xi = freqs.point_flat(c);
            let d: f64 = origin.iter().zip(&xi).map(|(a, b)| a * b).sum();
            Complex64::from_polar(1.0, sign * 2.0 * PI * d)
        })
        .collect()
}

/// Default shift lattice: step `4·min Δ` covering the projections of the
/// signal box onto each direction.
pub fn default_shift_lattice(signal: &Lattice, frame: &DirectionFrame) -> Result<Lattice> {
    let step = 4.0 * signal.step().iter().copied().fold(f64::INFINITY, f64::min);
    let lo = signal.origin();
    let hi = signal.end();
    let n = signal.dim();
    let mut origin = Vec::new();
    let mut count = Vec::new();
    for i in 0..frame.k() {
        let u = frame.direction(i);
        let (mut a, mut b) = (0.0, 0.0);
        for d in 0..n {
            let (x, y) = (u[d] * lo[d], u[d] * hi[d]);
            a += x.min(y);
            b += x.max(y);
        }
        let start = (a / step).floor() * step;
        origin.push(start);
        count.push((((b - start) / step).ceil() as usize + 1).max(2));
    }
    Lattice::new(origin, vec![step; frame.k()], count)
}

/// Forward transform on `shift_lattice × dual(f.lattice)` by per-shift FFTs.
pub fn dstft_forward(
    f: &SampledField,
    frame: &DirectionFrame,
    bank: &WindowBank,
    shift_lattice: &Lattice,
) -> Result<CoefficientField> {
    check_inputs(f, frame, bank, shift_lattice)?;
    let lattice = &f.lattice;
    let freqs = lattice.dual();
    let nf = lattice.len();
    let proj = projections(lattice, frame);
    let fft = FftNd::forward(lattice.count());
    let perm = freqs.fft_permutation();
    let vol = lattice.cell_volume();
    let phases: Vec<Complex64> = origin_phases(lattice.origin(), &freqs, -1.0)
        .into_iter()
        .map(|p| p * vol)
        .collect();

    let mut values = vec![ZERO; shift_lattice.len() * nf];
    values.par_chunks_mut(nf).enumerate().for_each_init(
        || vec![ZERO; nf],
        |buf, (s, out)| {
            let x = shift_lattice.point_flat(s);
            window_product(bank.analysis(), &proj, &x, true, buf);
            if buf.iter().all(|v| *v == ZERO) {
                return;
            }
            for (b, fv) in buf.iter_mut().zip(&f.values) {
                // Exact zero keeps coefficients independent of samples outside the windows.
                if *b != ZERO {
                    *b *= fv;
                }
            }
            fft.process(buf);
            for (c, o) in out.iter_mut().enumerate() {
                *o = buf[perm[c]] * phases[c];
            }
        },
    );

    Ok(CoefficientField {
        frame: frame.clone(),
        bank: bank.clone(),
        signal_lattice: lattice.clone(),
        shift_lattice: shift_lattice.clone(),
        freq_lattice: freqs,
        values,
        provenance: Provenance::FastFft,
    })
}

/// Direct quadrature of the transform at one shift and complex frequency,
/// with kernel `e^{−2πi t·(ξ+iη)}`.
pub fn dstft_at(
    f: &SampledField,
    frame: &DirectionFrame,
    bank: &WindowBank,
    shift: &[f64],
    z: &ComplexFrequencyPoint,
) -> Result<Complex64> {
    let n = frame.n();
    if f.lattice.dim() != n || bank.k() != frame.k() || shift.len() != frame.k() {
        return Err(Error::DimensionMismatch("dstft_at arguments".into()));
    }
    if z.xi.len() != n || z.eta.len() != n {
        return Err(Error::DimensionMismatch("frequency point dimension".into()));
    }
    if z.xi.iter().chain(&z.eta).any(|v| !v.is_finite()) {
        return Err(Error::InvalidQuery("non-finite frequency".into()));
    }
    let growth = max_growth_exponent(&f.lattice, &z.eta);
    if growth > MAX_GROWTH_EXPONENT {
        return Err(Error::EtaTooLarge { exponent: growth });
    }
    let mut t = vec![0.0; n];
    let mut acc = ZERO;
    for (j, fv) in f.values.iter().enumerate() {
        f.lattice.point_flat_into(j, &mut t);
        let mut w = Complex64::new(1.0, 0.0);
        for (i, g) in bank.analysis().iter().enumerate() {
            let s: f64 = frame.direction(i).iter().zip(&t).map(|(a, b)| a * b).sum::<f64>() - shift[i];
            w *= g.eval(s).conj();
            if w == ZERO {
                break;
            }
        }
        if w == ZERO {
            continue;
        }
        let txi: f64 = t.iter().zip(&z.xi).map(|(a, b)| a * b).sum();
        let teta: f64 = t.iter().zip(&z.eta).map(|(a, b)| a * b).sum();
        acc += fv * w * Complex64::from_polar((2.0 * PI * teta).exp(), -2.0 * PI * txi);
    }
    Ok(acc * f.lattice.cell_volume())
}

fn max_growth_exponent(lattice: &Lattice, eta: &[f64]) -> f64 {
    let lo = lattice.origin();
    let hi = lattice.end();
    let s: f64 = (0..lattice.dim())
        .map(|a| (eta[a] * lo[a]).abs().max((eta[a] * hi[a]).abs()))
        .sum();
    2.0 * PI * s
}

/// Full coefficient field by direct quadrature; `O(N²)` per shift, for
/// cross-checking [`dstft_forward`] on small problems.
pub fn dstft_quadrature(
    f: &SampledField,
    frame: &DirectionFrame,
    bank: &WindowBank,
    shift_lattice: &Lattice,
) -> Result<CoefficientField> {
    check_inputs(f, frame, bank, shift_lattice)?;
    let freqs = f.lattice.dual();
    let nf = freqs.len();
    let mut values = vec![ZERO; shift_lattice.len() * nf];
    values
        .par_chunks_mut(nf)
        .enumerate()
        .try_for_each(|(s, out)| -> Result<()> {
            let x = shift_lattice.point_flat(s);
            for (c, o) in out.iter_mut().enumerate() {
                *o = dstft_at(f, frame, bank, &x, &ComplexFrequencyPoint::real(freqs.point_flat(c)))?;
            }
            Ok(())
        })?;
    Ok(CoefficientField {
        frame: frame.clone(),
        bank: bank.clone(),
        signal_lattice: f.lattice.clone(),
        shift_lattice: shift_lattice.clone(),
        freq_lattice: freqs,
        values,
        provenance: Provenance::Quadrature,
    })
}

/// Synthesis operator: `Σ_x Σ_ξ c(x,ξ) ∏ψᵢ(uᵢ·t − xᵢ) e^{2πi t·ξ} · Δx^k Δξⁿ`
/// evaluated on `out_lattice`, which must share the coefficients' dual lattice.
pub fn synthesis(
    coeffs: &CoefficientField,
    windows: &[WindowSpec],
    out_lattice: &Lattice,
    reduction: Reduction,
) -> Result<SampledField> {
    let frame = &coeffs.frame;
    if windows.len() != frame.k() {
        return Err(Error::DimensionMismatch(format!(
            "{} synthesis windows for {} directions",
            windows.len(),
            frame.k()
        )));
    }
    if out_lattice.dim() != frame.n() || !out_lattice.dual().approx_eq(&coeffs.freq_lattice, 1e-12) {
        return Err(Error::LatticeMismatch(
            "output lattice must have the same step and count as the analysed signal".into(),
        ));
    }
    let n_out = out_lattice.len();
    let proj = projections(out_lattice, frame);
    let ifft = FftNd::inverse(out_lattice.count());
    let perm = coeffs.freq_lattice.fft_permutation();
    let weight = coeffs.shift_lattice.cell_volume() * coeffs.freq_lattice.cell_volume();
    let phases: Vec<Complex64> = origin_phases(out_lattice.origin(), &coeffs.freq_lattice, 1.0)
        .into_iter()
        .map(|p| p * weight)
        .collect();

    // Contribution of one shift, or None if its windows miss the output lattice.
    let contribution = |s: usize, buf: &mut Vec<Complex64>, win: &mut Vec<Complex64>| -> bool {
        let x = coeffs.shift_lattice.point_flat(s);
        window_product(windows, &proj, &x, false, win);
        let slice = coeffs.slice(s);
        if win.iter().all(|v| *v == ZERO) || slice.iter().all(|v| *v == ZERO) {
            return false;
        }
        for (c, v) in slice.iter().enumerate() {
            buf[perm[c]] = v * phases[c];
        }
        ifft.process(buf);
        for (b, w) in buf.iter_mut().zip(win.iter()) {
            *b *= w;
        }
        true
    };

    let values = match reduction {
        Reduction::Ordered => {
            let mut acc = vec![ZERO; n_out];
            let batch = rayon::current_num_threads().max(1);
            let shifts: Vec<usize> = (0..coeffs.num_shifts()).collect();
            for chunk in shifts.chunks(batch) {
                let parts: Vec<Option<Vec<Complex64>>> = chunk
                    .par_iter()
                    .map(|&s| {
                        let mut buf = vec![ZERO; n_out];
                        let mut win = vec![ZERO; n_out];
                        contribution(s, &mut buf, &mut win).then_some(buf)
                    })
                    .collect();
                for part in parts.into_iter().flatten() {
                    acc.iter_mut().zip(&part).for_each(|(a, p)| *a += p);
                }
            }
            acc
        }
        Reduction::Fast => (0..coeffs.num_shifts())
            .into_par_iter()
            .fold(
                || (vec![ZERO; n_out], vec![ZERO; n_out], vec![ZERO; n_out]),
                |(mut acc, mut buf, mut win), s| {
                    if contribution(s, &mut buf, &mut win) {
                        acc.iter_mut().zip(&buf).for_each(|(a, p)| *a += p);
                    }
                    (acc, buf, win)
                },
            )
            .map(|(acc, _, _)| acc)
            .reduce(
                || vec![ZERO; n_out],
                |mut a, b| {
                    a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                    a
                },
            ),
    };
    SampledField::new(out_lattice.clone(), values, "synthesis")
}

/// Reconstruction `synthesis(c, ψ) / conj(∏(gᵢ, ψᵢ))`.
///
/// On the lattice, `synthesis(forward f) = f · Δx Σ_x ψ(t−x)·conj(g(t−x))`,
/// whose continuum limit is `∫ ψ·conj(g) = conj((g, ψ))`.
pub fn invert(
    coeffs: &CoefficientField,
    synthesis_windows: &[WindowSpec],
    out_lattice: &Lattice,
    reduction: Reduction,
) -> Result<SampledField> {
    let pair = WindowBank::with_floor(
        coeffs.bank.analysis().to_vec(),
        synthesis_windows.to_vec(),
        coeffs.bank.pairing_floor(),
    )?
    .pairing(None)?;
    let mut out = synthesis(coeffs, synthesis_windows, out_lattice, reduction)?;
    let inv = pair.conj().inv();
    out.values.iter_mut().for_each(|v| *v *= inv);
    out.label = "reconstruction".into();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsevalReport {
    pub lhs: Complex64,
    pub rhs: Complex64,
    /// `|lhs − rhs| / |rhs|`, or `|lhs| / scale` when `degenerate`.
    pub rel_err: f64,
    pub abs_err: f64,
    /// `‖f₁‖‖f₂‖∏‖gᵢ‖∏‖ψᵢ‖`.
    pub scale: f64,
    /// The right-hand side vanishes relative to `scale`.
    pub degenerate: bool,
}

/// Compares `Δx^k Δξⁿ Σ DS_g f₁ · conj(DS_ψ f₂)` with
/// `(f₁, f₂) · ∏ ∫ conj(gᵢ) ψᵢ` for a canonical frame.
pub fn parseval_check(
    f1: &SampledField,
    f2: &SampledField,
    frame: &DirectionFrame,
    analysis: &[WindowSpec],
    synthesis_windows: &[WindowSpec],
    shift_lattice: &Lattice,
) -> Result<ParsevalReport> {
    if !frame.is_canonical() {
        return Err(Error::NonCanonicalFrame);
    }
    let fg = dstft_forward(f1, frame, &WindowBank::analysis_only(analysis.to_vec())?, shift_lattice)?;
    let fp = dstft_forward(f2, frame, &WindowBank::analysis_only(synthesis_windows.to_vec())?, shift_lattice)?;
    let weight = fg.shift_lattice.cell_volume() * fg.freq_lattice.cell_volume();
    let lhs: Complex64 = fg
        .values
        .iter()
        .zip(&fp.values)
        .map(|(a, b)| a * b.conj())
        .sum::<Complex64>()
        * weight;

    let mut window_factor = Complex64::new(1.0, 0.0);
    let mut window_norms = 1.0;
    for (g, psi) in analysis.iter().zip(synthesis_windows) {
        window_factor *= window_pair_product(g, psi, None)?.conj();
        window_norms *= (g.norm_sq() * psi.norm_sq()).sqrt();
    }
    let rhs = inner_product(f1, f2)? * window_factor;
    let scale = f1.norm_l2() * f2.norm_l2() * window_norms;
    let abs_err = (lhs - rhs).norm();
    let degenerate = rhs.norm() <= 1e-8 * scale;
    let rel_err = if scale == 0.0 {
        0.0
    } else if degenerate {
        abs_err / scale
    } else {
        abs_err / rhs.norm()
    };
    Ok(ParsevalReport {
        lhs,
        rhs,
        rel_err,
        abs_err,
        scale,
        degenerate,
    })
}
