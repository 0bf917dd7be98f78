//! One-dimensional window families, window banks and ridge atoms.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::directions::DirectionFrame;
use crate::error::{Error, Result};
use crate::lattice::{inner_product, Lattice, SampledField};

/// Gaussians are treated as negligible beyond this many standard deviations
/// when a finite quadrature interval is needed.
pub const GAUSSIAN_EXTENT: f64 = 8.0;

/// Points on the default 1-D pairing quadrature lattice.
pub const PAIRING_QUAD_POINTS: usize = 4097;

pub const DEFAULT_PAIRING_FLOOR: f64 = 1e-8;

/// Samples of a custom window, linearly interpolated and zero outside
/// `[origin, origin + (len-1)·step]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomSamples {
    pub origin: f64,
    pub step: f64,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imag: Option<Vec<f64>>,
}

impl CustomSamples {
    fn validate(&self, token: &str) -> Result<()> {
        let bad = |reason: &str| Error::InvalidWindow {
            token: token.to_string(),
            reason: reason.to_string(),
        };
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(bad("step must be positive"));
        }
        if self.values.len() < 2 {
            return Err(bad("need at least two samples"));
        }
        if let Some(im) = &self.imag {
            if im.len() != self.values.len() {
                return Err(bad("imag length differs from values"));
            }
        }
        if !self.origin.is_finite() || self.values.iter().any(|v| !v.is_finite()) {
            return Err(bad("non-finite sample"));
        }
        Ok(())
    }

    fn sample(&self, j: usize) -> Complex64 {
        Complex64::new(
            self.values[j],
            self.imag.as_ref().map_or(0.0, |im| im[j]),
        )
    }

    fn eval(&self, s: f64) -> Complex64 {
        let r = (s - self.origin) / self.step;
        let last = (self.values.len() - 1) as f64;
        if !(0.0..=last).contains(&r) {
            return Complex64::new(0.0, 0.0);
        }
        let j = (r.floor() as usize).min(self.values.len() - 2);
        let frac = r - j as f64;
        self.sample(j) * (1.0 - frac) + self.sample(j + 1) * frac
    }

    fn extent(&self) -> f64 {
        let end = self.origin + (self.values.len() - 1) as f64 * self.step;
        self.origin.abs().max(end.abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WindowKind {
    Gaussian { sigma: f64 },
    Hann { radius: f64 },
    Bump { radius: f64 },
    Custom { source: PathBuf, samples: Arc<CustomSamples> },
}

/// A window `s ↦ scale · kind(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSpec {
    pub kind: WindowKind,
    pub scale: f64,
}

impl WindowSpec {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        positive("gaussian", "σ", sigma)?;
        Ok(Self::unscaled(WindowKind::Gaussian { sigma }))
    }

    pub fn hann(radius: f64) -> Result<Self> {
        positive("hann", "a", radius)?;
        Ok(Self::unscaled(WindowKind::Hann { radius }))
    }

    pub fn bump(radius: f64) -> Result<Self> {
        positive("bump", "a", radius)?;
        Ok(Self::unscaled(WindowKind::Bump { radius }))
    }

    pub fn custom(source: impl Into<PathBuf>, samples: CustomSamples) -> Result<Self> {
        let source = source.into();
        samples.validate(&format!("custom:{}", source.display()))?;
        Ok(Self::unscaled(WindowKind::Custom {
            source,
            samples: Arc::new(samples),
        }))
    }

    /// Reads a custom window from a JSON file holding [`CustomSamples`].
    pub fn custom_from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let samples: CustomSamples = serde_json::from_str(&text)?;
        Self::custom(path, samples)
    }

    fn unscaled(kind: WindowKind) -> Self {
        Self { kind, scale: 1.0 }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn eval(&self, s: f64) -> Complex64 {
        let v = match &self.kind {
            WindowKind::Gaussian { sigma } => {
                let z = s / sigma;
                (-0.5 * z * z).exp()
            }
            WindowKind::Hann { radius } => {
                if s.abs() >= *radius {
                    0.0
                } else {
                    0.5 * (1.0 + (std::f64::consts::PI * s / radius).cos())
                }
            }
            WindowKind::Bump { radius } => {
                if s.abs() >= *radius {
                    0.0
                } else {
                    let a2 = radius * radius;
                    (1.0 - a2 / (a2 - s * s)).exp()
                }
            }
            WindowKind::Custom { samples, .. } => return samples.eval(s) * self.scale,
        };
        Complex64::new(self.scale * v, 0.0)
    }

    /// Radius outside of which the window is exactly zero; `+∞` for gaussians.
    pub fn support_radius(&self) -> f64 {
        match &self.kind {
            WindowKind::Gaussian { .. } => f64::INFINITY,
            WindowKind::Hann { radius } | WindowKind::Bump { radius } => *radius,
            WindowKind::Custom { samples, .. } => samples.extent(),
        }
    }

    /// Finite radius beyond which the window is zero or negligible.
    pub fn effective_radius(&self) -> f64 {
        match &self.kind {
            WindowKind::Gaussian { sigma } => GAUSSIAN_EXTENT * sigma,
            _ => self.support_radius(),
        }
    }

    pub fn is_compact(&self) -> bool {
        self.support_radius().is_finite()
    }

    pub fn is_real(&self) -> bool {
        match &self.kind {
            WindowKind::Custom { samples, .. } => samples
                .imag
                .as_ref()
                .map_or(true, |im| im.iter().all(|&v| v == 0.0)),
            _ => true,
        }
    }

    pub fn center_value(&self) -> Complex64 {
        self.eval(0.0)
    }

    pub fn sample_on(&self, lattice: &Lattice) -> SampledField {
        SampledField::from_fn(lattice.clone(), self.to_string(), |p| self.eval(p[0]))
    }

    /// `‖w‖²` on the default quadrature lattice.
    pub fn norm_sq(&self) -> f64 {
        let q = default_quad_lattice(self.effective_radius());
        self.sample_on(&q).norm_l2_sq()
    }
}

fn positive(kind: &str, key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidWindow {
            token: format!("{kind}:{key}={v}"),
            reason: format!("{key} must be positive and finite"),
        })
    }
}

impl fmt::Display for WindowSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            WindowKind::Gaussian { sigma } => write!(f, "gaussian:σ={sigma}")?,
            WindowKind::Hann { radius } => write!(f, "hann:a={radius}")?,
            WindowKind::Bump { radius } => write!(f, "bump:a={radius}")?,
            WindowKind::Custom { source, .. } => write!(f, "custom:{}", source.display())?,
        }
        if self.scale != 1.0 {
            let sep = if matches!(self.kind, WindowKind::Custom { .. }) { '@' } else { ',' };
            write!(f, "{sep}scale={}", self.scale)?;
        }
        Ok(())
    }
}

impl FromStr for WindowSpec {
    type Err = Error;

    /// Parses `gaussian:σ=1.0`, `hann:a=2.0`, `bump:a=1.5`, `custom:path.json`.
    /// Keys `sigma`/`σ` and `a`/`radius` are synonyms; an optional
    /// `,scale=c` multiplies the window (`@scale=c` after a custom path).
    fn from_str(token: &str) -> Result<Self> {
        let bad = |reason: String| Error::InvalidWindow {
            token: token.to_string(),
            reason,
        };
        let (kind, rest) = token
            .trim()
            .split_once(':')
            .ok_or_else(|| bad("expected `kind:params`".into()))?;
        let kind = kind.trim().to_ascii_lowercase();
        if kind == "custom" {
            let (path, scale) = match rest.rsplit_once("@scale=") {
                Some((p, s)) => (p, Some(s)),
                None => (rest, None),
            };
            let mut w = WindowSpec::custom_from_file(Path::new(path.trim())).map_err(|e| match e {
                Error::InvalidWindow { .. } => e,
                other => bad(other.to_string()),
            })?;
            if let Some(s) = scale {
                w.scale = s.trim().parse().map_err(|_| bad(format!("bad scale `{s}`")))?;
            }
            return Ok(w);
        }
        let mut param = None;
        let mut scale = 1.0;
        for kv in rest.split(',') {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got `{kv}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| bad(format!("`{}` is not a number", v.trim())))?;
            match (kind.as_str(), k.trim()) {
                ("gaussian", "σ" | "sigma") => param = Some(v),
                ("hann" | "bump", "a" | "radius") => param = Some(v),
                (_, "scale") => scale = v,
                (_, other) => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        let p = param.ok_or_else(|| bad("missing width parameter".into()))?;
        let w = match kind.as_str() {
            "gaussian" => WindowSpec::gaussian(p),
            "hann" => WindowSpec::hann(p),
            "bump" => WindowSpec::bump(p),
            other => return Err(bad(format!("unknown window kind `{other}`"))),
        }
        .map_err(|_| bad("width must be positive and finite".into()))?;
        if !scale.is_finite() || scale == 0.0 {
            return Err(bad("scale must be finite and nonzero".into()));
        }
        Ok(w.with_scale(scale))
    }
}

impl Serialize for WindowSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for WindowSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Uniform 1-D lattice on `[-r, r]` with [`PAIRING_QUAD_POINTS`] points.
pub fn default_quad_lattice(r: f64) -> Lattice {
    let n = PAIRING_QUAD_POINTS;
    Lattice::new(vec![-r], vec![2.0 * r / (n - 1) as f64], vec![n]).expect("positive radius")
}

/// `(g, ψ)` for a single pair of windows.
pub fn window_pair_product(g: &WindowSpec, psi: &WindowSpec, quad: Option<&Lattice>) -> Result<Complex64> {
    let owned;
    let q = match quad {
        Some(q) => {
            if q.dim() != 1 {
                return Err(Error::DimensionMismatch("pairing quadrature lattice must be 1-D".into()));
            }
            q
        }
        None => {
            owned = default_quad_lattice(g.effective_radius().min(psi.effective_radius()));
            &owned
        }
    };
    inner_product(&g.sample_on(q), &psi.sample_on(q))
}

/// Analysis windows `g₁..g_k` with matching synthesis windows `ψ₁..ψ_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowBank {
    analysis: Vec<WindowSpec>,
    synthesis: Vec<WindowSpec>,
    pairing_floor: f64,
}

impl WindowBank {
    /// Bank with the default degeneracy floor; fails if `|∏(gᵢ,ψᵢ)| ≤ 1e-8`.
    pub fn new(analysis: Vec<WindowSpec>, synthesis: Vec<WindowSpec>) -> Result<Self> {
        Self::with_floor(analysis, synthesis, DEFAULT_PAIRING_FLOOR)
    }

    pub fn with_floor(analysis: Vec<WindowSpec>, synthesis: Vec<WindowSpec>, floor: f64) -> Result<Self> {
        if analysis.is_empty() || analysis.len() != synthesis.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} analysis vs {} synthesis windows",
                analysis.len(),
                synthesis.len()
            )));
        }
        let bank = Self {
            analysis,
            synthesis,
            pairing_floor: floor,
        };
        bank.pairing(None)?;
        Ok(bank)
    }

    /// Bank whose synthesis windows equal the analysis windows.
    pub fn analysis_only(analysis: Vec<WindowSpec>) -> Result<Self> {
        Self::new(analysis.clone(), analysis)
    }

    /// Same window for every direction.
    pub fn uniform(k: usize, g: WindowSpec, psi: WindowSpec) -> Result<Self> {
        Self::new(vec![g; k], vec![psi; k])
    }

    pub fn k(&self) -> usize {
        self.analysis.len()
    }

    pub fn analysis(&self) -> &[WindowSpec] {
        &self.analysis
    }

    pub fn synthesis(&self) -> &[WindowSpec] {
        &self.synthesis
    }

    pub fn pairing_floor(&self) -> f64 {
        self.pairing_floor
    }

    /// Bank with analysis and synthesis roles exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            analysis: self.synthesis.clone(),
            synthesis: self.analysis.clone(),
            pairing_floor: self.pairing_floor,
        }
    }

    /// `∏ᵢ (gᵢ, ψᵢ)`. With `quad = None` each factor uses a 4097-point lattice
    /// on the smaller of the two effective supports.
    pub fn pairing(&self, quad: Option<&Lattice>) -> Result<Complex64> {
        let mut p = Complex64::new(1.0, 0.0);
        for (g, psi) in self.analysis.iter().zip(&self.synthesis) {
            p *= window_pair_product(g, psi, quad)?;
        }
        if !(p.norm() > self.pairing_floor) {
            return Err(Error::PairingDegenerate {
                value: p.norm(),
                floor: self.pairing_floor,
            });
        }
        Ok(p)
    }

    /// Largest effective radius of the analysis windows.
    pub fn analysis_radius(&self) -> f64 {
        self.analysis
            .iter()
            .map(WindowSpec::effective_radius)
            .fold(0.0, f64::max)
    }

    pub fn synthesis_radius(&self) -> f64 {
        self.synthesis
            .iter()
            .map(WindowSpec::effective_radius)
            .fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.analysis.iter().chain(&self.synthesis).all(WindowSpec::is_real)
    }
}

/// `∏ wᵢ(uᵢ·t − xᵢ) · e^{2πi t·ξ}`.
pub fn eval_ridge_atom(
    windows: &[WindowSpec],
    frame: &DirectionFrame,
    shift: &[f64],
    xi: &[f64],
    t: &[f64],
) -> Result<Complex64> {
    let (n, k) = (frame.n(), frame.k());
    if windows.len() != k || shift.len() != k || xi.len() != n || t.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "ridge atom: frame ({k}, {n}), {} windows, shift {}, ξ {}, t {}",
            windows.len(),
            shift.len(),
            xi.len(),
            t.len()
        )));
    }
    let mut v = Complex64::new(1.0, 0.0);
    for (i, w) in windows.iter().enumerate() {
        let s: f64 = frame.direction(i).iter().zip(t).map(|(u, x)| u * x).sum::<f64>() - shift[i];
        v *= w.eval(s);
    }
    let phase: f64 = t.iter().zip(xi).map(|(a, b)| a * b).sum();
    Ok(v * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * phase))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn closed_form_values() {
        assert_eq!(WindowSpec::hann(1.0).unwrap().eval(0.0).re, 1.0);
        assert_eq!(WindowSpec::bump(1.0).unwrap().eval(1.5).re, 0.0);
        assert_eq!(WindowSpec::bump(1.0).unwrap().eval(0.0).re, 1.0);
        assert_abs_diff_eq!(
            WindowSpec::gaussian(1.0).unwrap().eval(1.0).re,
            0.606530659,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(WindowSpec::hann(2.0).unwrap().eval(1.0).re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn compact_windows_are_exactly_zero_outside() {
        for w in [WindowSpec::hann(0.7).unwrap(), WindowSpec::bump(0.7).unwrap()] {
            for s in [0.7, -0.7, 0.70000001, 3.0, -1e9] {
                assert_eq!(w.eval(s), Complex64::new(0.0, 0.0), "{w} at {s}");
            }
            assert_eq!(w.support_radius(), 0.7);
        }
        assert!(WindowSpec::gaussian(1.0).unwrap().support_radius().is_infinite());
    }

    #[test]
    fn grammar_round_trip() {
        for tok in ["gaussian:σ=1", "hann:a=2", "bump:a=1.5", "gaussian:σ=0.3,scale=0.25"] {
            let w: WindowSpec = tok.parse().unwrap();
            assert_eq!(w.to_string(), tok);
        }
        let w: WindowSpec = "gaussian:sigma=1.0".parse().unwrap();
        assert_eq!(w, WindowSpec::gaussian(1.0).unwrap());
        let w: WindowSpec = "bump:radius=0.5".parse().unwrap();
        assert_eq!(w, WindowSpec::bump(0.5).unwrap());
        for bad in ["gauss:σ=1", "hann:a=-1", "hann:b=1", "bump", "hann:a=x", "custom:/nonexistent.json"] {
            assert!(matches!(bad.parse::<WindowSpec>(), Err(Error::InvalidWindow { .. })), "{bad}");
        }
    }

    #[test]
    fn custom_window_from_file_interpolates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tri.json");
        std::fs::write(&path, r#"{"origin": -1.0, "step": 1.0, "values": [0.0, 1.0, 0.0]}"#).unwrap();
        let tok = format!("custom:{}", path.display());
        let w: WindowSpec = tok.parse().unwrap();
        assert_eq!(w.to_string(), tok);
        assert_abs_diff_eq!(w.eval(0.25).re, 0.75, epsilon = 1e-15);
        assert_eq!(w.eval(1.5).re, 0.0);
        assert_eq!(w.support_radius(), 1.0);
        let scaled: WindowSpec = format!("{tok}@scale=2").parse().unwrap();
        assert_abs_diff_eq!(scaled.eval(0.0).re, 2.0, epsilon = 1e-15);
        assert_eq!(scaled.to_string(), format!("{tok}@scale=2"));
    }

    #[test]
    fn unit_gaussian_pairing_is_one() {
        // ∫ exp(-s²) ds = √π, so scale π^{-1/4} gives unit norm.
        let g = WindowSpec::gaussian(1.0).unwrap().with_scale(std::f64::consts::PI.powf(-0.25));
        let bank = WindowBank::analysis_only(vec![g.clone()]).unwrap();
        let p = bank.pairing(None).unwrap();
        assert_abs_diff_eq!(p.re, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(p.im, 0.0, epsilon = 1e-15);

        let bank2 = WindowBank::analysis_only(vec![g.clone(), g]).unwrap();
        assert_abs_diff_eq!(bank2.pairing(None).unwrap().re, p.re * p.re, epsilon = 1e-8);
    }

    #[test]
    fn orthogonalized_synthesis_window_is_degenerate() {
        // ψ = h − (h,g)/(g,g)·g sampled on the quadrature lattice, as a custom window.
        let g = WindowSpec::hann(1.0).unwrap();
        let h = WindowSpec::bump(1.0).unwrap();
        let q = default_quad_lattice(1.0);
        let gs = g.sample_on(&q);
        let hs = h.sample_on(&q);
        let c = inner_product(&hs, &gs).unwrap() / inner_product(&gs, &gs).unwrap();
        let values: Vec<f64> = hs.values.iter().zip(&gs.values).map(|(a, b)| (a - c * b).re).collect();
        let psi = WindowSpec::custom(
            "orth.json",
            CustomSamples { origin: -1.0, step: q.step()[0], values, imag: None },
        )
        .unwrap();
        let err = WindowBank::new(vec![g], vec![psi]).unwrap_err();
        assert!(matches!(err, Error::PairingDegenerate { .. }), "{err}");
    }

    #[test]
    fn ridge_atom_examples() {
        let e1 = DirectionFrame::canonical(1, 3).unwrap();
        let hann = WindowSpec::hann(1.0).unwrap();
        let v = eval_ridge_atom(&[hann.clone()], &e1, &[0.0], &[0.0; 3], &[0.0; 3]).unwrap();
        assert_eq!(v, Complex64::new(1.0, 0.0));
        let v = eval_ridge_atom(&[hann], &e1, &[0.0], &[0.3, 0.0, 1.0], &[1.2, 5.0, 5.0]).unwrap();
        assert_eq!(v.norm(), 0.0);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let frame = DirectionFrame::new(&[vec![h, h]], 2).unwrap();
        let g = WindowSpec::gaussian(1.0).unwrap();
        let v = eval_ridge_atom(&[g], &frame, &[0.0], &[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(v.re, (-1.0f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn ridge_atom_modulus_independent_of_frequency(
            t in prop::array::uniform2(-3.0f64..3.0),
            x in -2.0f64..2.0,
            xi in prop::array::uniform2(-5.0f64..5.0),
        ) {
            let frame = DirectionFrame::new(&[vec![0.6, 0.8]], 2).unwrap();
            let w = [WindowSpec::gaussian(0.8).unwrap()];
            let a = eval_ridge_atom(&w, &frame, &[x], &xi, &t).unwrap();
            let b = eval_ridge_atom(&w, &frame, &[x], &[0.0, 0.0], &t).unwrap();
            prop_assert!((a.norm() - b.norm()).abs() <= 1e-14 * (1.0 + b.norm()));
            prop_assert_eq!(b.im, 0.0);
        }

        #[test]
        fn bump_and_hann_vanish_outside_support(a in 0.05f64..5.0, s in 1.0f64..100.0) {
            prop_assert_eq!(WindowSpec::bump(a).unwrap().eval(a * s).re, 0.0);
            prop_assert_eq!(WindowSpec::hann(a).unwrap().eval(-a * s).re, 0.0);
        }

        #[test]
        fn grammar_round_trips_for_any_width(sigma in 1e-3f64..1e3, scale in 0.01f64..10.0) {
            for w in [
                WindowSpec::gaussian(sigma).unwrap().with_scale(scale),
                WindowSpec::hann(sigma).unwrap(),
                WindowSpec::bump(sigma).unwrap().with_scale(scale),
            ] {
                let back: WindowSpec = w.to_string().parse().unwrap();
                prop_assert_eq!(back, w);
            }
        }
    }
}
