//! Directional regularity from the decay of coefficient magnitudes over a
//! ball of shifts times a frequency cone.
//!
//! For each geometric shell `r_j ≤ |ξ| < r_{j+1}` the detector takes the
//! largest `|DS f(x, ξ)|` with `x` in the ball and `ξ` in the cone, fits
//! `log sup_j ≈ log C − N̂ · log √(1 + r_j²)` and classifies the cell.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::directions::DirectionFrame;
use crate::error::{Error, Result};
use crate::lattice::{FrequencyLattice, Lattice, SampledField};
use crate::transform::{dstft_forward, CoefficientField};
use crate::windows::WindowBank;

const BALL_TOL: f64 = 1e-12;
const ANGLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeQuery {
    /// Ball center in shift coordinates.
    pub center: Vec<f64>,
    pub radius: f64,
    /// Cone axis; normalized by [`ConeQuery::new`].
    pub axis: Vec<f64>,
    /// Half-angle in radians.
    pub half_angle: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub shells: usize,
}

impl ConeQuery {
    pub fn new(
        center: Vec<f64>,
        radius: f64,
        axis: &[f64],
        half_angle: f64,
        r_min: f64,
        r_max: f64,
        shells: usize,
    ) -> Result<Self> {
        let norm = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidQuery("cone axis must be a nonzero finite vector".into()));
        }
        Ok(Self {
            center,
            radius,
            axis: axis.iter().map(|v| v / norm).collect(),
            half_angle,
            r_min,
            r_max,
            shells,
        })
    }

    /// Same query with ball radius and half-angle scaled by `factor`.
    pub fn shrunk(&self, factor: f64) -> Self {
        Self {
            radius: self.radius * factor,
            half_angle: self.half_angle * factor,
            ..self.clone()
        }
    }

    pub fn validate(&self, freqs: &FrequencyLattice, k: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidQuery(m));
        if self.center.len() != k {
            return bad(format!("ball center has {} coordinates, expected {k}", self.center.len()));
        }
        if self.axis.len() != freqs.dim() {
            return bad(format!("cone axis has {} coordinates, expected {}", self.axis.len(), freqs.dim()));
        }
        if !(self.radius >= 0.0 && self.radius.is_finite()) {
            return bad("ball radius must be finite and non-negative".into());
        }
        if !(self.half_angle > 0.0 && self.half_angle < PI / 2.0) {
            return bad(format!("half-angle {} outside (0, π/2)", self.half_angle));
        }
        if self.shells < 4 {
            return bad(format!("{} shells; at least 4 are needed", self.shells));
        }
        let min_r = 2.0 * freqs.max_step();
        if !(self.r_min >= min_r * (1.0 - 1e-12)) {
            return bad(format!("r_min {} below twice the frequency step ({min_r})", self.r_min));
        }
        let max_r = 0.5 * freqs.min_nyquist();
        if !(self.r_max <= max_r * (1.0 + 1e-12)) {
            return bad(format!("r_max {} above half the Nyquist frequency ({max_r})", self.r_max));
        }
        if !(self.r_min < self.r_max) {
            return bad("r_min must be below r_max".into());
        }
        Ok(())
    }

    /// Geometric shell edges `r_min·(r_max/r_min)^{j/J}`, `j = 0..=J`.
    pub fn edges(&self) -> Vec<f64> {
        let ratio = self.r_max / self.r_min;
        (0..=self.shells)
            .map(|j| {
                if j == self.shells {
                    self.r_max
                } else {
                    self.r_min * ratio.powf(j as f64 / self.shells as f64)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    /// Decay orders at or above this count as regular.
    pub threshold: f64,
    pub floor: f64,
    pub min_r2: f64,
    /// Shells with fewer cone bins make the verdict inconclusive.
    pub min_bins: usize,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            threshold: 8.0,
            floor: 1e-12,
            min_r2: 0.9,
            min_bins: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Regular,
    Singular,
    BelowFloor,
    Inconclusive,
}

impl Verdict {
    pub fn is_regular(self) -> bool {
        matches!(self, Verdict::Regular | Verdict::BelowFloor)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Regular => "regular",
            Verdict::Singular => "singular",
            Verdict::BelowFloor => "below_floor",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    /// At least four shells above the floor.
    Resolved,
    /// One to three shells above the floor followed by one below it; the
    /// floor crossing is added as a data point and `N̂` is a lower bound.
    FloorBound,
    BelowFloor,
    Insufficient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub kind: FitKind,
    pub slope: f64,
    pub intercept: f64,
    pub n_hat: f64,
    pub r2: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellProfile {
    /// Lower shell edges.
    pub radii: Vec<f64>,
    /// Largest magnitude per shell; `NaN` for shells without bins.
    pub sup: Vec<f64>,
    pub bins: Vec<usize>,
    pub ball_shifts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub query: ConeQuery,
    pub shell_radii: Vec<f64>,
    pub shell_sup: Vec<f64>,
    pub shell_bins: Vec<usize>,
    pub slope: f64,
    pub intercept: f64,
    pub n_hat: f64,
    pub r2: f64,
    pub fit: FitKind,
    pub verdict: Verdict,
    /// Windows are not compactly supported, outside the regularity definition.
    pub outside_hypothesis: bool,
}

fn ball_shifts(shifts: &Lattice, center: &[f64], radius: f64) -> Result<Vec<usize>> {
    let r2 = (radius + BALL_TOL) * (radius + BALL_TOL);
    let inside: Vec<usize> = (0..shifts.len())
        .filter(|&s| {
            let x = shifts.point_flat(s);
            x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= r2
        })
        .collect();
    if inside.is_empty() {
        Err(Error::EmptyBall)
    } else {
        Ok(inside)
    }
}

fn ball_max(coeffs: &CoefficientField, shifts: &[usize]) -> Vec<f64> {
    let mut m = vec![0.0f64; coeffs.num_freqs()];
    for &s in shifts {
        for (a, v) in m.iter_mut().zip(coeffs.slice(s)) {
            *a = a.max(v.norm());
        }
    }
    m
}

/// Frequency bins inside the radial band with their shell indices.
struct Band {
    bins: Vec<usize>,
    xi: Vec<Vec<f64>>,
    r: Vec<f64>,
    shell: Vec<usize>,
    edges: Vec<f64>,
}

impl Band {
    fn new(freqs: &FrequencyLattice, r_min: f64, r_max: f64, shells: usize) -> Self {
        let q = ConeQuery {
            center: vec![],
            radius: 0.0,
            axis: vec![],
            half_angle: 0.0,
            r_min,
            r_max,
            shells,
        };
        let edges = q.edges();
        let mut band = Band {
            bins: vec![],
            xi: vec![],
            r: vec![],
            shell: vec![],
            edges,
        };
        for c in 0..freqs.len() {
            let xi = freqs.point_flat(c);
            let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r < r_min || r >= r_max {
                continue;
            }
            let mut j = 0;
            while j + 1 < shells && r >= band.edges[j + 1] {
                j += 1;
            }
            band.bins.push(c);
            band.xi.push(xi);
            band.r.push(r);
            band.shell.push(j);
        }
        band
    }

    fn profile(&self, mag: &[f64], axis: &[f64], half_angle: f64, ball: usize) -> ShellProfile {
        let j_count = self.edges.len() - 1;
        let mut sup = vec![f64::NAN; j_count];
        let mut bins = vec![0usize; j_count];
        for (i, &c) in self.bins.iter().enumerate() {
            let dot: f64 = self.xi[i].iter().zip(axis).map(|(a, b)| a * b).sum();
            let r = self.r[i];
            let perp = (r * r - dot * dot).max(0.0).sqrt();
            if perp.atan2(dot) > half_angle + ANGLE_TOL {
                continue;
            }
            let j = self.shell[i];
            bins[j] += 1;
            sup[j] = if sup[j].is_nan() { mag[c] } else { sup[j].max(mag[c]) };
        }
        ShellProfile {
            radii: self.edges[..j_count].to_vec(),
            sup,
            bins,
            ball_shifts: ball,
        }
    }
}

/// Per-shell suprema of `|coeffs|` over the closed ball of shifts and the cone.
pub fn cone_supremum(coeffs: &CoefficientField, query: &ConeQuery) -> Result<ShellProfile> {
    query.validate(&coeffs.freq_lattice, coeffs.frame.k())?;
    let ball = ball_shifts(&coeffs.shift_lattice, &query.center, query.radius)?;
    let mag = ball_max(coeffs, &ball);
    let band = Band::new(&coeffs.freq_lattice, query.r_min, query.r_max, query.shells);
    Ok(band.profile(&mag, &query.axis, query.half_angle, ball.len()))
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let e = b - (intercept + slope * a);
            e * e
        })
        .sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    (slope, intercept, r2)
}

fn fit_variable(r: f64) -> f64 {
    (1.0 + r * r).sqrt().ln()
}

/// Least-squares fit of `log sup` against `log √(1+r²)` over shells above
/// `floor`. Shells without bins (`NaN`) are ignored.
pub fn fit_decay(radii: &[f64], sup: &[f64], floor: f64) -> DecayFit {
    let present: Vec<(f64, f64)> = radii
        .iter()
        .zip(sup)
        .filter(|(_, s)| !s.is_nan())
        .map(|(&r, &s)| (r, s))
        .collect();
    let above: Vec<(f64, f64)> = present.iter().copied().filter(|&(_, s)| s > floor).collect();
    let fit_of = |pts: &[(f64, f64)], kind: FitKind| {
        let x: Vec<f64> = pts.iter().map(|p| fit_variable(p.0)).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
        let (slope, intercept, r2) = least_squares(&x, &y);
        DecayFit {
            kind,
            slope,
            intercept,
            n_hat: -slope,
            r2,
            points: pts.len(),
        }
    };
    if above.is_empty() {
        return DecayFit {
            kind: FitKind::BelowFloor,
            slope: f64::NEG_INFINITY,
            intercept: f64::NAN,
            n_hat: f64::INFINITY,
            r2: 1.0,
            points: 0,
        };
    }
    if above.len() >= 4 {
        return fit_of(&above, FitKind::Resolved);
    }
    let last_above = above.last().expect("nonempty").0;
    if let Some(&(r_cross, _)) = present.iter().find(|&&(r, s)| r > last_above && s <= floor) {
        let mut pts = above.clone();
        pts.push((r_cross, floor));
        return fit_of(&pts, FitKind::FloorBound);
    }
    DecayFit {
        kind: FitKind::Insufficient,
        slope: f64::NAN,
        intercept: f64::NAN,
        n_hat: f64::NAN,
        r2: f64::NAN,
        points: above.len(),
    }
}

/// Verdict from a fit and the per-shell bin counts.
pub fn classify(fit: &DecayFit, bins: &[usize], params: &DetectorParams) -> Verdict {
    if bins.iter().any(|&b| b < params.min_bins) {
        return Verdict::Inconclusive;
    }
    match fit.kind {
        FitKind::BelowFloor => Verdict::BelowFloor,
        FitKind::Resolved if fit.n_hat >= params.threshold => Verdict::Regular,
        FitKind::Resolved if fit.r2 >= params.min_r2 => Verdict::Singular,
        FitKind::FloorBound if fit.n_hat >= params.threshold => Verdict::Regular,
        _ => Verdict::Inconclusive,
    }
}

fn report_from(query: ConeQuery, profile: ShellProfile, params: &DetectorParams, outside: bool) -> DecayReport {
    let fit = fit_decay(&profile.radii, &profile.sup, params.floor);
    let verdict = classify(&fit, &profile.bins, params);
    DecayReport {
        query,
        shell_radii: profile.radii,
        shell_sup: profile.sup,
        shell_bins: profile.bins,
        slope: fit.slope,
        intercept: fit.intercept,
        n_hat: fit.n_hat,
        r2: fit.r2,
        fit: fit.kind,
        verdict,
        outside_hypothesis: outside,
    }
}

/// Full analysis of one cell on precomputed coefficients.
pub fn analyze_cell(coeffs: &CoefficientField, query: &ConeQuery, params: &DetectorParams) -> Result<DecayReport> {
    let profile = cone_supremum(coeffs, query)?;
    Ok(report_from(query.clone(), profile, params, !all_compact(&coeffs.bank)))
}

fn all_compact(bank: &WindowBank) -> bool {
    bank.analysis().iter().all(|w| w.is_compact())
}

/// Checks that the analysis windows are admissible for the detector.
pub fn check_detector_windows(bank: &WindowBank, allow_noncompact: bool) -> Result<()> {
    for w in bank.analysis() {
        if w.center_value().norm() == 0.0 {
            return Err(Error::WindowPrecondition(format!("{w} vanishes at 0")));
        }
        if !w.is_compact() && !allow_noncompact {
            return Err(Error::WindowPrecondition(format!(
                "{w} is not compactly supported; pass allow_noncompact to use it anyway"
            )));
        }
    }
    Ok(())
}

/// Cone axes on `𝕊^{n−1}` with angular spacing at most `spacing`.
pub fn uniform_directions(n: usize, spacing: f64) -> Result<Vec<Vec<f64>>> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidQuery("direction spacing must be positive".into()));
    }
    match n {
        1 => Ok(vec![vec![1.0], vec![-1.0]]),
        2 => {
            let m = ((2.0 * PI / spacing).ceil() as usize).max(4);
            Ok((0..m)
                .map(|j| {
                    let a = 2.0 * PI * j as f64 / m as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect())
        }
        3 => {
            let rings = (PI / spacing).ceil() as usize;
            let mut out = vec![vec![0.0, 0.0, 1.0]];
            for i in 1..rings {
                let polar = PI * i as f64 / rings as f64;
                let m = ((2.0 * PI * polar.sin() / spacing).ceil() as usize).max(1);
                for j in 0..m {
                    let az = 2.0 * PI * j as f64 / m as f64;
                    out.push(vec![polar.sin() * az.cos(), polar.sin() * az.sin(), polar.cos()]);
                }
            }
            out.push(vec![0.0, 0.0, -1.0]);
            Ok(out)
        }
        _ => Err(Error::InvalidQuery(format!(
            "no default direction grid for n = {n}; pass directions explicitly"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSettings {
    pub radius: f64,
    pub half_angle: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub shells: usize,
    pub params: DetectorParams,
    pub allow_noncompact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapCell {
    pub center: Vec<f64>,
    pub direction: Vec<f64>,
    pub report: DecayReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveFrontMap {
    pub settings: MapSettings,
    pub windows: Vec<String>,
    pub centers: Vec<Vec<f64>>,
    pub directions: Vec<Vec<f64>>,
    /// Center-major: cell `(i, j)` is at `i·directions.len() + j`.
    pub cells: Vec<MapCell>,
    pub outside_hypothesis: bool,
}

impl WaveFrontMap {
    pub fn cell(&self, center: usize, direction: usize) -> &MapCell {
        &self.cells[center * self.directions.len() + direction]
    }

    pub fn singular_cells(&self) -> Vec<(usize, usize)> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.report.verdict == Verdict::Singular)
            .map(|(i, _)| (i / self.directions.len(), i % self.directions.len()))
            .collect()
    }

    pub fn verdicts(&self) -> Vec<Verdict> {
        self.cells.iter().map(|c| c.report.verdict).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("center,direction,n_hat,r2,verdict\n");
        let join = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ");
        for c in &self.cells {
            let n_hat = if c.report.n_hat.is_infinite() {
                "inf".to_string()
            } else if c.report.n_hat.is_nan() {
                "nan".to_string()
            } else {
                format!("{:.6}", c.report.n_hat)
            };
            let r2 = if c.report.r2.is_nan() { "nan".to_string() } else { format!("{:.6}", c.report.r2) };
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                join(&c.center),
                join(&c.direction),
                n_hat,
                r2,
                c.report.verdict.as_str()
            ));
        }
        s
    }
}

/// Classifies every (center, direction) cell of already computed coefficients.
/// For real signals with real windows `|c(x, −ξ)| = |c(x, ξ)|`, so a direction
/// whose antipode was already analysed reuses that profile.
pub fn wavefront_map_from_coeffs(
    coeffs: &CoefficientField,
    centers: &[Vec<f64>],
    directions: &[Vec<f64>],
    settings: &MapSettings,
    conjugate_symmetric: bool,
) -> Result<WaveFrontMap> {
    check_detector_windows(&coeffs.bank, settings.allow_noncompact)?;
    let k = coeffs.frame.k();
    let queries: Vec<Vec<ConeQuery>> = centers
        .iter()
        .map(|c| {
            directions
                .iter()
                .map(|d| {
                    let q = ConeQuery::new(
                        c.clone(),
                        settings.radius,
                        d,
                        settings.half_angle,
                        settings.r_min,
                        settings.r_max,
                        settings.shells,
                    )?;
                    q.validate(&coeffs.freq_lattice, k)?;
                    Ok(q)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let band = Band::new(&coeffs.freq_lattice, settings.r_min, settings.r_max, settings.shells);
    let antipode: Vec<Option<usize>> = (0..directions.len())
        .map(|j| {
            if !conjugate_symmetric {
                return None;
            }
            let d = &queries.first().map(|q| q[j].axis.clone()).unwrap_or_default();
            (0..j).find(|&i| {
                let e = &queries[0][i].axis;
                e.iter().zip(d).all(|(a, b)| (a + b).abs() < 1e-12)
            })
        })
        .collect();
    let outside = !all_compact(&coeffs.bank);

    let per_center: Vec<Vec<MapCell>> = queries
        .par_iter()
        .map(|row| -> Result<Vec<MapCell>> {
            let ball = ball_shifts(&coeffs.shift_lattice, &row[0].center, settings.radius)?;
            let mag = ball_max(coeffs, &ball);
            let mut profiles: Vec<ShellProfile> = Vec::with_capacity(row.len());
            for (j, q) in row.iter().enumerate() {
                let p = match antipode[j] {
                    Some(i) => profiles[i].clone(),
                    None => band.profile(&mag, &q.axis, q.half_angle, ball.len()),
                };
                profiles.push(p);
            }
            Ok(row
                .iter()
                .zip(profiles)
                .map(|(q, p)| MapCell {
                    center: q.center.clone(),
                    direction: q.axis.clone(),
                    report: report_from(q.clone(), p, &settings.params, outside),
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    Ok(WaveFrontMap {
        settings: settings.clone(),
        windows: coeffs.bank.analysis().iter().map(|w| w.to_string()).collect(),
        centers: centers.to_vec(),
        directions: queries.first().map(|r| r.iter().map(|q| q.axis.clone()).collect()).unwrap_or_default(),
        cells: per_center.into_iter().flatten().collect(),
        outside_hypothesis: outside,
    })
}

/// Transforms `f` once and classifies the product grid of centers × directions.
/// With `directions = None` a uniform grid with spacing `half_angle` is used.
pub fn wavefront_map(
    f: &SampledField,
    frame: &DirectionFrame,
    bank: &WindowBank,
    shift_lattice: &Lattice,
    centers: &[Vec<f64>],
    directions: Option<&[Vec<f64>]>,
    settings: &MapSettings,
) -> Result<WaveFrontMap> {
    check_detector_windows(bank, settings.allow_noncompact)?;
    let default_dirs;
    let dirs = match directions {
        Some(d) => d,
        None => {
            default_dirs = uniform_directions(frame.n(), settings.half_angle)?;
            &default_dirs
        }
    };
    let coeffs = dstft_forward(f, frame, bank, shift_lattice)?;
    let symmetric = f.is_real() && bank.is_real();
    wavefront_map_from_coeffs(&coeffs, centers, dirs, settings, symmetric)
}

/// Reports for the same cell under several window banks. The first bank is
/// the reference; the others are evaluated on the ball and cone shrunk by 1/2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub windows: Vec<String>,
    pub report: DecayReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessTable {
    pub rows: Vec<RobustnessRow>,
    pub agree: bool,
}

fn same_class(a: Verdict, b: Verdict) -> bool {
    a.is_regular() == b.is_regular() && (a == Verdict::Inconclusive) == (b == Verdict::Inconclusive)
}

fn check_alternates(banks: &[WindowBank]) -> Result<()> {
    let Some(reference) = banks.first() else {
        return Err(Error::InvalidQuery("no window banks given".into()));
    };
    for b in banks {
        check_detector_windows(b, false)?;
        if b.k() != reference.k() {
            return Err(Error::DimensionMismatch("banks differ in window count".into()));
        }
        if b.analysis_radius() > reference.analysis_radius() {
            return Err(Error::WindowPrecondition(format!(
                "alternate support radius {} exceeds the reference radius {}",
                b.analysis_radius(),
                reference.analysis_radius()
            )));
        }
    }
    Ok(())
}

pub fn window_robustness(
    f: &SampledField,
    frame: &DirectionFrame,
    banks: &[WindowBank],
    shift_lattice: &Lattice,
    query: &ConeQuery,
    params: &DetectorParams,
) -> Result<RobustnessTable> {
    check_alternates(banks)?;
    let rows = banks
        .iter()
        .enumerate()
        .map(|(i, bank)| {
            let coeffs = dstft_forward(f, frame, bank, shift_lattice)?;
            let q = if i == 0 { query.clone() } else { query.shrunk(0.5) };
            Ok(RobustnessRow {
                windows: bank.analysis().iter().map(|w| w.to_string()).collect(),
                report: analyze_cell(&coeffs, &q, params)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let agree = rows.iter().all(|r| same_class(r.report.verdict, rows[0].report.verdict));
    Ok(RobustnessTable { rows, agree })
}

/// [`window_robustness`] over a whole grid: one map per bank, alternates on
/// the shrunk protocol.
pub fn window_robustness_maps(
    f: &SampledField,
    frame: &DirectionFrame,
    banks: &[WindowBank],
    shift_lattice: &Lattice,
    centers: &[Vec<f64>],
    directions: &[Vec<f64>],
    settings: &MapSettings,
) -> Result<(Vec<WaveFrontMap>, bool)> {
    check_alternates(banks)?;
    let maps = banks
        .iter()
        .enumerate()
        .map(|(i, bank)| {
            let s = if i == 0 {
                settings.clone()
            } else {
                MapSettings {
                    radius: settings.radius * 0.5,
                    half_angle: settings.half_angle * 0.5,
                    ..settings.clone()
                }
            };
            wavefront_map(f, frame, bank, shift_lattice, centers, Some(directions), &s)
        })
        .collect::<Result<Vec<_>>>()?;
    let agree = maps.iter().all(|m| {
        m.cells
            .iter()
            .zip(&maps[0].cells)
            .all(|(a, b)| same_class(a.report.verdict, b.report.verdict))
    });
    Ok((maps, agree))
}

/// Coefficients with a planted magnitude `amp(|ξ|)` at every shift, for
/// exercising the detector without a transform.
pub fn planted_field(
    template: &CoefficientField,
    amp: impl Fn(f64) -> f64,
) -> CoefficientField {
    let mut out = template.clone();
    let nf = out.num_freqs();
    let mags: Vec<f64> = (0..nf)
        .map(|c| {
            let xi = out.freq_lattice.point_flat(c);
            amp(xi.iter().map(|v| v * v).sum::<f64>().sqrt())
        })
        .collect();
    for s in 0..out.num_shifts() {
        for c in 0..nf {
            out.values[s * nf + c] = Complex64::new(mags[c], 0.0);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::windows::WindowSpec;

    fn template() -> CoefficientField {
        let l = Lattice::new(vec![-4.0, -4.0], vec![1.0 / 16.0, 1.0 / 16.0], vec![128, 128]).unwrap();
        let f = SampledField::zeros(l, "0");
        let frame = DirectionFrame::canonical(1, 2).unwrap();
        let bank = WindowBank::analysis_only(vec![WindowSpec::bump(1.0).unwrap()]).unwrap();
        let shifts = Lattice::new(vec![-1.0], vec![0.5], vec![5]).unwrap();
        dstft_forward(&f, &frame, &bank, &shifts).unwrap()
    }

    fn query(axis: &[f64]) -> ConeQuery {
        ConeQuery::new(vec![0.0], 0.5, axis, PI / 6.0, 1.0, 4.0, 6).unwrap()
    }

    #[test]
    fn zero_coefficients_give_zero_shells_and_below_floor() {
        let c = template();
        let p = cone_supremum(&c, &query(&[1.0, 0.0])).unwrap();
        assert!(p.sup.iter().all(|&s| s == 0.0));
        let r = analyze_cell(&c, &query(&[1.0, 0.0]), &DetectorParams::default()).unwrap();
        assert_eq!(r.verdict, Verdict::BelowFloor);
        assert!(r.verdict.is_regular());
    }

    #[test]
    fn planted_power_law_is_recovered() {
        let c = planted_field(&template(), |r| 1.0 / (1.0 + r * r));
        let q = query(&[0.0, 1.0]);
        let p = cone_supremum(&c, &q).unwrap();
        let dxi = c.freq_lattice.step()[0];
        for (r, s) in p.radii.iter().zip(&p.sup) {
            // The nearest bin above r is at most one radial step further out.
            let hi = 1.0 / (1.0 + r * r);
            let lo = 1.0 / (1.0 + (r + dxi) * (r + dxi));
            assert!(*s <= hi && *s >= lo, "{r}: {s}");
        }
        let exact = fit_decay(&p.radii, &p.radii.iter().map(|r| 1.0 / (1.0 + r * r)).collect::<Vec<_>>(), 1e-12);
        assert!((exact.n_hat - 2.0).abs() < 1e-12);
        assert!((exact.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_shells_have_zero_order() {
        let r = [1.0, 2.0, 3.0, 4.0, 5.0];
        let fit = fit_decay(&r, &[0.5; 5], 1e-12);
        assert_eq!(fit.kind, FitKind::Resolved);
        assert_eq!(fit.n_hat, 0.0);
        assert_eq!(fit.r2, 1.0);
    }

    #[test]
    fn exponential_decay_looks_superpolynomial() {
        let mut last = 0.0;
        // The fitted order keeps growing with the band, passing every fixed N.
        for r_max in [20.0, 40.0, 80.0, 160.0] {
            let radii: Vec<f64> = (0..8).map(|j| 2.0 * (r_max / 2.0f64).powf(j as f64 / 8.0)).collect();
            let sup: Vec<f64> = radii.iter().map(|r| (-r).exp()).collect();
            let fit = fit_decay(&radii, &sup, 1e-300);
            assert!(fit.n_hat > last, "{r_max}: {}", fit.n_hat);
            last = fit.n_hat;
        }
        assert!(last > 16.0, "{last}");
        let radii: Vec<f64> = (0..8).map(|j| 2.0 * 20.0f64.powf(j as f64 / 8.0)).collect();
        let sup: Vec<f64> = radii.iter().map(|r| (-r).exp()).collect();
        let fit = fit_decay(&radii, &sup, 1e-300);
        assert_eq!(classify(&fit, &[100; 8], &DetectorParams::default()), Verdict::Regular);
    }

    #[test]
    fn classification_rules() {
        let p = DetectorParams::default();
        let fit = |n_hat: f64, r2: f64, kind| DecayFit { kind, slope: -n_hat, intercept: 0.0, n_hat, r2, points: 5 };
        let bins = [100; 5];
        assert_eq!(classify(&fit(12.0, 0.97, FitKind::Resolved), &bins, &p), Verdict::Regular);
        assert_eq!(classify(&fit(2.0, 0.99, FitKind::Resolved), &bins, &p), Verdict::Singular);
        assert_eq!(classify(&fit(2.0, 0.5, FitKind::Resolved), &bins, &p), Verdict::Inconclusive);
        assert_eq!(classify(&fit(9.0, 1.0, FitKind::FloorBound), &bins, &p), Verdict::Regular);
        assert_eq!(classify(&fit(3.0, 1.0, FitKind::FloorBound), &bins, &p), Verdict::Inconclusive);
        assert_eq!(classify(&fit(2.0, 0.99, FitKind::Resolved), &[100, 100, 3, 100, 100], &p), Verdict::Inconclusive);
        let below = fit_decay(&[1.0, 2.0, 3.0, 4.0], &[0.0; 4], 1e-12);
        assert_eq!(classify(&below, &[100; 4], &p), Verdict::BelowFloor);
    }

    #[test]
    fn floor_crossing_gives_lower_bound() {
        let radii = [1.0, 2.0, 4.0, 8.0, 16.0];
        let sup = [1e-6, 1e-10, 1e-13, 0.0, 0.0];
        let fit = fit_decay(&radii, &sup, 1e-12);
        assert_eq!(fit.kind, FitKind::FloorBound);
        assert_eq!(fit.points, 3);
        assert!(fit.n_hat > 8.0);
        let few = fit_decay(&radii, &[1e-3, 1e-4, f64::NAN, f64::NAN, f64::NAN], 1e-12);
        assert_eq!(few.kind, FitKind::Insufficient);
    }

    #[test]
    fn query_validation() {
        let c = template();
        let fl = &c.freq_lattice;
        assert!(query(&[1.0, 0.0]).validate(fl, 1).is_ok());
        let mut q = query(&[1.0, 0.0]);
        q.half_angle = PI / 2.0;
        assert!(q.validate(fl, 1).is_err());
        let mut q = query(&[1.0, 0.0]);
        q.shells = 3;
        assert!(q.validate(fl, 1).is_err());
        let mut q = query(&[1.0, 0.0]);
        q.r_max = 0.5 * fl.min_nyquist() + 1.0;
        assert!(q.validate(fl, 1).is_err());
        let mut q = query(&[1.0, 0.0]);
        q.r_min = fl.max_step();
        assert!(q.validate(fl, 1).is_err());
        let mut q = query(&[1.0, 0.0]);
        q.center = vec![10.0];
        assert!(matches!(cone_supremum(&c, &q), Err(Error::EmptyBall)));
    }

    #[test]
    fn shrinking_cannot_raise_suprema() {
        let c = planted_field(&template(), |r| (1.0 + r).powf(-1.5) * (1.0 + 0.3 * (5.0 * r).sin()));
        let q = query(&[0.6, 0.8]);
        let big = cone_supremum(&c, &q).unwrap();
        let small = cone_supremum(&c, &q.shrunk(0.5)).unwrap();
        for (a, b) in small.sup.iter().zip(&big.sup) {
            assert!(a <= b);
        }
    }

    #[test]
    fn noncompact_windows_need_opt_in() {
        let g = WindowBank::analysis_only(vec![WindowSpec::gaussian(1.0).unwrap()]).unwrap();
        assert!(matches!(check_detector_windows(&g, false), Err(Error::WindowPrecondition(_))));
        assert!(check_detector_windows(&g, true).is_ok());
    }

    #[test]
    fn default_direction_grids_respect_spacing() {
        let d2 = uniform_directions(2, PI / 6.0).unwrap();
        assert_eq!(d2.len(), 12);
        let d3 = uniform_directions(3, PI / 4.0).unwrap();
        // Every point of the sphere is within the spacing of some grid direction.
        for (a, b) in [(0.3f64, 1.1f64), (2.0, -2.5), (1.57, 0.0), (0.01, 3.0)] {
            let p = [a.sin() * b.cos(), a.sin() * b.sin(), a.cos()];
            let best = d3
                .iter()
                .map(|d| d.iter().zip(&p).map(|(x, y)| x * y).sum::<f64>().clamp(-1.0, 1.0).acos())
                .fold(f64::INFINITY, f64::min);
            assert!(best <= PI / 4.0, "{best}");
        }
        assert!(uniform_directions(4, 0.5).is_err());
    }

    #[test]
    fn infinite_order_serializes_as_null() {
        let c = template();
        let r = analyze_cell(&c, &query(&[1.0, 0.0]), &DetectorParams::default()).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert!(json["n_hat"].is_null());
    }
}
