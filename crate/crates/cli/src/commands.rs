use std::path::{Path, PathBuf};

use clap::Args;
use dstft::io::{read_coefficients, read_field, write_coefficients, write_field};
use dstft::signals::{Envelope, RecipeFile, SignalRecipe, Width, WeightedRecipe};
use dstft::transform::default_shift_lattice;
use dstft::wavefront::{uniform_directions, wavefront_map, MapSettings};
use dstft::windowchange::{convergence_csv, convergence_study, verify_window_change};
use dstft::{
    dstft_forward, ground_truth, invert, parseval_check, render, synthesis, DetectorParams, DirectionFrame,
    Lattice, Reduction, SampledField, WindowBank, WindowSpec,
};
use serde_json::json;

use crate::manifest::{write_json, write_text, CliError, Manifest};
use crate::parse;
use crate::Global;

type Res = Result<(), CliError>;

fn reduction(g: &Global) -> Reduction {
    if g.fast_reduce {
        Reduction::Fast
    } else {
        Reduction::Ordered
    }
}

fn names(ws: &[WindowSpec]) -> Vec<String> {
    ws.iter().map(|w| w.to_string()).collect()
}

fn finish(g: &Global, mut m: Manifest, outputs: &[&Path]) -> Result<Manifest, CliError> {
    for p in outputs {
        m.output(p);
    }
    let path = m.write(&g.out_dir)?;
    println!("wrote {}", path.display());
    Ok(m)
}

#[derive(Args, Debug, Clone)]
pub struct ShiftArgs {
    /// Shift lattice step per direction (one value or one per direction).
    #[arg(long)]
    pub shift_step: Option<String>,
    /// First shift per direction.
    #[arg(long, allow_hyphen_values = true)]
    pub shift_min: Option<String>,
    /// Last shift per direction (inclusive, rounded to the step).
    #[arg(long, allow_hyphen_values = true)]
    pub shift_max: Option<String>,
}

impl ShiftArgs {
    /// Explicit lattice when all three flags are set; otherwise the default
    /// (step four times the finest signal step, covering the projected box).
    fn resolve(&self, signal: &Lattice, frame: &DirectionFrame) -> Result<Lattice, CliError> {
        let k = frame.k();
        match (&self.shift_step, &self.shift_min, &self.shift_max) {
            (None, None, None) => Ok(default_shift_lattice(signal, frame)?),
            (Some(s), Some(lo), Some(hi)) => {
                let step = parse::broadcast("shift-step", parse::floats("shift-step", s)?, k)?;
                let lo = parse::broadcast("shift-min", parse::floats("shift-min", lo)?, k)?;
                let hi = parse::broadcast("shift-max", parse::floats("shift-max", hi)?, k)?;
                let count = (0..k)
                    .map(|i| {
                        let n = ((hi[i] - lo[i]) / step[i]).round();
                        if n.is_finite() && n >= 1.0 {
                            Ok(n as usize + 1)
                        } else {
                            Err(CliError::config("--shift-max must exceed --shift-min by at least one step"))
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Lattice::new(lo, step, count)?)
            }
            _ => Err(CliError::config("--shift-step, --shift-min and --shift-max go together")),
        }
    }
}

fn frame_for(dirs: Option<&str>, k: usize, n: usize) -> Result<DirectionFrame, CliError> {
    match dirs {
        None => Ok(DirectionFrame::canonical(k, n)?),
        Some(text) => {
            let u = parse::vectors(text)?;
            if u.len() != k {
                return Err(CliError::config(format!("{} directions for {k} windows", u.len())));
            }
            Ok(DirectionFrame::new(&u, n)?)
        }
    }
}

fn load(path: &Path) -> Result<SampledField, CliError> {
    parse::existing(path)?;
    Ok(read_field(path)?)
}

// gen

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Recipe file (`SIG v1`). Alternative to `--kind`.
    #[arg(long, conflicts_with = "kind")]
    pub recipe: Option<PathBuf>,
    /// gaussian, jump_ridge, ridge_spike or plane_wave.
    #[arg(long)]
    pub kind: Option<String>,
    /// Ridge normal for jump_ridge and ridge_spike, e.g. "1,0".
    #[arg(long, allow_hyphen_values = true)]
    pub dirs: Option<String>,
    /// Ridge offset c in `u·t = c`.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub offset: f64,
    /// Envelope width, one value or one per axis.
    #[arg(long, default_value = "1")]
    pub sigma: String,
    /// Envelope center (default: origin).
    #[arg(long, allow_hyphen_values = true)]
    pub center: Option<String>,
    /// Ridge spike width (default: twice the finest step).
    #[arg(long)]
    pub width: Option<f64>,
    /// Plane wave frequency.
    #[arg(long, allow_hyphen_values = true)]
    pub xi0: Option<String>,
    #[arg(long)]
    pub step: Option<String>,
    #[arg(long)]
    pub count: Option<String>,
    /// Lattice origin (default: centered on 0).
    #[arg(long, allow_hyphen_values = true)]
    pub origin: Option<String>,
    #[arg(long, default_value = "signal.json")]
    pub out: PathBuf,
}

fn normalized(recipe: SignalRecipe) -> SignalRecipe {
    let fix = |u: Vec<f64>| {
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 && norm.is_finite() {
            parse::unit(&u)
        } else {
            u
        }
    };
    match recipe {
        SignalRecipe::JumpRidge { u, c, envelope } => SignalRecipe::JumpRidge { u: fix(u), c, envelope },
        SignalRecipe::RidgeSpike { u, c, w, envelope } => SignalRecipe::RidgeSpike { u: fix(u), c, w, envelope },
        SignalRecipe::Sum { terms } => SignalRecipe::Sum {
            terms: terms
                .into_iter()
                .map(|t| WeightedRecipe { weight: t.weight, recipe: normalized(t.recipe) })
                .collect(),
        },
        other => other,
    }
}

fn recipe_from_flags(a: &GenArgs, n: usize) -> Result<SignalRecipe, CliError> {
    let sigma = parse::floats("sigma", &a.sigma)?;
    let sigma = if sigma.len() == 1 { Width::Isotropic(sigma[0]) } else { Width::PerAxis(sigma) };
    let center = a.center.as_deref().map(|c| parse::floats("center", c)).transpose()?;
    let envelope = Envelope { center: center.clone(), sigma: sigma.clone() };
    let normal = || -> Result<Vec<f64>, CliError> {
        let text = a.dirs.as_deref().ok_or_else(|| CliError::config("this kind needs --dirs"))?;
        let mut v = parse::vectors(text)?;
        if v.len() != 1 {
            return Err(CliError::config("--dirs must hold exactly one ridge normal"));
        }
        Ok(v.remove(0))
    };
    let kind = a.kind.as_deref().ok_or_else(|| CliError::config("pass --recipe or --kind"))?;
    Ok(match kind {
        "gaussian" => SignalRecipe::Gaussian { center: center.unwrap_or_else(|| vec![0.0; n]), sigma },
        "jump_ridge" => SignalRecipe::JumpRidge { u: normal()?, c: a.offset, envelope },
        "ridge_spike" => SignalRecipe::RidgeSpike { u: normal()?, c: a.offset, w: a.width, envelope },
        "plane_wave" => {
            let xi0 = a.xi0.as_deref().ok_or_else(|| CliError::config("plane_wave needs --xi0"))?;
            SignalRecipe::PlaneWave { xi0: parse::floats("xi0", xi0)?, envelope }
        }
        other => return Err(CliError::config(format!("unknown signal kind `{other}`"))),
    })
}

pub fn gen(g: &Global, a: &GenArgs) -> Res {
    if let Some(p) = &a.recipe {
        parse::existing(p)?;
    }
    let lattice = parse::lattice(a.step.as_deref(), a.count.as_deref(), a.origin.as_deref())?;
    let recipe = match &a.recipe {
        Some(p) => RecipeFile::from_json(&std::fs::read_to_string(p)?)?.recipe,
        None => recipe_from_flags(a, lattice.dim())?,
    };
    let recipe = normalized(recipe);
    let field = render(&recipe, &lattice)?;
    let out = g.out_dir.join(&a.out);
    write_field(&out, &field)?;
    let m = Manifest::new(
        g,
        "gen",
        json!({ "recipe": RecipeFile::new(recipe), "lattice": lattice }),
    );
    finish(g, m, &[&out])?;
    println!("wrote {}", out.display());
    Ok(())
}

// dstft / roundtrip

#[derive(Args, Debug)]
pub struct TransformArgs {
    /// Input signal (SFLD v1 header).
    #[arg(long)]
    pub input: PathBuf,
    /// Analysis windows, one per direction, separated by `;`.
    #[arg(long, default_value = "gaussian:σ=1")]
    pub windows: String,
    /// Synthesis windows (default: the analysis windows).
    #[arg(long)]
    pub synth_windows: Option<String>,
    /// Directions, e.g. "0.7071,0.7071;1,0" (default: leading coordinate axes).
    #[arg(long, allow_hyphen_values = true)]
    pub dirs: Option<String>,
    #[command(flatten)]
    pub shifts: ShiftArgs,
    /// Output file name inside the output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub type DstftArgs = TransformArgs;

struct Prepared {
    field: SampledField,
    frame: DirectionFrame,
    bank: WindowBank,
    shifts: Lattice,
}

fn prepare(a: &TransformArgs) -> Result<Prepared, CliError> {
    parse::existing(&a.input)?;
    let analysis = parse::windows(&a.windows)?;
    let synth = match &a.synth_windows {
        Some(s) => parse::windows(s)?,
        None => analysis.clone(),
    };
    let field = load(&a.input)?;
    let frame = frame_for(a.dirs.as_deref(), analysis.len(), field.lattice.dim())?;
    let bank = WindowBank::new(analysis, synth)?;
    let shifts = a.shifts.resolve(&field.lattice, &frame)?;
    Ok(Prepared { field, frame, bank, shifts })
}

fn transform_config(a: &TransformArgs, p: &Prepared) -> serde_json::Value {
    json!({
        "input": a.input,
        "analysis": names(p.bank.analysis()),
        "synthesis": names(p.bank.synthesis()),
        "frame": p.frame,
        "signal_lattice": p.field.lattice,
        "shift_lattice": p.shifts,
    })
}

pub fn dstft(g: &Global, a: &DstftArgs) -> Res {
    let p = prepare(a)?;
    let coeffs = dstft_forward(&p.field, &p.frame, &p.bank, &p.shifts)?;
    let out = g.out_dir.join(a.out.clone().unwrap_or_else(|| "coeffs.json".into()));
    write_coefficients(&out, &coeffs)?;
    finish(g, Manifest::new(g, "dstft", transform_config(a, &p)), &[&out])?;
    println!("wrote {}", out.display());
    Ok(())
}

pub fn roundtrip(g: &Global, a: &TransformArgs) -> Res {
    let p = prepare(a)?;
    let pairing = p.bank.pairing(None)?;
    let coeffs = dstft_forward(&p.field, &p.frame, &p.bank, &p.shifts)?;
    let back = invert(&coeffs, p.bank.synthesis(), &p.field.lattice, reduction(g))?;
    let err = back.rel_l2_error(&p.field)?;
    let out = g.out_dir.join(a.out.clone().unwrap_or_else(|| "reconstruction.json".into()));
    let report_path = g.out_dir.join("roundtrip.json");
    write_field(&out, &back)?;
    let m = finish(g, Manifest::new(g, "roundtrip", transform_config(a, &p)), &[&out, &report_path])?;
    write_json(
        &report_path,
        &json!({
            "manifest": m,
            "rel_l2_error": err,
            "pairing": { "re": pairing.re, "im": pairing.im },
            "grids": {
                "signal_lattice": coeffs.signal_lattice,
                "shift_lattice": coeffs.shift_lattice,
                "freq_lattice": coeffs.freq_lattice,
            },
        }),
    )?;
    println!("rel_l2_error {err:e}");
    Ok(())
}

// synth

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Coefficient file (DSTC v1 header).
    #[arg(long)]
    pub input: PathBuf,
    /// Synthesis windows (default: those recorded in the coefficient file).
    #[arg(long)]
    pub synth_windows: Option<String>,
    /// Apply the synthesis operator only, without dividing by the pairing.
    #[arg(long)]
    pub raw: bool,
    #[arg(long, default_value = "reconstruction.json")]
    pub out: PathBuf,
}

pub fn synth(g: &Global, a: &SynthArgs) -> Res {
    parse::existing(&a.input)?;
    let coeffs = read_coefficients(&a.input)?;
    let windows = match &a.synth_windows {
        Some(s) => parse::windows(s)?,
        None => coeffs.bank.synthesis().to_vec(),
    };
    let out_lattice = coeffs.signal_lattice.clone();
    let field = if a.raw {
        synthesis(&coeffs, &windows, &out_lattice, reduction(g))?
    } else {
        invert(&coeffs, &windows, &out_lattice, reduction(g))?
    };
    let out = g.out_dir.join(&a.out);
    write_field(&out, &field)?;
    let config = json!({
        "input": a.input,
        "synthesis": names(&windows),
        "raw": a.raw,
        "out_lattice": out_lattice,
    });
    finish(g, Manifest::new(g, "synth", config), &[&out])?;
    println!("wrote {}", out.display());
    Ok(())
}

// parseval

#[derive(Args, Debug)]
pub struct ParsevalArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Second signal (default: the first).
    #[arg(long)]
    pub input2: Option<PathBuf>,
    #[arg(long, default_value = "gaussian:σ=1")]
    pub windows: String,
    #[arg(long)]
    pub synth_windows: Option<String>,
    #[command(flatten)]
    pub shifts: ShiftArgs,
    #[arg(long, default_value = "parseval.json")]
    pub out: PathBuf,
}

pub fn parseval(g: &Global, a: &ParsevalArgs) -> Res {
    parse::existing(&a.input)?;
    if let Some(p) = &a.input2 {
        parse::existing(p)?;
    }
    let analysis = parse::windows(&a.windows)?;
    let synth = match &a.synth_windows {
        Some(s) => parse::windows(s)?,
        None => analysis.clone(),
    };
    let f1 = load(&a.input)?;
    let f2 = match &a.input2 {
        Some(p) => load(p)?,
        None => f1.clone(),
    };
    let frame = DirectionFrame::canonical(analysis.len(), f1.lattice.dim())?;
    let shifts = a.shifts.resolve(&f1.lattice, &frame)?;
    let report = parseval_check(&f1, &f2, &frame, &analysis, &synth, &shifts)?;
    let out = g.out_dir.join(&a.out);
    let config = json!({
        "input": a.input,
        "input2": a.input2,
        "analysis": names(&analysis),
        "synthesis": names(&synth),
        "signal_lattice": f1.lattice,
        "shift_lattice": shifts,
    });
    let m = finish(g, Manifest::new(g, "parseval", config), &[&out])?;
    write_json(&out, &json!({ "manifest": m, "report": report }))?;
    println!("rel_err {:e}{}", report.rel_err, if report.degenerate { " (degenerate right-hand side)" } else { "" });
    Ok(())
}

// window-compare

#[derive(Args, Debug)]
pub struct WindowCompareArgs {
    /// Input signal. Alternative to `--recipe`.
    #[arg(long, conflicts_with = "recipe")]
    pub input: Option<PathBuf>,
    /// Recipe rendered on `--step/--count/--origin`; enables the convergence table.
    #[arg(long)]
    pub recipe: Option<PathBuf>,
    #[arg(long)]
    pub step: Option<String>,
    #[arg(long)]
    pub count: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub origin: Option<String>,
    /// Original analysis windows g.
    #[arg(long, default_value = "gaussian:σ=1")]
    pub windows: String,
    /// Synthesis windows γ for g (default: g scaled to unit pairing).
    #[arg(long)]
    pub gamma: Option<String>,
    /// Target analysis windows h.
    #[arg(long, default_value = "hann:a=2")]
    pub target: String,
    #[command(flatten)]
    pub shifts: ShiftArgs,
    /// Grid levels in the convergence table, each halving both steps.
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    #[arg(long, default_value = "window_compare.json")]
    pub out: PathBuf,
    #[arg(long, default_value = "convergence.csv")]
    pub csv: PathBuf,
}

pub fn window_compare(g: &Global, a: &WindowCompareArgs) -> Res {
    for p in [&a.input, &a.recipe].into_iter().flatten() {
        parse::existing(p)?;
    }
    let gw = parse::windows(&a.windows)?;
    let gamma = match &a.gamma {
        Some(s) => parse::windows(s)?,
        None => gw.iter().map(|w| w.clone().with_scale(w.scale / w.norm_sq())).collect(),
    };
    let h = parse::windows(&a.target)?;
    let (field, recipe) = match (&a.input, &a.recipe) {
        (Some(p), None) => (load(p)?, None),
        (None, Some(p)) => {
            let recipe = normalized(RecipeFile::from_json(&std::fs::read_to_string(p)?)?.recipe);
            let lattice = parse::lattice(a.step.as_deref(), a.count.as_deref(), a.origin.as_deref())?;
            (render(&recipe, &lattice)?, Some(recipe))
        }
        _ => return Err(CliError::config("pass --input or --recipe")),
    };
    let frame = DirectionFrame::canonical(gw.len(), field.lattice.dim())?;
    let shifts = a.shifts.resolve(&field.lattice, &frame)?;
    let report = verify_window_change(&field, &gw, &gamma, &h, &shifts)?;
    let out = g.out_dir.join(&a.out);
    let csv = g.out_dir.join(&a.csv);
    let rows = match &recipe {
        Some(r) if a.levels >= 2 => {
            let rows = convergence_study(
                |l: &Lattice| render(r, l).expect("recipe already rendered on the base lattice"),
                &gw,
                &gamma,
                &h,
                &field.lattice,
                &shifts,
                a.levels,
            )?;
            write_text(&csv, &convergence_csv(&rows))?;
            Some(rows)
        }
        _ => None,
    };
    let config = json!({
        "input": a.input,
        "recipe": recipe.map(RecipeFile::new),
        "analysis": names(&gw),
        "gamma": names(&gamma),
        "target": names(&h),
        "signal_lattice": field.lattice,
        "shift_lattice": shifts,
        "levels": a.levels,
    });
    let outputs: Vec<&Path> = if rows.is_some() { vec![&out, &csv] } else { vec![&out] };
    let m = finish(g, Manifest::new(g, "window-compare", config), &outputs)?;
    write_json(&out, &json!({ "manifest": m, "report": report, "convergence": rows }))?;
    println!("rel_err {:e}", report.rel_err);
    Ok(())
}

// wavefront

#[derive(Args, Debug)]
pub struct WavefrontArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Compactly supported analysis windows.
    #[arg(long, default_value = "bump:a=1")]
    pub windows: String,
    #[arg(long, allow_hyphen_values = true)]
    pub dirs: Option<String>,
    #[command(flatten)]
    pub shifts: ShiftArgs,
    /// Ball centers in shift coordinates, e.g. "-2;0;2" (default: every shift).
    #[arg(long, allow_hyphen_values = true)]
    pub centers: Option<String>,
    /// Cone axes in frequency space (default: uniform grid at the half-angle spacing).
    #[arg(long, allow_hyphen_values = true)]
    pub directions: Option<String>,
    /// Ball radius.
    #[arg(long, default_value_t = 0.5)]
    pub radius: f64,
    /// Cone half-angle in degrees.
    #[arg(long, default_value_t = 30.0)]
    pub half_angle: f64,
    /// Inner shell radius (default: half of `--r-max`).
    #[arg(long)]
    pub r_min: Option<f64>,
    /// Outer shell radius (default: half the smallest Nyquist frequency).
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long, default_value_t = 8)]
    pub shells: usize,
    /// Decay order at or above which a cell is regular.
    #[arg(long, default_value_t = 8.0)]
    pub threshold: f64,
    /// Magnitudes at or below this are treated as numerically zero.
    #[arg(long, default_value_t = 1e-12)]
    pub floor: f64,
    /// Permit non-compact windows; reports are flagged as outside the hypothesis.
    #[arg(long)]
    pub allow_noncompact: bool,
    /// Recipe whose declared fronts are compared against the verdicts.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value = "wavefront.csv")]
    pub csv: PathBuf,
    #[arg(long, default_value = "wavefront.json")]
    pub out: PathBuf,
}

pub fn wavefront(g: &Global, a: &WavefrontArgs) -> Res {
    parse::existing(&a.input)?;
    if let Some(p) = &a.truth {
        parse::existing(p)?;
    }
    let windows = parse::windows(&a.windows)?;
    let field = load(&a.input)?;
    let n = field.lattice.dim();
    let frame = frame_for(a.dirs.as_deref(), windows.len(), n)?;
    let bank = WindowBank::analysis_only(windows)?;
    let shifts = a.shifts.resolve(&field.lattice, &frame)?;
    let half_angle = a.half_angle.to_radians();
    let centers = match &a.centers {
        Some(c) => parse::vectors(c)?,
        None => (0..shifts.len()).map(|s| shifts.point_flat(s)).collect(),
    };
    let directions = match &a.directions {
        Some(d) => parse::vectors(d)?.iter().map(|v| parse::unit(v)).collect(),
        None => uniform_directions(n, half_angle)?,
    };
    let r_max = a.r_max.unwrap_or(0.5 * field.lattice.dual().min_nyquist());
    let settings = MapSettings {
        radius: a.radius,
        half_angle,
        r_min: a.r_min.unwrap_or(0.5 * r_max),
        r_max,
        shells: a.shells,
        params: DetectorParams { threshold: a.threshold, floor: a.floor, ..DetectorParams::default() },
        allow_noncompact: a.allow_noncompact,
    };
    let map = wavefront_map(&field, &frame, &bank, &shifts, &centers, Some(&directions), &settings)?;
    let truth = match &a.truth {
        Some(p) => {
            let recipe = normalized(RecipeFile::from_json(&std::fs::read_to_string(p)?)?.recipe);
            let expected = ground_truth(&recipe)?.skeleton(
                &frame,
                &centers,
                &directions,
                settings.radius,
                bank.analysis_radius(),
                half_angle,
            )?;
            let matches = map
                .cells
                .iter()
                .zip(&expected)
                .all(|(c, &sing)| (c.report.verdict == dstft::Verdict::Singular) == sing && (sing || c.report.verdict.is_regular()));
            Some(json!({ "expected_singular": expected, "matches": matches }))
        }
        None => None,
    };
    let csv = g.out_dir.join(&a.csv);
    let out = g.out_dir.join(&a.out);
    write_text(&csv, &map.to_csv())?;
    let config = json!({
        "input": a.input,
        "analysis": map.windows,
        "frame": frame,
        "signal_lattice": field.lattice,
        "shift_lattice": shifts,
        "centers": centers,
        "directions": directions,
        "settings": settings,
        "half_angle_degrees": a.half_angle,
        "truth": a.truth,
    });
    let m = finish(g, Manifest::new(g, "wavefront", config), &[&csv, &out])?;
    write_json(&out, &json!({ "manifest": m, "map": map, "ground_truth": truth }))?;
    println!(
        "{} cells, {} singular{}",
        map.cells.len(),
        map.singular_cells().len(),
        if map.outside_hypothesis { " (non-compact windows: outside the regularity definition)" } else { "" }
    );
    if let Some(t) = &truth {
        println!("ground truth match: {}", t["matches"]);
    }
    Ok(())
}
