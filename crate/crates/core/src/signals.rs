//! Synthetic signals with known singular structure, and the wave-front
//! skeleton each one should produce.

use std::f64::consts::PI;
use std::path::PathBuf;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::directions::{interpolate, DirectionFrame};
use crate::error::{Error, Result};
use crate::lattice::{Lattice, SampledField};

pub const RECIPE_VERSION: &str = "SIG v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Width {
    Isotropic(f64),
    PerAxis(Vec<f64>),
}

impl Width {
    fn axis(&self, a: usize) -> f64 {
        match self {
            Width::Isotropic(s) => *s,
            Width::PerAxis(v) => v[a],
        }
    }
}

/// Peak-normalized Gaussian `exp(−Σ (tₐ − cₐ)² / (2σₐ²))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    pub sigma: Width,
}

impl Envelope {
    pub fn isotropic(sigma: f64) -> Self {
        Self { center: None, sigma: Width::Isotropic(sigma) }
    }

    pub fn per_axis(sigma: Vec<f64>) -> Self {
        Self { center: None, sigma: Width::PerAxis(sigma) }
    }

    fn eval(&self, t: &[f64]) -> f64 {
        let q: f64 = t
            .iter()
            .enumerate()
            .map(|(a, &x)| {
                let c = self.center.as_ref().map_or(0.0, |c| c[a]);
                let z = (x - c) / self.sigma.axis(a);
                z * z
            })
            .sum();
        (-0.5 * q).exp()
    }

    fn validate(&self, n: usize) -> Result<()> {
        let ok_sigma = match &self.sigma {
            Width::Isotropic(s) => *s > 0.0 && s.is_finite(),
            Width::PerAxis(v) => v.len() == n && v.iter().all(|s| *s > 0.0 && s.is_finite()),
        };
        let ok_center = self.center.as_ref().map_or(true, |c| c.len() == n);
        if ok_sigma && ok_center {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!("envelope does not fit ℝ^{n}: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedRecipe {
    pub weight: f64,
    pub recipe: SignalRecipe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalRecipe {
    Gaussian {
        center: Vec<f64>,
        sigma: Width,
    },
    /// `sign(u·t − c) · G(t)` with `sign(0) = 0`.
    JumpRidge {
        u: Vec<f64>,
        c: f64,
        envelope: Envelope,
    },
    /// `e^{2πi ξ₀·t} · G(t)`.
    PlaneWave {
        xi0: Vec<f64>,
        envelope: Envelope,
    },
    /// Unit-mass Gaussian of width `w` in the coordinate `u·t − c`, times
    /// `G(t)`. `w` defaults to twice the smallest lattice step.
    RidgeSpike {
        u: Vec<f64>,
        c: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        w: Option<f64>,
        envelope: Envelope,
    },
    Sum {
        terms: Vec<WeightedRecipe>,
    },
    /// Samples read from an SFLD file and interpolated onto the lattice.
    Sampled {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipeFile {
    pub version: String,
    pub recipe: SignalRecipe,
}

impl RecipeFile {
    pub fn new(recipe: SignalRecipe) -> Self {
        Self { version: RECIPE_VERSION.to_string(), recipe }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: RecipeFile = serde_json::from_str(text)?;
        if file.version != RECIPE_VERSION {
            return Err(Error::Format(format!("unsupported recipe version `{}`", file.version)));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("recipes serialize")
    }
}

fn unit(u: &[f64]) -> Result<Vec<f64>> {
    let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::InvalidDirections { token: format!("{u:?}"), reason: "zero or non-finite".into() });
    }
    Ok(u.iter().map(|x| x / norm).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Pointwise evaluator for a recipe prepared against a lattice.
enum Prepared {
    Gaussian(Envelope),
    Jump { u: Vec<f64>, c: f64, env: Envelope },
    Wave { xi0: Vec<f64>, env: Envelope },
    Spike { u: Vec<f64>, c: f64, w: f64, env: Envelope },
    Sum(Vec<(f64, Prepared)>),
    Sampled(SampledField),
}

impl Prepared {
    fn new(recipe: &SignalRecipe, lattice: &Lattice) -> Result<Self> {
        let n = lattice.dim();
        let check_vec = |v: &[f64], what: &str| {
            if v.len() == n {
                Ok(())
            } else {
                Err(Error::DimensionMismatch(format!("{what} has {} entries in ℝ^{n}", v.len())))
            }
        };
        Ok(match recipe {
            SignalRecipe::Gaussian { center, sigma } => {
                let env = Envelope { center: Some(center.clone()), sigma: sigma.clone() };
                env.validate(n)?;
                Prepared::Gaussian(env)
            }
            SignalRecipe::JumpRidge { u, c, envelope } => {
                check_vec(u, "u")?;
                envelope.validate(n)?;
                Prepared::Jump { u: unit(u)?, c: *c, env: envelope.clone() }
            }
            SignalRecipe::PlaneWave { xi0, envelope } => {
                check_vec(xi0, "ξ₀")?;
                envelope.validate(n)?;
                Prepared::Wave { xi0: xi0.clone(), env: envelope.clone() }
            }
            SignalRecipe::RidgeSpike { u, c, w, envelope } => {
                check_vec(u, "u")?;
                envelope.validate(n)?;
                let w = w.unwrap_or_else(|| 2.0 * lattice.step().iter().copied().fold(f64::INFINITY, f64::min));
                if !(w > 0.0 && w.is_finite()) {
                    return Err(Error::InvalidQuery(format!("ridge width {w} must be positive")));
                }
                Prepared::Spike { u: unit(u)?, c: *c, w, env: envelope.clone() }
            }
            SignalRecipe::Sum { terms } => Prepared::Sum(
                terms
                    .iter()
                    .map(|t| Ok((t.weight, Prepared::new(&t.recipe, lattice)?)))
                    .collect::<Result<_>>()?,
            ),
            SignalRecipe::Sampled { path } => {
                let field = crate::io::read_field(path)?;
                if field.lattice.dim() != n {
                    return Err(Error::DimensionMismatch("sampled signal dimension".into()));
                }
                Prepared::Sampled(field)
            }
        })
    }

    fn eval(&self, t: &[f64]) -> Complex64 {
        match self {
            Prepared::Gaussian(env) => Complex64::new(env.eval(t), 0.0),
            Prepared::Jump { u, c, env } => Complex64::new(sign(dot(u, t) - c) * env.eval(t), 0.0),
            Prepared::Wave { xi0, env } => Complex64::from_polar(env.eval(t), 2.0 * PI * dot(xi0, t)),
            Prepared::Spike { u, c, w, env } => {
                let z = (dot(u, t) - c) / w;
                Complex64::new((-0.5 * z * z).exp() / ((2.0 * PI).sqrt() * w) * env.eval(t), 0.0)
            }
            Prepared::Sum(terms) => terms.iter().map(|(w, p)| p.eval(t) * *w).sum(),
            Prepared::Sampled(field) => interpolate(field, t),
        }
    }
}

/// Samples the recipe on every lattice point.
pub fn render(recipe: &SignalRecipe, lattice: &Lattice) -> Result<SampledField> {
    let prepared = Prepared::new(recipe, lattice)?;
    let n = lattice.dim();
    let values = (0..lattice.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |t, j| {
                lattice.point_flat_into(j, t);
                prepared.eval(t)
            },
        )
        .collect();
    SampledField::new(lattice.clone(), values, recipe_label(recipe))
}

fn recipe_label(recipe: &SignalRecipe) -> String {
    match recipe {
        SignalRecipe::Gaussian { .. } => "gaussian".into(),
        SignalRecipe::JumpRidge { .. } => "jump_ridge".into(),
        SignalRecipe::PlaneWave { .. } => "plane_wave".into(),
        SignalRecipe::RidgeSpike { .. } => "ridge_spike".into(),
        SignalRecipe::Sum { terms } => format!(
            "sum({})",
            terms.iter().map(|t| recipe_label(&t.recipe)).collect::<Vec<_>>().join(",")
        ),
        SignalRecipe::Sampled { path } => format!("sampled({})", path.display()),
    }
}

/// A hyperplane `{t : normal·t = offset}` whose conormal directions `±normal`
/// are singular.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Front {
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub fronts: Vec<Front>,
}

/// Declarative singular set of a recipe.
pub fn ground_truth(recipe: &SignalRecipe) -> Result<GroundTruth> {
    match recipe {
        SignalRecipe::Gaussian { .. } | SignalRecipe::PlaneWave { .. } => Ok(GroundTruth::default()),
        SignalRecipe::JumpRidge { u, c, .. } | SignalRecipe::RidgeSpike { u, c, .. } => {
            let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            let normal = unit(u)?;
            Ok(GroundTruth { fronts: vec![Front { normal, offset: c / norm }] })
        }
        SignalRecipe::Sum { terms } => {
            let mut fronts = Vec::new();
            for t in terms.iter().filter(|t| t.weight != 0.0) {
                for f in ground_truth(&t.recipe)?.fronts {
                    if !fronts.contains(&f) {
                        fronts.push(f);
                    }
                }
            }
            Ok(GroundTruth { fronts })
        }
        SignalRecipe::Sampled { .. } => Err(Error::UnknownKind("sampled signals have no declared wave front".into())),
    }
}

impl GroundTruth {
    /// Expected verdict for the cell at shift-space `center` and cone axis
    /// `direction`: singular iff some front passes within `radius + window_radius`
    /// of the center and the axis is within `half_angle` of its normal (either sign).
    ///
    /// Only fronts whose normal is parallel to one of the frame directions have
    /// a well-defined distance in shift coordinates.
    pub fn expect_singular(
        &self,
        frame: &DirectionFrame,
        center: &[f64],
        direction: &[f64],
        radius: f64,
        window_radius: f64,
        half_angle: f64,
    ) -> Result<bool> {
        let dnorm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        for front in &self.fronts {
            let (i, s) = (0..frame.k())
                .find_map(|i| {
                    let d = dot(frame.direction(i), &front.normal);
                    ((d.abs() - 1.0).abs() < 1e-12).then(|| (i, d.signum()))
                })
                .ok_or_else(|| {
                    Error::UnknownKind(format!(
                        "front normal {:?} is not parallel to a frame direction",
                        front.normal
                    ))
                })?;
            let near = (center[i] - s * front.offset).abs() < radius + window_radius;
            let cos = dot(direction, &front.normal).abs() / dnorm;
            let aligned = cos.clamp(-1.0, 1.0).acos() <= half_angle + 1e-12;
            if near && aligned {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Center-major expected singular flags over `centers × directions`.
    pub fn skeleton(
        &self,
        frame: &DirectionFrame,
        centers: &[Vec<f64>],
        directions: &[Vec<f64>],
        radius: f64,
        window_radius: f64,
        half_angle: f64,
    ) -> Result<Vec<bool>> {
        let mut out = Vec::with_capacity(centers.len() * directions.len());
        for c in centers {
            for d in directions {
                out.push(self.expect_singular(frame, c, d, radius, window_radius, half_angle)?);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lattice2() -> Lattice {
        Lattice::new(vec![-2.0, -2.0], vec![0.25, 0.25], vec![16, 16]).unwrap()
    }

    fn jump() -> SignalRecipe {
        SignalRecipe::JumpRidge { u: vec![1.0, 0.0], c: 0.0, envelope: Envelope::isotropic(1.0) }
    }

    #[test]
    fn gaussian_is_peak_normalized() {
        let r = SignalRecipe::Gaussian { center: vec![0.0, 0.0], sigma: Width::Isotropic(1.0) };
        let f = render(&r, &lattice2()).unwrap();
        let j = f.lattice.ravel(&f.lattice.index_of(&[0.0, 0.0]).unwrap());
        assert_eq!(f.values[j], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn jump_sign_convention() {
        let f = render(&jump(), &lattice2()).unwrap();
        for j in 0..f.lattice.len() {
            let t = f.lattice.point_flat(j);
            let g = (-(t[0] * t[0] + t[1] * t[1]) / 2.0).exp();
            let expect = if t[0] > 0.0 { g } else if t[0] < 0.0 { -g } else { 0.0 };
            assert_eq!(f.values[j].re, expect);
        }
    }

    #[test]
    fn spike_has_unit_mass_across_the_ridge() {
        let l = Lattice::new(vec![-1.0], vec![0.001], vec![2000]).unwrap();
        let r = SignalRecipe::RidgeSpike { u: vec![1.0], c: 0.1, w: Some(0.02), envelope: Envelope::isotropic(1e6) };
        let f = render(&r, &l).unwrap();
        let mass = crate::lattice::riemann_integral(&f).re;
        assert!((mass - 1.0).abs() < 1e-9, "{mass}");
        let default_w = SignalRecipe::RidgeSpike { u: vec![1.0], c: 0.0, w: None, envelope: Envelope::isotropic(1.0) };
        let g = render(&default_w, &l).unwrap();
        let peak = g.values.iter().map(|v| v.re).fold(0.0, f64::max);
        assert!((peak - 1.0 / ((2.0 * PI).sqrt() * 0.002)).abs() < 1e-6 * peak);
    }

    #[test]
    fn recipe_json_round_trip_is_bit_exact() {
        let r = SignalRecipe::Sum {
            terms: vec![
                WeightedRecipe { weight: 0.1 + 0.2, recipe: jump() },
                WeightedRecipe {
                    weight: -1.0 / 3.0,
                    recipe: SignalRecipe::PlaneWave { xi0: vec![0.7, -1.3], envelope: Envelope::per_axis(vec![0.08, 0.5]) },
                },
            ],
        };
        let text = RecipeFile::new(r.clone()).to_json();
        let back = RecipeFile::from_json(&text).unwrap();
        assert_eq!(back.recipe, r);
        let a = render(&r, &lattice2()).unwrap();
        let b = render(&back.recipe, &lattice2()).unwrap();
        assert!(a.values.iter().zip(&b.values).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
        assert!(RecipeFile::from_json(&text.replace("SIG v1", "SIG v0")).is_err());
    }

    #[test]
    fn ground_truth_skeleton_for_jump() {
        let frame = DirectionFrame::canonical(1, 2).unwrap();
        let gt = ground_truth(&jump()).unwrap();
        let centers: Vec<Vec<f64>> = [-2.0, -1.0, 0.0, 1.0, 2.0].iter().map(|&x| vec![x]).collect();
        let dirs = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]];
        let sk = gt.skeleton(&frame, &centers, &dirs, 0.5, 1.0, PI / 6.0).unwrap();
        let singular_centers: Vec<f64> = (0..5).filter(|&i| sk[i * 3]).map(|i| centers[i][0]).collect();
        assert_eq!(singular_centers, vec![-1.0, 0.0, 1.0]);
        for i in 0..5 {
            assert!(!sk[i * 3 + 1]);
            assert_eq!(sk[i * 3], sk[i * 3 + 2]);
        }
    }

    #[test]
    fn ground_truth_of_smooth_and_summed_signals() {
        let g = SignalRecipe::Gaussian { center: vec![0.0, 0.0], sigma: Width::Isotropic(1.0) };
        assert!(ground_truth(&g).unwrap().fronts.is_empty());
        let j2 = SignalRecipe::JumpRidge { u: vec![0.0, 2.0], c: 1.0, envelope: Envelope::isotropic(1.0) };
        let sum = SignalRecipe::Sum {
            terms: vec![WeightedRecipe { weight: 1.0, recipe: jump() }, WeightedRecipe { weight: 1.0, recipe: j2 }],
        };
        let gt = ground_truth(&sum).unwrap();
        assert_eq!(gt.fronts.len(), 2);
        assert_eq!(gt.fronts[1], Front { normal: vec![0.0, 1.0], offset: 0.5 });
        let frame = DirectionFrame::canonical(2, 2).unwrap();
        assert!(gt.expect_singular(&frame, &[0.0, 3.0], &[1.0, 0.0], 0.5, 1.0, 0.5).unwrap());
        assert!(gt.expect_singular(&frame, &[3.0, 0.5], &[0.0, -1.0], 0.5, 1.0, 0.5).unwrap());
        assert!(!gt.expect_singular(&frame, &[3.0, 3.0], &[0.0, 1.0], 0.5, 1.0, 0.5).unwrap());
        let sampled = SignalRecipe::Sampled { path: "x.json".into() };
        assert!(matches!(ground_truth(&sampled), Err(Error::UnknownKind(_))));
        let oblique = ground_truth(&SignalRecipe::JumpRidge { u: vec![1.0, 1.0], c: 0.0, envelope: Envelope::isotropic(1.0) }).unwrap();
        let e1 = DirectionFrame::canonical(1, 2).unwrap();
        assert!(oblique.expect_singular(&e1, &[0.0], &[1.0, 0.0], 0.5, 1.0, 0.5).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn render_is_linear(alpha in -2.0f64..2.0, beta in -2.0f64..2.0, c in -1.0f64..1.0) {
            let a = jump();
            let b = SignalRecipe::PlaneWave { xi0: vec![0.5, c], envelope: Envelope::isotropic(0.7) };
            let sum = SignalRecipe::Sum {
                terms: vec![
                    WeightedRecipe { weight: alpha, recipe: a.clone() },
                    WeightedRecipe { weight: beta, recipe: b.clone() },
                ],
            };
            let l = lattice2();
            let fs = render(&sum, &l).unwrap();
            let fa = render(&a, &l).unwrap();
            let fb = render(&b, &l).unwrap();
            for j in 0..l.len() {
                let expect = fa.values[j] * alpha + fb.values[j] * beta;
                prop_assert!((fs.values[j] - expect).norm() <= 1e-15 * (1.0 + expect.norm()));
            }
        }
    }
}
