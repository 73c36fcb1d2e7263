//! Stochastic deposition of components onto a substrate.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::geometry::{Angle, OrientedRect, Point, Region, FULL_TURN};
use crate::model::{ComponentKind, KindLibrary, ProcessSpec};
use crate::rng;
use crate::{Error, Result};

/// Intended pose of a lattice-deposited component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Target {
    pub x_nm: i64,
    pub y_nm: i64,
    pub theta_deg: Angle,
    /// The noisy position fell outside the region and was pulled back in.
    #[serde(default)]
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedComponent {
    pub phys_id: u32,
    pub kind: String,
    pub x_nm: i64,
    pub y_nm: i64,
    pub theta_deg: Angle,
    pub defective: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Target>,
}

impl PlacedComponent {
    pub fn center(&self) -> Point {
        Point::new(self.x_nm, self.y_nm)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Substrate {
    pub region: Region,
    pub seed: u64,
    pub components: Vec<PlacedComponent>,
    /// Intersecting body pairs `(a, b)` with `a < b`, sorted.
    pub overlaps: Vec<(u32, u32)>,
}

impl Substrate {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn defective_count(&self) -> usize {
        self.components.iter().filter(|c| c.defective).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutPolicy {
    /// Square lattice of targets with Gaussian placement noise.
    #[default]
    Lattice,
    /// Homogeneous Poisson process with uniform orientations.
    Poisson,
}

impl std::str::FromStr for LayoutPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lattice" => Ok(LayoutPolicy::Lattice),
            "poisson" => Ok(LayoutPolicy::Poisson),
            _ => Err(Error::Config(format!("unknown layout policy `{s}`"))),
        }
    }
}

fn check_mix(kind_mix: &[(ComponentKind, f64)]) -> Result<()> {
    if kind_mix.is_empty() {
        return Err(Error::InvalidInput("kind mix is empty".into()));
    }
    let mut total = 0.0;
    for (k, f) in kind_mix {
        if !(f.is_finite() && *f >= 0.0) {
            return Err(Error::InvalidInput(format!("kind {} has invalid fraction {f}", k.id)));
        }
        total += f;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("kind fractions sum to {total}, expected 1")));
    }
    Ok(())
}

/// Splits `n` slots among the mix by largest remainder.
fn apportion(n: usize, kind_mix: &[(ComponentKind, f64)]) -> Vec<usize> {
    let exact: Vec<f64> = kind_mix.iter().map(|(_, f)| f * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut left = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..kind_mix.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    for i in order.into_iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

fn truncated_normal<R: Rng>(rng: &mut R, sigma: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    z.clamp(-3.0, 3.0) * sigma
}

/// Deposits components over `spec.deposition_area`.
///
/// Lattice targets sit at `((i + ½)a, (j + ½)a)` for lattice pitch `a`, all at
/// orientation 0; kinds are spread over sites in the mix proportions and
/// shuffled. Noise is Gaussian clipped at ±3σ; positions leaving the region
/// are clamped and the target is marked.
pub fn deposit(
    spec: &ProcessSpec,
    kind_mix: &[(ComponentKind, f64)],
    policy: LayoutPolicy,
    seed: u64,
) -> Result<Substrate> {
    let region = spec.deposition_area;
    if region.width_nm <= 0 || region.height_nm <= 0 {
        return Err(Error::InvalidInput("deposition region has zero area".into()));
    }
    check_mix(kind_mix)?;
    let lib = KindLibrary::new(kind_mix.iter().map(|(k, _)| k.clone()))?;
    let expected = spec.component_density_target * region.area_nm2() as f64 * 1e-6;
    if expected < 1.0 {
        return Err(Error::InvalidInput(format!("density × area = {expected:.3} < 1")));
    }

    let mut rng = rng::stream(seed);
    let mut components = Vec::new();
    match policy {
        LayoutPolicy::Lattice => {
            let pitch = 1000.0 / spec.component_density_target.sqrt();
            let nx = ((region.width_nm as f64 / pitch + 1e-9).floor() as usize).max(1);
            let ny = ((region.height_nm as f64 / pitch + 1e-9).floor() as usize).max(1);
            let n = nx * ny;
            let mut kinds: Vec<usize> = Vec::with_capacity(n);
            for (ki, c) in apportion(n, kind_mix).into_iter().enumerate() {
                kinds.extend(std::iter::repeat_n(ki, c));
            }
            kinds.shuffle(&mut rng);
            for j in 0..ny {
                for i in 0..nx {
                    let tx = ((i as f64 + 0.5) * pitch).round() as i64;
                    let ty = ((j as f64 + 0.5) * pitch).round() as i64;
                    let dx = truncated_normal(&mut rng, spec.position_sigma);
                    let dy = truncated_normal(&mut rng, spec.position_sigma);
                    let dt = truncated_normal(&mut rng, spec.orientation_sigma);
                    let raw = Point::new(tx + dx.round() as i64, ty + dy.round() as i64);
                    let p = region.clamp(raw);
                    let id = components.len();
                    components.push(PlacedComponent {
                        phys_id: id as u32,
                        kind: kind_mix[kinds[id]].0.id.clone(),
                        x_nm: p.x,
                        y_nm: p.y,
                        theta_deg: Angle::from_degrees(dt),
                        defective: false,
                        target: Some(Target { x_nm: tx, y_nm: ty, theta_deg: Angle::ZERO, clamped: p != raw }),
                    });
                }
            }
        }
        LayoutPolicy::Poisson => {
            let n = Poisson::new(expected)
                .map_err(|e| Error::InvalidInput(format!("poisson mean {expected}: {e}")))?
                .sample(&mut rng) as usize;
            let cumulative: Vec<f64> = kind_mix
                .iter()
                .scan(0.0, |acc, (_, f)| {
                    *acc += f;
                    Some(*acc)
                })
                .collect();
            for id in 0..n {
                let x = rng.random_range(0..=region.width_nm);
                let y = rng.random_range(0..=region.height_nm);
                let theta = Angle::from_microdeg(rng.random_range(0..FULL_TURN));
                let u: f64 = rng.random();
                let ki = cumulative.iter().position(|&c| u < c).unwrap_or(kind_mix.len() - 1);
                components.push(PlacedComponent {
                    phys_id: id as u32,
                    kind: kind_mix[ki].0.id.clone(),
                    x_nm: x,
                    y_nm: y,
                    theta_deg: theta,
                    defective: false,
                    target: None,
                });
            }
        }
    }

    let mut substrate = Substrate { region, seed, components, overlaps: Vec::new() };
    substrate.overlaps = detect_overlaps(&substrate, &lib)?;
    Ok(substrate)
}

/// Flags each component defective with probability `rate`. Existing flags are kept.
pub fn inject_defects(substrate: &Substrate, rate: f64, seed: u64) -> Result<Substrate> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::invariant("defect_rate", format!("must lie in [0, 1], got {rate}")));
    }
    let mut rng = rng::stream(seed);
    let mut out = substrate.clone();
    for c in &mut out.components {
        let hit = rng.random_bool(rate);
        c.defective |= hit;
    }
    Ok(out)
}

/// An oriented body with an identifier, for overlap queries.
#[derive(Debug, Clone, Copy)]
pub struct Body {
    pub id: u32,
    pub rect: OrientedRect,
}

/// All intersecting pairs among `bodies`, as sorted `(low id, high id)`.
///
/// Bodies are bucketed on a uniform grid sized to the largest body, so each
/// body is tested only against its 3×3 bucket neighbourhood.
pub fn overlapping_pairs(bodies: &[Body]) -> Vec<(u32, u32)> {
    if bodies.is_empty() {
        return Vec::new();
    }
    let cell = bodies.iter().map(|b| 2.0 * b.rect.radius()).fold(1.0, f64::max);
    let key = |b: &Body| ((b.rect.center.0 / cell).floor() as i64, (b.rect.center.1 / cell).floor() as i64);
    let mut buckets: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (i, b) in bodies.iter().enumerate() {
        buckets.entry(key(b)).or_default().push(i);
    }
    let mut pairs = Vec::new();
    for (i, a) in bodies.iter().enumerate() {
        let (kx, ky) = key(a);
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(list) = buckets.get(&(kx + dx, ky + dy)) else { continue };
                for &j in list {
                    if j <= i {
                        continue;
                    }
                    let b = &bodies[j];
                    if a.rect.intersects(&b.rect) {
                        pairs.push((a.id.min(b.id), a.id.max(b.id)));
                    }
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

/// Pairs of components whose bodies touch or intersect.
pub fn detect_overlaps(substrate: &Substrate, kinds: &KindLibrary) -> Result<Vec<(u32, u32)>> {
    let bodies = substrate
        .components
        .iter()
        .map(|c| {
            let kind = kinds.require(&c.kind)?;
            Ok(Body { id: c.phys_id, rect: kind.outline(c.center(), c.theta_deg) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(overlapping_pairs(&bodies))
}
