//! Simulated recognition of the deposited field.
//!
//! Errors are uniform and hard-bounded: position within ±e per axis and
//! orientation within ±`vision_orientation_error_max`. There are no phantom
//! detections.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::deposition::{overlapping_pairs, Body, Substrate};
use crate::geometry::{Angle, Point, Region, MICRODEG_PER_DEG};
use crate::model::{KindLibrary, ProcessSpec};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservedComponent {
    pub obs_id: u32,
    /// Ground-truth link; only present when truth is kept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phys_id: Option<u32>,
    pub kind: String,
    pub x_nm: i64,
    pub y_nm: i64,
    pub theta_deg: Angle,
    pub classified_defective: bool,
}

impl ObservedComponent {
    pub fn center(&self) -> Point {
        Point::new(self.x_nm, self.y_nm)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservedField {
    pub region: Region,
    pub observations: Vec<ObservedComponent>,
    /// Overlapping pairs by `obs_id`, judged from the estimated poses.
    pub overlaps: Vec<(u32, u32)>,
    /// Ground-truth ids that were not detected; only present when truth is kept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub missed: Option<Vec<u32>>,
}

impl ObservedField {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Drops every link back to the ground truth.
    pub fn strip_truth(&mut self) {
        for o in &mut self.observations {
            o.phys_id = None;
        }
        self.missed = None;
    }

    pub fn get(&self, obs_id: u32) -> Option<&ObservedComponent> {
        let o = self.observations.get(obs_id as usize)?;
        if o.obs_id == obs_id {
            Some(o)
        } else {
            self.observations.iter().find(|o| o.obs_id == obs_id)
        }
    }
}

/// Runs the vision model over `substrate`.
///
/// Every component consumes the same five draws in order (miss, x error,
/// y error, orientation error, classification) whether or not it is
/// detected, so results for one component do not shift when rates change
/// for another.
pub fn observe(
    substrate: &Substrate,
    spec: &ProcessSpec,
    kinds: &KindLibrary,
    defect_classification_accuracy: f64,
    seed: u64,
) -> Result<ObservedField> {
    if !(0.0..=1.0).contains(&defect_classification_accuracy) {
        return Err(Error::invariant(
            "defect_classification_accuracy",
            format!("must lie in [0, 1], got {defect_classification_accuracy}"),
        ));
    }
    let e = spec.vision_position_error_max;
    let mut checked = std::collections::BTreeSet::new();
    for c in &substrate.components {
        if checked.insert(c.kind.as_str()) {
            let kind = kinds.require(&c.kind)?;
            if 2 * e > kind.critical_dimension {
                return Err(Error::Config(format!(
                    "vision position error {e} nm exceeds half the critical dimension of kind {} ({} nm)",
                    kind.id, kind.critical_dimension
                )));
            }
        }
    }
    let theta_max = (spec.vision_orientation_error_max * MICRODEG_PER_DEG as f64).round() as i64;

    let mut rng = rng::stream(seed);
    let mut observations = Vec::with_capacity(substrate.components.len());
    let mut missed = Vec::new();
    for c in &substrate.components {
        let miss = rng.random_bool(spec.vision_miss_rate);
        let dx = rng.random_range(-e..=e);
        let dy = rng.random_range(-e..=e);
        let dt = rng.random_range(-theta_max..=theta_max);
        let correct = rng.random_bool(defect_classification_accuracy);
        if miss {
            missed.push(c.phys_id);
            continue;
        }
        observations.push(ObservedComponent {
            obs_id: observations.len() as u32,
            phys_id: Some(c.phys_id),
            kind: c.kind.clone(),
            x_nm: c.x_nm + dx,
            y_nm: c.y_nm + dy,
            theta_deg: c.theta_deg.rotate_by(dt),
            classified_defective: if correct { c.defective } else { !c.defective },
        });
    }

    let bodies = observations
        .iter()
        .map(|o| Ok(Body { id: o.obs_id, rect: kinds.require(&o.kind)?.outline(o.center(), o.theta_deg) }))
        .collect::<Result<Vec<_>>>()?;
    let overlaps = overlapping_pairs(&bodies);
    Ok(ObservedField { region: substrate.region, observations, overlaps, missed: Some(missed) })
}
