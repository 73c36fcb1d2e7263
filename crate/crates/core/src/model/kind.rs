use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{rotate, Angle, OrientedRect, Point};
use crate::{Error, Result};

/// Transistor parameters of the 180 nm reference node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectricalParams {
    /// V
    pub supply_voltage: f64,
    /// nm
    pub oxide_thickness: f64,
    /// nm
    pub gate_length: f64,
    /// V
    pub threshold_voltage: f64,
    /// mA/μm
    pub i_dsat: f64,
    /// nA/μm
    pub i_off: f64,
    /// fF/μm²
    pub c_junction: f64,
    /// Ω/sq
    pub silicide_sheet_res: f64,
}

impl ElectricalParams {
    pub fn nmos_180nm() -> Self {
        ElectricalParams {
            supply_voltage: 1.5,
            oxide_thickness: 3.0,
            gate_length: 130.0,
            threshold_voltage: 0.3,
            i_dsat: 0.94,
            i_off: 3.0,
            c_junction: 0.65,
            silicide_sheet_res: 4.0,
        }
    }

    pub fn pmos_180nm() -> Self {
        ElectricalParams {
            supply_voltage: 1.5,
            oxide_thickness: 3.0,
            gate_length: 150.0,
            threshold_voltage: -0.24,
            i_dsat: 0.42,
            i_off: 3.0,
            c_junction: 0.95,
            silicide_sheet_res: 4.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1.3..=1.5).contains(&self.supply_voltage) {
            return Err(Error::invariant("supply_voltage", "must lie in [1.3, 1.5] V"));
        }
        if !(self.gate_length > 0.0) {
            return Err(Error::invariant("gate_length", "must be > 0"));
        }
        if !(self.i_dsat > 0.0) {
            return Err(Error::invariant("i_dsat", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinDef {
    pub id: String,
    /// Offset from the body center in the component frame, nm.
    pub offset: (i64, i64),
    pub contact_area_nm2: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentKind {
    pub id: String,
    /// Body width × height, nm. Width runs along the local x axis.
    pub body: (i64, i64),
    pub pins: Vec<PinDef>,
    pub critical_dimension: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub electrical: Option<ElectricalParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resistance_ohm: Option<f64>,
}

impl ComponentKind {
    pub fn validate(&self) -> Result<()> {
        let (w, h) = self.body;
        if w <= 0 || h <= 0 {
            return Err(Error::Config(format!("kind {}: body dimensions must be > 0", self.id)));
        }
        if self.critical_dimension <= 0 || self.critical_dimension > w.min(h) {
            return Err(Error::Config(format!(
                "kind {}: critical dimension {} must be in (0, {}]",
                self.id,
                self.critical_dimension,
                w.min(h)
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for pin in &self.pins {
            if !seen.insert(pin.id.as_str()) {
                return Err(Error::Config(format!("kind {}: duplicate pin {}", self.id, pin.id)));
            }
            if 2 * pin.offset.0.abs() > w || 2 * pin.offset.1.abs() > h {
                return Err(Error::Config(format!("kind {}: pin {} lies outside the body", self.id, pin.id)));
            }
            if pin.contact_area_nm2 <= 0 {
                return Err(Error::Config(format!("kind {}: pin {} contact area must be > 0", self.id, pin.id)));
            }
        }
        if let Some(e) = &self.electrical {
            e.validate().map_err(|err| Error::Config(format!("kind {}: {err}", self.id)))?;
        }
        Ok(())
    }

    pub fn pin_index(&self, pin: &str) -> Option<usize> {
        self.pins.iter().position(|p| p.id == pin)
    }

    /// Channel width used for drive current: the body's short side, μm.
    pub fn channel_width_um(&self) -> f64 {
        self.body.0.min(self.body.1) as f64 / 1000.0
    }

    pub fn outline(&self, center: Point, orientation: Angle) -> OrientedRect {
        OrientedRect::new(center, self.body, orientation)
    }

    /// World position of pin `idx` for a body at `center` rotated by `orientation`.
    pub fn pin_position(&self, idx: usize, center: Point, orientation: Angle) -> (f64, f64) {
        let (dx, dy) = rotate(self.pins[idx].offset, orientation);
        (center.x as f64 + dx, center.y as f64 + dy)
    }
}

/// All component kinds known to a run, keyed by kind id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KindLibrary {
    kinds: BTreeMap<String, ComponentKind>,
}

const CONTACT_150: i64 = 150 * 150;

fn pin(id: &str, x: i64, y: i64) -> PinDef {
    PinDef { id: id.to_string(), offset: (x, y), contact_area_nm2: CONTACT_150 }
}

impl KindLibrary {
    pub fn new(kinds: impl IntoIterator<Item = ComponentKind>) -> Result<Self> {
        let mut lib = KindLibrary::default();
        for k in kinds {
            k.validate()?;
            if lib.kinds.insert(k.id.clone(), k).is_some() {
                return Err(Error::Config("duplicate kind id".into()));
            }
        }
        Ok(lib)
    }

    /// Built-in nanowire-shaped kinds.
    ///
    /// * `nmos`, `pmos`: 1500 × 300 nm, pins `s` / `g` / `d`.
    /// * `res`: 1500 × 300 nm, 10 kΩ, pins `a` / `b`.
    /// * `nmos_mc`: 2400 × 600 nm nMOS with drain `d`, source `s` and six
    ///   gate contacts `g0`..`g5` (three per long side, 600 nm apart) so a
    ///   single device can receive several fan-in wires.
    pub fn standard() -> Self {
        let nmos = ComponentKind {
            id: "nmos".into(),
            body: (1500, 300),
            pins: vec![pin("s", -750, 0), pin("g", 0, 150), pin("d", 750, 0)],
            critical_dimension: 130,
            electrical: Some(ElectricalParams::nmos_180nm()),
            resistance_ohm: None,
        };
        let pmos = ComponentKind {
            id: "pmos".into(),
            critical_dimension: 150,
            electrical: Some(ElectricalParams::pmos_180nm()),
            ..nmos.clone()
        };
        let res = ComponentKind {
            id: "res".into(),
            body: (1500, 300),
            pins: vec![pin("a", -750, 0), pin("b", 750, 0)],
            critical_dimension: 300,
            electrical: None,
            resistance_ohm: Some(10_000.0),
        };
        let mut mc_pins = vec![pin("s", -1200, 0), pin("d", 1200, 0)];
        for (i, (x, y)) in [(-600, 300), (0, 300), (600, 300), (-600, -300), (0, -300), (600, -300)]
            .into_iter()
            .enumerate()
        {
            mc_pins.push(pin(&format!("g{i}"), x, y));
        }
        let nmos_mc = ComponentKind {
            id: "nmos_mc".into(),
            body: (2400, 600),
            pins: mc_pins,
            critical_dimension: 130,
            electrical: Some(ElectricalParams::nmos_180nm()),
            resistance_ohm: None,
        };
        KindLibrary::new([nmos, pmos, res, nmos_mc]).expect("built-in kinds are valid")
    }

    pub fn get(&self, id: &str) -> Option<&ComponentKind> {
        self.kinds.get(id)
    }

    pub fn require(&self, id: &str) -> Result<&ComponentKind> {
        self.get(id).ok_or_else(|| Error::InvalidInput(format!("unknown component kind `{id}`")))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.kinds.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ComponentKind> {
        self.kinds.values()
    }

    pub fn insert(&mut self, kind: ComponentKind) -> Result<()> {
        kind.validate()?;
        self.kinds.insert(kind.id.clone(), kind);
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let kinds: Vec<ComponentKind> = serde_json::from_str(text)?;
        KindLibrary::new(kinds)
    }
}
