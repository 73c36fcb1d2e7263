//! Process design rules and physical constants.
//!
//! Text form is UTF-8 `key = value` lines with `#` comments. Keys are the
//! field names of [`ProcessSpec`]; missing keys take defaults.

use serde::{Deserialize, Serialize};

use crate::geometry::Region;
use crate::{Error, Result};

/// Upper bound on the insulator relative permittivity (silica).
pub const MAX_INSULATOR_KAPPA: f64 = 3.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    /// Components per μm².
    pub component_density_target: f64,
    pub deposition_area: Region,
    /// Standard deviation of deposited position noise, nm.
    pub position_sigma: f64,
    /// Standard deviation of deposited orientation noise, degrees.
    pub orientation_sigma: f64,
    pub defect_rate: f64,
    pub vision_position_error_max: i64,
    pub vision_orientation_error_max: f64,
    pub vision_miss_rate: f64,
    pub contact_wire_width: i64,
    pub interconnect_wire_width_max: i64,
    pub min_wire_spacing: i64,
    pub grid_pitch: i64,
    /// (Ω·cm)⁻¹
    pub conductivity: f64,
    /// μΩ·cm²
    pub contact_resistivity: f64,
    pub insulator_kappa: f64,
    /// mm/s
    pub print_rate: f64,
    pub short_rate: f64,
    /// °C, recorded only.
    pub max_process_temp: f64,
}

impl Default for ProcessSpec {
    fn default() -> Self {
        ProcessSpec {
            component_density_target: 0.01,
            deposition_area: Region::new(100_000, 100_000),
            position_sigma: 2000.0,
            orientation_sigma: 20.0,
            defect_rate: 0.0,
            vision_position_error_max: 65,
            vision_orientation_error_max: 15.0,
            vision_miss_rate: 0.0,
            contact_wire_width: 150,
            interconnect_wire_width_max: 1000,
            min_wire_spacing: 150,
            grid_pitch: 50,
            conductivity: 1e5,
            contact_resistivity: 1.0,
            insulator_kappa: 3.9,
            print_rate: 1.0,
            short_rate: 1e-4,
            max_process_temp: 200.0,
        }
    }
}

const KEYS: &[&str] = &[
    "component_density_target",
    "deposition_area",
    "position_sigma",
    "orientation_sigma",
    "defect_rate",
    "vision_position_error_max",
    "vision_orientation_error_max",
    "vision_miss_rate",
    "contact_wire_width",
    "interconnect_wire_width_max",
    "min_wire_spacing",
    "grid_pitch",
    "conductivity",
    "contact_resistivity",
    "insulator_kappa",
    "print_rate",
    "short_rate",
    "max_process_temp",
];

impl ProcessSpec {
    pub fn validate(&self) -> Result<()> {
        fn positive_f(field: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invariant(field, format!("must be > 0, got {v}")))
            }
        }
        fn non_negative_f(field: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invariant(field, format!("must be >= 0, got {v}")))
            }
        }
        fn positive_i(field: &'static str, v: i64) -> Result<()> {
            if v > 0 {
                Ok(())
            } else {
                Err(Error::invariant(field, format!("must be > 0, got {v}")))
            }
        }
        fn probability(field: &'static str, v: f64) -> Result<()> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::invariant(field, format!("must lie in [0, 1], got {v}")))
            }
        }

        positive_f("component_density_target", self.component_density_target)?;
        if self.deposition_area.width_nm <= 0 || self.deposition_area.height_nm <= 0 {
            return Err(Error::invariant("deposition_area", "width and height must be > 0"));
        }
        non_negative_f("position_sigma", self.position_sigma)?;
        non_negative_f("orientation_sigma", self.orientation_sigma)?;
        probability("defect_rate", self.defect_rate)?;
        if self.vision_position_error_max < 0 {
            return Err(Error::invariant("vision_position_error_max", "must be >= 0"));
        }
        if !(0.0..=180.0).contains(&self.vision_orientation_error_max) {
            return Err(Error::invariant("vision_orientation_error_max", "must lie in [0, 180]"));
        }
        probability("vision_miss_rate", self.vision_miss_rate)?;
        positive_i("contact_wire_width", self.contact_wire_width)?;
        positive_i("interconnect_wire_width_max", self.interconnect_wire_width_max)?;
        positive_i("min_wire_spacing", self.min_wire_spacing)?;
        positive_i("grid_pitch", self.grid_pitch)?;
        positive_f("conductivity", self.conductivity)?;
        positive_f("contact_resistivity", self.contact_resistivity)?;
        positive_f("insulator_kappa", self.insulator_kappa)?;
        positive_f("print_rate", self.print_rate)?;
        probability("short_rate", self.short_rate)?;
        positive_f("max_process_temp", self.max_process_temp)?;

        if self.insulator_kappa > MAX_INSULATOR_KAPPA {
            return Err(Error::invariant(
                "insulator_kappa",
                format!("must be <= {MAX_INSULATOR_KAPPA}, got {}", self.insulator_kappa),
            ));
        }
        if self.contact_wire_width > self.interconnect_wire_width_max {
            return Err(Error::invariant(
                "contact_wire_width",
                format!(
                    "must be <= interconnect_wire_width_max ({}), got {}",
                    self.interconnect_wire_width_max, self.contact_wire_width
                ),
            ));
        }
        if self.grid_pitch > self.contact_wire_width {
            return Err(Error::invariant(
                "grid_pitch",
                format!(
                    "must be <= contact_wire_width ({}), got {}",
                    self.contact_wire_width, self.grid_pitch
                ),
            ));
        }
        Ok(())
    }

    /// Parses the key/value text form and checks every invariant.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = ProcessSpec::default();
        let mut seen = std::collections::BTreeSet::new();
        let mut spacing_given = false;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: line_no, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(parse_err(format!("unknown key `{key}`")));
            }
            if !seen.insert(key.to_string()) {
                return Err(parse_err(format!("duplicate key `{key}`")));
            }

            let float = || -> Result<f64> {
                value
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(format!("`{key}` expects a number, got `{value}`")))
            };
            let int = || -> Result<i64> {
                value
                    .parse::<i64>()
                    .map_err(|_| parse_err(format!("`{key}` expects an integer (nm), got `{value}`")))
            };

            match key {
                "component_density_target" => spec.component_density_target = float()?,
                "deposition_area" => {
                    let (w, h) = value
                        .split_once(['x', 'X', '*'])
                        .ok_or_else(|| parse_err(format!("`deposition_area` expects `W x H`, got `{value}`")))?;
                    let dim = |s: &str| {
                        s.trim()
                            .parse::<i64>()
                            .map_err(|_| parse_err(format!("bad deposition_area dimension `{}`", s.trim())))
                    };
                    spec.deposition_area = Region::new(dim(w)?, dim(h)?);
                }
                "position_sigma" => spec.position_sigma = float()?,
                "orientation_sigma" => spec.orientation_sigma = float()?,
                "defect_rate" => spec.defect_rate = float()?,
                "vision_position_error_max" => spec.vision_position_error_max = int()?,
                "vision_orientation_error_max" => spec.vision_orientation_error_max = float()?,
                "vision_miss_rate" => spec.vision_miss_rate = float()?,
                "contact_wire_width" => spec.contact_wire_width = int()?,
                "interconnect_wire_width_max" => spec.interconnect_wire_width_max = int()?,
                "min_wire_spacing" => {
                    spec.min_wire_spacing = int()?;
                    spacing_given = true;
                }
                "grid_pitch" => spec.grid_pitch = int()?,
                "conductivity" => spec.conductivity = float()?,
                "contact_resistivity" => spec.contact_resistivity = float()?,
                "insulator_kappa" => spec.insulator_kappa = float()?,
                "print_rate" => spec.print_rate = float()?,
                "short_rate" => spec.short_rate = float()?,
                "max_process_temp" => spec.max_process_temp = float()?,
                _ => unreachable!(),
            }
        }
        if !spacing_given {
            spec.min_wire_spacing = spec.contact_wire_width;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Canonical text form; every key is written.
    pub fn to_text(&self) -> String {
        let s = self;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        put(KEYS[0], s.component_density_target.to_string());
        put(KEYS[1], format!("{} x {}", s.deposition_area.width_nm, s.deposition_area.height_nm));
        put(KEYS[2], s.position_sigma.to_string());
        put(KEYS[3], s.orientation_sigma.to_string());
        put(KEYS[4], s.defect_rate.to_string());
        put(KEYS[5], s.vision_position_error_max.to_string());
        put(KEYS[6], s.vision_orientation_error_max.to_string());
        put(KEYS[7], s.vision_miss_rate.to_string());
        put(KEYS[8], s.contact_wire_width.to_string());
        put(KEYS[9], s.interconnect_wire_width_max.to_string());
        put(KEYS[10], s.min_wire_spacing.to_string());
        put(KEYS[11], s.grid_pitch.to_string());
        put(KEYS[12], s.conductivity.to_string());
        put(KEYS[13], s.contact_resistivity.to_string());
        put(KEYS[14], s.insulator_kappa.to_string());
        put(KEYS[15], s.print_rate.to_string());
        put(KEYS[16], s.short_rate.to_string());
        put(KEYS[17], s.max_process_temp.to_string());
        out
    }

    /// Applies `key = value` overrides on top of this spec's text form.
    pub fn with_overrides<'a>(&self, overrides: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut map: Vec<(String, String)> = self
            .to_text()
            .lines()
            .filter_map(|l| l.split_once(" = ").map(|(k, v)| (k.to_string(), v.to_string())))
            .collect();
        for (k, v) in overrides {
            match map.iter_mut().find(|(key, _)| key == k) {
                Some(entry) => entry.1 = v.to_string(),
                None => return Err(Error::Config(format!("unknown spec override key `{k}`"))),
            }
        }
        let text: String = map.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        ProcessSpec::parse(&text)
    }

    /// Lattice pitch implied by the density target, nm.
    pub fn lattice_pitch_nm(&self) -> i64 {
        (1000.0 / self.component_density_target.sqrt()).round() as i64
    }
}

pub fn load_process_spec(text: &str) -> Result<ProcessSpec> {
    ProcessSpec::parse(text)
}
