use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The three intervention families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intervention {
    /// Tuberculosis preventive treatment.
    Tpt,
    /// Malnutrition management.
    Mn,
    /// Diabetes management.
    Diabetes,
}

impl Intervention {
    pub const ALL: [Intervention; 3] = [Intervention::Tpt, Intervention::Mn, Intervention::Diabetes];

    pub fn index(self) -> usize {
        match self {
            Intervention::Tpt => 0,
            Intervention::Mn => 1,
            Intervention::Diabetes => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Intervention::Tpt => "TPT",
            Intervention::Mn => "MN",
            Intervention::Diabetes => "D",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Intervention::Tpt => "tpt",
            Intervention::Mn => "mn",
            Intervention::Diabetes => "d",
        }
    }
}

/// Nine control intensities, one per (intervention, compartment) pair.
///
/// Each family holds its removal rates on `[T_l, T_d, T_t]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlVec {
    pub tpt: [f64; 3],
    pub mn: [f64; 3],
    pub diabetes: [f64; 3],
}

impl ControlVec {
    pub const fn zero() -> Self {
        Self {
            tpt: [0.0; 3],
            mn: [0.0; 3],
            diabetes: [0.0; 3],
        }
    }

    pub fn uniform(value: f64) -> Self {
        Self {
            tpt: [value; 3],
            mn: [value; 3],
            diabetes: [value; 3],
        }
    }

    pub fn family(&self, i: Intervention) -> [f64; 3] {
        match i {
            Intervention::Tpt => self.tpt,
            Intervention::Mn => self.mn,
            Intervention::Diabetes => self.diabetes,
        }
    }

    pub fn family_mut(&mut self, i: Intervention) -> &mut [f64; 3] {
        match i {
            Intervention::Tpt => &mut self.tpt,
            Intervention::Mn => &mut self.mn,
            Intervention::Diabetes => &mut self.diabetes,
        }
    }

    /// Order: μ1T, μ2T, μ3T, μ1M, μ2M, μ3M, μ1D, μ2D, μ3D.
    pub fn to_array(self) -> [f64; 9] {
        let [a, b, c] = self.tpt;
        let [d, e, f] = self.mn;
        let [g, h, i] = self.diabetes;
        [a, b, c, d, e, f, g, h, i]
    }

    pub fn from_array(v: [f64; 9]) -> Self {
        Self {
            tpt: [v[0], v[1], v[2]],
            mn: [v[3], v[4], v[5]],
            diabetes: [v[6], v[7], v[8]],
        }
    }

    /// Extra removal rate on `T_l`, `T_d`, `T_t`: the three families summed.
    #[inline]
    pub fn removal(&self) -> [f64; 3] {
        std::array::from_fn(|j| self.tpt[j] + self.mn[j] + self.diabetes[j])
    }

    pub fn validate(&self) -> Result<()> {
        if self.to_array().iter().all(|v| v.is_finite() && *v >= 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "controls must be finite and >= 0: {self:?}"
            )))
        }
    }

    pub const NAMES: [&'static str; 9] = [
        "mu1T", "mu2T", "mu3T", "mu1M", "mu2M", "mu3M", "mu1D", "mu2D", "mu3D",
    ];
}

/// Per-component upper bounds on the controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ControlBounds {
    pub upper: ControlVec,
}

impl Default for ControlBounds {
    fn default() -> Self {
        Self::uniform(1.0)
    }
}

impl ControlBounds {
    pub fn uniform(bound: f64) -> Self {
        Self {
            upper: ControlVec::uniform(bound),
        }
    }

    /// Zero the bounds of every intervention the mask switches off.
    pub fn masked(mut self, mask: ScenarioMask) -> Self {
        for i in Intervention::ALL {
            if !mask.is_active(i) {
                *self.upper.family_mut(i) = [0.0; 3];
            }
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.upper
            .validate()
            .map_err(|_| Error::InvalidInput("control bounds must be finite and >= 0".into()))
    }

    pub fn contains(&self, u: &ControlVec) -> bool {
        u.to_array()
            .iter()
            .zip(self.upper.to_array())
            .all(|(v, hi)| *v >= 0.0 && *v <= hi)
    }
}

/// Quadratic cost weights A1 (TPT), A2 (MN), A3 (D).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostWeights {
    pub tpt: f64,
    pub mn: f64,
    pub diabetes: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            tpt: 55.0,
            mn: 30.0,
            diabetes: 100.0,
        }
    }
}

impl CostWeights {
    pub fn weight(&self, i: Intervention) -> f64 {
        match i {
            Intervention::Tpt => self.tpt,
            Intervention::Mn => self.mn,
            Intervention::Diabetes => self.diabetes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if [self.tpt, self.mn, self.diabetes]
            .iter()
            .all(|w| w.is_finite() && *w > 0.0)
        {
            Ok(())
        } else {
            Err(Error::InvalidInput("cost weights must be finite and > 0".into()))
        }
    }
}

/// Costates of `(U, T_l, T_d, T_t, R)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AdjointVec {
    pub u: f64,
    pub t_l: f64,
    pub t_d: f64,
    pub t_t: f64,
    pub r: f64,
}

impl AdjointVec {
    pub const fn new(u: f64, t_l: f64, t_d: f64, t_t: f64, r: f64) -> Self {
        Self { u, t_l, t_d, t_t, r }
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.u, self.t_l, self.t_d, self.t_t, self.r]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4])
    }
}

/// Which intervention families are switched on in a scenario.
///
/// Serialized as its key string (`none`, `tpt`, `tpt_mn_d`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ScenarioMask {
    pub tpt: bool,
    pub mn: bool,
    pub diabetes: bool,
}

impl ScenarioMask {
    pub const NONE: ScenarioMask = ScenarioMask::new(false, false, false);
    pub const ALL_ACTIVE: ScenarioMask = ScenarioMask::new(true, true, true);

    pub const fn new(tpt: bool, mn: bool, diabetes: bool) -> Self {
        Self { tpt, mn, diabetes }
    }

    /// All eight masks: no intervention, the singles, the pairs, all three.
    pub fn all() -> [ScenarioMask; 8] {
        [
            Self::new(false, false, false),
            Self::new(true, false, false),
            Self::new(false, true, false),
            Self::new(false, false, true),
            Self::new(true, true, false),
            Self::new(true, false, true),
            Self::new(false, true, true),
            Self::new(true, true, true),
        ]
    }

    pub fn is_active(&self, i: Intervention) -> bool {
        match i {
            Intervention::Tpt => self.tpt,
            Intervention::Mn => self.mn,
            Intervention::Diabetes => self.diabetes,
        }
    }

    pub fn is_none(&self) -> bool {
        !(self.tpt || self.mn || self.diabetes)
    }

    pub fn active(&self) -> impl Iterator<Item = Intervention> + '_ {
        Intervention::ALL.into_iter().filter(|i| self.is_active(*i))
    }

    /// Human-readable name: `TPT`, `MN and D`, `TPT, MN, and D`, `none`.
    pub fn label(&self) -> String {
        let names: Vec<&str> = self.active().map(Intervention::label).collect();
        match names.as_slice() {
            [] => "none".to_string(),
            [a] => a.to_string(),
            [a, b] => format!("{a} and {b}"),
            [a, b, c] => format!("{a}, {b}, and {c}"),
            _ => unreachable!(),
        }
    }

    /// File-name friendly key: `none`, `tpt`, `tpt_mn_d`.
    pub fn key(&self) -> String {
        if self.is_none() {
            return "none".to_string();
        }
        self.active().map(Intervention::key).collect::<Vec<_>>().join("_")
    }
}

impl fmt::Display for ScenarioMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl From<ScenarioMask> for String {
    fn from(m: ScenarioMask) -> String {
        m.key()
    }
}

impl TryFrom<String> for ScenarioMask {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for ScenarioMask {
    type Err = Error;

    /// Accepts `none`, or interventions joined by `,`, `+` or `_`
    /// (`tpt,mn,d`), or a label such as `TPT and MN`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("none") {
            return Ok(Self::NONE);
        }
        let mut mask = Self::NONE;
        let normalized = s.replace(" and ", ",").replace(['+', '_'], ",");
        for part in normalized.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.to_ascii_lowercase().as_str() {
                "tpt" | "t" => mask.tpt = true,
                "mn" | "m" => mask.mn = true,
                "d" | "diabetes" => mask.diabetes = true,
                other => {
                    return Err(Error::InvalidInput(format!(
                        "unknown intervention '{other}' in mask '{s}'"
                    )))
                }
            }
        }
        if mask.is_none() {
            return Err(Error::InvalidInput(format!("empty mask '{s}'")));
        }
        Ok(mask)
    }
}
