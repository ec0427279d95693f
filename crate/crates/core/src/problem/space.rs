use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How a dimension's values are restricted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Binary,
    Integer,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

impl Dimension {
    pub fn continuous(name: &str, lower: f64, upper: f64) -> Self {
        Self {
            name: name.to_string(),
            kind: VarKind::Continuous,
            lower,
            upper,
        }
    }

    pub fn integer(name: &str, lower: i64, upper: i64) -> Self {
        Self {
            name: name.to_string(),
            kind: VarKind::Integer,
            lower: lower as f64,
            upper: upper as f64,
        }
    }

    pub fn binary(name: &str) -> Self {
        Self {
            name: name.to_string(),
            kind: VarKind::Binary,
            lower: 0.0,
            upper: 1.0,
        }
    }

    /// Number of admissible values for binary/integer dimensions.
    fn levels(&self) -> Option<usize> {
        match self.kind {
            VarKind::Continuous => None,
            _ => Some((self.upper - self.lower) as usize + 1),
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.lower.is_finite() || !self.upper.is_finite() {
            return Err(Error::domain(format!("dimension {}: non-finite bounds", self.name)));
        }
        match self.kind {
            VarKind::Binary if self.lower != 0.0 || self.upper != 1.0 => Err(Error::domain(
                format!("binary dimension {} must have bounds {{0,1}}", self.name),
            )),
            VarKind::Integer if self.lower.fract() != 0.0 || self.upper.fract() != 0.0 => Err(
                Error::domain(format!("integer dimension {} needs integer bounds", self.name)),
            ),
            _ if self.lower >= self.upper => Err(Error::domain(format!(
                "dimension {}: lower bound {} not below upper bound {}",
                self.name, self.lower, self.upper
            ))),
            _ => Ok(()),
        }
    }

    fn contains(&self, value: f64) -> bool {
        let in_range = value >= self.lower && value <= self.upper;
        match self.kind {
            VarKind::Continuous => in_range,
            _ => in_range && value.fract() == 0.0,
        }
    }

    fn encode(&self, value: f64) -> f64 {
        (value - self.lower) / (self.upper - self.lower)
    }

    /// Level-centered decoding: `[0,1]` is split into one equal cell per level.
    fn decode(&self, u: f64) -> f64 {
        match self.levels() {
            None => self.lower + u * (self.upper - self.lower),
            Some(levels) => {
                let cell = ((u * levels as f64).floor() as usize).min(levels - 1);
                self.lower + cell as f64
            }
        }
    }
}

/// An ordered list of bounded, typed dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpace {
    dims: Vec<Dimension>,
}

impl DesignSpace {
    pub fn new(dims: Vec<Dimension>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::domain("design space needs at least one dimension"));
        }
        for d in &dims {
            d.validate()?;
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[Dimension] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn point(&self, values: Vec<f64>) -> Result<DesignPoint> {
        if values.len() != self.dims.len() {
            return Err(Error::domain(format!(
                "design has {} values, space has {} dimensions",
                values.len(),
                self.dims.len()
            )));
        }
        for (d, &v) in self.dims.iter().zip(&values) {
            if !d.contains(v) {
                return Err(Error::domain(format!(
                    "value {v} invalid for dimension {} ({:?} in [{}, {}])",
                    d.name, d.kind, d.lower, d.upper
                )));
            }
        }
        Ok(DesignPoint { values })
    }

    pub fn contains(&self, design: &DesignPoint) -> bool {
        design.values.len() == self.dims.len()
            && self.dims.iter().zip(&design.values).all(|(d, &v)| d.contains(v))
    }

    /// Affine map of a valid design onto the unit cube.
    pub fn encode(&self, design: &DesignPoint) -> Result<Vec<f64>> {
        if !self.contains(design) {
            return Err(Error::domain(format!("design {:?} outside the space", design.values)));
        }
        Ok(self.dims.iter().zip(&design.values).map(|(d, &v)| d.encode(v)).collect())
    }

    /// Inverse of [`encode`](Self::encode); integer and binary dimensions are
    /// rounded to the level whose cell contains the component.
    pub fn decode(&self, unit: &[f64]) -> Result<DesignPoint> {
        if unit.len() != self.dims.len() {
            return Err(Error::domain(format!(
                "unit vector has {} components, space has {} dimensions",
                unit.len(),
                self.dims.len()
            )));
        }
        if let Some(u) = unit.iter().find(|u| !(0.0..=1.0).contains(*u)) {
            return Err(Error::domain(format!("unit-cube component {u} outside [0,1]")));
        }
        let values = self.dims.iter().zip(unit).map(|(d, &u)| d.decode(u)).collect();
        Ok(DesignPoint { values })
    }

    /// Decode then re-encode: the unit-cube image of the design actually
    /// evaluated for `unit`.
    pub fn snap(&self, unit: &[f64]) -> Result<Vec<f64>> {
        let design = self.decode(unit)?;
        self.encode(&design)
    }
}

/// One setting of every design variable, in natural units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    values: Vec<f64>,
}

impl DesignPoint {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space() -> DesignSpace {
        DesignSpace::new(vec![
            Dimension::binary("flag"),
            Dimension::continuous("x", -2.0, 3.0),
            Dimension::integer("k", 1, 5),
        ])
        .unwrap()
    }

    #[test]
    fn bounds_map_to_cube_corners() {
        let s = space();
        let lo = s.point(vec![0.0, -2.0, 1.0]).unwrap();
        let hi = s.point(vec![1.0, 3.0, 5.0]).unwrap();
        assert_eq!(s.encode(&lo).unwrap(), vec![0.0; 3]);
        assert_eq!(s.encode(&hi).unwrap(), vec![1.0; 3]);
    }

    #[test]
    fn level_centered_rounding() {
        let s = space();
        let p = s.decode(&[0.2, 0.5, 0.49]).unwrap();
        assert_eq!(p.values(), &[0.0, 0.5, 3.0]);
        let p = s.decode(&[0.5, 1.0, 1.0]).unwrap();
        assert_eq!(p.values(), &[1.0, 3.0, 5.0]);
        let p = s.decode(&[0.0, 0.0, 0.1999]).unwrap();
        assert_eq!(p.get(2), 1.0);
    }

    #[test]
    fn decode_rejects_out_of_cube() {
        let s = space();
        assert!(matches!(s.decode(&[0.0, 1.01, 0.0]), Err(Error::Domain(_))));
        assert!(matches!(s.decode(&[0.0, -1e-9, 0.0]), Err(Error::Domain(_))));
        assert!(s.decode(&[0.0, 0.5]).is_err());
    }

    #[test]
    fn invalid_points_rejected() {
        let s = space();
        assert!(s.point(vec![0.5, 0.0, 1.0]).is_err());
        assert!(s.point(vec![0.0, 3.5, 1.0]).is_err());
        assert!(s.point(vec![0.0, 0.0, 2.5]).is_err());
    }

    #[test]
    fn invalid_spaces_rejected() {
        assert!(DesignSpace::new(vec![Dimension::continuous("x", 1.0, 1.0)]).is_err());
        assert!(DesignSpace::new(vec![Dimension {
            name: "k".into(),
            kind: VarKind::Integer,
            lower: 0.5,
            upper: 3.0,
        }])
        .is_err());
        assert!(DesignSpace::new(vec![Dimension {
            name: "b".into(),
            kind: VarKind::Binary,
            lower: 0.0,
            upper: 2.0,
        }])
        .is_err());
    }
}
