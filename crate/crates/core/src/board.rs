//! Canonical dartboard geometry.
//!
//! The board plane is y-down with the center at the origin and the outer
//! edge of the double ring at radius 1; "up" is the -y direction and
//! clockwise angles are measured from it. Sector 20 is centered at up, so
//! sector wedges span half-open 18-degree intervals with boundaries at odd
//! multiples of 9 degrees.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::PlanarPoint;
use crate::scalar::Scalar;

/// Default ring radii in millimeters (double-bull, bull, treble inner/outer,
/// double inner/outer), per the standard tournament board specification.
pub const DEFAULT_RADII_MM: [f64; 6] = [6.35, 15.9, 99.4, 107.4, 162.0, 170.0];

/// Sector values clockwise starting from the sector centered at up.
pub const DEFAULT_SECTOR_SEQUENCE: [u8; 20] = [
    20, 1, 18, 4, 13, 6, 10, 15, 2, 17, 3, 19, 7, 16, 8, 11, 14, 9, 12, 5,
];

/// Clockwise-from-up angles (degrees) of the four calibration points, class
/// order 0..3: the 5/20, 13/6, 17/3, and 8/11 wire intersections on the
/// outer edge of the double ring.
pub const DEFAULT_CAL_ANGLES_DEG: [f64; 4] = [-9.0, 81.0, 171.0, 261.0];

/// Invalid board geometry diagnostics.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoardSpecError {
    #[error("ring radii must be strictly increasing and normalized ({0})")]
    RadiiOrder(&'static str),
    #[error("sector_sequence must be a permutation of 1..20")]
    SectorSequence,
    #[error("calibration target {0} is not on the unit circle")]
    CalTargetRadius(usize),
    #[error("calibration targets are not separated by 90 degrees")]
    CalTargetSpacing,
}

/// Canonical dartboard: normalized ring radii, sector layout, and the four
/// calibration-point targets in the board plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoardSpec<T> {
    pub r_double_bull: T,
    pub r_bull: T,
    pub r_treble_inner: T,
    pub r_treble_outer: T,
    pub r_double_inner: T,
    /// Always 1.0: radii are normalized by the outer-double radius.
    pub r_double_outer: T,
    pub sector_sequence: [u8; 20],
    pub cal_point_targets: [PlanarPoint<T>; 4],
}

/// Unit-circle point at a clockwise-from-up angle, y-down.
pub fn point_at_cw_angle<T: Scalar>(angle_deg: T) -> PlanarPoint<T> {
    let a = angle_deg.to_radians();
    PlanarPoint::new(a.sin(), -a.cos())
}

impl<T: Scalar> BoardSpec<T> {
    /// Builds a spec from ring radii in millimeters and calibration angles,
    /// normalizing radii by the outer-double radius.
    pub fn from_radii_mm(
        radii_mm: [T; 6],
        sector_sequence: [u8; 20],
        cal_angles_deg: [T; 4],
    ) -> Result<Self, BoardSpecError> {
        let outer = radii_mm[5];
        if outer <= T::zero() {
            return Err(BoardSpecError::RadiiOrder("outer radius must be positive"));
        }
        let spec = Self {
            r_double_bull: radii_mm[0] / outer,
            r_bull: radii_mm[1] / outer,
            r_treble_inner: radii_mm[2] / outer,
            r_treble_outer: radii_mm[3] / outer,
            r_double_inner: radii_mm[4] / outer,
            r_double_outer: T::one(),
            sector_sequence,
            cal_point_targets: cal_angles_deg.map(point_at_cw_angle),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the type invariants: radius ordering, sector permutation, and
    /// calibration targets forming a unit-radius square.
    pub fn validate(&self) -> Result<(), BoardSpecError> {
        let radii = [
            self.r_double_bull,
            self.r_bull,
            self.r_treble_inner,
            self.r_treble_outer,
            self.r_double_inner,
            self.r_double_outer,
        ];
        if radii[0] <= T::zero() {
            return Err(BoardSpecError::RadiiOrder("innermost radius not positive"));
        }
        if radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(BoardSpecError::RadiiOrder("not strictly increasing"));
        }
        if (self.r_double_outer - T::one()).abs() > T::c(1e-12) {
            return Err(BoardSpecError::RadiiOrder("outer radius must be 1.0"));
        }
        let mut seen = [false; 20];
        for &s in &self.sector_sequence {
            if !(1..=20).contains(&s) || seen[(s - 1) as usize] {
                return Err(BoardSpecError::SectorSequence);
            }
            seen[(s - 1) as usize] = true;
        }
        for (i, p) in self.cal_point_targets.iter().enumerate() {
            let r = p.x.hypot(p.y);
            if (r - T::one()).abs() > T::c(1e-12) {
                return Err(BoardSpecError::CalTargetRadius(i));
            }
        }
        // Cyclic angular gaps between consecutive targets must all be 90 deg.
        for i in 0..4 {
            let a = self.cal_point_targets[i].clockwise_angle_deg();
            let b = self.cal_point_targets[(i + 1) % 4].clockwise_angle_deg();
            let gap = (b - a).to_f64().unwrap().rem_euclid(360.0);
            if (gap - 90.0).abs() > 1e-9 {
                return Err(BoardSpecError::CalTargetSpacing);
            }
        }
        Ok(())
    }

    /// Sector value of the wedge containing a clockwise-from-up angle.
    ///
    /// Wedges are half-open: a boundary angle belongs to the clockwise-next
    /// sector.
    pub fn sector_at_angle(&self, theta_cw_deg: T) -> u8 {
        let full = T::c(360.0);
        let mut t = theta_cw_deg % full;
        if t < T::zero() {
            t = t + full;
        }
        let idx = ((t + T::c(9.0)) / T::c(18.0)).floor().to_i64().unwrap_or(0);
        self.sector_sequence[(idx.rem_euclid(20)) as usize]
    }

    /// Wedge index (0..20) in `sector_sequence` whose sector value is `s`.
    pub fn sector_index(&self, s: u8) -> Option<usize> {
        self.sector_sequence.iter().position(|&v| v == s)
    }
}

impl<T: Scalar> Default for BoardSpec<T> {
    fn default() -> Self {
        default_board_spec()
    }
}

/// The standard-board spec: tournament-rule radii normalized by 170 mm,
/// the usual sector order, and calibration targets at -9, 81, 171, and 261
/// degrees clockwise from up.
pub fn default_board_spec<T: Scalar>() -> BoardSpec<T> {
    BoardSpec::from_radii_mm(
        DEFAULT_RADII_MM.map(T::c),
        DEFAULT_SECTOR_SEQUENCE,
        DEFAULT_CAL_ANGLES_DEG.map(T::c),
    )
    .expect("default board spec is valid")
}

/// Ring classification of a dart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ring {
    Miss,
    Single,
    Double,
    Treble,
    Bull,
    DoubleBull,
}

/// A classified dart: ring plus sector where applicable.
///
/// Serialized as "0" (miss), "B", "DB", or "S{n}"/"D{n}"/"T{n}".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScoreToken {
    Miss,
    Bull,
    DoubleBull,
    Single(u8),
    Double(u8),
    Treble(u8),
}

/// Parse failure for a score-token string.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid score token {0:?}")]
pub struct ParseTokenError(pub String);

impl ScoreToken {
    /// Point value: 0 for a miss, 25/50 for bulls, sector times 1/2/3.
    pub fn value(&self) -> u32 {
        match *self {
            ScoreToken::Miss => 0,
            ScoreToken::Bull => 25,
            ScoreToken::DoubleBull => 50,
            ScoreToken::Single(s) => u32::from(s),
            ScoreToken::Double(s) => 2 * u32::from(s),
            ScoreToken::Treble(s) => 3 * u32::from(s),
        }
    }

    pub fn ring(&self) -> Ring {
        match *self {
            ScoreToken::Miss => Ring::Miss,
            ScoreToken::Bull => Ring::Bull,
            ScoreToken::DoubleBull => Ring::DoubleBull,
            ScoreToken::Single(_) => Ring::Single,
            ScoreToken::Double(_) => Ring::Double,
            ScoreToken::Treble(_) => Ring::Treble,
        }
    }

    /// Sector value for single/double/treble tokens.
    pub fn sector(&self) -> Option<u8> {
        match *self {
            ScoreToken::Single(s) | ScoreToken::Double(s) | ScoreToken::Treble(s) => Some(s),
            _ => None,
        }
    }
}

impl std::fmt::Display for ScoreToken {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            ScoreToken::Miss => write!(f, "0"),
            ScoreToken::Bull => write!(f, "B"),
            ScoreToken::DoubleBull => write!(f, "DB"),
            ScoreToken::Single(s) => write!(f, "S{s}"),
            ScoreToken::Double(s) => write!(f, "D{s}"),
            ScoreToken::Treble(s) => write!(f, "T{s}"),
        }
    }
}

impl std::str::FromStr for ScoreToken {
    type Err = ParseTokenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseTokenError(s.to_string());
        match s {
            "0" => return Ok(ScoreToken::Miss),
            "B" => return Ok(ScoreToken::Bull),
            "DB" => return Ok(ScoreToken::DoubleBull),
            _ => {}
        }
        let (head, tail) = s.split_at(s.len().min(1));
        let sector: u8 = tail.parse().map_err(|_| err())?;
        if !(1..=20).contains(&sector) {
            return Err(err());
        }
        match head {
            "S" => Ok(ScoreToken::Single(sector)),
            "D" => Ok(ScoreToken::Double(sector)),
            "T" => Ok(ScoreToken::Treble(sector)),
            _ => Err(err()),
        }
    }
}

impl Serialize for ScoreToken {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScoreToken {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
