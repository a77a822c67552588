//! Planar projective geometry.
//!
//! A [`Homography`] is a 3x3 invertible matrix defined up to nonzero scale
//! that maps points of one plane to another. Estimation from exactly four
//! correspondences uses the direct linear transform: both point sets are
//! normalized Hartley-style (centroid at the origin, RMS distance sqrt(2)),
//! the 8x8 linear system with the bottom-right element pinned to 1 is solved
//! by Gaussian elimination with partial pivoting, and the result is
//! denormalized. With four points the solution is exact up to rounding.
//!
//! Coordinates are y-down throughout (image convention); clockwise rotation
//! angles are positive.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::tolerances::{HOMOGENEOUS_EPS, SINGULAR_DET_EPS};

/// Errors from homography estimation and application.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    /// The point configuration or matrix is numerically singular.
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(&'static str),
    /// A transformed point has a vanishing homogeneous coordinate.
    #[error("point maps to infinity")]
    PointAtInfinity,
}

/// A point in the image plane (pixels) or board plane (normalized units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarPoint<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> PlanarPoint<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    /// Euclidean distance to another point.
    pub fn distance(&self, other: &Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Clockwise angle from "up" (the -y direction) in degrees, range (-180, 180].
    pub fn clockwise_angle_deg(&self) -> T {
        self.x.atan2(-self.y).to_degrees()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl<T: Scalar> std::ops::Sub for PlanarPoint<T> {
    type Output = PlanarPoint<T>;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<T: Scalar> std::ops::Add for PlanarPoint<T> {
    type Output = PlanarPoint<T>;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

/// 3x3 projective map between planes, row-major, defined up to scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Homography<T> {
    pub m: [[T; 3]; 3],
}

impl<T: Scalar> Homography<T> {
    pub fn identity() -> Self {
        let o = T::one();
        let z = T::zero();
        Self {
            m: [[o, z, z], [z, o, z], [z, z, o]],
        }
    }

    pub fn from_rows(m: [[T; 3]; 3]) -> Self {
        Self { m }
    }

    /// Pure translation.
    pub fn translation(dx: T, dy: T) -> Self {
        let o = T::one();
        let z = T::zero();
        Self {
            m: [[o, z, dx], [z, o, dy], [z, z, o]],
        }
    }

    /// Uniform scale about the origin.
    pub fn scaling(s: T) -> Self {
        let z = T::zero();
        Self {
            m: [[s, z, z], [z, s, z], [z, z, T::one()]],
        }
    }

    /// Anisotropic scale about the origin (used for axis flips).
    pub fn scaling_xy(sx: T, sy: T) -> Self {
        let z = T::zero();
        Self {
            m: [[sx, z, z], [z, sy, z], [z, z, T::one()]],
        }
    }

    /// Rotation about the origin, clockwise-positive in y-down coordinates.
    pub fn rotation_cw_deg(angle_deg: T) -> Self {
        let a = angle_deg.to_radians();
        let (s, c) = a.sin_cos();
        let z = T::zero();
        Self {
            m: [[c, -s, z], [s, c, z], [z, z, T::one()]],
        }
    }

    /// Applies the map to a point, performing the homogeneous division.
    pub fn apply(&self, p: PlanarPoint<T>) -> Result<PlanarPoint<T>, GeometryError> {
        let m = &self.m;
        let w = m[2][0] * p.x + m[2][1] * p.y + m[2][2];
        if w.abs() <= T::c(HOMOGENEOUS_EPS) {
            return Err(GeometryError::PointAtInfinity);
        }
        let x = (m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w;
        let y = (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w;
        Ok(PlanarPoint::new(x, y))
    }

    /// Maps a slice of points, failing on the first point at infinity.
    pub fn apply_all(&self, pts: &[PlanarPoint<T>]) -> Result<Vec<PlanarPoint<T>>, GeometryError> {
        pts.iter().map(|&p| self.apply(p)).collect()
    }

    /// Composition: `self` first, then `next` (`next * self` as matrices).
    pub fn then(&self, next: &Self) -> Self {
        let a = &next.m;
        let b = &self.m;
        let mut out = [[T::zero(); 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        Self { m: out }
    }

    /// Largest absolute element; zero only for the zero matrix.
    fn max_abs(&self) -> T {
        self.m
            .iter()
            .flatten()
            .fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }

    /// Determinant of the scale-normalized matrix, or None for the zero matrix.
    fn normalized_det(&self) -> Option<T> {
        let s = self.max_abs();
        if s == T::zero() {
            return None;
        }
        let m: Vec<T> = self.m.iter().flatten().map(|&v| v / s).collect();
        let det = m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
            + m[2] * (m[3] * m[7] - m[4] * m[6]);
        Some(det)
    }

    /// True when the scale-normalized determinant falls below the singularity
    /// threshold.
    pub fn is_degenerate(&self) -> bool {
        match self.normalized_det() {
            Some(det) => det.abs() < T::c(SINGULAR_DET_EPS),
            None => true,
        }
    }

    /// Inverse map, computed from the adjugate of the scale-normalized matrix.
    pub fn invert(&self) -> Result<Self, GeometryError> {
        let s = self.max_abs();
        if s == T::zero() {
            return Err(GeometryError::DegenerateConfiguration("zero matrix"));
        }
        let mut n = self.m;
        for row in n.iter_mut() {
            for v in row.iter_mut() {
                *v = *v / s;
            }
        }
        let det = n[0][0] * (n[1][1] * n[2][2] - n[1][2] * n[2][1])
            - n[0][1] * (n[1][0] * n[2][2] - n[1][2] * n[2][0])
            + n[0][2] * (n[1][0] * n[2][1] - n[1][1] * n[2][0]);
        if det.abs() < T::c(SINGULAR_DET_EPS) {
            return Err(GeometryError::DegenerateConfiguration("singular matrix"));
        }
        let adj = [
            [
                n[1][1] * n[2][2] - n[1][2] * n[2][1],
                n[0][2] * n[2][1] - n[0][1] * n[2][2],
                n[0][1] * n[1][2] - n[0][2] * n[1][1],
            ],
            [
                n[1][2] * n[2][0] - n[1][0] * n[2][2],
                n[0][0] * n[2][2] - n[0][2] * n[2][0],
                n[0][2] * n[1][0] - n[0][0] * n[1][2],
            ],
            [
                n[1][0] * n[2][1] - n[1][1] * n[2][0],
                n[0][1] * n[2][0] - n[0][0] * n[2][1],
                n[0][0] * n[1][1] - n[0][1] * n[1][0],
            ],
        ];
        let mut out = adj;
        for row in out.iter_mut() {
            for v in row.iter_mut() {
                *v = *v / det;
            }
        }
        Ok(Self { m: out })
    }

    /// Rescales so the bottom-right element is 1 when it dominates rounding
    /// noise, otherwise so the largest element is 1. Comparisons up to scale
    /// go through this form.
    pub fn canonical(&self) -> Self {
        let s = self.max_abs();
        let w = self.m[2][2];
        let div = if w.abs() > s * T::c(1e-9) { w } else { s };
        let mut out = self.m;
        for row in out.iter_mut() {
            for v in row.iter_mut() {
                *v = *v / div;
            }
        }
        Self { m: out }
    }
}

/// Builds the similarity performing, about `center`: optional axis flips,
/// then clockwise rotation, then uniform scale, then translation.
pub fn similarity<T: Scalar>(
    rotation_deg: T,
    flip_x: bool,
    flip_y: bool,
    translate: PlanarPoint<T>,
    scale: T,
    center: PlanarPoint<T>,
) -> Homography<T> {
    let o = T::one();
    let sx = if flip_x { -o } else { o };
    let sy = if flip_y { -o } else { o };
    Homography::translation(-center.x, -center.y)
        .then(&Homography::scaling_xy(sx, sy))
        .then(&Homography::rotation_cw_deg(rotation_deg))
        .then(&Homography::scaling(scale))
        .then(&Homography::translation(
            center.x + translate.x,
            center.y + translate.y,
        ))
}

/// Hartley normalization: returns the transformed points and the similarity
/// that maps originals onto them (centroid to origin, RMS distance sqrt(2)).
fn normalize_points<T: Scalar>(
    pts: &[PlanarPoint<T>; 4],
) -> Result<([PlanarPoint<T>; 4], Homography<T>), GeometryError> {
    let n = T::c(4.0);
    let cx = pts.iter().fold(T::zero(), |a, p| a + p.x) / n;
    let cy = pts.iter().fold(T::zero(), |a, p| a + p.y) / n;
    let rms = (pts
        .iter()
        .fold(T::zero(), |a, p| {
            let dx = p.x - cx;
            let dy = p.y - cy;
            a + dx * dx + dy * dy
        })
        / n)
        .sqrt();
    if rms <= T::zero() {
        return Err(GeometryError::DegenerateConfiguration("coincident points"));
    }
    let s = T::c(2.0).sqrt() / rms;
    let t = Homography::from_rows([
        [s, T::zero(), -s * cx],
        [T::zero(), s, -s * cy],
        [T::zero(), T::zero(), T::one()],
    ]);
    let mut out = *pts;
    for p in out.iter_mut() {
        *p = PlanarPoint::new(s * (p.x - cx), s * (p.y - cy));
    }
    Ok((out, t))
}

/// Solves the augmented 8x9 system by Gaussian elimination with partial
/// pivoting. Entries are O(1) after normalization, so the pivot threshold is
/// absolute.
fn solve_8<T: Scalar>(mut a: [[T; 9]; 8]) -> Option<[T; 8]> {
    for col in 0..8 {
        let (pivot_row, pivot_val) = (col..8)
            .map(|r| (r, a[r][col].abs()))
            .fold((col, T::zero()), |best, cand| {
                if cand.1 > best.1 {
                    cand
                } else {
                    best
                }
            });
        if pivot_val < T::c(1e-10) {
            return None;
        }
        a.swap(col, pivot_row);
        let inv = T::one() / a[col][col];
        for r in 0..8 {
            if r == col {
                continue;
            }
            let f = a[r][col] * inv;
            if f == T::zero() {
                continue;
            }
            for c in col..9 {
                a[r][c] = a[r][c] - f * a[col][c];
            }
        }
    }
    let mut x = [T::zero(); 8];
    for (r, xi) in x.iter_mut().enumerate() {
        *xi = a[r][8] / a[r][r];
    }
    Some(x)
}

/// Estimates the homography mapping `src[i]` to `dst[i]` from exactly four
/// correspondences.
///
/// Exact on its own correspondences up to rounding; fails with
/// [`GeometryError::DegenerateConfiguration`] when three points of either set
/// are collinear or coincident.
pub fn estimate_homography<T: Scalar>(
    src: &[PlanarPoint<T>; 4],
    dst: &[PlanarPoint<T>; 4],
) -> Result<Homography<T>, GeometryError> {
    let (ns, t_src) = normalize_points(src)?;
    let (nd, t_dst) = normalize_points(dst)?;

    // Rows per correspondence (x,y) -> (u,v), unknowns h00..h21 with h22 = 1:
    //   [x y 1 0 0 0 -ux -uy | u]
    //   [0 0 0 x y 1 -vx -vy | v]
    let z = T::zero();
    let o = T::one();
    let mut a = [[z; 9]; 8];
    for i in 0..4 {
        let (x, y) = (ns[i].x, ns[i].y);
        let (u, v) = (nd[i].x, nd[i].y);
        a[2 * i] = [x, y, o, z, z, z, -u * x, -u * y, u];
        a[2 * i + 1] = [z, z, z, x, y, o, -v * x, -v * y, v];
    }
    let h = solve_8(a).ok_or(GeometryError::DegenerateConfiguration(
        "singular correspondence system",
    ))?;
    let h_norm = Homography::from_rows([
        [h[0], h[1], h[2]],
        [h[3], h[4], h[5]],
        [h[6], h[7], o],
    ]);
    if h_norm.is_degenerate() {
        return Err(GeometryError::DegenerateConfiguration(
            "estimated map is singular",
        ));
    }
    // H = T_dst^-1 * H_norm * T_src
    let t_dst_inv = t_dst.invert()?;
    Ok(t_src.then(&h_norm).then(&t_dst_inv))
}
