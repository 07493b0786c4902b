//! Gauss linking integral of two closed polylines.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Fiber;
use crate::calculus::compensated_sum;
use crate::coords::Vec3;
use crate::error::{Error, Result};

/// Minimum curve separation, in units of the longest segment.
const SEPARATION_FACTOR: f64 = 10.0;

/// Rounding to the nearest integer is only claimed below this deviation.
pub const RELIABLE_DEVIATION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkingMethod {
    /// Exact Gauss integral per segment pair via the signed solid angle of the
    /// quadrilateral spanned by the two segments.
    #[default]
    SolidAngle,
    /// Midpoint rule on each segment pair.
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkingResult {
    pub raw: f64,
    pub rounded: i64,
    pub deviation: f64,
}

impl LinkingResult {
    pub fn from_raw(raw: f64) -> Self {
        let rounded = raw.round();
        Self {
            raw,
            rounded: rounded as i64,
            deviation: (raw - rounded).abs(),
        }
    }

    pub fn is_reliable(&self) -> bool {
        self.deviation < RELIABLE_DEVIATION
    }
}

fn unit(v: Vec3) -> Option<Vec3> {
    let n = v.norm();
    (n > 0.0).then(|| v / n)
}

/// Contribution of the segment pair `a0→a1`, `b0→b1` to the linking number.
fn solid_angle_term(a0: &Vec3, a1: &Vec3, b0: &Vec3, b1: &Vec3) -> f64 {
    let r13 = b0 - a0;
    let r14 = b1 - a0;
    let r23 = b0 - a1;
    let r24 = b1 - a1;
    let normals = [
        r13.cross(&r14),
        r14.cross(&r24),
        r24.cross(&r23),
        r23.cross(&r13),
    ];
    let mut n = [Vec3::zeros(); 4];
    for (slot, v) in n.iter_mut().zip(normals) {
        match unit(v) {
            Some(u) => *slot = u,
            // coplanar configuration: no solid angle
            None => return 0.0,
        }
    }
    let omega: f64 = (0..4)
        .map(|i| n[i].dot(&n[(i + 1) % 4]).clamp(-1.0, 1.0).asin())
        .sum();
    let orientation = (b1 - b0).cross(&(a1 - a0)).dot(&r13);
    omega.copysign(orientation) / (4.0 * PI)
}

fn midpoint_term(a0: &Vec3, a1: &Vec3, b0: &Vec3, b1: &Vec3) -> f64 {
    let r = (a0 + a1) * 0.5 - (b0 + b1) * 0.5;
    let da = a1 - a0;
    let db = b1 - b0;
    r.dot(&da.cross(&db)) / (4.0 * PI * r.norm().powi(3))
}

/// Linking number of two closed fibers with the exact per-segment formula.
pub fn gauss_linking(a: &Fiber, b: &Fiber) -> Result<LinkingResult> {
    gauss_linking_with(a, b, LinkingMethod::SolidAngle)
}

/// Discrete `(1/4π) ∮∮ (r₁ − r₂)·(dr₁ × dr₂) / |r₁ − r₂|³`.
///
/// Rows of the double sum run in parallel; each row and the final reduction
/// use compensated summation in a fixed order, so the result does not depend
/// on the thread count.
pub fn gauss_linking_with(a: &Fiber, b: &Fiber, method: LinkingMethod) -> Result<LinkingResult> {
    if !(a.closed && b.closed) {
        return Err(Error::OpenFiber);
    }
    let sa = a.segments();
    let sb = b.segments();
    if sa.len() < 3 || sb.len() < 3 {
        return Err(Error::InvalidArgument(
            "fibers need at least 3 segments".into(),
        ));
    }
    let required = SEPARATION_FACTOR * a.max_segment_length().max(b.max_segment_length());
    let distance = sa
        .par_iter()
        .map(|(p, _)| {
            sb.iter()
                .map(|(q, _)| (p - q).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);
    if distance <= required {
        return Err(Error::FibersTooClose { distance, required });
    }
    let term = match method {
        LinkingMethod::SolidAngle => solid_angle_term,
        LinkingMethod::Midpoint => midpoint_term,
    };
    let rows: Vec<f64> = sa
        .par_iter()
        .map(|(a0, a1)| compensated_sum(sb.iter().map(|(b0, b1)| term(a0, a1, b0, b1))))
        .collect();
    Ok(LinkingResult::from_raw(compensated_sum(rows)))
}
