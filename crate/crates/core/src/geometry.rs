//! Planar construction of multi-chamber inflatable actuators.
//!
//! A chamber is an in-circle of radius `r` whose centre sits at distance `c`
//! from the rotation centre `O` along the x-axis. The ray `y = x tan(phi)`
//! cuts the circle in two points; the chord between them is the bridge to the
//! neighbouring chamber and the remaining arcs give the inner (`alpha`) and
//! outer (`gamma`) perimeter lengths. Angles are radians, lengths are
//! millimetres.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Solved construction parameters of one chamber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChamberGeometry<T> {
    pub r: T,
    pub c: T,
    pub phi: T,
    pub lambda1: T,
    pub lambda2: T,
    pub lambda3: T,
    /// Inner perimeter arc, `r * lambda1`.
    pub alpha: T,
    /// Chord between the two intersection points.
    pub bridge: T,
    /// Outer perimeter arc, `r * lambda3`.
    pub gamma: T,
    pub x1: T,
    pub y1: T,
    pub x2: T,
    pub y2: T,
}

/// A full actuator: `n` identical chambers sharing one half-angle.
#[derive(Debug, Clone, PartialEq)]
pub struct ActuatorDesign<T> {
    pub theta: T,
    pub height: T,
    /// Carried for reporting only; it does not enter the planar solve.
    pub width: T,
    pub n: usize,
    pub chambers: Vec<ChamberGeometry<T>>,
}

/// Intersection points of the ray with the chamber circle, `x1 <= x2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intersection<T> {
    pub x1: T,
    pub y1: T,
    pub x2: T,
    pub y2: T,
}

/// Per-chamber half-angle `theta / (2n - 2)`.
pub fn chamber_angle<T: Scalar>(theta: T, n: usize) -> Result<T> {
    if n < 2 {
        return Err(Error::DegenerateChamberCount(n));
    }
    if !(theta > T::zero() && theta <= T::PI()) {
        return Err(Error::InvalidAngle(theta.as_f64()));
    }
    Ok(theta / T::lit((2 * n - 2) as f64))
}

/// Intersects `y = x tan(phi)` with `(x - c)^2 + y^2 = r^2`.
///
/// Substituting the line gives `x^2 (1 + t^2) - 2 c x + (c^2 - r^2) = 0`
/// with reduced discriminant `psi = r^2 + t^2 (r^2 - c^2)`.
pub fn circle_line_intersection<T: Scalar>(r: T, c: T, phi: T) -> Result<Intersection<T>> {
    if !(r > T::zero()) {
        return Err(Error::InvalidGeometry(format!("radius {r} must be positive")));
    }
    if !(c >= T::zero()) {
        return Err(Error::InvalidGeometry(format!("centre distance {c} must be non-negative")));
    }
    if !(phi >= T::zero() && phi < T::FRAC_PI_2()) {
        return Err(Error::InvalidGeometry(format!("half-angle {phi} outside [0, pi/2)")));
    }
    let t = phi.tan();
    let s = T::one() + t * t;
    let psi = r * r + t * t * (r * r - c * c);
    if psi < T::zero() {
        return Err(Error::NoIntersection(psi.as_f64()));
    }
    let root = psi.sqrt();
    let x1 = (c - root) / s;
    let x2 = (c + root) / s;
    Ok(Intersection {
        x1,
        y1: x1 * t,
        x2,
        y2: x2 * t,
    })
}

/// Solves one chamber for the given radius, centre distance and half-angle.
pub fn chamber_params<T: Scalar>(r: T, c: T, phi: T) -> Result<ChamberGeometry<T>> {
    let Intersection { x1, y1, x2, y2 } = circle_line_intersection(r, c, phi)?;
    if y1 > r {
        return Err(Error::InfeasibleChamber(format!("y1 = {y1} exceeds r = {r}")));
    }
    let bridge = (x2 - x1).hypot(y2 - y1);
    // cos(lambda2) = 1 - bridge^2 / (2 r^2), evaluated through the half-angle
    // form to stay accurate for short chords.
    let half = bridge / (T::lit(2.0) * r);
    let lambda2 = T::lit(2.0) * half.min(T::one()).asin();
    let lambda1 = (y1 / r).asin();
    if lambda1 < T::zero() {
        return Err(Error::InfeasibleChamber(format!(
            "rotation centre lies inside the circle (lambda1 = {lambda1})"
        )));
    }
    let lambda3 = T::PI() - lambda1 - lambda2;
    if lambda3 < T::zero() {
        return Err(Error::InfeasibleChamber(format!("lambda3 = {lambda3} is negative")));
    }
    Ok(ChamberGeometry {
        r,
        c,
        phi,
        lambda1,
        lambda2,
        lambda3,
        alpha: r * lambda1,
        bridge,
        gamma: r * lambda3,
        x1,
        y1,
        x2,
        y2,
    })
}

/// Grid search over chamber count and radius.
///
/// Chambers are identical and stacked with pitch `H / n`; each in-circle must
/// fit its layer (`2r <= H / n`) and its centre sits one pitch away from the
/// rotation centre (`c = H / n`). The feasible design with the fewest
/// chambers wins, ties go to the largest radius and then the smallest `c`.
pub fn design_actuator<T: Scalar>(
    theta: T,
    height: T,
    width: T,
    r_candidates: &[T],
) -> Result<ActuatorDesign<T>> {
    if !(theta > T::zero()) || !(height > T::zero()) || !(width > T::zero()) {
        return Err(Error::InvalidGeometry(
            "theta, height and width must be positive".into(),
        ));
    }
    if r_candidates.is_empty() {
        return Err(Error::InvalidGeometry("empty radius grid".into()));
    }
    if r_candidates.iter().any(|r| !(*r > T::zero())) {
        return Err(Error::InvalidGeometry("radius candidates must be positive".into()));
    }
    let r_min = r_candidates
        .iter()
        .copied()
        .fold(T::infinity(), |a, b| a.min(b));
    let n_max = (height / (T::lit(2.0) * r_min))
        .floor()
        .to_usize()
        .unwrap_or(0);

    for n in 2..=n_max {
        let phi = chamber_angle(theta, n)?;
        let pitch = height / T::lit(n as f64);
        let mut best: Option<ChamberGeometry<T>> = None;
        for &r in r_candidates {
            if T::lit(2.0) * r > pitch {
                continue;
            }
            let Ok(chamber) = chamber_params(r, pitch, phi) else {
                continue;
            };
            let better = match &best {
                None => true,
                Some(b) => chamber.r > b.r || (chamber.r == b.r && chamber.c < b.c),
            };
            if better {
                best = Some(chamber);
            }
        }
        if let Some(chamber) = best {
            return Ok(ActuatorDesign {
                theta,
                height,
                width,
                n,
                chambers: vec![chamber; n],
            });
        }
    }
    Err(Error::NoFeasibleDesign)
}
