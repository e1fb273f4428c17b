//! 3-D geometry for the aerial-IRS link: positions, link angles, phase
//! increments of the uniform planar arrays, and free-space path loss.
//!
//! Conventions: elevation is measured from the vertical (+z) axis, azimuth in
//! the x-y plane from +x. Phase increments along an array axis are
//! `(2*pi/lambda) * spacing * u_axis`, where `u_axis` is the direction cosine
//! of the propagation direction along that axis. For the BS->IRS link the
//! direction points from the BS reference antenna to the IRS reference
//! element; for the IRS->user link from the IRS to the user. The angle of
//! departure at the BS is taken symmetric to the angle of arrival at the IRS,
//! with the BS array lying in the x-z plane.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// A point or direction in 3-D space, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    pub fn dist_sq(self, other: Vec3) -> f64 {
        (self - other).norm_sq()
    }

    /// Norm of the projection onto the x-y plane.
    pub fn horizontal_norm(self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Array spacings and wavelength needed to turn link angles into per-element
/// phase increments.
#[derive(Debug, Clone, Copy)]
pub struct ArraySpacing {
    pub wavelength: f64,
    /// IRS element spacing along x / y.
    pub irs_dx: f64,
    pub irs_dy: f64,
    /// BS antenna spacing along x / z (the BS array is in the x-z plane).
    pub bs_dx: f64,
    pub bs_dz: f64,
}

/// Elevation/azimuth of a link plus the unit propagation direction.
#[derive(Debug, Clone, Copy)]
pub struct LinkAngles {
    pub elevation: f64,
    pub azimuth: f64,
    pub direction: Vec3,
}

/// All steering angles and per-element phase increments for one UAV position
/// and one user.
#[derive(Debug, Clone, Copy)]
pub struct PhaseGeometry {
    /// BS->IRS link, seen as an arrival at the IRS.
    pub arrival: LinkAngles,
    /// IRS->user link, seen as a departure at the IRS.
    pub departure: LinkAngles,
    /// Receive phase increments at the IRS (x, y axes).
    pub inc_rx_x: f64,
    pub inc_rx_y: f64,
    /// Transmit phase increments at the IRS (x, y axes).
    pub inc_tx_x: f64,
    pub inc_tx_y: f64,
    /// Transmit phase increments at the BS (x, z axes).
    pub inc_bs_x: f64,
    pub inc_bs_z: f64,
}

/// Elevation/azimuth of the direction from `from` to `to`.
pub fn link_angles(from: Vec3, to: Vec3) -> Result<LinkAngles> {
    let d = to - from;
    let n = d.norm();
    if n <= 0.0 || !n.is_finite() {
        return Err(Error::Geometry(format!(
            "coincident or non-finite points: {from:?} -> {to:?}"
        )));
    }
    let u = d * (1.0 / n);
    let elevation = u.z.clamp(-1.0, 1.0).acos();
    // Vertical link: azimuth is undefined, and all azimuth-dependent phase
    // increments vanish with sin(elevation) = 0; pick 0.
    let azimuth = if u.horizontal_norm() > 0.0 {
        u.y.atan2(u.x)
    } else {
        0.0
    };
    Ok(LinkAngles {
        elevation,
        azimuth,
        direction: u,
    })
}

/// Computes all steering angles and phase increments for UAV position `q`,
/// BS reference antenna `c` and user position `user`.
pub fn compute_angles(q: Vec3, c: Vec3, user: Vec3, sp: &ArraySpacing) -> Result<PhaseGeometry> {
    let arrival = link_angles(c, q)?;
    let departure = link_angles(q, user)?;
    let k = 2.0 * PI / sp.wavelength;
    let ua = arrival.direction;
    let ud = departure.direction;
    Ok(PhaseGeometry {
        arrival,
        departure,
        inc_rx_x: k * sp.irs_dx * ua.x,
        inc_rx_y: k * sp.irs_dy * ua.y,
        inc_tx_x: k * sp.irs_dx * ud.x,
        inc_tx_y: k * sp.irs_dy * ud.y,
        inc_bs_x: k * sp.bs_dx * ua.x,
        inc_bs_z: k * sp.bs_dz * ua.z,
    })
}

/// Free-space path gain `rho_o * d_o^2 / d^2`.
pub fn path_loss(d: f64, rho_o: f64, d_o: f64) -> Result<f64> {
    if d <= 0.0 || !d.is_finite() {
        return Err(Error::Geometry(format!("invalid link distance {d}")));
    }
    Ok(rho_o * d_o * d_o / (d * d))
}
