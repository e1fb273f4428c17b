//! Cascaded BS -> IRS -> user channel: UPA steering vectors, the rank-one
//! BS-IRS matrix, per-user IRS-user vectors, and the brute-force SNR used as
//! an oracle against the closed-form expression.

use num_complex::Complex64;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::geometry::{self, PhaseGeometry, Vec3};

/// Steering vectors, path gains and cascaded channel for one UAV position.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Receive steering vector at the IRS (length N_s).
    pub rx_irs: Vec<Complex64>,
    /// Transmit steering vector at the BS (length M).
    pub tx_bs: Vec<Complex64>,
    /// Per-user transmit steering vector at the IRS (length N_s each).
    pub tx_irs: Vec<Vec<Complex64>>,
    /// BS -> IRS channel matrix, N_s x M row-major.
    pub bs_irs: Vec<Complex64>,
    /// Per-user IRS -> user channel vector h_rk (length N_s each).
    pub irs_user: Vec<Vec<Complex64>>,
    /// Path gains and distances.
    pub gain_bs_irs: f64,
    pub gain_irs_user: Vec<f64>,
    pub dist_bs_irs: f64,
    pub dist_irs_user: Vec<f64>,
    /// Per-user steering geometry, kept for beamforming.
    pub phase_geom: Vec<PhaseGeometry>,
    pub num_irs: usize,
    pub num_bs: usize,
}

/// UPA steering vector in Kronecker ordering: entry for index pair `(i, j)`
/// (zero-based, `i` over the first axis) is `exp(-j (phase_a*i + phase_b*j))`
/// at position `i * n_b + j`.
pub fn steering_vector(phase_a: f64, phase_b: f64, n_a: usize, n_b: usize) -> Vec<Complex64> {
    assert!(n_a >= 1 && n_b >= 1, "array axes must have at least one element");
    let mut out = Vec::with_capacity(n_a * n_b);
    for i in 0..n_a {
        for j in 0..n_b {
            let phase = -(phase_a * i as f64 + phase_b * j as f64);
            out.push(Complex64::from_polar(1.0, phase));
        }
    }
    out
}

/// Builds the full channel realization for UAV position `q`.
pub fn build_channels(cfg: &ScenarioConfig, q: Vec3) -> Result<ChannelRealization> {
    let c = cfg.bs_pos();
    if (q.z - cfg.irs_altitude).abs() > 1e-9 {
        return Err(Error::Geometry(format!(
            "UAV altitude {} differs from configured Z = {}",
            q.z, cfg.irs_altitude
        )));
    }
    let sp = cfg.spacing();
    let ns = cfg.num_irs_elements();
    let m = cfg.num_bs_antennas();
    let k = 2.0 * std::f64::consts::PI / cfg.wavelength;

    let d_br = q.dist(c);
    let rho_br = geometry::path_loss(d_br, cfg.ref_gain, cfg.ref_distance)?;

    let mut geoms = Vec::with_capacity(cfg.num_users());
    for user in &cfg.users {
        geoms.push(geometry::compute_angles(q, c, *user, &sp)?);
    }
    // The BS->IRS side is shared by every user.
    let g0 = geoms[0];
    let rx_irs = steering_vector(g0.inc_rx_x, g0.inc_rx_y, cfg.irs_cols, cfg.irs_rows);
    let tx_bs = steering_vector(g0.inc_bs_x, g0.inc_bs_z, cfg.bs_cols, cfg.bs_rows);

    // G = sqrt(rho_br) e^{-j 2 pi d_br / lambda} a_R1 a_T1^H
    let g_scale = Complex64::from_polar(rho_br.sqrt(), -k * d_br);
    let mut bs_irs = Vec::with_capacity(ns * m);
    for a in &rx_irs {
        for b in &tx_bs {
            bs_irs.push(g_scale * a * b.conj());
        }
    }

    let mut tx_irs = Vec::with_capacity(cfg.num_users());
    let mut irs_user = Vec::with_capacity(cfg.num_users());
    let mut gain_irs_user = Vec::with_capacity(cfg.num_users());
    let mut dist_irs_user = Vec::with_capacity(cfg.num_users());
    for (user, geom) in cfg.users.iter().zip(&geoms) {
        let d_rk = q.dist(*user);
        let rho_rk = geometry::path_loss(d_rk, cfg.ref_gain, cfg.ref_distance)?;
        let a_t2 = steering_vector(geom.inc_tx_x, geom.inc_tx_y, cfg.irs_cols, cfg.irs_rows);
        // h_rk^H = sqrt(rho_rk) e^{-j 2 pi d_rk / lambda} a_T2^H, stored as
        // the column vector h_rk.
        let h_scale = Complex64::from_polar(rho_rk.sqrt(), k * d_rk);
        let h: Vec<Complex64> = a_t2.iter().map(|a| h_scale * a).collect();
        tx_irs.push(a_t2);
        irs_user.push(h);
        gain_irs_user.push(rho_rk);
        dist_irs_user.push(d_rk);
    }

    Ok(ChannelRealization {
        rx_irs,
        tx_bs,
        tx_irs,
        bs_irs,
        irs_user,
        gain_bs_irs: rho_br,
        gain_irs_user,
        dist_bs_irs: d_br,
        dist_irs_user,
        phase_geom: geoms,
        num_irs: ns,
        num_bs: m,
    })
}

/// Received SNR `|h_rk^H diag(e^{j theta}) G w|^2 / sigma_o^2` computed from
/// the explicit channel matrices. Independent of the closed-form expression.
pub fn brute_force_snr(
    ch: &ChannelRealization,
    user: usize,
    theta: &[f64],
    w: &[Complex64],
    noise_power: f64,
) -> Result<f64> {
    if user >= ch.irs_user.len() {
        return Err(Error::Dimension(format!("user index {user} out of range")));
    }
    if theta.len() != ch.num_irs {
        return Err(Error::Dimension(format!(
            "phase vector length {} != N_s = {}",
            theta.len(),
            ch.num_irs
        )));
    }
    if w.len() != ch.num_bs {
        return Err(Error::Dimension(format!(
            "beamformer length {} != M = {}",
            w.len(),
            ch.num_bs
        )));
    }
    // G w, then h^H diag(e^{j theta}) (G w).
    let mut gw = vec![Complex64::new(0.0, 0.0); ch.num_irs];
    for (i, gw_i) in gw.iter_mut().enumerate() {
        let row = &ch.bs_irs[i * ch.num_bs..(i + 1) * ch.num_bs];
        let mut acc = Complex64::new(0.0, 0.0);
        for (g, wj) in row.iter().zip(w) {
            acc += g * wj;
        }
        *gw_i = acc;
    }
    let h = &ch.irs_user[user];
    let mut rx = Complex64::new(0.0, 0.0);
    for i in 0..ch.num_irs {
        rx += h[i].conj() * Complex64::from_polar(1.0, theta[i]) * gw[i];
    }
    Ok(rx.norm_sqr() / noise_power)
}
