//! Closed-form beamforming: MRT at the BS, optimal IRS phase shifts, the IRS
//! array gain, and the resulting closed-form received SNR.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::channel::steering_vector;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::geometry::{PhaseGeometry, Vec3};

/// IRS phase-shift vector, each entry in `[0, 2*pi)`.
#[derive(Debug, Clone)]
pub struct PhaseConfig {
    pub theta: Vec<f64>,
}

/// Per-element phase offsets `mu_x(i) = i * (inc_tx_x - inc_rx_x)` and
/// `mu_y(j) = j * (inc_tx_y - inc_rx_y)` (zero-based element indices).
fn mu_increments(geom: &PhaseGeometry) -> (f64, f64) {
    (geom.inc_tx_x - geom.inc_rx_x, geom.inc_tx_y - geom.inc_rx_y)
}

/// MRT beamformer `sqrt(P) a_T1 / sqrt(M)` toward the IRS.
pub fn mrt_beamformer(
    geom: &PhaseGeometry,
    bs_cols: usize,
    bs_rows: usize,
    power: f64,
) -> Result<Vec<Complex64>> {
    if power < 0.0 || !power.is_finite() {
        return Err(Error::Geometry(format!("negative or non-finite power {power}")));
    }
    let m = (bs_cols * bs_rows) as f64;
    let scale = (power / m).sqrt();
    let a = steering_vector(geom.inc_bs_x, geom.inc_bs_z, bs_cols, bs_rows);
    Ok(a.into_iter().map(|e| e * scale).collect())
}

/// Modulus of the IRS double sum `|sum exp(j(theta + mu_x + mu_y))|`.
pub fn array_gain(
    theta: &[f64],
    geom: &PhaseGeometry,
    irs_cols: usize,
    irs_rows: usize,
) -> Result<f64> {
    if theta.len() != irs_cols * irs_rows {
        return Err(Error::Dimension(format!(
            "phase vector length {} != {}x{}",
            theta.len(),
            irs_cols,
            irs_rows
        )));
    }
    let (dx, dy) = mu_increments(geom);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..irs_cols {
        for j in 0..irs_rows {
            let phase = theta[i * irs_rows + j] + dx * i as f64 + dy * j as f64;
            acc += Complex64::from_polar(1.0, phase);
        }
    }
    Ok(acc.norm())
}

/// Phase shifts `theta = -(mu_x + mu_y)` wrapped into `[0, 2*pi)`; attains the
/// triangle-inequality bound `array_gain = N_s`.
pub fn optimal_phases(geom: &PhaseGeometry, irs_cols: usize, irs_rows: usize) -> PhaseConfig {
    let (dx, dy) = mu_increments(geom);
    let mut theta = Vec::with_capacity(irs_cols * irs_rows);
    for i in 0..irs_cols {
        for j in 0..irs_rows {
            theta.push((-(dx * i as f64 + dy * j as f64)).rem_euclid(TAU));
        }
    }
    PhaseConfig { theta }
}

/// Closed-form received SNR under MRT and optimal phases:
/// `rho_o^2 d_o^4 P_o N_s^2 M / (|q - l_k|^2 |q - c|^2 sigma_o^2)`.
pub fn closed_form_snr(q: Vec3, c: Vec3, user: Vec3, cfg: &ScenarioConfig) -> Result<f64> {
    let d_rk2 = q.dist_sq(user);
    let d_br2 = q.dist_sq(c);
    if d_rk2 == 0.0 || d_br2 == 0.0 {
        return Err(Error::Geometry("UAV coincides with BS or user".into()));
    }
    Ok(cfg.snr_scale() / (d_rk2 * d_br2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{brute_force_snr, build_channels};
    use crate::geometry::compute_angles;
    use proptest::prelude::*;
    use rand::{Rng as _, SeedableRng as _};
    use rand_chacha::ChaCha8Rng;

    fn geom_for(cfg: &ScenarioConfig, q: Vec3, user: Vec3) -> PhaseGeometry {
        compute_angles(q, cfg.bs_pos(), user, &cfg.spacing()).unwrap()
    }

    #[test]
    fn mrt_power_and_modulus() {
        let cfg = ScenarioConfig::default();
        let g = geom_for(&cfg, Vec3::new(30.0, 40.0, 100.0), cfg.users[0]);
        let w = mrt_beamformer(&g, 4, 4, 1.0).unwrap();
        // M = 16: each entry modulus 1/4, total power P_k.
        for e in &w {
            assert!((e.norm() - 0.25).abs() < 1e-12);
        }
        let p: f64 = w.iter().map(|e| e.norm_sqr()).sum();
        assert!((p - 1.0).abs() < 1e-12);

        let zero = mrt_beamformer(&g, 4, 4, 0.0).unwrap();
        assert!(zero.iter().all(|e| e.norm() == 0.0));
        assert!(mrt_beamformer(&g, 4, 4, -1.0).is_err());
    }

    #[test]
    fn mrt_alignment_gain() {
        let cfg = ScenarioConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let q = Vec3::new(rng.gen_range(-200.0..600.0), rng.gen_range(-300.0..300.0), 100.0);
            let g = geom_for(&cfg, q, cfg.users[1]);
            let p = rng.gen_range(0.01..1.0);
            let w = mrt_beamformer(&g, cfg.bs_cols, cfg.bs_rows, p).unwrap();
            let a = steering_vector(g.inc_bs_x, g.inc_bs_z, cfg.bs_cols, cfg.bs_rows);
            let dot: Complex64 = a.iter().zip(&w).map(|(ai, wi)| ai.conj() * wi).sum();
            let m = cfg.num_bs_antennas() as f64;
            assert!((dot.norm_sqr() - p * m).abs() / (p * m) < 1e-9);
        }
    }

    #[test]
    fn optimal_phases_attain_element_count() {
        let cfg = ScenarioConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let q = Vec3::new(rng.gen_range(-200.0..600.0), rng.gen_range(-300.0..300.0), 100.0);
            let u = Vec3::new(rng.gen_range(-200.0..700.0), rng.gen_range(-300.0..300.0), 0.0);
            let g = geom_for(&cfg, q, u);
            let pc = optimal_phases(&g, cfg.irs_cols, cfg.irs_rows);
            let ns = cfg.num_irs_elements() as f64;
            let gain = array_gain(&pc.theta, &g, cfg.irs_cols, cfg.irs_rows).unwrap();
            assert!((gain - ns).abs() < 1e-9);
            for t in &pc.theta {
                assert!((0.0..TAU).contains(t));
            }
        }
    }

    #[test]
    fn aligned_geometry_zero_phases() {
        // If departure and arrival increments coincide, mu vanishes and all
        // optimal phases are zero.
        let cfg = ScenarioConfig::default();
        let mut g = geom_for(&cfg, Vec3::new(30.0, 40.0, 100.0), cfg.users[0]);
        g.inc_tx_x = g.inc_rx_x;
        g.inc_tx_y = g.inc_rx_y;
        let pc = optimal_phases(&g, cfg.irs_cols, cfg.irs_rows);
        assert!(pc.theta.iter().all(|t| *t == 0.0));
        let ns = cfg.num_irs_elements() as f64;
        let zeros = vec![0.0; cfg.num_irs_elements()];
        let gain = array_gain(&zeros, &g, cfg.irs_cols, cfg.irs_rows).unwrap();
        assert!((gain - ns).abs() < 1e-9);
    }

    #[test]
    fn random_phases_never_beat_optimum() {
        let cfg = ScenarioConfig::default();
        let g = geom_for(&cfg, Vec3::new(55.0, -35.0, 100.0), cfg.users[3]);
        let ns = cfg.num_irs_elements();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let theta: Vec<f64> = (0..ns).map(|_| rng.gen_range(0.0..TAU)).collect();
            let gain = array_gain(&theta, &g, cfg.irs_cols, cfg.irs_rows).unwrap();
            assert!(gain <= ns as f64 + 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn gain_bound_holds_for_random_geometry(
            qx in -300.0f64..700.0,
            qy in -300.0f64..300.0,
            seed in 0u64..1000,
        ) {
            let mut cfg = ScenarioConfig::default();
            cfg.irs_cols = 5;
            cfg.irs_rows = 4;
            let g = geom_for(&cfg, Vec3::new(qx, qy, 100.0), cfg.users[0]);
            let ns = cfg.num_irs_elements();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let theta: Vec<f64> = (0..ns).map(|_| rng.gen_range(0.0..TAU)).collect();
            let gain = array_gain(&theta, &g, cfg.irs_cols, cfg.irs_rows).unwrap();
            prop_assert!(gain <= ns as f64 + 1e-9);
        }
    }

    #[test]
    fn closed_form_scaling_laws() {
        let cfg = ScenarioConfig::default();
        let c = cfg.bs_pos();
        let u = cfg.users[0];
        let q = Vec3::new(0.0, 0.0, 100.0);
        let base = closed_form_snr(q, c, u, &cfg).unwrap();
        // Doubling both distances divides the SNR by 16.
        let q2 = Vec3::new(
            c.x + 2.0 * (q.x - c.x),
            c.y + 2.0 * (q.y - c.y),
            c.z + 2.0 * (q.z - c.z),
        );
        let u2 = Vec3::new(
            q2.x + 2.0 * (u.x - q.x),
            q2.y + 2.0 * (u.y - q.y),
            q2.z + 2.0 * (u.z - q.z),
        );
        let quarter = closed_form_snr(q2, c, u2, &cfg).unwrap();
        assert!((quarter - base / 16.0).abs() / base < 1e-9);
        // Doubling N_s quadruples the SNR.
        let mut cfg2 = cfg.clone();
        cfg2.irs_cols *= 2;
        let four = closed_form_snr(q, c, u, &cfg2).unwrap();
        assert!((four - 4.0 * base).abs() / (4.0 * base) < 1e-9);
        assert!(closed_form_snr(c, c, u, &cfg).is_err());
    }

    #[test]
    fn closed_form_matches_brute_force_on_reference_point() {
        let cfg = ScenarioConfig::default();
        let q = Vec3::new(0.0, 0.0, 100.0);
        let ch = build_channels(&cfg, q).unwrap();
        let user = 0;
        let g = &ch.phase_geom[user];
        let w = mrt_beamformer(g, cfg.bs_cols, cfg.bs_rows, cfg.tx_power).unwrap();
        let pc = optimal_phases(g, cfg.irs_cols, cfg.irs_rows);
        let brute = brute_force_snr(&ch, user, &pc.theta, &w, cfg.noise_power).unwrap();
        let closed = closed_form_snr(q, cfg.bs_pos(), cfg.users[user], &cfg).unwrap();
        assert!((brute - closed).abs() / closed < 1e-9);
    }

    #[test]
    fn random_phases_never_beat_closed_form_snr() {
        let cfg = ScenarioConfig::default();
        let q = Vec3::new(20.0, -15.0, 100.0);
        let ch = build_channels(&cfg, q).unwrap();
        let user = 4;
        let g = &ch.phase_geom[user];
        let w = mrt_beamformer(g, cfg.bs_cols, cfg.bs_rows, cfg.tx_power).unwrap();
        let closed = closed_form_snr(q, cfg.bs_pos(), cfg.users[user], &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let theta: Vec<f64> =
                (0..cfg.num_irs_elements()).map(|_| rng.gen_range(0.0..TAU)).collect();
            let snr = brute_force_snr(&ch, user, &theta, &w, cfg.noise_power).unwrap();
            assert!(snr <= closed * (1.0 + 1e-9));
        }
    }
}
