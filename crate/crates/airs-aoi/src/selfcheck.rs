//! Built-in cross-validation: independent oracles for the closed-form
//! pieces, a grid-search reference for the per-slot optimizer, and
//! determinism checks. The oracles here deliberately avoid the code paths
//! they validate.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aoi;
use crate::beamforming::{array_gain, closed_form_snr, mrt_beamformer, optimal_phases};
use crate::channel::{brute_force_snr, build_channels, steering_vector};
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::geometry::{compute_angles, Vec3};
use crate::sim::{run_episode, Policy};

/// Best achievable one-slot reward by exhaustive search: every candidate
/// position on a grid over the step ball, every stream, schedule share 1.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub value: f64,
    pub stream: Option<usize>,
    pub position: Vec3,
}

fn score_at(
    cfg: &ScenarioConfig,
    ages: &[u64],
    has_packet: &[bool],
    q: Vec3,
) -> Result<(f64, Option<usize>)> {
    let mut best = (0.0, None);
    for k in 0..cfg.num_users() {
        if !has_packet[k] {
            continue;
        }
        if closed_form_snr(q, cfg.bs_pos(), cfg.users[k], cfg)? < cfg.snr_threshold {
            continue;
        }
        let v = cfg.priorities[k] * ages[k] as f64;
        if v > best.0 {
            best = (v, Some(k));
        }
    }
    Ok(best)
}

fn ball_points(center: Vec3, radius: f64, step: f64) -> Vec<Vec3> {
    let mut pts = vec![center];
    let n = (radius / step).ceil() as i64;
    for i in -n..=n {
        for j in -n..=n {
            let dx = i as f64 * step;
            let dy = j as f64 * step;
            if dx * dx + dy * dy <= radius * radius {
                pts.push(Vec3::new(center.x + dx, center.y + dy, center.z));
            }
        }
    }
    // The optimum often sits on the reachability boundary; sample it densely.
    for a in 0..720 {
        let ang = a as f64 * std::f64::consts::TAU / 720.0;
        pts.push(Vec3::new(
            center.x + radius * ang.cos(),
            center.y + radius * ang.sin(),
            center.z,
        ));
    }
    pts
}

/// Grid search over the one-slot reachable set, refined around the coarse
/// winner. Independent of the relaxation and barrier machinery.
pub fn one_hot_oracle(
    cfg: &ScenarioConfig,
    ages: &[u64],
    has_packet: &[bool],
    q_prev: Vec3,
    coarse_step: f64,
) -> Result<OracleResult> {
    let radius = cfg.max_step();
    let mut best = OracleResult { value: 0.0, stream: None, position: q_prev };
    fn consider(
        best: &mut OracleResult,
        cfg: &ScenarioConfig,
        ages: &[u64],
        has_packet: &[bool],
        q: Vec3,
    ) -> Result<()> {
        let (v, k) = score_at(cfg, ages, has_packet, q)?;
        if v > best.value {
            *best = OracleResult { value: v, stream: k, position: q };
        }
        Ok(())
    }
    for q in ball_points(q_prev, radius, coarse_step) {
        consider(&mut best, cfg, ages, has_packet, q)?;
    }
    // Fine pass around the coarse winner, clipped to the ball.
    let fine = 0.05;
    let n = (coarse_step / fine).ceil() as i64;
    let center = best.position;
    for i in -n..=n {
        for j in -n..=n {
            let q = Vec3::new(center.x + i as f64 * fine, center.y + j as f64 * fine, center.z);
            let d = q.dist(q_prev);
            if d <= radius + 1e-12 {
                consider(&mut best, cfg, ages, has_packet, q)?;
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, body: impl FnOnce() -> Result<String>) -> CheckResult {
    match body() {
        Ok(detail) => CheckResult { name, passed: true, detail },
        Err(e) => CheckResult { name, passed: false, detail: e.to_string() },
    }
}

fn fail(msg: String) -> crate::Error {
    crate::Error::Solver(msg)
}

/// Runs every self-check and reports one result per check.
pub fn run_all() -> Vec<CheckResult> {
    let mut out = Vec::new();

    out.push(check("steering-vector-oracle", || {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let pa = rng.gen_range(-3.0..3.0);
            let pb = rng.gen_range(-3.0..3.0);
            let (na, nb) = (rng.gen_range(1..6), rng.gen_range(1..6));
            let v = steering_vector(pa, pb, na, nb);
            for i in 0..na {
                for j in 0..nb {
                    let expect = Complex64::from_polar(1.0, -(pa * i as f64 + pb * j as f64));
                    let got = v[i * nb + j];
                    if (got - expect).norm() > 1e-12 {
                        return Err(fail(format!("entry ({i},{j}) off by {}", (got - expect).norm())));
                    }
                }
            }
        }
        Ok("50 random arrays match the direct double loop".into())
    }));

    out.push(check("phase-alignment-gain", || {
        let cfg = ScenarioConfig::default();
        let ns = cfg.num_irs_elements() as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let q = Vec3::new(rng.gen_range(-300.0..800.0), rng.gen_range(-400.0..400.0), cfg.irs_altitude);
            let user = cfg.users[rng.gen_range(0..cfg.num_users())];
            let geom = compute_angles(q, cfg.bs_pos(), user, &cfg.spacing())?;
            let theta = optimal_phases(&geom, cfg.irs_cols, cfg.irs_rows);
            let g = array_gain(&theta.theta, &geom, cfg.irs_cols, cfg.irs_rows)?;
            worst = worst.max((g - ns).abs());
        }
        if worst > 1e-6 {
            return Err(fail(format!("gain misses the element count by {worst}")));
        }
        Ok(format!("aligned gain within {worst:.2e} of the element count"))
    }));

    out.push(check("snr-closed-form-vs-channel", || {
        let cfg = ScenarioConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let q = Vec3::new(rng.gen_range(-200.0..600.0), rng.gen_range(-300.0..300.0), cfg.irs_altitude);
            let k = rng.gen_range(0..cfg.num_users());
            let geom = compute_angles(q, cfg.bs_pos(), cfg.users[k], &cfg.spacing())?;
            let w = mrt_beamformer(&geom, cfg.bs_cols, cfg.bs_rows, cfg.tx_power)?;
            let theta = optimal_phases(&geom, cfg.irs_cols, cfg.irs_rows);
            let ch = build_channels(&cfg, q)?;
            let bf = brute_force_snr(&ch, k, &theta.theta, &w, cfg.noise_power)?;
            let cf = closed_form_snr(q, cfg.bs_pos(), cfg.users[k], &cfg)?;
            worst = worst.max((bf - cf).abs() / cf);
        }
        if worst > 1e-9 {
            return Err(fail(format!("relative mismatch {worst}")));
        }
        Ok(format!("explicit channel agrees within {worst:.2e} relative"))
    }));

    out.push(check("aoi-truth-tables", || {
        for xi in [false, true] {
            for alpha in [false, true] {
                for p in [false, true] {
                    let expect = (p as u64) + (xi as u64) * (1 - alpha as u64) * (1 - p as u64);
                    if aoi::step_xi(xi, alpha, p) as u64 != expect {
                        return Err(fail(format!("availability recursion at xi={xi} a={alpha} p={p}")));
                    }
                }
                for z in 0..4u64 {
                    for age in 1..6u64 {
                        let a = alpha as u64;
                        let x = xi as u64;
                        let expect = z * a * x + age * (1 - a * x) + 1;
                        if aoi::step_aoi(age, z, alpha, xi) != expect {
                            return Err(fail(format!("aoi recursion at age={age} z={z} a={alpha} xi={xi}")));
                        }
                    }
                }
            }
        }
        Ok("all recursions match their arithmetic expansions".into())
    }));

    out.push(check("relaxation-vs-grid", || {
        let mut cfg = ScenarioConfig::default();
        cfg.users.truncate(3);
        cfg.priorities.truncate(3);
        cfg.arrival_probs.truncate(3);
        let ages = [7, 3, 5];
        let xi = [true, true, true];
        let (decision, _) = crate::sca::sca_loop(&ages, &xi, cfg.uav_start, &cfg)?;
        let achieved = match decision.schedule.chosen() {
            Some(k) => cfg.priorities[k] * ages[k] as f64,
            None => 0.0,
        };
        let oracle = one_hot_oracle(&cfg, &ages, &xi, cfg.uav_start, 0.5)?;
        let gap = (oracle.value - achieved).abs() / oracle.value.max(1e-12);
        if gap > 1e-3 {
            return Err(fail(format!(
                "optimizer reward {achieved} vs grid reward {} (gap {gap:.2e})",
                oracle.value
            )));
        }
        Ok(format!("one-slot reward within {gap:.2e} of grid search"))
    }));

    out.push(check("episode-determinism", || {
        let mut cfg = ScenarioConfig::default();
        cfg.num_slots = 6;
        let a = run_episode(&cfg, Policy::RandomSchedule)?;
        let b = run_episode(&cfg, Policy::RandomSchedule)?;
        if a.weighted_sum_aoi != b.weighted_sum_aoi {
            return Err(fail("same seed produced different objectives".into()));
        }
        Ok(format!("repeated run reproduced objective {}", a.weighted_sum_aoi))
    }));

    out
}
