//! Per-slot joint scheduling and trajectory optimization: successive convex
//! approximation over the relaxed schedule shares, followed by rounding to a
//! binary single-channel schedule.

pub mod barrier;
pub mod subproblem;

use num_complex::Complex64;

use crate::aoi::ScheduleVector;
use crate::beamforming::{closed_form_snr, mrt_beamformer, optimal_phases};
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::geometry::{compute_angles, Vec3};
use subproblem::{solve_subproblem, ScaVariables, StartPoint, SubproblemSpec};

/// Committed per-slot decision: binary schedule, UAV position, and the
/// matching transmit beamformers and reflection phases.
#[derive(Debug, Clone)]
pub struct SlotDecision {
    pub schedule: ScheduleVector,
    pub uav_pos: Vec3,
    /// One beamformer per stream; all-zero for unscheduled streams.
    pub beamformers: Vec<Vec<Complex64>>,
    pub phases: Vec<f64>,
}

impl SlotDecision {
    /// Builds the decision for a committed position and schedule: MRT toward
    /// the reflector and phase alignment for the chosen stream, silence for
    /// the rest.
    pub fn build(cfg: &ScenarioConfig, q: Vec3, schedule: ScheduleVector) -> Result<Self> {
        let m = cfg.num_bs_antennas();
        let mut beamformers = vec![vec![Complex64::new(0.0, 0.0); m]; cfg.num_users()];
        let mut phases = vec![0.0; cfg.num_irs_elements()];
        if let Some(k) = schedule.chosen() {
            let geom = compute_angles(q, cfg.bs_pos(), cfg.users[k], &cfg.spacing())?;
            beamformers[k] = mrt_beamformer(&geom, cfg.bs_cols, cfg.bs_rows, cfg.tx_power)?;
            phases = optimal_phases(&geom, cfg.irs_cols, cfg.irs_rows).theta;
        }
        Ok(Self { schedule, uav_pos: q, beamformers, phases })
    }
}

/// Per-slot optimizer diagnostics.
#[derive(Debug, Clone, Default)]
pub struct ScaTrace {
    /// Relaxed objective after each iteration.
    pub objectives: Vec<f64>,
    pub kkt_residuals: Vec<f64>,
    /// Worst violation of the original constraints across iterates.
    pub max_original_violation: f64,
    pub converged: bool,
}

/// Picks the stream with the largest weighted relaxed share among streams
/// that have a packet and meet the SNR threshold at the committed position.
/// Ties go to the lowest index; an empty candidate set yields no schedule.
pub fn round_schedule(
    alpha: &[f64],
    ages: &[u64],
    has_packet: &[bool],
    q: Vec3,
    cfg: &ScenarioConfig,
) -> Result<ScheduleVector> {
    let mut best: Option<(usize, f64)> = None;
    for k in 0..cfg.num_users() {
        if !has_packet[k] {
            continue;
        }
        let snr = closed_form_snr(q, cfg.bs_pos(), cfg.users[k], cfg)?;
        if snr < cfg.snr_threshold {
            continue;
        }
        let score = cfg.priorities[k] * ages[k] as f64 * alpha[k];
        match best {
            Some((_, s)) if s >= score => {}
            _ => best = Some((k, score)),
        }
    }
    Ok(match best {
        Some((k, _)) => ScheduleVector::single(cfg.num_users(), k),
        None => ScheduleVector::none(cfg.num_users()),
    })
}

fn fresh_point(cfg: &ScenarioConfig, q: Vec3, has_packet: &[bool]) -> (Vec<f64>, f64, Vec<f64>) {
    let k_total = cfg.num_users();
    let r_bs = q.dist_sq(cfg.bs_pos()) * (1.0 + 1e-6);
    let r_user: Vec<f64> = cfg.users.iter().map(|u| q.dist_sq(*u) * (1.0 + 1e-6)).collect();
    let fair = 0.9 / k_total.max(1) as f64;
    let alpha: Vec<f64> = (0..k_total)
        .map(|k| {
            if !has_packet[k] {
                return cfg.alpha_min;
            }
            let cap = cfg.snr_scale() / (cfg.snr_threshold * r_user[k] * r_bs);
            (0.5 * cap).min(fair).max(cfg.alpha_min)
        })
        .collect();
    (r_user, r_bs, alpha)
}

/// Runs the relaxation to convergence for one slot and returns the committed
/// decision plus diagnostics. The returned position comes from the relaxed
/// solution; the schedule is rounded and re-checked against the threshold.
pub fn sca_loop(
    ages: &[u64],
    has_packet: &[bool],
    q_prev: Vec3,
    cfg: &ScenarioConfig,
) -> Result<(SlotDecision, ScaTrace)> {
    let weights: Vec<f64> = (0..cfg.num_users())
        .map(|k| cfg.priorities[k] * ages[k] as f64 * has_packet[k] as u64 as f64)
        .collect();

    let (r_user, r_bs, alpha) = fresh_point(cfg, q_prev, has_packet);
    let mut spec = SubproblemSpec {
        bs_pos: cfg.bs_pos(),
        users: cfg.users.clone(),
        altitude: cfg.irs_altitude,
        q_prev,
        max_step: cfg.max_step(),
        weights,
        has_packet: has_packet.to_vec(),
        snr_scale: cfg.snr_scale(),
        snr_threshold: cfg.snr_threshold,
        lin_r_user: r_user.clone(),
        lin_r_bs: r_bs,
        lin_alpha: alpha.clone(),
        alpha_min: cfg.alpha_min,
        barrier_gap: cfg.barrier_gap,
    };
    let mut start = StartPoint { q: q_prev, alpha, r_user, r_bs };

    let mut trace = ScaTrace::default();
    let mut last: Option<ScaVariables> = None;
    for _ in 0..cfg.sca_max_iters {
        let sol = match solve_subproblem(&spec, &start) {
            Ok(sol) => sol,
            Err(err) => {
                if last.is_some() {
                    break;
                }
                return Err(err);
            }
        };
        trace.max_original_violation = trace.max_original_violation.max(sol.original_violation(&spec));
        trace.kkt_residuals.push(sol.kkt_residual);
        let prev_obj = trace.objectives.last().copied();
        trace.objectives.push(sol.objective);

        spec.lin_r_user = sol.r_user.iter().map(|&r| r.max(1e-12)).collect();
        spec.lin_r_bs = sol.r_bs.max(1e-12);
        spec.lin_alpha = sol.alpha.iter().map(|&a| a.max(cfg.alpha_min)).collect();
        start = StartPoint {
            q: sol.q,
            alpha: sol.alpha.clone(),
            r_user: sol.r_user.clone(),
            r_bs: sol.r_bs,
        };
        let done = prev_obj.is_some_and(|p| {
            (sol.objective - p).abs() <= cfg.sca_obj_tol * p.abs().max(1e-12)
        });
        last = Some(sol);
        if done {
            trace.converged = true;
            break;
        }
    }

    let sol = last.expect("at least one iteration ran");
    let schedule = round_schedule(&sol.alpha, ages, has_packet, sol.q, cfg)?;
    let decision = SlotDecision::build(cfg, sol.q, schedule)?;
    Ok((decision, trace))
}
