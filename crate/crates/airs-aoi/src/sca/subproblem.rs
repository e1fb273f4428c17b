//! The per-slot convex subproblem: slack-variable reformulation of the SNR
//! constraint, log-domain first-order linearization, and the barrier solve.
//!
//! Variables are scaled before hitting the solver: the UAV offset is
//! normalized by the per-slot step budget and the slack distance bounds by
//! their linearization values, so every constraint is O(1).

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::sca::barrier::{self, ConstraintFn, QuadBound, SolverOptions};

/// One convex subproblem instance: linearization point, weights, geometry.
#[derive(Debug, Clone)]
pub struct SubproblemSpec {
    pub bs_pos: Vec3,
    pub users: Vec<Vec3>,
    pub altitude: f64,
    /// Committed position of the previous slot (velocity-ball center).
    pub q_prev: Vec3,
    /// Per-slot step budget `v_max * delta`.
    pub max_step: f64,
    /// Objective weights `b_k A_k xi_k`.
    pub weights: Vec<f64>,
    pub has_packet: Vec<bool>,
    /// SNR numerator constant Gamma.
    pub snr_scale: f64,
    pub snr_threshold: f64,
    /// Linearization point; strictly positive where used.
    pub lin_r_user: Vec<f64>,
    pub lin_r_bs: f64,
    pub lin_alpha: Vec<f64>,
    pub alpha_min: f64,
    pub barrier_gap: f64,
}

/// Affine inner approximation of the SNR constraint for one stream:
/// `r_user / lin_r_user + r_bs / lin_r_bs + alpha / lin_alpha <= rhs`.
#[derive(Debug, Clone, Copy)]
pub struct LinearizedSnr {
    pub inv_r_user: f64,
    pub inv_r_bs: f64,
    pub inv_alpha: f64,
    pub rhs: f64,
}

impl LinearizedSnr {
    /// Left-hand side of the affine constraint.
    pub fn affine_lhs(&self, r_user: f64, r_bs: f64, alpha: f64) -> f64 {
        self.inv_r_user * r_user + self.inv_r_bs * r_bs + self.inv_alpha * alpha
    }
}

/// Builds the linearized SNR constraint for stream `k`, or `None` when the
/// stream has no available packet (the constraint is vacuous).
pub fn linearize_constraint(spec: &SubproblemSpec, k: usize) -> Result<Option<LinearizedSnr>> {
    if !spec.has_packet[k] {
        return Ok(None);
    }
    let r_u = spec.lin_r_user[k];
    let r_b = spec.lin_r_bs;
    let a = spec.lin_alpha[k];
    if !(r_u > 0.0 && r_b > 0.0 && a > 0.0) {
        return Err(Error::Solver(format!(
            "nonpositive linearization point for stream {k}: r_user={r_u} r_bs={r_b} alpha={a}"
        )));
    }
    // ln r_u0 + ln r_b0 + ln a0 + (r_u - r_u0)/r_u0 + (r_b - r_b0)/r_b0
    // + (a - a0)/a0 <= ln Gamma - ln gamma_th
    let rhs = spec.snr_scale.ln() - spec.snr_threshold.ln() - r_u.ln() - r_b.ln() - a.ln() + 3.0;
    Ok(Some(LinearizedSnr {
        inv_r_user: 1.0 / r_u,
        inv_r_bs: 1.0 / r_b,
        inv_alpha: 1.0 / a,
        rhs,
    }))
}

/// Solution of one subproblem in original (unscaled) variables.
#[derive(Debug, Clone)]
pub struct ScaVariables {
    pub q: Vec3,
    pub alpha: Vec<f64>,
    pub r_user: Vec<f64>,
    pub r_bs: f64,
    /// `sum_k weight_k alpha_k`
    pub objective: f64,
    pub kkt_residual: f64,
    pub duality_gap: f64,
}

impl ScaVariables {
    /// Maximum violation of the original (non-linearized) constraints:
    /// slack definitions, product SNR constraint, velocity ball. Used to
    /// assert that SCA iterates stay feasible for the original problem.
    pub fn original_violation(&self, spec: &SubproblemSpec) -> f64 {
        let mut v: f64 = 0.0;
        let q = self.q;
        v = v.max(q.dist_sq(spec.bs_pos) / self.r_bs - 1.0);
        for (k, user) in spec.users.iter().enumerate() {
            if !spec.has_packet[k] {
                continue;
            }
            v = v.max(q.dist_sq(*user) / self.r_user[k] - 1.0);
            // r_u r_b alpha <= Gamma / gamma_th, in log form.
            let logs = self.r_user[k].ln() + self.r_bs.ln() + self.alpha[k].ln();
            v = v.max(logs - (spec.snr_scale.ln() - spec.snr_threshold.ln()));
        }
        let step = q.dist(spec.q_prev);
        v = v.max(step - spec.max_step - 1e-9);
        v = v.max((q.z - spec.altitude).abs());
        v
    }
}

/// Strictly feasible start for the barrier solve, in original variables.
#[derive(Debug, Clone)]
pub struct StartPoint {
    pub q: Vec3,
    pub alpha: Vec<f64>,
    pub r_user: Vec<f64>,
    pub r_bs: f64,
}

/// Solves the linearized subproblem to a KKT point. Streams whose SNR
/// constraint cannot admit any meaningful schedule share at the
/// linearization point are pinned at `alpha_min` and excluded from the
/// solve; the rounding step rejects them anyway.
pub fn solve_subproblem(spec: &SubproblemSpec, start: &StartPoint) -> Result<ScaVariables> {
    let k_total = spec.users.len();
    let step_scale = spec.max_step.max(1e-6);

    // Streams that get decision variables: packet available and the
    // linearized constraint strictly satisfiable above alpha_min.
    let mut vars: Vec<(usize, LinearizedSnr)> = Vec::new();
    for k in 0..k_total {
        if let Some(lin) = linearize_constraint(spec, k)? {
            let slack = lin.rhs
                - lin.inv_r_user * start.r_user[k]
                - lin.inv_r_bs * start.r_bs;
            // Largest alpha the affine constraint admits at the start r.
            let cap = slack / lin.inv_alpha;
            if cap > 2.0 * spec.alpha_min {
                vars.push((k, lin));
            }
        }
    }

    let nv = vars.len();
    if nv == 0 {
        // Nothing schedulable: any feasible position works; stay put.
        let q = spec.q_prev;
        let r_user: Vec<f64> = spec.users.iter().map(|u| q.dist_sq(*u)).collect();
        let alpha = vec![spec.alpha_min; k_total];
        let objective = dot_weights(&spec.weights, &alpha);
        return Ok(ScaVariables {
            q,
            alpha,
            r_user,
            r_bs: q.dist_sq(spec.bs_pos),
            objective,
            kkt_residual: 0.0,
            duality_gap: 0.0,
        });
    }

    // Variable layout: [q_x, q_y, alpha (nv), r_bs, r_user (nv)], scaled.
    let n = 2 + nv + 1 + nv;
    let idx_alpha = |j: usize| 2 + j;
    let idx_rbs = 2 + nv;
    let idx_ru = |j: usize| 3 + nv + j;

    let wmax = vars
        .iter()
        .map(|&(k, _)| spec.weights[k])
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let mut c = nalgebra::DVector::zeros(n);
    for (j, &(k, _)) in vars.iter().enumerate() {
        c[idx_alpha(j)] = -spec.weights[k] / wmax;
    }

    let mut cons: Vec<ConstraintFn> = Vec::new();
    for (j, &(k, lin)) in vars.iter().enumerate() {
        // Linearized SNR, in scaled slack variables r~ = r / lin_r.
        cons.push(ConstraintFn::Affine {
            terms: vec![
                (idx_ru(j), 1.0),
                (idx_rbs, 1.0),
                (idx_alpha(j), lin.inv_alpha),
            ],
            rhs: lin.rhs,
        });
        // Slack definition |q - l_k|^2 <= r_user.
        let u = spec.users[k];
        let r0 = spec.lin_r_user[k];
        let dz = spec.altitude - u.z;
        cons.push(ConstraintFn::Quad {
            vars: (0, 1),
            center: ((u.x - spec.q_prev.x) / step_scale, (u.y - spec.q_prev.y) / step_scale),
            scale: step_scale * step_scale / r0,
            offset: dz * dz / r0,
            bound: QuadBound::Var { idx: idx_ru(j), coeff: 1.0 },
        });
        // Box alpha_min <= alpha <= 1.
        cons.push(ConstraintFn::Affine { terms: vec![(idx_alpha(j), -1.0)], rhs: -spec.alpha_min });
        cons.push(ConstraintFn::Affine { terms: vec![(idx_alpha(j), 1.0)], rhs: 1.0 });
    }
    // Slack definition |q - c|^2 <= r_bs.
    {
        let cpos = spec.bs_pos;
        let dz = spec.altitude - cpos.z;
        cons.push(ConstraintFn::Quad {
            vars: (0, 1),
            center: (
                (cpos.x - spec.q_prev.x) / step_scale,
                (cpos.y - spec.q_prev.y) / step_scale,
            ),
            scale: step_scale * step_scale / spec.lin_r_bs,
            offset: dz * dz / spec.lin_r_bs,
            bound: QuadBound::Var { idx: idx_rbs, coeff: 1.0 },
        });
    }
    // Velocity ball.
    let ball = (spec.max_step / step_scale).powi(2).max(1e-12);
    cons.push(ConstraintFn::Quad {
        vars: (0, 1),
        center: (0.0, 0.0),
        scale: 1.0,
        offset: 0.0,
        bound: QuadBound::Const(ball),
    });
    // Single channel: pinned streams occupy alpha_min each.
    let pinned = (k_total - nv) as f64 * spec.alpha_min;
    cons.push(ConstraintFn::Affine {
        terms: (0..nv).map(|j| (idx_alpha(j), 1.0)).collect(),
        rhs: 1.0 - pinned,
    });

    // Scaled start point, with a tiny pull-in on alpha so constraints that
    // were active at the previous solution stay strictly feasible.
    let mut x0 = nalgebra::DVector::zeros(n);
    x0[0] = (start.q.x - spec.q_prev.x) / step_scale;
    x0[1] = (start.q.y - spec.q_prev.y) / step_scale;
    for (j, &(k, _)) in vars.iter().enumerate() {
        let a = start.alpha[k].clamp(spec.alpha_min * (1.0 + 1e-9), 1.0 - 1e-12);
        x0[idx_alpha(j)] = a * (1.0 - 1e-9);
        x0[idx_ru(j)] = start.r_user[k] / spec.lin_r_user[k];
    }
    x0[idx_rbs] = start.r_bs / spec.lin_r_bs;

    let opts = SolverOptions { gap_tol: spec.barrier_gap, ..SolverOptions::default() };
    let sol = barrier::minimize(&c, &cons, &x0, &opts)?;

    // Map back to original variables.
    let q = Vec3::new(
        spec.q_prev.x + step_scale * sol.x[0],
        spec.q_prev.y + step_scale * sol.x[1],
        spec.altitude,
    );
    let mut alpha = vec![spec.alpha_min; k_total];
    let mut r_user: Vec<f64> = spec.users.iter().map(|u| q.dist_sq(*u)).collect();
    for (j, &(k, _)) in vars.iter().enumerate() {
        alpha[k] = sol.x[idx_alpha(j)];
        r_user[k] = sol.x[idx_ru(j)] * spec.lin_r_user[k];
    }
    let r_bs = sol.x[idx_rbs] * spec.lin_r_bs;
    let objective = dot_weights(&spec.weights, &alpha);
    Ok(ScaVariables {
        q,
        alpha,
        r_user,
        r_bs,
        objective,
        kkt_residual: sol.kkt_residual,
        duality_gap: sol.duality_gap * wmax,
    })
}

fn dot_weights(w: &[f64], a: &[f64]) -> f64 {
    w.iter().zip(a).map(|(wi, ai)| wi * ai).sum()
}
