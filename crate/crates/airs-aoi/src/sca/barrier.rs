//! Small dense log-barrier interior-point solver for the per-slot convex
//! subproblem: linear objective, affine inequality constraints, and convex
//! quadratic constraints of the form
//! `scale * ((x_a - c_a)^2 + (x_b - c_b)^2) + offset <= rhs`,
//! where the right-hand side is either a constant or a linear term in one
//! variable.
//!
//! Barrier stages decrease the duality gap geometrically; each stage is
//! centered with damped Newton steps and a feasibility-preserving
//! backtracking line search.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub enum QuadBound {
    Const(f64),
    /// `<= coeff * x_idx`
    Var { idx: usize, coeff: f64 },
}

/// One convex inequality constraint `g(x) <= 0`.
#[derive(Debug, Clone)]
pub enum ConstraintFn {
    /// `sum coeff_i x_i - rhs <= 0`
    Affine { terms: Vec<(usize, f64)>, rhs: f64 },
    /// `scale ((x_a - c_a)^2 + (x_b - c_b)^2) + offset - bound <= 0`
    Quad {
        vars: (usize, usize),
        center: (f64, f64),
        scale: f64,
        offset: f64,
        bound: QuadBound,
    },
}

impl ConstraintFn {
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            ConstraintFn::Affine { terms, rhs } => {
                terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>() - rhs
            }
            ConstraintFn::Quad { vars, center, scale, offset, bound } => {
                let da = x[vars.0] - center.0;
                let db = x[vars.1] - center.1;
                let b = match bound {
                    QuadBound::Const(v) => *v,
                    QuadBound::Var { idx, coeff } => coeff * x[*idx],
                };
                scale * (da * da + db * db) + offset - b
            }
        }
    }

    fn add_gradient(&self, x: &DVector<f64>, weight: f64, grad: &mut DVector<f64>) {
        match self {
            ConstraintFn::Affine { terms, .. } => {
                for &(i, c) in terms {
                    grad[i] += weight * c;
                }
            }
            ConstraintFn::Quad { vars, center, scale, bound, .. } => {
                grad[vars.0] += weight * 2.0 * scale * (x[vars.0] - center.0);
                grad[vars.1] += weight * 2.0 * scale * (x[vars.1] - center.1);
                if let QuadBound::Var { idx, coeff } = bound {
                    grad[*idx] -= weight * coeff;
                }
            }
        }
    }

    fn gradient(&self, x: &DVector<f64>, n: usize) -> DVector<f64> {
        let mut g = DVector::zeros(n);
        self.add_gradient(x, 1.0, &mut g);
        g
    }

    /// Adds `weight * hess(g)` (only quadratics contribute).
    fn add_hessian(&self, weight: f64, hess: &mut DMatrix<f64>) {
        if let ConstraintFn::Quad { vars, scale, .. } = self {
            hess[(vars.0, vars.0)] += weight * 2.0 * scale;
            hess[(vars.1, vars.1)] += weight * 2.0 * scale;
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Target duality gap `m / t`.
    pub gap_tol: f64,
    pub t_init: f64,
    pub t_scale: f64,
    /// Newton decrement threshold (lambda^2 / 2).
    pub newton_tol: f64,
    pub max_newton: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-9,
            t_init: 1.0,
            t_scale: 20.0,
            newton_tol: 1e-12,
            max_newton: 120,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BarrierSolution {
    pub x: DVector<f64>,
    /// Objective `c^T x` (the minimized linear form).
    pub objective: f64,
    pub duality_gap: f64,
    /// Infinity norm of the stationarity residual with barrier multipliers,
    /// relative to the objective gradient scale.
    pub kkt_residual: f64,
    pub newton_iters: usize,
}

/// Minimizes `c^T x` over `g_i(x) <= 0` from a strictly feasible `x0`.
pub fn minimize(
    c: &DVector<f64>,
    constraints: &[ConstraintFn],
    x0: &DVector<f64>,
    opts: &SolverOptions,
) -> Result<BarrierSolution> {
    let n = c.len();
    let m = constraints.len();
    for (i, con) in constraints.iter().enumerate() {
        let v = con.value(x0);
        if !(v < 0.0) {
            return Err(Error::Infeasible(format!(
                "start point violates constraint {i}: g = {v}"
            )));
        }
    }

    let mut x = x0.clone();
    let mut t = opts.t_init;
    let mut total_newton = 0usize;

    loop {
        // Center for the current barrier parameter.
        for _ in 0..opts.max_newton {
            total_newton += 1;
            let mut grad = c * t;
            let mut hess = DMatrix::zeros(n, n);
            for con in constraints {
                let g = con.value(&x);
                let inv = -1.0 / g; // g < 0
                con.add_gradient(&x, inv, &mut grad);
                con.add_hessian(inv, &mut hess);
                let cg = con.gradient(&x, n);
                // rank-one term grad(g) grad(g)^T / g^2
                hess.ger(inv * inv, &cg, &cg, 1.0);
            }

            let step = solve_spd(&hess, &(-&grad))?;
            let decrement = grad.dot(&(-&step));
            if decrement <= 0.0 || 0.5 * decrement < opts.newton_tol {
                break;
            }

            // Backtrack to strict feasibility, then Armijo on the barrier
            // objective.
            let phi = |y: &DVector<f64>| -> Option<f64> {
                let mut v = t * c.dot(y);
                for con in constraints {
                    let g = con.value(y);
                    if !(g < 0.0) {
                        return None;
                    }
                    v -= (-g).ln();
                }
                Some(v)
            };
            let phi0 = phi(&x).expect("current iterate must be feasible");
            let slope = grad.dot(&step);
            let mut s = 1.0;
            let mut moved = false;
            for _ in 0..70 {
                let cand = &x + &step * s;
                if let Some(v) = phi(&cand) {
                    if v <= phi0 + 0.01 * s * slope {
                        x = cand;
                        moved = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            if !moved {
                break;
            }
        }

        if m as f64 / t <= opts.gap_tol {
            break;
        }
        t *= opts.t_scale;
    }

    // Barrier multipliers lambda_i = 1 / (t * (-g_i)).
    let mut resid = c.clone();
    for con in constraints {
        let g = con.value(&x);
        con.add_gradient(&x, 1.0 / (t * (-g)), &mut resid);
    }
    let scale = c.amax().max(1.0);
    Ok(BarrierSolution {
        objective: c.dot(&x),
        duality_gap: m as f64 / t,
        kkt_residual: resid.amax() / scale,
        newton_iters: total_newton,
        x,
    })
}

/// Cholesky solve with a ridge fallback for near-singular Hessians.
fn solve_spd(h: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(ch) = h.clone().cholesky() {
        return Ok(ch.solve(b));
    }
    let n = h.nrows();
    let scale = h.diagonal().amax().max(1.0);
    let mut ridge = 1e-12 * scale;
    for _ in 0..20 {
        let mut hr = h.clone();
        for i in 0..n {
            hr[(i, i)] += ridge;
        }
        if let Some(ch) = hr.cholesky() {
            return Ok(ch.solve(b));
        }
        ridge *= 10.0;
    }
    Err(Error::Solver("Hessian factorization failed".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn lp_on_a_box() {
        // minimize -x0 - 2 x1 over [0,1]^2 with x0 + x1 <= 1.5
        let c = dv(&[-1.0, -2.0]);
        let cons = vec![
            ConstraintFn::Affine { terms: vec![(0, -1.0)], rhs: 0.0 },
            ConstraintFn::Affine { terms: vec![(0, 1.0)], rhs: 1.0 },
            ConstraintFn::Affine { terms: vec![(1, -1.0)], rhs: 0.0 },
            ConstraintFn::Affine { terms: vec![(1, 1.0)], rhs: 1.0 },
            ConstraintFn::Affine { terms: vec![(0, 1.0), (1, 1.0)], rhs: 1.5 },
        ];
        let sol = minimize(&c, &cons, &dv(&[0.2, 0.2]), &SolverOptions::default()).unwrap();
        assert!((sol.x[1] - 1.0).abs() < 1e-6);
        assert!((sol.x[0] - 0.5).abs() < 1e-6);
        assert!((sol.objective - (-2.5)).abs() < 1e-6);
        assert!(sol.kkt_residual < 1e-6);
    }

    #[test]
    fn linear_over_a_disk() {
        // minimize x0 over unit disk centered at origin: optimum -1.
        let c = dv(&[1.0, 0.0]);
        let cons = vec![ConstraintFn::Quad {
            vars: (0, 1),
            center: (0.0, 0.0),
            scale: 1.0,
            offset: 0.0,
            bound: QuadBound::Const(1.0),
        }];
        let sol = minimize(&c, &cons, &dv(&[0.0, 0.0]), &SolverOptions::default()).unwrap();
        assert!((sol.x[0] + 1.0).abs() < 1e-6);
        assert!(sol.x[1].abs() < 1e-5);
    }

    #[test]
    fn variable_bound_quadratic() {
        // minimize x2 subject to x0^2 + x1^2 <= x2 and x0, x1 pinned to a
        // point by affine constraints: optimum x2 = 0.5.
        let c = dv(&[0.0, 0.0, 1.0]);
        let cons = vec![
            ConstraintFn::Quad {
                vars: (0, 1),
                center: (0.0, 0.0),
                scale: 1.0,
                offset: 0.0,
                bound: QuadBound::Var { idx: 2, coeff: 1.0 },
            },
            ConstraintFn::Affine { terms: vec![(0, 1.0)], rhs: 0.5 },
            ConstraintFn::Affine { terms: vec![(0, -1.0)], rhs: -0.5 + 1e-9 },
            ConstraintFn::Affine { terms: vec![(1, 1.0)], rhs: 0.5 },
            ConstraintFn::Affine { terms: vec![(1, -1.0)], rhs: -0.5 + 1e-9 },
        ];
        let sol = minimize(&c, &cons, &dv(&[0.5 - 1e-10, 0.5 - 1e-10, 1.0]), &SolverOptions::default())
            .unwrap();
        assert!((sol.x[2] - 0.5).abs() < 1e-5, "x2 = {}", sol.x[2]);
    }

    #[test]
    fn infeasible_start_rejected() {
        let c = dv(&[1.0]);
        let cons = vec![ConstraintFn::Affine { terms: vec![(0, 1.0)], rhs: 0.0 }];
        assert!(minimize(&c, &cons, &dv(&[1.0]), &SolverOptions::default()).is_err());
    }
}
