//! Cross-validates the barrier solver against an independent projected
//! gradient method with Dykstra's alternating projections, on random convex
//! instances built from the same constraint vocabulary.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use airs_aoi::sca::barrier::{minimize, ConstraintFn, QuadBound, SolverOptions};

/// Projection targets mirroring the solver's constraint types.
enum SetProj {
    Halfspace { a: DVector<f64>, b: f64 },
    Ball { vars: (usize, usize), center: (f64, f64), radius2: f64 },
    /// `scale ((x_a - c_a)^2 + (x_b - c_b)^2) + offset <= x_t`
    Epigraph { vars: (usize, usize), center: (f64, f64), scale: f64, offset: f64, t: usize },
}

impl SetProj {
    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = x.clone();
        match self {
            SetProj::Halfspace { a, b } => {
                let v = a.dot(x) - b;
                if v > 0.0 {
                    let nn = a.dot(a);
                    y -= a * (v / nn);
                }
            }
            SetProj::Ball { vars, center, radius2 } => {
                let dx = x[vars.0] - center.0;
                let dy = x[vars.1] - center.1;
                let d2 = dx * dx + dy * dy;
                if d2 > *radius2 {
                    let s = (radius2 / d2).sqrt();
                    y[vars.0] = center.0 + dx * s;
                    y[vars.1] = center.1 + dy * s;
                }
            }
            SetProj::Epigraph { vars, center, scale, offset, t } => {
                let dx = x[vars.0] - center.0;
                let dy = x[vars.1] - center.1;
                let r = (dx * dx + dy * dy).sqrt();
                let tv = x[*t];
                if scale * r * r + offset <= tv {
                    return y;
                }
                // Projection onto the epigraph of t = s r'^2 + o: find the
                // closest parabola point by bisection on its radius.
                let s = *scale;
                let o = *offset;
                // Minimize (r' - r)^2 + (s r'^2 + o - tv)^2 over r' >= 0;
                // stationarity: r' - r + 2 s r' (s r'^2 + o - tv) = 0.
                let f = |rp: f64| rp - r + 2.0 * s * rp * (s * rp * rp + o - tv);
                let (mut lo, mut hi) = (0.0, r.max(((tv - o).max(0.0) / s).sqrt()) + 1.0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if f(mid) > 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let rp = 0.5 * (lo + hi);
                let (ux, uy) = if r > 1e-15 { (dx / r, dy / r) } else { (1.0, 0.0) };
                y[vars.0] = center.0 + ux * rp;
                y[vars.1] = center.1 + uy * rp;
                y[*t] = s * rp * rp + o;
            }
        }
        y
    }
}

/// Dykstra's algorithm for projecting onto an intersection of convex sets.
fn project_intersection(sets: &[SetProj], x: &DVector<f64>, sweeps: usize) -> DVector<f64> {
    let mut y = x.clone();
    let mut incr = vec![DVector::zeros(x.len()); sets.len()];
    for _ in 0..sweeps {
        for (s, inc) in sets.iter().zip(incr.iter_mut()) {
            let z = &y + &*inc;
            let p = s.project(&z);
            *inc = z - &p;
            y = p;
        }
    }
    y
}

fn projected_gradient(
    c: &DVector<f64>,
    sets: &[SetProj],
    x0: &DVector<f64>,
    iters: usize,
    eta: f64,
) -> DVector<f64> {
    let mut x = project_intersection(sets, x0, 50);
    for _ in 0..iters {
        let cand = &x - c * eta;
        x = project_intersection(sets, &cand, 40);
    }
    x
}

struct Instance {
    c: DVector<f64>,
    cons: Vec<ConstraintFn>,
    sets: Vec<SetProj>,
    x0: DVector<f64>,
}

/// Random instance with the origin strictly interior: a box, halfspaces, a
/// ball over two coordinates, and optionally an epigraph bound driving one
/// extra variable that appears in the objective.
fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n_base = rng.gen_range(2..=4);
    let with_epi = rng.gen_bool(0.5);
    let n = n_base + with_epi as usize;
    let mut c = DVector::zeros(n);
    for i in 0..n_base {
        c[i] = rng.gen_range(-1.0..1.0);
    }
    let mut cons = Vec::new();
    let mut sets = Vec::new();

    for i in 0..n_base {
        cons.push(ConstraintFn::Affine { terms: vec![(i, 1.0)], rhs: 1.0 });
        cons.push(ConstraintFn::Affine { terms: vec![(i, -1.0)], rhs: 1.0 });
        let mut lo = DVector::zeros(n);
        lo[i] = 1.0;
        sets.push(SetProj::Halfspace { a: lo.clone(), b: 1.0 });
        lo[i] = -1.0;
        sets.push(SetProj::Halfspace { a: lo, b: 1.0 });
    }
    for _ in 0..2 {
        let mut a = DVector::zeros(n);
        for i in 0..n_base {
            a[i] = rng.gen_range(-1.0..1.0);
        }
        let b = rng.gen_range(0.2..1.0);
        cons.push(ConstraintFn::Affine {
            terms: (0..n_base).map(|i| (i, a[i])).collect(),
            rhs: b,
        });
        sets.push(SetProj::Halfspace { a, b });
    }
    {
        let center: (f64, f64) = (rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
        let r2 = {
            let min_r = (center.0 * center.0 + center.1 * center.1).sqrt() + 0.3;
            let r = rng.gen_range(min_r..min_r + 1.0);
            r * r
        };
        cons.push(ConstraintFn::Quad {
            vars: (0, 1),
            center,
            scale: 1.0,
            offset: 0.0,
            bound: QuadBound::Const(r2),
        });
        sets.push(SetProj::Ball { vars: (0, 1), center, radius2: r2 });
    }
    let mut x0 = DVector::zeros(n);
    if with_epi {
        let t = n - 1;
        c[t] = rng.gen_range(0.2..1.0);
        let center = (rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2));
        let scale = rng.gen_range(0.5..2.0);
        let offset = rng.gen_range(-0.2..0.2);
        cons.push(ConstraintFn::Quad {
            vars: (0, 1),
            center,
            scale,
            offset,
            bound: QuadBound::Var { idx: t, coeff: 1.0 },
        });
        sets.push(SetProj::Epigraph { vars: (0, 1), center, scale, offset, t });
        let d2 = center.0 * center.0 + center.1 * center.1;
        x0[t] = scale * d2 + offset + 1.0;
    }
    Instance { c, cons, sets, x0 }
}

#[test]
fn barrier_matches_projected_gradient_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 50 {
        let inst = random_instance(&mut rng);
        if inst.cons.iter().any(|g| g.value(&inst.x0) >= -1e-9) {
            continue;
        }
        let sol = minimize(&inst.c, &inst.cons, &inst.x0, &SolverOptions::default())
            .expect("barrier solve");
        let reference = projected_gradient(&inst.c, &inst.sets, &inst.x0, 4000, 0.05);
        let obj_ref = inst.c.dot(&reference);
        let scale = obj_ref.abs().max(1.0);
        assert!(
            sol.objective <= obj_ref + 1e-5 * scale,
            "instance {checked}: barrier {} worse than reference {}",
            sol.objective,
            obj_ref
        );
        // The reference point is feasible up to projection tolerance, so the
        // barrier optimum cannot be much better either unless the reference
        // stalled; allow a looser band on that side.
        assert!(
            sol.objective >= obj_ref - 2e-4 * scale,
            "instance {checked}: reference {} worse than barrier {} beyond tolerance",
            obj_ref,
            sol.objective
        );
        // Barrier iterate satisfies every constraint.
        for (i, g) in inst.cons.iter().enumerate() {
            assert!(g.value(&sol.x) <= 1e-8, "constraint {i} violated: {}", g.value(&sol.x));
        }
        assert!(sol.kkt_residual < 1e-3, "kkt residual {}", sol.kkt_residual);
        checked += 1;
    }
}
