//! Reference computations used to check the solver.
//!
//! Apart from the `StepFunctional` trait (for finite differencing) these share
//! only the geometry module with the Morse flow: the heat oracle assembles its
//! own stencil and solves it densely, and the porous-medium reference solves
//! the Euler-Lagrange equation by Newton's method instead of minimizing.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::flow::{FlowConfig, GridSpec, Variant};
use crate::functionals::{cbeta_from_beta, signed_pow, StepFunctional};
use crate::geometry::{Field, Grid, PlanarGrid};

/// `e^{2u(t)} = 1 - 2t` for the un-normalized flow from `u_0 = 0`.
pub fn exact_unnorm_factor(t: f64) -> Result<f64> {
    if !(t < 0.5) {
        return Err(Error::OutOfRange(format!("t = {t} is past the extinction time 1/2")));
    }
    Ok(1.0 - 2.0 * t)
}

/// `⨍e^{2u(t)} = e^{2u_0} + 2(1 - λ)t` for the regularized flow from a constant.
pub fn exact_reg_constant_factor(u0: f64, lambda: f64, t: f64) -> f64 {
    (2.0 * u0).exp() + 2.0 * (1.0 - lambda) * t
}

/// Central-difference gradient in the functional's inner product.
///
/// Node `i` is probed along the admissible direction `d_i = P e_i`; since
/// `<g, P e_i> = w_i g_i` for an admissible gradient `g`, the difference
/// quotient divided by `w_i` recovers `g_i`. Nodes with zero weight get 0.
pub fn fd_gradient<F: StepFunctional + ?Sized>(f: &F, u: &Field, eps: f64) -> Result<Field> {
    if !(eps > 0.0) {
        return Err(Error::param("eps", format!("{eps} must be positive")));
    }
    f.check_field(u)?;
    let base = u.values();
    let w = f.weights();
    let n = base.len();
    let mut out = vec![0.0; n];
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    for i in 0..n {
        if w[i] == 0.0 {
            continue;
        }
        let mut d = vec![0.0; n];
        d[i] = 1.0;
        f.project(&mut d);
        for k in 0..n {
            plus[k] = base[k] + eps * d[k];
            minus[k] = base[k] - eps * d[k];
        }
        out[i] = (f.value(&plus) - f.value(&minus)) / (2.0 * eps * w[i]);
    }
    Ok(Field::from_raw(u.grid_id(), out))
}

/// Implicit Euler for `∂_t v = Δv` with `v = v_0` on the boundary, solved by
/// dense LU on a five-point stencil assembled here. Returns `v_0, …, v_N`.
pub fn implicit_heat_reference(grid: &PlanarGrid, v0: &Field, h: f64, steps: usize) -> Result<Vec<Field>> {
    if !(h > 0.0) {
        return Err(Error::param("h", format!("time step {h} must be positive")));
    }
    if v0.grid_id() != grid.id() {
        return Err(Error::GridMismatch { expected: grid.len(), found: v0.len() });
    }
    let (nx, ny) = (grid.n_x(), grid.n_y());
    let dx = grid.lx() / (nx - 1) as f64;
    let dy = grid.ly() / (ny - 1) as f64;
    let (mx, my) = (nx - 2, ny - 2);
    let m = mx * my;
    let idx = |a: usize, b: usize| (a - 1) * my + (b - 1);
    let (cx, cy) = (1.0 / (dx * dx), 1.0 / (dy * dy));

    let mut a = DMatrix::<f64>::zeros(m, m);
    for ix in 1..=mx {
        for iy in 1..=my {
            let r = idx(ix, iy);
            a[(r, r)] = 1.0 / h + 2.0 * cx + 2.0 * cy;
            for (jx, jy, c) in [(ix - 1, iy, cx), (ix + 1, iy, cx), (ix, iy - 1, cy), (ix, iy + 1, cy)] {
                if jx >= 1 && jx <= mx && jy >= 1 && jy <= my {
                    a[(r, idx(jx, jy))] = -c;
                }
            }
        }
    }
    let lu = a.lu();

    let v0v = v0.values();
    let node = |ix: usize, iy: usize| ix * ny + iy;
    // boundary contribution, constant in time
    let mut bc = DVector::<f64>::zeros(m);
    for ix in 1..=mx {
        for iy in 1..=my {
            let r = idx(ix, iy);
            for (jx, jy, c) in [(ix - 1, iy, cx), (ix + 1, iy, cx), (ix, iy - 1, cy), (ix, iy + 1, cy)] {
                if jx == 0 || jx == nx - 1 || jy == 0 || jy == ny - 1 {
                    bc[r] += c * v0v[node(jx, jy)];
                }
            }
        }
    }

    let mut out = vec![v0.clone()];
    let mut cur = v0v.to_vec();
    for _ in 0..steps {
        let mut rhs = bc.clone();
        for ix in 1..=mx {
            for iy in 1..=my {
                rhs[idx(ix, iy)] += cur[node(ix, iy)] / h;
            }
        }
        let sol = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Reference("singular heat matrix".into()))?;
        for ix in 1..=mx {
            for iy in 1..=my {
                cur[node(ix, iy)] = sol[idx(ix, iy)];
            }
        }
        out.push(Field::from_values(grid, cur.clone())?);
    }
    Ok(out)
}

/// Fine-grid solution of a porous-medium run, sampled on the coarse grid.
#[derive(Debug, Clone)]
pub struct ReferenceTrajectory {
    pub coarse: PlanarGrid,
    pub fine: PlanarGrid,
    pub refine: usize,
    /// `t_0, …, t_N` of the coarse run.
    pub times: Vec<f64>,
    /// Fine solution restricted to the coarse nodes at the coarse times.
    pub fields: Vec<Field>,
    /// Newton iterations per fine step.
    pub newton_iterations: Vec<usize>,
}

const NEWTON_MAX_ITERS: usize = 100;
const CG_MAX_ITERS: usize = 2000;

/// Implicit reference for a porous-medium configuration.
///
/// The grid spacing and the time step are divided by `refine`. Each fine step
/// solves the Euler-Lagrange equation
/// `(βC_β/h)(σ(v) - σ(v_{n-1}))|v|^{β-1} = Δv` by damped Newton; the
/// linearized systems are solved by conjugate gradients preconditioned with
/// the grid's shifted fast solver. The initial field is the config's initial
/// data evaluated on the fine grid.
pub fn pme_reference(config: &FlowConfig, refine: usize) -> Result<ReferenceTrajectory> {
    let beta = match config.variant {
        Variant::Pme { beta } => beta,
        _ => return Err(Error::param("variant", "the reference solver handles the porous medium flow")),
    };
    let GridSpec::Planar { lx, ly, n_x, n_y } = config.grid else {
        return Err(Error::param("grid", "the porous medium flow runs on the planar grid"));
    };
    if refine == 0 {
        return Err(Error::param("refine", "must be positive"));
    }
    config.validate()?;
    let coarse = PlanarGrid::new(lx, ly, n_x, n_y)?;
    let fine = PlanarGrid::new(lx, ly, (n_x - 1) * refine + 1, (n_y - 1) * refine + 1)?;
    let fine_any = crate::geometry::AnyGrid::Planar(fine.clone());
    let v0 = config.initial.realize(&fine_any)?;
    let coarse_any = crate::geometry::AnyGrid::Planar(coarse.clone());
    let coarse_v0 = config.initial.realize(&coarse_any)?;

    let h = config.h() / refine as f64;
    let coupling = beta * cbeta_from_beta(beta)? / h;
    let restrict = |v: &[f64]| -> Result<Field> {
        let fy = fine.n_y();
        let vals = (0..n_x)
            .flat_map(|ix| (0..n_y).map(move |iy| (ix, iy)))
            .map(|(ix, iy)| v[ix * refine * fy + iy * refine])
            .collect();
        Field::from_values(&coarse, vals)
    };

    let mut times = vec![0.0];
    let mut fields = vec![coarse_v0];
    let mut newton_iterations = Vec::new();
    let mut v = v0.values().to_vec();
    for n in 1..=config.steps * refine {
        let prev_pow: Vec<f64> = v.iter().map(|&x| signed_pow(x, beta)).collect();
        let (next, iters) = newton_step(&fine, beta, coupling, &prev_pow, &v)
            .map_err(|e| Error::Reference(format!("fine step {n}: {e}")))?;
        v = next;
        newton_iterations.push(iters);
        if n % refine == 0 {
            times.push((n / refine) as f64 * config.h());
            fields.push(restrict(&v)?);
        }
    }
    Ok(ReferenceTrajectory { coarse, fine, refine, times, fields, newton_iterations })
}

fn residual(grid: &PlanarGrid, beta: f64, coupling: f64, prev_pow: &[f64], v: &[f64]) -> Vec<f64> {
    let lap = grid.laplacian(v);
    (0..v.len())
        .map(|k| {
            if grid.is_boundary(k) {
                0.0
            } else {
                coupling * (signed_pow(v[k], beta) - prev_pow[k]) * v[k].abs().powf(beta - 1.0) - lap[k]
            }
        })
        .collect()
}

// Diagonal of the linearization of the time term; negative where a node
// decays fast.
fn time_derivative(beta: f64, coupling: f64, prev_pow: f64, v: f64) -> f64 {
    let a = v.abs();
    let mut d = beta * a.powf(2.0 * beta - 2.0);
    if beta != 1.0 && a > 0.0 {
        d += (beta - 1.0) * (signed_pow(v, beta) - prev_pow) * a.powf(beta - 2.0) * v.signum();
    }
    coupling * d
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

// The step energy whose critical points solve the residual equation, used as
// the Newton merit function. `v = 0` solves the equation too, but it is not a
// minimizer once the previous field is nonzero.
fn step_energy(grid: &PlanarGrid, beta: f64, coupling: f64, prev_pow: &[f64], v: &[f64]) -> f64 {
    let kin: f64 = v
        .iter()
        .zip(prev_pow)
        .zip(grid.quad_weights())
        .map(|((&x, &p), &w)| {
            let d = signed_pow(x, beta) - p;
            w * d * d
        })
        .sum();
    coupling / (2.0 * beta) * kin + 0.5 * grid.dirichlet_form(v, v)
}

fn newton_step(grid: &PlanarGrid, beta: f64, coupling: f64, prev_pow: &[f64], start: &[f64]) -> std::result::Result<(Vec<f64>, usize), String> {
    let w = grid.dx() * grid.dy();
    let mut v = start.to_vec();
    let mut r = residual(grid, beta, coupling, prev_pow, &v);
    let mut rnorm = max_abs(&r);
    let mut energy = step_energy(grid, beta, coupling, prev_pow, &v);
    let lap_scale = 4.0 * (1.0 / (grid.dx() * grid.dx()) + 1.0 / (grid.dy() * grid.dy()));
    let vmax = max_abs(&v);
    let tol = 1e-13 * (1.0 + vmax * (lap_scale + coupling * vmax.powf(2.0 * beta - 2.0)));
    let lowest = |d: f64, l: f64| (2.0 * (PI * d / (2.0 * l)).sin() / d).powi(2);
    // half the smallest eigenvalue of -Δ keeps the floored matrix positive definite
    let floor = -0.5 * (lowest(grid.dx(), grid.lx()) + lowest(grid.dy(), grid.ly()));

    for iter in 0..NEWTON_MAX_ITERS {
        if rnorm <= tol {
            return Ok((v, iter));
        }
        let diag: Vec<f64> = v
            .iter()
            .zip(prev_pow)
            .enumerate()
            .map(|(k, (&x, &p))| if grid.is_boundary(k) { 0.0 } else { time_derivative(beta, coupling, p, x) })
            .collect();
        let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
        let delta = match pcg(grid, &diag, &rhs) {
            Ok(Some(d)) => d,
            Ok(None) => {
                let floored: Vec<f64> = diag.iter().map(|d| d.max(floor)).collect();
                pcg(grid, &floored, &rhs)?.ok_or("floored Newton matrix is not positive definite")?
            }
            Err(e) => return Err(e),
        };
        let slope: f64 = w * r.iter().zip(&delta).map(|(a, b)| a * b).sum::<f64>();
        if !(slope < 0.0) {
            return Err(format!("Newton direction is not a descent direction (residual {rnorm:e})"));
        }
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = v.iter().zip(&delta).map(|(a, b)| a + t * b).collect();
            let e = step_energy(grid, beta, coupling, prev_pow, &trial);
            let rt = residual(grid, beta, coupling, prev_pow, &trial);
            let n = max_abs(&rt);
            let armijo = e <= energy + 1e-4 * t * slope;
            // energy differences drown in roundoff near the solution
            let flat = (e - energy).abs() <= 1e-14 * energy.abs().max(1e-300) && n < rnorm;
            if armijo || flat {
                v = trial;
                r = rt;
                rnorm = n;
                energy = e;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(format!("Newton line search failed at residual {rnorm:e}"));
            }
        }
    }
    Err(format!("Newton did not converge in {NEWTON_MAX_ITERS} iterations, residual {rnorm:e}"))
}

// Solve `(diag - Δ) x = b` on interior nodes; `None` when a direction of
// nonpositive curvature shows the matrix is not positive definite.
fn pcg(grid: &PlanarGrid, diag: &[f64], b: &[f64]) -> std::result::Result<Option<Vec<f64>>, String> {
    let interior = grid.interior_count().max(1) as f64;
    let shift = diag.iter().map(|d| d.max(0.0)).sum::<f64>() / interior;
    let apply = |x: &[f64]| -> Vec<f64> {
        let lap = grid.laplacian(x);
        (0..x.len()).map(|k| if grid.is_boundary(k) { 0.0 } else { diag[k] * x[k] - lap[k] }).collect()
    };
    let dot = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; b.len()];
    if bnorm == 0.0 {
        return Ok(Some(x));
    }
    let mut r = b.to_vec();
    let mut z = grid.solve_shifted(shift, &r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..CG_MAX_ITERS {
        let ap = apply(&p);
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) {
            return Ok(None);
        }
        let alpha = rz / curvature;
        for k in 0..x.len() {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        if dot(&r, &r).sqrt() <= 1e-13 * bnorm {
            return Ok(Some(x));
        }
        z = grid.solve_shifted(shift, &r);
        let rz_next = dot(&r, &z);
        let gamma = rz_next / rz;
        rz = rz_next;
        for k in 0..p.len() {
            p[k] = z[k] + gamma * p[k];
        }
    }
    Err(format!("conjugate gradients did not converge in {CG_MAX_ITERS} iterations"))
}

/// `sqrt(Σ w (a - b)²)` in the quadrature of `grid`.
pub fn l2_distance<G: Grid + ?Sized>(grid: &G, a: &Field, b: &Field) -> Result<f64> {
    crate::geometry::check(grid, a)?;
    crate::geometry::check(grid, b)?;
    Ok(grid
        .quad_weights()
        .iter()
        .zip(a.values().iter().zip(b.values()))
        .map(|(w, (x, y))| w * (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::InitialData;
    use crate::minimizer::MinimizeOptions;
    use crate::geometry::{build_planar_grid, Symmetry};

    #[test]
    fn exact_factors() {
        assert_eq!(exact_unnorm_factor(0.0).unwrap(), 1.0);
        assert_eq!(exact_unnorm_factor(0.25).unwrap(), 0.5);
        assert!((exact_unnorm_factor(0.49).unwrap() - 0.02).abs() < 1e-15);
        assert!(exact_unnorm_factor(0.5).is_err());
        assert_eq!(exact_reg_constant_factor(0.0, 0.5, 0.0), 1.0);
        assert_eq!(exact_reg_constant_factor(0.0, 0.5, 1.0), 2.0);
        assert!((exact_reg_constant_factor(0.0, 0.9, 1.0) - 1.2).abs() < 1e-15);
    }

    fn pme_config(beta: f64, n: usize, steps: usize, initial: InitialData) -> FlowConfig {
        FlowConfig {
            variant: Variant::Pme { beta },
            t_end: 0.1,
            steps,
            grid: GridSpec::Planar { lx: 1.0, ly: 1.0, n_x: n, n_y: n },
            initial,
            options: MinimizeOptions::default(),
            symmetry: Symmetry::Mirror,
        }
    }

    #[test]
    fn heat_reference_keeps_harmonic_data() {
        let g = build_planar_grid(1.0, 2.0, 9, 11).unwrap();
        let v0 = Field::from_fn(&g, |x, y| 2.0 - x + 3.0 * y);
        let out = implicit_heat_reference(&g, &v0, 0.01, 5).unwrap();
        assert_eq!(out.len(), 6);
        for v in &out {
            assert!(v.max_abs_diff(&v0) < 1e-12);
        }
    }

    #[test]
    fn reference_keeps_harmonic_data() {
        let c = pme_config(2.0, 9, 3, InitialData::Linear { a: 1.0, b: 0.5, c: 0.25 });
        let r = pme_reference(&c, 2).unwrap();
        assert_eq!(r.fields.len(), 4);
        for f in &r.fields {
            assert!(f.max_abs_diff(&r.fields[0]) < 1e-12);
        }
    }

    #[test]
    fn reference_at_beta_one_is_the_heat_step() {
        let c = pme_config(1.0, 9, 4, InitialData::Bump { amplitude: 1.0 });
        let r = pme_reference(&c, 1).unwrap();
        let heat = implicit_heat_reference(&r.coarse, &r.fields[0], c.h(), 4).unwrap();
        for (a, b) in r.fields.iter().zip(&heat) {
            assert!(a.max_abs_diff(b) < 1e-10, "{}", a.max_abs_diff(b));
        }
    }

    #[test]
    fn reference_restricts_to_coarse_nodes() {
        let c = pme_config(2.0, 5, 2, InitialData::Bump { amplitude: 1.0 });
        let r = pme_reference(&c, 2).unwrap();
        assert_eq!(r.fine.n_x(), 9);
        assert_eq!(r.newton_iterations.len(), 4);
        assert_eq!(r.times, vec![0.0, 0.05, 0.1]);
        let v = &r.fields[2];
        assert!(v.max_abs() > 0.0 && v.max_abs() < 1.0);
    }

    #[test]
    fn l2_distance_of_constants() {
        let g = build_planar_grid(2.0, 1.0, 5, 5).unwrap();
        let a = Field::from_fn(&g, |_, _| 0.0);
        let b = Field::from_fn(&g, |_, _| 1.0);
        // interior nodes carry the weight
        assert!((l2_distance(&g, &a, &b).unwrap() - (9.0f64 * 0.5 * 0.25).sqrt()).abs() < 1e-14);
    }
}
