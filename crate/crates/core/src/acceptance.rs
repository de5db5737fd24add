//! The acceptance suite: each criterion runs the solver at its pinned
//! tolerance and returns a [`CriterionReport`] with the measured values.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{run_flow, FlowConfig, GridSpec, InitialData, Trajectory, Variant};
use crate::functionals::{
    PmeStepFunctional, RicciRegStepFunctional, RicciSymStepFunctional, RicciUnnormStepFunctional, StepFunctional,
};
use crate::geometry::{self, AnyGrid, Field, FootballGrid, Grid, PlanarGrid, Symmetry};
use crate::minimizer::MinimizeOptions;
use crate::oracles::{
    exact_reg_constant_factor, exact_unnorm_factor, fd_gradient, implicit_heat_reference, l2_distance, pme_reference,
};

pub const DEFAULT_SEED: u64 = 20240607;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub measured: Vec<(String, f64)>,
    pub detail: String,
    pub runtime_secs: f64,
    pub runtime_limit_secs: f64,
}

impl CriterionReport {
    /// One line: `PASS [3] ledger ... (1.2 s / 120 s) key=value ...`.
    pub fn line(&self) -> String {
        let values: Vec<String> = self.measured.iter().map(|(k, v)| format!("{k}={v:.3e}")).collect();
        let mut s = format!(
            "{} [{}] {} ({:.2} s / {} s) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.runtime_secs,
            self.runtime_limit_secs,
            values.join(" ")
        );
        if !self.detail.is_empty() {
            s.push_str(" | ");
            s.push_str(&self.detail);
        }
        s
    }
}

struct Builder {
    id: usize,
    name: &'static str,
    limit: f64,
    start: Instant,
    measured: Vec<(String, f64)>,
    checks: Vec<(String, bool)>,
}

impl Builder {
    fn new(id: usize, name: &'static str, limit: f64) -> Self {
        Self { id, name, limit, start: Instant::now(), measured: Vec::new(), checks: Vec::new() }
    }

    fn measure(&mut self, key: impl Into<String>, value: f64) -> f64 {
        self.measured.push((key.into(), value));
        value
    }

    fn check(&mut self, what: impl Into<String>, ok: bool) {
        self.checks.push((what.into(), ok));
    }

    fn finish(self, outcome: Result<()>) -> CriterionReport {
        let runtime = self.start.elapsed().as_secs_f64();
        self.finish_timed(outcome, runtime)
    }

    fn finish_timed(mut self, outcome: Result<()>, runtime: f64) -> CriterionReport {
        let mut failed: Vec<String> = self.checks.iter().filter(|(_, ok)| !ok).map(|(w, _)| w.clone()).collect();
        if let Err(e) = outcome {
            failed.push(format!("error: {e}"));
        }
        if runtime > self.limit {
            failed.push(format!("runtime {runtime:.1} s over {} s", self.limit));
        }
        self.measured.shrink_to_fit();
        CriterionReport {
            id: self.id,
            name: self.name,
            passed: failed.is_empty() && !self.checks.is_empty(),
            measured: self.measured,
            detail: failed.join("; "),
            runtime_secs: runtime,
            runtime_limit_secs: self.limit,
        }
    }
}

fn football_config(variant: Variant, t_end: f64, steps: usize, n_r: usize, n_theta: usize, initial: InitialData) -> FlowConfig {
    FlowConfig {
        variant,
        t_end,
        steps,
        grid: GridSpec::Football { alpha: 0.5, n_r, n_theta },
        initial,
        options: MinimizeOptions::default(),
        symmetry: Symmetry::Mirror,
    }
}

fn planar_config(beta: f64, t_end: f64, steps: usize, n_x: usize, n_y: usize, initial: InitialData) -> FlowConfig {
    FlowConfig {
        variant: Variant::Pme { beta },
        t_end,
        steps,
        grid: GridSpec::Planar { lx: 1.0, ly: 1.0, n_x, n_y },
        initial,
        options: MinimizeOptions::default(),
        symmetry: Symmetry::Mirror,
    }
}

/// Geometry consistency: area and base curvature converge at second order.
pub fn geometry_consistency() -> CriterionReport {
    let mut b = Builder::new(1, "geometry consistency", 1.0);
    let outcome = (|| {
        let mut area_err = Vec::new();
        let mut curv_err = Vec::new();
        for n_r in [64, 128] {
            let g = FootballGrid::new(0.5, n_r, 8)?;
            let one = Field::constant(&g, 1.0);
            let area = geometry::integrate(&g, &one)?;
            area_err.push((area - 2.0 * std::f64::consts::PI).abs() / (2.0 * std::f64::consts::PI));
            let r = geometry::scalar_curvature(&g, &Field::zeros(&g))?;
            curv_err.push(r.values().iter().fold(0.0f64, |m, x| m.max((x - 2.0).abs())));
        }
        let area_ratio = area_err[0] / area_err[1];
        let curv_ratio = curv_err[0] / curv_err[1];
        b.measure("area_rel_err_128", area_err[1]);
        b.measure("area_ratio", area_ratio);
        b.measure("curvature_err_128", curv_err[1]);
        b.measure("curvature_ratio", curv_ratio);
        b.check("area error", area_err[1] <= 1e-3);
        b.check("area ratio", (3.5..=4.5).contains(&area_ratio));
        b.check("curvature error", curv_err[1] <= 1e-2);
        b.check("curvature ratio", (3.5..=4.5).contains(&curv_ratio));
        Ok(())
    })();
    b.finish(outcome)
}

fn random_nodal(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

fn relative_gradient_error<F: StepFunctional + ?Sized>(f: &F, u: &Field) -> Result<f64> {
    let g = f.grad(u)?;
    let fd = fd_gradient(f, u, 1e-5)?;
    let scale = g.max_abs().max(1e-300);
    Ok(g.max_abs_diff(&fd) / scale)
}

fn sym_field(g: &FootballGrid, values: Vec<f64>) -> Result<Field> {
    let f = Field::from_values(g, values)?;
    geometry::mean_zero_project(g, &geometry::symmetrize(g, &f)?)
}

/// Gradient fidelity: analytic gradients against central differences.
pub fn gradient_fidelity(seed: u64) -> CriterionReport {
    let mut b = Builder::new(2, "gradient fidelity", 5.0);
    let outcome = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let planar = PlanarGrid::new(1.0, 1.0, 8, 8)?;
        let football = FootballGrid::new(0.5, 16, 8)?;
        let h = 0.05;
        let mut worst = [0.0f64; 4];
        for _ in 0..10 {
            // positive fields keep |v|^{β-1} smooth under the ε-probe
            let prev = Field::from_values(&planar, random_nodal(&mut rng, planar.len(), 0.2, 1.5))?;
            let mut v = random_nodal(&mut rng, planar.len(), 0.2, 1.5);
            for (k, x) in v.iter_mut().enumerate() {
                if planar.is_boundary(k) {
                    *x = prev.values()[k];
                }
            }
            let v = Field::from_values(&planar, v)?;
            let f = PmeStepFunctional::new(&planar, h, 2.0, &prev, &prev)?;
            worst[0] = worst[0].max(relative_gradient_error(&f, &v)?);

            let n = football.len();
            let prev = sym_field(&football, random_nodal(&mut rng, n, -0.5, 0.5))?;
            let u = sym_field(&football, random_nodal(&mut rng, n, -0.5, 0.5))?;
            let f = RicciSymStepFunctional::new(&football, h, &prev)?;
            worst[1] = worst[1].max(relative_gradient_error(&f, &u)?);

            let prev = Field::from_values(&football, random_nodal(&mut rng, n, -0.5, 0.5))?;
            let u = Field::from_values(&football, random_nodal(&mut rng, n, -0.5, 0.5))?;
            let lambda = rng.gen_range(0.1..0.9);
            let f = RicciRegStepFunctional::new(&football, h, lambda, &prev)?;
            worst[2] = worst[2].max(relative_gradient_error(&f, &u)?);
            let f = RicciUnnormStepFunctional::new(&football, h, &prev)?;
            worst[3] = worst[3].max(relative_gradient_error(&f, &u)?);
        }
        for (name, w) in ["pme", "ricci_sym", "ricci_reg", "ricci_unnorm"].iter().zip(worst) {
            b.measure(format!("{name}_rel_err"), w);
            b.check(format!("{name} gradient"), w <= 1e-6);
        }
        Ok(())
    })();
    b.finish(outcome)
}

/// The standard battery of flow runs shared by the ledger and Moser criteria.
pub struct Battery {
    pub runs: Vec<(String, Result<Trajectory>)>,
    pub runtime_secs: f64,
}

pub fn standard_battery(seed: u64) -> Battery {
    let start = Instant::now();
    let sym_init = InitialData::RandomSymmetric { amplitude: 0.5, seed };
    let mut configs = vec![
        ("pme beta=2".to_string(), planar_config(2.0, 0.1, 50, 32, 16, InitialData::Bump { amplitude: 1.0 })),
        ("ricci-sym".to_string(), football_config(Variant::RicciSym, 0.5, 50, 32, 16, sym_init.clone())),
    ];
    for lambda in [0.25, 0.5, 0.75] {
        configs.push((
            format!("ricci-reg lambda={lambda}"),
            football_config(Variant::RicciReg { lambda }, 0.5, 50, 32, 16, sym_init.clone()),
        ));
    }
    let runs = configs.into_iter().map(|(name, c)| (name, run_flow(&c))).collect();
    Battery { runs, runtime_secs: start.elapsed().as_secs_f64() }
}

/// Per-step energy ledger along the battery.
pub fn energy_ledger(battery: &Battery) -> CriterionReport {
    let mut b = Builder::new(3, "energy ledger", 120.0);
    let mut outcome = Ok(());
    for (name, run) in &battery.runs {
        match run {
            Ok(traj) => {
                let worst = traj.records.iter().map(|r| r.ledger_margin).fold(f64::INFINITY, f64::min);
                b.measure(format!("{name}: min_margin"), worst);
                b.check(format!("{name} ledger"), traj.ledger_ok && traj.is_complete());
                let h = traj.h();
                let kin: f64 = traj.records.iter().map(|r| r.kinetic).sum::<f64>() * h;
                let e0 = traj.records[0].potential;
                let emin = traj.records.iter().map(|r| r.potential).fold(f64::INFINITY, f64::min);
                let n = traj.records.len() as f64;
                b.check(format!("{name} summability"), kin <= e0 - emin + n * traj.ledger_slack);
                if let Variant::Pme { .. } = traj.config.variant {
                    let nonincreasing = traj
                        .records
                        .windows(2)
                        .all(|w| w[1].potential <= w[0].potential + traj.ledger_slack);
                    b.check(format!("{name} Dirichlet energy nonincreasing"), nonincreasing);
                }
            }
            Err(e) => {
                outcome = Err(Error::Reference(format!("{name}: {e}")));
            }
        }
    }
    b.finish_timed(outcome, battery.runtime_secs)
}

/// Moser diagnostics along the symmetric-data battery runs.
pub fn moser_diagnostics(battery: &Battery) -> CriterionReport {
    let mut b = Builder::new(9, "Moser diagnostics", f64::INFINITY);
    let mut outcome = Ok(());
    for (name, run) in &battery.runs {
        match run {
            Ok(traj) if traj.config.variant.is_ricci() => {
                let all_finite = traj.records.iter().all(|r| r.moser_half.is_some_and(f64::is_finite));
                b.check(format!("{name} finite"), all_finite);
                if let Some(m) = traj.moser_half_max() {
                    b.measure(format!("{name}: max_M_half"), m);
                }
            }
            Ok(_) => {}
            Err(e) => outcome = Err(Error::Reference(format!("{name}: {e}"))),
        }
    }
    b.finish_timed(outcome, 0.0)
}

fn unnorm_error(steps: usize) -> Result<f64> {
    let traj = run_flow(&football_config(Variant::RicciUnnorm, 0.4, steps, 32, 8, InitialData::Zero))?;
    let mut err = 0.0f64;
    for r in &traj.records {
        let exact = exact_unnorm_factor(r.t)?;
        for &u in r.field.values() {
            err = err.max(((2.0 * u).exp() - exact).abs());
        }
    }
    Ok(err)
}

/// Un-normalized flow from `u_0 = 0` against `e^{2u} = 1 - 2t`.
pub fn unnormalized_exactness() -> CriterionReport {
    let mut b = Builder::new(4, "un-normalized exactness", 60.0);
    let outcome = (|| {
        let e400 = b.measure("err_400", unnorm_error(400)?);
        let e800 = b.measure("err_800", unnorm_error(800)?);
        let ratio = b.measure("ratio", e800 / e400);
        b.check("error at N=400", e400 <= 2e-2);
        b.check("first order", ratio <= 0.6);
        Ok(())
    })();
    b.finish(outcome)
}

fn reg_error(steps: usize) -> Result<f64> {
    let lambda = 0.5;
    let traj = run_flow(&football_config(Variant::RicciReg { lambda }, 1.0, steps, 32, 16, InitialData::Zero))?;
    let g = traj.grid.as_football().expect("football");
    let last = traj.interpolant_value(1.0)?;
    let mean = geometry::average(g, &last.map(|u| (2.0 * u).exp()))?;
    Ok((mean - exact_reg_constant_factor(0.0, lambda, 1.0)).abs())
}

/// Regularized flow from a constant against the exact ODE.
pub fn regularized_constant() -> CriterionReport {
    let mut b = Builder::new(5, "regularized constant ODE", 60.0);
    let outcome = (|| {
        let e200 = b.measure("err_200", reg_error(200)?);
        let e400 = b.measure("err_400", reg_error(400)?);
        let ratio = b.measure("ratio", e400 / e200);
        b.check("error at N=200", e200 <= 1e-2);
        b.check("first order", ratio <= 0.6);
        Ok(())
    })();
    b.finish(outcome)
}

/// Fixed points stay fixed.
pub fn stationary_points() -> CriterionReport {
    let mut b = Builder::new(6, "stationary fixed points", 30.0);
    let outcome = (|| {
        let traj = run_flow(&football_config(Variant::RicciSym, 1.0, 100, 32, 16, InitialData::Zero))?;
        let drift = traj.records.iter().map(|r| r.field.max_abs()).fold(0.0, f64::max);
        let lambda_dev = traj.records[1..]
            .iter()
            .map(|r| r.lambda_n.map_or(f64::INFINITY, |l| (l - 1.0).abs()))
            .fold(0.0, f64::max);
        b.measure("ricci_sym_drift", drift);
        b.measure("lambda_deviation", lambda_dev);
        b.check("ricci-sym drift", drift <= 1e-7 && traj.is_complete());
        b.check("lambda_n", lambda_dev <= 1e-9);

        let linear = InitialData::Linear { a: 1.0, b: 0.5, c: -0.25 };
        let traj = run_flow(&planar_config(2.0, 0.1, 20, 33, 33, linear))?;
        let v0 = &traj.records[0].field;
        let dev = traj.records.iter().map(|r| r.field.max_abs_diff(v0)).fold(0.0, f64::max);
        b.measure("pme_harmonic_deviation", dev);
        b.check("pme harmonic", dev <= 1e-9 && traj.is_complete());
        Ok(())
    })();
    b.finish(outcome)
}

/// β = 1 against a direct implicit heat solve.
pub fn heat_cross_check() -> CriterionReport {
    let mut b = Builder::new(7, "heat equation cross-check", 10.0);
    let outcome = (|| {
        let config = planar_config(1.0, 0.1, 20, 17, 17, InitialData::Bump { amplitude: 1.0 });
        let traj = run_flow(&config)?;
        let AnyGrid::Planar(g) = &traj.grid else { unreachable!("pme runs on the plane") };
        let heat = implicit_heat_reference(g, &traj.records[0].field, config.h(), config.steps)?;
        let err = traj
            .records
            .iter()
            .zip(&heat)
            .map(|(r, v)| r.field.max_abs_diff(v))
            .fold(0.0, f64::max);
        b.measure("max_err", err);
        b.check("heat agreement", err <= 1e-8);
        Ok(())
    })();
    b.finish(outcome)
}

fn pme_oracle_error(n: usize, steps: usize) -> Result<(f64, f64)> {
    let config = planar_config(2.0, 0.1, steps, n, n, InitialData::Bump { amplitude: 1.0 });
    let traj = run_flow(&config)?;
    let reference = pme_reference(&config, 4)?;
    let g = &reference.coarse;
    let v0 = &traj.records[0].field;
    let norm0 = l2_distance(g, v0, &Field::zeros(g))?;
    let mut err = 0.0f64;
    for (r, v) in traj.records.iter().zip(&reference.fields) {
        err = err.max(l2_distance(g, &r.field, v)?);
    }
    Ok((err, norm0))
}

/// Porous-medium run against the refined Newton reference.
pub fn pme_oracle_agreement() -> CriterionReport {
    let mut b = Builder::new(8, "porous medium oracle agreement", 180.0);
    let outcome = (|| {
        let (e17, n17) = pme_oracle_error(17, 20)?;
        let (e33, n33) = pme_oracle_error(33, 40)?;
        b.measure("rel_err_17", e17 / n17);
        b.measure("rel_err_33", e33 / n33);
        b.check("agreement at 33x33", e33 <= 5e-2 * n33);
        b.check("decreasing under refinement", e33 / n33 < e17 / n17);
        Ok(())
    })();
    b.finish(outcome)
}

/// Every criterion in order.
pub fn run_all(seed: u64) -> Vec<CriterionReport> {
    let battery = standard_battery(seed);
    vec![
        geometry_consistency(),
        gradient_fidelity(seed),
        energy_ledger(&battery),
        unnormalized_exactness(),
        regularized_constant(),
        stationary_points(),
        heat_cross_check(),
        pme_oracle_agreement(),
        moser_diagnostics(&battery),
    ]
}
