//! Bundled acceptance suite. Every criterion is deterministic (fixed seeds)
//! and timed against its own budget.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use parahyp_core::basis::{decay_estimate, eigenpair, ModeForcing};
use parahyp_core::domain::{SpatialProfile, TemporalProfile};
use parahyp_core::modes::{mode_coefficients, DerivativeForm, Region, Variant};
use parahyp_core::oracle::{conjugation_solve, fd_propagate, integrate_mode_hyp, integrate_mode_par};
use parahyp_core::series::solve;
use parahyp_core::verify::{
    check_conjugation, convergence_study, degeneracy_scan, lemma2_bound_check, residual_pde, uniqueness_probe,
};
use parahyp_core::{Forcing, ModeSolution, RectDomain, TruncationPolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::commands::{cmd_solve, FIELDS_CSV, SOLUTION_META};
use crate::config::RunConfig;

/// Wall-clock budget of the whole suite, in seconds.
pub const TOTAL_BUDGET: f64 = 60.0;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget: Option<f64>,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let budget = self.budget.map(|b| format!(" / {b:.0} s")).unwrap_or_default();
        format!(
            "[{}] criterion {:>2} {:<30} {:>7.3} s{}  {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            budget,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfTestReport {
    pub criteria: Vec<CriterionResult>,
    pub seconds: f64,
    pub pass: bool,
}

type Outcome = Result<(bool, String), String>;

struct Criterion {
    id: u8,
    name: &'static str,
    budget: Option<f64>,
    run: fn() -> Outcome,
}

const CRITERIA: [Criterion; 10] = [
    Criterion { id: 1, name: "exact-mode reproduction", budget: Some(1.0), run: exact_mode },
    Criterion { id: 2, name: "coefficient algebra", budget: Some(1.0), run: coefficient_algebra },
    Criterion { id: 3, name: "closed form vs ODE oracle", budget: Some(5.0), run: ode_oracle },
    Criterion { id: 4, name: "derivative series forms", budget: Some(2.0), run: derivative_forms },
    Criterion { id: 5, name: "uniqueness (homogeneous)", budget: None, run: uniqueness },
    Criterion { id: 6, name: "integral bounds", budget: None, run: integral_bounds },
    Criterion { id: 7, name: "coefficient decay", budget: Some(10.0), run: decay },
    Criterion { id: 8, name: "degeneracy scan", budget: None, run: degeneracy },
    Criterion { id: 9, name: "finite-difference cross-check", budget: Some(30.0), run: fd_cross_check },
    Criterion { id: 10, name: "cli determinism", budget: None, run: determinism },
];

pub fn criterion_ids() -> impl Iterator<Item = u8> {
    CRITERIA.iter().map(|c| c.id)
}

/// Runs one criterion by id.
pub fn run_criterion(id: u8) -> Option<CriterionResult> {
    let c = CRITERIA.iter().find(|c| c.id == id)?;
    let start = Instant::now();
    let outcome = (c.run)();
    let seconds = start.elapsed().as_secs_f64();
    let in_budget = c.budget.is_none_or(|b| seconds <= b);
    let (pass, mut detail) = match outcome {
        Ok((pass, detail)) => (pass && in_budget, detail),
        Err(e) => (false, format!("error: {e}")),
    };
    if !in_budget {
        detail.push_str("; over time budget");
    }
    Some(CriterionResult { id: c.id, name: c.name, pass, detail, seconds, budget: c.budget })
}

/// Runs every criterion, calling `each` as results come in.
pub fn run_all(mut each: impl FnMut(&CriterionResult)) -> SelfTestReport {
    let start = Instant::now();
    let criteria: Vec<CriterionResult> = criterion_ids()
        .map(|id| {
            let r = run_criterion(id).expect("known id");
            each(&r);
            r
        })
        .collect();
    let seconds = start.elapsed().as_secs_f64();
    SelfTestReport { pass: criteria.iter().all(|c| c.pass) && seconds <= TOTAL_BUDGET, criteria, seconds }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn unit_square() -> RectDomain {
    RectDomain::new(1.0, 1.0).expect("valid domain")
}

fn single_mode() -> Forcing {
    Forcing::single(SpatialProfile::SineMode { k: 1 }, TemporalProfile::constant(1.0))
}

fn bubble() -> Forcing {
    Forcing::single(SpatialProfile::PolyBubble { amplitude: 1.0 }, TemporalProfile::constant(1.0))
}

fn exact_mode() -> Outcome {
    let f = single_mode();
    let sol = solve(&f, &unit_square(), &TruncationPolicy::fixed(1), 1e-13).map_err(err)?;
    let res = residual_pde(&sol, &f, 101, 101).map_err(err)?;
    let jumps = check_conjugation(&sol, 33, 1e-3).map_err(err)?.jumps.max();
    let grid = sol.sample_grid(101, 101).map_err(err)?;
    let last = grid.x.len() - 1;
    let wall = (0..grid.t.len())
        .flat_map(|j| [grid.u[grid.index(0, j)], grid.u[grid.index(last, j)]])
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let (rp, rm) = (res.spectral.plus.linf, res.spectral.minus.linf);
    Ok((
        rp <= 1e-10 && rm <= 1e-10 && jumps <= 1e-10 && wall <= 1e-15,
        format!("residual +{rp:.1e} -{rm:.1e}, jump {jumps:.1e}, wall {wall:.1e}"),
    ))
}

fn coefficient_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let f0 = rng.gen_range(-10.0..10.0);
        let fp0 = rng.gen_range(-10.0..10.0);
        let p: f64 = rng.gen_range(0.5..2.0);
        let lambda = rng.gen_range(1..=20) as f64 * PI / p;
        let closed = mode_coefficients(f0, fp0, lambda);
        let solved = conjugation_solve(f0, fp0, lambda).map_err(err)?;
        worst =
            worst.max((closed.a - solved.a).abs()).max((closed.b - solved.b).abs()).max((closed.c - solved.c).abs());
    }
    Ok((worst <= 1e-12, format!("max difference {worst:.1e} over 1000 draws")))
}

fn mode_on(lambda: f64, forcing: ModeForcing) -> Result<ModeSolution, String> {
    let domain = RectDomain::new(PI / lambda, forcing.t_max()).map_err(err)?;
    Ok(ModeSolution::new(eigenpair(1, &domain).map_err(err)?, forcing, 1e-13))
}

fn uniform(h: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|i| i as f64 * h).collect()
}

fn ode_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let t_max = 1.0;
    let (mut hyp, mut par) = (0.0_f64, 0.0_f64);
    for _ in 0..20 {
        let lambda = rng.gen_range(1..=10) as f64 * PI;
        let terms = rng.gen_range(1..=3);
        let profiles = (0..terms)
            .map(|_| TemporalProfile::Trig {
                amplitude: rng.gen_range(-2.0..2.0),
                omega: rng.gen_range(0.0..6.0),
                phase: rng.gen_range(-PI..PI),
            })
            .collect();
        let m = mode_on(lambda, ModeForcing::from_profiles(profiles, t_max))?;
        let c = m.coefficients();

        let steps = 2 * (t_max * lambda / 0.05).ceil() as usize;
        let plus = uniform(t_max / steps as f64, steps);
        let rk4 = integrate_mode_hyp(m.forcing(), lambda, c.a, c.b, &plus).map_err(err)?;
        for (&t, y) in plus.iter().zip(&rk4) {
            hyp = hyp.max((m.alpha(t).map_err(err)? - y).abs());
        }
        let minus = uniform(-t_max / 400.0, 400);
        let ei = integrate_mode_par(m.forcing(), lambda, c.c, &minus).map_err(err)?;
        for (&t, y) in minus.iter().zip(&ei) {
            par = par.max((m.beta(t).map_err(err)? - y).abs());
        }
    }
    Ok((hyp <= 1e-6 && par <= 1e-8, format!("hyperbolic {hyp:.1e}, parabolic {par:.1e}")))
}

fn derivative_forms() -> Outcome {
    let profiles = vec![
        TemporalProfile::Polynomial { coeffs: vec![1.0, 0.5] },
        TemporalProfile::Trig { amplitude: 0.8, omega: 2.0, phase: 0.3 },
    ];
    let mut corrected = 0.0_f64;
    let mut printed = [0.0_f64; 2];
    for k in [1, 2, 4] {
        let m = mode_on(k as f64 * PI, ModeForcing::from_profiles(profiles.clone(), 1.0))?;
        for i in 0..=40 {
            let s = i as f64 / 40.0;
            for form in DerivativeForm::ALL {
                let t = if form.region() == Region::Plus { s } else { -s };
                let id = m.identity_form(form, t).map_err(err)?;
                let ex = m.closed_form(form, t, Variant::Expanded).map_err(err)?;
                corrected = corrected.max((ex - id).abs());
                let slot = match form {
                    DerivativeForm::UxxPlus => 0,
                    DerivativeForm::BetaDtt => 1,
                    _ => continue,
                };
                let pr = m.closed_form(form, t, Variant::Printed).map_err(err)?;
                printed[slot] = printed[slot].max((pr - id).abs());
            }
        }
    }
    Ok((
        corrected <= 1e-7 && printed.iter().all(|d| *d > 1e-3),
        format!("corrected {corrected:.1e}, uncorrected u_xx+ {:.1e}, beta'' {:.1e}", printed[0], printed[1]),
    ))
}

fn uniqueness() -> Outcome {
    let probe = Forcing::new(vec![
        parahyp_core::ForcingTerm::new(
            SpatialProfile::SineMode { k: 2 },
            TemporalProfile::Trig { amplitude: 1.0, omega: 1.5, phase: 0.2 },
        ),
        parahyp_core::ForcingTerm::new(
            SpatialProfile::PolyBubble { amplitude: 0.5 },
            TemporalProfile::Polynomial { coeffs: vec![1.0, -0.5, 0.25] },
        ),
    ]);
    let r = uniqueness_probe(&unit_square(), &TruncationPolicy::fixed(8), &probe, 1e-13).map_err(err)?;
    Ok((
        r.zero_coefficients && r.zero_field_max == 0.0 && r.passes(1e-9, 1e-7),
        format!(
            "zero field {:.1e}, roundtrip {:.1e}, ode +{:.1e} -{:.1e}",
            r.zero_field_max, r.roundtrip, r.ode_residual_plus, r.ode_residual_minus
        ),
    ))
}

fn integral_bounds() -> Outcome {
    let domain = RectDomain::new(1.0, 1.5).map_err(err)?;
    let forcing = Forcing::new(vec![
        parahyp_core::ForcingTerm::new(
            SpatialProfile::PolyBubble { amplitude: 1.0 },
            TemporalProfile::Trig { amplitude: 1.0, omega: 3.0, phase: 0.5 },
        ),
        parahyp_core::ForcingTerm::new(
            SpatialProfile::SineMode { k: 3 },
            TemporalProfile::Exponential { amplitude: 0.7, rate: -1.2 },
        ),
    ]);
    let sol = solve(&forcing, &domain, &TruncationPolicy::fixed(4), 1e-13).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut total, mut failed, mut orders) = (0, 0, 0u8);
    for m in sol.modes() {
        let checks = lemma2_bound_check(m.forcing(), m.lambda(), &domain, 100, &mut rng).map_err(err)?;
        orders = orders.max(m.forcing().max_order().min(2) + 1);
        total += checks.len();
        failed += checks.iter().filter(|c| !c.pass).count();
    }
    Ok((failed == 0 && orders == 3, format!("{failed} failures in {total} checks, orders k < {orders}")))
}

fn decay() -> Outcome {
    let domain = unit_square();
    let fit = decay_estimate(&bubble(), &domain, 64, 0.5).map_err(err)?;
    let study = convergence_study(&bubble(), &domain, &[4, 8, 16, 32], 128, 65, 33, 1e-12).map_err(err)?;
    let slope = study.slopes.u.ok_or("no convergence slope")?;
    Ok((
        (-3.2..=-2.8).contains(&fit.rate) && slope <= -3.0,
        format!("coefficient slope {:.3}, error slope {slope:.3}", fit.rate),
    ))
}

fn degeneracy() -> Outcome {
    let scan = degeneracy_scan(PI, PI, 10).map_err(err)?;
    let worst = scan.values.iter().map(|v| (v.value.abs() - 1.0).abs()).fold(0.0, f64::max);
    Ok((scan.values.len() == 10 && worst <= 1e-12, format!("max ||value| - 1| {worst:.1e}")))
}

fn fd_cross_check() -> Outcome {
    let f = single_mode();
    let sol = solve(&f, &unit_square(), &TruncationPolicy::fixed(1), 1e-13).map_err(err)?;
    let dev = [101, 201, 401]
        .iter()
        .map(|&n| fd_propagate(&sol, &f, n, n).map(|r| r.max_deviation))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    Ok((
        dev.windows(2).all(|w| w[1] < w[0]) && dev[2] <= 1e-3,
        format!("deviation {:.1e} > {:.1e} > {:.1e}", dev[0], dev[1], dev[2]),
    ))
}

fn scratch_dir(tag: &str) -> PathBuf {
    let nanos = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0);
    std::env::temp_dir().join(format!("parahyp-selftest-{}-{nanos}-{tag}", std::process::id()))
}

fn solve_into(config: &RunConfig, dir: &Path, threads: usize) -> Result<(), String> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(err)?;
    pool.install(|| cmd_solve(config, dir)).map_err(err)?;
    Ok(())
}

fn determinism() -> Outcome {
    let forcing = Forcing::new(vec![
        parahyp_core::ForcingTerm::new(
            SpatialProfile::PolyBubble { amplitude: 1.0 },
            TemporalProfile::Trig { amplitude: 1.0, omega: 2.0, phase: 0.1 },
        ),
        parahyp_core::ForcingTerm::new(SpatialProfile::SineMode { k: 3 }, TemporalProfile::constant(0.5)),
    ]);
    let mut config = RunConfig::new(unit_square(), forcing);
    config.grid.nx = 33;
    config.grid.nt = 33;
    let dirs = [scratch_dir("a"), scratch_dir("b")];
    let result = (|| {
        solve_into(&config, &dirs[0], 1)?;
        solve_into(&config, &dirs[1], 4)?;
        let mut same = true;
        for name in [FIELDS_CSV, SOLUTION_META] {
            let a = std::fs::read(dirs[0].join(name)).map_err(err)?;
            let b = std::fs::read(dirs[1].join(name)).map_err(err)?;
            same &= a == b;
        }
        Ok((same, format!("outputs {} across runs and thread counts", if same { "identical" } else { "differ" })))
    })();
    for d in &dirs {
        let _ = std::fs::remove_dir_all(d);
    }
    result
}
