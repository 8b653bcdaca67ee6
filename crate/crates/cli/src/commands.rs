//! The batch subcommands. Each writes its files under `out` and returns a
//! short summary for the terminal.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use parahyp_core::series::{solve_with, TailStatus, TruncationReport};
use parahyp_core::verify::{convergence_study, degeneracy_scan, verify_solution, ConvergenceStudy, DegeneracyScan};
use parahyp_core::{Field, FieldGrid, RectDomain, SpectralSolution, VerificationReport};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Corruption, RunConfig, ToleranceConfig};
use crate::error::CliError;

pub const FIELDS_CSV: &str = "fields.csv";
pub const SOLUTION_META: &str = "solution_meta.json";
pub const VERIFICATION_REPORT: &str = "verification_report.json";
pub const CONVERGENCE_CSV: &str = "convergence.csv";
pub const CONVERGENCE_SUMMARY: &str = "convergence_summary.json";
pub const DEGENERACY_CSV: &str = "degeneracy.csv";
pub const DEGENERACY_SUMMARY: &str = "degeneracy_summary.json";

/// Solves with modes built on the current rayon pool.
pub fn solve_parallel(config: &RunConfig) -> Result<SpectralSolution, CliError> {
    let sol = solve_with(
        &config.forcing,
        &config.domain,
        &config.truncation,
        config.tolerances.quadrature,
        |builder, range| range.into_par_iter().map(|n| builder.build(n)).collect(),
    )?;
    Ok(sol)
}

/// Tabulates the fields with one task per time row.
pub fn sample_grid_parallel(sol: &SpectralSolution, nx: usize, nt: usize) -> Result<FieldGrid, CliError> {
    let x = sol.x_nodes(nx)?;
    let t = sol.time_nodes(nt)?;
    let rows = t.par_iter().map(|node| sol.row_amplitudes(node)).collect::<Result<Vec<_>, _>>()?;
    Ok(sol.grid_from_rows(x, t, &rows))
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// `x,t,side,u,u_t,u_tt,u_xx`, x-major; `u_tt` is empty when unavailable.
pub fn fields_csv(grid: &FieldGrid) -> String {
    let mut out = String::with_capacity(160 * grid.u.len() + 64);
    out.push_str("x,t,side,u,u_t,u_tt,u_xx\n");
    for (i, &x) in grid.x.iter().enumerate() {
        for (j, node) in grid.t.iter().enumerate() {
            let k = grid.index(i, j);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                num(x),
                num(node.t),
                node.label(),
                num(grid.u[k]),
                num(grid.u_t[k]),
                opt_num(grid.u_tt.as_ref().map(|v| v[k])),
                num(grid.u_xx[k]),
            );
        }
    }
    out
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct GridMeta {
    nx: usize,
    nt: usize,
    rows: usize,
}

#[derive(Debug, Serialize)]
struct TailBounds {
    u: Option<f64>,
    u_t: Option<f64>,
    u_tt: Option<f64>,
    u_xx: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ModeMeta {
    n: usize,
    lambda: f64,
    a: f64,
    b: f64,
    c: f64,
}

#[derive(Debug, Serialize)]
struct SolutionMeta<'a> {
    config_hash: String,
    domain: RectDomain,
    n_modes: usize,
    tail_bound: f64,
    tail_status: TailStatus,
    certified: bool,
    truncation: &'a TruncationReport,
    tail_bounds: TailBounds,
    tolerances: ToleranceConfig,
    grid: GridMeta,
    fields: Vec<&'static str>,
    units: &'a str,
    modes: Vec<ModeMeta>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveSummary {
    pub n_modes: usize,
    pub tail_bound: f64,
    pub certified: bool,
}

pub fn cmd_solve(config: &RunConfig, out: &Path) -> Result<SolveSummary, CliError> {
    fs::create_dir_all(out)?;
    let sol = solve_parallel(config)?;
    let grid = sample_grid_parallel(&sol, config.grid.nx, config.grid.nt)?;
    fs::write(out.join(FIELDS_CSV), fields_csv(&grid))?;

    let bound = |field| sol.tail_bound(field, None).ok().filter(|b| b.is_finite());
    let report = sol.truncation();
    let meta = SolutionMeta {
        config_hash: config.hash(),
        domain: config.domain,
        n_modes: sol.n_modes(),
        tail_bound: report.tail_bound,
        tail_status: report.tail_status,
        certified: report.certified,
        truncation: report,
        tail_bounds: TailBounds {
            u: bound(Field::U),
            u_t: bound(Field::Ut),
            u_tt: bound(Field::Utt),
            u_xx: bound(Field::Uxx),
        },
        tolerances: config.tolerances,
        grid: GridMeta { nx: grid.x.len(), nt: config.grid.nt, rows: grid.t.len() },
        fields: Field::ALL.iter().filter(|f| sol.has_field(**f)).map(|f| f.name()).collect(),
        units: &grid.units,
        modes: sol
            .modes()
            .iter()
            .map(|m| {
                let c = m.coefficients();
                ModeMeta { n: m.pair().n, lambda: m.lambda(), a: c.a, b: c.b, c: c.c }
            })
            .collect(),
    };
    write_json(&out.join(SOLUTION_META), &meta)?;
    Ok(SolveSummary { n_modes: sol.n_modes(), tail_bound: report.tail_bound, certified: report.certified })
}

#[derive(Debug, Serialize)]
struct VerifyFile<'a> {
    config_hash: String,
    seed: u64,
    injected: Option<Corruption>,
    report: &'a VerificationReport,
}

/// Writes the report even when a check fails; the caller maps `pass` to the
/// exit status.
pub fn cmd_verify(config: &RunConfig, out: &Path) -> Result<VerificationReport, CliError> {
    fs::create_dir_all(out)?;
    let mut sol = solve_parallel(config)?;
    if let Some(c) = config.verify.inject {
        let mode = sol.mode(c.mode).ok_or_else(|| {
            CliError::Config(format!("field `verify.inject.mode`: mode {} is not in the solution", c.mode))
        })?;
        let mut coeffs = *mode.coefficients();
        coeffs.b += c.delta;
        sol = sol.with_mode_coefficients(c.mode, coeffs)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let report = verify_solution(&sol, &config.forcing, &config.verify_options(), &mut rng)?;
    write_json(
        &out.join(VERIFICATION_REPORT),
        &VerifyFile { config_hash: config.hash(), seed: config.seed, injected: config.verify.inject, report: &report },
    )?;
    Ok(report)
}

pub fn convergence_csv(study: &ConvergenceStudy) -> String {
    let mut out = String::from("n,err_u,err_u_t,err_u_tt,err_u_xx,tail_bound\n");
    for r in &study.rows {
        let e = &r.errors;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n,
            num(e.u),
            num(e.u_t),
            opt_num(e.u_tt),
            num(e.u_xx),
            num(r.tail_bound)
        );
    }
    out
}

#[derive(Debug, Serialize)]
struct ConvergenceSummary<'a> {
    config_hash: String,
    reference_n: usize,
    slopes: &'a parahyp_core::verify::FieldSlopes,
    decay_fit: Option<parahyp_core::fit::PowerLaw>,
}

pub fn cmd_converge(config: &RunConfig, out: &Path) -> Result<ConvergenceStudy, CliError> {
    fs::create_dir_all(out)?;
    let c = &config.converge;
    let study = convergence_study(
        &config.forcing,
        &config.domain,
        &c.n_list,
        c.reference_n,
        config.grid.nx,
        config.grid.nt,
        config.tolerances.quadrature,
    )?;
    fs::write(out.join(CONVERGENCE_CSV), convergence_csv(&study))?;
    write_json(
        &out.join(CONVERGENCE_SUMMARY),
        &ConvergenceSummary {
            config_hash: config.hash(),
            reference_n: study.reference_n,
            slopes: &study.slopes,
            decay_fit: study.decay_fit,
        },
    )?;
    Ok(study)
}

pub fn degeneracy_csv(scan: &DegeneracyScan) -> String {
    let mut out = String::from("n,lambda,value,abs_value\n");
    for v in &scan.values {
        let _ = writeln!(out, "{},{},{},{}", v.n, num(v.lambda), num(v.value), num(v.value.abs()));
    }
    out
}

#[derive(Debug, Serialize)]
struct DegeneracySummary {
    p: f64,
    t_max: f64,
    n_max: usize,
    min_abs: f64,
    argmin: usize,
}

pub fn cmd_scan(config: &RunConfig, out: &Path) -> Result<DegeneracyScan, CliError> {
    fs::create_dir_all(out)?;
    let scan = degeneracy_scan(config.domain.p(), config.domain.t_max(), config.scan.n_max)?;
    fs::write(out.join(DEGENERACY_CSV), degeneracy_csv(&scan))?;
    write_json(
        &out.join(DEGENERACY_SUMMARY),
        &DegeneracySummary {
            p: scan.p,
            t_max: scan.t_max,
            n_max: config.scan.n_max,
            min_abs: scan.min_abs,
            argmin: scan.argmin,
        },
    )?;
    Ok(scan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use parahyp_core::domain::{SpatialProfile, TemporalProfile};
    use parahyp_core::{Forcing, Side, TruncationPolicy};

    fn config(forcing: Forcing) -> RunConfig {
        let mut c = RunConfig::new(RectDomain::new(1.0, 1.0).unwrap(), forcing);
        c.grid.nx = 9;
        c.grid.nt = 7;
        c
    }

    #[test]
    fn zero_forcing_csv_is_all_zero() {
        let c = config(Forcing::zero());
        let sol = solve_parallel(&c).unwrap();
        let csv = fields_csv(&sample_grid_parallel(&sol, 9, 7).unwrap());
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x,t,side,u,u_t,u_tt,u_xx"));
        let mut count = 0;
        for line in lines {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols.len(), 7);
            for v in &cols[3..] {
                assert_eq!(v.parse::<f64>().unwrap(), 0.0, "{line}");
            }
            count += 1;
        }
        assert_eq!(count, 9 * 8);
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn csv_matches_library_eval() {
        let f = Forcing::single(SpatialProfile::SineMode { k: 1 }, TemporalProfile::constant(1.0));
        let mut c = config(f.clone());
        c.truncation = TruncationPolicy::fixed(1);
        let sol = solve_parallel(&c).unwrap();
        let csv = fields_csv(&sample_grid_parallel(&sol, 9, 7).unwrap());
        for line in csv.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            let x: f64 = cols[0].parse().unwrap();
            let t: f64 = cols[1].parse().unwrap();
            let side = match cols[2] {
                "-" => Side::Minus,
                "+" => Side::Plus,
                _ => Side::Auto,
            };
            let u: f64 = cols[3].parse().unwrap();
            assert_eq!(u, sol.eval_u(x, t, side).unwrap());
        }
    }

    #[test]
    fn sampled_temporal_leaves_utt_empty() {
        let f = Forcing::single(
            SpatialProfile::SineMode { k: 2 },
            TemporalProfile::Sampled { values: vec![0.0, 0.5, 1.0, 0.5, 0.0] },
        );
        let c = config(f);
        let sol = solve_parallel(&c).unwrap();
        let csv = fields_csv(&sample_grid_parallel(&sol, 5, 5).unwrap());
        let row = csv.lines().nth(3).unwrap();
        assert_eq!(row.split(',').nth(5), Some(""));
    }

    #[test]
    fn parallel_grid_is_bit_identical() {
        let f = Forcing::single(
            SpatialProfile::PolyBubble { amplitude: 1.0 },
            TemporalProfile::Trig { amplitude: 1.0, omega: 2.0, phase: 0.3 },
        );
        let c = config(f);
        let sol = solve_parallel(&c).unwrap();
        let serial = sol.sample_grid(9, 7).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let parallel = pool.install(|| sample_grid_parallel(&sol, 9, 7)).unwrap();
        assert_eq!(fields_csv(&serial), fields_csv(&parallel));
    }
}
