use std::io::Write;
use std::path::Path;

use kicked_top::dynamics::{evolve_probe, gaussian_probe, ipr_scan, ProbeSpin};
use kicked_top::floquet::build_floquet;
use kicked_top::io::{self, Format};
use kicked_top::meanfield::{boundary_locations, boundary_residual, mf_winding_profile_with_tol, BoundarySet};
use kicked_top::spectral::{bound_state_census, energy_density, linspace, quasienergy_sweep, BoundStateCensus};
use kicked_top::topology::{cd_winding_profile, chiral_displacement, quantum_winding_profile, SiteFlag, WindingProfile};
use kicked_top::verify::{all_passed, run_invariant_suite};
use kicked_top::{Error, FloquetSpectrum, SpinSpace, Timeframe};
use serde_json::{json, Value};

use crate::config::{Command, Method, RunConfig, SpinArg};
use crate::output::write_atomic;

pub enum Failure {
    Numerical(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(msg) => Failure::Io(msg),
            e => Failure::Numerical(e),
        }
    }
}

pub struct Outcome {
    pub derived: Value,
    pub verify_failed: bool,
}

fn table<F>(path: &Path, f: F) -> Result<(), Failure>
where
    F: FnOnce(&mut dyn Write) -> kicked_top::Result<()>,
{
    write_atomic(path, |w| f(w).map_err(|e| e.to_string())).map_err(Failure::Io)
}

fn census_json(c: &BoundStateCensus) -> Value {
    json!({
        "eps_tol": c.eps_tol,
        "n_zero": c.n_zero,
        "n_pi": c.n_pi,
        "zero_pairs": c.zero_pairs,
        "pi_pairs": c.pi_pairs,
    })
}

fn boundaries_json(space: SpinSpace, k: kicked_top::KickParams, set: &BoundarySet) -> Value {
    json!({
        "floors_plus": set.positive_floors(),
        "floors_minus": set.entries.iter().map(|e| e.m_floor_minus).collect::<Vec<_>>(),
        "max_residual": set.entries.iter().map(|e| boundary_residual(space, k, e)).fold(0.0, f64::max),
        "pole_case_excluded": set.pole_case_excluded,
        "note": "(mu, nu) = (0, 0) corresponds to the poles m = +/-j and is not listed as a boundary",
    })
}

fn profile_summary(p: &WindingProfile) -> Value {
    let centre = p.at(0).map(|r| json!({ "w0": r.w0, "wpi": r.wpi }));
    json!({
        "method": p.method.to_string(),
        "centre": centre,
        "boundary_sites": p.records.iter().filter(|r| r.flag == SiteFlag::Boundary).count(),
    })
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<Outcome, Failure> {
    let format: Format = cfg.command.output().format.into();
    let derived = match &cfg.command {
        Command::Spectrum(a) => {
            let space = SpinSpace::new(a.j)?;
            let grid = linspace(a.kappa1_min, a.kappa1_max, a.kappa1_steps);
            let sweep = quasienergy_sweep(space, a.kappa2, &grid, a.frame)?;
            table(out, |w| io::write_sweep(w, &sweep, format))?;
            let census: Vec<Value> = sweep
                .census(a.eps_tol)
                .iter()
                .map(|(k1, c)| json!({ "kappa1": k1, "n_zero": c.n_zero, "n_pi": c.n_pi }))
                .collect();
            json!({ "grid_points": grid.len(), "census": census })
        }
        Command::Density(a) => {
            let spec = FloquetSpectrum::compute(a.kicks.space(), a.kicks.params(), a.frame)?;
            let dens = energy_density(&spec);
            table(out, |w| io::write_density(w, &dens, format))?;
            json!({
                "census": census_json(&bound_state_census(&spec, a.eps_tol)?),
                "reconstruction_residual": spec.reconstruction_residual(),
                "orthonormality_residual": spec.orthonormality_residual(),
                "column_sum_residual": dens.column_sum_residual(),
            })
        }
        Command::Winding(a) => {
            let (space, k) = (a.kicks.space(), a.kicks.params());
            let mut profiles = Vec::new();
            let mut extra = serde_json::Map::new();
            for method in &a.method {
                match method {
                    Method::MeanField => profiles.push(mf_winding_profile_with_tol(space, k, a.n_phi, a.singular_tol)),
                    Method::Quantum => {
                        let q = quantum_winding_profile(space, k, a.eps_tol)?;
                        extra.insert("quantum_imag_residual".into(), json!(q.imag_residual));
                        profiles.push(q.profile);
                    }
                    Method::Cd => {
                        let cd = cd_winding_profile(space, k, a.periods, a.route.into())?;
                        extra.insert("cd_route".into(), json!(cd.route));
                        extra.insert("cd_periods".into(), json!(cd.n_periods));
                        profiles.push(cd.profile);
                    }
                }
            }
            table(out, |w| {
                // one table, profiles stacked in the requested order
                let rows = profiles.iter().flat_map(|p| {
                    p.records.iter().map(move |r| (p.method.to_string(), r.m, r.w0, r.wpi, r.flag))
                });
                io::write_rows(
                    w,
                    rows.map(|(method, m, w0, wpi, flag)| WindingRow { method, m, w0, wpi, flag }),
                    format,
                )
            })?;
            let set = boundary_locations(space, k);
            json!({
                "profiles": profiles.iter().map(profile_summary).collect::<Vec<_>>(),
                "boundaries": boundaries_json(space, k, &set),
                "details": Value::Object(extra),
            })
        }
        Command::Cd(a) => {
            let (space, k) = (a.kicks.space(), a.kicks.params());
            let mut series = Vec::new();
            for &m in &a.m {
                for frame in Timeframe::CHIRAL {
                    series.push(chiral_displacement(space, k, frame, m, a.periods)?);
                }
            }
            table(out, |w| io::write_cd_series(w, &series, format))?;
            let estimates: Vec<Value> = series
                .chunks(2)
                .map(|pair| {
                    let (c1, c2) = (pair[0].time_average(), pair[1].time_average());
                    json!({ "m": pair[0].m, "c1": c1, "c2": c2, "w0": -0.5 * (c1 + c2), "wpi": -0.5 * (c1 - c2) })
                })
                .collect();
            json!({ "periods": a.periods, "estimates": estimates })
        }
        Command::Probe(a) => {
            let space = a.kicks.space();
            let u = build_floquet(space, a.kicks.params(), a.frame)?;
            let spin = match a.spin {
                SpinArg::Up => ProbeSpin::Up,
                SpinArg::Down => ProbeSpin::Down,
            };
            let probe = gaussian_probe(space, a.m0, a.delta_m, spin)?;
            let rec = evolve_probe(&u, &probe, a.steps)?;
            table(out, |w| io::write_evolution(w, &rec, format))?;
            let last = rec.steps();
            let window = (2.0 * a.delta_m).round() as i64;
            json!({
                "initial_variance": rec.site_variance(0),
                "final_variance": rec.site_variance(last),
                "variance_ratio": rec.site_variance(last) / rec.site_variance(0),
                "final_mean_m": rec.mean_m(last),
                "window_half_width": window,
                "final_window_probability": rec.window_probability(last, a.m0, window),
                "norm_residual": rec.norm_residual(),
            })
        }
        Command::Ipr(a) => {
            let (space, k) = (a.kicks.space(), a.kicks.params());
            let (lo, hi) = cfg.ipr_range().expect("ipr command");
            let centers: Vec<i64> = (lo..=hi).collect();
            let scan = ipr_scan(space, k, a.frame, a.delta_m, &centers)?;
            table(out, |w| io::write_ipr(w, &scan, format))?;
            json!({
                "local_maxima": scan.local_maxima(),
                "boundary_floors": boundary_locations(space, k).positive_floors(),
            })
        }
        Command::Boundaries(a) => {
            let (space, k) = (a.kicks.space(), a.kicks.params());
            let set = boundary_locations(space, k);
            table(out, |w| io::write_boundaries(w, &set, format))?;
            boundaries_json(space, k, &set)
        }
        Command::Verify(a) => {
            let checks = run_invariant_suite(a.kicks.space(), a.kicks.params())?;
            table(out, |w| io::write_rows(w, checks.iter(), format))?;
            let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
            let ok = all_passed(&checks);
            return Ok(Outcome {
                derived: json!({ "checks": checks.len(), "failed": failed, "passed": ok }),
                verify_failed: !ok,
            });
        }
    };
    Ok(Outcome {
        derived,
        verify_failed: false,
    })
}

#[derive(serde::Serialize)]
struct WindingRow {
    method: String,
    m: i64,
    w0: f64,
    wpi: f64,
    flag: SiteFlag,
}
