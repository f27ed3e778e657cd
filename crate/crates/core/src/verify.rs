//! Structural invariants checked at a single (j, κ₁, κ₂) point.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::Result;
use crate::floquet::{build_floquet, chiral_symmetry_residual, walk_decomposition, KickParams, Timeframe};
use crate::linalg;
use crate::meanfield::{frame_sin_eps, mf_quasienergy, winding_vector};
use crate::spectral::{chiral_pairing_mismatch, energy_density, FloquetSpectrum, DEFAULT_EPS_TOL};
use crate::spin_ops::{build_angular_momentum, build_ladder, curvature_factor_deviation, jz_sigma_z_diagonal, Axis, Ladder, SpinSpace};
use crate::topology::{bulk_flat_band, chiral_displacement, flat_band, off_diagonal_residual};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvariantCheck {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl InvariantCheck {
    fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value.is_finite() && value < tolerance,
        }
    }
}

fn sorted_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Runs every invariant and returns one check per relation.
pub fn run_invariant_suite(space: SpinSpace, k: KickParams) -> Result<Vec<InvariantCheck>> {
    let mut out = Vec::new();
    let mut push = |name: &str, value: f64, tol: f64| out.push(InvariantCheck::new(name, value, tol));

    let jx = build_angular_momentum(space, Axis::X);
    let jy = build_angular_momentum(space, Axis::Y);
    let jz = build_angular_momentum(space, Axis::Z);
    let i = C64::new(0.0, 1.0);
    for (name, a, b, c) in [("su2 [Jx,Jy] = iJz", &jx, &jy, &jz), ("su2 [Jy,Jz] = iJx", &jy, &jz, &jx), ("su2 [Jz,Jx] = iJy", &jz, &jx, &jy)] {
        let lhs = linalg::commutator(a.matrix(), b.matrix());
        push(name, linalg::max_abs_diff(&lhs, &c.matrix().mapv(|z| z * i)), 1e-10);
    }
    let casimir = jx.matrix().dot(jx.matrix()) + jy.matrix().dot(jy.matrix()) + jz.matrix().dot(jz.matrix());
    let jf = space.jf();
    let target = linalg::identity(space.d_top()).mapv(|z| z * (jf * (jf + 1.0)));
    push("casimir J^2 = j(j+1)", linalg::max_abs_diff(&casimir, &target), 1e-10 * jf.max(1.0).powi(2));
    let jp = build_ladder(space, Ladder::Raise);
    let jm = build_ladder(space, Ladder::Lower);
    push("ladder adjoint", jp.adjoint().max_abs_diff(&jm), 1e-12);
    let curv = curvature_factor_deviation(space);
    push("curvature factor within sqrt(2/j)", curv.max_abs_diff_over_j - curv.bound(), 1e-12);

    let mut spectra = Vec::new();
    for frame in [Timeframe::Original, Timeframe::Chiral1, Timeframe::Chiral2] {
        let u = build_floquet(space, k, frame)?;
        push(&format!("unitarity {frame}"), u.unitarity_residual(), 1e-10);
        if frame.is_chiral() {
            push(&format!("chiral relation {frame}"), chiral_symmetry_residual(&u, frame)?, 1e-10);
        }
        spectra.push(FloquetSpectrum::compute(space, k, frame)?);
    }
    for s in &spectra {
        let frame = s.frame().expect("computed spectrum");
        push(&format!("eigensystem reconstruction {frame}"), s.reconstruction_residual(), 1e-8);
        push(&format!("energy density normalization {frame}"), energy_density(s).column_sum_residual(), 1e-10);
    }
    let base = spectra[0].quasienergies();
    for s in &spectra[1..] {
        let frame = s.frame().expect("computed spectrum");
        push(&format!("frame equivalence original/{frame}"), sorted_distance(base, s.quasienergies()), 1e-8);
        let pairing = chiral_pairing_mismatch(s);
        push(&format!("quasienergy pairing {frame}"), pairing.multiset_distance, 1e-8);
        push(&format!("chiral partner subspace {frame}"), pairing.subspace_residual, 1e-6);

        let fb = flat_band(s, DEFAULT_EPS_TOL);
        push(&format!("flat band Q^2 = 1 {frame}"), fb.involution_residual(), 1e-8);
        push(&format!("flat band hermiticity {frame}"), fb.operator().hermiticity_residual(), 1e-8);
        let bulk = bulk_flat_band(s, DEFAULT_EPS_TOL);
        push(&format!("bulk Q is spin off-diagonal {frame}"), off_diagonal_residual(&bulk), 1e-8);
    }

    let walk = walk_decomposition(space, k)?.product();
    let u0 = build_floquet(space, k, Timeframe::Original)?;
    push("walk decomposition reassembly", walk.max_abs_diff(&u0), 1e-9);

    let mut norm_dev = 0.0f64;
    let mut sin_dev = 0.0f64;
    for a in 0..24 {
        for b in 0..24 {
            let k1 = -2.0 * PI + 4.0 * PI * (a as f64 + 0.37) / 24.0;
            let k2 = -2.0 * PI + 4.0 * PI * (b as f64 + 0.61) / 24.0;
            let eps = mf_quasienergy(k1, k2);
            for frame in Timeframe::CHIRAL {
                if let Ok(v) = winding_vector(k1, k2, frame, 1e-9) {
                    norm_dev = norm_dev.max((v.norm() - 1.0).abs());
                }
                let s = frame_sin_eps(k1, k2, frame)?;
                sin_dev = sin_dev.max((s * s - eps.sin().powi(2)).abs());
            }
        }
    }
    push("winding vector norm", norm_dev, 1e-12);
    push("mean-field sin^2 eps identity", sin_dev, 1e-12);

    let z = jz_sigma_z_diagonal(space);
    let zc = z.mapv(|x| C64::new(x, 0.0));
    let mut cd_dev = 0.0f64;
    for frame in Timeframe::CHIRAL {
        let spec = &spectra[if frame == Timeframe::Chiral1 { 1 } else { 2 }];
        let v = spec.eigenvectors();
        let lam = spec.eigenvalues();
        for m in [0, space.j() as i64 / 2, -(space.j() as i64)] {
            let series = chiral_displacement(space, k, frame, m, 8)?;
            for (n, &c) in series.values.iter().enumerate() {
                let phases = lam.mapv(|l| l.powi(n as i32));
                let un = linalg::reassemble(v, &phases);
                let col = 2 * space.m_index(m);
                let oracle: f64 = (0..2)
                    .map(|s| {
                        let psi = un.column(col + s);
                        psi.iter().zip(zc.iter()).map(|(a, zr)| (a.conj() * zr * a).re).sum::<f64>()
                    })
                    .sum();
                cd_dev = cd_dev.max((oracle - c).abs());
            }
        }
    }
    push("chiral displacement spectral/propagation", cd_dev, 1e-8);

    Ok(out)
}

pub fn all_passed(checks: &[InvariantCheck]) -> bool {
    checks.iter().all(|c| c.passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_on_small_spins() {
        let k = KickParams::new(4.25 * PI, 0.5 * PI).unwrap();
        for j in [1, 2, 20] {
            let checks = run_invariant_suite(SpinSpace::new(j).unwrap(), k).unwrap();
            for c in &checks {
                assert!(c.passed, "j = {j}: {c:?}");
            }
            assert!(checks.len() > 20);
        }
    }
}
