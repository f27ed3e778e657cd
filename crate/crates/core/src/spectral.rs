//! Quasienergy spectra of Floquet unitaries.
//!
//! Quasienergies are defined by λ = e^{−iε} and reported on the branch
//! (−π, π], sorted ascending. Eigenvectors come from the complex Schur form;
//! the gauge inside degenerate clusters is whatever the Schur ordering
//! produces, so only gauge-invariant quantities are built on top of them.

use std::f64::consts::{PI, TAU};

use ndarray::prelude::*;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::floquet::{build_floquet, chiral_signs, KickParams, Timeframe};
use crate::linalg;
use crate::spin_ops::{ComplexOperator, SpinSpace};

pub const DEFAULT_EPS_TOL: f64 = 0.05;
const UNITARITY_TOL: f64 = 1e-8;
const RECONSTRUCTION_TOL: f64 = 1e-8;
const CLUSTER_GAP: f64 = 1e-9;
const PARTNER_WINDOW: f64 = 1e-6;

/// Maps an angle onto (−π, π].
pub fn wrap_branch(x: f64) -> f64 {
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    if y <= -PI {
        y += TAU;
    }
    y
}

/// Distance between two angles on the circle.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    wrap_branch(a - b).abs()
}

#[derive(Clone, Debug)]
pub struct FloquetSpectrum {
    quasienergies: Vec<f64>,
    eigenvectors: Array2<C64>,
    frame: Option<Timeframe>,
    params: Option<(SpinSpace, KickParams)>,
    reconstruction_residual: f64,
}

impl FloquetSpectrum {
    /// Builds and diagonalizes the Floquet operator for one parameter point.
    pub fn compute(space: SpinSpace, k: KickParams, frame: Timeframe) -> Result<Self> {
        let u = build_floquet(space, k, frame)?;
        let mut spec = unitary_eigensystem(&u)?;
        spec.frame = Some(frame);
        spec.params = Some((space, k));
        Ok(spec)
    }

    pub fn quasienergies(&self) -> &[f64] {
        &self.quasienergies
    }

    /// Columns are eigenvectors, in quasienergy order.
    pub fn eigenvectors(&self) -> &Array2<C64> {
        &self.eigenvectors
    }

    pub fn eigenvalues(&self) -> Array1<C64> {
        self.quasienergies
            .iter()
            .map(|&e| C64::from_polar(1.0, -e))
            .collect()
    }

    pub fn frame(&self) -> Option<Timeframe> {
        self.frame
    }

    pub fn params(&self) -> Option<(SpinSpace, KickParams)> {
        self.params
    }

    pub fn dim(&self) -> usize {
        self.quasienergies.len()
    }

    pub fn reconstruction_residual(&self) -> f64 {
        self.reconstruction_residual
    }

    pub fn orthonormality_residual(&self) -> f64 {
        linalg::unitarity_residual(&self.eigenvectors)
    }

    /// Top dimension `2j + 1` implied by the composite dimension.
    pub(crate) fn top_dim(&self) -> usize {
        self.dim() / 2
    }
}

/// Full eigensystem of a unitary operator.
pub fn unitary_eigensystem(u: &ComplexOperator) -> Result<FloquetSpectrum> {
    let residual = u.unitarity_residual();
    if residual > UNITARITY_TOL {
        return Err(Error::NotUnitary { residual });
    }
    let (diag, vectors, _) = linalg::schur(u.matrix())?;

    let eps: Vec<f64> = diag.iter().map(|l| wrap_branch(-l.arg())).collect();
    let mut order: Vec<usize> = (0..eps.len()).collect();
    order.sort_by(|&a, &b| eps[a].total_cmp(&eps[b]).then(a.cmp(&b)));
    let quasienergies: Vec<f64> = order.iter().map(|&i| eps[i]).collect();
    let mut v = vectors.select(ndarray::Axis(1), &order);

    for cluster in clusters(&quasienergies, CLUSTER_GAP) {
        if cluster.len() > 1 {
            linalg::orthonormalize_columns(&mut v, &cluster);
        }
    }

    let lambda: Array1<C64> = quasienergies.iter().map(|&e| C64::from_polar(1.0, -e)).collect();
    let uv = u.matrix().dot(&v);
    let vl = &v * &lambda.view().insert_axis(ndarray::Axis(0));
    let reconstruction_residual = linalg::max_abs_diff(&uv, &vl);
    if reconstruction_residual > RECONSTRUCTION_TOL {
        return Err(Error::Domain(format!(
            "unitary eigensystem did not converge (residual {reconstruction_residual:e})"
        )));
    }

    Ok(FloquetSpectrum {
        quasienergies,
        eigenvectors: v,
        frame: None,
        params: None,
        reconstruction_residual,
    })
}

/// Groups consecutive sorted quasienergies closer than `gap`, including the
/// wrap-around between the top and bottom of the branch.
fn clusters(sorted: &[f64], gap: f64) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, &e) in sorted.iter().enumerate() {
        match out.last_mut() {
            Some(c) if e - sorted[*c.last().unwrap()] < gap => c.push(i),
            _ => out.push(vec![i]),
        }
    }
    if out.len() > 1 {
        let (first, last) = (sorted[0], sorted[sorted.len() - 1]);
        if circle_distance(first, last) < gap {
            let head = out.remove(0);
            out.last_mut().unwrap().extend(head);
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub kappa1: f64,
    pub quasienergies: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasienergySweep {
    pub space: SpinSpace,
    pub kappa2: f64,
    pub frame: Timeframe,
    pub rows: Vec<SweepRow>,
}

impl QuasienergySweep {
    pub fn census(&self, eps_tol: f64) -> Vec<(f64, BoundStateCensus)> {
        self.rows
            .iter()
            .map(|r| (r.kappa1, census_of(&r.quasienergies, eps_tol)))
            .collect()
    }
}

/// Quasienergies over a grid of κ₁ at fixed κ₂; rows keep grid order.
pub fn quasienergy_sweep(
    space: SpinSpace,
    kappa2: f64,
    kappa1_grid: &[f64],
    frame: Timeframe,
) -> Result<QuasienergySweep> {
    if kappa1_grid.is_empty() {
        return Err(Error::Domain("kappa1 grid is empty".into()));
    }
    let rows = kappa1_grid
        .par_iter()
        .map(|&kappa1| {
            let k = KickParams::new(kappa1, kappa2)?;
            let spec = FloquetSpectrum::compute(space, k, frame)?;
            Ok(SweepRow {
                kappa1,
                quasienergies: spec.quasienergies,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QuasienergySweep {
        space,
        kappa2,
        frame,
        rows,
    })
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// P[m, i] = Σ_spin |⟨m, spin|ε_i⟩|².
#[derive(Clone, Debug)]
pub struct EnergyDensity {
    pub m_values: Vec<i64>,
    pub quasienergies: Vec<f64>,
    /// Rows indexed by m (ascending), columns by eigenstate.
    pub prob: Array2<f64>,
}

impl EnergyDensity {
    pub fn column_sum_residual(&self) -> f64 {
        self.prob
            .sum_axis(ndarray::Axis(0))
            .iter()
            .fold(0.0f64, |acc, s| acc.max((s - 1.0).abs()))
    }

    /// Probability-weighted mean of |m| for eigenstate `i`.
    pub fn mean_abs_m(&self, i: usize) -> f64 {
        self.m_values
            .iter()
            .zip(self.prob.column(i))
            .map(|(&m, &p)| m.abs() as f64 * p)
            .sum()
    }
}

pub fn energy_density(spec: &FloquetSpectrum) -> EnergyDensity {
    let d_top = spec.top_dim();
    let j = (d_top as i64 - 1) / 2;
    let v = spec.eigenvectors();
    let prob = Array2::from_shape_fn((d_top, spec.dim()), |(mi, i)| {
        v[[2 * mi, i]].norm_sqr() + v[[2 * mi + 1, i]].norm_sqr()
    });
    EnergyDensity {
        m_values: (-j..=j).collect(),
        quasienergies: spec.quasienergies.clone(),
        prob,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundStateCensus {
    pub eps_tol: f64,
    /// States with |ε| < tol.
    pub n_zero: usize,
    /// States with |π − |ε|| < tol.
    pub n_pi: usize,
    /// Mirror-pair counts: bound states appear in pairs at ±m, one pair per
    /// protected state family.
    pub zero_pairs: usize,
    pub pi_pairs: usize,
}

fn census_of(quasienergies: &[f64], eps_tol: f64) -> BoundStateCensus {
    let n_zero = quasienergies.iter().filter(|e| e.abs() < eps_tol).count();
    let n_pi = quasienergies
        .iter()
        .filter(|e| (PI - e.abs()) < eps_tol)
        .count();
    BoundStateCensus {
        eps_tol,
        n_zero,
        n_pi,
        zero_pairs: n_zero / 2,
        pi_pairs: n_pi / 2,
    }
}

pub fn bound_state_census(spec: &FloquetSpectrum, eps_tol: f64) -> Result<BoundStateCensus> {
    if !(eps_tol > 0.0 && eps_tol < PI / 4.0) {
        return Err(Error::Domain(format!(
            "eps_tol must lie in (0, pi/4), got {eps_tol}"
        )));
    }
    Ok(census_of(&spec.quasienergies, eps_tol))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiralPairing {
    /// Hausdorff distance between {ε} and {−ε} on the circle.
    pub multiset_distance: f64,
    /// Largest norm of the part of Γ|ε⟩ lying outside the −ε eigenspace.
    pub subspace_residual: f64,
}

fn nearest_distance(sorted: &[f64], x: f64) -> f64 {
    let idx = sorted.partition_point(|&y| y < x);
    let n = sorted.len();
    [idx.wrapping_sub(1), idx, 0, n - 1]
        .into_iter()
        .filter(|&i| i < n)
        .map(|i| circle_distance(sorted[i], x))
        .fold(f64::INFINITY, f64::min)
}

pub fn chiral_pairing_mismatch(spec: &FloquetSpectrum) -> ChiralPairing {
    let eps = &spec.quasienergies;
    if eps.is_empty() {
        return ChiralPairing {
            multiset_distance: 0.0,
            subspace_residual: 0.0,
        };
    }
    let mut neg: Vec<f64> = eps.iter().map(|&e| wrap_branch(-e)).collect();
    neg.sort_by(f64::total_cmp);
    let forward = eps.iter().map(|&e| nearest_distance(&neg, e)).fold(0.0, f64::max);
    let backward = neg.iter().map(|&e| nearest_distance(eps, e)).fold(0.0, f64::max);

    let v = spec.eigenvectors();
    let signs = Array1::from_iter(chiral_signs(spec.dim()).map(|s| C64::new(s, 0.0)));
    let gv = v * &signs.view().insert_axis(ndarray::Axis(1));
    let overlap = linalg::dagger(v).dot(&gv);
    let subspace_residual = (0..spec.dim())
        .map(|k| {
            let target = wrap_branch(-eps[k]);
            let inside: f64 = (0..spec.dim())
                .filter(|&l| circle_distance(eps[l], target) < PARTNER_WINDOW)
                .map(|l| overlap[[l, k]].norm_sqr())
                .sum();
            (1.0 - inside).max(0.0).sqrt()
        })
        .fold(0.0f64, f64::max);

    ChiralPairing {
        multiset_distance: forward.max(backward),
        subspace_residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_ops::BasisTag;
    use std::f64::consts::FRAC_PI_2;

    fn space(j: u32) -> SpinSpace {
        SpinSpace::new(j).unwrap()
    }

    fn paper() -> KickParams {
        KickParams::new(4.25 * PI, 0.5 * PI).unwrap()
    }

    fn multiset_close(a: &[f64], b: &[f64], tol: f64) -> bool {
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        a.len() == b.len()
            && a.iter().all(|&x| nearest_distance(&b, x) < tol)
            && b.iter().all(|&x| nearest_distance(&a, x) < tol)
    }

    #[test]
    fn branch_wrapping() {
        assert_eq!(wrap_branch(-PI), PI);
        assert_eq!(wrap_branch(PI), PI);
        assert!((wrap_branch(3.0 * PI / 2.0) + FRAC_PI_2).abs() < 1e-15);
        assert!(circle_distance(PI - 1e-3, -PI + 1e-3) < 2.1e-3);
    }

    #[test]
    fn identity_spectrum() {
        let u = ComplexOperator::identity(BasisTag::Composite, 6);
        let spec = unitary_eigensystem(&u).unwrap();
        assert!(spec.quasienergies().iter().all(|&e| e == 0.0));
        assert!(spec.orthonormality_residual() < 1e-14);
    }

    #[test]
    fn diagonal_sign_convention() {
        let u = ComplexOperator::new(
            BasisTag::Spin,
            Array2::from_diag(&array![C64::from_polar(1.0, -FRAC_PI_2), C64::from_polar(1.0, FRAC_PI_2)]),
        )
        .unwrap();
        let spec = unitary_eigensystem(&u).unwrap();
        let e = spec.quasienergies();
        assert!((e[0] + FRAC_PI_2).abs() < 1e-15 && (e[1] - FRAC_PI_2).abs() < 1e-15);
        // λ = e^{−iπ/2} belongs to ε = +π/2, the first basis vector
        assert!((spec.eigenvectors()[[0, 1]].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn minus_pi_reported_as_pi() {
        let u = ComplexOperator::new(BasisTag::Spin, Array2::from_diag(&array![C64::new(-1.0, 0.0), C64::new(-1.0, 0.0)]))
            .unwrap();
        let spec = unitary_eigensystem(&u).unwrap();
        assert!(spec.quasienergies().iter().all(|&e| e == PI));
    }

    #[test]
    fn rejects_non_unitary() {
        let u = ComplexOperator::new(BasisTag::Spin, linalg::identity(2).mapv(|z| z * 1.1)).unwrap();
        assert!(matches!(unitary_eigensystem(&u), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn single_kick_analytic_spectrum() {
        // κ₂ = 0: eigenvalues of Jx σx are ±m, so ε = wrap(κ₁ q / j)
        let s = space(2);
        let k1 = FRAC_PI_2;
        let spec = FloquetSpectrum::compute(s, KickParams::new(k1, 0.0).unwrap(), Timeframe::Original).unwrap();
        let expected: Vec<f64> = (-2i64..=2)
            .flat_map(|m| [m as f64, -(m as f64)])
            .map(|q| wrap_branch(k1 * q / 2.0))
            .collect();
        assert!(multiset_close(spec.quasienergies(), &expected, 1e-12));
        assert!(spec.reconstruction_residual() < 1e-12);
    }

    #[test]
    fn sweep_zero_kappa1_column() {
        let s = space(5);
        let k2 = 0.5 * PI;
        let sweep = quasienergy_sweep(s, k2, &[0.0], Timeframe::Original).unwrap();
        let expected: Vec<f64> = (-5i64..=5)
            .flat_map(|m| [m as f64, -(m as f64)])
            .map(|q| wrap_branch(k2 * q / 5.0))
            .collect();
        assert!(multiset_close(&sweep.rows[0].quasienergies, &expected, 1e-12));
    }

    #[test]
    fn sweep_frame_invariance() {
        let s = space(10);
        let grid = linspace(0.0, 5.0 * PI, 7);
        let sweeps: Vec<_> = [Timeframe::Original, Timeframe::Chiral1, Timeframe::Chiral2]
            .iter()
            .map(|&f| quasienergy_sweep(s, 0.5 * PI, &grid, f).unwrap())
            .collect();
        for i in 0..grid.len() {
            assert_eq!(sweeps[0].rows[i].kappa1, grid[i]);
            for other in &sweeps[1..] {
                assert!(multiset_close(&sweeps[0].rows[i].quasienergies, &other.rows[i].quasienergies, 1e-8));
            }
        }
        assert!(quasienergy_sweep(s, 0.5 * PI, &[], Timeframe::Original).is_err());
    }

    #[test]
    fn spectrum_invariants_paper_point() {
        let s = space(50);
        let mut spectra = Vec::new();
        for frame in [Timeframe::Original, Timeframe::Chiral1, Timeframe::Chiral2] {
            let spec = FloquetSpectrum::compute(s, paper(), frame).unwrap();
            assert!(spec.reconstruction_residual() < 1e-8);
            assert!(spec.orthonormality_residual() < 1e-8);
            assert!(spec.quasienergies().windows(2).all(|w| w[0] <= w[1]));
            assert!(spec.quasienergies().iter().all(|&e| e > -PI && e <= PI));
            if frame.is_chiral() {
                let p = chiral_pairing_mismatch(&spec);
                assert!(p.multiset_distance < 1e-8, "{p:?}");
                assert!(p.subspace_residual < 1e-6, "{p:?}");
            }
            spectra.push(spec);
        }
        assert!(multiset_close(spectra[0].quasienergies(), spectra[1].quasienergies(), 1e-8));
        assert!(multiset_close(spectra[1].quasienergies(), spectra[2].quasienergies(), 1e-8));
    }

    #[test]
    fn pairing_negative_control() {
        let s = space(20);
        let u = build_floquet(s, paper(), Timeframe::Chiral1).unwrap();
        let d = s.d_total();
        let tilt = Array2::from_diag(&Array1::from_iter(
            (0..d).map(|i| C64::from_polar(1.0, if i % 2 == 0 { -0.1 } else { 0.3 })),
        ));
        let broken = ComplexOperator::new(BasisTag::Composite, tilt.dot(u.matrix())).unwrap();
        let spec = unitary_eigensystem(&broken).unwrap();
        assert!(chiral_pairing_mismatch(&spec).multiset_distance > 1e-3);

        let id = unitary_eigensystem(&ComplexOperator::identity(BasisTag::Composite, 8)).unwrap();
        assert_eq!(chiral_pairing_mismatch(&id).multiset_distance, 0.0);
    }

    #[test]
    fn density_columns_normalized() {
        let s = space(3);
        let spec = FloquetSpectrum::compute(s, KickParams::new(0.0, 0.0).unwrap(), Timeframe::Original).unwrap();
        let dens = energy_density(&spec);
        assert_eq!(dens.prob.dim(), (7, 14));
        assert!(dens.column_sum_residual() < 1e-10);

        let spec = FloquetSpectrum::compute(space(20), paper(), Timeframe::Original).unwrap();
        assert!(energy_density(&spec).column_sum_residual() < 1e-10);
    }

    #[test]
    fn census_identity_and_monotone() {
        let s = space(4);
        let spec = FloquetSpectrum::compute(s, KickParams::new(0.0, 0.0).unwrap(), Timeframe::Original).unwrap();
        let c = bound_state_census(&spec, 0.05).unwrap();
        assert_eq!((c.n_zero, c.n_pi), (18, 0));
        assert!(bound_state_census(&spec, 0.0).is_err());
        assert!(bound_state_census(&spec, 1.0).is_err());

        let spec = FloquetSpectrum::compute(space(20), paper(), Timeframe::Original).unwrap();
        let mut prev = (0, 0);
        for tol in [0.001, 0.01, 0.05, 0.1, 0.3, 0.7] {
            let c = bound_state_census(&spec, tol).unwrap();
            assert!(c.n_zero >= prev.0 && c.n_pi >= prev.1);
            assert!(c.n_zero + c.n_pi <= spec.dim());
            prev = (c.n_zero, c.n_pi);
        }
    }

    #[test]
    fn cluster_grouping_wraps() {
        let e = [-PI + 1e-12, -0.5, 0.0, 1e-10, 0.7, PI];
        let c = clusters(&e, 1e-9);
        assert_eq!(c, vec![vec![1], vec![2, 3], vec![4], vec![5, 0]]);
    }
}
