//! Position-resolved winding numbers of the quantum chiral Floquet operators.
//!
//! Two quantum estimators are provided: the local winding marker built from
//! the flat-band projector, and the time-averaged chiral displacement of
//! initially localized states. Both report (w₀, w_π) per site m.

use std::collections::BTreeSet;

use ndarray::prelude::*;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::floquet::{build_floquet, KickParams, Timeframe};
use crate::linalg;
use crate::meanfield::boundary_locations;
use crate::spectral::{FloquetSpectrum, DEFAULT_EPS_TOL};
use crate::spin_ops::{jz_sigma_z_diagonal, ComplexOperator, SpinSpace};

/// Above this many periods `Auto` switches from propagation to the
/// closed-form spectral average.
pub const CD_PROPAGATION_LIMIT: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WindingMethod {
    MeanField,
    Quantum,
    ChiralDisplacement,
}

impl std::fmt::Display for WindingMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WindingMethod::MeanField => "mean_field",
            WindingMethod::Quantum => "quantum",
            WindingMethod::ChiralDisplacement => "chiral_displacement",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteFlag {
    Bulk,
    /// A gap closes at (or next to) this site; the value there is not a
    /// plateau value.
    Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WindingRecord {
    pub m: i64,
    pub w0: f64,
    pub wpi: f64,
    pub flag: SiteFlag,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindingProfile {
    pub method: WindingMethod,
    /// One record per m, ascending.
    pub records: Vec<WindingRecord>,
}

impl WindingProfile {
    pub fn at(&self, m: i64) -> Option<&WindingRecord> {
        let first = self.records.first()?.m;
        let idx = usize::try_from(m - first).ok()?;
        self.records.get(idx).filter(|r| r.m == m)
    }

    /// Number of runs of constant (w₀, w_π) over bulk sites in `range`.
    pub fn plateau_count(&self, range: std::ops::RangeInclusive<i64>) -> usize {
        let mut count = 0;
        let mut last: Option<(f64, f64)> = None;
        for r in self.records.iter().filter(|r| range.contains(&r.m)) {
            if r.flag == SiteFlag::Boundary {
                continue;
            }
            if last != Some((r.w0, r.wpi)) {
                count += 1;
                last = Some((r.w0, r.wpi));
            }
        }
        count
    }
}

/// Sites within one step of a mean-field gap closing, plus the poles.
pub fn boundary_sites(space: SpinSpace, k: KickParams) -> BTreeSet<i64> {
    let j = space.j() as i64;
    let mut set = BTreeSet::from([-j, j]);
    for e in boundary_locations(space, k).entries {
        for x in [e.m_plus, e.m_minus] {
            let lo = x.floor() as i64;
            for m in lo - 1..=lo + 2 {
                if (m as f64 - x).abs() <= 1.0 && space.contains(m) {
                    set.insert(m);
                }
            }
        }
    }
    set
}

/// Q = P₊ − P₋ with P₊ spanned by eigenstates of ε ≥ 0 on the branch (−π, π].
#[derive(Clone, Debug)]
pub struct FlatBandProjector {
    q: ComplexOperator,
    frame: Option<Timeframe>,
    /// Eigenstate indices within `eps_tol` of ε = 0 or ε = π.
    flagged: Vec<usize>,
    eps_tol: f64,
}

impl FlatBandProjector {
    pub fn operator(&self) -> &ComplexOperator {
        &self.q
    }

    pub fn frame(&self) -> Option<Timeframe> {
        self.frame
    }

    pub fn flagged(&self) -> &[usize] {
        &self.flagged
    }

    pub fn eps_tol(&self) -> f64 {
        self.eps_tol
    }

    /// ‖Q² − 1‖_max
    pub fn involution_residual(&self) -> f64 {
        let q = self.q.matrix();
        linalg::max_abs_diff(&q.dot(q), &linalg::identity(q.nrows()))
    }
}

fn signed_projector(spec: &FloquetSpectrum, keep: impl Fn(usize) -> bool) -> Array2<C64> {
    let v = spec.eigenvectors();
    let signs = Array1::from_iter(spec.quasienergies().iter().enumerate().map(|(i, &e)| {
        let s = if !keep(i) {
            0.0
        } else if e >= 0.0 {
            1.0
        } else {
            -1.0
        };
        C64::new(s, 0.0)
    }));
    linalg::reassemble(v, &signs)
}

pub fn flat_band(spec: &FloquetSpectrum, eps_tol: f64) -> FlatBandProjector {
    let flagged = spec
        .quasienergies()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.abs() < eps_tol || std::f64::consts::PI - e.abs() < eps_tol)
        .map(|(i, _)| i)
        .collect();
    FlatBandProjector {
        q: ComplexOperator::composite(signed_projector(spec, |_| true)),
        frame: spec.frame(),
        flagged,
        eps_tol,
    }
}

/// Q restricted to eigenstates away from ε = 0 and ε = π.
///
/// These come in exact ±ε pairs, so this part anticommutes with Γ even when
/// the gauge inside a degenerate bound-state cluster breaks chirality.
pub fn bulk_flat_band(spec: &FloquetSpectrum, eps_tol: f64) -> ComplexOperator {
    let fb = flat_band(spec, eps_tol);
    let flagged: BTreeSet<usize> = fb.flagged.into_iter().collect();
    ComplexOperator::composite(signed_projector(spec, |i| !flagged.contains(&i)))
}

/// `‖Q − (Q↑↓ + Q↓↑)‖_max`, i.e. the spin-diagonal blocks of Q.
pub fn off_diagonal_residual(q: &ComplexOperator) -> f64 {
    q.matrix()
        .indexed_iter()
        .filter(|((a, b), _)| a % 2 == b % 2)
        .fold(0.0, |acc, (_, z)| acc.max(z.norm()))
}

/// Local winding operator `½(Q↑↓[Jz, Q↓↑] − Q↓↑[Jz, Q↑↓])` in composite order.
pub fn winding_operator(qp: &FlatBandProjector, space: SpinSpace) -> Result<ComplexOperator> {
    let q = qp.q.matrix();
    let n = space.d_total();
    if q.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "projector of dimension {} for j = {}",
            q.nrows(),
            space.j()
        )));
    }
    let jz = crate::spin_ops::jz_diagonal(space);
    let block = |row_parity: usize| {
        Array2::from_shape_fn((n, n), |(a, b)| {
            if a % 2 == row_parity && b % 2 != row_parity {
                q[[a, b]]
            } else {
                linalg::ZERO
            }
        })
    };
    let comm = |x: &Array2<C64>| {
        Array2::from_shape_fn((n, n), |(a, b)| x[[a, b]] * (jz[a] - jz[b]))
    };
    let ud = block(0);
    let du = block(1);
    let w = (ud.dot(&comm(&du)) - du.dot(&comm(&ud))) * C64::new(0.5, 0.0);
    Ok(ComplexOperator::composite(w))
}

/// Spin-traced diagonal of the winding operator per m, plus the largest
/// imaginary part encountered.
fn local_marker(q: &Array2<C64>, space: SpinSpace) -> (Vec<f64>, f64) {
    let jz = crate::spin_ops::jz_diagonal(space);
    let n = space.d_total();
    let site = |a: usize| -> C64 {
        // a has spin parity p; the sum runs over the opposite parity.
        let sign = if a % 2 == 0 { 0.5 } else { -0.5 };
        let mut acc = linalg::ZERO;
        let mut b = 1 - a % 2;
        while b < n {
            acc += q[[a, b]] * q[[b, a]] * (jz[b] - jz[a]);
            b += 2;
        }
        acc * sign
    };
    let mut imag = 0.0f64;
    let values = (0..space.d_top())
        .map(|i| {
            let w = site(2 * i) + site(2 * i + 1);
            imag = imag.max(w.im.abs());
            w.re
        })
        .collect();
    (values, imag)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantumWinding {
    pub profile: WindingProfile,
    /// Raw per-frame markers, ascending m.
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub imag_residual: f64,
}

pub fn quantum_winding_profile(space: SpinSpace, k: KickParams, eps_tol: f64) -> Result<QuantumWinding> {
    let mut markers = Timeframe::CHIRAL
        .par_iter()
        .map(|&frame| {
            let spec = FloquetSpectrum::compute(space, k, frame)?;
            let fb = flat_band(&spec, eps_tol);
            Ok(local_marker(fb.q.matrix(), space))
        })
        .collect::<Result<Vec<_>>>()?;
    let (w2, i2) = markers.pop().expect("two frames");
    let (w1, i1) = markers.pop().expect("two frames");
    let boundary = boundary_sites(space, k);
    let records = space
        .m_values()
        .zip(w1.iter().zip(&w2))
        .map(|(m, (a, b))| WindingRecord {
            m,
            w0: 0.5 * (a + b),
            wpi: 0.5 * (a - b),
            flag: if boundary.contains(&m) {
                SiteFlag::Boundary
            } else {
                SiteFlag::Bulk
            },
        })
        .collect();
    Ok(QuantumWinding {
        profile: WindingProfile {
            method: WindingMethod::Quantum,
            records,
        },
        w1,
        w2,
        imag_residual: i1.max(i2),
    })
}

pub fn quantum_winding_default(space: SpinSpace, k: KickParams) -> Result<QuantumWinding> {
    quantum_winding_profile(space, k, DEFAULT_EPS_TOL)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiralDisplacementSeries {
    pub m: i64,
    pub frame: Timeframe,
    /// C(m, n) for n = 0…N; the n = 0 entry is the reference value 0.
    pub values: Vec<f64>,
}

impl ChiralDisplacementSeries {
    /// Mean over n = 1…N.
    pub fn time_average(&self) -> f64 {
        let tail = &self.values[1..];
        if tail.is_empty() {
            0.0
        } else {
            tail.iter().sum::<f64>() / tail.len() as f64
        }
    }
}

/// C(m, n) = Σ_s ⟨m,s| U⁻ⁿ (Jz ⊗ σz) Uⁿ |m,s⟩, by repeated application of U.
pub fn chiral_displacement(
    space: SpinSpace,
    k: KickParams,
    frame: Timeframe,
    m: i64,
    n_max: usize,
) -> Result<ChiralDisplacementSeries> {
    if !frame.is_chiral() {
        return Err(Error::NotChiralFrame);
    }
    if !space.contains(m) {
        return Err(Error::Domain(format!("m = {m} outside [-{0}, {0}]", space.j())));
    }
    let u = build_floquet(space, k, frame)?;
    let z = jz_sigma_z_diagonal(space);
    let base = 2 * space.m_index(m);
    let mut states: Vec<Array1<C64>> = (0..2)
        .map(|s| {
            let mut v = Array1::zeros(space.d_total());
            v[base + s] = linalg::ONE;
            v
        })
        .collect();
    let expect = |states: &[Array1<C64>]| -> f64 {
        states
            .iter()
            .map(|v| v.iter().zip(z.iter()).map(|(a, zr)| zr * a.norm_sqr()).sum::<f64>())
            .sum()
    };
    let mut values = Vec::with_capacity(n_max + 1);
    values.push(expect(&states));
    for _ in 0..n_max {
        for v in states.iter_mut() {
            *v = u.apply(v);
        }
        values.push(expect(&states));
    }
    Ok(ChiralDisplacementSeries { m, frame, values })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CdRoute {
    /// Repeated multiplication by U for every initial site.
    Propagation,
    /// Closed-form geometric sum over the eigenbasis.
    Spectral,
    /// Propagation up to [`CD_PROPAGATION_LIMIT`] periods, spectral beyond.
    Auto,
}

/// Time-averaged C over n = 1…N for every composite index, by propagation.
fn averaged_by_propagation(u: &Array2<C64>, z: &Array1<f64>, n_max: usize) -> Array1<f64> {
    let dim = u.nrows();
    let mut acc = Array1::<f64>::zeros(dim);
    let mut psi = u.clone();
    for step in 1..=n_max {
        if step > 1 {
            psi = u.dot(&psi);
        }
        for ((r, c), x) in psi.indexed_iter() {
            acc[c] += z[r] * x.norm_sqr();
        }
    }
    acc / n_max as f64
}

/// (1/N) Σ_{n=1}^{N} e^{inθ} via the Dirichlet kernel.
fn geometric_mean_phase(theta: f64, n_max: usize) -> C64 {
    let theta = crate::spectral::wrap_branch(theta);
    if theta.abs() < 1e-14 {
        return linalg::ONE;
    }
    let n = n_max as f64;
    let amp = (0.5 * n * theta).sin() / (n * (0.5 * theta).sin());
    C64::from_polar(amp, 0.5 * (n + 1.0) * theta)
}

/// Time-averaged C over n = 1…N for every composite index, in closed form.
pub(crate) fn averaged_by_spectrum(spec: &FloquetSpectrum, z: &Array1<f64>, n_max: usize) -> Array1<f64> {
    let v = spec.eigenvectors();
    let eps = spec.quasienergies();
    let zc = z.mapv(|x| C64::new(x, 0.0));
    let zv = v * &zc.view().insert_axis(Axis(1));
    let mut g = linalg::dagger(v).dot(&zv);
    for ((a, b), x) in g.indexed_iter_mut() {
        *x *= geometric_mean_phase(eps[a] - eps[b], n_max);
    }
    let vg = v.dot(&g);
    Array1::from_iter(
        vg.outer_iter()
            .zip(v.outer_iter())
            .map(|(row, vr)| row.iter().zip(vr).map(|(x, y)| (x * y.conj()).re).sum::<f64>()),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CdWindingProfile {
    pub profile: WindingProfile,
    pub n_periods: usize,
    pub route: CdRoute,
    /// Time-averaged C per m in the two chiral frames, ascending m.
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
}

/// Winding estimates from the time-averaged chiral displacement,
/// w₀ = −(C̄₁ + C̄₂)/2 and w_π = −(C̄₁ − C̄₂)/2.
pub fn cd_winding_profile(space: SpinSpace, k: KickParams, n_periods: usize, route: CdRoute) -> Result<CdWindingProfile> {
    if n_periods == 0 {
        return Err(Error::Domain("at least one period is required".into()));
    }
    let route = match route {
        CdRoute::Auto if n_periods <= CD_PROPAGATION_LIMIT => CdRoute::Propagation,
        CdRoute::Auto => CdRoute::Spectral,
        r => r,
    };
    let z = jz_sigma_z_diagonal(space);
    let mut per_frame = Timeframe::CHIRAL
        .par_iter()
        .map(|&frame| -> Result<Vec<f64>> {
            let avg = match route {
                CdRoute::Spectral => {
                    let spec = FloquetSpectrum::compute(space, k, frame)?;
                    averaged_by_spectrum(&spec, &z, n_periods)
                }
                _ => {
                    let u = build_floquet(space, k, frame)?;
                    averaged_by_propagation(u.matrix(), &z, n_periods)
                }
            };
            Ok((0..space.d_top()).map(|i| avg[2 * i] + avg[2 * i + 1]).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let c2 = per_frame.pop().expect("two frames");
    let c1 = per_frame.pop().expect("two frames");
    let boundary = boundary_sites(space, k);
    let records = space
        .m_values()
        .zip(c1.iter().zip(&c2))
        .map(|(m, (a, b))| WindingRecord {
            m,
            w0: -0.5 * (a + b),
            wpi: -0.5 * (a - b),
            flag: if boundary.contains(&m) {
                SiteFlag::Boundary
            } else {
                SiteFlag::Bulk
            },
        })
        .collect();
    Ok(CdWindingProfile {
        profile: WindingProfile {
            method: WindingMethod::ChiralDisplacement,
            records,
        },
        n_periods,
        route,
        c1,
        c2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn paper() -> KickParams {
        KickParams::new(4.25 * PI, 0.5 * PI).unwrap()
    }

    #[test]
    fn projector_is_an_involution() {
        let s = SpinSpace::new(20).unwrap();
        let spec = FloquetSpectrum::compute(s, paper(), Timeframe::Chiral1).unwrap();
        let fb = flat_band(&spec, DEFAULT_EPS_TOL);
        assert!(fb.involution_residual() < 1e-8);
        assert!(fb.operator().hermiticity_residual() < 1e-8);
        let bulk = bulk_flat_band(&spec, DEFAULT_EPS_TOL);
        assert!(off_diagonal_residual(&bulk) < 1e-8);
    }

    #[test]
    fn marker_diagonal_matches_full_operator() {
        let s = SpinSpace::new(12).unwrap();
        let spec = FloquetSpectrum::compute(s, paper(), Timeframe::Chiral2).unwrap();
        let fb = flat_band(&spec, DEFAULT_EPS_TOL);
        let w = winding_operator(&fb, s).unwrap();
        let (diag, _) = local_marker(fb.operator().matrix(), s);
        for (i, d) in diag.iter().enumerate() {
            let full = w.matrix()[[2 * i, 2 * i]] + w.matrix()[[2 * i + 1, 2 * i + 1]];
            assert!((full.re - d).abs() < 1e-10);
        }
    }

    #[test]
    fn symmetric_combination_vanishes_in_bulk() {
        // The sum of the two orderings cancels site by site; only the
        // antisymmetric combination carries the winding.
        let s = SpinSpace::new(50).unwrap();
        let spec = FloquetSpectrum::compute(s, paper(), Timeframe::Chiral1).unwrap();
        let q = flat_band(&spec, DEFAULT_EPS_TOL).operator().matrix().clone();
        let jz = crate::spin_ops::jz_diagonal(s);
        let n = s.d_total();
        let mut sym = linalg::ZERO;
        let a = 2 * s.m_index(0);
        for (row, sgn) in [(a, 1.0), (a + 1, 1.0)] {
            let mut b = 1 - row % 2;
            while b < n {
                sym += q[[row, b]] * q[[b, row]] * (jz[b] - jz[row]) * (0.5 * sgn);
                b += 2;
            }
        }
        assert!(sym.norm() < 1e-6, "{sym}");
    }

    #[test]
    fn quantum_profile_centre_plateau() {
        let s = SpinSpace::new(50).unwrap();
        let qw = quantum_winding_default(s, paper()).unwrap();
        // at j = 50 the nearest gap closing is only 17 sites away
        let r = qw.profile.at(0).unwrap();
        assert!((r.w0 - 5.0).abs() < 0.2 && (r.wpi + 4.0).abs() < 0.2, "{r:?}");
        assert!(qw.imag_residual < 1e-8);
    }

    #[test]
    fn displacement_starts_at_zero() {
        let s = SpinSpace::new(10).unwrap();
        let cd = chiral_displacement(s, paper(), Timeframe::Chiral1, 3, 5).unwrap();
        assert_eq!(cd.values.len(), 6);
        assert_eq!(cd.values[0], 0.0);
        assert!(chiral_displacement(s, paper(), Timeframe::Original, 0, 5).is_err());
    }

    #[test]
    fn spectral_average_matches_propagation() {
        let s = SpinSpace::new(20).unwrap();
        let z = jz_sigma_z_diagonal(s);
        for frame in Timeframe::CHIRAL {
            let spec = FloquetSpectrum::compute(s, paper(), frame).unwrap();
            let u = build_floquet(s, paper(), frame).unwrap();
            let a = averaged_by_spectrum(&spec, &z, 20);
            let b = averaged_by_propagation(u.matrix(), &z, 20);
            let d = a.iter().zip(&b).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
            assert!(d < 1e-8, "{d}");
            let series = chiral_displacement(s, paper(), frame, -4, 20).unwrap();
            let i = 2 * s.m_index(-4);
            assert!((series.time_average() - (b[i] + b[i + 1])).abs() < 1e-10);
        }
    }

    #[test]
    fn dirichlet_kernel_matches_direct_sum() {
        for theta in [0.0, 1e-9, 0.3, -2.9, 3.14159] {
            let direct: C64 = (1..=37).map(|n| C64::from_polar(1.0, n as f64 * theta)).sum::<C64>() / 37.0;
            assert!((direct - geometric_mean_phase(theta, 37)).norm() < 1e-12);
        }
    }

    #[test]
    fn cd_route_selection() {
        let s = SpinSpace::new(6).unwrap();
        let a = cd_winding_profile(s, paper(), 10, CdRoute::Auto).unwrap();
        assert_eq!(a.route, CdRoute::Propagation);
        let b = cd_winding_profile(s, paper(), 10, CdRoute::Spectral).unwrap();
        for (x, y) in a.profile.records.iter().zip(&b.profile.records) {
            assert!((x.w0 - y.w0).abs() < 1e-9 && (x.wpi - y.wpi).abs() < 1e-9);
        }
        assert_eq!(cd_winding_profile(s, paper(), 100, CdRoute::Auto).unwrap().route, CdRoute::Spectral);
        assert!(cd_winding_profile(s, paper(), 0, CdRoute::Auto).is_err());
    }
}
