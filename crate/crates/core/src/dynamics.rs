//! Wave-packet probes, their stroboscopic evolution and localization measures.

use std::f64::consts::PI;

use ndarray::prelude::*;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::floquet::{chiral_signs, KickParams, Timeframe};
use crate::linalg;
use crate::spectral::FloquetSpectrum;
use crate::spin_ops::{ComplexOperator, SpinSpace};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ProbeSpin {
    Up,
    Down,
    /// Normalized internally.
    Superposition { up: C64, down: C64 },
}

impl ProbeSpin {
    fn weights(self) -> Result<(C64, C64)> {
        let (a, b) = match self {
            ProbeSpin::Up => (linalg::ONE, linalg::ZERO),
            ProbeSpin::Down => (linalg::ZERO, linalg::ONE),
            ProbeSpin::Superposition { up, down } => (up, down),
        };
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Domain("spin superposition has zero norm".into()));
        }
        Ok((a / n, b / n))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeState {
    pub m0: i64,
    pub delta_m: f64,
    pub spin: ProbeSpin,
    #[serde(skip)]
    pub amplitudes: Array1<C64>,
}

/// Normalized Gaussian ∝ exp(−(m − m₀)²/(2Δm²)) ⊗ spin, on the composite basis.
pub fn gaussian_probe(space: SpinSpace, m0: i64, delta_m: f64, spin: ProbeSpin) -> Result<ProbeState> {
    if !space.contains(m0) {
        return Err(Error::Domain(format!("m0 = {m0} outside [-{0}, {0}]", space.j())));
    }
    if !(delta_m > 0.0 && delta_m.is_finite()) {
        return Err(Error::Domain(format!("delta_m must be positive, got {delta_m}")));
    }
    let (a, b) = spin.weights()?;
    let env: Vec<f64> = space
        .m_values()
        .map(|m| (-((m - m0) as f64).powi(2) / (2.0 * delta_m * delta_m)).exp())
        .collect();
    let norm = env.iter().map(|x| x * x).sum::<f64>().sqrt();
    let amplitudes = Array1::from_iter(env.iter().flat_map(|&g| [a * (g / norm), b * (g / norm)]));
    Ok(ProbeState {
        m0,
        delta_m,
        spin,
        amplitudes,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionRecord {
    pub m_values: Vec<i64>,
    /// Rows are sites m, columns steps n = 0…N.
    pub p_up: Array2<f64>,
    pub p_down: Array2<f64>,
}

impl EvolutionRecord {
    pub fn steps(&self) -> usize {
        self.p_up.ncols().saturating_sub(1)
    }

    /// Spin-summed site distribution after step n.
    pub fn site_distribution(&self, n: usize) -> Array1<f64> {
        &self.p_up.column(n) + &self.p_down.column(n)
    }

    /// Largest |Σ p − 1| over all steps.
    pub fn norm_residual(&self) -> f64 {
        (0..self.p_up.ncols())
            .map(|n| (self.site_distribution(n).sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn mean_m(&self, n: usize) -> f64 {
        let p = self.site_distribution(n);
        self.m_values.iter().zip(p.iter()).map(|(&m, q)| m as f64 * q).sum()
    }

    /// Variance of m in the spin-summed distribution after step n.
    pub fn site_variance(&self, n: usize) -> f64 {
        let p = self.site_distribution(n);
        let mean = self.mean_m(n);
        self.m_values
            .iter()
            .zip(p.iter())
            .map(|(&m, q)| (m as f64 - mean).powi(2) * q)
            .sum()
    }

    /// Probability within `half_width` sites of `center` after step n.
    pub fn window_probability(&self, n: usize, center: i64, half_width: i64) -> f64 {
        let p = self.site_distribution(n);
        self.m_values
            .iter()
            .zip(p.iter())
            .filter(|(&m, _)| (m - center).abs() <= half_width)
            .map(|(_, q)| q)
            .sum()
    }
}

pub fn evolve_probe(u: &ComplexOperator, psi0: &ProbeState, steps: usize) -> Result<EvolutionRecord> {
    let dim = u.dim();
    if psi0.amplitudes.len() != dim || dim % 2 != 0 {
        return Err(Error::DimensionMismatch(format!(
            "probe of length {} for operator of dimension {dim}",
            psi0.amplitudes.len()
        )));
    }
    let d_top = dim / 2;
    let j = (d_top as i64 - 1) / 2;
    let mut p_up = Array2::zeros((d_top, steps + 1));
    let mut p_down = Array2::zeros((d_top, steps + 1));
    let mut psi = psi0.amplitudes.clone();
    for n in 0..=steps {
        if n > 0 {
            psi = u.apply(&psi);
        }
        for i in 0..d_top {
            p_up[[i, n]] = psi[2 * i].norm_sqr();
            p_down[[i, n]] = psi[2 * i + 1].norm_sqr();
        }
    }
    Ok(EvolutionRecord {
        m_values: (-j..=j).collect(),
        p_up,
        p_down,
    })
}

/// Σ_λ |⟨λ|ψ⟩|⁴ over the Floquet eigenbasis.
pub fn ipr(spec: &FloquetSpectrum, psi: &Array1<C64>) -> Result<f64> {
    let v = spec.eigenvectors();
    if psi.len() != v.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "state of length {} for spectrum of dimension {}",
            psi.len(),
            v.nrows()
        )));
    }
    let overlaps = v.t().mapv(|z| z.conj()).dot(psi);
    Ok(overlaps.iter().map(|z| z.norm_sqr().powi(2)).sum())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IprScan {
    pub centers: Vec<i64>,
    pub values: Vec<f64>,
}

impl IprScan {
    /// Interior centers whose IPR exceeds both neighbours.
    pub fn local_maxima(&self) -> Vec<i64> {
        self.values
            .windows(3)
            .zip(self.centers.windows(3))
            .filter(|(v, _)| v[1] > v[0] && v[1] > v[2])
            .map(|(_, c)| c[1])
            .collect()
    }
}

/// IPR of ↑-polarized Gaussian probes centred at each of `centers`.
pub fn ipr_scan(space: SpinSpace, k: KickParams, frame: Timeframe, delta_m: f64, centers: &[i64]) -> Result<IprScan> {
    let spec = FloquetSpectrum::compute(space, k, frame)?;
    ipr_scan_with(&spec, space, delta_m, centers)
}

pub fn ipr_scan_with(spec: &FloquetSpectrum, space: SpinSpace, delta_m: f64, centers: &[i64]) -> Result<IprScan> {
    let values = centers
        .par_iter()
        .map(|&m0| {
            let probe = gaussian_probe(space, m0, delta_m, ProbeSpin::Up)?;
            ipr(spec, &probe.amplitudes)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IprScan {
        centers: centers.to_vec(),
        values,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpinSupport {
    /// Smallest single-spin weight over chirality-resolved bound states.
    pub bound_min_weight: f64,
    pub n_bound: usize,
    /// ↑ weight of eigenstates at least `margin` away from ε = 0 and ε = π.
    pub generic_up_range: (f64, f64),
    pub n_generic: usize,
}

/// Spin polarization of bound versus generic eigenstates.
///
/// Bound states inside a near-degenerate cluster are resolved by
/// diagonalizing Γ = 1 ⊗ σz compressed onto the cluster, which removes the
/// arbitrary gauge of the eigensolver; a chirality eigenvalue γ gives a
/// single-spin weight (1 + |γ|)/2.
pub fn spin_support(spec: &FloquetSpectrum, eps_tol: f64, margin: f64) -> Result<SpinSupport> {
    let eps = spec.quasienergies();
    let v = spec.eigenvectors();
    let gamma = Array1::from_iter(chiral_signs(spec.dim()).map(|s| C64::new(s, 0.0)));
    let gv = v * &gamma.view().insert_axis(Axis(1));
    let near = |e: f64, target: f64| (e.abs() - target).abs();

    let mut bound_min = 1.0f64;
    let mut n_bound = 0;
    for target in [0.0, PI] {
        let idx: Vec<usize> = (0..eps.len()).filter(|&i| near(eps[i], target) < eps_tol).collect();
        if idx.is_empty() {
            continue;
        }
        let sub = v.select(Axis(1), &idx);
        let gsub = gv.select(Axis(1), &idx);
        let compressed = linalg::dagger(&sub).dot(&gsub);
        let (gam, _) = linalg::eigh(&compressed)?;
        for g in gam.iter() {
            bound_min = bound_min.min(0.5 * (1.0 + g.abs()));
        }
        n_bound += idx.len();
    }

    let mut lo = 1.0f64;
    let mut hi = 0.0f64;
    let mut n_generic = 0;
    for (i, &e) in eps.iter().enumerate() {
        if near(e, 0.0) < margin || near(e, PI) < margin {
            continue;
        }
        let up: f64 = v.column(i).iter().step_by(2).map(|z| z.norm_sqr()).sum();
        lo = lo.min(up);
        hi = hi.max(up);
        n_generic += 1;
    }
    Ok(SpinSupport {
        bound_min_weight: if n_bound == 0 { f64::NAN } else { bound_min },
        n_bound,
        generic_up_range: (lo, hi),
        n_generic,
    })
}
