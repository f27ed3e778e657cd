//! Mean-field (coherent-state) reduction of the chiral Floquet operators.
//!
//! Replacing the top operators by their coherent-state values turns each
//! chiral frame into a spin-1/2 rotation `cos ε − i sin ε (n · σ)` whose
//! parameters depend on the point (m, φ) of the Bloch sphere.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::floquet::{KickParams, Timeframe};
use crate::spin_ops::SpinSpace;
use crate::topology::{SiteFlag, WindingMethod, WindingProfile, WindingRecord};

pub const DEFAULT_N_PHI: usize = 2048;
pub const DEFAULT_SINGULAR_TOL: f64 = 1e-9;
const MAX_N_PHI: usize = 1 << 16;
const MAX_STEP_ANGLE: f64 = PI / 2.0;
const ROUNDING_TOL: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanFieldPoint {
    pub m: f64,
    pub phi: f64,
    pub k1: f64,
    pub k2: f64,
}

/// K₁ = κ₁ √(1 − (m/j)²) cos φ and K₂ = κ₂ √(1 − (m/j)²) sin φ.
pub fn kick_projections(space: SpinSpace, k: KickParams, m: f64, phi: f64) -> Result<(f64, f64)> {
    let j = space.jf();
    if !(m.abs() <= j) {
        return Err(Error::Domain(format!("|m| = {} exceeds j = {j}", m.abs())));
    }
    let r = (1.0 - (m / j) * (m / j)).max(0.0).sqrt();
    let (s, c) = phi.sin_cos();
    Ok((k.kappa1() * r * c, k.kappa2() * r * s))
}

impl MeanFieldPoint {
    pub fn new(space: SpinSpace, k: KickParams, m: f64, phi: f64) -> Result<Self> {
        let (k1, k2) = kick_projections(space, k, m, phi)?;
        Ok(Self { m, phi, k1, k2 })
    }
}

/// ε = arccos(cos K₁ cos K₂), in [0, π]; identical for both chiral frames.
pub fn mf_quasienergy(k1: f64, k2: f64) -> f64 {
    (k1.cos() * k2.cos()).clamp(-1.0, 1.0).acos()
}

/// Unnormalized winding-vector components, i.e. `sin ε · n`.
fn scaled_components(k1: f64, k2: f64, frame: Timeframe) -> Result<(f64, f64)> {
    let (s1, c1) = k1.sin_cos();
    let (s2, c2) = k2.sin_cos();
    match frame {
        Timeframe::Chiral1 => Ok((s1 * c2, s2)),
        Timeframe::Chiral2 => Ok((s1, s2 * c1)),
        Timeframe::Original => Err(Error::NotChiralFrame),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WindingVector {
    pub nx: f64,
    pub ny: f64,
    pub frame: Timeframe,
}

impl WindingVector {
    pub fn norm(&self) -> f64 {
        self.nx.hypot(self.ny)
    }
}

/// Per-frame sin ε as the norm of the unnormalized winding vector.
pub fn frame_sin_eps(k1: f64, k2: f64, frame: Timeframe) -> Result<f64> {
    let (x, y) = scaled_components(k1, k2, frame)?;
    Ok(x.hypot(y))
}

pub fn winding_vector(k1: f64, k2: f64, frame: Timeframe, singular_tol: f64) -> Result<WindingVector> {
    let (x, y) = scaled_components(k1, k2, frame)?;
    let sin_eps = x.hypot(y);
    if sin_eps <= singular_tol {
        return Err(Error::UndefinedAtBoundary { phi: f64::NAN, sin_eps });
    }
    Ok(WindingVector {
        nx: x / sin_eps,
        ny: y / sin_eps,
        frame,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LocalWinding {
    pub winding: i64,
    pub raw: f64,
    pub residual: f64,
    pub n_phi: usize,
}

/// Accumulated angle of n(φ) over one loop φ ∈ [−π, π), or the first
/// singular sample. `None` means the grid was too coarse.
fn accumulate(
    space: SpinSpace,
    k: KickParams,
    m: f64,
    frame: Timeframe,
    n_phi: usize,
    singular_tol: f64,
) -> Result<Option<f64>> {
    let sample = |i: usize| -> Result<f64> {
        let phi = -PI + TAU * (i % n_phi) as f64 / n_phi as f64;
        let (k1, k2) = kick_projections(space, k, m, phi)?;
        let (x, y) = scaled_components(k1, k2, frame)?;
        let sin_eps = x.hypot(y);
        if sin_eps <= singular_tol {
            return Err(Error::UndefinedAtBoundary { phi, sin_eps });
        }
        Ok(y.atan2(x))
    };
    let mut prev = sample(0)?;
    let mut total = 0.0;
    for i in 1..=n_phi {
        let cur = sample(i)?;
        let mut d = cur - prev;
        if d > PI {
            d -= TAU;
        } else if d <= -PI {
            d += TAU;
        }
        if d.abs() > MAX_STEP_ANGLE {
            return Ok(None);
        }
        total += d;
        prev = cur;
    }
    Ok(Some(total))
}

/// Integer winding of n(φ) around the origin at fixed m.
///
/// The φ grid doubles (up to 2¹⁶ samples) until no step turns n by more than
/// π/2.
pub fn mf_local_winding(
    space: SpinSpace,
    k: KickParams,
    m: i64,
    frame: Timeframe,
    n_phi: usize,
) -> Result<LocalWinding> {
    mf_local_winding_with_tol(space, k, m, frame, n_phi, DEFAULT_SINGULAR_TOL)
}

pub fn mf_local_winding_with_tol(
    space: SpinSpace,
    k: KickParams,
    m: i64,
    frame: Timeframe,
    n_phi: usize,
    singular_tol: f64,
) -> Result<LocalWinding> {
    if !space.contains(m) {
        return Err(Error::Domain(format!("m = {m} outside [-{0}, {0}]", space.j())));
    }
    if !frame.is_chiral() {
        return Err(Error::NotChiralFrame);
    }
    let mut n = n_phi.max(8);
    loop {
        if let Some(total) = accumulate(space, k, m as f64, frame, n, singular_tol)? {
            let raw = total / TAU;
            let winding = raw.round();
            let residual = (raw - winding).abs();
            if residual >= ROUNDING_TOL {
                return Err(Error::NonIntegerWinding { value: raw, residual });
            }
            return Ok(LocalWinding {
                winding: winding as i64,
                raw,
                residual,
                n_phi: n,
            });
        }
        if n >= MAX_N_PHI {
            return Err(Error::Domain(format!(
                "winding at m = {m} not resolved with {MAX_N_PHI} samples"
            )));
        }
        n *= 2;
    }
}

/// Per-m (w₀, w_π) from the two frame windings; sites where either winding
/// is undefined are flagged as boundaries.
pub fn mf_winding_profile(space: SpinSpace, k: KickParams, n_phi: usize) -> WindingProfile {
    mf_winding_profile_with_tol(space, k, n_phi, DEFAULT_SINGULAR_TOL)
}

pub fn mf_winding_profile_with_tol(
    space: SpinSpace,
    k: KickParams,
    n_phi: usize,
    singular_tol: f64,
) -> WindingProfile {
    use rayon::prelude::*;
    let records = space
        .m_values()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&m| {
            let w1 = mf_local_winding_with_tol(space, k, m, Timeframe::Chiral1, n_phi, singular_tol);
            let w2 = mf_local_winding_with_tol(space, k, m, Timeframe::Chiral2, n_phi, singular_tol);
            match (w1, w2) {
                (Ok(a), Ok(b)) => WindingRecord {
                    m,
                    w0: 0.5 * (a.winding + b.winding) as f64,
                    wpi: 0.5 * (a.winding - b.winding) as f64,
                    flag: SiteFlag::Bulk,
                },
                _ => WindingRecord {
                    m,
                    w0: f64::NAN,
                    wpi: f64::NAN,
                    flag: SiteFlag::Boundary,
                },
            }
        })
        .collect();
    WindingProfile {
        method: WindingMethod::MeanField,
        records,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GapKind {
    /// Gap closes at ε = 0.
    Zero,
    /// Gap closes at ε = π.
    Pi,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryEntry {
    pub mu: u32,
    pub nu: u32,
    pub kind: GapKind,
    /// Azimuth at which K₁ = μπ and K₂ = νπ simultaneously.
    pub phi: f64,
    pub m_plus: f64,
    pub m_minus: f64,
    pub m_floor_plus: i64,
    pub m_floor_minus: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundarySet {
    pub entries: Vec<BoundaryEntry>,
    /// (μ, ν) = (0, 0) never closes a gap away from the poles; it is left out.
    pub pole_case_excluded: bool,
}

impl BoundarySet {
    pub fn positive_floors(&self) -> Vec<i64> {
        self.entries.iter().map(|e| e.m_floor_plus).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn ratio_sum(k: KickParams, mu: u32, nu: u32) -> f64 {
    let term = |n: u32, kappa: f64| {
        if n == 0 {
            0.0
        } else {
            (n as f64 / kappa).powi(2)
        }
    };
    term(mu, k.kappa1()) + term(nu, k.kappa2())
}

/// Mean-field sites where the ε = 0 or ε = π gap closes:
/// m = ±j √(1 − π²(μ²/κ₁² + ν²/κ₂²)).
pub fn boundary_locations(space: SpinSpace, k: KickParams) -> BoundarySet {
    let j = space.jf();
    let mu_max = (k.kappa1() / PI).floor() as u32;
    let nu_max = (k.kappa2() / PI).floor() as u32;
    let mut entries = Vec::new();
    for mu in 0..=mu_max {
        for nu in 0..=nu_max {
            if mu == 0 && nu == 0 {
                continue;
            }
            let arg = 1.0 - PI * PI * ratio_sum(k, mu, nu);
            if !(arg > 0.0 && arg <= 1.0) {
                continue;
            }
            let m_plus = j * arg.sqrt();
            let phi = (nu as f64 / k.kappa2()).atan2(mu as f64 / k.kappa1());
            entries.push(BoundaryEntry {
                mu,
                nu,
                kind: if (mu + nu) % 2 == 0 { GapKind::Zero } else { GapKind::Pi },
                phi: if nu == 0 { 0.0 } else if mu == 0 { PI / 2.0 } else { phi },
                m_plus,
                m_minus: -m_plus,
                m_floor_plus: m_plus.floor() as i64,
                m_floor_minus: (-m_plus).floor() as i64,
            });
        }
    }
    entries.sort_by(|a, b| a.m_plus.total_cmp(&b.m_plus).then(a.mu.cmp(&b.mu)));
    BoundarySet {
        entries,
        pole_case_excluded: true,
    }
}

/// |π²/(1 − (m/j)²) · (μ²/κ₁² + ν²/κ₂²) − 1| at the entry's m₊.
pub fn boundary_residual(space: SpinSpace, k: KickParams, e: &BoundaryEntry) -> f64 {
    let x = e.m_plus / space.jf();
    (PI * PI / (1.0 - x * x) * ratio_sum(k, e.mu, e.nu) - 1.0).abs()
}
