//! Spin-j angular momentum matrices, Pauli matrices and the composite
//! top ⊗ spin-1/2 space.
//!
//! Index convention, fixed for the whole crate: top states are ordered
//! m = -j, ..., +j and the composite index of |m, s⟩ is `2 (m + j) + s` with
//! s = 0 for ↑ and s = 1 for ↓.

use std::fmt;

use ndarray::prelude::*;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpinSpace {
    j: u32,
}

impl SpinSpace {
    pub fn new(j: u32) -> Result<Self> {
        if j == 0 {
            return Err(Error::InvalidSpin("0".into()));
        }
        Ok(Self { j })
    }

    /// Accepts a real spin value; half-integers are rejected because the
    /// resonance condition needs integer m.
    pub fn from_real(j: f64) -> Result<Self> {
        if !j.is_finite() || j < 1.0 || j.fract() != 0.0 || j > u32::MAX as f64 {
            return Err(Error::InvalidSpin(j.to_string()));
        }
        Self::new(j as u32)
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn jf(&self) -> f64 {
        self.j as f64
    }

    pub fn d_top(&self) -> usize {
        2 * self.j as usize + 1
    }

    pub fn d_total(&self) -> usize {
        2 * self.d_top()
    }

    pub fn m_values(&self) -> std::ops::RangeInclusive<i64> {
        let j = self.j as i64;
        -j..=j
    }

    pub fn contains(&self, m: i64) -> bool {
        m.unsigned_abs() <= self.j as u64
    }

    pub fn m_index(&self, m: i64) -> usize {
        debug_assert!(self.contains(m));
        (m + self.j as i64) as usize
    }

    pub fn composite_index(&self, m: i64, spin: Spin) -> usize {
        2 * self.m_index(m) + spin.index()
    }
}

impl fmt::Display for SpinSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "j = {}", self.j)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn index(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Raise,
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisTag {
    Top,
    Spin,
    Composite,
}

/// Dense complex operator tagged with the space it acts on.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexOperator {
    tag: BasisTag,
    mat: Array2<C64>,
}

impl ComplexOperator {
    pub fn new(tag: BasisTag, mat: Array2<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "operator must be square, got {:?}",
                mat.dim()
            )));
        }
        if tag == BasisTag::Spin && mat.nrows() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "spin operator must be 2x2, got {:?}",
                mat.dim()
            )));
        }
        Ok(Self { tag, mat })
    }

    pub(crate) fn composite(mat: Array2<C64>) -> Self {
        debug_assert_eq!(mat.nrows(), mat.ncols());
        Self {
            tag: BasisTag::Composite,
            mat,
        }
    }

    pub fn identity(tag: BasisTag, dim: usize) -> Self {
        Self {
            tag,
            mat: linalg::identity(dim),
        }
    }

    pub fn tag(&self) -> BasisTag {
        self.tag
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self {
            tag: self.tag,
            mat: linalg::dagger(&self.mat),
        }
    }

    /// Operator product `self · rhs`.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        if self.tag != rhs.tag || self.dim() != rhs.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {:?}({}) by {:?}({})",
                self.tag,
                self.dim(),
                rhs.tag,
                rhs.dim()
            )));
        }
        Ok(Self {
            tag: self.tag,
            mat: self.mat.dot(&rhs.mat),
        })
    }

    pub fn apply(&self, v: &Array1<C64>) -> Array1<C64> {
        self.mat.dot(v)
    }

    pub fn hermiticity_residual(&self) -> f64 {
        linalg::hermiticity_residual(&self.mat)
    }

    pub fn unitarity_residual(&self) -> f64 {
        linalg::unitarity_residual(&self.mat)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        linalg::max_abs_diff(&self.mat, &other.mat)
    }
}

fn ladder_element(j: f64, m: f64, sign: Ladder) -> f64 {
    match sign {
        Ladder::Raise => ((j - m) * (j + m + 1.0)).sqrt(),
        Ladder::Lower => ((j + m) * (j - m + 1.0)).sqrt(),
    }
}

/// J₊ or J₋ on the top space: ⟨m±1|J±|m⟩ = √((j∓m)(j±m+1)).
pub fn build_ladder(space: SpinSpace, sign: Ladder) -> ComplexOperator {
    let d = space.d_top();
    let j = space.jf();
    let mut mat = Array2::zeros((d, d));
    for m in space.m_values() {
        let col = space.m_index(m);
        let target = match sign {
            Ladder::Raise => m + 1,
            Ladder::Lower => m - 1,
        };
        if space.contains(target) {
            let row = space.m_index(target);
            mat[[row, col]] = C64::new(ladder_element(j, m as f64, sign), 0.0);
        }
    }
    ComplexOperator {
        tag: BasisTag::Top,
        mat,
    }
}

pub fn build_angular_momentum(space: SpinSpace, axis: Axis) -> ComplexOperator {
    let mat = match axis {
        Axis::Z => {
            Array2::from_diag(&Array1::from_iter(space.m_values().map(|m| C64::new(m as f64, 0.0))))
        }
        Axis::X | Axis::Y => {
            let jp = build_ladder(space, Ladder::Raise).mat;
            let jm = build_ladder(space, Ladder::Lower).mat;
            if axis == Axis::X {
                (jp + jm).mapv(|z| z * 0.5)
            } else {
                // (J₊ − J₋) / 2i
                (jp - jm).mapv(|z| z * C64::new(0.0, -0.5))
            }
        }
    };
    ComplexOperator {
        tag: BasisTag::Top,
        mat,
    }
}

pub fn pauli_matrix(axis: Axis) -> ComplexOperator {
    let i = C64::new(0.0, 1.0);
    let mat = match axis {
        Axis::X => array![[ZERO, ONE], [ONE, ZERO]],
        Axis::Y => array![[ZERO, -i], [i, ZERO]],
        Axis::Z => array![[ONE, ZERO], [ZERO, -ONE]],
    };
    ComplexOperator {
        tag: BasisTag::Spin,
        mat,
    }
}

/// Projector onto one spin-1/2 state, as a spin-only operator.
pub fn spin_projector(spin: Spin) -> ComplexOperator {
    let mut mat = Array2::zeros((2, 2));
    mat[[spin.index(), spin.index()]] = ONE;
    ComplexOperator {
        tag: BasisTag::Spin,
        mat,
    }
}

/// `top_op ⊗ spin_op` under the crate-wide index convention.
pub fn compose_top_spin(
    top_op: &ComplexOperator,
    spin_op: &ComplexOperator,
) -> Result<ComplexOperator> {
    if top_op.tag != BasisTag::Top {
        return Err(Error::DimensionMismatch(format!(
            "first factor must be a top operator, got {:?}",
            top_op.tag
        )));
    }
    if spin_op.tag != BasisTag::Spin || spin_op.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "second factor must be a 2x2 spin operator, got {:?} of dim {}",
            spin_op.tag,
            spin_op.dim()
        )));
    }
    if top_op.dim() % 2 == 0 {
        return Err(Error::DimensionMismatch(format!(
            "top operator dimension {} is not 2j+1 for integer j",
            top_op.dim()
        )));
    }
    Ok(ComplexOperator::composite(linalg::kron(&top_op.mat, &spin_op.mat)))
}

/// Composite operator `J_a ⊗ σ_b`.
pub fn top_spin_product(space: SpinSpace, top_axis: Axis, spin_axis: Axis) -> ComplexOperator {
    compose_top_spin(&build_angular_momentum(space, top_axis), &pauli_matrix(spin_axis))
        .expect("well-formed factors")
}

/// Diagonal of `Jz ⊗ σz` in composite order.
pub fn jz_sigma_z_diagonal(space: SpinSpace) -> Array1<f64> {
    Array1::from_iter(
        space
            .m_values()
            .flat_map(|m| [m as f64, -(m as f64)]),
    )
}

/// Diagonal of `Jz ⊗ 1` in composite order.
pub fn jz_diagonal(space: SpinSpace) -> Array1<f64> {
    Array1::from_iter(space.m_values().flat_map(|m| [m as f64, m as f64]))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvatureReport {
    pub j: u32,
    pub max_abs_diff_over_j: f64,
}

impl CurvatureReport {
    pub fn bound(&self) -> f64 {
        (2.0 / self.j as f64).sqrt()
    }
}

/// Compares the mean-field hopping √(j²−m²) with the exact ladder factor.
pub fn curvature_factor_deviation(space: SpinSpace) -> CurvatureReport {
    let j = space.jf();
    let worst = space
        .m_values()
        .filter(|&m| m < space.j() as i64)
        .map(|m| {
            let m = m as f64;
            ((j * j - m * m).sqrt() - ((j - m) * (j + m + 1.0)).sqrt()).abs()
        })
        .fold(0.0f64, f64::max);
    CurvatureReport {
        j: space.j(),
        max_abs_diff_over_j: worst / j,
    }
}
