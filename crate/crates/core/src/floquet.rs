//! One-period Floquet operators of the on-resonance spin-1/2 double kicked
//! top, in the original and the two chiral-symmetrized timeframes, plus the
//! quantum-walk gate decomposition of each kick.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::prelude::*;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::spin_ops::{
    build_angular_momentum, jz_sigma_z_diagonal, top_spin_product, Axis, BasisTag,
    ComplexOperator, SpinSpace,
};

const HERMITIAN_TOL: f64 = 1e-10;

/// Scaled kick strengths κ₁, κ₂ (radians). The bare strengths are κ/j.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KickParams {
    kappa1: f64,
    kappa2: f64,
}

impl KickParams {
    pub fn new(kappa1: f64, kappa2: f64) -> Result<Self> {
        for (name, v) in [("kappa1", kappa1), ("kappa2", kappa2)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Domain(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(Self { kappa1, kappa2 })
    }

    pub fn kappa1(&self) -> f64 {
        self.kappa1
    }

    pub fn kappa2(&self) -> f64 {
        self.kappa2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Timeframe {
    Original,
    Chiral1,
    Chiral2,
}

impl Timeframe {
    pub const CHIRAL: [Timeframe; 2] = [Timeframe::Chiral1, Timeframe::Chiral2];

    pub fn is_chiral(self) -> bool {
        self != Timeframe::Original
    }
}

impl fmt::Display for Timeframe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Timeframe::Original => "original",
            Timeframe::Chiral1 => "chiral1",
            Timeframe::Chiral2 => "chiral2",
        })
    }
}

impl FromStr for Timeframe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "original" | "0" => Ok(Timeframe::Original),
            "chiral1" | "1" => Ok(Timeframe::Chiral1),
            "chiral2" | "2" => Ok(Timeframe::Chiral2),
            _ => Err(Error::Domain(format!("unknown timeframe '{s}'"))),
        }
    }
}

/// `exp(−i · scale · H)` for Hermitian `H`, via its spectral decomposition.
pub fn hermitian_exponential(h: &ComplexOperator, scale: f64) -> Result<ComplexOperator> {
    let residual = h.hermiticity_residual();
    if residual > HERMITIAN_TOL {
        return Err(Error::NotHermitian { residual });
    }
    let (values, vectors) = linalg::eigh(h.matrix())?;
    let phases = values.mapv(|e| C64::from_polar(1.0, -scale * e));
    ComplexOperator::new(h.tag(), linalg::reassemble(&vectors, &phases))
}

/// Which kick generator: `Jx ⊗ σx` (first kick) or `Jy ⊗ σy` (second kick).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kick {
    First,
    Second,
}

/// Cached eigendecomposition of one kick generator.
pub struct KickGenerator {
    values: Array1<f64>,
    vectors: Array2<C64>,
}

impl KickGenerator {
    fn compute(space: SpinSpace, kick: Kick) -> Result<Self> {
        let h = match kick {
            Kick::First => top_spin_product(space, Axis::X, Axis::X),
            Kick::Second => top_spin_product(space, Axis::Y, Axis::Y),
        };
        let (values, vectors) = linalg::eigh(h.matrix())?;
        Ok(Self { values, vectors })
    }

    /// `exp(−i · scale · G)`.
    pub fn exp(&self, scale: f64) -> Array2<C64> {
        let phases = self.values.mapv(|e| C64::from_polar(1.0, -scale * e));
        linalg::reassemble(&self.vectors, &phases)
    }
}

type GeneratorSlot = Arc<OnceLock<std::result::Result<Arc<KickGenerator>, Error>>>;

/// Process-wide generator cache; each (j, kick) entry is initialized once.
pub fn kick_generator(space: SpinSpace, kick: Kick) -> Result<Arc<KickGenerator>> {
    static CACHE: OnceLock<Mutex<HashMap<(u32, Kick), GeneratorSlot>>> = OnceLock::new();
    let slot = {
        let mut map = CACHE
            .get_or_init(Default::default)
            .lock()
            .unwrap_or_else(|e| e.into_inner());
        map.entry((space.j(), kick)).or_default().clone()
    };
    slot.get_or_init(|| KickGenerator::compute(space, kick).map(Arc::new))
        .clone()
}

/// Single kick unitary `exp(−i (κ/j) G)`, optionally with a fraction of κ.
fn kick_unitary(space: SpinSpace, kick: Kick, kappa: f64) -> Result<Array2<C64>> {
    if kappa == 0.0 {
        return Ok(linalg::identity(space.d_total()));
    }
    Ok(kick_generator(space, kick)?.exp(kappa / space.jf()))
}

/// One-period Floquet operator in the requested timeframe.
pub fn build_floquet(space: SpinSpace, k: KickParams, frame: Timeframe) -> Result<ComplexOperator> {
    let (k1, k2) = (k.kappa1, k.kappa2);
    let mat = match frame {
        Timeframe::Original => {
            let first = kick_unitary(space, Kick::First, k1)?;
            let second = kick_unitary(space, Kick::Second, k2)?;
            second.dot(&first)
        }
        Timeframe::Chiral1 => {
            let half = kick_unitary(space, Kick::First, 0.5 * k1)?;
            let full = kick_unitary(space, Kick::Second, k2)?;
            half.dot(&full).dot(&half)
        }
        Timeframe::Chiral2 => {
            let half = kick_unitary(space, Kick::Second, 0.5 * k2)?;
            let full = kick_unitary(space, Kick::First, k1)?;
            half.dot(&full).dot(&half)
        }
    };
    Ok(ComplexOperator::composite(mat))
}

/// Chiral operator `Γ = 1 ⊗ σz` as a sign per composite index.
pub(crate) fn chiral_signs(dim: usize) -> impl Iterator<Item = f64> {
    (0..dim).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
}

/// `‖Γ U Γ − U†‖_max` with `Γ = 1 ⊗ σz`.
pub fn chiral_symmetry_residual(u: &ComplexOperator, frame: Timeframe) -> Result<f64> {
    if !frame.is_chiral() {
        return Err(Error::NotChiralFrame);
    }
    if u.tag() != BasisTag::Composite {
        return Err(Error::DimensionMismatch(
            "chiral symmetry needs a composite operator".into(),
        ));
    }
    let m = u.matrix();
    let signs: Vec<f64> = chiral_signs(u.dim()).collect();
    let mut r = 0.0f64;
    for ((a, b), z) in m.indexed_iter() {
        let conj = signs[a] * signs[b] * z;
        r = r.max((conj - m[[b, a]].conj()).norm());
    }
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateLabel {
    /// Spin-1/2 coin toss `M(α, β)`.
    Coin { alpha: f64, beta: f64 },
    Rx(f64),
    Ry(f64),
    Rz(f64),
    /// `exp(−i c Jz σz)`, the spin-conditional rotation about z.
    ConditionalRotation(f64),
}

impl fmt::Display for GateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateLabel::Coin { alpha, beta } => write!(f, "M({alpha}, {beta})"),
            GateLabel::Rx(a) => write!(f, "Rx({a})"),
            GateLabel::Ry(a) => write!(f, "Ry({a})"),
            GateLabel::Rz(a) => write!(f, "Rz({a})"),
            GateLabel::ConditionalRotation(c) => write!(f, "exp(-i {c} Jz sz)"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Gate {
    pub label: GateLabel,
    pub op: ComplexOperator,
}

/// Gate factors in application order: `gates[0]` acts first, so the
/// assembled unitary is `gates[n-1] ··· gates[1] gates[0]`.
#[derive(Clone, Debug)]
pub struct GateSequence {
    pub gates: Vec<Gate>,
}

impl GateSequence {
    pub fn product(&self) -> ComplexOperator {
        let dim = self.gates.first().map_or(0, |g| g.op.dim());
        let mat = self
            .gates
            .iter()
            .fold(linalg::identity(dim), |acc, g| g.op.matrix().dot(&acc));
        ComplexOperator::composite(mat)
    }

    pub fn coin_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g.label, GateLabel::Coin { .. }))
            .count()
    }
}

/// Pauli rotation `M(α, β)` on the spin, as a 2×2 matrix.
pub fn coin_matrix(alpha: f64, beta: f64) -> Array2<C64> {
    let (s, c) = (0.5 * alpha).sin_cos();
    array![
        [C64::new(c, 0.0), C64::from_polar(s, -beta)],
        [-C64::from_polar(s, beta), C64::new(c, 0.0)]
    ]
}

/// Top rotation `exp(−i a J_axis)` on the top space.
pub fn top_rotation(space: SpinSpace, axis: Axis, angle: f64) -> Result<ComplexOperator> {
    hermitian_exponential(&build_angular_momentum(space, axis), angle)
}

fn lift_top(op: &ComplexOperator) -> ComplexOperator {
    ComplexOperator::composite(linalg::kron(op.matrix(), &linalg::identity(2)))
}

fn lift_spin(space: SpinSpace, m: Array2<C64>) -> ComplexOperator {
    ComplexOperator::composite(linalg::kron(&linalg::identity(space.d_top()), &m))
}

fn conditional_rotation(space: SpinSpace, c: f64) -> ComplexOperator {
    let diag = jz_sigma_z_diagonal(space).mapv(|q| C64::from_polar(1.0, -c * q));
    ComplexOperator::composite(Array2::from_diag(&diag))
}

/// Gate decomposition of the original-frame Floquet operator: each kick is a
/// coin toss, a top rotation, a spin-conditional z rotation, the inverse top
/// rotation and the inverse coin toss.
pub fn walk_decomposition(space: SpinSpace, k: KickParams) -> Result<GateSequence> {
    let j = space.jf();
    let mut gates = Vec::with_capacity(10);
    let coin = |alpha: f64, beta: f64| Gate {
        label: GateLabel::Coin { alpha, beta },
        op: lift_spin(space, coin_matrix(alpha, beta)),
    };
    let rot = |axis: Axis, a: f64| -> Result<Gate> {
        let label = match axis {
            Axis::X => GateLabel::Rx(a),
            Axis::Y => GateLabel::Ry(a),
            Axis::Z => GateLabel::Rz(a),
        };
        Ok(Gate {
            label,
            op: lift_top(&top_rotation(space, axis, a)?),
        })
    };
    let cond = |c: f64| Gate {
        label: GateLabel::ConditionalRotation(c),
        op: conditional_rotation(space, c),
    };

    // first kick, exp(−i κ₁ Jx σx / j)
    gates.push(coin(FRAC_PI_2, 0.0));
    gates.push(rot(Axis::Y, -FRAC_PI_2)?);
    gates.push(cond(k.kappa1 / j));
    gates.push(rot(Axis::Y, FRAC_PI_2)?);
    gates.push(coin(-FRAC_PI_2, 0.0));
    // second kick, exp(−i κ₂ Jy σy / j)
    gates.push(coin(FRAC_PI_2, FRAC_PI_2));
    gates.push(rot(Axis::X, FRAC_PI_2)?);
    gates.push(cond(k.kappa2 / j));
    gates.push(rot(Axis::X, -FRAC_PI_2)?);
    gates.push(coin(-FRAC_PI_2, FRAC_PI_2));

    Ok(GateSequence { gates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::unitary_eigensystem;
    use std::f64::consts::PI;

    fn space(j: u32) -> SpinSpace {
        SpinSpace::new(j).unwrap()
    }

    fn paper() -> KickParams {
        KickParams::new(4.25 * PI, 0.5 * PI).unwrap()
    }

    #[test]
    fn kick_params_validation() {
        assert!(KickParams::new(-1.0, 0.0).is_err());
        assert!(KickParams::new(f64::NAN, 0.0).is_err());
        assert!(KickParams::new(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn exponential_at_zero_scale_is_identity() {
        let h = top_spin_product(space(3), Axis::X, Axis::X);
        let u = hermitian_exponential(&h, 0.0).unwrap();
        assert!(linalg::max_abs_diff(u.matrix(), &linalg::identity(14)) < 1e-14);
    }

    #[test]
    fn exponential_of_diagonal_generator() {
        let h = top_spin_product(space(1), Axis::Z, Axis::Z);
        let u = hermitian_exponential(&h, PI).unwrap();
        // diagonal of Jz σz is (-1, 1, 0, 0, 1, -1)
        for (i, q) in [-1.0f64, 1.0, 0.0, 0.0, 1.0, -1.0].iter().enumerate() {
            assert!((u.matrix()[[i, i]] - C64::from_polar(1.0, -PI * q)).norm() < 1e-14);
        }
        assert!(linalg::max_abs(&(u.matrix() - &Array2::from_diag(&u.matrix().diag().to_owned()))) < 1e-14);
    }

    #[test]
    fn exponential_group_inverse() {
        let h = top_spin_product(space(50), Axis::X, Axis::X);
        let a = 4.25 * PI / 50.0;
        let fwd = hermitian_exponential(&h, a).unwrap();
        let back = hermitian_exponential(&h, -a).unwrap();
        let p = fwd.compose(&back).unwrap();
        assert!(linalg::max_abs_diff(p.matrix(), &linalg::identity(202)) < 1e-12);
    }

    #[test]
    fn exponential_rejects_non_hermitian() {
        let mut m = linalg::identity(2);
        m[[0, 1]] = C64::new(1.0, 0.0);
        let op = ComplexOperator::new(BasisTag::Spin, m).unwrap();
        match hermitian_exponential(&op, 1.0) {
            Err(Error::NotHermitian { residual }) => assert!((residual - 1.0).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_kicks_give_identity() {
        let k = KickParams::new(0.0, 0.0).unwrap();
        for frame in [Timeframe::Original, Timeframe::Chiral1, Timeframe::Chiral2] {
            let u = build_floquet(space(50), k, frame).unwrap();
            assert!(linalg::max_abs_diff(u.matrix(), &linalg::identity(202)) < 1e-14);
        }
    }

    #[test]
    fn single_kick_spin_one_quasienergies() {
        let k = KickParams::new(PI, 0.0).unwrap();
        let u = build_floquet(space(1), k, Timeframe::Original).unwrap();
        let spec = unitary_eigensystem(&u).unwrap();
        // eigenvalues of Jx σx for j = 1 are {-1, 0, 0, 1, 1, -1}
        let mut zero = 0;
        let mut pi = 0;
        for &e in spec.quasienergies() {
            if e.abs() < 1e-10 {
                zero += 1;
            } else if (PI - e.abs()) < 1e-10 {
                pi += 1;
            }
        }
        assert_eq!((zero, pi), (2, 4));
    }

    #[test]
    fn unitarity_and_chiral_relation() {
        let s = space(50);
        for frame in [Timeframe::Original, Timeframe::Chiral1, Timeframe::Chiral2] {
            let u = build_floquet(s, paper(), frame).unwrap();
            assert!(u.unitarity_residual() < 1e-10);
            if frame.is_chiral() {
                assert!(chiral_symmetry_residual(&u, frame).unwrap() < 1e-10);
            } else {
                assert_eq!(chiral_symmetry_residual(&u, frame), Err(Error::NotChiralFrame));
            }
        }
    }

    #[test]
    fn chiral_residual_trivial_and_broken() {
        let s = space(50);
        let k0 = KickParams::new(0.0, 0.0).unwrap();
        let u = build_floquet(s, k0, Timeframe::Chiral2).unwrap();
        assert!(chiral_symmetry_residual(&u, Timeframe::Chiral2).unwrap() < 1e-15);

        let u = build_floquet(s, paper(), Timeframe::Chiral1).unwrap();
        let kick = lift_spin(s, Array2::from_diag(&array![
            C64::from_polar(1.0, -0.1),
            C64::from_polar(1.0, 0.1)
        ]));
        let broken = kick.compose(&u).unwrap();
        assert!(chiral_symmetry_residual(&broken, Timeframe::Chiral1).unwrap() > 0.01);
    }

    #[test]
    fn walk_decomposition_reassembles() {
        let s = space(50);
        let seq = walk_decomposition(s, paper()).unwrap();
        assert_eq!(seq.coin_count(), 4);
        assert_eq!(
            seq.gates
                .iter()
                .filter(|g| matches!(g.label, GateLabel::ConditionalRotation(_)))
                .count(),
            2
        );
        let direct = build_floquet(s, paper(), Timeframe::Original).unwrap();
        assert!(seq.product().max_abs_diff(&direct) < 1e-9);
    }

    #[test]
    fn walk_decomposition_zero_kicks() {
        let s = space(10);
        let seq = walk_decomposition(s, KickParams::new(0.0, 0.0).unwrap()).unwrap();
        assert!(linalg::max_abs_diff(seq.product().matrix(), &linalg::identity(42)) < 1e-12);
    }

    #[test]
    fn y_rotation_from_x_and_z() {
        let s = space(20);
        let ry = top_rotation(s, Axis::Y, 0.7).unwrap();
        let built = top_rotation(s, Axis::Z, FRAC_PI_2)
            .unwrap()
            .compose(&top_rotation(s, Axis::X, 0.7).unwrap())
            .unwrap()
            .compose(&top_rotation(s, Axis::Z, -FRAC_PI_2).unwrap())
            .unwrap();
        assert!(ry.max_abs_diff(&built) < 1e-11);
    }

    #[test]
    fn timeframe_parsing() {
        assert_eq!("Chiral1".parse::<Timeframe>().unwrap(), Timeframe::Chiral1);
        assert!("sideways".parse::<Timeframe>().is_err());
    }
}
