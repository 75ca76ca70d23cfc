//! Two-qubit density matrices, Bell states, measurements and fidelity.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{Complex, Matrix2, Matrix4, ONE, ZERO};
use crate::noise::KrausSet;

const ALGEBRA_TOL: f64 = 1e-12;
const COMPLETENESS_TOL: f64 = 1e-10;

/// One of the four Bell states.
///
/// `PsiPlus`/`PsiMinus` are `(|00> ± |11>)/√2` and carry parity 0;
/// `PhiPlus`/`PhiMinus` are `(|01> ± |10>)/√2` and carry parity 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BellState {
    PsiPlus,
    PsiMinus,
    PhiPlus,
    PhiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PsiPlus,
        BellState::PsiMinus,
        BellState::PhiPlus,
        BellState::PhiMinus,
    ];

    /// `false` for the ψ family, `true` for the φ family.
    pub fn parity(self) -> bool {
        matches!(self, BellState::PhiPlus | BellState::PhiMinus)
    }

    pub fn amplitudes(self) -> [Complex; 4] {
        let h = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        match self {
            BellState::PsiPlus => [h, ZERO, ZERO, h],
            BellState::PsiMinus => [h, ZERO, ZERO, -h],
            BellState::PhiPlus => [ZERO, h, h, ZERO],
            BellState::PhiMinus => [ZERO, h, -h, ZERO],
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> BellState {
        Self::ALL[index % 4]
    }

    pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> BellState {
        Self::from_index(rng.gen_range(0..4))
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BellState::PsiPlus => "psi+",
            BellState::PsiMinus => "psi-",
            BellState::PhiPlus => "phi+",
            BellState::PhiMinus => "phi-",
        }
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for BellState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.symbol() == s)
            .ok_or_else(|| Error::Parse(format!("unknown Bell state `{s}`")))
    }
}

/// Which qubit of a pair an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QubitPosition {
    First,
    Second,
}

/// Result of a measurement, tagged by basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementOutcome {
    Computational(bool, bool),
    Bell(BellState),
}

/// A validated 4×4 two-qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Matrix4);

impl DensityMatrix {
    /// Validates finiteness, Hermiticity and unit trace.
    ///
    /// Positivity is not re-derived here; every constructor in this crate
    /// produces PSD output by construction (projectors and CPTP maps).
    pub fn new(m: Matrix4) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::InvalidDensityMatrix("non-finite entry".into()));
        }
        let herm = m.max_abs_diff(&m.dagger());
        if herm > ALGEBRA_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = m.trace();
        if (tr - ONE).norm() > ALGEBRA_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} != 1")));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Matrix4 {
        &self.0
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex {
        self.0 .0[row][col]
    }

    /// `|b1 b2><b1 b2|`.
    pub fn computational(b1: bool, b2: bool) -> Self {
        let mut v = [ZERO; 4];
        v[basis_index(b1, b2)] = ONE;
        Self(Matrix4::outer(&v))
    }

    pub fn maximally_mixed() -> Self {
        Self(Matrix4::identity().scale_real(0.25))
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    pub fn trace(&self) -> Complex {
        self.0.trace()
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.0.max_abs_diff(&other.0)
    }

    /// Probabilities of the computational outcomes `00, 01, 10, 11`.
    pub fn computational_probabilities(&self) -> [f64; 4] {
        std::array::from_fn(|i| self.0 .0[i][i].re.max(0.0))
    }

    /// Probabilities of the Bell outcomes in `BellState::ALL` order.
    pub fn bell_probabilities(&self) -> [f64; 4] {
        BellState::ALL.map(|s| self.0.expectation(&s.amplitudes()).re.max(0.0))
    }
}

fn basis_index(b1: bool, b2: bool) -> usize {
    (usize::from(b1) << 1) | usize::from(b2)
}

/// `|s><s|` for a Bell state.
pub fn bell_density(state: BellState) -> DensityMatrix {
    DensityMatrix(Matrix4::outer(&state.amplitudes()))
}

/// `Σ_{i,j} (K_i ⊗ L_j) ρ (K_i ⊗ L_j)†`.
pub fn apply_two_qubit_channel(
    rho: &DensityMatrix,
    left: &KrausSet,
    right: &KrausSet,
) -> Result<DensityMatrix> {
    for set in [left, right] {
        let deviation = set.completeness_deviation();
        if deviation > COMPLETENESS_TOL {
            return Err(Error::IncompleteKraus { deviation });
        }
    }
    let mut out = Matrix4::zero();
    for k in left.operators() {
        for l in right.operators() {
            out = out + rho.0.conjugate_by(&k.kron(l));
        }
    }
    Ok(DensityMatrix(out))
}

/// Applies a single-qubit channel to one qubit, leaving the other untouched.
pub fn apply_channel_on(
    rho: &DensityMatrix,
    set: &KrausSet,
    position: QubitPosition,
) -> Result<DensityMatrix> {
    let id = KrausSet::identity();
    match position {
        QubitPosition::First => apply_two_qubit_channel(rho, set, &id),
        QubitPosition::Second => apply_two_qubit_channel(rho, &id, set),
    }
}

/// `(U ⊗ I) ρ (U ⊗ I)†` or `(I ⊗ U) ρ (I ⊗ U)†`.
///
/// Squareness is guaranteed by [`Matrix2`]; unitarity is not required here.
pub fn single_qubit_apply(rho: &DensityMatrix, op: &Matrix2, position: QubitPosition) -> DensityMatrix {
    let full = match position {
        QubitPosition::First => op.kron(&Matrix2::identity()),
        QubitPosition::Second => Matrix2::identity().kron(op),
    };
    DensityMatrix(rho.0.conjugate_by(&full))
}

/// Like [`single_qubit_apply`] but rejects operators that are not unitary within 1e-12.
pub fn single_qubit_unitary(
    rho: &DensityMatrix,
    op: &Matrix2,
    position: QubitPosition,
) -> Result<DensityMatrix> {
    let deviation = op.unitarity_deviation();
    if deviation > ALGEBRA_TOL {
        return Err(Error::NonUnitary { deviation });
    }
    Ok(single_qubit_apply(rho, op, position))
}

/// `<ψ|ρ|ψ>`.
pub fn fidelity(ideal: BellState, rho: &DensityMatrix) -> f64 {
    rho.0.expectation(&ideal.amplitudes()).re.clamp(0.0, 1.0)
}

fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // u landed on the upper edge; take the last outcome with support
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Joint computational-basis measurement of both qubits.
pub fn measure_computational<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    rng: &mut R,
) -> ((bool, bool), DensityMatrix) {
    let idx = sample_index(&rho.computational_probabilities(), rng);
    let bits = (idx & 2 != 0, idx & 1 != 0);
    (bits, DensityMatrix::computational(bits.0, bits.1))
}

/// Bell-basis measurement; returns the observed Bell state.
pub fn measure_bell<R: Rng + ?Sized>(rho: &DensityMatrix, rng: &mut R) -> BellState {
    BellState::from_index(sample_index(&rho.bell_probabilities(), rng))
}

/// Computational-basis measurement of a single qubit with collapse.
pub fn measure_qubit<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    position: QubitPosition,
    rng: &mut R,
) -> (bool, DensityMatrix) {
    let diag = rho.computational_probabilities();
    let one_of = |i: usize| match position {
        QubitPosition::First => i & 2 != 0,
        QubitPosition::Second => i & 1 != 0,
    };
    let p_one: f64 = (0..4).filter(|&i| one_of(i)).map(|i| diag[i]).sum();
    let p_zero: f64 = (0..4).filter(|&i| !one_of(i)).map(|i| diag[i]).sum();
    let bit = sample_index(&[p_zero, p_one], rng) == 1;
    let norm = if bit { p_one } else { p_zero };

    let mut out = Matrix4::zero();
    for r in (0..4).filter(|&r| one_of(r) == bit) {
        for c in (0..4).filter(|&c| one_of(c) == bit) {
            out.0[r][c] = rho.0 .0[r][c] / norm;
        }
    }
    (bit, DensityMatrix(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{kraus_set, NoiseKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn real_entries(rho: &DensityMatrix) -> [[f64; 4]; 4] {
        std::array::from_fn(|r| std::array::from_fn(|c| rho.entry(r, c).re))
    }

    #[test]
    fn psi_plus_projector_entries() {
        let e = real_entries(&bell_density(BellState::PsiPlus));
        for (r, c) in [(0, 0), (3, 3), (0, 3), (3, 0)] {
            assert!((e[r][c] - 0.5).abs() < 1e-15);
        }
        let nonzero = e.iter().flatten().filter(|x| x.abs() > 1e-15).count();
        assert_eq!(nonzero, 4);
    }

    #[test]
    fn phi_minus_projector_entries() {
        let e = real_entries(&bell_density(BellState::PhiMinus));
        assert!((e[1][1] - 0.5).abs() < 1e-15 && (e[2][2] - 0.5).abs() < 1e-15);
        assert!((e[1][2] + 0.5).abs() < 1e-15 && (e[2][1] + 0.5).abs() < 1e-15);
        assert_eq!(e.iter().flatten().filter(|x| x.abs() > 1e-15).count(), 4);
    }

    #[test]
    fn bell_projectors_are_valid_pure_states() {
        for s in BellState::ALL {
            let rho = bell_density(s);
            DensityMatrix::new(*rho.matrix()).unwrap();
            assert!((rho.purity() - 1.0).abs() < 1e-12);
            assert!((fidelity(s, &rho) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn parity_convention() {
        assert!(!BellState::PsiPlus.parity() && !BellState::PsiMinus.parity());
        assert!(BellState::PhiPlus.parity() && BellState::PhiMinus.parity());
    }

    #[test]
    fn fidelity_examples() {
        let psi = BellState::PsiPlus;
        assert_eq!(fidelity(psi, &bell_density(BellState::PhiPlus)), 0.0);
        assert!((fidelity(psi, &DensityMatrix::maximally_mixed()) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn identity_channel_leaves_state() {
        let rho = bell_density(BellState::PsiPlus);
        let id = KrausSet::identity();
        let out = apply_two_qubit_channel(&rho, &id, &id).unwrap();
        assert!(out.max_abs_diff(&rho) < 1e-14);
    }

    #[test]
    fn full_bit_flip_on_first_qubit_maps_psi_to_phi() {
        // (X ⊗ I)(|00> + |11>)/√2 = (|10> + |01>)/√2
        let rho = bell_density(BellState::PsiPlus);
        let bf = kraus_set(NoiseKind::BitFlip, 1.0).unwrap();
        let out = apply_two_qubit_channel(&rho, &bf, &KrausSet::identity()).unwrap();
        assert!(out.max_abs_diff(&bell_density(BellState::PhiPlus)) < 1e-14);
    }

    #[test]
    fn full_damping_sends_phi_to_ground() {
        let rho = bell_density(BellState::PhiPlus);
        let ad = kraus_set(NoiseKind::AmplitudeDamping, 1.0).unwrap();
        let out = apply_two_qubit_channel(&rho, &ad, &ad).unwrap();
        assert!(out.max_abs_diff(&DensityMatrix::computational(false, false)) < 1e-14);
    }

    #[test]
    fn incomplete_kraus_rejected() {
        let rho = bell_density(BellState::PsiPlus);
        let bad = KrausSet::from_operators(vec![Matrix2::identity().scale_real(0.9)]);
        let err = apply_two_qubit_channel(&rho, &bad, &KrausSet::identity()).unwrap_err();
        assert!(matches!(err, Error::IncompleteKraus { .. }));
    }

    #[test]
    fn iy_on_first_qubit_maps_psi_plus_to_phi_minus() {
        let out = single_qubit_apply(&bell_density(BellState::PsiPlus), &Matrix2::i_y(), QubitPosition::First);
        assert!(out.max_abs_diff(&bell_density(BellState::PhiMinus)) < 1e-14);
    }

    #[test]
    fn iy_on_both_qubits_leaves_psi_plus() {
        let rho = bell_density(BellState::PsiPlus);
        let once = single_qubit_apply(&rho, &Matrix2::i_y(), QubitPosition::First);
        let twice = single_qubit_apply(&once, &Matrix2::i_y(), QubitPosition::Second);
        assert!(twice.max_abs_diff(&rho) < 1e-14);
    }

    #[test]
    fn identity_op_is_noop_and_nonunitary_rejected() {
        let rho = bell_density(BellState::PhiMinus);
        let same = single_qubit_unitary(&rho, &Matrix2::identity(), QubitPosition::Second).unwrap();
        assert!(same.max_abs_diff(&rho) < 1e-15);
        let err = single_qubit_unitary(&rho, &Matrix2::identity().scale_real(2.0), QubitPosition::First);
        assert!(matches!(err, Err(Error::NonUnitary { .. })));
    }

    #[test]
    fn computational_measurement_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = bell_density(BellState::PsiPlus);
        for _ in 0..2000 {
            let ((a, b), collapsed) = measure_computational(&rho, &mut rng);
            assert_eq!(a, b);
            assert_eq!(collapsed, DensityMatrix::computational(a, b));
        }
        let ground = DensityMatrix::computational(false, false);
        for _ in 0..100 {
            assert_eq!(measure_computational(&ground, &mut rng).0, (false, false));
        }
    }

    #[test]
    fn computational_frequencies_for_phi_plus() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = bell_density(BellState::PhiPlus);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            let ((a, b), _) = measure_computational(&rho, &mut rng);
            counts[basis_index(a, b)] += 1;
        }
        assert_eq!(counts[0] + counts[3], 0);
        for c in [counts[1], counts[2]] {
            assert!((c as f64 / 1e4 - 0.5).abs() < 0.02);
        }
    }

    #[test]
    fn bell_measurement_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = bell_density(BellState::PsiMinus);
        assert!((0..500).all(|_| measure_bell(&rho, &mut rng) == BellState::PsiMinus));

        // |00> = (|ψ+> + |ψ->)/√2
        let ground = DensityMatrix::computational(false, false);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            counts[measure_bell(&ground, &mut rng).index()] += 1;
        }
        assert_eq!(counts[2] + counts[3], 0);
        assert!((counts[0] as f64 / 1e4 - 0.5).abs() < 0.02);
    }

    #[test]
    fn bell_outcomes_uniform_after_full_depolarisation() {
        // with the p/3 Pauli weighting, DC(1) ⊗ DC(1) leaves ψ+ at weight 1/3
        // and spreads the rest; use an explicit full twirl instead
        let twirl = KrausSet::from_operators(vec![
            Matrix2::identity().scale_real(0.5),
            Matrix2::pauli_x().scale_real(0.5),
            Matrix2::pauli_y().scale_real(0.5),
            Matrix2::pauli_z().scale_real(0.5),
        ]);
        let rho = apply_two_qubit_channel(&bell_density(BellState::PsiPlus), &twirl, &twirl).unwrap();
        let probs = rho.bell_probabilities();
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            counts[measure_bell(&rho, &mut rng).index()] += 1;
        }
        for c in counts {
            assert!((c as f64 / 1e4 - 0.25).abs() < 0.02);
        }
    }

    #[test]
    fn dc_full_strength_bell_statistics() {
        // DC(1) on both arms of ψ+: weight 1/3 stays, 2/9 on each other state
        let dc = kraus_set(NoiseKind::Depolarizing, 1.0).unwrap();
        let rho = apply_two_qubit_channel(&bell_density(BellState::PsiPlus), &dc, &dc).unwrap();
        let probs = rho.bell_probabilities();
        assert!((probs[0] - 1.0 / 3.0).abs() < 1e-12);
        for p in &probs[1..] {
            assert!((p - 2.0 / 9.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_qubit_measurement_collapses_partner() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = bell_density(BellState::PhiMinus);
        for _ in 0..200 {
            let (a, collapsed) = measure_qubit(&rho, QubitPosition::First, &mut rng);
            assert!(collapsed.max_abs_diff(&DensityMatrix::computational(a, !a)) < 1e-14);
        }
    }

    #[test]
    fn bell_state_round_trips_through_symbol() {
        for s in BellState::ALL {
            assert_eq!(s.symbol().parse::<BellState>().unwrap(), s);
        }
    }
}
