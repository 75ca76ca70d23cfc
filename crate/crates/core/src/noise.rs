//! Kraus operator sets for the four single-qubit noise channels.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::Matrix2;

/// Single-qubit noise channel family. The noiseless channel is any kind at `p = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NoiseKind {
    AmplitudeDamping,
    BitFlip,
    PhaseFlip,
    Depolarizing,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 4] = [
        NoiseKind::AmplitudeDamping,
        NoiseKind::BitFlip,
        NoiseKind::PhaseFlip,
        NoiseKind::Depolarizing,
    ];

    pub fn code(self) -> &'static str {
        match self {
            NoiseKind::AmplitudeDamping => "AD",
            NoiseKind::BitFlip => "BF",
            NoiseKind::PhaseFlip => "PF",
            NoiseKind::Depolarizing => "DC",
        }
    }

    pub fn operator_count(self) -> usize {
        match self {
            NoiseKind::Depolarizing => 4,
            _ => 2,
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "AD" => Ok(NoiseKind::AmplitudeDamping),
            "BF" => Ok(NoiseKind::BitFlip),
            "PF" => Ok(NoiseKind::PhaseFlip),
            "DC" => Ok(NoiseKind::Depolarizing),
            _ => Err(Error::Parse(format!("unknown noise kind `{s}`"))),
        }
    }
}

/// Operator-sum representation of a single-qubit channel.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    /// `None` for the identity channel or a hand-built operator list.
    kind: Option<NoiseKind>,
    p: f64,
    operators: Vec<Matrix2>,
}

impl KrausSet {
    pub fn identity() -> Self {
        Self {
            kind: None,
            p: 0.0,
            operators: vec![Matrix2::identity()],
        }
    }

    /// Wraps an arbitrary operator list; completeness is checked at application time.
    pub fn from_operators(operators: Vec<Matrix2>) -> Self {
        Self {
            kind: None,
            p: 0.0,
            operators,
        }
    }

    pub fn kind(&self) -> Option<NoiseKind> {
        self.kind
    }

    pub fn probability(&self) -> f64 {
        self.p
    }

    pub fn operators(&self) -> &[Matrix2] {
        &self.operators
    }

    /// Largest entrywise deviation of `Σ K†K` from the identity.
    pub fn completeness_deviation(&self) -> f64 {
        let sum = self
            .operators
            .iter()
            .fold(Matrix2::zero(), |acc, k| acc + k.dagger() * *k);
        sum.max_abs_diff(&Matrix2::identity())
    }
}

pub(crate) fn check_probability(p: f64) -> Result<f64> {
    if p.is_finite() && (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(Error::InvalidProbability(p))
    }
}

/// Builds the Kraus operators of `kind` at error probability `p`.
///
/// * AD: `diag(1, √(1-p))`, `[[0, √p], [0, 0]]`
/// * BF: `√(1-p) I`, `√p X`
/// * PF: `√(1-p) I`, `√p Z`
/// * DC: `√(1-p) I`, `√(p/3) X`, `√(p/3) Y`, `√(p/3) Z`
pub fn kraus_set(kind: NoiseKind, p: f64) -> Result<KrausSet> {
    let p = check_probability(p)?;
    let keep = (1.0 - p).sqrt();
    let operators = match kind {
        NoiseKind::AmplitudeDamping => vec![
            Matrix2::real([[1.0, 0.0], [0.0, keep]]),
            Matrix2::real([[0.0, p.sqrt()], [0.0, 0.0]]),
        ],
        NoiseKind::BitFlip => vec![
            Matrix2::identity().scale_real(keep),
            Matrix2::pauli_x().scale_real(p.sqrt()),
        ],
        NoiseKind::PhaseFlip => vec![
            Matrix2::identity().scale_real(keep),
            Matrix2::pauli_z().scale_real(p.sqrt()),
        ],
        NoiseKind::Depolarizing => {
            let w = (p / 3.0).sqrt();
            vec![
                Matrix2::identity().scale_real(keep),
                Matrix2::pauli_x().scale_real(w),
                Matrix2::pauli_y().scale_real(w),
                Matrix2::pauli_z().scale_real(w),
            ]
        }
    };
    Ok(KrausSet {
        kind: Some(kind),
        p,
        operators,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{apply_channel_on, bell_density, fidelity, BellState, DensityMatrix, QubitPosition};

    #[test]
    fn completeness_on_fine_grid() {
        for kind in NoiseKind::ALL {
            for i in 0..=100 {
                let set = kraus_set(kind, i as f64 / 100.0).unwrap();
                assert!(set.completeness_deviation() < 1e-12, "{kind} at {i}");
                assert_eq!(set.operators().len(), kind.operator_count());
            }
        }
    }

    #[test]
    fn zero_strength_bit_flip_is_identity() {
        let set = kraus_set(NoiseKind::BitFlip, 0.0).unwrap();
        assert_eq!(set.operators()[0], Matrix2::identity());
        assert_eq!(set.operators()[1], Matrix2::zero());
        let rho = bell_density(BellState::PhiPlus);
        let out = apply_channel_on(&rho, &set, QubitPosition::First).unwrap();
        assert!(out.max_abs_diff(&rho) < 1e-15);
    }

    #[test]
    fn full_damping_decays_excited_state() {
        let set = kraus_set(NoiseKind::AmplitudeDamping, 1.0).unwrap();
        assert_eq!(set.operators()[1], Matrix2::real([[0.0, 1.0], [0.0, 0.0]]));
        // |01><01| with damping on the second qubit → |00><00|
        let rho = DensityMatrix::computational(false, true);
        let out = apply_channel_on(&rho, &set, QubitPosition::Second).unwrap();
        assert!(out.max_abs_diff(&DensityMatrix::computational(false, false)) < 1e-15);
    }

    #[test]
    fn depolarizing_completeness_at_point_three() {
        let set = kraus_set(NoiseKind::Depolarizing, 0.3).unwrap();
        assert!(set.completeness_deviation() < 1e-12);
    }

    #[test]
    fn out_of_range_probability_rejected() {
        for p in [-0.1, 1.5, f64::NAN] {
            assert!(kraus_set(NoiseKind::PhaseFlip, p).is_err());
        }
    }

    #[test]
    fn single_arm_pauli_noise_fidelity_is_one_minus_p() {
        for kind in [NoiseKind::BitFlip, NoiseKind::PhaseFlip, NoiseKind::Depolarizing] {
            let set = kraus_set(kind, 0.37).unwrap();
            for s in BellState::ALL {
                let out = apply_channel_on(&bell_density(s), &set, QubitPosition::Second).unwrap();
                assert!((fidelity(s, &out) - 0.63).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parses_codes() {
        assert_eq!("dc".parse::<NoiseKind>().unwrap(), NoiseKind::Depolarizing);
        assert!("xx".parse::<NoiseKind>().is_err());
    }
}
