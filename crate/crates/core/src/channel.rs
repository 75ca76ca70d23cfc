//! Qubit pairs in flight and the noisy channels between TP and each user.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::noise::{kraus_set, KrausSet, NoiseKind};
use crate::state::{apply_two_qubit_channel, DensityMatrix};

/// The channel a qubit travels on: TP↔Alice or TP↔Bob.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arm {
    Alice,
    Bob,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Message,
    Decoy,
}

/// One two-qubit system and the arm each of its qubits travels on.
#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub state: DensityMatrix,
    pub role: Role,
    pub arms: [Arm; 2],
}

/// Noise kind and strength on a single arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmNoiseSpec {
    pub kind: NoiseKind,
    pub p: f64,
}

impl fmt::Display for ArmNoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.code().to_ascii_lowercase(), self.p)
    }
}

impl FromStr for ArmNoiseSpec {
    type Err = Error;

    /// `kind:p`, e.g. `bf:1.0`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, p) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("noise `{s}` must be kind:p")))?;
        let p: f64 = p
            .parse()
            .map_err(|_| Error::Parse(format!("invalid probability in `{s}`")))?;
        let kind = kind.parse()?;
        kraus_set(kind, p)?;
        Ok(Self { kind, p })
    }
}

/// Kraus sets for both arms; a noiseless arm holds the identity channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelNoise {
    alice: KrausSet,
    bob: KrausSet,
    noiseless: bool,
}

impl Default for ChannelNoise {
    fn default() -> Self {
        Self::noiseless()
    }
}

impl ChannelNoise {
    pub fn noiseless() -> Self {
        Self {
            alice: KrausSet::identity(),
            bob: KrausSet::identity(),
            noiseless: true,
        }
    }

    pub fn new(alice: Option<ArmNoiseSpec>, bob: Option<ArmNoiseSpec>) -> Result<Self> {
        let build = |spec: Option<ArmNoiseSpec>| match spec {
            Some(s) => kraus_set(s.kind, s.p),
            None => Ok(KrausSet::identity()),
        };
        Ok(Self {
            alice: build(alice)?,
            bob: build(bob)?,
            noiseless: alice.is_none() && bob.is_none(),
        })
    }

    pub fn arm(&self, arm: Arm) -> &KrausSet {
        match arm {
            Arm::Alice => &self.alice,
            Arm::Bob => &self.bob,
        }
    }

    /// One pass of each qubit through its own arm.
    pub fn transmit(&self, pair: &mut Pair) -> Result<()> {
        if self.noiseless {
            return Ok(());
        }
        pair.state = apply_two_qubit_channel(&pair.state, self.arm(pair.arms[0]), self.arm(pair.arms[1]))?;
        Ok(())
    }
}
