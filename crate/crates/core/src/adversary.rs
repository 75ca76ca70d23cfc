//! Attack strategies, the in-channel eavesdropper hook, and the campaign
//! harness that measures detection and leakage.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bits::BitString;
use crate::channel::{Arm, Pair};
use crate::error::{Error, Result};
use crate::linalg::Matrix2;
use crate::osb::{run_osb, OsbConfig};
use crate::rng::{RunContext, Stream};
use crate::sqpc::{run_sqpc, SqpcConfig};
use crate::state::{bell_density, measure_qubit, single_qubit_apply, BellState, QubitPosition};
use crate::transcript::{Stage, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackKind {
    None,
    /// Eve measures travelling qubits in the computational basis and resends.
    InterceptResendComputational,
    /// Eve replaces a pair she holds entirely with a uniformly random Bell state.
    FullRandomizeBell,
    /// Eve applies `iY` to every qubit on Alice's arm.
    PauliIYOnAliceArm,
    /// Dishonest Alice stores Bob's qubits, feeds him computational-basis
    /// substitutes, and returns the stored originals to TP.
    MemoryAttackByAlice,
    /// Dishonest Alice reads Bob's returning qubits at the positions she measured.
    MemoryAttackInterceptReturns,
}

impl AttackKind {
    pub fn name(self) -> &'static str {
        match self {
            AttackKind::None => "none",
            AttackKind::InterceptResendComputational => "intercept-resend",
            AttackKind::FullRandomizeBell => "randomize-bell",
            AttackKind::PauliIYOnAliceArm => "iy",
            AttackKind::MemoryAttackByAlice => "memory-alice",
            AttackKind::MemoryAttackInterceptReturns => "memory-returns",
        }
    }

    const ALL: [AttackKind; 6] = [
        AttackKind::None,
        AttackKind::InterceptResendComputational,
        AttackKind::FullRandomizeBell,
        AttackKind::PauliIYOnAliceArm,
        AttackKind::MemoryAttackByAlice,
        AttackKind::MemoryAttackInterceptReturns,
    ];

    pub fn is_memory_attack(self) -> bool {
        matches!(
            self,
            AttackKind::MemoryAttackByAlice | AttackKind::MemoryAttackInterceptReturns
        )
    }
}

/// Which arms an outside eavesdropper sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetArms {
    Alice,
    Bob,
    Both,
}

impl TargetArms {
    pub fn covers(self, arm: Arm) -> bool {
        match self {
            TargetArms::Both => true,
            TargetArms::Alice => arm == Arm::Alice,
            TargetArms::Bob => arm == Arm::Bob,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackStrategy {
    pub kind: AttackKind,
    pub arms: TargetArms,
    /// Probability that any given qubit (or pair) is attacked.
    pub fraction: f64,
}

impl Default for AttackStrategy {
    fn default() -> Self {
        Self::none()
    }
}

impl AttackStrategy {
    pub fn none() -> Self {
        Self::new(AttackKind::None)
    }

    /// Full-strength attack on the kind's natural arms.
    pub fn new(kind: AttackKind) -> Self {
        let arms = match kind {
            AttackKind::PauliIYOnAliceArm => TargetArms::Alice,
            AttackKind::MemoryAttackByAlice | AttackKind::MemoryAttackInterceptReturns => TargetArms::Bob,
            _ => TargetArms::Both,
        };
        Self {
            kind,
            arms,
            fraction: 1.0,
        }
    }

    pub fn with_fraction(self, fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::InvalidProbability(fraction));
        }
        Ok(Self { fraction, ..self })
    }

    pub fn on_arms(self, arms: TargetArms) -> Self {
        Self { arms, ..self }
    }

    pub fn is_none(&self) -> bool {
        self.kind == AttackKind::None
    }
}

impl fmt::Display for AttackStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_none() {
            f.write_str("none")
        } else {
            write!(f, "{}:{}", self.kind.name(), self.fraction)
        }
    }
}

impl FromStr for AttackStrategy {
    type Err = Error;

    /// `name[:fraction]`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, fraction) = match s.split_once(':') {
            Some((n, f)) => (
                n,
                f.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("invalid attack fraction in `{s}`")))?,
            ),
            None => (s, 1.0),
        };
        let kind = AttackKind::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::Parse(format!("unknown attack `{name}`")))?;
        AttackStrategy::new(kind).with_fraction(fraction)
    }
}

/// Outside eavesdropper acting on pairs as they leave TP.
#[derive(Debug)]
pub struct Eavesdropper {
    strategy: AttackStrategy,
    rng: ChaCha8Rng,
    observed: Vec<[Option<bool>; 2]>,
}

impl Eavesdropper {
    pub fn new(strategy: AttackStrategy, ctx: &RunContext) -> Self {
        Self {
            strategy,
            rng: ctx.rng(Stream::Eve),
            observed: Vec::new(),
        }
    }

    pub fn strategy(&self) -> &AttackStrategy {
        &self.strategy
    }

    fn strikes(&mut self) -> bool {
        let f = self.strategy.fraction;
        if f >= 1.0 {
            true
        } else if f <= 0.0 {
            false
        } else {
            self.rng.gen::<f64>() < f
        }
    }

    fn record(&mut self, index: usize, position: QubitPosition, bit: bool) {
        if self.observed.len() <= index {
            self.observed.resize(index + 1, [None, None]);
        }
        self.observed[index][position as usize] = Some(bit);
    }

    /// Bit Eve learned for a qubit, if she measured it.
    pub fn observed(&self, index: usize, position: QubitPosition) -> Option<bool> {
        self.observed.get(index).and_then(|o| o[position as usize])
    }

    /// Applies the strategy to a pair on the TP→user leg.
    pub fn intercept(&mut self, index: usize, pair: &mut Pair) {
        let arms = self.strategy.arms;
        match self.strategy.kind {
            AttackKind::InterceptResendComputational => {
                for position in [QubitPosition::First, QubitPosition::Second] {
                    if arms.covers(pair.arms[position as usize]) && self.strikes() {
                        let (bit, collapsed) = measure_qubit(&pair.state, position, &mut self.rng);
                        pair.state = collapsed;
                        self.record(index, position, bit);
                    }
                }
            }
            AttackKind::FullRandomizeBell => {
                if pair.arms.iter().all(|&a| arms.covers(a)) && self.strikes() {
                    pair.state = bell_density(BellState::uniform(&mut self.rng));
                }
            }
            AttackKind::PauliIYOnAliceArm => {
                for position in [QubitPosition::First, QubitPosition::Second] {
                    if arms.covers(pair.arms[position as usize]) && self.strikes() {
                        pair.state = single_qubit_apply(&pair.state, &Matrix2::i_y(), position);
                    }
                }
            }
            AttackKind::None | AttackKind::MemoryAttackByAlice | AttackKind::MemoryAttackInterceptReturns => {}
        }
    }
}

/// Which protocol a campaign targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    Osb,
    Sqpc,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Osb => "osb",
            Protocol::Sqpc => "sqpc",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "osb" => Ok(Protocol::Osb),
            "sqpc" => Ok(Protocol::Sqpc),
            _ => Err(Error::Parse(format!("unknown protocol `{s}`"))),
        }
    }
}

pub fn check_pairing(protocol: Protocol, strategy: &AttackStrategy) -> Result<()> {
    if protocol == Protocol::Osb && strategy.kind.is_memory_attack() {
        return Err(Error::StrategyMismatch {
            strategy: strategy.kind.name(),
            protocol: protocol.name(),
        });
    }
    Ok(())
}

/// Outcome of one attacked run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AttackReport {
    pub detected: bool,
    pub detection_stage: Option<Stage>,
    /// Key bits of the victim that the attacker now holds correctly.
    pub eve_key_bits_recovered: usize,
    /// A completed verdict that disagrees with the true comparison.
    pub verdict_corrupted: bool,
    /// Disturbance-check sample: decoy pairs (OSB) or Case-1 pairs (SQPC).
    pub check_pairs: usize,
    pub check_errors: usize,
}

impl AttackReport {
    pub fn from_verdict(verdict: &Verdict, m_a: &BitString, m_b: &BitString) -> Self {
        let (detected, detection_stage) = match verdict {
            Verdict::Aborted(a) => (true, Some(a.stage)),
            _ => (false, None),
        };
        let verdict_corrupted = match verdict {
            Verdict::Aborted(_) => false,
            v => m_a.xor(m_b).map(|d| Verdict::from_result(&d) != *v).unwrap_or(true),
        };
        Self {
            detected,
            detection_stage,
            eve_key_bits_recovered: 0,
            verdict_corrupted,
            check_pairs: 0,
            check_errors: 0,
        }
    }
}

/// Aggregate over a campaign of independent trials.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignStats {
    pub protocol: Protocol,
    pub strategy: AttackStrategy,
    pub n: usize,
    pub trials: usize,
    pub detections: usize,
    /// Detections by stage, in stage order.
    pub detections_by_stage: Vec<(Stage, usize)>,
    pub verdict_corruptions: usize,
    pub total_key_bits_recovered: usize,
    pub check_pairs: usize,
    pub check_errors: usize,
}

impl CampaignStats {
    pub fn detection_rate(&self) -> f64 {
        self.detections as f64 / self.trials as f64
    }

    pub fn stage_detections(&self, stage: Stage) -> usize {
        self.detections_by_stage
            .iter()
            .find(|(s, _)| *s == stage)
            .map_or(0, |(_, c)| *c)
    }

    pub fn corruption_rate(&self) -> f64 {
        self.verdict_corruptions as f64 / self.trials as f64
    }

    pub fn mean_key_bits_recovered(&self) -> f64 {
        self.total_key_bits_recovered as f64 / self.trials as f64
    }

    /// Fraction of disturbance-check pairs that showed an error.
    pub fn check_error_rate(&self) -> f64 {
        if self.check_pairs == 0 {
            0.0
        } else {
            self.check_errors as f64 / self.check_pairs as f64
        }
    }

    /// One `key=value` record.
    pub fn to_record(&self) -> String {
        let stages: Vec<String> = self
            .detections_by_stage
            .iter()
            .map(|(s, c)| format!("{s}:{c}"))
            .collect();
        format!(
            "protocol={} attack={} n={} trials={} detections={} detection_rate={} by_stage={} \
             check_pairs={} check_errors={} check_error_rate={} corrupted={} corruption_rate={} \
             mean_key_bits_recovered={}",
            self.protocol,
            self.strategy,
            self.n,
            self.trials,
            self.detections,
            self.detection_rate(),
            if stages.is_empty() { "-".to_string() } else { stages.join(",") },
            self.check_pairs,
            self.check_errors,
            self.check_error_rate(),
            self.verdict_corruptions,
            self.corruption_rate(),
            self.mean_key_bits_recovered(),
        )
    }
}

/// Protocol parameters shared by every trial of a campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub protocol: Protocol,
    pub n: usize,
    pub strategy: AttackStrategy,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// OSB correlation-check fraction.
    pub check_fraction: f64,
    pub noise: crate::channel::ChannelNoise,
}

impl CampaignConfig {
    pub fn new(protocol: Protocol, n: usize, strategy: AttackStrategy, trials: usize, seed: u64) -> Self {
        Self {
            protocol,
            n,
            strategy,
            trials,
            seed,
            tolerance: 0.0,
            check_fraction: 0.5,
            noise: crate::channel::ChannelNoise::noiseless(),
        }
    }
}

/// Runs one attacked execution with random messages drawn from the key oracle stream.
pub fn run_trial(config: &CampaignConfig, ctx: RunContext) -> Result<AttackReport> {
    let mut msg_rng = ctx.rng(Stream::KeyOracle);
    // messages come from a distinct trial offset so they never coincide with keys
    let m_a = BitString::random(config.n, &mut msg_rng);
    let m_b = BitString::random(config.n, &mut msg_rng);
    match config.protocol {
        Protocol::Osb => {
            let cfg = OsbConfig {
                n: config.n,
                m_a,
                m_b,
                tolerance: config.tolerance,
                check_fraction: config.check_fraction,
                noise: config.noise.clone(),
                attack: config.strategy,
            };
            Ok(run_osb(&cfg, ctx.attempt(1 << 32))?.report)
        }
        Protocol::Sqpc => {
            let cfg = SqpcConfig {
                n: config.n,
                m_a,
                m_b,
                tolerance: config.tolerance,
                noise: config.noise.clone(),
                attack: config.strategy,
            };
            Ok(run_sqpc(&cfg, ctx.attempt(1 << 32))?.report)
        }
    }
}

/// Runs `trials` independent attacked executions in parallel and folds the
/// reports in trial order.
pub fn run_with_attack(config: &CampaignConfig) -> Result<CampaignStats> {
    check_pairing(config.protocol, &config.strategy)?;
    if config.n == 0 || config.trials == 0 {
        return Err(Error::ZeroCount);
    }
    let base = RunContext::new(config.seed);
    let reports: Vec<AttackReport> = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(config, base.trial(t)))
        .collect::<Result<_>>()?;

    let mut stats = CampaignStats {
        protocol: config.protocol,
        strategy: config.strategy,
        n: config.n,
        trials: config.trials,
        detections: 0,
        detections_by_stage: Vec::new(),
        verdict_corruptions: 0,
        total_key_bits_recovered: 0,
        check_pairs: 0,
        check_errors: 0,
    };
    for r in &reports {
        if let Some(stage) = r.detection_stage {
            stats.detections += 1;
            match stats.detections_by_stage.iter_mut().find(|(s, _)| *s == stage) {
                Some((_, c)) => *c += 1,
                None => stats.detections_by_stage.push((stage, 1)),
            }
        }
        stats.verdict_corruptions += usize::from(r.verdict_corrupted);
        stats.total_key_bits_recovered += r.eve_key_bits_recovered;
        stats.check_pairs += r.check_pairs;
        stats.check_errors += r.check_errors;
    }
    stats.detections_by_stage.sort();
    Ok(stats)
}

/// Verdict TP announces when every Bell parity on Alice's arm has been
/// flipped and no correlation check runs: `R = complement(M_A ⊕ M_B)`.
pub fn iy_attack_consequence(m_a: &BitString, m_b: &BitString) -> Result<Verdict> {
    Ok(Verdict::from_result(&m_a.xor(m_b)?.complement()))
}

/// Largest N for exhaustive posterior enumeration.
pub const ENUMERATION_LIMIT: usize = 12;

/// What an observer knows after a run. `None` marks an unknown value.
///
/// The public ciphertexts are always known. Constraints tying the values
/// together, per bit position:
///
/// * `C_A = M_A ⊕ K_A ⊕ K_AB (⊕ K_AT)`
/// * `C_B = M_B ⊕ K_B ⊕ K_AB (⊕ K_BT)`
/// * `K_A ⊕ K_B = C_TP`
///
/// The `K_AT`/`K_BT` layers exist only for the semi-quantum protocol.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObserverView {
    pub c_a: BitString,
    pub c_b: BitString,
    pub m_a: Option<BitString>,
    pub m_b: Option<BitString>,
    pub k_a: Option<BitString>,
    pub k_b: Option<BitString>,
    pub k_ab: Option<BitString>,
    pub k_at: Option<BitString>,
    pub k_bt: Option<BitString>,
    pub c_tp: Option<BitString>,
    /// Whether the `K_AT`/`K_BT` layers are part of the encryption.
    pub user_tp_keys: bool,
}

/// Whose message the posterior is over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Alice,
    Bob,
}

const VARS: usize = 10;
const C_A: usize = 0;
const C_B: usize = 1;
const M_A: usize = 2;
const M_B: usize = 3;
const K_A: usize = 4;
const K_B: usize = 5;
const K_AB: usize = 6;
const K_AT: usize = 7;
const K_BT: usize = 8;
const C_TP: usize = 9;

impl ObserverView {
    fn slots(&self) -> [Option<&BitString>; VARS] {
        [
            Some(&self.c_a),
            Some(&self.c_b),
            self.m_a.as_ref(),
            self.m_b.as_ref(),
            self.k_a.as_ref(),
            self.k_b.as_ref(),
            self.k_ab.as_ref(),
            self.k_at.as_ref(),
            self.k_bt.as_ref(),
            self.c_tp.as_ref(),
        ]
    }

    fn satisfied(&self, v: &[bool; VARS]) -> bool {
        let (at, bt) = if self.user_tp_keys { (v[K_AT], v[K_BT]) } else { (false, false) };
        v[C_A] == (v[M_A] ^ v[K_A] ^ v[K_AB] ^ at)
            && v[C_B] == (v[M_B] ^ v[K_B] ^ v[K_AB] ^ bt)
            && (v[K_A] ^ v[K_B]) == v[C_TP]
    }

    /// Feasible values of the target bit at position `i`, as `[0 ok, 1 ok]`.
    fn feasible_bits(&self, i: usize, target: usize) -> [bool; 2] {
        let slots = self.slots();
        let unknown: Vec<usize> = (0..VARS).filter(|&k| slots[k].is_none()).collect();
        let mut base = [false; VARS];
        for (k, slot) in slots.iter().enumerate() {
            if let Some(b) = slot {
                base[k] = b.bits()[i];
            }
        }
        let mut out = [false; 2];
        for mask in 0u32..(1 << unknown.len()) {
            let mut v = base;
            for (j, &k) in unknown.iter().enumerate() {
                v[k] = (mask >> j) & 1 == 1;
            }
            if self.satisfied(&v) {
                out[usize::from(v[target])] = true;
            }
        }
        out
    }
}

/// Number of distinct target messages consistent with the observer's view.
///
/// Enumerates every candidate string; a candidate is feasible when some
/// assignment of the unknown values satisfies the encryption constraints.
/// `2^N` means the view leaks nothing about the target.
pub fn eve_information_bound(view: &ObserverView, target: Target) -> Result<u64> {
    let n = view.c_a.len();
    if n > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            n,
            limit: ENUMERATION_LIMIT,
        });
    }
    for s in view.slots().into_iter().flatten() {
        if s.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: s.len(),
            });
        }
    }
    let target = match target {
        Target::Alice => M_A,
        Target::Bob => M_B,
    };
    let feasible: Vec<[bool; 2]> = (0..n).map(|i| view.feasible_bits(i, target)).collect();
    let support = (0u64..(1 << n))
        .filter(|&candidate| {
            (0..n).all(|i| {
                let bit = (candidate >> (n - 1 - i)) & 1 == 1;
                feasible[i][usize::from(bit)]
            })
        })
        .count();
    Ok(support as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Role;

    #[test]
    fn parses_strategies() {
        let s: AttackStrategy = "iy".parse().unwrap();
        assert_eq!(s.kind, AttackKind::PauliIYOnAliceArm);
        assert_eq!(s.arms, TargetArms::Alice);
        let s: AttackStrategy = "intercept-resend:0.25".parse().unwrap();
        assert_eq!(s.fraction, 0.25);
        assert!("intercept-resend:2".parse::<AttackStrategy>().is_err());
        assert!("teleport".parse::<AttackStrategy>().is_err());
    }

    #[test]
    fn memory_attacks_rejected_on_osb() {
        let s = AttackStrategy::new(AttackKind::MemoryAttackByAlice);
        assert!(check_pairing(Protocol::Osb, &s).is_err());
        assert!(check_pairing(Protocol::Sqpc, &s).is_ok());
        let cfg = CampaignConfig::new(Protocol::Osb, 2, s, 1, 0);
        assert!(matches!(run_with_attack(&cfg), Err(Error::StrategyMismatch { .. })));
    }

    #[test]
    fn iy_consequence_examples() {
        let m: BitString = "1011".parse().unwrap();
        assert_eq!(iy_attack_consequence(&m, &m).unwrap(), Verdict::Unequal(vec![0, 1, 2, 3]));
        assert_eq!(iy_attack_consequence(&m, &m.complement()).unwrap(), Verdict::Equal);
        let other: BitString = "1000".parse().unwrap();
        // differ at 2,3 → R has ones where they agree
        assert_eq!(iy_attack_consequence(&m, &other).unwrap(), Verdict::Unequal(vec![0, 1]));
    }

    #[test]
    fn intercept_collapses_targeted_qubits_only() {
        let ctx = RunContext::new(3);
        let mut eve = Eavesdropper::new(AttackStrategy::new(AttackKind::InterceptResendComputational).on_arms(TargetArms::Alice), &ctx);
        let mut pair = Pair {
            state: bell_density(BellState::PsiPlus),
            role: Role::Message,
            arms: [Arm::Alice, Arm::Bob],
        };
        eve.intercept(0, &mut pair);
        let a = eve.observed(0, QubitPosition::First).unwrap();
        assert!(eve.observed(0, QubitPosition::Second).is_none());
        assert!(pair.state.max_abs_diff(&crate::state::DensityMatrix::computational(a, a)) < 1e-14);
    }

    #[test]
    fn zero_fraction_never_strikes() {
        let ctx = RunContext::new(3);
        let s = AttackStrategy::new(AttackKind::PauliIYOnAliceArm).with_fraction(0.0).unwrap();
        let mut eve = Eavesdropper::new(s, &ctx);
        let mut pair = Pair {
            state: bell_density(BellState::PhiPlus),
            role: Role::Message,
            arms: [Arm::Alice, Arm::Bob],
        };
        let before = pair.clone();
        for i in 0..100 {
            eve.intercept(i, &mut pair);
        }
        assert_eq!(pair, before);
    }

    #[test]
    fn information_bound_full_knowledge_is_one() {
        let one: BitString = "1".parse().unwrap();
        let zero: BitString = "0".parse().unwrap();
        let view = ObserverView {
            c_a: one.clone(),
            c_b: zero.clone(),
            m_a: None,
            k_a: Some(zero.clone()),
            k_b: Some(one.clone()),
            k_ab: Some(zero.clone()),
            c_tp: Some(one.clone()),
            ..Default::default()
        };
        assert_eq!(eve_information_bound(&view, Target::Alice).unwrap(), 1);
    }

    #[test]
    fn information_bound_limits() {
        let view = ObserverView {
            c_a: BitString::zeros(13),
            c_b: BitString::zeros(13),
            ..Default::default()
        };
        assert!(matches!(
            eve_information_bound(&view, Target::Alice),
            Err(Error::EnumerationTooLarge { .. })
        ));
        let bad = ObserverView {
            c_a: BitString::zeros(3),
            c_b: BitString::zeros(2),
            ..Default::default()
        };
        assert!(eve_information_bound(&bad, Target::Alice).is_err());
    }
}
