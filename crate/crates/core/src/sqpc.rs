//! The semi-quantum comparison protocol.
//!
//! TP sends 8N Bell pairs; each classical user measures-and-resends a random
//! half of their qubits in the computational basis and reflects the rest.
//! TP Bell-measures what comes back and announces a mismatch bit per pair.
//! Both-reflect pairs detect eavesdropping; both-measure pairs carry key bits.

use std::fmt;

use rand::seq::index::sample;
use rand::Rng;

use crate::adversary::{check_pairing, AttackKind, AttackReport, AttackStrategy, Eavesdropper, Protocol};
use crate::bits::BitString;
use crate::channel::ChannelNoise;
use crate::error::{Error, Result};
use crate::osb::{ensure_len, ideal_key, random_bell_pairs, Comparison, QubitRegistry, RunResources};
use crate::rng::{RunContext, Stream};
use crate::state::{measure_bell, measure_qubit, BellState, QubitPosition};
use crate::transcript::{Abort, AbortReason, Actor, EventBody, Payload, Stage, Transcript, Verdict};

/// Restarts allowed when too few both-measure pairs survive.
pub const MAX_ATTEMPTS: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassicalAction {
    Measure,
    Reflect,
}

/// Table of joint actions: (Alice, Bob).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseLabel {
    /// Reflect, reflect — eavesdropping check.
    Case1,
    /// Measure, reflect — discarded.
    Case2,
    /// Reflect, measure — discarded.
    Case3,
    /// Measure, measure — key bits.
    Case4,
}

impl CaseLabel {
    pub fn classify(alice: ClassicalAction, bob: ClassicalAction) -> Self {
        use ClassicalAction::*;
        match (alice, bob) {
            (Reflect, Reflect) => CaseLabel::Case1,
            (Measure, Reflect) => CaseLabel::Case2,
            (Reflect, Measure) => CaseLabel::Case3,
            (Measure, Measure) => CaseLabel::Case4,
        }
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = match self {
            CaseLabel::Case1 => 1,
            CaseLabel::Case2 => 2,
            CaseLabel::Case3 => 3,
            CaseLabel::Case4 => 4,
        };
        write!(f, "case{n}")
    }
}

/// What one classical user did and saw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartyRecord {
    pub actions: Vec<ClassicalAction>,
    /// Outcome per pair, `None` where the qubit was reflected.
    pub bits: Vec<Option<bool>>,
}

impl PartyRecord {
    pub fn measured_positions(&self) -> Vec<usize> {
        (0..self.actions.len())
            .filter(|&i| self.actions[i] == ClassicalAction::Measure)
            .collect()
    }
}

/// 8N uniformly random Bell pairs; no decoys.
pub fn sqpc_prepare<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<(Vec<BellState>, QubitRegistry)> {
    if n == 0 {
        return Err(Error::ZeroCount);
    }
    Ok(random_bell_pairs(8 * n, rng))
}

/// Uniform half of `len` positions to measure.
pub fn choose_actions<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<ClassicalAction> {
    let mut actions = vec![ClassicalAction::Reflect; len];
    for i in sample(rng, len, len / 2) {
        actions[i] = ClassicalAction::Measure;
    }
    actions
}

/// Applies `actions` to the user's qubit of every pair. Measuring collapses
/// the joint state, which is what resending a fresh basis state amounts to.
pub fn apply_actions<R: Rng + ?Sized>(
    registry: &mut QubitRegistry,
    position: QubitPosition,
    actions: Vec<ClassicalAction>,
    rng: &mut R,
) -> Result<PartyRecord> {
    if actions.len() != registry.len() {
        return Err(Error::LengthMismatch {
            expected: registry.len(),
            found: actions.len(),
        });
    }
    let bits = actions
        .iter()
        .enumerate()
        .map(|(i, a)| match a {
            ClassicalAction::Reflect => None,
            ClassicalAction::Measure => {
                let pair = registry.pair_mut(i);
                let (bit, collapsed) = measure_qubit(&pair.state, position, rng);
                pair.state = collapsed;
                Some(bit)
            }
        })
        .collect();
    Ok(PartyRecord { actions, bits })
}

/// A classical user measures a uniformly random half of the qubits it holds
/// and reflects the rest.
pub fn classical_party_phase<R: Rng + ?Sized>(
    registry: &mut QubitRegistry,
    position: QubitPosition,
    rng: &mut R,
) -> Result<PartyRecord> {
    let actions = choose_actions(registry.len(), rng);
    apply_actions(registry, position, actions, rng)
}

/// TP Bell-measures every returned pair; `true` (announced 1) where the
/// outcome differs from the prepared state.
pub fn tp_bell_phase<R: Rng + ?Sized>(
    registry: &QubitRegistry,
    bell_choices: &[BellState],
    rng: &mut R,
) -> Result<Vec<bool>> {
    if bell_choices.len() != registry.len() {
        return Err(Error::LengthMismatch {
            expected: registry.len(),
            found: bell_choices.len(),
        });
    }
    Ok(registry
        .pairs()
        .iter()
        .zip(bell_choices)
        .map(|(p, &s)| measure_bell(&p.state, rng) != s)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sifted {
    pub labels: Vec<CaseLabel>,
    /// Pair indices of both-measure pairs, in order.
    pub case4: Vec<usize>,
    pub k_a2n: BitString,
    pub k_b2n: BitString,
    pub case1_pairs: usize,
    pub case1_errors: usize,
}

/// Labels every pair from the disclosed actions, checks the both-reflect
/// pairs, and collects the both-measure bits.
pub fn sqpc_sift(
    alice: &PartyRecord,
    bob: &PartyRecord,
    announcements: &[bool],
    tolerance: f64,
) -> Result<std::result::Result<Sifted, Abort>> {
    let len = announcements.len();
    for l in [alice.actions.len(), bob.actions.len(), alice.bits.len(), bob.bits.len()] {
        if l != len {
            return Err(Error::LengthMismatch { expected: len, found: l });
        }
    }
    let labels: Vec<CaseLabel> = alice
        .actions
        .iter()
        .zip(&bob.actions)
        .map(|(&a, &b)| CaseLabel::classify(a, b))
        .collect();
    let case1: Vec<usize> = (0..len).filter(|&i| labels[i] == CaseLabel::Case1).collect();
    let case1_errors = case1.iter().filter(|&&i| announcements[i]).count();
    let rate = if case1.is_empty() { 0.0 } else { case1_errors as f64 / case1.len() as f64 };
    if rate > tolerance {
        return Ok(Err(Abort::new(Stage::Sq5, AbortReason::ErrorRate, Some(rate))));
    }
    let case4: Vec<usize> = (0..len).filter(|&i| labels[i] == CaseLabel::Case4).collect();
    let bit = |r: &PartyRecord, i: usize| r.bits[i].ok_or_else(|| Error::Parse(format!("no outcome recorded at {i}")));
    let k_a2n = case4.iter().map(|&i| bit(alice, i)).collect::<Result<BitString>>()?;
    let k_b2n = case4.iter().map(|&i| bit(bob, i)).collect::<Result<BitString>>()?;
    Ok(Ok(Sifted {
        labels,
        case4,
        k_a2n,
        k_b2n,
        case1_pairs: case1.len(),
        case1_errors,
    }))
}

/// Keys that survived the parity audit.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditedKeys {
    pub k_a: BitString,
    pub k_b: BitString,
    /// Pair indices the key bits came from.
    pub retained: Vec<usize>,
    pub audited: Vec<usize>,
}

/// Alice picks N of the both-measure pairs; TP discloses their prepared Bell
/// states and both users reveal their bits there. Any pair with
/// `bit_A ⊕ bit_B ≠ parity` aborts. The first N unaudited pairs give the keys.
pub fn sqpc_parity_audit<R: Rng + ?Sized>(
    sifted: &Sifted,
    bell_choices: &[BellState],
    n: usize,
    rng: &mut R,
    transcript: &mut Transcript,
) -> Result<std::result::Result<AuditedKeys, Abort>> {
    let m = sifted.case4.len();
    if m < 2 * n {
        return Err(Error::YieldShortfall {
            required: 2 * n,
            attempts: 1,
        });
    }
    let mut picked = sample(rng, m, n).into_vec();
    picked.sort_unstable();
    let audited: Vec<usize> = picked.iter().map(|&j| sifted.case4[j]).collect();
    let bits = |k: &BitString| picked.iter().map(|&j| k.bits()[j]).collect::<BitString>();
    transcript.announce(Stage::Sq6, Actor::Alice, Payload::Positions { label: "audit_positions", positions: audited.clone() });
    transcript.announce(
        Stage::Sq6,
        Actor::Tp,
        Payload::BellStates {
            label: "audit_states",
            states: audited.iter().map(|&i| bell_choices[i]).collect(),
        },
    );
    transcript.announce(Stage::Sq6, Actor::Alice, Payload::Bits { label: "audit_bits", bits: bits(&sifted.k_a2n) });
    transcript.announce(Stage::Sq6, Actor::Bob, Payload::Bits { label: "audit_bits", bits: bits(&sifted.k_b2n) });

    let violations = picked
        .iter()
        .filter(|&&j| sifted.k_a2n.bits()[j] ^ sifted.k_b2n.bits()[j] != bell_choices[sifted.case4[j]].parity())
        .count();
    if violations > 0 {
        let rate = violations as f64 / n as f64;
        return Ok(Err(Abort::new(Stage::Sq6, AbortReason::ParityViolation, Some(rate))));
    }
    let mut is_audited = vec![false; m];
    for &j in &picked {
        is_audited[j] = true;
    }
    let kept: Vec<usize> = (0..m).filter(|&j| !is_audited[j]).take(n).collect();
    Ok(Ok(AuditedKeys {
        k_a: kept.iter().map(|&j| sifted.k_a2n.bits()[j]).collect(),
        k_b: kept.iter().map(|&j| sifted.k_b2n.bits()[j]).collect(),
        retained: kept.iter().map(|&j| sifted.case4[j]).collect(),
        audited,
    }))
}

/// `C_A = M_A ⊕ K_A ⊕ K_AB ⊕ K_AT`, `C_B = M_B ⊕ K_B ⊕ K_AB ⊕ K_BT`,
/// `R = C_A ⊕ C_B ⊕ C_TP ⊕ K_AT ⊕ K_BT`.
#[allow(clippy::too_many_arguments)]
pub fn sqpc_compare(
    m_a: &BitString,
    m_b: &BitString,
    k_a: &BitString,
    k_b: &BitString,
    k_ab: &BitString,
    k_at: &BitString,
    k_bt: &BitString,
    retained_choices: &[BellState],
) -> Result<Comparison> {
    let n = m_a.len();
    ensure_len(n, &[m_b, k_a, k_b, k_ab, k_at, k_bt])?;
    if retained_choices.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: retained_choices.len(),
        });
    }
    let c_a = m_a.xor(k_a)?.xor(k_ab)?.xor(k_at)?;
    let c_b = m_b.xor(k_b)?.xor(k_ab)?.xor(k_bt)?;
    let c_tp: BitString = retained_choices.iter().map(|s| s.parity()).collect();
    let r = c_a.xor(&c_b)?.xor(&c_tp)?.xor(k_at)?.xor(k_bt)?;
    let verdict = Verdict::from_result(&r);
    Ok(Comparison { c_a, c_b, c_tp, r, verdict })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqpcConfig {
    pub n: usize,
    pub m_a: BitString,
    pub m_b: BitString,
    /// Highest both-reflect mismatch rate that still passes.
    pub tolerance: f64,
    pub noise: ChannelNoise,
    pub attack: AttackStrategy,
}

impl SqpcConfig {
    pub fn honest(m_a: BitString, m_b: BitString) -> Self {
        Self {
            n: m_a.len(),
            m_a,
            m_b,
            tolerance: 0.0,
            noise: ChannelNoise::noiseless(),
            attack: AttackStrategy::none(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::ZeroCount);
        }
        ensure_len(self.n, &[&self.m_a, &self.m_b])?;
        if !(0.0..=1.0).contains(&self.tolerance) {
            return Err(Error::InvalidProbability(self.tolerance));
        }
        check_pairing(Protocol::Sqpc, &self.attack)
    }
}

/// Everything the users and TP hold after a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct SqpcKeys {
    pub audited: AuditedKeys,
    pub k_ab: BitString,
    pub k_at: BitString,
    pub k_bt: BitString,
    /// Alice's guess at `K_B` under a memory attack, aligned with `K_B`.
    pub alice_view_of_k_b: Option<BitString>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqpcRun {
    pub verdict: Verdict,
    pub transcript: Transcript,
    pub bell_choices: Vec<BellState>,
    pub announcements: Vec<bool>,
    pub alice: PartyRecord,
    pub bob: PartyRecord,
    pub labels: Vec<CaseLabel>,
    pub keys: Option<SqpcKeys>,
    pub comparison: Option<Comparison>,
    /// Resources of the final attempt.
    pub resources: RunResources,
    pub attempts: u64,
    pub report: AttackReport,
}

enum Attempt {
    Done(Box<SqpcRun>),
    Shortfall { found: usize },
}

/// Runs the protocol, restarting from a fresh attempt when fewer than 2N
/// both-measure pairs survive.
pub fn run_sqpc(config: &SqpcConfig, ctx: RunContext) -> Result<SqpcRun> {
    config.validate()?;
    let mut transcript = Transcript::new();
    for k in 0..MAX_ATTEMPTS {
        match attempt(config, ctx.attempt(ctx.attempt + k), &mut transcript)? {
            Attempt::Done(mut run) => {
                run.attempts = k + 1;
                run.transcript = transcript;
                return Ok(*run);
            }
            Attempt::Shortfall { found } => transcript.push(
                Stage::Sq5,
                Actor::Tp,
                EventBody::Restart {
                    reason: format!("case4_shortfall:{found}<{}", 2 * config.n),
                },
            ),
        }
    }
    Err(Error::YieldShortfall {
        required: 2 * config.n,
        attempts: MAX_ATTEMPTS as usize,
    })
}

fn attempt(config: &SqpcConfig, ctx: RunContext, transcript: &mut Transcript) -> Result<Attempt> {
    let n = config.n;
    let mut tp = ctx.rng(Stream::Tp);
    let mut alice_rng = ctx.rng(Stream::Alice);
    let mut bob_rng = ctx.rng(Stream::Bob);
    let mut oracle = ctx.rng(Stream::KeyOracle);
    let mut eve = Eavesdropper::new(config.attack, &ctx);

    let (bell_choices, mut registry) = sqpc_prepare(n, &mut tp)?;
    let pairs = registry.len();
    for to in [Actor::Alice, Actor::Bob] {
        transcript.push(Stage::Sq2, Actor::Tp, EventBody::QuantumSend { to, qubits: pairs });
    }
    for id in 0..pairs {
        let pair = registry.pair_mut(id);
        config.noise.transmit(pair)?;
        eve.intercept(id, pair);
    }

    let kind = config.attack.kind;
    let alice = classical_party_phase(&mut registry, QubitPosition::First, &mut alice_rng)?;
    let mut alice_guess: Vec<Option<bool>> = vec![None; pairs];
    let bob = if kind == AttackKind::MemoryAttackByAlice {
        // Alice keeps Bob's qubits; where she measured her own, she measures
        // the stored partner too and hands Bob |b⟩, elsewhere |0⟩. The stored
        // qubits go back to TP in place of whatever Bob returns.
        let mut substitutes = vec![false; pairs];
        for i in alice.measured_positions() {
            let pair = registry.pair_mut(i);
            let (b, collapsed) = measure_qubit(&pair.state, QubitPosition::Second, &mut alice_rng);
            pair.state = collapsed;
            substitutes[i] = b;
            alice_guess[i] = Some(b);
        }
        let actions = choose_actions(pairs, &mut bob_rng);
        let bits = actions
            .iter()
            .zip(&substitutes)
            .map(|(a, &s)| (*a == ClassicalAction::Measure).then_some(s))
            .collect();
        PartyRecord { actions, bits }
    } else {
        classical_party_phase(&mut registry, QubitPosition::Second, &mut bob_rng)?
    };
    for (who, rec) in [(Actor::Alice, &alice), (Actor::Bob, &bob)] {
        transcript.push(
            Stage::Sq3,
            who,
            EventBody::Measurement {
                basis: "computational",
                qubits: rec.measured_positions().len(),
            },
        );
        transcript.push(Stage::Sq3, who, EventBody::QuantumSend { to: Actor::Tp, qubits: pairs });
    }
    if kind == AttackKind::MemoryAttackInterceptReturns {
        for i in alice.measured_positions() {
            let pair = registry.pair_mut(i);
            let (b, collapsed) = measure_qubit(&pair.state, QubitPosition::Second, &mut alice_rng);
            pair.state = collapsed;
            alice_guess[i] = Some(b);
        }
    }
    for id in 0..pairs {
        config.noise.transmit(registry.pair_mut(id))?;
    }

    let announcements = tp_bell_phase(&registry, &bell_choices, &mut tp)?;
    transcript.push(Stage::Sq4, Actor::Tp, EventBody::Measurement { basis: "bell", qubits: 2 * pairs });
    transcript.announce(
        Stage::Sq4,
        Actor::Tp,
        Payload::Bits {
            label: "bell_mismatch",
            bits: announcements.iter().copied().collect(),
        },
    );
    for (who, rec) in [(Actor::Alice, &alice), (Actor::Bob, &bob)] {
        transcript.announce(
            Stage::Sq5,
            who,
            Payload::Positions {
                label: "measured_positions",
                positions: rec.measured_positions(),
            },
        );
    }

    let measured = (alice.measured_positions().len() + bob.measured_positions().len()) as u64;
    let mut resources = RunResources {
        qubits: registry.qubit_count() as u64 + measured,
        decoding_bits: pairs as u64 + measured,
    };
    let labels: Vec<CaseLabel> = alice
        .actions
        .iter()
        .zip(&bob.actions)
        .map(|(&a, &b)| CaseLabel::classify(a, b))
        .collect();
    let case1: Vec<usize> = (0..pairs).filter(|&i| labels[i] == CaseLabel::Case1).collect();
    let report = AttackReport {
        check_pairs: case1.len(),
        check_errors: case1.iter().filter(|&&i| announcements[i]).count(),
        ..AttackReport::default()
    };

    let mut run = SqpcRun {
        verdict: Verdict::Equal,
        transcript: Transcript::new(),
        bell_choices,
        announcements,
        alice,
        bob,
        labels,
        keys: None,
        comparison: None,
        resources,
        attempts: 0,
        report,
    };
    let aborted = |mut run: SqpcRun, transcript: &mut Transcript, who: Actor, a: Abort| {
        transcript.push(a.stage, who, EventBody::Abort(a.clone()));
        run.verdict = Verdict::Aborted(a);
        run.report = AttackReport {
            check_pairs: run.report.check_pairs,
            check_errors: run.report.check_errors,
            ..AttackReport::from_verdict(&run.verdict, &config.m_a, &config.m_b)
        };
        Ok(Attempt::Done(Box::new(run)))
    };

    let sifted = match sqpc_sift(&run.alice, &run.bob, &run.announcements, config.tolerance)? {
        Ok(s) => s,
        Err(a) => return aborted(run, transcript, Actor::Tp, a),
    };
    if sifted.case4.len() < 2 * n {
        return Ok(Attempt::Shortfall {
            found: sifted.case4.len(),
        });
    }
    let audited = match sqpc_parity_audit(&sifted, &run.bell_choices, n, &mut alice_rng, transcript)? {
        Ok(k) => k,
        Err(a) => return aborted(run, transcript, Actor::Alice, a),
    };

    let k_ab = ideal_key(n, &mut oracle)?;
    let k_at = ideal_key(n, &mut oracle)?;
    let k_bt = ideal_key(n, &mut oracle)?;
    let retained: Vec<BellState> = audited.retained.iter().map(|&i| run.bell_choices[i]).collect();
    let cmp = sqpc_compare(&config.m_a, &config.m_b, &audited.k_a, &audited.k_b, &k_ab, &k_at, &k_bt, &retained)?;
    transcript.announce(Stage::Sq7, Actor::Alice, Payload::Bits { label: "c_a", bits: cmp.c_a.clone() });
    transcript.announce(Stage::Sq7, Actor::Bob, Payload::Bits { label: "c_b", bits: cmp.c_b.clone() });
    transcript.announce(Stage::Sq9, Actor::Tp, Payload::Verdict(cmp.verdict.clone()));
    resources.decoding_bits += (cmp.c_a.len() + cmp.c_b.len() + 1) as u64;

    let alice_view_of_k_b = kind.is_memory_attack().then(|| {
        audited
            .retained
            .iter()
            .map(|&i| alice_guess[i].unwrap_or(false))
            .collect::<BitString>()
    });
    let recovered = match &alice_view_of_k_b {
        Some(view) => view.bits().iter().zip(audited.k_b.bits()).filter(|(g, k)| g == k).count(),
        None => [(QubitPosition::First, &audited.k_a), (QubitPosition::Second, &audited.k_b)]
            .iter()
            .map(|(pos, key)| {
                audited
                    .retained
                    .iter()
                    .zip(key.bits())
                    .filter(|&(&i, &bit)| eve.observed(i, *pos) == Some(bit))
                    .count()
            })
            .max()
            .unwrap_or(0),
    };

    run.verdict = cmp.verdict.clone();
    run.report = AttackReport {
        eve_key_bits_recovered: recovered,
        check_pairs: run.report.check_pairs,
        check_errors: run.report.check_errors,
        ..AttackReport::from_verdict(&run.verdict, &config.m_a, &config.m_b)
    };
    run.resources = resources;
    run.keys = Some(SqpcKeys {
        audited,
        k_ab,
        k_at,
        k_bt,
        alice_view_of_k_b,
    });
    run.comparison = Some(cmp);
    Ok(Attempt::Done(Box::new(run)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{bell_density, DensityMatrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn exactly_half_measured() {
        for seed in 0..20 {
            let mut r = rng(seed);
            let (_, mut reg) = sqpc_prepare(3, &mut r).unwrap();
            assert_eq!(reg.len(), 24);
            let rec = classical_party_phase(&mut reg, QubitPosition::First, &mut r).unwrap();
            assert_eq!(rec.measured_positions().len(), 12);
        }
    }

    #[test]
    fn reflected_pairs_untouched_and_measured_pairs_collapse() {
        let mut r = rng(5);
        let (choices, mut reg) = sqpc_prepare(2, &mut r).unwrap();
        let rec = classical_party_phase(&mut reg, QubitPosition::Second, &mut r).unwrap();
        for (i, a) in rec.actions.iter().enumerate() {
            let state = &reg.pair(i).state;
            match a {
                ClassicalAction::Reflect => assert_eq!(*state, bell_density(choices[i])),
                ClassicalAction::Measure => {
                    let b = rec.bits[i].unwrap();
                    let partner = b ^ choices[i].parity();
                    assert!(state.max_abs_diff(&DensityMatrix::computational(partner, b)) < 1e-14);
                }
            }
        }
    }

    #[test]
    fn classify_table() {
        use ClassicalAction::*;
        assert_eq!(CaseLabel::classify(Reflect, Reflect), CaseLabel::Case1);
        assert_eq!(CaseLabel::classify(Measure, Reflect), CaseLabel::Case2);
        assert_eq!(CaseLabel::classify(Reflect, Measure), CaseLabel::Case3);
        assert_eq!(CaseLabel::classify(Measure, Measure), CaseLabel::Case4);
    }

    #[test]
    fn case2_and_case3_never_contribute() {
        use ClassicalAction::*;
        let alice = PartyRecord {
            actions: vec![Measure, Reflect, Measure, Reflect],
            bits: vec![Some(true), None, Some(false), None],
        };
        let bob = PartyRecord {
            actions: vec![Reflect, Measure, Measure, Reflect],
            bits: vec![None, Some(true), Some(true), None],
        };
        let s = sqpc_sift(&alice, &bob, &[true, true, false, false], 0.0).unwrap().unwrap();
        assert_eq!(s.case4, vec![2]);
        assert_eq!(s.k_a2n.to_string(), "0");
        assert_eq!(s.k_b2n.to_string(), "1");
        let a = sqpc_sift(&alice, &bob, &[false, false, false, true], 0.0).unwrap().unwrap_err();
        assert_eq!(a.stage, Stage::Sq5);
        assert_eq!(a.error_rate, Some(1.0));
    }

    fn audit_with_prepared(prepared: DensityMatrix, claimed: BellState) -> std::result::Result<AuditedKeys, Abort> {
        let n = 4;
        let mut r = rng(9);
        let mut reg = QubitRegistry::new();
        for _ in 0..8 * n {
            reg.push(crate::channel::Pair {
                state: prepared,
                role: crate::channel::Role::Message,
                arms: [crate::channel::Arm::Alice, crate::channel::Arm::Bob],
            });
        }
        let choices = vec![claimed; 8 * n];
        let all = vec![ClassicalAction::Measure; 8 * n];
        let a = apply_actions(&mut reg, QubitPosition::First, all.clone(), &mut r).unwrap();
        let b = apply_actions(&mut reg, QubitPosition::Second, all, &mut r).unwrap();
        let ann = tp_bell_phase(&reg, &choices, &mut r).unwrap();
        let s = sqpc_sift(&a, &b, &ann, 0.0).unwrap().unwrap();
        sqpc_parity_audit(&s, &choices, n, &mut r, &mut Transcript::new()).unwrap()
    }

    #[test]
    fn audit_cannot_tell_product_state_with_matching_parity() {
        assert!(audit_with_prepared(DensityMatrix::computational(false, false), BellState::PsiPlus).is_ok());
        let err = audit_with_prepared(DensityMatrix::computational(false, true), BellState::PsiMinus).unwrap_err();
        assert_eq!(err.stage, Stage::Sq6);
        assert_eq!(err.error_rate, Some(1.0));
    }

    #[test]
    fn honest_run_is_sound() {
        let m_a: BitString = "10110010".parse().unwrap();
        let m_b: BitString = "10100010".parse().unwrap();
        let run = run_sqpc(&SqpcConfig::honest(m_a, m_b), RunContext::new(11)).unwrap();
        assert_eq!(run.verdict, Verdict::Unequal(vec![3]));
        assert_eq!(run.report.check_errors, 0);
        let keys = run.keys.unwrap();
        for (j, &i) in keys.audited.retained.iter().enumerate() {
            assert_eq!(keys.audited.k_a.bits()[j] ^ keys.audited.k_b.bits()[j], run.bell_choices[i].parity());
        }
        // 16N sent + 8N resent; 8N mismatch bits + 8N disclosed coordinates + 2N + 1
        assert_eq!(run.resources, RunResources { qubits: 192, decoding_bits: 145 });
    }

    #[test]
    fn small_n_restarts_are_logged() {
        let m: BitString = "1".parse().unwrap();
        let mut restarts = 0;
        for seed in 0..40 {
            let run = run_sqpc(&SqpcConfig::honest(m.clone(), m.clone()), RunContext::new(seed)).unwrap();
            assert_eq!(run.verdict, Verdict::Equal);
            let logged = run
                .transcript
                .events()
                .iter()
                .filter(|e| matches!(e.body, EventBody::Restart { .. }))
                .count() as u64;
            assert_eq!(logged + 1, run.attempts);
            restarts += logged;
        }
        assert!(restarts > 0);
    }
}
