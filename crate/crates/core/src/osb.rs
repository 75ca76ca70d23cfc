//! The orthogonal-state-based comparison protocol.
//!
//! TP distributes 2N Bell pairs (first qubits to Alice, second to Bob),
//! each sequence padded with N whole |ψ+⟩ decoy pairs. Decoys are Bell-measured
//! by the receiver, half of the message pairs are sacrificed to a parity
//! check, and the rest give correlated keys `K_A ⊕ K_B = C_TP`.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::adversary::{AttackReport, AttackStrategy, Eavesdropper};
use crate::bits::BitString;
use crate::channel::{Arm, ChannelNoise, Pair, Role};
use crate::error::{Error, Result};
use crate::rng::{RunContext, Stream};
use crate::state::{bell_density, measure_bell, measure_qubit, BellState, QubitPosition};
use crate::transcript::{Abort, AbortReason, Actor, EventBody, Payload, Stage, Transcript, Verdict};

/// Every two-qubit system of a run, indexed by pair id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QubitRegistry {
    pairs: Vec<Pair>,
}

impl QubitRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, pair: Pair) -> usize {
        self.pairs.push(pair);
        self.pairs.len() - 1
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn pair(&self, id: usize) -> &Pair {
        &self.pairs[id]
    }

    pub fn pair_mut(&mut self, id: usize) -> &mut Pair {
        &mut self.pairs[id]
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn qubit_count(&self) -> usize {
        2 * self.pairs.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QubitRef {
    pub pair: usize,
    pub position: QubitPosition,
}

/// Sequence positions `[first, second]` of each decoy pair. Kept by TP until
/// the sequence has been received.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoyMap(pub Vec<[usize; 2]>);

/// A receiver's sequence with decoys interleaved (`S_A★` or `S_B★`).
#[derive(Debug, Clone, PartialEq)]
pub struct EnlargedSequence {
    pub receiver: Arm,
    pub qubits: Vec<QubitRef>,
    pub decoys: DecoyMap,
}

pub(crate) fn random_bell_pairs<R: Rng + ?Sized>(
    count: usize,
    rng: &mut R,
) -> (Vec<BellState>, QubitRegistry) {
    let choices: Vec<BellState> = (0..count).map(|_| BellState::uniform(rng)).collect();
    let mut registry = QubitRegistry::new();
    for &s in &choices {
        registry.push(Pair {
            state: bell_density(s),
            role: Role::Message,
            arms: [Arm::Alice, Arm::Bob],
        });
    }
    (choices, registry)
}

/// 2N uniformly random message pairs occupying pair ids `0..2N`.
pub fn osb_prepare<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<(Vec<BellState>, QubitRegistry)> {
    if n == 0 {
        return Err(Error::ZeroCount);
    }
    Ok(random_bell_pairs(2 * n, rng))
}

/// Adds N |ψ+⟩ decoy pairs per receiver and interleaves them at uniformly
/// random positions of each receiver's 4N-qubit sequence. Returns Alice's
/// then Bob's sequence.
pub fn osb_insert_decoys<R: Rng + ?Sized>(
    registry: &mut QubitRegistry,
    n: usize,
    rng: &mut R,
) -> Result<[EnlargedSequence; 2]> {
    if n == 0 {
        return Err(Error::ZeroCount);
    }
    let messages: Vec<usize> = (0..registry.len())
        .filter(|&i| registry.pair(i).role == Role::Message)
        .collect();
    if messages.len() != 2 * n {
        return Err(Error::LengthMismatch {
            expected: 2 * n,
            found: messages.len(),
        });
    }
    let build = |registry: &mut QubitRegistry, receiver: Arm, rng: &mut R| {
        let position = match receiver {
            Arm::Alice => QubitPosition::First,
            Arm::Bob => QubitPosition::Second,
        };
        let mut decoy_qubits = Vec::with_capacity(2 * n);
        for _ in 0..n {
            let id = registry.push(Pair {
                state: bell_density(BellState::PsiPlus),
                role: Role::Decoy,
                arms: [receiver; 2],
            });
            decoy_qubits.push(QubitRef { pair: id, position: QubitPosition::First });
            decoy_qubits.push(QubitRef { pair: id, position: QubitPosition::Second });
        }
        decoy_qubits.shuffle(rng);

        let len = 4 * n;
        let mut is_decoy = vec![false; len];
        for slot in sample(rng, len, 2 * n) {
            is_decoy[slot] = true;
        }
        let mut decoys = decoy_qubits.into_iter();
        let mut msgs = messages.iter();
        let qubits: Vec<QubitRef> = is_decoy
            .iter()
            .map(|&d| {
                if d {
                    decoys.next().expect("2N decoy qubits")
                } else {
                    QubitRef {
                        pair: *msgs.next().expect("2N message qubits"),
                        position,
                    }
                }
            })
            .collect();

        let first_decoy = registry.len() - n;
        let mut slots = vec![[usize::MAX; 2]; n];
        for (i, q) in qubits.iter().enumerate() {
            if q.pair >= first_decoy {
                slots[q.pair - first_decoy][q.position as usize] = i;
            }
        }
        EnlargedSequence {
            receiver,
            qubits,
            decoys: DecoyMap(slots),
        }
    };
    let a = build(registry, Arm::Alice, rng);
    let b = build(registry, Arm::Bob, rng);
    Ok([a, b])
}

/// Result of a passed decoy check.
#[derive(Debug, Clone, PartialEq)]
pub struct GvCheck {
    pub receiver: Arm,
    pub outcomes: Vec<BellState>,
    pub errors: usize,
    pub rate: f64,
}

fn validate_map(registry: &QubitRegistry, seq: &EnlargedSequence, map: &DecoyMap) -> std::result::Result<Vec<usize>, String> {
    let mut seen = vec![false; seq.qubits.len()];
    let mut pairs = Vec::with_capacity(map.0.len());
    for (j, &[s0, s1]) in map.0.iter().enumerate() {
        for s in [s0, s1] {
            if s >= seq.qubits.len() {
                return Err(format!("decoy {j} position {s} out of range"));
            }
            if std::mem::replace(&mut seen[s], true) {
                return Err(format!("position {s} listed twice"));
            }
        }
        let (q0, q1) = (seq.qubits[s0], seq.qubits[s1]);
        if q0.pair != q1.pair
            || q0.position != QubitPosition::First
            || q1.position != QubitPosition::Second
            || registry.pairs().get(q0.pair).map(|p| p.role) != Some(Role::Decoy)
        {
            return Err(format!("decoy {j} does not name a decoy pair"));
        }
        pairs.push(q0.pair);
    }
    let listed = seq
        .qubits
        .iter()
        .filter(|q| registry.pairs().get(q.pair).map(|p| p.role) == Some(Role::Decoy))
        .count();
    if listed != 2 * map.0.len() {
        return Err("decoy map does not cover every decoy".into());
    }
    Ok(pairs)
}

/// TP discloses decoy positions; the receiver Bell-measures every decoy pair
/// and announces the outcomes. Aborts when the fraction of outcomes other
/// than |ψ+⟩ exceeds `tolerance`.
pub fn osb_gv_check<R: Rng + ?Sized>(
    registry: &QubitRegistry,
    seq: &EnlargedSequence,
    map: &DecoyMap,
    tolerance: f64,
    rng: &mut R,
    transcript: &mut Transcript,
) -> std::result::Result<GvCheck, Abort> {
    let receiver = actor(seq.receiver);
    transcript.announce(
        Stage::Osb3,
        Actor::Tp,
        Payload::Positions {
            label: "decoy_positions",
            positions: map.0.iter().flatten().copied().collect(),
        },
    );
    let pairs = validate_map(registry, seq, map).map_err(|m| Abort::protocol_error(Stage::Osb3, m))?;
    transcript.push(
        Stage::Osb3,
        receiver,
        EventBody::Measurement {
            basis: "bell",
            qubits: 2 * pairs.len(),
        },
    );
    let outcomes: Vec<BellState> = pairs.iter().map(|&id| measure_bell(&registry.pair(id).state, rng)).collect();
    transcript.announce(
        Stage::Osb3,
        receiver,
        Payload::BellStates {
            label: "decoy_outcomes",
            states: outcomes.clone(),
        },
    );
    let errors = outcomes.iter().filter(|&&s| s != BellState::PsiPlus).count();
    let rate = if outcomes.is_empty() { 0.0 } else { errors as f64 / outcomes.len() as f64 };
    if rate > tolerance {
        return Err(Abort::new(Stage::Osb3, AbortReason::ErrorRate, Some(rate)));
    }
    Ok(GvCheck {
        receiver: seq.receiver,
        outcomes,
        errors,
        rate,
    })
}

/// Keys left after the correlation check.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlated {
    pub k_a: BitString,
    pub k_b: BitString,
    /// Message-pair indices the keys came from, in transmission order.
    pub retained: Vec<usize>,
    pub checked: Vec<usize>,
}

/// Both users measure every message qubit in the computational basis.
/// Alice picks `round(check_fraction · 2N)` positions to sacrifice; both
/// announce those bits and TP announces the matching parities. The first N
/// unchecked positions form `K_A`, `K_B`.
pub fn osb_measure_and_correlate<R: Rng + ?Sized>(
    registry: &QubitRegistry,
    bell_choices: &[BellState],
    check_fraction: f64,
    alice_rng: &mut R,
    bob_rng: &mut R,
    transcript: &mut Transcript,
) -> Result<std::result::Result<Correlated, Abort>> {
    check_fraction_range(check_fraction)?;
    let total = bell_choices.len();
    if total == 0 || !total.is_multiple_of(2) {
        return Err(Error::LengthMismatch {
            expected: 2 * (total / 2).max(1),
            found: total,
        });
    }
    let n = total / 2;

    let mut bits_a = Vec::with_capacity(total);
    let mut bits_b = Vec::with_capacity(total);
    for i in 0..total {
        let (a, rest) = measure_qubit(&registry.pair(i).state, QubitPosition::First, alice_rng);
        let (b, _) = measure_qubit(&rest, QubitPosition::Second, bob_rng);
        bits_a.push(a);
        bits_b.push(b);
    }
    for a in [Actor::Alice, Actor::Bob] {
        transcript.push(
            Stage::Osb4,
            a,
            EventBody::Measurement {
                basis: "computational",
                qubits: total,
            },
        );
    }

    let count = (check_fraction * total as f64).round() as usize;
    let mut checked = sample(alice_rng, total, count).into_vec();
    checked.sort_unstable();
    if !checked.is_empty() {
        let pick = |bits: &[bool]| checked.iter().map(|&i| bits[i]).collect::<BitString>();
        transcript.announce(
            Stage::Osb4,
            Actor::Alice,
            Payload::Positions {
                label: "check_positions",
                positions: checked.clone(),
            },
        );
        transcript.announce(Stage::Osb4, Actor::Alice, Payload::Bits { label: "check_bits", bits: pick(&bits_a) });
        transcript.announce(Stage::Osb4, Actor::Bob, Payload::Bits { label: "check_bits", bits: pick(&bits_b) });
        let parities: BitString = checked.iter().map(|&i| bell_choices[i].parity()).collect();
        transcript.announce(Stage::Osb4, Actor::Tp, Payload::Bits { label: "check_parities", bits: parities });
        let violations = checked
            .iter()
            .filter(|&&i| bits_a[i] ^ bits_b[i] != bell_choices[i].parity())
            .count();
        if violations > 0 {
            let rate = violations as f64 / checked.len() as f64;
            return Ok(Err(Abort::new(Stage::Osb4, AbortReason::ParityViolation, Some(rate))));
        }
    }

    let mut is_checked = vec![false; total];
    for &i in &checked {
        is_checked[i] = true;
    }
    let retained: Vec<usize> = (0..total).filter(|&i| !is_checked[i]).take(n).collect();
    Ok(Ok(Correlated {
        k_a: retained.iter().map(|&i| bits_a[i]).collect(),
        k_b: retained.iter().map(|&i| bits_b[i]).collect(),
        retained,
        checked,
    }))
}

fn check_fraction_range(f: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&f) {
        return Err(Error::InvalidCheckFraction(f));
    }
    Ok(())
}

/// Uniform key shared out-of-band; stands in for an ideal key-distribution protocol.
pub fn ideal_key<R: Rng + ?Sized>(length: usize, rng: &mut R) -> Result<BitString> {
    if length == 0 {
        return Err(Error::ZeroCount);
    }
    Ok(BitString::random(length, rng))
}

/// Ciphertexts and the result string of the final comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub c_a: BitString,
    pub c_b: BitString,
    pub c_tp: BitString,
    pub r: BitString,
    pub verdict: Verdict,
}

pub(crate) fn ensure_len(n: usize, strings: &[&BitString]) -> Result<()> {
    for s in strings {
        if s.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: s.len(),
            });
        }
    }
    Ok(())
}

/// `C_A = M_A ⊕ K_A ⊕ K_AB`, `C_B = M_B ⊕ K_B ⊕ K_AB`, `R = C_A ⊕ C_B ⊕ C_TP`.
pub fn osb_compare(
    m_a: &BitString,
    m_b: &BitString,
    k_a: &BitString,
    k_b: &BitString,
    k_ab: &BitString,
    retained_choices: &[BellState],
) -> Result<Comparison> {
    let n = m_a.len();
    ensure_len(n, &[m_b, k_a, k_b, k_ab])?;
    if retained_choices.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: retained_choices.len(),
        });
    }
    let c_a = m_a.xor(k_a)?.xor(k_ab)?;
    let c_b = m_b.xor(k_b)?.xor(k_ab)?;
    let c_tp: BitString = retained_choices.iter().map(|s| s.parity()).collect();
    let r = c_a.xor(&c_b)?.xor(&c_tp)?;
    let verdict = Verdict::from_result(&r);
    Ok(Comparison { c_a, c_b, c_tp, r, verdict })
}

pub(crate) fn actor(arm: Arm) -> Actor {
    match arm {
        Arm::Alice => Actor::Alice,
        Arm::Bob => Actor::Bob,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OsbConfig {
    pub n: usize,
    pub m_a: BitString,
    pub m_b: BitString,
    /// Highest decoy error rate that still passes.
    pub tolerance: f64,
    /// Fraction of the 2N message pairs sacrificed to the parity check, in `[0, 1/2]`.
    pub check_fraction: f64,
    pub noise: ChannelNoise,
    pub attack: AttackStrategy,
}

impl OsbConfig {
    pub fn honest(m_a: BitString, m_b: BitString) -> Self {
        Self {
            n: m_a.len(),
            m_a,
            m_b,
            tolerance: 0.0,
            check_fraction: 0.5,
            noise: ChannelNoise::noiseless(),
            attack: AttackStrategy::none(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::ZeroCount);
        }
        ensure_len(self.n, &[&self.m_a, &self.m_b])?;
        check_fraction_range(self.check_fraction)?;
        if !(0.0..=1.0).contains(&self.tolerance) {
            return Err(Error::InvalidProbability(self.tolerance));
        }
        crate::adversary::check_pairing(crate::adversary::Protocol::Osb, &self.attack)
    }
}

/// Counted resources of one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunResources {
    /// Qubits created by TP and, in the semi-quantum protocol, resent by the users.
    pub qubits: u64,
    /// Classical bits needed to decode the result.
    pub decoding_bits: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OsbRun {
    pub verdict: Verdict,
    pub transcript: Transcript,
    pub bell_choices: Vec<BellState>,
    pub gv: Vec<GvCheck>,
    pub keys: Option<Correlated>,
    pub comparison: Option<Comparison>,
    pub resources: RunResources,
    pub report: AttackReport,
}

/// Runs the whole protocol once.
pub fn run_osb(config: &OsbConfig, ctx: RunContext) -> Result<OsbRun> {
    config.validate()?;
    let n = config.n;
    let mut tp = ctx.rng(Stream::Tp);
    let mut alice = ctx.rng(Stream::Alice);
    let mut bob = ctx.rng(Stream::Bob);
    let mut oracle = ctx.rng(Stream::KeyOracle);
    let mut eve = Eavesdropper::new(config.attack, &ctx);
    let mut transcript = Transcript::new();

    let (bell_choices, mut registry) = osb_prepare(n, &mut tp)?;
    let sequences = osb_insert_decoys(&mut registry, n, &mut tp)?;
    let mut resources = RunResources {
        qubits: registry.qubit_count() as u64,
        decoding_bits: 0,
    };
    for seq in &sequences {
        transcript.push(
            Stage::Osb2,
            Actor::Tp,
            EventBody::QuantumSend {
                to: actor(seq.receiver),
                qubits: seq.qubits.len(),
            },
        );
    }
    for id in 0..registry.len() {
        let pair = registry.pair_mut(id);
        config.noise.transmit(pair)?;
        eve.intercept(id, pair);
    }

    let mut report = AttackReport::default();
    let finish = |verdict: Verdict, transcript: Transcript, gv, keys, comparison, resources, mut report: AttackReport| {
        let base = AttackReport::from_verdict(&verdict, &config.m_a, &config.m_b);
        report.detected = base.detected;
        report.detection_stage = base.detection_stage;
        report.verdict_corrupted = base.verdict_corrupted;
        OsbRun {
            verdict,
            transcript,
            bell_choices: bell_choices.clone(),
            gv,
            keys,
            comparison,
            resources,
            report,
        }
    };
    let abort = |transcript: &mut Transcript, who: Actor, a: Abort| {
        transcript.push(a.stage, who, EventBody::Abort(a.clone()));
        Verdict::Aborted(a)
    };

    let mut gv = Vec::with_capacity(2);
    for seq in &sequences {
        let rng = match seq.receiver {
            Arm::Alice => &mut alice,
            Arm::Bob => &mut bob,
        };
        let outcome = osb_gv_check(&registry, seq, &seq.decoys, config.tolerance, rng, &mut transcript);
        report.check_pairs += n;
        match outcome {
            Ok(check) => {
                report.check_errors += check.errors;
                gv.push(check);
            }
            Err(a) => {
                report.check_errors += a.error_rate.map_or(0, |r| (r * n as f64).round() as usize);
                let v = abort(&mut transcript, actor(seq.receiver), a);
                return Ok(finish(v, transcript, gv, None, None, resources, report));
            }
        }
    }

    let keys = match osb_measure_and_correlate(
        &registry,
        &bell_choices,
        config.check_fraction,
        &mut alice,
        &mut bob,
        &mut transcript,
    )? {
        Ok(k) => k,
        Err(a) => {
            let v = abort(&mut transcript, Actor::Tp, a);
            return Ok(finish(v, transcript, gv, None, None, resources, report));
        }
    };
    report.eve_key_bits_recovered = [QubitPosition::First, QubitPosition::Second]
        .iter()
        .map(|&pos| {
            let key = if pos == QubitPosition::First { &keys.k_a } else { &keys.k_b };
            keys.retained
                .iter()
                .zip(key.bits())
                .filter(|&(&i, &bit)| eve.observed(i, pos) == Some(bit))
                .count()
        })
        .max()
        .unwrap_or(0);

    let k_ab = ideal_key(n, &mut oracle)?;
    let retained: Vec<BellState> = keys.retained.iter().map(|&i| bell_choices[i]).collect();
    let cmp = osb_compare(&config.m_a, &config.m_b, &keys.k_a, &keys.k_b, &k_ab, &retained)?;
    transcript.announce(Stage::Osb6, Actor::Alice, Payload::Bits { label: "c_a", bits: cmp.c_a.clone() });
    transcript.announce(Stage::Osb6, Actor::Bob, Payload::Bits { label: "c_b", bits: cmp.c_b.clone() });
    transcript.announce(Stage::Osb8, Actor::Tp, Payload::Verdict(cmp.verdict.clone()));
    resources.decoding_bits = (cmp.c_a.len() + cmp.c_b.len() + 1) as u64;

    let verdict = cmp.verdict.clone();
    Ok(finish(verdict, transcript, gv, Some(keys), Some(cmp), resources, report))
}
