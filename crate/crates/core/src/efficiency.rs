//! Qubit efficiency `η = c / (q + b)`: compared bits over qubits consumed plus
//! classical bits needed for decoding. Eavesdropping-check and
//! correlation-check traffic is not counted.

use num_rational::Ratio;

use crate::adversary::Protocol as Scheme;
use crate::error::{Error, Result};

/// Where a resource is spent. Key establishment is stubbed by an ideal
/// oracle in simulation, so only `Protocol` items are observable in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Protocol,
    KeyEstablishment,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerItem {
    pub label: &'static str,
    pub phase: Phase,
    pub qubits: u64,
    pub bits: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceLedger {
    pub protocol: Scheme,
    pub n: u64,
    /// Classical message bits compared.
    pub c: u64,
    pub items: Vec<LedgerItem>,
}

impl ResourceLedger {
    pub fn q(&self) -> u64 {
        self.items.iter().map(|i| i.qubits).sum()
    }

    pub fn b(&self) -> u64 {
        self.items.iter().map(|i| i.bits).sum()
    }

    pub fn phase_qubits(&self, phase: Phase) -> u64 {
        self.items.iter().filter(|i| i.phase == phase).map(|i| i.qubits).sum()
    }

    pub fn phase_bits(&self, phase: Phase) -> u64 {
        self.items.iter().filter(|i| i.phase == phase).map(|i| i.bits).sum()
    }

    pub fn eta(&self) -> Ratio<u64> {
        Ratio::new(self.c, self.q() + self.b())
    }

    pub fn eta_f64(&self) -> f64 {
        let r = self.eta();
        *r.numer() as f64 / *r.denom() as f64
    }

    /// `protocol=osb n=1 c=2 q=12 b=6 eta=1/9 eta_percent=11.1111`
    pub fn to_record(&self) -> String {
        format!(
            "protocol={} n={} c={} q={} b={} eta={} eta_percent={:.4}",
            self.protocol,
            self.n,
            self.c,
            self.q(),
            self.b(),
            self.eta(),
            100.0 * self.eta_f64()
        )
    }
}

fn item(label: &'static str, phase: Phase, qubits: u64, bits: u64) -> LedgerItem {
    LedgerItem { label, phase, qubits, bits }
}

fn check(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::ZeroCount);
    }
    Ok(())
}

/// `q = 12N`, `b = 5N + 1`, so `η = 2N / (17N + 1)`.
pub fn efficiency_osb(n: u64) -> Result<ResourceLedger> {
    check(n)?;
    use Phase::*;
    Ok(ResourceLedger {
        protocol: Scheme::Osb,
        n,
        c: 2 * n,
        items: vec![
            item("message qubits", Protocol, 4 * n, 0),
            item("decoy qubits", Protocol, 4 * n, 0),
            item("K_AB distribution qubits", KeyEstablishment, 4 * n, 0),
            item("ciphertexts C_A C_B", Protocol, 0, 2 * n),
            item("K_AB distribution bits", KeyEstablishment, 0, 3 * n),
            item("verdict", Protocol, 0, 1),
        ],
    })
}

/// `q = 58N`, `b = 44N + 1`, so `η = 2N / (102N + 1)`.
pub fn efficiency_sqpc(n: u64) -> Result<ResourceLedger> {
    check(n)?;
    use Phase::*;
    Ok(ResourceLedger {
        protocol: Scheme::Sqpc,
        n,
        c: 2 * n,
        items: vec![
            item("TP Bell pairs", Protocol, 16 * n, 0),
            item("resent qubits", Protocol, 8 * n, 0),
            item("K_AB semi-quantum distribution qubits", KeyEstablishment, 24 * n, 0),
            item("K_AT K_BT semi-quantum agreement qubits", KeyEstablishment, 10 * n, 0),
            item("TP mismatch announcements", Protocol, 0, 8 * n),
            item("disclosed coordinates", Protocol, 0, 8 * n),
            item("ciphertexts C_A C_B", Protocol, 0, 2 * n),
            item("verdict", Protocol, 0, 1),
            item("K_AB distribution bits", KeyEstablishment, 0, 16 * n),
            item("K_AT K_BT agreement bits", KeyEstablishment, 0, 10 * n),
        ],
    })
}

pub fn efficiency(protocol: Scheme, n: u64) -> Result<ResourceLedger> {
    match protocol {
        Scheme::Osb => efficiency_osb(n),
        Scheme::Sqpc => efficiency_sqpc(n),
    }
}
