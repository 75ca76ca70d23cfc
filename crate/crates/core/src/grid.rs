//! Fidelity surfaces as CSV: one row per `(p1, p2)` point per kind pair,
//! initial-state parity and trip mode, with the closed form, the Kraus
//! oracle, their difference and the published expression side by side.
//!
//! Parity 0 rows use |ψ+⟩ and parity 1 rows |φ+⟩ as the initial state; the
//! other two Bell states give identical values (checked by
//! [`verify_all_formulas`](crate::fidelity::verify_all_formulas)).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fidelity::{closed_form, oracle_fidelity, printed_fidelity, probability_grid, NoiseScenario, Trips};
use crate::noise::NoiseKind;
use crate::state::BellState;

pub const HEADER: &str = "p1,p2,kind_pair,initial_parity,trips,closed_form_F,oracle_F,abs_deviation,printed_F";

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub p1: f64,
    pub p2: f64,
    pub kinds: (NoiseKind, NoiseKind),
    pub parity: bool,
    pub trips: Trips,
    pub closed_form: f64,
    pub oracle: f64,
    pub abs_deviation: f64,
    pub printed: f64,
}

impl GridRow {
    pub fn kind_pair(&self) -> String {
        format!("{}-{}", self.kinds.0.code(), self.kinds.1.code())
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.p1,
            self.p2,
            self.kind_pair(),
            u8::from(self.parity),
            self.trips,
            self.closed_form,
            self.oracle,
            self.abs_deviation,
            self.printed
        )
    }
}

/// Which slices of the surface to emit.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub step: f64,
    pub trips: Vec<Trips>,
    pub kind_pairs: Vec<(NoiseKind, NoiseKind)>,
}

impl GridSpec {
    /// Every ordered kind pair in both trip modes.
    pub fn full(step: f64) -> Self {
        Self {
            step,
            trips: Trips::ALL.to_vec(),
            kind_pairs: all_kind_pairs(),
        }
    }
}

pub fn all_kind_pairs() -> Vec<(NoiseKind, NoiseKind)> {
    NoiseKind::ALL
        .iter()
        .flat_map(|&a| NoiseKind::ALL.iter().map(move |&b| (a, b)))
        .collect()
}

/// Parses `AD-BF`.
pub fn parse_kind_pair(s: &str) -> Result<(NoiseKind, NoiseKind)> {
    let (a, b) = s
        .split_once('-')
        .ok_or_else(|| Error::Parse(format!("kind pair `{s}` must look like AD-BF")))?;
    Ok((a.parse()?, b.parse()?))
}

/// Rows in order: trip mode, kind pair, parity, then `p1`-major, `p2`-minor.
pub fn fidelity_grid(spec: &GridSpec) -> Result<Vec<GridRow>> {
    let grid = probability_grid(spec.step)?;
    let mut blocks = Vec::new();
    for &trips in &spec.trips {
        for &kinds in &spec.kind_pairs {
            for parity in [false, true] {
                blocks.push((trips, kinds, parity));
            }
        }
    }
    let rows: Vec<Vec<GridRow>> = blocks
        .par_iter()
        .map(|&(trips, kinds, parity)| {
            let initial = if parity { BellState::PhiPlus } else { BellState::PsiPlus };
            let mut out = Vec::with_capacity(grid.len() * grid.len());
            for &p1 in &grid {
                for &p2 in &grid {
                    let s = NoiseScenario::new((kinds.0, p1), (kinds.1, p2), initial, trips)?;
                    let closed = closed_form(&s);
                    let oracle = oracle_fidelity(&s)?;
                    out.push(GridRow {
                        p1,
                        p2,
                        kinds,
                        parity,
                        trips,
                        closed_form: closed,
                        oracle,
                        abs_deviation: (closed - oracle).abs(),
                        printed: printed_fidelity(&s),
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

pub fn to_csv(rows: &[GridRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

/// Inverse of [`to_csv`]; errors name the offending line.
pub fn parse_csv(text: &str) -> Result<Vec<GridRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == HEADER => {}
        _ => return Err(Error::Parse("line 1: missing grid header".into())),
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| parse_row(line).map_err(|e| Error::Parse(format!("line {}: {e}", i + 1))))
        .collect()
}

fn parse_row(line: &str) -> Result<GridRow> {
    let f: Vec<&str> = line.split(',').collect();
    if f.len() != 9 {
        return Err(Error::Parse(format!("expected 9 fields, found {}", f.len())));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("invalid number `{s}`")));
    let parity = match f[3] {
        "0" => false,
        "1" => true,
        other => return Err(Error::Parse(format!("invalid parity `{other}`"))),
    };
    Ok(GridRow {
        p1: num(f[0])?,
        p2: num(f[1])?,
        kinds: parse_kind_pair(f[2])?,
        parity,
        trips: f[4].parse()?,
        closed_form: num(f[5])?,
        oracle: num(f[6])?,
        abs_deviation: num(f[7])?,
        printed: num(f[8])?,
    })
}
