//! Run configuration: `key=value` files overlaid by command-line flags.

use std::path::PathBuf;
use std::str::FromStr;

use crate::adversary::{AttackStrategy, Protocol};
use crate::channel::ArmNoiseSpec;
use crate::error::{Error, Result};
use crate::fidelity::Trips;
use crate::noise::NoiseKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Log,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "log" => Ok(Format::Log),
            _ => Err(Error::Parse(format!("unknown format `{s}` (csv or log)"))),
        }
    }
}

/// Every field has a default; see [`RunConfig::default`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub protocol: Protocol,
    /// Message length in bits.
    pub n: usize,
    pub seed: u64,
    /// Hex messages; default all zeros.
    pub ma: Option<String>,
    pub mb: Option<String>,
    pub noise_a: Option<ArmNoiseSpec>,
    pub noise_b: Option<ArmNoiseSpec>,
    /// Trip mode filter for grids; `None` emits both.
    pub trips: Option<Trips>,
    /// Kind-pair filter for grids; `None` emits all sixteen.
    pub kinds: Option<(NoiseKind, NoiseKind)>,
    pub attack: AttackStrategy,
    pub tolerance: f64,
    pub check_fraction: f64,
    pub trials: usize,
    pub step: f64,
    /// Message lengths for efficiency tables.
    pub ns: Vec<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            protocol: Protocol::Osb,
            n: 16,
            seed: 0,
            ma: None,
            mb: None,
            noise_a: None,
            noise_b: None,
            trips: None,
            kinds: None,
            attack: AttackStrategy::none(),
            tolerance: 0.0,
            check_fraction: 0.5,
            trials: 1000,
            step: 0.05,
            ns: vec![1, 10, 100, 1000, 1_000_000],
            out: None,
            format: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse(format!("invalid value `{value}` for `{key}`")))
}

pub fn parse_list(value: &str) -> Result<Vec<u64>> {
    value.split(',').map(|v| parse("ns", v.trim())).collect()
}

impl RunConfig {
    /// Applies one `key=value` setting. Keys accept `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "protocol" => self.protocol = value.parse()?,
            "n" => self.n = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "ma" => self.ma = Some(value.to_string()),
            "mb" => self.mb = Some(value.to_string()),
            "noise_a" => self.noise_a = Some(value.parse()?),
            "noise_b" => self.noise_b = Some(value.parse()?),
            "trips" => self.trips = Some(value.parse()?),
            "kinds" => self.kinds = Some(crate::grid::parse_kind_pair(value)?),
            "attack" => self.attack = value.parse()?,
            "tolerance" => self.tolerance = parse(key, value)?,
            "check_fraction" => self.check_fraction = parse(key, value)?,
            "trials" => self.trials = parse(key, value)?,
            "step" => self.step = parse(key, value)?,
            "ns" => self.ns = parse_list(value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "format" => self.format = Some(value.parse()?),
            other => return Err(Error::Parse(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Reads `key=value` lines over the current values. Blank lines and
    /// `#` comments are skipped; errors carry the 1-based line number.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |e: Error| Error::Parse(format!("line {}: {}", i + 1, strip(e)));
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| at(Error::Parse(format!("expected key=value, found `{line}`"))))?;
            self.set(k, v).map_err(at)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Parse(m) => m,
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::AttackKind;

    #[test]
    fn parses_all_keys() {
        let c = RunConfig::from_text(
            "# campaign\nprotocol = sqpc\nn=8\nseed=42\nma=0xAB\nmb=0xAC\nnoise-a=ad:0.1\nnoise_b=dc:0.2\n\
             trips=roundtrip\nkinds=AD-DC\nattack=randomize-bell:0.5\ntolerance=0.1\ncheck_fraction=0.25\n\
             trials=10\nstep=0.1\nns=1,2\nout=x.csv\nformat=csv\n",
        )
        .unwrap();
        assert_eq!(c.protocol, Protocol::Sqpc);
        assert_eq!(c.n, 8);
        assert_eq!(c.attack.kind, AttackKind::FullRandomizeBell);
        assert_eq!(c.attack.fraction, 0.5);
        assert_eq!(c.trips, Some(Trips::RoundTrip));
        assert_eq!(c.ns, vec![1, 2]);
        assert_eq!(c.format, Some(Format::Csv));
    }

    #[test]
    fn errors_name_the_line() {
        let err = RunConfig::from_text("n=4\n\nseed=abc\n").unwrap_err();
        assert_eq!(err, Error::Parse("line 3: invalid value `abc` for `seed`".into()));
        let err = RunConfig::from_text("bogus=1").unwrap_err();
        assert!(err.to_string().contains("line 1: unknown key `bogus`"));
        let err = RunConfig::from_text("n 4").unwrap_err();
        assert!(err.to_string().contains("line 1"));
    }
}
