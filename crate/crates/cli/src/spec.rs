//! Command-line strategy specs.
//!
//! A host or player is either a short name (`haar`, `finite:100`,
//! `cheat-real`, `angle:0.4`, ...), an inline JSON strategy object, or
//! `@path` to a JSON file.

use std::f64::consts::PI;

use qmonty::hilbert::{haar_random_unit, StateVector};
use qmonty::strategies::{complete_to_triple, FiniteCatalog, FixedPovm, HostStrategy, PlayerStrategy};
use qmonty::RandomStream;

/// Stream of the master seed reserved for catalogs and bases built from specs.
const SPEC_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct SpecError(pub String);

fn json_or_file<T: serde::de::DeserializeOwned>(text: &str) -> Option<Result<T, SpecError>> {
    let body = if let Some(path) = text.strip_prefix('@') {
        match std::fs::read_to_string(path) {
            Ok(body) => body,
            Err(e) => return Some(Err(SpecError(format!("cannot read {path}: {e}")))),
        }
    } else if text.trim_start().starts_with('{') {
        text.to_string()
    } else {
        return None;
    };
    Some(serde_json::from_str(&body).map_err(|e| SpecError(format!("bad strategy JSON: {e}"))))
}

fn param<'a>(text: &'a str, name: &str) -> Option<&'a str> {
    text.strip_prefix(name)?.strip_prefix(':')
}

/// Host names: `axes`, `haar`, `real`, `finite:N` (N Haar-random catalog
/// vectors), `entangled`, `entangled-povm` (random projective basis),
/// `ignore`, `complete-vn`, `aborting:T`. Random parameters derive from `seed`.
pub fn parse_host(text: &str, seed: u64) -> Result<HostStrategy, SpecError> {
    if let Some(parsed) = json_or_file::<HostStrategy>(text) {
        let host = parsed?;
        host.validate().map_err(|e| SpecError(e.to_string()))?;
        return Ok(host);
    }
    let mut rng = RandomStream::new(seed, SPEC_STREAM);
    let host = match text {
        "axes" => HostStrategy::axes(),
        "haar" => HostStrategy::Haar,
        "real" => HostStrategy::RealVector,
        "entangled" => HostStrategy::entangled_transpose(),
        "entangled-povm" => {
            let basis = complete_to_triple(&haar_random_unit(&mut rng), &mut rng);
            HostStrategy::entangled_fixed(FixedPovm::projective(&basis))
        }
        "ignore" => HostStrategy::IgnoreNotepad,
        "complete-vn" => HostStrategy::CompleteVn {
            prize: StateVector::basis(0),
        },
        _ => {
            if let Some(n) = param(text, "finite") {
                let n: usize = n.parse().map_err(|_| SpecError(format!("bad catalog size {n:?}")))?;
                let catalog = FiniteCatalog::haar(n, &mut rng).map_err(|e| SpecError(e.to_string()))?;
                HostStrategy::finite_set(catalog)
            } else if let Some(t) = param(text, "aborting") {
                let reveal_below = t.parse().map_err(|_| SpecError(format!("bad threshold {t:?}")))?;
                HostStrategy::Aborting { reveal_below }
            } else {
                return Err(SpecError(format!("unknown host {text:?}")));
            }
        }
    };
    host.validate().map_err(|e| SpecError(e.to_string()))?;
    Ok(host)
}

/// Player names: `stick`, `switch`, `cheat-finite` (against the host's
/// catalog), `cheat-real`, `angle:θ`, `bayes` (modeling the host).
pub fn parse_player(text: &str, host: &HostStrategy, seed: u64) -> Result<PlayerStrategy, SpecError> {
    if let Some(parsed) = json_or_file::<PlayerStrategy>(text) {
        let player = parsed?;
        player.validate().map_err(|e| SpecError(e.to_string()))?;
        return Ok(player);
    }
    let player = match text {
        "stick" => PlayerStrategy::stick(),
        "switch" => PlayerStrategy::switch(),
        "cheat-real" => PlayerStrategy::RealCheat,
        "bayes" => PlayerStrategy::bayes_against(host),
        "cheat-finite" => {
            let mut rng = RandomStream::new(seed, SPEC_STREAM - 1);
            PlayerStrategy::finite_cheat_against(host, &mut rng).map_err(|e| SpecError(e.to_string()))?
        }
        _ => match param(text, "angle") {
            Some(t) => PlayerStrategy::angle(t.parse().map_err(|_| SpecError(format!("bad angle {t:?}")))?),
            None => return Err(SpecError(format!("unknown player {text:?}"))),
        },
    };
    player.validate().map_err(|e| SpecError(e.to_string()))?;
    Ok(player)
}

/// A list of angles: `a,b,c` or `start:stop:count` (inclusive). Numbers may
/// be written as multiples of pi, e.g. `pi/8` or `3pi/8`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, SpecError> {
    let grid = if let [start, stop, count] = text.split(':').collect::<Vec<_>>()[..] {
        let (start, stop) = (parse_angle(start)?, parse_angle(stop)?);
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| SpecError(format!("bad point count {count:?}")))?;
        match count {
            0 => Vec::new(),
            1 => vec![start],
            _ => (0..count)
                .map(|k| start + (stop - start) * k as f64 / (count - 1) as f64)
                .collect(),
        }
    } else {
        text.split(',').map(parse_angle).collect::<Result<_, _>>()?
    };
    if grid.is_empty() {
        return Err(SpecError("empty angle grid".into()));
    }
    Ok(grid)
}

fn parse_angle(text: &str) -> Result<f64, SpecError> {
    let text = text.trim();
    let bad = || SpecError(format!("bad angle {text:?}"));
    let Some(at) = text.find("pi") else {
        return text.parse().map_err(|_| bad());
    };
    let coefficient = match text[..at].trim_end_matches('*') {
        "" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    let divisor = match &text[at + 2..] {
        "" => 1.0,
        rest => rest.strip_prefix('/').ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?,
    };
    Ok(coefficient * PI / divisor)
}
