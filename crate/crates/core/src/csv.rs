//! Plain CSV helpers: `,` separator, LF endings, reals with 17 significant
//! digits so every `f64` survives a write/read round trip.

use crate::error::{Error, Result};

pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn join_reals(xs: &[f64]) -> String {
    xs.iter().map(|&x| real(x)).collect::<Vec<_>>().join(",")
}

pub fn parse_real(field: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("`{field}`: {e}")))
}

/// Parse `# a=1, b=2` into key/value pairs.
pub fn parse_meta(line: &str) -> Vec<(String, String)> {
    line.trim_start_matches('#')
        .split(',')
        .filter_map(|kv| {
            let (k, v) = kv.split_once('=')?;
            Some((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0] {
            assert_eq!(parse_real(&real(x)).unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn meta_line() {
        let m = parse_meta("# alpha=1.5, m=3, seed=7");
        assert_eq!(m[1], ("m".into(), "3".into()));
    }
}
