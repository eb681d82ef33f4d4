//! Edge-list text format.
//!
//! ```text
//! n 4 undirected
//! 0 1 1/6
//! 1 2 0.25
//! ```
//!
//! The header is `n <count> directed|undirected`; each further line is
//! `u v [p_e]` with `p_e` a decimal or a fraction `a/b`. Blank lines and
//! lines starting with `#` are skipped. Either every edge carries a weight
//! or none does.

use std::path::Path;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::Topology;
use crate::error::NetworkError;

fn parse_err(line: usize, message: impl Into<String>) -> NetworkError {
    NetworkError::Parse { line, message: message.into() }
}

/// Exact rational from `a/b`, an integer or a decimal literal.
pub(crate) fn parse_rational(s: &str) -> Option<BigRational> {
    if let Some((a, b)) = s.split_once('/') {
        let a = BigInt::from_str(a.trim()).ok()?;
        let b = BigInt::from_str(b.trim()).ok()?;
        if b.is_zero() {
            return None;
        }
        return Some(BigRational::new(a, b));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], i64::from_str(&s[i + 1..]).ok()?),
        None => (s, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str(&digits).ok()?;
    let scale = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10);
    Some(if scale >= 0 {
        BigRational::from_integer(numer * ten.pow(scale as u32))
    } else {
        BigRational::new(numer, ten.pow((-scale) as u32))
    })
}

pub fn parse_edge_list(text: &str) -> Result<Topology, NetworkError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (n, directed) = match fields.as_slice() {
        ["n", count, kind] => {
            let n = usize::from_str(count).map_err(|_| parse_err(hline, format!("bad node count `{count}`")))?;
            let directed = match *kind {
                "directed" => true,
                "undirected" => false,
                other => return Err(parse_err(hline, format!("expected directed|undirected, got `{other}`"))),
            };
            (n, directed)
        }
        _ => return Err(parse_err(hline, "header must be `n <count> directed|undirected`")),
    };

    let mut plain = Vec::new();
    let mut weighted = Vec::new();
    for (lineno, line) in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let node = |s: &str| usize::from_str(s).map_err(|_| parse_err(lineno, format!("bad node id `{s}`")));
        match parts.as_slice() {
            [u, v] => plain.push((node(u)?, node(v)?)),
            [u, v, p] => {
                let w = parse_rational(p).ok_or_else(|| parse_err(lineno, format!("bad weight `{p}`")))?;
                weighted.push((node(u)?, node(v)?, w));
            }
            _ => return Err(parse_err(lineno, "expected `u v [p_e]`")),
        }
    }
    if !plain.is_empty() && !weighted.is_empty() {
        return Err(parse_err(hline, "either all edges carry a weight or none does"));
    }
    if weighted.is_empty() {
        if directed {
            Topology::directed(n, plain)
        } else {
            Topology::undirected(n, plain)
        }
    } else if directed {
        Topology::weighted(n, weighted, std::iter::empty())
    } else {
        Topology::weighted(n, std::iter::empty(), weighted)
    }
}

pub fn read_edge_list(path: &Path) -> Result<Topology, NetworkError> {
    let text = std::fs::read_to_string(path).map_err(|e| NetworkError::Io(format!("{}: {e}", path.display())))?;
    parse_edge_list(&text)
}

/// Serializes a topology that is purely directed or purely undirected.
pub fn to_edge_list(g: &Topology) -> Result<String, NetworkError> {
    if !g.directed_edges().is_empty() && !g.undirected_edges().is_empty() {
        return Err(NetworkError::InvalidFamily("mixed directed/undirected topology has no edge-list form".into()));
    }
    let directed = !g.directed_edges().is_empty();
    let mut out = format!("n {} {}\n", g.n(), if directed { "directed" } else { "undirected" });
    let edges = if directed { g.directed_edges() } else { g.undirected_edges() };
    let weights = g.weights().map(|w| if directed { &w.directed } else { &w.undirected });
    for (i, &(a, b)) in edges.iter().enumerate() {
        match weights {
            Some(w) if w[i].denom().is_one() => out.push_str(&format!("{a} {b} {}\n", w[i].numer())),
            Some(w) => out.push_str(&format!("{a} {b} {}/{}\n", w[i].numer(), w[i].denom())),
            None => out.push_str(&format!("{a} {b}\n")),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::ratio;

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("1/6"), Some(ratio(1, 6)));
        assert_eq!(parse_rational("0.25"), Some(ratio(1, 4)));
        assert_eq!(parse_rational("1"), Some(ratio(1, 1)));
        assert_eq!(parse_rational(".5"), Some(ratio(1, 2)));
        assert_eq!(parse_rational("2.5e-1"), Some(ratio(1, 4)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
    }

    #[test]
    fn parses_weighted_and_plain() {
        let g = parse_edge_list("# test\nn 3 undirected\n0 1 1/3\n1 2 0.5\n").unwrap();
        assert_eq!(g.weights().unwrap().undirected, vec![ratio(1, 3), ratio(1, 2)]);
        let d = parse_edge_list("n 2 directed\n0 1\n").unwrap();
        assert_eq!(d.directed_edges(), &[(0, 1)]);
        assert_eq!(parse_edge_list(&to_edge_list(&g).unwrap()).unwrap(), g);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert!(matches!(parse_edge_list("n x undirected"), Err(NetworkError::Parse { line: 1, .. })));
        assert!(matches!(parse_edge_list("n 3 undirected\n0 1 1\n1 2\n"), Err(NetworkError::Parse { .. })));
        assert!(matches!(parse_edge_list("n 3 undirected\n0\n"), Err(NetworkError::Parse { line: 2, .. })));
        assert_eq!(parse_edge_list("n 3 undirected\n0 5\n"), Err(NetworkError::InvalidEdge(0, 5)));
        assert!(parse_edge_list("n 2 undirected\n0 1 2\n").is_err());
    }
}
