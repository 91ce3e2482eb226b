//! The sectioned instance file format.
//!
//! ```text
//! VEST 1
//! SECTION Graph
//! Nodes 3
//! Edges 2
//! E 1 2 1.5
//! E 2 3 4
//! SECTION Terminals
//! T 1
//! T 3
//! SECTION VirtualEdges
//! VE 1 3 2 2 3 1
//! EOF
//! ```
//!
//! Vertices are 1-based. Weights are nonnegative decimals, read as integers
//! after multiplying by `10^scale`; a weight with more fractional digits than
//! the scale allows is rejected. Virtual edge weights may also be `inf`.
//! Blank lines, `#` comments and `END` lines closing a section are ignored.

use thiserror::Error;

use crate::graph::Multigraph;
use crate::instance::{Instance, InstanceError, VirtualEdge};
use crate::weight::Weight;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing {0}")]
    Missing(&'static str),
    #[error("invalid instance: {0}")]
    Instance(#[from] InstanceError),
    #[error("scale {0} is too large")]
    Scale(u32),
}

/// Reads a decimal such as `12`, `0.25` or `3.` as an integer in units of
/// `10^-scale`.
pub fn parse_scaled(text: &str, scale: u32) -> Result<i64, String> {
    let bad = || format!("bad weight {text:?}");
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let frac = frac.trim_end_matches('0');
    if frac.len() > scale as usize {
        return Err(format!("{text} needs more than {scale} decimal places"));
    }
    let digits = format!("{int}{frac}{}", "0".repeat(scale as usize - frac.len()));
    let digits = digits.trim_start_matches('0');
    if digits.is_empty() {
        return Ok(0);
    }
    digits.parse().map_err(|_| format!("weight {text} overflows"))
}

/// Inverse of [`parse_scaled`], without trailing zeros.
pub fn format_scaled(value: i64, scale: u32) -> String {
    let unit = 10i128.pow(scale);
    let v = i128::from(value);
    let (int, frac) = (v / unit, (v % unit).abs());
    let sign = if v < 0 && int == 0 { "-" } else { "" };
    if frac == 0 {
        return format!("{sign}{int}");
    }
    let frac = format!("{frac:0width$}", width = scale as usize);
    format!("{sign}{int}.{}", frac.trim_end_matches('0'))
}

pub fn format_weight(w: Weight<i64>, scale: u32) -> String {
    match w {
        Weight::Finite(x) => format_scaled(x, scale),
        Weight::Infinite => "inf".to_string(),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Header,
    None,
    Graph,
    Terminals,
    Virtual,
    Done,
}

struct Reader {
    scale: u32,
    line: usize,
}

impl Reader {
    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn vertex(&self, tok: &str, n: Option<usize>) -> Result<usize, ParseError> {
        let n = n.ok_or_else(|| self.err("vertex before Nodes"))?;
        match tok.parse::<usize>() {
            Ok(x) if (1..=n).contains(&x) => Ok(x - 1),
            _ => Err(self.err(format!("bad vertex {tok:?}"))),
        }
    }

    fn weight(&self, tok: &str, allow_inf: bool) -> Result<Weight<i64>, ParseError> {
        if allow_inf && tok == "inf" {
            return Ok(Weight::Infinite);
        }
        parse_scaled(tok, self.scale).map(Weight::Finite).map_err(|m| self.err(m))
    }

    fn count(&self, tok: Option<&str>) -> Result<usize, ParseError> {
        tok.and_then(|t| t.parse().ok()).ok_or_else(|| self.err("bad count"))
    }
}

pub fn parse_instance(text: &str, scale: u32) -> Result<Instance<i64>, ParseError> {
    if scale > 18 {
        return Err(ParseError::Scale(scale));
    }
    let mut rd = Reader { scale, line: 0 };
    let mut section = Section::Header;
    let mut nodes: Option<usize> = None;
    let mut edges_declared: Option<usize> = None;
    let mut edges = Vec::new();
    let mut terminals = Vec::new();
    let mut virtual_edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        rd.line = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if section == Section::Done {
            return Err(rd.err("content after EOF"));
        }
        if section == Section::Header {
            if toks != ["VEST", "1"] {
                return Err(rd.err("expected header \"VEST 1\""));
            }
            section = Section::None;
            continue;
        }
        match toks[..] {
            ["EOF"] => section = Section::Done,
            ["END"] => section = Section::None,
            ["SECTION", "Graph"] => section = Section::Graph,
            ["SECTION", "Terminals"] => section = Section::Terminals,
            ["SECTION", "VirtualEdges"] => section = Section::Virtual,
            ["SECTION", other] => return Err(rd.err(format!("unknown section {other:?}"))),
            _ => match (section, toks[0]) {
                (Section::Graph, "Nodes") if nodes.is_none() => nodes = Some(rd.count(toks.get(1).copied())?),
                (Section::Graph, "Edges") if edges_declared.is_none() => {
                    edges_declared = Some(rd.count(toks.get(1).copied())?)
                }
                (Section::Graph, "E") if toks.len() == 4 => {
                    let u = rd.vertex(toks[1], nodes)?;
                    let v = rd.vertex(toks[2], nodes)?;
                    edges.push((u, v, rd.weight(toks[3], false)?));
                }
                (Section::Terminals, "Terminals") if toks.len() == 2 => {}
                (Section::Terminals, "T") if toks.len() == 2 => terminals.push(rd.vertex(toks[1], nodes)?),
                (Section::Virtual, "VE") if toks.len() == 7 => {
                    let u = rd.vertex(toks[1], nodes)?;
                    let v = rd.vertex(toks[2], nodes)?;
                    let w: Vec<Weight<i64>> = toks[3..].iter().map(|t| rd.weight(t, true)).collect::<Result<_, _>>()?;
                    virtual_edges.push(VirtualEdge::new(u, v, w[0], w[1], w[2], w[3]));
                }
                _ => return Err(rd.err(format!("unexpected line {line:?}"))),
            },
        }
    }
    match section {
        Section::Header => return Err(ParseError::Missing("header")),
        Section::Done => {}
        _ => return Err(ParseError::Missing("EOF")),
    }
    let n = nodes.ok_or(ParseError::Missing("Nodes"))?;
    if let Some(m) = edges_declared {
        if m != edges.len() {
            return Err(rd.err(format!("declared {m} edges, found {}", edges.len())));
        }
    }
    let graph = Multigraph::from_edges(n, edges).map_err(InstanceError::from)?;
    let inst = Instance::new(graph, terminals, virtual_edges)?;
    inst.check_virtual_weights()?;
    Ok(inst)
}

pub fn render_instance(inst: &Instance<i64>, scale: u32) -> String {
    let mut out = String::from("VEST 1\nSECTION Graph\n");
    out += &format!("Nodes {}\nEdges {}\n", inst.vertex_count(), inst.graph.edge_count());
    for e in inst.graph.edges() {
        out += &format!("E {} {} {}\n", e.u + 1, e.v + 1, format_weight(e.weight, scale));
    }
    out += "SECTION Terminals\n";
    for &t in &inst.terminals {
        out += &format!("T {}\n", t + 1);
    }
    if !inst.virtual_edges.is_empty() {
        out += "SECTION VirtualEdges\n";
        for e in &inst.virtual_edges {
            let w = [e.weight_u, e.weight_v, e.weight_connect, e.weight_disconnect].map(|w| format_weight(w, scale));
            out += &format!("VE {} {} {}\n", e.u + 1, e.v + 1, w.join(" "));
        }
    }
    out += "EOF\n";
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{grid_one_face, k5_three_terminals, random_instance, rng, RandomParams};

    #[test]
    fn scaled_decimals() {
        assert_eq!(parse_scaled("1.5", 1), Ok(15));
        assert_eq!(parse_scaled("1.50", 1), Ok(15));
        assert_eq!(parse_scaled("007", 0), Ok(7));
        assert_eq!(parse_scaled(".25", 2), Ok(25));
        assert!(parse_scaled("1.25", 1).is_err());
        assert!(parse_scaled("-1", 0).is_err());
        assert!(parse_scaled(".", 0).is_err());
        assert!(parse_scaled("99999999999999999999", 0).is_err());
        assert_eq!(format_scaled(15, 1), "1.5");
        assert_eq!(format_scaled(20, 1), "2");
        assert_eq!(format_scaled(5, 3), "0.005");
    }

    #[test]
    fn example_file() {
        let text = "VEST 1\nSECTION Graph\nNodes 3\nEdges 2\nE 1 2 1.5\nE 2 3 4\nEND\n\
                    SECTION Terminals\nTerminals 2\nT 1\nT 3\nSECTION VirtualEdges\nVE 1 3 2 2 3 1\nEOF\n";
        let inst = parse_instance(text, 1).unwrap();
        assert_eq!(inst.terminals, vec![0, 2]);
        assert_eq!(inst.graph.edge(0).weight, Weight::Finite(15));
        assert_eq!(inst.virtual_edges[0].weight_connect, Weight::Finite(30));
    }

    #[test]
    fn malformed() {
        let ok = render_instance(&k5_three_terminals(), 0);
        assert!(parse_instance(&ok, 0).is_ok());
        for bad in [
            ok.replacen("VEST 1", "VEST 2", 1),
            ok.replacen("Edges 10", "Edges 9", 1),
            ok.replacen("E 1 2 1", "E 1 6 1", 1),
            ok.replacen("E 1 2 1", "E 1 2 x", 1),
            ok.replacen("EOF\n", "", 1),
            ok.replacen("SECTION Terminals", "SECTION Steiner", 1),
            format!("{ok}E 1 2 3\n"),
            String::new(),
        ] {
            assert!(parse_instance(&bad, 0).is_err(), "{bad}");
        }
        let bad_virtual = ok.replacen("EOF", "SECTION VirtualEdges\nVE 1 2 1 1 1 2\nEOF", 1);
        assert!(matches!(parse_instance(&bad_virtual, 0), Err(ParseError::Instance(_))));
    }

    #[test]
    fn round_trip() {
        let mut r = rng(3);
        let mut all = vec![k5_three_terminals(), grid_one_face(4, 5, 6, 0, 9, 2)];
        for _ in 0..100 {
            let p = RandomParams {
                virtual_edges: 2,
                ..RandomParams::plain(7, 3)
            };
            all.push(random_instance(&p, &mut r));
        }
        for inst in all {
            for scale in [0, 2] {
                assert_eq!(parse_instance(&render_instance(&inst, scale), scale).unwrap(), inst);
            }
        }
    }
}
