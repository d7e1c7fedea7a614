//! Plain-text reaction grammar.
//!
//! ```text
//! # comments run to end of line
//! species:
//!   S  @payload
//!   ES @payload
//!   E  @counter = e0
//! constants:
//!   k1 = 1
//!   k2 = 1
//!   e0 = 10
//!   v_src = 5
//! reactions:
//!   r1: S + E -k1-> ES
//!   r2: ES -k2-> E !transmit
//! inflows:
//!   v_src -> S
//! ```
//!
//! Sections may appear in any order. Reaction labels are optional (`rN` is
//! assigned by position). Coefficients precede species (`2 A`). An empty
//! product side or `0` denotes no products. Rates and initial counts accept a
//! constant name or a numeric literal.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::network::{Reaction, ReactionNetwork, SpeciesId, SpeciesKind};
use super::ChemError;

/// A network parsed from text with its constants, initial counts and inflow
/// declarations.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedNetwork {
    pub network: ReactionNetwork,
    pub constants: Vec<(String, f64)>,
    pub initial: Vec<(SpeciesId, u64)>,
    /// `(rate name, value, target species)`.
    pub inflows: Vec<(String, f64, SpeciesId)>,
}

impl ParsedNetwork {
    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Species,
    Constants,
    Reactions,
    Inflows,
}

fn err(line: usize, message: impl Into<String>) -> ChemError {
    ChemError::Parse {
        line,
        message: message.into(),
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn parse_network(text: &str) -> Result<ParsedNetwork, ChemError> {
    let mut section = Section::None;
    let mut lines: [Vec<(usize, &str)>; 4] = Default::default();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let header = match line {
            "species:" => Some(Section::Species),
            "constants:" => Some(Section::Constants),
            "reactions:" => Some(Section::Reactions),
            "inflows:" => Some(Section::Inflows),
            _ => None,
        };
        if let Some(s) = header {
            section = s;
            continue;
        }
        let slot = match section {
            Section::None => return Err(err(line_no, "statement outside of a section")),
            Section::Species => 0,
            Section::Constants => 1,
            Section::Reactions => 2,
            Section::Inflows => 3,
        };
        lines[slot].push((line_no, line));
    }

    let mut constants: Vec<(String, f64)> = Vec::new();
    for &(n, line) in &lines[1] {
        let (name, value) = line
            .split_once('=')
            .ok_or_else(|| err(n, "expected `name = value`"))?;
        let name = name.trim();
        if !is_ident(name) {
            return Err(err(n, format!("invalid constant name `{name}`")));
        }
        if constants.iter().any(|(c, _)| c == name) {
            return Err(err(n, format!("constant `{name}` defined twice")));
        }
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| err(n, format!("invalid number `{}`", value.trim())))?;
        constants.push((name.to_owned(), value));
    }
    let resolve = |n: usize, token: &str| -> Result<f64, ChemError> {
        if let Ok(v) = token.parse::<f64>() {
            return Ok(v);
        }
        constants
            .iter()
            .find(|(c, _)| c == token)
            .map(|(_, v)| *v)
            .ok_or_else(|| err(n, format!("unbound constant `{token}`")))
    };

    let mut network = ReactionNetwork::new();
    let mut initial = Vec::new();
    for &(n, line) in &lines[0] {
        let (decl, init) = match line.split_once('=') {
            Some((d, i)) => (d.trim(), Some(i.trim())),
            None => (line, None),
        };
        let mut parts = decl.split_whitespace();
        let name = parts.next().ok_or_else(|| err(n, "missing species name"))?;
        let kind = match parts.next() {
            Some("@payload") => SpeciesKind::Payload,
            Some("@counter") => SpeciesKind::Counter,
            Some(other) => return Err(err(n, format!("unknown annotation `{other}`"))),
            None => return Err(err(n, format!("species `{name}` needs @payload or @counter"))),
        };
        if parts.next().is_some() || !is_ident(name) {
            return Err(err(n, format!("malformed species declaration `{decl}`")));
        }
        let id = network.add_species(name, kind).map_err(|e| err(n, e.to_string()))?;
        if let Some(init) = init {
            if kind == SpeciesKind::Payload {
                return Err(err(n, "payload species start empty"));
            }
            let v = resolve(n, init)?;
            if !(v >= 0.0 && crate::math::floor(v) == v) {
                return Err(err(n, format!("initial count must be a non-negative integer, got {v}")));
            }
            initial.push((id, v as u64));
        }
    }

    for (pos, &(n, line)) in lines[2].iter().enumerate() {
        let (label, body) = match line.split_once(':') {
            Some((l, b)) => (l.trim().to_owned(), b.trim()),
            None => (format!("r{}", pos + 1), line),
        };
        if !is_ident(&label) {
            return Err(err(n, format!("invalid reaction label `{label}`")));
        }
        let (body, tag) = match body.split_once('!') {
            Some((b, t)) => (b.trim(), Some(t.trim())),
            None => (body, None),
        };
        let (lhs, rest) = body
            .split_once('-')
            .ok_or_else(|| err(n, "expected `lhs -k-> rhs`"))?;
        let (rate_token, rhs) = rest
            .split_once("->")
            .ok_or_else(|| err(n, "expected `lhs -k-> rhs`"))?;
        let rate_token = rate_token.trim();
        let rate = resolve(n, rate_token)?;
        let mut reaction = Reaction::new(label, rate);
        if is_ident(rate_token) {
            reaction = reaction.rate_name(rate_token);
        }
        for (s, c) in parse_side(n, lhs, &network)? {
            reaction = reaction.reactant(s, c);
        }
        for (s, c) in parse_side(n, rhs, &network)? {
            reaction = reaction.product(s, c);
        }
        if let Some(tag) = tag {
            if !is_ident(tag) {
                return Err(err(n, format!("invalid emit tag `{tag}`")));
            }
            reaction = reaction.emit(tag);
        }
        network
            .add_reaction(reaction)
            .map_err(|e| err(n, e.to_string()))?;
    }

    let mut inflows = Vec::new();
    for &(n, line) in &lines[3] {
        let (rate, target) = line
            .split_once("->")
            .ok_or_else(|| err(n, "expected `rate -> species`"))?;
        let (rate, target) = (rate.trim(), target.trim());
        let value = resolve(n, rate)?;
        if !(value.is_finite() && value >= 0.0) {
            return Err(err(n, format!("inflow rate must be non-negative, got {value}")));
        }
        let id = network
            .species_id(target)
            .ok_or_else(|| err(n, format!("unknown species `{target}`")))?;
        if network.species_by_id(id).kind() != SpeciesKind::Payload {
            return Err(err(n, format!("inflow into counter-only species `{target}`")));
        }
        inflows.push((rate.to_owned(), value, id));
    }

    Ok(ParsedNetwork {
        network,
        constants,
        initial,
        inflows,
    })
}

fn parse_side(
    n: usize,
    side: &str,
    network: &ReactionNetwork,
) -> Result<Vec<(SpeciesId, u32)>, ChemError> {
    let side = side.trim();
    if side.is_empty() || side == "0" {
        return Ok(Vec::new());
    }
    side.split('+')
        .map(|term| {
            let mut parts = term.split_whitespace();
            let first = parts.next().ok_or_else(|| err(n, "empty term"))?;
            let (coef, name) = match parts.next() {
                Some(name) => {
                    let c: u32 = first
                        .parse()
                        .map_err(|_| err(n, format!("invalid coefficient `{first}`")))?;
                    (c, name)
                }
                None => (1, first),
            };
            if parts.next().is_some() {
                return Err(err(n, format!("malformed term `{}`", term.trim())));
            }
            let id = network
                .species_id(name)
                .ok_or_else(|| err(n, format!("unknown species `{name}`")))?;
            Ok((id, coef))
        })
        .collect()
}
