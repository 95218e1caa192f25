//! Line-oriented genome records.
//!
//! ```text
//! qcs-genome 1
//! n_qubits 3
//! n_params 2
//! gates 4
//! RY q0 feat 17
//! RX q1 param 0
//! CX q0 q1
//! RZ q2 fixed 0.785
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Angles written as
//! `fixed` use Rust's shortest round-trip float formatting, so save then load
//! is the identity.

use std::fmt::Write as _;

use qcs_core::circuit::CircuitGenome;
use qcs_core::sim::{AngleSource, GateKind, GateSpec};

use crate::error::FormatError;

pub const MAGIC: &str = "qcs-genome";
pub const VERSION: u32 = 1;

/// Renders `genome`, preceded by `comment` lines (each prefixed with `# `).
pub fn save_genome(genome: &CircuitGenome, comment: &[String]) -> String {
    let mut out = String::new();
    for line in comment {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    let _ = writeln!(out, "n_qubits {}", genome.n_qubits);
    let _ = writeln!(out, "n_params {}", genome.n_params);
    let _ = writeln!(out, "gates {}", genome.gates.len());
    for gate in &genome.gates {
        let mut line = gate.kind.name().to_string();
        for q in gate.targets.qubits() {
            let _ = write!(line, " q{q}");
        }
        match gate.angle {
            Some(AngleSource::Trainable(slot)) => {
                let _ = write!(line, " param {slot}");
            }
            Some(AngleSource::Embedding(index)) => {
                let _ = write!(line, " feat {index}");
            }
            Some(AngleSource::Fixed(theta)) => {
                let _ = write!(line, " fixed {theta:?}");
            }
            None => {}
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn header_value(lines: &mut Lines<'_>, key: &str) -> Result<usize, FormatError> {
    let (number, line) = lines.next_line().ok_or_else(|| FormatError::parse(lines.last + 1, key, "missing header line"))?;
    let mut fields = line.split_whitespace();
    if fields.next() != Some(key) {
        return Err(FormatError::parse(number, key, format!("expected '{key} <n>', found '{line}'")));
    }
    let value = fields.next().ok_or_else(|| FormatError::parse(number, key, "missing value"))?;
    if fields.next().is_some() {
        return Err(FormatError::parse(number, key, "trailing fields"));
    }
    value.parse().map_err(|_| FormatError::parse(number, key, format!("'{value}' is not a count")))
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    /// Next meaningful line with its 1-based number.
    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        for (index, raw) in self.inner.by_ref() {
            self.last = index + 1;
            let line = raw.trim();
            if !line.is_empty() && !line.starts_with('#') {
                return Some((index + 1, line));
            }
        }
        None
    }
}

fn parse_qubit(number: usize, field: &str, token: Option<&str>) -> Result<usize, FormatError> {
    let token = token.ok_or_else(|| FormatError::parse(number, field, "missing qubit"))?;
    token
        .strip_prefix('q')
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| FormatError::parse(number, field, format!("'{token}' is not a qubit like q3")))
}

fn parse_gate(number: usize, line: &str) -> Result<GateSpec, FormatError> {
    let mut fields = line.split_whitespace();
    let name = fields.next().unwrap_or_default();
    let kind =
        GateKind::from_name(name).ok_or_else(|| FormatError::parse(number, "kind", format!("unknown gate kind '{name}'")))?;
    let gate = if kind.arity() == 2 {
        let a = parse_qubit(number, "control", fields.next())?;
        let b = parse_qubit(number, "target", fields.next())?;
        GateSpec::two(kind, a, b)
    } else {
        let q = parse_qubit(number, "qubit", fields.next())?;
        if kind.is_rotation() {
            let source = fields.next().ok_or_else(|| FormatError::parse(number, "angle", "rotation needs an angle source"))?;
            let value = fields.next().ok_or_else(|| FormatError::parse(number, source, "missing value"))?;
            let index = || value.parse::<usize>().map_err(|_| FormatError::parse(number, source, format!("'{value}' is not an index")));
            let angle = match source {
                "param" => AngleSource::Trainable(index()?),
                "feat" => AngleSource::Embedding(index()?),
                "fixed" => AngleSource::Fixed(
                    value
                        .parse::<f64>()
                        .ok()
                        .filter(|t| t.is_finite())
                        .ok_or_else(|| FormatError::parse(number, "fixed", format!("'{value}' is not a finite angle")))?,
                ),
                other => {
                    return Err(FormatError::parse(number, "angle", format!("unknown angle source '{other}'")));
                }
            };
            GateSpec::rotation(kind, q, angle)
        } else {
            GateSpec::single(kind, q)
        }
    };
    if let Some(extra) = fields.next() {
        return Err(FormatError::parse(number, "gate", format!("unexpected trailing field '{extra}'")));
    }
    Ok(gate)
}

/// Parses a record written by [`save_genome`]. Any structural problem is an
/// error; no partial genome is returned.
pub fn load_genome(text: &str) -> Result<CircuitGenome, FormatError> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
    let (number, magic) = lines.next_line().ok_or_else(|| FormatError::parse(1, "header", "empty genome record"))?;
    let mut fields = magic.split_whitespace();
    if fields.next() != Some(MAGIC) {
        return Err(FormatError::parse(number, "header", format!("expected '{MAGIC} {VERSION}'")));
    }
    let version = fields.next().unwrap_or_default();
    if version != VERSION.to_string() {
        return Err(FormatError::Version { found: version.into(), expected: VERSION });
    }
    let n_qubits = header_value(&mut lines, "n_qubits")?;
    let n_params = header_value(&mut lines, "n_params")?;
    let declared_line = lines.last;
    let n_gates = header_value(&mut lines, "gates")?;
    let mut gates = Vec::with_capacity(n_gates);
    while let Some((number, line)) = lines.next_line() {
        if gates.len() == n_gates {
            return Err(FormatError::parse(number, "gates", format!("more than the declared {n_gates} gates")));
        }
        let gate = parse_gate(number, line)?;
        gate.check(n_qubits).map_err(|e| FormatError::parse(number, "gate", e.to_string()))?;
        gates.push(gate);
    }
    if gates.len() != n_gates {
        return Err(FormatError::parse(
            lines.last + 1,
            "gates",
            format!("record truncated: {} of {n_gates} gates", gates.len()),
        ));
    }
    let genome = CircuitGenome::new(n_qubits, gates);
    if genome.n_params != n_params {
        return Err(FormatError::parse(
            declared_line,
            "n_params",
            format!("header says {n_params} but the gates use {} slots", genome.n_params),
        ));
    }
    Ok(genome)
}
