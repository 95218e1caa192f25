//! Dense noiseless statevector simulation.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};
use core::fmt;

use num_complex::Complex64;

use crate::circuit::CircuitGenome;
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "UPPERCASE"))]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    H,
    Cx,
    Cz,
    S,
    X,
    Y,
    Z,
    I,
}

impl GateKind {
    pub const ALL: [GateKind; 11] = [
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::H,
        GateKind::Cx,
        GateKind::Cz,
        GateKind::S,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::I,
    ];

    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz)
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::Cx | GateKind::Cz => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rx => "RX",
            GateKind::Ry => "RY",
            GateKind::Rz => "RZ",
            GateKind::H => "H",
            GateKind::Cx => "CX",
            GateKind::Cz => "CZ",
            GateKind::S => "S",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::I => "I",
        }
    }

    pub fn from_name(name: &str) -> Option<GateKind> {
        GateKind::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where a rotation gate takes its angle from.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum AngleSource {
    /// Constant angle in radians.
    Fixed(f64),
    /// Index into the trainable parameter vector.
    Trainable(usize),
    /// Index into the feature vector; angle = feature × π.
    Embedding(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Targets {
    One(usize),
    /// (control, target) for CX; CZ is symmetric.
    Two(usize, usize),
}

impl Targets {
    pub fn qubits(&self) -> impl Iterator<Item = usize> {
        let (a, b) = match *self {
            Targets::One(q) => (q, None),
            Targets::Two(a, b) => (a, Some(b)),
        };
        core::iter::once(a).chain(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GateSpec {
    pub kind: GateKind,
    pub targets: Targets,
    pub angle: Option<AngleSource>,
}

impl GateSpec {
    pub fn rotation(kind: GateKind, qubit: usize, angle: AngleSource) -> GateSpec {
        debug_assert!(kind.is_rotation());
        GateSpec { kind, targets: Targets::One(qubit), angle: Some(angle) }
    }

    pub fn single(kind: GateKind, qubit: usize) -> GateSpec {
        GateSpec { kind, targets: Targets::One(qubit), angle: None }
    }

    pub fn two(kind: GateKind, a: usize, b: usize) -> GateSpec {
        GateSpec { kind, targets: Targets::Two(a, b), angle: None }
    }

    /// Checks the structural invariants of the gate against a register size.
    pub fn check(&self, n_qubits: usize) -> Result<()> {
        let expected = self.kind.arity();
        let got = match self.targets {
            Targets::One(_) => 1,
            Targets::Two(..) => 2,
        };
        if expected != got {
            return Err(Error::Arity { kind: self.kind, expected });
        }
        if let Targets::Two(a, b) = self.targets {
            if a == b {
                return Err(Error::RepeatedQubit { kind: self.kind, qubit: a });
            }
        }
        if let Some(index) = self.targets.qubits().find(|&q| q >= n_qubits) {
            return Err(Error::QubitOutOfRange { index, n_qubits });
        }
        match (self.kind.is_rotation(), self.angle.is_some()) {
            (true, false) => Err(Error::MissingAngle { kind: self.kind }),
            (false, true) => Err(Error::SuperfluousAngle { kind: self.kind }),
            _ => Ok(()),
        }
    }

    pub fn param_slot(&self) -> Option<usize> {
        match self.angle {
            Some(AngleSource::Trainable(slot)) => Some(slot),
            _ => None,
        }
    }

    pub fn feature_index(&self) -> Option<usize> {
        match self.angle {
            Some(AngleSource::Embedding(index)) => Some(index),
            _ => None,
        }
    }
}

/// Angle applied by an embedding gate for a feature value in [-1, 1].
pub fn embedding_angle(feature: f64) -> f64 {
    feature * PI
}

/// A 2×2 unitary acting on one qubit.
pub type Matrix2 = [[Complex64; 2]; 2];

/// Gate lowered to a simulation kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Kernel {
    Single { qubit: usize, matrix: Matrix2 },
    Cx { control: usize, target: usize },
    Cz { a: usize, b: usize },
    Identity,
}

fn rotation_matrix(kind: GateKind, theta: f64) -> Matrix2 {
    let (sn, cs) = libm::sincos(theta / 2.0);
    let (c, s) = (Complex64::new(cs, 0.0), Complex64::new(sn, 0.0));
    match kind {
        GateKind::Rx => [[c, -I * s], [-I * s, c]],
        GateKind::Ry => [[c, -s], [s, c]],
        GateKind::Rz => [[Complex64::new(cs, -sn), ZERO], [ZERO, Complex64::new(cs, sn)]],
        _ => unreachable!("not a rotation"),
    }
}

fn fixed_matrix(kind: GateKind) -> Matrix2 {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    match kind {
        GateKind::H => [[h, h], [h, -h]],
        GateKind::S => [[ONE, ZERO], [ZERO, I]],
        GateKind::X => [[ZERO, ONE], [ONE, ZERO]],
        GateKind::Y => [[ZERO, -I], [I, ZERO]],
        GateKind::Z => [[ONE, ZERO], [ZERO, -ONE]],
        GateKind::I => [[ONE, ZERO], [ZERO, ONE]],
        _ => unreachable!("not a fixed single-qubit gate"),
    }
}

impl Kernel {
    /// Lowers a checked gate. `angle` must be present exactly for rotations.
    pub(crate) fn lower(gate: &GateSpec, angle: Option<f64>) -> Kernel {
        match (gate.kind, gate.targets) {
            (GateKind::I, _) => Kernel::Identity,
            (GateKind::Cx, Targets::Two(control, target)) => Kernel::Cx { control, target },
            (GateKind::Cz, Targets::Two(a, b)) => Kernel::Cz { a, b },
            (kind, Targets::One(qubit)) if kind.is_rotation() => Kernel::Single {
                qubit,
                matrix: rotation_matrix(kind, angle.expect("rotation without angle")),
            },
            (kind, Targets::One(qubit)) => Kernel::Single { qubit, matrix: fixed_matrix(kind) },
            (kind, _) => unreachable!("unchecked gate {kind}"),
        }
    }

    pub(crate) fn apply(&self, amps: &mut [Complex64]) {
        match *self {
            Kernel::Single { qubit, ref matrix } => apply_single(amps, qubit, matrix),
            Kernel::Cx { control, target } => apply_cx(amps, control, target),
            Kernel::Cz { a, b } => apply_cz(amps, a, b),
            Kernel::Identity => {}
        }
    }

    /// Applies the kernel to bit positions shifted by `offset`, with the
    /// matrix conjugated when `conjugate` is set. Used for density matrices
    /// stored as vectors over 2n index bits.
    pub(crate) fn apply_shifted(&self, amps: &mut [Complex64], offset: usize, conjugate: bool) {
        match *self {
            Kernel::Single { qubit, matrix } => {
                let m = if conjugate {
                    [[matrix[0][0].conj(), matrix[0][1].conj()], [matrix[1][0].conj(), matrix[1][1].conj()]]
                } else {
                    matrix
                };
                apply_single(amps, qubit + offset, &m)
            }
            Kernel::Cx { control, target } => apply_cx(amps, control + offset, target + offset),
            Kernel::Cz { a, b } => apply_cz(amps, a + offset, b + offset),
            Kernel::Identity => {}
        }
    }
}

pub(crate) fn apply_single(amps: &mut [Complex64], bit: usize, m: &Matrix2) {
    let stride = 1usize << bit;
    let mut base = 0;
    while base < amps.len() {
        for i in base..base + stride {
            let a0 = amps[i];
            let a1 = amps[i + stride];
            amps[i] = m[0][0] * a0 + m[0][1] * a1;
            amps[i + stride] = m[1][0] * a0 + m[1][1] * a1;
        }
        base += stride << 1;
    }
}

pub(crate) fn apply_cx(amps: &mut [Complex64], control: usize, target: usize) {
    let (cmask, tmask) = (1usize << control, 1usize << target);
    for i in 0..amps.len() {
        if i & cmask != 0 && i & tmask == 0 {
            amps.swap(i, i | tmask);
        }
    }
}

pub(crate) fn apply_cz(amps: &mut [Complex64], a: usize, b: usize) {
    let mask = (1usize << a) | (1usize << b);
    for (i, amp) in amps.iter_mut().enumerate() {
        if i & mask == mask {
            *amp = -*amp;
        }
    }
}

/// Pure state over `n_qubits` qubits, little-endian basis order.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    /// |0…0⟩.
    pub fn zero(n_qubits: usize) -> QuantumState {
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[0] = ONE;
        QuantumState { n_qubits, amplitudes }
    }

    /// Computational basis state |index⟩.
    pub fn basis(n_qubits: usize, index: usize) -> QuantumState {
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[index] = ONE;
        QuantumState { n_qubits, amplitudes }
    }

    /// Builds a state from raw amplitudes; the length must be a power of two
    /// and the vector normalized within [`tolerance::NORM`](crate::tolerance::NORM).
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<QuantumState> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::InvalidInput(alloc::format!("amplitude count {len} is not a power of two")));
        }
        let state = QuantumState { n_qubits: len.trailing_zeros() as usize, amplitudes };
        let drift = libm::fabs(state.norm_sqr() - 1.0);
        if drift > crate::tolerance::NORM {
            return Err(Error::InvalidInput(alloc::format!("state norm deviates from 1 by {drift:e}")));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Returns the state after `gate`. `angle` is required for rotations and
    /// rejected otherwise.
    pub fn apply_gate(&self, gate: &GateSpec, angle: Option<f64>) -> Result<QuantumState> {
        let mut next = self.clone();
        next.apply_gate_mut(gate, angle)?;
        Ok(next)
    }

    pub fn apply_gate_mut(&mut self, gate: &GateSpec, angle: Option<f64>) -> Result<()> {
        check_gate_shape(gate, self.n_qubits)?;
        match (gate.kind.is_rotation(), angle.is_some()) {
            (true, false) => return Err(Error::MissingAngle { kind: gate.kind }),
            (false, true) => return Err(Error::SuperfluousAngle { kind: gate.kind }),
            _ => {}
        }
        Kernel::lower(gate, angle).apply(&mut self.amplitudes);
        Ok(())
    }

    pub(crate) fn apply_kernel(&mut self, kernel: &Kernel) {
        kernel.apply(&mut self.amplitudes);
    }
}

/// Shape checks only (arity, distinct qubits, range); the angle source is
/// irrelevant when the caller supplies the angle directly.
fn check_gate_shape(gate: &GateSpec, n_qubits: usize) -> Result<()> {
    let probe = GateSpec { angle: gate.kind.is_rotation().then_some(AngleSource::Fixed(0.0)), ..*gate };
    probe.check(n_qubits)
}

/// Resolves the angle of `gate` against parameter and feature vectors.
pub fn resolve_angle(gate: &GateSpec, params: &[f64], features: &[f64]) -> Result<Option<f64>> {
    Ok(match gate.angle {
        None => None,
        Some(AngleSource::Fixed(theta)) => Some(theta),
        Some(AngleSource::Trainable(slot)) => {
            Some(*params.get(slot).ok_or(Error::MissingParam { slot, len: params.len() })?)
        }
        Some(AngleSource::Embedding(index)) => {
            let value = *features.get(index).ok_or(Error::MissingFeature { index, len: features.len() })?;
            if !(-1.0..=1.0).contains(&value) {
                return Err(Error::FeatureOutOfRange { index, value });
            }
            Some(embedding_angle(value))
        }
    })
}

/// Lowers every gate of `genome` against concrete inputs.
pub(crate) fn compile(genome: &CircuitGenome, params: &[f64], features: &[f64]) -> Result<Vec<Kernel>> {
    genome
        .gates
        .iter()
        .map(|gate| {
            gate.check(genome.n_qubits)?;
            Ok(Kernel::lower(gate, resolve_angle(gate, params, features)?))
        })
        .collect()
}

/// Executes `genome` on |0…0⟩. Embedding gates read `features` (angle =
/// feature × π), trainable gates read `params`.
pub fn run_circuit(genome: &CircuitGenome, params: &[f64], features: &[f64]) -> Result<QuantumState> {
    let kernels = compile(genome, params, features)?;
    let mut state = QuantumState::zero(genome.n_qubits);
    for kernel in &kernels {
        state.apply_kernel(kernel);
    }
    Ok(state)
}

/// ⟨Z_q⟩ for a single qubit.
pub(crate) fn z_expectation(amps: &[Complex64], qubit: usize) -> f64 {
    let mask = 1usize << qubit;
    amps.iter()
        .enumerate()
        .map(|(i, a)| if i & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
        .sum()
}

/// Mean single-qubit ⟨Z⟩ over `qubits`.
pub fn expectation_z(state: &QuantumState, qubits: &[usize]) -> Result<f64> {
    check_measurement(qubits, state.n_qubits)?;
    let total: f64 = qubits.iter().map(|&q| z_expectation(&state.amplitudes, q)).sum();
    Ok((total / qubits.len() as f64).clamp(-1.0, 1.0))
}

pub(crate) fn check_measurement(qubits: &[usize], n_qubits: usize) -> Result<()> {
    if qubits.is_empty() {
        return Err(Error::EmptyQubitSet);
    }
    match qubits.iter().find(|&&q| q >= n_qubits) {
        Some(&index) => Err(Error::QubitOutOfRange { index, n_qubits }),
        None => Ok(()),
    }
}

/// |⟨a|b⟩|².
pub fn state_fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    if a.n_qubits != b.n_qubits {
        return Err(Error::DimensionMismatch { left: a.n_qubits, right: b.n_qubits });
    }
    Ok(overlap_sqr(&a.amplitudes, &b.amplitudes))
}

/// Symmetric in its arguments: the conjugated inner product has the same modulus.
pub(crate) fn overlap_sqr(a: &[Complex64], b: &[Complex64]) -> f64 {
    let inner: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    inner.norm_sqr()
}
