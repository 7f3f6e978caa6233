//! Exact small-statevector quantum core.
//!
//! One- and two-qubit states are kept as explicit complex amplitude
//! vectors so that adversarial transformations outside the protocol's
//! state set stay representable. Measurement is Born-rule sampling with
//! one uniform draw per measurement (cumulative-probability inversion),
//! pulled from a generator the caller owns.

use num_complex::Complex64;
use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::rng::RunRng;

/// Tolerance for normalization checks. All protocol states are exact in
/// {0, ±1, ±1/√2}; this only guards floating-point drift.
pub const NORM_TOLERANCE: f64 = 1e-12;

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Single-qubit state: amplitudes over |0⟩, |1⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ket {
    amps: [Complex64; 2],
}

impl Ket {
    /// Wraps an amplitude pair, insisting on unit norm.
    pub fn new(amps: [Complex64; 2]) -> Self {
        let k = Ket { amps };
        assert!(
            (k.norm_sqr() - 1.0).abs() <= NORM_TOLERANCE,
            "single-qubit state must be normalized, got |ψ|² = {}",
            k.norm_sqr()
        );
        k
    }

    pub fn amps(&self) -> [Complex64; 2] {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Same physical state multiplied by a global phase e^{iφ}.
    pub fn phase_shifted(&self, phi: f64) -> Self {
        let p = Complex64::from_polar(1.0, phi);
        Ket::new([self.amps[0] * p, self.amps[1] * p])
    }
}

/// Two-qubit state: amplitudes over the product basis |00⟩, |01⟩, |10⟩, |11⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ket4 {
    amps: [Complex64; 4],
}

impl Ket4 {
    pub fn new(amps: [Complex64; 4]) -> Self {
        let k = Ket4 { amps };
        assert!(
            (k.norm_sqr() - 1.0).abs() <= NORM_TOLERANCE,
            "two-qubit state must be normalized, got |ψ|² = {}",
            k.norm_sqr()
        );
        k
    }

    pub fn product(first: &Ket, second: &Ket) -> Self {
        let a = first.amps();
        let b = second.amps();
        Ket4::new([a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]])
    }

    pub fn amps(&self) -> [Complex64; 4] {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Measurement basis: Z is {|0⟩, |1⟩}, X is {|+⟩, |−⟩}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    /// Eigenvector for outcome bit `bit` (false → first eigenvector).
    pub fn eigenstate(self, bit: bool) -> Ket {
        prepare(PrepLabel::from_parts(self, bit))
    }

    pub fn random(rng: &mut RunRng) -> Basis {
        if rng.random::<bool>() {
            Basis::X
        } else {
            Basis::Z
        }
    }
}

/// The four BB84 preparation labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PrepLabel {
    Zero,
    One,
    Plus,
    Minus,
}

impl PrepLabel {
    pub const ALL: [PrepLabel; 4] = [
        PrepLabel::Zero,
        PrepLabel::One,
        PrepLabel::Plus,
        PrepLabel::Minus,
    ];

    /// Basis the label lives in.
    pub fn basis(self) -> Basis {
        match self {
            PrepLabel::Zero | PrepLabel::One => Basis::Z,
            PrepLabel::Plus | PrepLabel::Minus => Basis::X,
        }
    }

    /// Bit the label encodes within its basis.
    pub fn bit(self) -> bool {
        matches!(self, PrepLabel::One | PrepLabel::Minus)
    }

    /// Unique label for a (basis, bit) pair.
    pub fn from_parts(basis: Basis, bit: bool) -> Self {
        match (basis, bit) {
            (Basis::Z, false) => PrepLabel::Zero,
            (Basis::Z, true) => PrepLabel::One,
            (Basis::X, false) => PrepLabel::Plus,
            (Basis::X, true) => PrepLabel::Minus,
        }
    }

    pub fn random(rng: &mut RunRng) -> Self {
        Self::ALL[rng.random_range(0..4)]
    }
}

/// The four Bell states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellLabel {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [
        BellLabel::PhiPlus,
        BellLabel::PhiMinus,
        BellLabel::PsiPlus,
        BellLabel::PsiMinus,
    ];
}

/// Canonical unit vector for a BB84 label.
pub fn prepare(label: PrepLabel) -> Ket {
    match label {
        PrepLabel::Zero => Ket::new([c(1.0), c(0.0)]),
        PrepLabel::One => Ket::new([c(0.0), c(1.0)]),
        PrepLabel::Plus => Ket::new([c(SQRT_HALF), c(SQRT_HALF)]),
        PrepLabel::Minus => Ket::new([c(SQRT_HALF), c(-SQRT_HALF)]),
    }
}

/// Canonical Bell vector for a label.
pub fn prepare_bell(label: BellLabel) -> Ket4 {
    let h = c(SQRT_HALF);
    match label {
        BellLabel::PhiPlus => Ket4::new([h, c(0.0), c(0.0), h]),
        BellLabel::PhiMinus => Ket4::new([h, c(0.0), c(0.0), -h]),
        BellLabel::PsiPlus => Ket4::new([c(0.0), h, h, c(0.0)]),
        BellLabel::PsiMinus => Ket4::new([c(0.0), h, -h, c(0.0)]),
    }
}

/// Pauli X: swaps the computational amplitudes. Note X|+⟩ = |+⟩ and
/// X|−⟩ = −|−⟩, so X is invisible on the X basis up to phase.
pub fn apply_x(k: &Ket) -> Ket {
    let a = k.amps();
    Ket::new([a[1], a[0]])
}

/// Basis-covariant bit flip (i·σ_y): maps |0⟩ ↔ |1⟩ and |+⟩ ↔ |−⟩,
/// each up to a global phase. This is the flip that inverts the encoded
/// bit regardless of which BB84 basis the carrier was prepared in.
pub fn apply_flip(k: &Ket) -> Ket {
    let a = k.amps();
    Ket::new([a[1], -a[0]])
}

fn overlap(e: &Ket, k: &Ket) -> Complex64 {
    let ea = e.amps();
    let ka = k.amps();
    ea[0].conj() * ka[0] + ea[1].conj() * ka[1]
}

/// Born probabilities of the two outcomes of measuring `k` in `basis`.
pub fn born_probabilities(k: &Ket, basis: Basis) -> [f64; 2] {
    let p0 = overlap(&basis.eigenstate(false), k).norm_sqr();
    let p1 = overlap(&basis.eigenstate(true), k).norm_sqr();
    [p0, p1]
}

/// Projective measurement; returns the outcome bit and the collapsed state.
pub fn measure(k: &Ket, basis: Basis, rng: &mut RunRng) -> (bool, Ket) {
    let p = born_probabilities(k, basis);
    let u: f64 = rng.random();
    let bit = u >= p[0];
    (bit, basis.eigenstate(bit))
}

/// X ⊗ I: Pauli X on the first qubit of a pair.
pub fn apply_x_first(k: &Ket4) -> Ket4 {
    let a = k.amps();
    Ket4::new([a[2], a[3], a[0], a[1]])
}

/// I ⊗ X: Pauli X on the second qubit of a pair.
pub fn apply_x_second(k: &Ket4) -> Ket4 {
    let a = k.amps();
    Ket4::new([a[1], a[0], a[3], a[2]])
}

fn measure_one(k: &Ket4, first: bool, basis: Basis, rng: &mut RunRng) -> (bool, Ket4) {
    let amps = k.amps();
    let index_of = |own: usize, other: usize| if first { own * 2 + other } else { other * 2 + own };
    // Amplitudes of the companion qubit conditional on each outcome.
    let component = |bit: bool| -> [Complex64; 2] {
        let e = basis.eigenstate(bit).amps();
        std::array::from_fn(|other| {
            e[0].conj() * amps[index_of(0, other)] + e[1].conj() * amps[index_of(1, other)]
        })
    };
    let comp0 = component(false);
    let p0: f64 = comp0.iter().map(|a| a.norm_sqr()).sum();
    let u: f64 = rng.random();
    let bit = u >= p0;
    let comp = if bit { component(true) } else { comp0 };
    let norm = comp.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let e = basis.eigenstate(bit).amps();
    let mut out = [Complex64::default(); 4];
    for (own, &e_amp) in e.iter().enumerate() {
        for (other, &c_amp) in comp.iter().enumerate() {
            out[index_of(own, other)] = e_amp * c_amp / norm;
        }
    }
    (bit, Ket4::new(out))
}

/// Measure the first qubit of a pair; the joint state collapses.
pub fn measure_first(k: &Ket4, basis: Basis, rng: &mut RunRng) -> (bool, Ket4) {
    measure_one(k, true, basis, rng)
}

/// Measure the second qubit of a pair; the joint state collapses.
pub fn measure_second(k: &Ket4, basis: Basis, rng: &mut RunRng) -> (bool, Ket4) {
    measure_one(k, false, basis, rng)
}

/// Projection weights of a two-qubit state onto the four Bell vectors,
/// in `BellLabel::ALL` order.
pub fn bell_probabilities(k: &Ket4) -> [f64; 4] {
    let amps = k.amps();
    let mut p = [0.0; 4];
    for (slot, label) in BellLabel::ALL.iter().enumerate() {
        let b = prepare_bell(*label).amps();
        let ov: Complex64 = (0..4).map(|i| b[i].conj() * amps[i]).sum();
        p[slot] = ov.norm_sqr();
    }
    p
}

/// Joint measurement in the Bell basis. Deterministic when `k` is itself
/// a Bell vector; otherwise sampled by cumulative-probability inversion.
pub fn bell_measure(k: &Ket4, rng: &mut RunRng) -> BellLabel {
    let p = bell_probabilities(k);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (slot, label) in BellLabel::ALL.iter().enumerate() {
        acc += p[slot];
        if u < acc {
            return *label;
        }
    }
    // Numerical remainder when the weights sum to slightly under 1.
    BellLabel::PsiMinus
}
