//! Signed Pauli strings on up to 64 qubits in binary-symplectic form.
//!
//! Qubit `j` carries `I`, `X`, `Z` or `Y` according to bit `j` of the X and
//! Z masks; `Y` is the Hermitian Pauli Y (both bits set), not `XZ`.

use std::fmt;

pub const MAX_QUBITS: usize = 64;

/// Single-qubit Pauli factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
    negative: bool,
}

fn mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Exponent of `i` picked up when multiplying the single-qubit Paulis
/// `(x1, z1) * (x2, z2)`, in {-1, 0, 1}.
fn phase_exponent(x1: bool, z1: bool, x2: bool, z2: bool) -> i32 {
    match (x1, z1) {
        (false, false) => 0,
        (true, true) => z2 as i32 - x2 as i32,
        (true, false) => z2 as i32 * (2 * x2 as i32 - 1),
        (false, true) => x2 as i32 * (1 - 2 * z2 as i32),
    }
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits supported");
        Self {
            n,
            x: 0,
            z: 0,
            negative: false,
        }
    }

    pub fn from_masks(n: usize, x: u64, z: u64, negative: bool) -> Self {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits supported");
        Self {
            n,
            x: x & mask(n),
            z: z & mask(n),
            negative,
        }
    }

    pub fn single(n: usize, qubit: usize, p: Pauli) -> Self {
        let mut s = Self::identity(n);
        s.set(qubit, p);
        s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    /// +1 or -1.
    pub fn sign(&self) -> i32 {
        if self.negative {
            -1
        } else {
            1
        }
    }

    pub fn with_sign(mut self, negative: bool) -> Self {
        self.negative = negative;
        self
    }

    pub fn negated(self) -> Self {
        let negative = !self.negative;
        self.with_sign(negative)
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        let bit = 1u64 << qubit;
        match (self.x & bit != 0, self.z & bit != 0) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn set(&mut self, qubit: usize, p: Pauli) {
        assert!(
            qubit < self.n,
            "qubit {qubit} out of range for {} qubits",
            self.n
        );
        let bit = 1u64 << qubit;
        self.x &= !bit;
        self.z &= !bit;
        match p {
            Pauli::I => {}
            Pauli::X => self.x |= bit,
            Pauli::Y => {
                self.x |= bit;
                self.z |= bit;
            }
            Pauli::Z => self.z |= bit,
        }
    }

    /// Qubits acted on non-trivially.
    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> u32 {
        self.support().count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.support() == 0
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    /// Product `self * other` with its full phase as a power of `i` (0..4).
    pub fn mul_with_phase(&self, other: &Self) -> (Self, u8) {
        assert_eq!(self.n, other.n, "Pauli strings of different length");
        let mut e: i32 = 2 * (self.negative as i32) + 2 * (other.negative as i32);
        let mut bits = self.support() | other.support();
        while bits != 0 {
            let j = bits.trailing_zeros();
            let b = 1u64 << j;
            e += phase_exponent(
                self.x & b != 0,
                self.z & b != 0,
                other.x & b != 0,
                other.z & b != 0,
            );
            bits &= bits - 1;
        }
        let e = e.rem_euclid(4) as u8;
        (
            Self {
                n: self.n,
                x: self.x ^ other.x,
                z: self.z ^ other.z,
                negative: false,
            },
            e,
        )
    }

    /// Product of two commuting Hermitian strings.
    ///
    /// Panics if the product carries an imaginary phase, which only happens
    /// for anticommuting factors.
    pub fn mul(&self, other: &Self) -> Self {
        let (p, e) = self.mul_with_phase(other);
        assert!(e % 2 == 0, "non-Hermitian Pauli product (phase i^{e})");
        p.with_sign(e == 2)
    }

    /// Parse strings like `+XZI`, `-YIZ` or `XX` (qubit 0 first).
    pub fn parse(text: &str) -> Option<Self> {
        let (negative, body) = match text.as_bytes().first()? {
            b'+' => (false, &text[1..]),
            b'-' => (true, &text[1..]),
            _ => (false, text),
        };
        if body.len() > MAX_QUBITS {
            return None;
        }
        let mut s = Self::identity(body.len());
        for (j, ch) in body.chars().enumerate() {
            let p = match ch {
                'I' | '_' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                _ => return None,
            };
            s.set(j, p);
        }
        Some(s.with_sign(negative))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.negative { "-" } else { "+" })?;
        for j in 0..self.n {
            let c = match self.get(j) {
                Pauli::I => 'I',
                Pauli::X => 'X',
                Pauli::Y => 'Y',
                Pauli::Z => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}
