//! Stabilizer tableau with destabilizers (Aaronson-Gottesman form).

use crate::pauli::PauliString;

/// Rows `0..n` are destabilizers, rows `n..2n` stabilizers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tableau {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    r: Vec<bool>,
}

impl Tableau {
    /// `|0...0>`.
    pub fn new(n: usize) -> Self {
        assert!(n <= 64, "tableau supports at most 64 qubits");
        let mut x = vec![0; 2 * n];
        let mut z = vec![0; 2 * n];
        for i in 0..n {
            x[i] = 1 << i;
            z[n + i] = 1 << i;
        }
        Self {
            n,
            x,
            z,
            r: vec![false; 2 * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&mut self, q: usize) {
        let b = 1u64 << q;
        for i in 0..2 * self.n {
            let (xi, zi) = (self.x[i] & b, self.z[i] & b);
            self.r[i] ^= xi != 0 && zi != 0;
            self.x[i] = (self.x[i] & !b) | zi;
            self.z[i] = (self.z[i] & !b) | xi;
        }
    }

    pub fn s(&mut self, q: usize) {
        let b = 1u64 << q;
        for i in 0..2 * self.n {
            let (xi, zi) = (self.x[i] & b, self.z[i] & b);
            self.r[i] ^= xi != 0 && zi != 0;
            self.z[i] ^= xi;
        }
    }

    pub fn sdg(&mut self, q: usize) {
        self.s(q);
        self.s(q);
        self.s(q);
    }

    pub fn cnot(&mut self, c: usize, t: usize) {
        let (bc, bt) = (1u64 << c, 1u64 << t);
        for i in 0..2 * self.n {
            let xc = self.x[i] & bc != 0;
            let zt = self.z[i] & bt != 0;
            let xt = self.x[i] & bt != 0;
            let zc = self.z[i] & bc != 0;
            self.r[i] ^= xc && zt && (xt == zc);
            if xc {
                self.x[i] ^= bt;
            }
            if zt {
                self.z[i] ^= bc;
            }
        }
    }

    fn row(&self, i: usize) -> PauliString {
        PauliString::from_masks(self.n, self.x[i], self.z[i], self.r[i])
    }

    pub fn stabilizers(&self) -> Vec<PauliString> {
        (self.n..2 * self.n).map(|i| self.row(i)).collect()
    }

    /// `+1` or `-1` if `±p` stabilizes the state, `0` if `p` anticommutes
    /// with some stabilizer (uniformly random outcome).
    pub fn expectation(&self, p: &PauliString) -> Option<i32> {
        if p.n() != self.n {
            return None;
        }
        let n = self.n;
        if (n..2 * n).any(|i| !self.row(i).commutes_with(p)) {
            return Some(0);
        }
        let mut acc = PauliString::identity(n);
        for i in 0..n {
            if !self.row(i).commutes_with(p) {
                acc = acc.mul(&self.row(n + i));
            }
        }
        debug_assert_eq!((acc.x_mask(), acc.z_mask()), (p.x_mask(), p.z_mask()));
        Some(if acc.is_negative() == p.is_negative() {
            1
        } else {
            -1
        })
    }

    /// Stabilizer generators in reduced row-echelon form; two tableaus
    /// describe the same state exactly when these lists are equal.
    pub fn canonical_stabilizers(&self) -> Vec<PauliString> {
        let mut rows = self.stabilizers();
        let n = self.n;
        let mut pivot_row = 0;
        // X block pivots first, then Z block
        for col in (0..n).map(|q| (q, true)).chain((0..n).map(|q| (q, false))) {
            let bit = |p: &PauliString| {
                let m = if col.1 { p.x_mask() } else { p.z_mask() };
                m >> col.0 & 1 == 1
            };
            let Some(found) = (pivot_row..rows.len()).find(|&i| bit(&rows[i])) else {
                continue;
            };
            rows.swap(pivot_row, found);
            let pivot = rows[pivot_row];
            for i in 0..rows.len() {
                if i != pivot_row && bit(&rows[i]) {
                    rows[i] = rows[i].mul(&pivot);
                }
            }
            pivot_row += 1;
        }
        rows
    }

    /// Computational-basis measurement of qubit `q`; a random outcome is
    /// resolved to `random_outcome`.
    pub fn measure(&mut self, q: usize, random_outcome: bool) -> bool {
        let n = self.n;
        let b = 1u64 << q;
        if let Some(p) = (n..2 * n).find(|&i| self.x[i] & b != 0) {
            for i in 0..2 * n {
                if i != p && self.x[i] & b != 0 {
                    self.rowmult(i, p);
                }
            }
            self.x[p - n] = self.x[p];
            self.z[p - n] = self.z[p];
            self.r[p - n] = self.r[p];
            self.x[p] = 0;
            self.z[p] = b;
            self.r[p] = random_outcome;
            random_outcome
        } else {
            let mut acc = PauliString::identity(n);
            for i in 0..n {
                if self.x[i] & b != 0 {
                    acc = acc.mul(&self.row(n + i));
                }
            }
            acc.is_negative()
        }
    }

    /// Row `i` becomes row `i` times row `k`.
    fn rowmult(&mut self, i: usize, k: usize) {
        let (p, e) = self.row(k).mul_with_phase(&self.row(i));
        // destabilizer signs carry no information and may pick up a factor i
        debug_assert!(i < self.n || e % 2 == 0);
        self.x[i] = p.x_mask();
        self.z[i] = p.z_mask();
        self.r[i] = e == 2;
    }

    /// Outcome space of measuring every qubit in the computational basis:
    /// `x0` plus the span of `basis` (uniform over that affine space).
    pub fn outcome_space(&self) -> (u64, Vec<u64>) {
        let mut basis: Vec<u64> = Vec::new();
        for i in self.n..2 * self.n {
            let mut v = self.x[i];
            for &bv in &basis {
                if v & (1 << bv.trailing_zeros()) != 0 {
                    v ^= bv;
                }
            }
            if v != 0 {
                // keep the basis fully reduced on pivot bits
                for bv in basis.iter_mut() {
                    if *bv & (1 << v.trailing_zeros()) != 0 {
                        *bv ^= v;
                    }
                }
                basis.push(v);
            }
        }
        basis.sort_unstable();
        let mut t = self.clone();
        let mut x0 = 0u64;
        for q in 0..self.n {
            if t.measure(q, false) {
                x0 |= 1 << q;
            }
        }
        for &bv in &basis {
            if x0 & (1 << bv.trailing_zeros()) != 0 {
                x0 ^= bv;
            }
        }
        (x0, basis)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliString {
        PauliString::parse(s).unwrap()
    }

    #[test]
    fn bell_state() {
        let mut t = Tableau::new(2);
        t.h(0);
        t.cnot(0, 1);
        assert_eq!(t.expectation(&p("XX")), Some(1));
        assert_eq!(t.expectation(&p("ZZ")), Some(1));
        assert_eq!(t.expectation(&p("YY")), Some(-1));
        assert_eq!(t.expectation(&p("ZI")), Some(0));
        assert_eq!(t.expectation(&p("-XX")), Some(-1));
        assert_eq!(t.expectation(&p("XXX")), None);
    }

    #[test]
    fn s_gate_phases() {
        let mut t = Tableau::new(1);
        t.h(0);
        t.s(0);
        assert_eq!(t.expectation(&p("Y")), Some(1));
        t.sdg(0);
        assert_eq!(t.expectation(&p("X")), Some(1));
    }

    #[test]
    fn measurement_outcomes() {
        let mut t = Tableau::new(2);
        t.h(0);
        t.cnot(0, 1);
        let (x0, basis) = t.outcome_space();
        assert_eq!((x0, basis), (0, vec![0b11]));
        assert!(t.measure(0, true));
        assert!(t.measure(1, false));
    }

    #[test]
    fn canonical_form_ignores_generator_choice() {
        let mut a = Tableau::new(2);
        a.h(0);
        a.cnot(0, 1);
        let mut b = Tableau::new(2);
        b.h(1);
        b.cnot(1, 0);
        assert_eq!(a.canonical_stabilizers(), b.canonical_stabilizers());
        let mut c = Tableau::new(2);
        c.h(0);
        assert_ne!(a.canonical_stabilizers(), c.canonical_stabilizers());
    }
}
