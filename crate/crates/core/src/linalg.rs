//! Fixed-size complex matrices for one- and two-qubit operators.
//!
//! Two-qubit basis ordering is `|q1 q2>` with the first qubit as the most
//! significant index bit, so `|01>` is index 1 and `|10>` is index 2.

use std::ops::{Add, Mul};

use num_complex::Complex64;

pub type Complex = Complex64;

pub(crate) const ZERO: Complex = Complex::new(0.0, 0.0);
pub(crate) const ONE: Complex = Complex::new(1.0, 0.0);
pub(crate) const I: Complex = Complex::new(0.0, 1.0);

/// A single-qubit operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2(pub [[Complex; 2]; 2]);

impl Matrix2 {
    pub const fn new(entries: [[Complex; 2]; 2]) -> Self {
        Self(entries)
    }

    pub fn real(entries: [[f64; 2]; 2]) -> Self {
        let [[a, b], [c, d]] = entries;
        Self([
            [Complex::new(a, 0.0), Complex::new(b, 0.0)],
            [Complex::new(c, 0.0), Complex::new(d, 0.0)],
        ])
    }

    pub fn identity() -> Self {
        Self([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn zero() -> Self {
        Self([[ZERO; 2]; 2])
    }

    pub fn pauli_x() -> Self {
        Self::real([[0.0, 1.0], [1.0, 0.0]])
    }

    /// `[[0, -i], [i, 0]]`.
    pub fn pauli_y() -> Self {
        Self([[ZERO, -I], [I, ZERO]])
    }

    pub fn pauli_z() -> Self {
        Self::real([[1.0, 0.0], [0.0, -1.0]])
    }

    /// `iY = [[0, 1], [-1, 0]]`, the real Pauli used in the disturbance attack.
    pub fn i_y() -> Self {
        Self::pauli_y().scale(I)
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex {
        self.0[row][col]
    }

    pub fn scale(&self, factor: Complex) -> Self {
        let mut out = self.0;
        out.iter_mut().flatten().for_each(|z| *z *= factor);
        Self(out)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex::new(factor, 0.0))
    }

    pub fn dagger(&self) -> Self {
        let m = &self.0;
        Self([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn trace(&self) -> Complex {
        self.0[0][0] + self.0[1][1]
    }

    /// Tensor product `self ⊗ other`.
    pub fn kron(&self, other: &Matrix2) -> Matrix4 {
        let mut out = [[ZERO; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, z) in row.iter_mut().enumerate() {
                *z = self.0[r / 2][c / 2] * other.0[r % 2][c % 2];
            }
        }
        Matrix4(out)
    }

    /// Largest entrywise modulus of `A - B`.
    pub fn max_abs_diff(&self, other: &Matrix2) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Deviation of `U†U` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        (self.dagger() * *self).max_abs_diff(&Matrix2::identity())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Mul for Matrix2 {
    type Output = Matrix2;

    fn mul(self, rhs: Matrix2) -> Matrix2 {
        let mut out = [[ZERO; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, z) in row.iter_mut().enumerate() {
                *z = self.0[r][0] * rhs.0[0][c] + self.0[r][1] * rhs.0[1][c];
            }
        }
        Matrix2(out)
    }
}

impl Add for Matrix2 {
    type Output = Matrix2;

    fn add(self, rhs: Matrix2) -> Matrix2 {
        let mut out = self.0;
        for (z, w) in out.iter_mut().flatten().zip(rhs.0.iter().flatten()) {
            *z += w;
        }
        Matrix2(out)
    }
}

/// A two-qubit operator or unnormalised two-qubit matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix4(pub [[Complex; 4]; 4]);

impl Matrix4 {
    pub fn zero() -> Self {
        Self([[ZERO; 4]; 4])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        (0..4).for_each(|i| m.0[i][i] = ONE);
        m
    }

    /// `|v><v|` for an amplitude vector `v`.
    pub fn outer(v: &[Complex; 4]) -> Self {
        let mut out = [[ZERO; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, z) in row.iter_mut().enumerate() {
                *z = v[r] * v[c].conj();
            }
        }
        Self(out)
    }

    pub fn dagger(&self) -> Self {
        let mut out = [[ZERO; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, z) in row.iter_mut().enumerate() {
                *z = self.0[c][r].conj();
            }
        }
        Self(out)
    }

    pub fn trace(&self) -> Complex {
        (0..4).map(|i| self.0[i][i]).sum()
    }

    /// `<v| M |v>`.
    pub fn expectation(&self, v: &[Complex; 4]) -> Complex {
        let mut acc = ZERO;
        for r in 0..4 {
            for c in 0..4 {
                acc += v[r].conj() * self.0[r][c] * v[c];
            }
        }
        acc
    }

    /// `A M A†`.
    pub fn conjugate_by(&self, a: &Matrix4) -> Self {
        *a * *self * a.dagger()
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        let mut out = self.0;
        out.iter_mut().flatten().for_each(|z| *z *= factor);
        Self(out)
    }

    pub fn max_abs_diff(&self, other: &Matrix4) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Mul for Matrix4 {
    type Output = Matrix4;

    fn mul(self, rhs: Matrix4) -> Matrix4 {
        let mut out = [[ZERO; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, z) in row.iter_mut().enumerate() {
                *z = (0..4).map(|k| self.0[r][k] * rhs.0[k][c]).sum();
            }
        }
        Matrix4(out)
    }
}

impl Add for Matrix4 {
    type Output = Matrix4;

    fn add(self, rhs: Matrix4) -> Matrix4 {
        let mut out = self.0;
        for (z, w) in out.iter_mut().flatten().zip(rhs.0.iter().flatten()) {
            *z += w;
        }
        Matrix4(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paulis_are_unitary() {
        for m in [
            Matrix2::identity(),
            Matrix2::pauli_x(),
            Matrix2::pauli_y(),
            Matrix2::pauli_z(),
            Matrix2::i_y(),
        ] {
            assert!(m.unitarity_deviation() < 1e-15);
        }
    }

    #[test]
    fn i_y_is_real_rotation() {
        assert_eq!(Matrix2::i_y(), Matrix2::real([[0.0, 1.0], [-1.0, 0.0]]));
    }

    #[test]
    fn kron_orders_first_factor_as_high_bit() {
        // X ⊗ I maps |00> (index 0) to |10> (index 2)
        let m = Matrix2::pauli_x().kron(&Matrix2::identity());
        assert_eq!(m.0[2][0], ONE);
        assert_eq!(m.0[1][0], ZERO);
    }

    #[test]
    fn kron_is_multiplicative() {
        let (a, b) = (Matrix2::pauli_y(), Matrix2::pauli_z());
        let (c, d) = (Matrix2::pauli_x(), Matrix2::i_y());
        let lhs = a.kron(&b) * c.kron(&d);
        let rhs = (a * c).kron(&(b * d));
        assert!(lhs.max_abs_diff(&rhs) < 1e-15);
    }
}
