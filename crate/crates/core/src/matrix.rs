//! Dense square complex matrices and the comparison metrics used for
//! verification.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{is_finite, re, Real};

/// Bit value of `qubit` inside basis `index` of an `n`-qubit register.
/// Qubit 0 is the most significant bit.
#[inline]
pub(crate) fn bit(index: usize, qubit: usize, n: usize) -> usize {
    (index >> (n - 1 - qubit)) & 1
}

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    dim: usize,
    entries: Vec<Complex<T>>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![Complex::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = Complex::one();
        }
        m
    }

    /// Builds a matrix from row-major entries; the length must be a perfect
    /// square and every entry finite.
    pub fn from_entries(entries: Vec<Complex<T>>) -> Result<Self> {
        let dim = (entries.len() as f64).sqrt().round() as usize;
        if dim * dim != entries.len() || dim == 0 {
            return Err(Error::NotSquare {
                rows: dim,
                entries: entries.len(),
            });
        }
        if !entries.iter().all(is_finite) {
            return Err(Error::NonFinite);
        }
        Ok(Self { dim, entries })
    }

    pub fn from_rows(rows: Vec<Vec<Complex<T>>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                entries: rows.iter().map(Vec::len).sum(),
            });
        }
        Self::from_entries(rows.into_iter().flatten().collect())
    }

    /// Real-valued matrix, row-major.
    pub fn from_real(dim: usize, values: &[T]) -> Result<Self> {
        if values.len() != dim * dim {
            return Err(Error::NotSquare {
                rows: dim,
                entries: values.len(),
            });
        }
        Self::from_entries(values.iter().map(|&v| re(v)).collect())
    }

    /// Diagonal matrix.
    pub fn diagonal(diag: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m.entries[i * diag.len() + i] = *d;
        }
        m
    }

    /// Permutation matrix exchanging basis vectors `a` and `b`.
    pub fn transposition(dim: usize, a: usize, b: usize) -> Self {
        let mut m = Self::identity(dim);
        m.set(a, a, Complex::zero());
        m.set(b, b, Complex::zero());
        m.set(a, b, Complex::one());
        m.set(b, a, Complex::one());
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of qubits this matrix acts on, if the dimension is a power of two.
    pub fn n_qubits(&self) -> Option<usize> {
        self.dim
            .is_power_of_two()
            .then(|| self.dim.trailing_zeros() as usize)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.entries[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex<T>) {
        self.entries[row * self.dim + col] = value;
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                out.entries[c * n + r] = self.entries[r * n + c].conj();
            }
        }
        out
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&e| e * factor).collect(),
        }
    }

    /// Matrix product `self · rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: rhs.dim,
            });
        }
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.entries[r * n + k];
                if a.is_zero() {
                    continue;
                }
                for c in 0..n {
                    out.entries[r * n + c] = out.entries[r * n + c] + a * rhs.entries[k * n + c];
                }
            }
        }
        Ok(out)
    }

    /// Kronecker product `self ⊗ rhs`; `self` occupies the high-order qubits.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (n, m) = (self.dim, rhs.dim);
        let dim = n * m;
        let mut out = Self::zeros(dim);
        for r1 in 0..n {
            for c1 in 0..n {
                let a = self.entries[r1 * n + c1];
                if a.is_zero() {
                    continue;
                }
                for r2 in 0..m {
                    for c2 in 0..m {
                        out.entries[(r1 * m + r2) * dim + c1 * m + c2] =
                            a * rhs.entries[r2 * m + c2];
                    }
                }
            }
        }
        out
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).fold(Complex::zero(), |acc, i| acc + self.get(i, i))
    }

    /// Determinant of a 2×2 matrix.
    pub fn det2(&self) -> Result<Complex<T>> {
        if self.dim != 2 {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: 2,
            });
        }
        Ok(self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0))
    }

    /// Max element modulus of `U†U − I`.
    pub fn unitarity_deviation(&self) -> T {
        let n = self.dim;
        let mut worst = T::zero();
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex::zero();
                for k in 0..n {
                    acc = acc + self.entries[k * n + i].conj() * self.entries[k * n + j];
                }
                if i == j {
                    acc = acc - Complex::one();
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        self.unitarity_deviation() < tol
    }

    /// Max element-wise modulus of `self − other`.
    pub fn max_deviation(&self, other: &Self) -> Result<T> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .fold(T::zero(), |w, (a, b)| w.max((*a - *b).norm())))
    }

    /// Max element-wise deviation after aligning `other` to `self` with a
    /// single global phase. The phase is read off the entry where `other`
    /// has its largest modulus.
    pub fn deviation_up_to_phase(&self, other: &Self) -> Result<T> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let phase = global_phase(&self.entries, &other.entries);
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .fold(T::zero(), |w, (a, b)| w.max((*a - *b * phase).norm())))
    }

    /// Embeds a `2^k`-dimensional gate acting on `targets` into an `n`-qubit
    /// register. The first target is the gate's most significant bit.
    pub fn embed(&self, targets: &[usize], n_qubits: usize) -> Result<Self> {
        check_targets(self.dim, targets, n_qubits)?;
        let dim = 1usize << n_qubits;
        let target_mask = targets
            .iter()
            .fold(0usize, |m, &q| m | 1 << (n_qubits - 1 - q));
        let sub = |index: usize| {
            targets
                .iter()
                .fold(0usize, |acc, &q| (acc << 1) | bit(index, q, n_qubits))
        };
        let mut out = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                if r & !target_mask == c & !target_mask {
                    out.entries[r * dim + c] = self.get(sub(r), sub(c));
                }
            }
        }
        Ok(out)
    }

    /// Rows of `[re, im]` pairs, the JSON export layout.
    pub fn to_pairs(&self) -> Vec<Vec<[f64; 2]>> {
        self.entries
            .chunks(self.dim)
            .map(|row| row.iter().map(|z| [z.re.as_f64(), z.im.as_f64()]).collect())
            .collect()
    }

    pub fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|row| {
                    row.iter()
                        .map(|&[a, b]| Complex::new(T::of(a), T::of(b)))
                        .collect()
                })
                .collect(),
        )
    }
}

impl<T: Real> Mul for &Matrix<T> {
    type Output = Matrix<T>;

    /// Panics on dimension mismatch; use [`Matrix::matmul`] for a checked product.
    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        self.matmul(rhs).expect("matrix dimensions agree")
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix({}x{}) [", self.dim, self.dim)?;
        for row in self.entries.chunks(self.dim) {
            let cells: Vec<String> = row
                .iter()
                .map(|z| format!("{:+.4?}{:+.4?}i", z.re, z.im))
                .collect();
            writeln!(f, "  {}", cells.join(" "))?;
        }
        write!(f, "]")
    }
}

/// Unit complex factor `p` minimizing `|a − p·b|` at the largest-modulus
/// entry of `b`. Returns 1 when `b` is zero there or `a` vanishes.
pub(crate) fn global_phase<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    let pivot = b
        .iter()
        .enumerate()
        .fold((0, T::zero()), |best, (i, z)| {
            let n = z.norm();
            if n > best.1 {
                (i, n)
            } else {
                best
            }
        })
        .0;
    let ratio = a[pivot] * b[pivot].conj();
    let n = ratio.norm();
    if n > T::zero() {
        ratio / n
    } else {
        Complex::one()
    }
}

pub(crate) fn check_targets(dim: usize, targets: &[usize], n_qubits: usize) -> Result<()> {
    if targets.is_empty() || dim != 1usize << targets.len() {
        return Err(Error::GateDimension {
            dim,
            targets: targets.len(),
        });
    }
    for (i, &q) in targets.iter().enumerate() {
        if q >= n_qubits {
            return Err(Error::QubitOutOfRange { qubit: q, n_qubits });
        }
        if targets[..i].contains(&q) {
            return Err(Error::DuplicateQubit(q));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    fn x() -> Matrix<f64> {
        Matrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn kron_puts_left_factor_on_high_bits() {
        let m = x().kron(&Matrix::identity(2));
        // |00> -> |10>
        assert_eq!(m.get(2, 0), c(1.0, 0.0));
        assert_eq!(m.get(0, 2), c(1.0, 0.0));
        assert_eq!(m.get(1, 0), c(0.0, 0.0));
    }

    #[test]
    fn embed_matches_kron_on_contiguous_targets() {
        let cnot = Matrix::<f64>::transposition(4, 2, 3);
        let via_kron = Matrix::identity(2).kron(&cnot);
        let via_embed = cnot.embed(&[1, 2], 3).unwrap();
        assert_eq!(via_kron.max_deviation(&via_embed).unwrap(), 0.0);
    }

    #[test]
    fn embed_respects_target_order() {
        // CNOT with control on qubit 2, target on qubit 0 of a 3-qubit register
        let cnot = Matrix::<f64>::transposition(4, 2, 3);
        let m = cnot.embed(&[2, 0], 3).unwrap();
        // |001> (index 1) -> |101> (index 5)
        assert_eq!(m.get(5, 1), c(1.0, 0.0));
        assert_eq!(m.get(1, 1), c(0.0, 0.0));
        // |100> is untouched
        assert_eq!(m.get(4, 4), c(1.0, 0.0));
    }

    #[test]
    fn embed_rejects_bad_targets() {
        let g = x();
        assert_eq!(
            g.embed(&[3], 3).unwrap_err(),
            Error::QubitOutOfRange {
                qubit: 3,
                n_qubits: 3
            }
        );
        let cnot = Matrix::<f64>::transposition(4, 2, 3);
        assert_eq!(
            cnot.embed(&[1, 1], 3).unwrap_err(),
            Error::DuplicateQubit(1)
        );
        assert!(matches!(
            cnot.embed(&[1], 3),
            Err(Error::GateDimension { .. })
        ));
    }

    #[test]
    fn phase_insensitive_deviation() {
        let m = x();
        let rotated = m.scale(Complex::from_polar(1.0, 0.83));
        assert!(m.max_deviation(&rotated).unwrap() > 0.5);
        assert!(m.deviation_up_to_phase(&rotated).unwrap() < 1e-15);
        assert!(m.deviation_up_to_phase(&m.scale(c(-1.0, 0.0))).unwrap() < 1e-15);
    }

    #[test]
    fn unitarity_of_perturbed_matrix_is_detected() {
        let mut m = Matrix::<f64>::identity(4);
        assert_eq!(m.unitarity_deviation(), 0.0);
        m.set(1, 2, c(1e-3, 0.0));
        assert!(m.unitarity_deviation() > 9e-4);
    }

    #[test]
    fn from_entries_rejects_non_square_and_nan() {
        assert!(matches!(
            Matrix::<f64>::from_entries(vec![c(1.0, 0.0); 3]),
            Err(Error::NotSquare { .. })
        ));
        assert_eq!(
            Matrix::<f64>::from_entries(vec![c(f64::NAN, 0.0); 4]).unwrap_err(),
            Error::NonFinite
        );
    }

    #[test]
    fn pairs_round_trip() {
        let m = x().scale(c(0.0, 1.0));
        let back = Matrix::<f64>::from_pairs(&m.to_pairs()).unwrap();
        assert_eq!(m, back);
    }
}
