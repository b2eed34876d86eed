//! Dense complex operator and state algebra.
//!
//! Basis indices on every public surface are 1-based so that `ketbra(2, 4, 4)`
//! reads like `|2><4|`. Storage is dense: every system handled here has
//! dimension at most 16.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Absolute tolerance on `max |A - A^dag|` for an operator to count as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Tolerance on `|1 - <psi|psi>|` accepted when constructing a state.
pub const STATE_NORM_TOL: f64 = 1e-9;

/// Square complex matrix with optional basis-state names.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    mat: DMatrix<C64>,
    labels: Option<Vec<String>>,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: DMatrix::zeros(dim, dim),
            labels: None,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: DMatrix::identity(dim, dim),
            labels: None,
        }
    }

    pub fn from_matrix(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::Argument(format!(
                "operator must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.nrows() == 0 {
            return Err(Error::Argument(
                "operator dimension must be positive".into(),
            ));
        }
        Ok(Self { mat, labels: None })
    }

    /// Builds an operator from row-major real entries.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Argument("rows do not form a square matrix".into()));
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j], 0.0)))
    }

    pub fn with_labels<S: Into<String>>(
        mut self,
        labels: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() != self.dim() {
            return Err(Error::Argument(format!(
                "expected {} labels, got {}",
                self.dim(),
                labels.len()
            )));
        }
        for (k, l) in labels.iter().enumerate() {
            if labels[..k].contains(l) {
                return Err(Error::Argument(format!("duplicate basis label `{l}`")));
            }
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Entry `<i|A|j>` with 1-based indices.
    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.mat[(i - 1, j - 1)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint(),
            labels: self.labels.clone(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            mat: &self.mat * C64::new(s, 0.0),
            labels: self.labels.clone(),
        }
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self {
            mat: &self.mat * s,
            labels: self.labels.clone(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.mat.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim(), other.dim(), "max_abs_diff: dimension mismatch");
        self.mat
            .iter()
            .zip(other.mat.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// `max |A - A^dag|` over all entries.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    pub(crate) fn require_hermitian(&self, what: &'static str) -> Result<()> {
        let deviation = self.hermiticity_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { what, deviation });
        }
        Ok(())
    }

    /// Number of entries with nonzero modulus.
    pub fn nonzero_count(&self) -> usize {
        self.mat.iter().filter(|z| z.norm() > 0.0).count()
    }

    pub fn apply(&self, psi: &StateVector) -> Result<DVector<C64>> {
        check_dims(self.dim(), psi.dim())?;
        Ok(&self.mat * &psi.amps)
    }

    pub fn try_mul(&self, rhs: &Operator) -> Result<Operator> {
        check_dims(self.dim(), rhs.dim())?;
        Ok(self * rhs)
    }

    pub fn try_add(&self, rhs: &Operator) -> Result<Operator> {
        check_dims(self.dim(), rhs.dim())?;
        Ok(self + rhs)
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.dim();
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .map(|j| {
                    let z = self.mat[(i, j)];
                    format!("{:>+11.6}{:>+11.6}i", z.re, z.im)
                })
                .collect();
            match &self.labels {
                Some(l) => writeln!(f, "{:>8} | {}", l[i], row.join("  "))?,
                None => writeln!(f, "{}", row.join("  "))?,
            }
        }
        Ok(())
    }
}

fn check_dims(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch { left, right });
    }
    Ok(())
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        Operator {
            mat: &self.mat + &rhs.mat,
            labels: self.labels.clone().or_else(|| rhs.labels.clone()),
        }
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        &self + &rhs
    }
}

impl AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        self.mat += &rhs.mat;
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        Operator {
            mat: &self.mat - &rhs.mat,
            labels: self.labels.clone().or_else(|| rhs.labels.clone()),
        }
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        &self - &rhs
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        Operator {
            mat: &self.mat * &rhs.mat,
            labels: self.labels.clone().or_else(|| rhs.labels.clone()),
        }
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        &self * &rhs
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator {
            mat: -&self.mat,
            labels: self.labels.clone(),
        }
    }
}

/// Normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: DVector<C64>,
}

impl StateVector {
    pub fn new(amps: DVector<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Argument("state dimension must be positive".into()));
        }
        let norm = amps.norm_squared();
        if (norm - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::Argument(format!(
                "state is not normalized (<psi|psi> = {norm})"
            )));
        }
        Ok(Self { amps })
    }

    /// Basis state `|i>` (1-based).
    pub fn basis(i: usize, dim: usize) -> Result<Self> {
        check_index(i, dim)?;
        let mut amps = DVector::zeros(dim);
        amps[i - 1] = C64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    /// Wraps an evolved state without the normalization check; drift is the
    /// caller's diagnostic.
    pub(crate) fn from_evolved(amps: DVector<C64>) -> Self {
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    /// Amplitude `<i|psi>` (1-based).
    pub fn amplitude(&self, i: usize) -> C64 {
        self.amps[i - 1]
    }

    pub fn norm_squared(&self) -> f64 {
        self.amps.norm_squared()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }
}

fn check_index(i: usize, dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::Argument("dimension must be positive".into()));
    }
    if i < 1 || i > dim {
        return Err(Error::Argument(format!(
            "basis index {i} outside 1..={dim}"
        )));
    }
    Ok(())
}

/// `|i><j|` in a `dim`-dimensional space, 1-based.
pub fn ketbra(i: usize, j: usize, dim: usize) -> Result<Operator> {
    check_index(i, dim)?;
    check_index(j, dim)?;
    let mut op = Operator::zeros(dim);
    op.mat[(i - 1, j - 1)] = C64::new(1.0, 0.0);
    Ok(op)
}

/// `|i><j| + |j><i|`.
pub fn hc_pair(i: usize, j: usize, dim: usize) -> Result<Operator> {
    Ok(ketbra(i, j, dim)? + ketbra(j, i, dim)?)
}

/// `ab - ba`.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    check_dims(a.dim(), b.dim())?;
    Ok(Operator {
        mat: &a.mat * &b.mat - &b.mat * &a.mat,
        labels: a.labels.clone(),
    })
}

/// Kronecker product with `a` as the slow index.
pub fn tensor_product(a: &Operator, b: &Operator) -> Operator {
    let labels = match (&a.labels, &b.labels) {
        (Some(la), Some(lb)) => Some(
            la.iter()
                .flat_map(|x| lb.iter().map(move |y| format!("{x} {y}")))
                .collect(),
        ),
        _ => None,
    };
    Operator {
        mat: a.mat.kronecker(&b.mat),
        labels,
    }
}

/// Eigendecomposition of a Hermitian operator, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors.
    pub vectors: DMatrix<C64>,
}

impl HermitianEigen {
    pub fn new(h: &Operator) -> Result<Self> {
        h.require_hermitian("operator")?;
        // Symmetrize so the solver sees an exactly Hermitian input.
        let sym = (&h.mat + h.mat.adjoint()) * C64::new(0.5, 0.0);
        let eig = sym.symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(h.dim(), h.dim(), |i, k| eig.eigenvectors[(i, order[k])]);
        Ok(Self { values, vectors })
    }

    /// `V f(E) V^dag` for a complex scalar function of the eigenvalues.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> DMatrix<C64> {
        let mut scaled = self.vectors.clone();
        for (k, &e) in self.values.iter().enumerate() {
            let fe = f(e);
            for z in scaled.column_mut(k).iter_mut() {
                *z *= fe;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

/// `exp(i * scale * h)` for Hermitian `h`.
pub fn expi_hermitian(h: &Operator, scale: f64) -> Result<Operator> {
    let eig = HermitianEigen::new(h)?;
    let mat = eig.map(|e| C64::from_polar(1.0, scale * e));
    Ok(Operator {
        mat,
        labels: h.labels.clone(),
    })
}

/// Unitarity residual `max |U^dag U - I|`.
pub fn unitarity_deviation(u: &Operator) -> f64 {
    let prod = u.mat.adjoint() * &u.mat;
    Operator {
        mat: prod,
        labels: None,
    }
    .max_abs_diff(&Operator::identity(u.dim()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pauli() -> (Operator, Operator, Operator) {
        let sx = Operator::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let sy = Operator::from_matrix(DMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
        ))
        .unwrap();
        let sz = Operator::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap();
        (sx, sy, sz)
    }

    #[test]
    fn ketbra_projector() {
        let p = ketbra(1, 1, 2).unwrap();
        assert_eq!(
            p,
            Operator::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap()
        );
    }

    #[test]
    fn ketbra_hc_pair_is_hermitian() {
        let h = hc_pair(2, 4, 4).unwrap();
        assert_eq!(h.entry(2, 4), c(1.0, 0.0));
        assert_eq!(h.entry(4, 2), c(1.0, 0.0));
        assert_eq!(h.nonzero_count(), 2);
        assert_eq!(h.hermiticity_deviation(), 0.0);
    }

    #[test]
    fn ketbra_contraction() {
        let prod = &ketbra(1, 2, 2).unwrap() * &ketbra(2, 1, 2).unwrap();
        assert_eq!(prod, ketbra(1, 1, 2).unwrap());
    }

    #[test]
    fn ketbra_rejects_out_of_range() {
        assert!(matches!(ketbra(0, 1, 2), Err(Error::Argument(_))));
        assert!(matches!(ketbra(1, 3, 2), Err(Error::Argument(_))));
    }

    #[test]
    fn pauli_commutator() {
        let (sx, sy, sz) = pauli();
        let comm = commutator(&sx, &sy).unwrap();
        assert!(comm.max_abs_diff(&sz.scale_complex(c(0.0, 2.0))) < 1e-15);
    }

    #[test]
    fn self_commutator_vanishes() {
        let (sx, _, _) = pauli();
        assert_eq!(commutator(&sx, &sx).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn commutator_of_hermitians_is_anti_hermitian() {
        let v = hc_pair(2, 4, 4).unwrap().scale(3.0);
        let h0 = (ketbra(2, 2, 4).unwrap().scale(2.0) + hc_pair(1, 2, 4).unwrap()).scale(1.5);
        let comm = commutator(&v, &h0).unwrap();
        assert!(comm.adjoint().max_abs_diff(&(-&comm)) < 1e-15);
        assert!(comm.max_abs() > 0.0);
    }

    #[test]
    fn commutator_dimension_mismatch() {
        let err = commutator(&Operator::identity(2), &Operator::identity(3)).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { left: 2, right: 3 });
    }

    #[test]
    fn tensor_identity() {
        let id = tensor_product(&Operator::identity(2), &Operator::identity(2));
        assert_eq!(id, Operator::identity(4));
    }

    #[test]
    fn tensor_slow_index_is_first_factor() {
        let op = tensor_product(&ketbra(2, 3, 4).unwrap(), &Operator::identity(4));
        assert_eq!(op.dim(), 16);
        assert_eq!(op.nonzero_count(), 4);
        for spectator in 1..=4 {
            // |2>|s> -> row 4 + s, |3>|s> -> col 8 + s
            let (row, col) = (4 + spectator, 8 + spectator);
            assert_eq!(op.entry(row, col), c(1.0, 0.0));
        }
    }

    #[test]
    fn tensor_labels_compose() {
        let a = Operator::identity(2).with_labels(["1", "2"]).unwrap();
        let b = Operator::identity(2).with_labels(["a", "b"]).unwrap();
        let ab = tensor_product(&a, &b);
        assert_eq!(ab.labels().unwrap(), ["1 a", "1 b", "2 a", "2 b"]);
    }

    #[test]
    fn labels_must_be_distinct() {
        assert!(Operator::identity(2).with_labels(["x", "x"]).is_err());
        assert!(Operator::identity(2).with_labels(["x"]).is_err());
    }

    #[test]
    fn expi_of_zero_is_identity() {
        let u = expi_hermitian(&Operator::zeros(3), 0.7).unwrap();
        assert!(u.max_abs_diff(&Operator::identity(3)) < 1e-15);
    }

    #[test]
    fn expi_pauli_x_quarter_turn() {
        let (sx, _, _) = pauli();
        let u = expi_hermitian(&sx, FRAC_PI_2).unwrap();
        assert!(u.max_abs_diff(&sx.scale_complex(c(0.0, 1.0))) < 1e-15);
    }

    #[test]
    fn expi_inverse_pair() {
        let h = Operator::from_matrix(DMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.0),
                c(0.3, -0.2),
                c(0.0, 0.5),
                c(0.3, 0.2),
                c(-2.0, 0.0),
                c(1.1, 0.0),
                c(0.0, -0.5),
                c(1.1, 0.0),
                c(0.4, 0.0),
            ],
        ))
        .unwrap();
        let prod = &expi_hermitian(&h, 1.3).unwrap() * &expi_hermitian(&h, -1.3).unwrap();
        assert!(prod.max_abs_diff(&Operator::identity(3)) < 1e-10);
    }

    #[test]
    fn expi_rejects_non_hermitian() {
        let a = ketbra(1, 2, 2).unwrap();
        assert!(matches!(
            expi_hermitian(&a, 1.0),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn state_normalization_enforced() {
        let amps = DVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(StateVector::new(amps).is_err());
        let s = 0.5f64.sqrt();
        let ok = StateVector::new(DVector::from_vec(vec![c(s, 0.0), c(0.0, s)])).unwrap();
        assert!((ok.populations().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(StateVector::basis(3, 2).is_err());
    }
}
