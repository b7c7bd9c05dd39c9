//! Dense operator algebra on truncated Fock spaces.
//!
//! Every operator carries the ordered list of subsystem dimensions it acts
//! on, so tensor products and partial traces can check their arguments.
//! Storage is always a dense row-major complex matrix.

use std::ops::{Add, Mul, Sub};

use ndarray::{linalg::kron, Array1, Array2, Axis};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A dense complex matrix acting on a tensor product of truncated Fock spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    dims: Vec<usize>,
    data: Array2<Complex64>,
}

impl FockOperator {
    pub fn new(dims: Vec<usize>, data: Array2<Complex64>) -> Result<Self> {
        validate_dims(&dims)?;
        let side: usize = dims.iter().product();
        if data.nrows() != side || data.ncols() != side {
            return Err(Error::DimensionMismatch {
                expected: vec![side, side],
                found: vec![data.nrows(), data.ncols()],
            });
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        validate_dims(dims)?;
        let side = dims.iter().product();
        Ok(Self {
            dims: dims.to_vec(),
            data: Array2::zeros((side, side)),
        })
    }

    pub fn identity(dims: &[usize]) -> Result<Self> {
        validate_dims(dims)?;
        let side = dims.iter().product();
        Ok(Self {
            dims: dims.to_vec(),
            data: Array2::eye(side),
        })
    }

    /// Diagonal operator on a single subsystem.
    pub fn from_diagonal(values: &[Complex64]) -> Result<Self> {
        let dim = values.len();
        validate_dims(&[dim])?;
        Ok(Self {
            dims: vec![dim],
            data: Array2::from_diag(&Array1::from(values.to_vec())),
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Side length of the matrix, the product of all subsystem dimensions.
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<Complex64> {
        self.data
    }

    /// Same matrix reinterpreted with a different subsystem split.
    pub fn with_dims(self, dims: Vec<usize>) -> Result<Self> {
        Self::new(dims, self.data)
    }

    pub fn dagger(&self) -> Self {
        Self {
            dims: self.dims.clone(),
            data: dagger(&self.data),
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            dims: self.dims.clone(),
            data: &self.data * factor,
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.data.diag().sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    /// `max |A - A†|`, zero for hermitian operators.
    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims.clone(),
                found: other.dims.clone(),
            });
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_same_dims(other)?;
        Ok(Self {
            dims: self.dims.clone(),
            data: self.data.dot(&other.data),
        })
    }

    /// `Tr(self · rho)`.
    pub fn expectation(&self, rho: &FockOperator) -> Result<Complex64> {
        self.check_same_dims(rho)?;
        Ok(trace_of_product(&self.data, &rho.data))
    }
}

impl<'a> Add<&'a FockOperator> for &'a FockOperator {
    type Output = FockOperator;

    /// Panics when the subsystem dimensions differ.
    fn add(self, rhs: &FockOperator) -> FockOperator {
        assert_eq!(self.dims, rhs.dims, "operator dimensions differ");
        FockOperator {
            dims: self.dims.clone(),
            data: &self.data + &rhs.data,
        }
    }
}

impl<'a> Sub<&'a FockOperator> for &'a FockOperator {
    type Output = FockOperator;

    /// Panics when the subsystem dimensions differ.
    fn sub(self, rhs: &FockOperator) -> FockOperator {
        assert_eq!(self.dims, rhs.dims, "operator dimensions differ");
        FockOperator {
            dims: self.dims.clone(),
            data: &self.data - &rhs.data,
        }
    }
}

impl<'a> Mul<&'a FockOperator> for &'a FockOperator {
    type Output = FockOperator;

    /// Panics when the subsystem dimensions differ.
    fn mul(self, rhs: &FockOperator) -> FockOperator {
        assert_eq!(self.dims, rhs.dims, "operator dimensions differ");
        FockOperator {
            dims: self.dims.clone(),
            data: self.data.dot(&rhs.data),
        }
    }
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::InvalidDimension { dim: 0 });
    }
    match dims.iter().find(|&&d| d < 2) {
        Some(&dim) => Err(Error::InvalidDimension { dim }),
        None => Ok(()),
    }
}

pub(crate) fn dagger(m: &Array2<Complex64>) -> Array2<Complex64> {
    m.t().mapv(|z| z.conj())
}

pub(crate) fn max_abs(m: &Array2<Complex64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub(crate) fn hermiticity_defect(m: &Array2<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}

/// `(M + M†) / 2`.
pub(crate) fn hermitian_part(m: &Array2<Complex64>) -> Array2<Complex64> {
    let mut out = m.clone();
    let n = m.nrows();
    for i in 0..n {
        for j in 0..n {
            out[[i, j]] = (m[[i, j]] + m[[j, i]].conj()) * 0.5;
        }
    }
    out
}

/// `Tr(A · B)` without forming the product.
pub(crate) fn trace_of_product(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Complex64 {
    let mut acc = ZERO;
    for (i, row) in a.outer_iter().enumerate() {
        for (k, &x) in row.iter().enumerate() {
            acc += x * b[[k, i]];
        }
    }
    acc
}

/// Matrix 1-norm (largest absolute column sum).
pub(crate) fn one_norm(m: &Array2<Complex64>) -> f64 {
    m.axis_iter(Axis(1))
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Truncated annihilation operator: `<n-1| a |n> = sqrt(n)`.
pub fn annihilation_op(dim: usize) -> Result<FockOperator> {
    validate_dims(&[dim])?;
    let mut data = Array2::zeros((dim, dim));
    for n in 1..dim {
        data[[n - 1, n]] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    Ok(FockOperator { dims: vec![dim], data })
}

pub fn creation_op(dim: usize) -> Result<FockOperator> {
    Ok(annihilation_op(dim)?.dagger())
}

/// `a† a = diag(0, 1, ..., dim - 1)`.
pub fn number_op(dim: usize) -> Result<FockOperator> {
    let diag: Vec<Complex64> = (0..dim).map(|n| Complex64::new(n as f64, 0.0)).collect();
    FockOperator::from_diagonal(&diag)
}

/// Kronecker product `A ⊗ B`; subsystem lists are concatenated.
pub fn tensor_product(a: &FockOperator, b: &FockOperator) -> FockOperator {
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    FockOperator {
        dims,
        data: kron(&a.data, &b.data),
    }
}

/// Embeds a single-subsystem operator at `site` of the product space `dims`.
pub fn embed(op: &FockOperator, site: usize, dims: &[usize]) -> Result<FockOperator> {
    validate_dims(dims)?;
    if site >= dims.len() {
        return Err(Error::InvalidSubsystem {
            keep: vec![site],
            count: dims.len(),
        });
    }
    if op.dims.len() != 1 || op.dims[0] != dims[site] {
        return Err(Error::DimensionMismatch {
            expected: vec![dims[site]],
            found: op.dims.clone(),
        });
    }
    let mut result: Option<FockOperator> = None;
    for (i, &d) in dims.iter().enumerate() {
        let factor = if i == site {
            op.clone()
        } else {
            FockOperator::identity(&[d])?
        };
        result = Some(match result {
            None => factor,
            Some(acc) => tensor_product(&acc, &factor),
        });
    }
    Ok(result.expect("dims is non-empty"))
}

/// `[A, B] = AB - BA`.
pub fn commutator(a: &FockOperator, b: &FockOperator) -> Result<FockOperator> {
    a.check_same_dims(b)?;
    Ok(FockOperator {
        dims: a.dims.clone(),
        data: a.data.dot(&b.data) - b.data.dot(&a.data),
    })
}

/// `{A, B} = AB + BA`.
pub fn anticommutator(a: &FockOperator, b: &FockOperator) -> Result<FockOperator> {
    a.check_same_dims(b)?;
    Ok(FockOperator {
        dims: a.dims.clone(),
        data: a.data.dot(&b.data) + b.data.dot(&a.data),
    })
}

/// Traces out every subsystem not listed in `keep`. The kept subsystems
/// appear in ascending index order in the result.
pub fn partial_trace_op(op: &FockOperator, keep: &[usize]) -> Result<FockOperator> {
    let count = op.dims.len();
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.is_empty() || kept.len() != keep.len() || kept.iter().any(|&k| k >= count) {
        return Err(Error::InvalidSubsystem {
            keep: keep.to_vec(),
            count,
        });
    }
    let traced: Vec<usize> = (0..count).filter(|i| !kept.contains(i)).collect();

    let mut strides = vec![1usize; count];
    for s in (0..count.saturating_sub(1)).rev() {
        strides[s] = strides[s + 1] * op.dims[s + 1];
    }
    let keep_offsets = subsystem_offsets(&kept, &op.dims, &strides);
    let trace_offsets = subsystem_offsets(&traced, &op.dims, &strides);

    let side = keep_offsets.len();
    let mut out = Array2::zeros((side, side));
    for (i, &ri) in keep_offsets.iter().enumerate() {
        for (j, &rj) in keep_offsets.iter().enumerate() {
            out[[i, j]] = trace_offsets.iter().map(|&t| op.data[[ri + t, rj + t]]).sum();
        }
    }
    let dims = kept.iter().map(|&k| op.dims[k]).collect();
    FockOperator::new(dims, out)
}

/// Linear offsets of every multi-index over `subsystems`, enumerated in
/// row-major order of those subsystems.
fn subsystem_offsets(subsystems: &[usize], dims: &[usize], strides: &[usize]) -> Vec<usize> {
    let mut offsets = vec![0usize];
    for &s in subsystems {
        offsets = offsets
            .iter()
            .flat_map(|&base| (0..dims[s]).map(move |digit| base + digit * strides[s]))
            .collect();
    }
    offsets
}

pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let reduced = partial_trace_op(&rho.op, keep)?;
    Ok(DensityMatrix {
        op: reduced,
        tolerances: rho.tolerances,
    })
}

/// Matrix exponential by scaling and squaring of a Taylor series.
///
/// The series on the scaled matrix is summed until the next term is below
/// `tol` relative to the partial sum, with the tolerance tightened by the
/// number of squarings that follow.
pub fn matrix_exp(a: &FockOperator, tol: f64) -> Result<FockOperator> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    if !(tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    let norm = one_norm(&a.data);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = &a.data * Complex64::new(0.5f64.powi(squarings), 0.0);
    let series_tol = (tol * 0.5f64.powi(squarings)).max(f64::EPSILON * 1e-3);

    let n = a.dim();
    let mut sum: Array2<Complex64> = Array2::eye(n);
    let mut term: Array2<Complex64> = Array2::eye(n);
    for k in 1..=64 {
        term = term.dot(&scaled) / Complex64::new(k as f64, 0.0);
        sum += &term;
        if one_norm(&term) <= series_tol * one_norm(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.dot(&sum);
    }
    FockOperator::new(a.dims.clone(), sum)
}

/// Eigen-decomposition of a hermitian operator (ascending eigenvalues).
pub fn hermitian_eigen(op: &FockOperator) -> Result<(Array1<f64>, Array2<Complex64>)> {
    eigh(&op.data)
}

pub(crate) fn eigh(m: &Array2<Complex64>) -> Result<(Array1<f64>, Array2<Complex64>)> {
    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NonFinite);
    }
    // LAPACK reads a row-major buffer as the transpose, which for a
    // hermitian matrix conjugates the eigenvectors; hand it column-major.
    let column_major = hermitian_part(m)
        .reversed_axes()
        .as_standard_layout()
        .to_owned()
        .reversed_axes();
    Ok(column_major.eigh(UPLO::Lower)?)
}

/// `V diag(f(λ)) V†`.
pub(crate) fn spectral_map(
    values: &Array1<f64>,
    vectors: &Array2<Complex64>,
    f: impl Fn(f64) -> Complex64,
) -> Array2<Complex64> {
    let mut scaled = vectors.clone();
    for (mut col, &lambda) in scaled.axis_iter_mut(Axis(1)).zip(values.iter()) {
        let w = f(lambda);
        col.mapv_inplace(|z| z * w);
    }
    scaled.dot(&dagger(vectors))
}

/// Thermal state `exp(-βH) / Tr exp(-βH)`.
pub fn gibbs_state(h: &FockOperator, beta: f64) -> Result<DensityMatrix> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(invalid("beta", format!("must be finite and >= 0, got {beta}")));
    }
    let tolerances = Tolerances::default();
    let scale = h.max_abs().max(1.0);
    let defect = h.hermiticity_defect();
    if defect > tolerances.hermiticity * scale {
        return Err(Error::NotHermitian {
            defect,
            tolerance: tolerances.hermiticity * scale,
        });
    }
    let (values, vectors) = eigh(&h.data)?;
    let ground = values[0];
    let z: f64 = values.iter().map(|&e| (-beta * (e - ground)).exp()).sum();
    let rho = spectral_map(&values, &vectors, |e| {
        Complex64::new((-beta * (e - ground)).exp() / z, 0.0)
    });
    Ok(DensityMatrix {
        op: FockOperator::new(h.dims.clone(), hermitian_part(&rho))?,
        tolerances,
    })
}

/// Validation thresholds attached to a density matrix.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub trace: f64,
    pub hermiticity: f64,
    pub positivity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            trace: 1e-10,
            hermiticity: 1e-10,
            positivity: 1e-10,
        }
    }
}

/// A hermitian, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    op: FockOperator,
    tolerances: Tolerances,
}

impl DensityMatrix {
    /// Validates trace and hermiticity. Positivity is checked separately by
    /// [`DensityMatrix::check_positive`] because it needs a diagonalisation.
    pub fn new(op: FockOperator, tolerances: Tolerances) -> Result<Self> {
        if !op.is_finite() {
            return Err(Error::NonFinite);
        }
        let trace = op.trace();
        if (trace - ONE).norm() > tolerances.trace {
            return Err(Error::TraceViolation {
                trace: trace.re,
                tolerance: tolerances.trace,
            });
        }
        let defect = op.hermiticity_defect();
        if defect > tolerances.hermiticity {
            return Err(Error::NotHermitian {
                defect,
                tolerance: tolerances.hermiticity,
            });
        }
        Ok(Self { op, tolerances })
    }

    /// Wraps an operator without validation. Integrators use this so that
    /// trace drift and hermiticity defects can be recorded as diagnostics.
    pub fn new_unchecked(op: FockOperator, tolerances: Tolerances) -> Self {
        Self { op, tolerances }
    }

    /// Pure state `|ψ><ψ|` from an (unnormalised) vector.
    pub fn pure(dims: &[usize], psi: &[Complex64]) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm2 == 0.0 {
            return Err(invalid("psi", "zero vector"));
        }
        let side: usize = dims.iter().product();
        if psi.len() != side {
            return Err(Error::DimensionMismatch {
                expected: vec![side],
                found: vec![psi.len()],
            });
        }
        let data = Array2::from_shape_fn((side, side), |(i, j)| psi[i] * psi[j].conj() / norm2);
        Self::new(FockOperator::new(dims.to_vec(), data)?, Tolerances::default())
    }

    pub fn op(&self) -> &FockOperator {
        &self.op
    }

    pub fn into_op(self) -> FockOperator {
        self.op
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.op.data
    }

    pub fn dims(&self) -> &[usize] {
        &self.op.dims
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances
    }

    pub fn trace_error(&self) -> f64 {
        (self.op.trace() - ONE).norm()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.op.hermiticity_defect()
    }

    pub fn eigenvalues(&self) -> Result<Array1<f64>> {
        Ok(eigh(&self.op.data)?.0)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    pub fn check_positive(&self) -> Result<()> {
        let min_eigenvalue = self.min_eigenvalue()?;
        if min_eigenvalue < -self.tolerances.positivity {
            return Err(Error::NotPositive {
                min_eigenvalue,
                tolerance: self.tolerances.positivity,
            });
        }
        Ok(())
    }

    pub fn purity(&self) -> f64 {
        trace_of_product(&self.op.data, &self.op.data).re
    }

    pub fn expectation(&self, observable: &FockOperator) -> Result<Complex64> {
        observable.expectation(&self.op)
    }

    /// Population of the highest Fock level of `subsystem`, summed over
    /// the other subsystems.
    pub fn top_level_population(&self, subsystem: usize) -> Result<f64> {
        let reduced = if self.op.dims.len() == 1 {
            self.op.clone()
        } else {
            partial_trace_op(&self.op, &[subsystem])?
        };
        let top = reduced.dim() - 1;
        Ok(reduced.data[[top, top]].re)
    }

    /// Half the trace norm of `self - other`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        self.op.check_same_dims(&other.op)?;
        let diff = &self.op.data - &other.op.data;
        let (values, _) = eigh(&diff)?;
        Ok(0.5 * values.iter().map(|v| v.abs()).sum::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn eigenvectors_of_complex_hermitian_matrix() {
        let h = Array2::from_shape_vec(
            (3, 3),
            vec![
                c(1.0),
                Complex64::new(0.2, -0.7),
                Complex64::new(0.0, 0.3),
                Complex64::new(0.2, 0.7),
                c(-0.5),
                Complex64::new(0.4, 0.1),
                Complex64::new(0.0, -0.3),
                Complex64::new(0.4, -0.1),
                c(2.0),
            ],
        )
        .unwrap();
        let (values, vectors) = eigh(&h).unwrap();
        let lhs = h.dot(&vectors);
        for j in 0..3 {
            for i in 0..3 {
                assert!((lhs[[i, j]] - vectors[[i, j]] * values[j]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn annihilation_two_levels() {
        let a = annihilation_op(2).unwrap();
        assert_eq!(a.data()[[0, 1]], c(1.0));
        assert_eq!(a.data()[[0, 0]], c(0.0));
        assert_eq!(a.data()[[1, 0]], c(0.0));
        assert_eq!(a.data()[[1, 1]], c(0.0));
    }

    #[test]
    fn number_operator_from_ladder() {
        let a = annihilation_op(3).unwrap();
        let n = &creation_op(3).unwrap() * &a;
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { c(i as f64) } else { c(0.0) };
                assert!((n.data()[[i, j]] - expected).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn truncated_commutator_has_defect_in_top_level() {
        let a = annihilation_op(5).unwrap();
        let comm = commutator(&a, &a.dagger()).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let expected = match (i == j, i) {
                    (true, 4) => -4.0,
                    (true, _) => 1.0,
                    _ => 0.0,
                };
                assert!((comm.data()[[i, j]] - c(expected)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_small_dimensions() {
        assert!(matches!(annihilation_op(1), Err(Error::InvalidDimension { dim: 1 })));
        assert!(FockOperator::identity(&[2, 0]).is_err());
    }

    #[test]
    fn identity_kron_identity() {
        let i6 = tensor_product(
            &FockOperator::identity(&[2]).unwrap(),
            &FockOperator::identity(&[3]).unwrap(),
        );
        assert_eq!(i6.dims(), &[2, 3]);
        assert_eq!(i6.data(), &Array2::<Complex64>::eye(6));
    }

    #[test]
    fn lowering_first_factor() {
        let op = tensor_product(&annihilation_op(2).unwrap(), &FockOperator::identity(&[2]).unwrap());
        // |1>|0> has index 2, |0>|0> has index 0
        let mut ket = Array1::zeros(4);
        ket[2] = c(1.0);
        let out = op.data().dot(&ket);
        assert_eq!(out[0], c(1.0));
        assert!(out.iter().skip(1).all(|z| z.norm() == 0.0));
    }

    #[test]
    fn partial_trace_rejects_bad_selection() {
        let rho = DensityMatrix::new(
            FockOperator::identity(&[2, 2]).unwrap().scale(c(0.25)),
            Tolerances::default(),
        )
        .unwrap();
        assert!(partial_trace(&rho, &[]).is_err());
        assert!(partial_trace(&rho, &[2]).is_err());
        assert!(partial_trace(&rho, &[0, 0]).is_err());
    }

    #[test]
    fn bell_state_reduces_to_maximally_mixed() {
        let s = 1.0 / 2f64.sqrt();
        let rho = DensityMatrix::pure(&[2, 2], &[c(s), c(0.0), c(0.0), c(s)]).unwrap();
        for keep in [0, 1] {
            let r = partial_trace(&rho, &[keep]).unwrap();
            assert!((r.data()[[0, 0]] - c(0.5)).norm() < 1e-15);
            assert!((r.data()[[1, 1]] - c(0.5)).norm() < 1e-15);
            assert!(r.data()[[0, 1]].norm() < 1e-15);
        }
    }

    #[test]
    fn exp_of_zero_and_diagonal() {
        let z = FockOperator::zeros(&[4]).unwrap();
        let e = matrix_exp(&z, 1e-14).unwrap();
        assert_eq!(e.data(), &Array2::<Complex64>::eye(4));

        let d = [c(-2.0), c(0.3), Complex64::new(1.0, 2.0), c(5.0)];
        let e = matrix_exp(&FockOperator::from_diagonal(&d).unwrap(), 1e-14).unwrap();
        for (i, di) in d.iter().enumerate() {
            let rel = (e.data()[[i, i]] - di.exp()).norm() / di.exp().norm();
            assert!(rel < 1e-13, "entry {i}: {rel}");
        }
    }

    #[test]
    fn exp_rejects_non_finite() {
        let mut z = FockOperator::zeros(&[2]).unwrap().into_data();
        z[[0, 1]] = Complex64::new(f64::NAN, 0.0);
        let op = FockOperator::new(vec![2], z).unwrap();
        assert!(matches!(matrix_exp(&op, 1e-12), Err(Error::NonFinite)));
    }

    #[test]
    fn displacement_like_exponential_is_unitary() {
        let a = annihilation_op(20).unwrap();
        let x = &a + &a.dagger();
        let u = matrix_exp(&x.scale(Complex64::new(0.0, 0.3)), 1e-14).unwrap();
        let defect = &(&u.dagger() * &u) - &FockOperator::identity(&[20]).unwrap();
        assert!(defect.max_abs() < 1e-11, "{}", defect.max_abs());
    }

    #[test]
    fn gibbs_infinite_temperature_and_two_level() {
        let h = number_op(4).unwrap();
        let rho = gibbs_state(&h, 0.0).unwrap();
        for i in 0..4 {
            assert!((rho.data()[[i, i]] - c(0.25)).norm() < 1e-15);
        }

        let h = FockOperator::from_diagonal(&[c(0.0), c(1.0)]).unwrap();
        let rho = gibbs_state(&h, 3f64.ln()).unwrap();
        assert!((rho.data()[[0, 0]] - c(0.75)).norm() < 1e-15);
        assert!((rho.data()[[1, 1]] - c(0.25)).norm() < 1e-15);
    }

    #[test]
    fn gibbs_oscillator_occupation() {
        let n = number_op(30).unwrap();
        let rho = gibbs_state(&n, 1.0).unwrap();
        let occ = rho.expectation(&n).unwrap().re;
        let expected = 1.0 / (1f64.exp() - 1.0);
        assert!((occ - expected).abs() < 1e-8, "{occ} vs {expected}");
    }

    #[test]
    fn gibbs_rejects_non_hermitian() {
        let a = annihilation_op(3).unwrap();
        assert!(matches!(gibbs_state(&a, 1.0), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn density_matrix_validation() {
        let half = FockOperator::identity(&[2]).unwrap().scale(c(0.5));
        assert!(DensityMatrix::new(half.clone(), Tolerances::default()).is_ok());
        let bad = half.scale(c(1.5));
        assert!(matches!(
            DensityMatrix::new(bad, Tolerances::default()),
            Err(Error::TraceViolation { .. })
        ));
        let mut data = half.into_data();
        data[[0, 1]] = c(0.1);
        let skew = FockOperator::new(vec![2], data).unwrap();
        assert!(matches!(
            DensityMatrix::new(skew, Tolerances::default()),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn negative_eigenvalue_is_reported() {
        let op = FockOperator::from_diagonal(&[c(1.2), c(-0.2)]).unwrap();
        let rho = DensityMatrix::new(op, Tolerances::default()).unwrap();
        assert!(matches!(rho.check_positive(), Err(Error::NotPositive { .. })));
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states() {
        let up = DensityMatrix::pure(&[2], &[c(1.0), c(0.0)]).unwrap();
        let down = DensityMatrix::pure(&[2], &[c(0.0), c(1.0)]).unwrap();
        assert!((up.trace_distance(&down).unwrap() - 1.0).abs() < 1e-14);
        assert!(up.trace_distance(&up).unwrap() < 1e-15);
    }
}
