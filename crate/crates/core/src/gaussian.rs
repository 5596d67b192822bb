//! Multimode Gaussian states in phase space.
//!
//! Quadratures are ordered `(x₁, p₁, x₂, p₂, …)` and measured in shot-noise
//! units: the vacuum covariance is the identity and `[X, P] = 2i`. States are
//! plain values; every operation returns a new state.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Absolute tolerance on covariance symmetry.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Tolerance of the `S Ω Sᵀ = Ω` check.
pub const SYMPLECTIC_TOL: f64 = 1e-10;
/// Tolerance on symplectic eigenvalues below the vacuum level.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// A single field quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    X,
    P,
}

impl Quadrature {
    /// Position of this quadrature of `mode` in the phase-space vector.
    pub fn index(self, mode: usize) -> usize {
        match self {
            Quadrature::X => 2 * mode,
            Quadrature::P => 2 * mode + 1,
        }
    }
}

/// The block-diagonal symplectic form with blocks `((0, 1), (-1, 0))`.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Mean vector and covariance matrix of an `n`-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Builds a state from raw moments, checking shape, finiteness and symmetry.
    pub fn from_moments(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(invalid("mean", "length must be a positive even number"));
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: cov.nrows(),
            });
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("cov", "moments must be finite"));
        }
        for i in 0..dim {
            if cov[(i, i)] < 0.0 {
                return Err(invalid(
                    "cov",
                    format!("negative variance on diagonal entry {i}"),
                ));
            }
            for j in (i + 1)..dim {
                if (cov[(i, j)] - cov[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(invalid("cov", format!("not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { mean, cov })
    }

    pub fn vacuum(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(invalid("n_modes", "a state needs at least one mode"));
        }
        Ok(Self {
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes),
        })
    }

    /// Coherent state with quadrature means `(x, p)`.
    pub fn coherent(x: f64, p: f64) -> Self {
        Self {
            mean: DVector::from_vec(vec![x, p]),
            cov: DMatrix::identity(2, 2),
        }
    }

    /// Thermal state with variance `v` in both quadratures.
    pub fn thermal(v: f64) -> Result<Self> {
        if !(v >= 1.0) || !v.is_finite() {
            return Err(invalid(
                "v",
                format!("thermal variance must be finite and >= 1, got {v}"),
            ));
        }
        Ok(Self {
            mean: DVector::zeros(2),
            cov: DMatrix::identity(2, 2) * v,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Mean of one quadrature of one mode.
    pub fn quadrature_mean(&self, mode: usize, q: Quadrature) -> Result<f64> {
        self.check_mode(mode)?;
        Ok(self.mean[q.index(mode)])
    }

    /// Variance of one quadrature of one mode.
    pub fn quadrature_variance(&self, mode: usize, q: Quadrature) -> Result<f64> {
        self.check_mode(mode)?;
        let i = q.index(mode);
        Ok(self.cov[(i, i)])
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes() {
            return Err(Error::ModeOutOfRange {
                index: mode,
                n_modes: self.n_modes(),
            });
        }
        Ok(())
    }

    /// Product state `self ⊗ other`; modes of `other` follow those of `self`.
    pub fn tensor(&self, other: &GaussianState) -> GaussianState {
        let (da, db) = (self.mean.len(), other.mean.len());
        let mut mean = DVector::zeros(da + db);
        mean.rows_mut(0, da).copy_from(&self.mean);
        mean.rows_mut(da, db).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(da + db, da + db);
        cov.view_mut((0, 0), (da, da)).copy_from(&self.cov);
        cov.view_mut((da, da), (db, db)).copy_from(&other.cov);
        GaussianState { mean, cov }
    }

    /// `mean → S·mean`, `cov → S·cov·Sᵀ`.
    pub fn apply(&self, map: &SymplecticMap) -> Result<GaussianState> {
        let s = map.matrix();
        if s.nrows() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                actual: s.nrows(),
            });
        }
        let mean = s * &self.mean;
        let mut cov = s * &self.cov * s.transpose();
        symmetrize(&mut cov);
        Ok(GaussianState { mean, cov })
    }

    /// Phase-space displacement of a single mode.
    pub fn displace(&self, mode: usize, dx: f64, dp: f64) -> Result<GaussianState> {
        self.check_mode(mode)?;
        let mut out = self.clone();
        out.mean[2 * mode] += dx;
        out.mean[2 * mode + 1] += dp;
        Ok(out)
    }

    /// Reduced state on the listed modes, in the listed order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<GaussianState> {
        if keep.is_empty() {
            return Err(invalid("keep", "must keep at least one mode"));
        }
        for (k, &m) in keep.iter().enumerate() {
            self.check_mode(m)?;
            if keep[..k].contains(&m) {
                return Err(invalid("keep", format!("mode {m} listed twice")));
            }
        }
        let idx: Vec<usize> = keep.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        Ok(GaussianState {
            mean: DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.mean[i])),
            cov: DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.cov[(idx[r], idx[c])]),
        })
    }

    /// Ideal heterodyne detection of `mode` with outcome `(x, p)`.
    ///
    /// The outcome is distributed as `N(d_E, A + I)`; the remaining modes are
    /// updated to `B − C(A+I)⁻¹Cᵀ` and `d_S + C(A+I)⁻¹(outcome − d_E)`. Returns
    /// the conditional state on the other modes and the log-density of the
    /// outcome.
    pub fn condition_heterodyne(
        &self,
        mode: usize,
        outcome: (f64, f64),
    ) -> Result<(GaussianState, f64)> {
        self.condition_quadratures(
            &[(mode, Quadrature::X), (mode, Quadrature::P)],
            &DMatrix::identity(2, 2),
            &[outcome.0, outcome.1],
        )
    }

    /// Sharp homodyne detection of one quadrature of `mode`.
    pub fn condition_homodyne(
        &self,
        mode: usize,
        q: Quadrature,
        outcome: f64,
    ) -> Result<(GaussianState, f64)> {
        self.condition_quadratures(&[(mode, q)], &DMatrix::zeros(1, 1), &[outcome])
    }

    /// Conditions on a joint reading of several quadratures with additive
    /// Gaussian readout noise `noise` (zero for sharp readings). Every mode
    /// owning a measured quadrature is removed from the returned state.
    ///
    /// Readings from different modes may be combined freely. Reading both
    /// quadratures of one mode sharply is not a physical measurement; the
    /// algebra is still well defined and is used for Wigner-level bookkeeping.
    pub fn condition_quadratures(
        &self,
        measured: &[(usize, Quadrature)],
        noise: &DMatrix<f64>,
        outcome: &[f64],
    ) -> Result<(GaussianState, f64)> {
        let k = measured.len();
        if k == 0 {
            return Err(invalid("measured", "nothing to condition on"));
        }
        if outcome.len() != k || noise.nrows() != k || noise.ncols() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: outcome.len(),
            });
        }
        let mut dropped = Vec::new();
        for &(m, _) in measured {
            self.check_mode(m)?;
            if !dropped.contains(&m) {
                dropped.push(m);
            }
        }
        let kept: Vec<usize> = (0..self.n_modes())
            .filter(|m| !dropped.contains(m))
            .collect();
        if kept.is_empty() {
            return Err(invalid("measured", "conditioning would leave no modes"));
        }
        let mi: Vec<usize> = measured.iter().map(|&(m, q)| q.index(m)).collect();
        let ri: Vec<usize> = kept.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();

        let a = DMatrix::from_fn(k, k, |r, c| self.cov[(mi[r], mi[c])]) + noise;
        let b = DMatrix::from_fn(ri.len(), ri.len(), |r, c| self.cov[(ri[r], ri[c])]);
        let c = DMatrix::from_fn(ri.len(), k, |r, col| self.cov[(ri[r], mi[col])]);
        let d_e = DVector::from_iterator(k, mi.iter().map(|&i| self.mean[i]));
        let d_s = DVector::from_iterator(ri.len(), ri.iter().map(|&i| self.mean[i]));
        let resid = DVector::from_column_slice(outcome) - &d_e;

        let chol = a.clone().cholesky().ok_or_else(|| {
            Error::Numeric("measured covariance block is not positive definite".into())
        })?;
        let a_inv = chol.inverse();
        let gain = &c * &a_inv;
        let mean = d_s + &gain * &resid;
        let mut cov = b - &gain * c.transpose();
        symmetrize(&mut cov);

        let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let maha = resid.dot(&(&a_inv * &resid));
        let log_likelihood = -0.5 * (k as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + maha);

        Ok((GaussianState { mean, cov }, log_likelihood))
    }

    /// Symplectic eigenvalues in ascending order (one per mode).
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        symplectic_eigenvalues(&self.cov)
    }

    /// Uncertainty-principle check: every symplectic eigenvalue ≥ 1 − tol.
    pub fn is_physical(&self) -> Result<bool> {
        Ok(self
            .symplectic_eigenvalues()?
            .iter()
            .all(|&nu| nu >= 1.0 - PHYSICALITY_TOL))
    }
}

/// Symplectic eigenvalues of a positive-definite covariance matrix, ascending.
///
/// Computed as square roots of the (doubly degenerate) eigenvalues of the
/// symmetric matrix `σ^{1/2} Ωᵀ σ Ω σ^{1/2}`.
pub fn symplectic_eigenvalues(cov: &DMatrix<f64>) -> Result<Vec<f64>> {
    let dim = cov.nrows();
    if dim == 0 || !dim.is_multiple_of(2) || cov.ncols() != dim {
        return Err(invalid("cov", "must be square with even dimension"));
    }
    let eig = cov.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(Error::Numeric("covariance is not positive definite".into()));
    }
    let sqrt_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let root = &eig.eigenvectors * sqrt_diag * eig.eigenvectors.transpose();
    let omega = symplectic_form(dim / 2);
    let mut m = &root * omega.transpose() * cov * &omega * &root;
    symmetrize(&mut m);
    let mut lambdas: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    lambdas.sort_by(|a, b| a.total_cmp(b));
    Ok(lambdas
        .chunks(2)
        .map(|pair| (0.5 * (pair[0] + pair[1])).max(0.0).sqrt())
        .collect())
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// A linear phase-space map preserving the symplectic form.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMap {
    matrix: DMatrix<f64>,
}

impl SymplecticMap {
    /// Wraps a matrix after checking `S Ω Sᵀ = Ω` to [`SYMPLECTIC_TOL`].
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || matrix.ncols() != dim {
            return Err(invalid("matrix", "must be square with even dimension"));
        }
        let map = Self { matrix };
        if !map.is_symplectic(SYMPLECTIC_TOL) {
            return Err(invalid("matrix", "does not preserve the symplectic form"));
        }
        Ok(map)
    }

    pub fn identity(n_modes: usize) -> Self {
        Self {
            matrix: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    /// Beam splitter of transmission `eta` between modes `i` and `j`:
    /// `X_i → √η X_i + √(1−η) X_j`, `X_j → √(1−η) X_i − √η X_j`, and the same
    /// for `P`.
    pub fn beam_splitter(n_modes: usize, eta: f64, i: usize, j: usize) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(invalid(
                "eta",
                format!("beam-splitter transmission must lie in (0, 1], got {eta}"),
            ));
        }
        Self::coupler(n_modes, eta, i, j)
    }

    /// Same coupling as [`SymplecticMap::beam_splitter`] but accepting the
    /// closed interval `[0, 1]`; `t = 0` swaps the two modes with a sign flip.
    pub(crate) fn coupler(n_modes: usize, t: f64, i: usize, j: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(invalid(
                "t",
                format!("coupling must lie in [0, 1], got {t}"),
            ));
        }
        for m in [i, j] {
            if m >= n_modes {
                return Err(Error::ModeOutOfRange { index: m, n_modes });
            }
        }
        if i == j {
            return Err(invalid("j", "beam-splitter modes must be distinct"));
        }
        let (a, b) = (t.sqrt(), (1.0 - t).sqrt());
        let mut s = DMatrix::identity(2 * n_modes, 2 * n_modes);
        for q in 0..2 {
            let (ii, jj) = (2 * i + q, 2 * j + q);
            s[(ii, ii)] = a;
            s[(ii, jj)] = b;
            s[(jj, ii)] = b;
            s[(jj, jj)] = -a;
        }
        Ok(Self { matrix: s })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    /// The map that applies `self` first and `next` second.
    pub fn then(&self, next: &SymplecticMap) -> Result<SymplecticMap> {
        if next.matrix.nrows() != self.matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.nrows(),
                actual: next.matrix.nrows(),
            });
        }
        Ok(SymplecticMap {
            matrix: &next.matrix * &self.matrix,
        })
    }

    pub fn is_symplectic(&self, tol: f64) -> bool {
        let omega = symplectic_form(self.n_modes());
        let lhs = &self.matrix * &omega * self.matrix.transpose();
        (lhs - omega).amax() <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn vacuum_has_identity_covariance() {
        let v1 = GaussianState::vacuum(1).unwrap();
        assert_eq!(v1.mean().as_slice(), &[0.0, 0.0]);
        assert_eq!(v1.cov(), &DMatrix::identity(2, 2));
        assert_eq!(
            GaussianState::vacuum(2).unwrap().cov(),
            &DMatrix::identity(4, 4)
        );
        assert!(v1.is_physical().unwrap());
        assert!(GaussianState::vacuum(0).is_err());
    }

    #[test]
    fn coherent_and_thermal_constructors() {
        assert_eq!(
            GaussianState::coherent(0.0, 0.0),
            GaussianState::vacuum(1).unwrap()
        );
        let c = GaussianState::coherent(3.0, -1.0);
        assert_eq!(c.mean().as_slice(), &[3.0, -1.0]);
        assert_eq!(
            GaussianState::thermal(1.0).unwrap(),
            GaussianState::vacuum(1).unwrap()
        );
        assert_eq!(
            GaussianState::thermal(25.0).unwrap().cov(),
            &(DMatrix::identity(2, 2) * 25.0)
        );
        assert!(GaussianState::thermal(0.5).is_err());
        assert!(GaussianState::thermal(f64::NAN).is_err());
    }

    #[test]
    fn tensor_and_partial_trace_round_trip() {
        let v = GaussianState::vacuum(1).unwrap();
        assert_eq!(v.tensor(&v), GaussianState::vacuum(2).unwrap());
        let a = GaussianState::coherent(1.0, 2.0);
        let b = GaussianState::thermal(25.0).unwrap();
        let ab = a.tensor(&b);
        assert_eq!(ab.mean().as_slice(), &[1.0, 2.0, 0.0, 0.0]);
        assert_eq!(ab.partial_trace(&[0]).unwrap(), a);
        assert_eq!(ab.partial_trace(&[1]).unwrap(), b);
        assert_eq!(ab.partial_trace(&[0, 1]).unwrap(), ab);
        assert!(ab.partial_trace(&[0, 0]).is_err());
        assert!(ab.partial_trace(&[2]).is_err());
    }

    #[test]
    fn beam_splitter_sign_convention() {
        let s = SymplecticMap::beam_splitter(2, 1.0, 0, 1).unwrap();
        // identity on the transmitted mode, sign flip on the reflected arm
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, -1.0, -1.0]));
        assert_eq!(s.matrix(), &expected);

        let s = SymplecticMap::beam_splitter(2, 0.9, 0, 1).unwrap();
        let m = s.matrix();
        assert!(close(m[(0, 0)], 0.9f64.sqrt(), 1e-15));
        assert!(close(m[(0, 2)], 0.1f64.sqrt(), 1e-15));
        assert!(close(m[(2, 0)], 0.1f64.sqrt(), 1e-15));
        assert!(close(m[(2, 2)], -(0.9f64.sqrt()), 1e-15));
        assert!(close(m[(3, 3)], -(0.9f64.sqrt()), 1e-15));

        assert!(SymplecticMap::beam_splitter(2, 0.0, 0, 1).is_err());
        assert!(SymplecticMap::beam_splitter(2, 1.1, 0, 1).is_err());
        assert!(SymplecticMap::beam_splitter(2, 0.5, 1, 1).is_err());
    }

    #[test]
    fn passive_map_leaves_vacuum_invariant() {
        let s = SymplecticMap::beam_splitter(2, 0.5, 0, 1).unwrap();
        let out = GaussianState::vacuum(2).unwrap().apply(&s).unwrap();
        assert!((out.cov() - DMatrix::<f64>::identity(4, 4)).amax() < 1e-15);
    }

    #[test]
    fn beam_splitter_mixes_thermal_noise_into_signal() {
        let s = SymplecticMap::beam_splitter(2, 0.9, 0, 1).unwrap();
        let st = GaussianState::coherent(10.0, 0.0)
            .tensor(&GaussianState::thermal(25.0).unwrap())
            .apply(&s)
            .unwrap();
        assert!(close(st.cov()[(0, 0)], 3.4, 1e-12));
        assert!(close(st.cov()[(1, 1)], 3.4, 1e-12));
        assert!(close(st.mean()[0], 10.0 * 0.9f64.sqrt(), 1e-12));
        // reflected arm: (1-η)·1 + η·V
        assert!(close(st.cov()[(2, 2)], 0.1 + 0.9 * 25.0, 1e-12));
    }

    #[test]
    fn apply_identity_and_composition() {
        let st = GaussianState::coherent(1.0, -2.0).tensor(&GaussianState::thermal(3.0).unwrap());
        assert_eq!(st.apply(&SymplecticMap::identity(2)).unwrap(), st);
        let s1 = SymplecticMap::beam_splitter(2, 0.3, 0, 1).unwrap();
        let s2 = SymplecticMap::beam_splitter(2, 0.8, 1, 0).unwrap();
        let seq = st.apply(&s1).unwrap().apply(&s2).unwrap();
        let comp = st.apply(&s1.then(&s2).unwrap()).unwrap();
        assert!((seq.cov() - comp.cov()).amax() < 1e-12);
        assert!((seq.mean() - comp.mean()).amax() < 1e-12);
        assert!(st.apply(&SymplecticMap::identity(3)).is_err());
    }

    #[test]
    fn displacement_shifts_mean_only() {
        let v = GaussianState::vacuum(1).unwrap();
        let d = v.displace(0, 1.0, 1.0).unwrap();
        assert_eq!(d.mean().as_slice(), &[1.0, 1.0]);
        assert_eq!(d.cov(), v.cov());
        let dd = d.displace(0, 0.5, -2.0).unwrap();
        assert_eq!(dd.mean().as_slice(), &[1.5, -1.0]);
        assert!(v.displace(1, 0.0, 0.0).is_err());
    }

    #[test]
    fn conditioning_a_product_state_changes_nothing() {
        let sig = GaussianState::coherent(2.0, -1.0);
        let st = sig.tensor(&GaussianState::thermal(7.0).unwrap());
        for outcome in [(0.0, 0.0), (3.0, -4.0)] {
            let (c, _) = st.condition_heterodyne(1, outcome).unwrap();
            assert_eq!(c, sig);
        }
        let (c, _) = st.condition_homodyne(1, Quadrature::X, 5.0).unwrap();
        assert_eq!(c, sig);
    }

    fn entangled_pair(eta: f64, v: f64) -> GaussianState {
        GaussianState::coherent(1.0, 2.0)
            .tensor(&GaussianState::thermal(v).unwrap())
            .apply(&SymplecticMap::beam_splitter(2, eta, 0, 1).unwrap())
            .unwrap()
    }

    #[test]
    fn heterodyne_conditioning_matches_hand_computed_schur_complement() {
        let (eta, v) = (0.9, 25.0);
        let st = entangled_pair(eta, v);
        let (c, _) = st.condition_heterodyne(1, (0.0, 0.0)).unwrap();
        // A = (1-η)+ηV, B = η+(1-η)V, C = √(η(1-η))(1-V)
        let a = (1.0 - eta) + eta * v;
        let b = eta + (1.0 - eta) * v;
        let cc = (eta * (1.0 - eta)).sqrt() * (1.0 - v);
        let expected = b - cc * cc / (a + 1.0);
        assert!(close(c.cov()[(0, 0)], expected, 1e-12));
        assert!(close(c.cov()[(1, 1)], expected, 1e-12));
        // conditional covariance does not depend on the outcome
        let (c2, _) = st.condition_heterodyne(1, (4.0, -7.5)).unwrap();
        assert!((c.cov() - c2.cov()).amax() < 1e-14);
    }

    #[test]
    fn homodyne_x_leaves_p_mean_untouched() {
        let st = entangled_pair(0.6, 9.0);
        let (c, _) = st.condition_homodyne(1, Quadrature::X, 3.0).unwrap();
        assert!(close(c.mean()[1], st.mean()[1], 1e-14));
        assert!(close(c.cov()[(1, 1)], st.cov()[(1, 1)], 1e-14));
        assert!(c.mean()[0] != st.mean()[0]);
    }

    #[test]
    fn conditional_mean_is_linear_with_exact_slope() {
        let st = entangled_pair(0.7, 5.0);
        let a = st.cov()[(2, 2)] + 1.0;
        let slope = st.cov()[(0, 2)] / a;
        let (c0, _) = st.condition_heterodyne(1, (0.0, 0.0)).unwrap();
        for x in [-3.0, 0.5, 2.0, 10.0] {
            let (c, _) = st.condition_heterodyne(1, (x, 0.0)).unwrap();
            assert!(close(c.mean()[0] - c0.mean()[0], slope * x, 1e-12));
        }
    }

    #[test]
    fn heterodyne_likelihood_is_normalized() {
        // midpoint quadrature of the outcome density over a wide square grid
        let st = entangled_pair(0.5, 4.0);
        let (lo, hi, steps) = (-20.0, 20.0, 400);
        let h = (hi - lo) / steps as f64;
        let mut total = 0.0;
        for i in 0..steps {
            for j in 0..steps {
                let x = lo + (i as f64 + 0.5) * h;
                let p = lo + (j as f64 + 0.5) * h;
                total += st.condition_heterodyne(1, (x, p)).unwrap().1.exp() * h * h;
            }
        }
        assert!(close(total, 1.0, 1e-3), "integral {total}");
    }

    #[test]
    fn symplectic_eigenvalues_of_thermal_product() {
        let st = GaussianState::thermal(3.0)
            .unwrap()
            .tensor(&GaussianState::thermal(7.0).unwrap());
        let nu = st.symplectic_eigenvalues().unwrap();
        assert!(close(nu[0], 3.0, 1e-10) && close(nu[1], 7.0, 1e-10));
        // invariant under a passive map
        let mixed = st
            .apply(&SymplecticMap::beam_splitter(2, 0.37, 0, 1).unwrap())
            .unwrap();
        let nu2 = mixed.symplectic_eigenvalues().unwrap();
        assert!(close(nu2[0], 3.0, 1e-9) && close(nu2[1], 7.0, 1e-9));
    }

    #[test]
    fn from_moments_rejects_asymmetric_covariance() {
        let mut cov = DMatrix::identity(2, 2);
        cov[(0, 1)] = 1e-6;
        assert!(GaussianState::from_moments(DVector::zeros(2), cov).is_err());
        assert!(GaussianState::from_moments(DVector::zeros(3), DMatrix::identity(3, 3)).is_err());
    }

    fn random_passive_state(vs: &[f64], etas: &[(f64, usize, usize)]) -> GaussianState {
        let mut st = GaussianState::thermal(vs[0]).unwrap();
        for &v in &vs[1..] {
            st = st.tensor(&GaussianState::thermal(v).unwrap());
        }
        let n = vs.len();
        for &(eta, i, j) in etas {
            let (i, j) = (i % n, j % n);
            if i != j {
                st = st
                    .apply(&SymplecticMap::beam_splitter(n, eta, i, j).unwrap())
                    .unwrap();
            }
        }
        st
    }

    proptest! {
        #[test]
        fn beam_splitters_are_symplectic(eta in 1e-6f64..=1.0, n in 2usize..6, i in 0usize..6, j in 0usize..6) {
            let (i, j) = (i % n, j % n);
            prop_assume!(i != j);
            let s = SymplecticMap::beam_splitter(n, eta, i, j).unwrap();
            prop_assert!(s.is_symplectic(SYMPLECTIC_TOL));
        }

        #[test]
        fn passive_evolution_stays_above_vacuum(
            vs in proptest::collection::vec(1.0f64..50.0, 2..5),
            etas in proptest::collection::vec((0.01f64..=1.0, 0usize..5, 0usize..5), 0..8),
        ) {
            let st = random_passive_state(&vs, &etas);
            let cov = st.cov();
            prop_assert!((cov - cov.transpose()).amax() <= SYMMETRY_TOL);
            let min_eig = cov.clone().symmetric_eigen().eigenvalues.min();
            prop_assert!(min_eig >= 1.0 - PHYSICALITY_TOL);
            prop_assert!(st.is_physical().unwrap());
        }

        #[test]
        fn heterodyne_output_is_symmetric_and_outcome_independent(
            vs in proptest::collection::vec(1.0f64..30.0, 3..5),
            etas in proptest::collection::vec((0.05f64..=1.0, 0usize..5, 0usize..5), 1..6),
            x in -20.0f64..20.0, p in -20.0f64..20.0,
        ) {
            let st = random_passive_state(&vs, &etas);
            let (c1, _) = st.condition_heterodyne(1, (x, p)).unwrap();
            let (c2, _) = st.condition_heterodyne(1, (0.0, 0.0)).unwrap();
            prop_assert!((c1.cov() - c1.cov().transpose()).amax() <= SYMMETRY_TOL);
            prop_assert!((c1.cov() - c2.cov()).amax() <= 1e-10);
            prop_assert!(c1.is_physical().unwrap());
        }

        #[test]
        fn sequential_heterodyne_conditioning_commutes(
            v1 in 1.0f64..20.0, v2 in 1.0f64..20.0, eta1 in 0.05f64..1.0, eta2 in 0.05f64..1.0,
            o1 in (-5.0f64..5.0, -5.0f64..5.0), o2 in (-5.0f64..5.0, -5.0f64..5.0),
        ) {
            // signal couples to two independent environments
            let st = GaussianState::coherent(1.0, 1.0)
                .tensor(&GaussianState::thermal(v1).unwrap())
                .tensor(&GaussianState::thermal(v2).unwrap());
            let st = st
                .apply(&SymplecticMap::beam_splitter(3, eta1, 0, 1).unwrap()).unwrap()
                .apply(&SymplecticMap::beam_splitter(3, eta2, 0, 2).unwrap()).unwrap();
            let (a, _) = st.condition_heterodyne(2, o2).unwrap();
            let (a, _) = a.condition_heterodyne(1, o1).unwrap();
            let (b, _) = st.condition_heterodyne(1, o1).unwrap();
            let (b, _) = b.condition_heterodyne(1, o2).unwrap();
            prop_assert!((a.cov() - b.cov()).amax() < 1e-10);
            prop_assert!((a.mean() - b.mean()).amax() < 1e-10);
        }
    }
}
