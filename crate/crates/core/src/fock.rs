//! Truncated multi-mode Fock spaces and the dense operators living on them.
//!
//! Conventions, fixed once and shared by every module:
//!
//! - per-mode cutoff `d`: levels 0..d-1;
//! - little-endian mode ordering: the global basis index is
//!   Σ_k n_k d^k, so mode 0 varies fastest;
//! - a = (Q + iP)/√2, hence Q = (a + a†)/√2 and P = -i(a - a†)/√2, and
//!   [Q, P] = iI on the interior;
//! - the interior projector Π keeps per-mode levels 0..d-1-g where g is the
//!   guard band; statements about unbounded operators are asserted only
//!   after compression by Π.

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};
use num_complex::Complex64;

/// A truncated n-mode Fock space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeSystem {
    n_modes: usize,
    cutoff: usize,
    guard_band: usize,
}

impl ModeSystem {
    /// System with the default guard band g = max(4, ⌈d/5⌉), clamped to d-1.
    pub fn new(n_modes: usize, cutoff: usize) -> Result<Self> {
        let g = 4.max(cutoff.div_ceil(5)).min(cutoff.saturating_sub(1));
        Self::with_guard_band(n_modes, cutoff, g)
    }

    pub fn with_guard_band(n_modes: usize, cutoff: usize, guard_band: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::invalid("n_modes", "must be positive"));
        }
        if cutoff == 0 {
            return Err(Error::invalid("cutoff", "must be positive"));
        }
        if guard_band >= cutoff {
            return Err(Error::invalid(
                "guard_band",
                format!("g = {guard_band} must be < cutoff d = {cutoff}"),
            ));
        }
        // Dense storage: keep total dimension at desk scale.
        let dim = (cutoff as f64).powi(n_modes as i32);
        if dim > 65536.0 {
            return Err(Error::invalid(
                "cutoff",
                format!("total dimension d^n = {dim} exceeds dense-storage budget"),
            ));
        }
        Ok(ModeSystem {
            n_modes,
            cutoff,
            guard_band,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn guard_band(&self) -> usize {
        self.guard_band
    }

    /// Total Hilbert-space dimension d^n.
    pub fn dim(&self) -> usize {
        self.cutoff.pow(self.n_modes as u32)
    }

    /// Number of per-mode levels kept by the interior projector.
    pub fn interior_levels(&self) -> usize {
        self.cutoff - self.guard_band
    }

    /// Digits of a global basis index in little-endian mode order.
    pub fn digits(&self, index: usize) -> Vec<usize> {
        let mut rem = index;
        (0..self.n_modes)
            .map(|_| {
                let k = rem % self.cutoff;
                rem /= self.cutoff;
                k
            })
            .collect()
    }

    /// Global index of a Fock tuple (k_0, k_1, ...).
    pub fn index(&self, levels: &[usize]) -> usize {
        debug_assert_eq!(levels.len(), self.n_modes);
        levels
            .iter()
            .rev()
            .fold(0, |acc, &k| acc * self.cutoff + k)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes {
            return Err(Error::ModeOutOfRange {
                mode,
                n_modes: self.n_modes,
            });
        }
        Ok(())
    }

    /// Lifts a single-mode operator to the full system.
    pub fn lift(&self, mode: usize, single: &CMat) -> Result<CMat> {
        self.check_mode(mode)?;
        debug_assert_eq!(single.nrows(), self.cutoff);
        let d = self.cutoff;
        let left = linalg::identity(d.pow((self.n_modes - 1 - mode) as u32));
        let right = linalg::identity(d.pow(mode as u32));
        // kron is slow-index-first, so the highest mode is the leftmost factor.
        Ok(linalg::kron(&linalg::kron(&left, single), &right))
    }

    /// Single-mode annihilation matrix (not lifted): ⟨k-1|a|k⟩ = √k.
    pub fn ladder_single(&self) -> CMat {
        let d = self.cutoff;
        let mut a = CMat::zeros(d, d);
        for k in 1..d {
            a[(k - 1, k)] = c((k as f64).sqrt(), 0.0);
        }
        a
    }

    /// Interior projector Π onto per-mode levels 0..d-1-g.
    pub fn interior_projector(&self) -> CMat {
        let keep = self.interior_levels();
        let dim = self.dim();
        let mut p = CMat::zeros(dim, dim);
        'outer: for i in 0..dim {
            for &k in &self.digits(i) {
                if k >= keep {
                    continue 'outer;
                }
            }
            p[(i, i)] = c(1.0, 0.0);
        }
        p
    }

    /// Π X Π.
    pub fn compress_interior(&self, x: &CMat) -> CMat {
        let p = self.interior_projector();
        &p * x * &p
    }

    /// Basis column vector |k_0, k_1, ...⟩.
    pub fn basis_vector(&self, levels: &[usize]) -> CVec {
        let mut v = CVec::zeros(self.dim());
        v[self.index(levels)] = c(1.0, 0.0);
        v
    }
}

/// A dense complex matrix carrying its mode structure and a Hermiticity cache.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    system: ModeSystem,
    entries: CMat,
    hermitian: bool,
}

impl DenseOperator {
    pub fn new(system: ModeSystem, entries: CMat) -> Self {
        let hermitian = linalg::is_hermitian(&entries, 1e-12);
        DenseOperator {
            system,
            entries,
            hermitian,
        }
    }

    /// Wraps a matrix known to be Hermitian (symmetrizes to enforce it).
    pub fn hermitian(system: ModeSystem, entries: CMat) -> Self {
        DenseOperator {
            system,
            entries: linalg::hermitize(&entries),
            hermitian: true,
        }
    }

    pub fn identity(system: ModeSystem) -> Self {
        DenseOperator {
            entries: linalg::identity(system.dim()),
            system,
            hermitian: true,
        }
    }

    pub fn system(&self) -> ModeSystem {
        self.system
    }

    pub fn matrix(&self) -> &CMat {
        &self.entries
    }

    pub fn into_matrix(self) -> CMat {
        self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn dagger(&self) -> DenseOperator {
        DenseOperator {
            system: self.system,
            entries: self.entries.adjoint(),
            hermitian: self.hermitian,
        }
    }

    /// Unitarity defect ‖U†U - I‖∞.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.dim();
        linalg::operator_norm(&(self.entries.adjoint() * &self.entries - linalg::identity(d)))
    }
}

/// A density operator with cached mean photon number tr[ρN].
#[derive(Debug, Clone)]
pub struct QuantumState {
    op: DenseOperator,
    energy: f64,
}

impl QuantumState {
    /// Validates positivity (min eigenvalue ≥ -1e-10) and unit trace (1e-10).
    pub fn new(op: DenseOperator) -> Result<Self> {
        let tr = linalg::trace(op.matrix());
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidState(format!("trace = {tr}, expected 1")));
        }
        if !op.is_hermitian() {
            return Err(Error::InvalidState("density operator not Hermitian".into()));
        }
        let min_eig = linalg::min_eigenvalue(op.matrix());
        if min_eig < -1e-10 {
            return Err(Error::InvalidState(format!(
                "min eigenvalue {min_eig:.3e} below -1e-10"
            )));
        }
        let energy = mean_photon_number(&op);
        debug_assert!(energy >= -1e-9);
        Ok(QuantumState {
            op,
            energy: energy.max(0.0),
        })
    }

    /// Normalizes the trace and symmetrizes before validating, for states
    /// produced by long channel compositions.
    pub fn renormalized(system: ModeSystem, m: &CMat) -> Result<Self> {
        let tr = linalg::trace(m).re;
        if tr <= 0.0 {
            return Err(Error::InvalidState(format!("trace {tr} not positive")));
        }
        QuantumState::new(DenseOperator::hermitian(system, m.scale(1.0 / tr)))
    }

    pub fn from_vector(system: ModeSystem, psi: &CVec) -> Result<Self> {
        let n = psi.norm();
        if n < 1e-12 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let v = psi.scale(1.0 / n);
        let m = &v * v.adjoint();
        QuantumState::new(DenseOperator::hermitian(system, m))
    }

    pub fn fock(system: ModeSystem, levels: &[usize]) -> Result<Self> {
        QuantumState::from_vector(system, &system.basis_vector(levels))
    }

    pub fn vacuum(system: ModeSystem) -> Result<Self> {
        QuantumState::fock(system, &vec![0; system.n_modes()])
    }

    pub fn op(&self) -> &DenseOperator {
        &self.op
    }

    pub fn matrix(&self) -> &CMat {
        self.op.matrix()
    }

    pub fn system(&self) -> ModeSystem {
        self.op.system()
    }

    /// Cached tr[ρN], dimensionless mean photon number.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// ⟨ψ|ρ|ψ⟩ for a pure reference vector.
    pub fn overlap(&self, psi: &CVec) -> f64 {
        (psi.adjoint() * self.matrix() * psi)[(0, 0)].re
    }
}

fn mean_photon_number(op: &DenseOperator) -> f64 {
    let sys = op.system();
    let m = op.matrix();
    (0..sys.dim())
        .map(|i| {
            let n: usize = sys.digits(i).iter().sum();
            m[(i, i)].re * n as f64
        })
        .sum()
}

/// Truncated annihilation operator for `mode`, lifted to the full system.
pub fn ladder(system: ModeSystem, mode: usize) -> Result<DenseOperator> {
    let a = system.lift(mode, &system.ladder_single())?;
    Ok(DenseOperator::new(system, a))
}

/// (Q, P) for `mode`: Q = (a+a†)/√2, P = -i(a-a†)/√2; both Hermitian.
pub fn quadratures(system: ModeSystem, mode: usize) -> Result<(DenseOperator, DenseOperator)> {
    let a = ladder(system, mode)?.into_matrix();
    let ad = a.adjoint();
    let s = 1.0 / 2.0_f64.sqrt();
    let q = (&a + &ad).scale(s);
    let p = (&a - &ad).scale(s) * c(0.0, -1.0);
    Ok((
        DenseOperator::hermitian(system, q),
        DenseOperator::hermitian(system, p),
    ))
}

/// Total photon number N = Σ_j a_j†a_j, diagonal in the Fock basis.
pub fn number_operator(system: ModeSystem) -> DenseOperator {
    let dim = system.dim();
    let mut n = CMat::zeros(dim, dim);
    for i in 0..dim {
        let total: usize = system.digits(i).iter().sum();
        n[(i, i)] = c(total as f64, 0.0);
    }
    DenseOperator {
        system,
        entries: n,
        hermitian: true,
    }
}

/// Displacement exp(α a† - ᾱ a) on `mode`, built as the exact exponential of
/// the truncated skew-Hermitian generator so it is exactly unitary after
/// truncation. Closed-form matrix elements serve only as test oracles.
pub fn displacement(system: ModeSystem, mode: usize, alpha: Complex64) -> Result<DenseOperator> {
    if !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(Error::invalid("alpha", "must be finite"));
    }
    let a = system.ladder_single();
    let gen = &a.adjoint() * alpha - &a * alpha.conj();
    // G is skew-Hermitian; exp(G) = exp(i·H) with H = -iG Hermitian.
    let h = gen * c(0.0, -1.0);
    let d_single = linalg::unitary_exp(&linalg::hermitize(&h), 1.0);
    let full = system.lift(mode, &d_single)?;
    Ok(DenseOperator::new(system, full))
}

/// Real-vector displacement V_x = e^{i R·x} with R = (Q_0, P_0, Q_1, P_1, ...).
pub fn real_displacement(system: ModeSystem, x: &[f64]) -> Result<DenseOperator> {
    if x.len() != 2 * system.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: 2 * system.n_modes(),
            got: x.len(),
        });
    }
    // e^{i(q_j x_{2j} + p_j x_{2j+1})} factorizes over modes; per mode it is
    // the exponential of a single-mode Hermitian generator.
    let mut out = linalg::identity(system.dim());
    for mode in 0..system.n_modes() {
        let (xq, xp) = (x[2 * mode], x[2 * mode + 1]);
        if xq == 0.0 && xp == 0.0 {
            continue;
        }
        let single_sys = ModeSystem::with_guard_band(1, system.cutoff(), system.guard_band())?;
        let (q, p) = quadratures(single_sys, 0)?;
        let h = q.matrix().scale(xq) + p.matrix().scale(xp);
        let u = linalg::unitary_exp(&h, 1.0);
        out = system.lift(mode, &u)? * out;
    }
    Ok(DenseOperator::new(system, out))
}

/// Partial trace keeping `keep` (any nonempty subset of modes, ascending
/// result order). Trace-preserving; on product inputs returns the kept
/// factor scaled by the trace of the discarded factor.
pub fn partial_trace(op: &DenseOperator, keep: &[usize]) -> Result<DenseOperator> {
    let sys = op.system();
    let n = sys.n_modes();
    if keep.is_empty() {
        return Err(Error::invalid("keep", "must be nonempty"));
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() {
        return Err(Error::invalid("keep", "duplicate modes"));
    }
    if *keep_sorted.last().unwrap() >= n {
        return Err(Error::ModeOutOfRange {
            mode: *keep_sorted.last().unwrap(),
            n_modes: n,
        });
    }
    let discard: Vec<usize> = (0..n).filter(|m| !keep_sorted.contains(m)).collect();
    let d = sys.cutoff();
    let dim_keep = d.pow(keep_sorted.len() as u32);
    let dim_disc = d.pow(discard.len() as u32);

    let m = op.matrix();
    let mut out = CMat::zeros(dim_keep, dim_keep);
    let mut levels_i = vec![0usize; n];
    let mut levels_j = vec![0usize; n];
    for ik in 0..dim_keep {
        let ik_digits = digits_of(ik, d, keep_sorted.len());
        for jk in 0..dim_keep {
            let jk_digits = digits_of(jk, d, keep_sorted.len());
            let mut acc = c(0.0, 0.0);
            for t in 0..dim_disc {
                let t_digits = digits_of(t, d, discard.len());
                for (pos, &mode) in keep_sorted.iter().enumerate() {
                    levels_i[mode] = ik_digits[pos];
                    levels_j[mode] = jk_digits[pos];
                }
                for (pos, &mode) in discard.iter().enumerate() {
                    levels_i[mode] = t_digits[pos];
                    levels_j[mode] = t_digits[pos];
                }
                acc += m[(sys.index(&levels_i), sys.index(&levels_j))];
            }
            out[(ik, jk)] = acc;
        }
    }
    let out_sys = ModeSystem::with_guard_band(keep_sorted.len(), d, sys.guard_band())?;
    Ok(DenseOperator::new(out_sys, out))
}

fn digits_of(index: usize, base: usize, count: usize) -> Vec<usize> {
    let mut rem = index;
    (0..count)
        .map(|_| {
            let k = rem % base;
            rem /= base;
            k
        })
        .collect()
}

/// (trace norm, operator norm) via singular values.
pub fn norms(op: &DenseOperator) -> (f64, f64) {
    let sv = linalg::singular_values(op.matrix());
    (sv.sum(), sv.max())
}

/// Tensor product of two operators on disjoint systems; the left argument
/// occupies the lower (faster) modes.
pub fn tensor(low: &DenseOperator, high: &DenseOperator) -> Result<DenseOperator> {
    let (sl, sh) = (low.system(), high.system());
    if sl.cutoff() != sh.cutoff() {
        return Err(Error::DimensionMismatch {
            expected: sl.cutoff(),
            got: sh.cutoff(),
        });
    }
    let sys = ModeSystem::with_guard_band(
        sl.n_modes() + sh.n_modes(),
        sl.cutoff(),
        sl.guard_band().min(sh.guard_band()),
    )?;
    // Little-endian: the high modes are the slow (left) kron factor.
    Ok(DenseOperator::new(
        sys,
        linalg::kron(high.matrix(), low.matrix()),
    ))
}

/// Coherent state |α⟩ = D(α)|0⟩ on a single-mode system.
pub fn coherent_state(system: ModeSystem, alpha: Complex64) -> Result<QuantumState> {
    if system.n_modes() != 1 {
        return Err(Error::invalid("system", "coherent_state expects one mode"));
    }
    let d = displacement(system, 0, alpha)?;
    let psi = d.matrix().column(0).into_owned();
    QuantumState::from_vector(system, &psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single(d: usize) -> ModeSystem {
        ModeSystem::new(1, d).unwrap()
    }

    #[test]
    fn ladder_matrix_elements() {
        // d = 3: ⟨0|a|1⟩ = 1, ⟨1|a|2⟩ = √2.
        let sys = single(3);
        let a = ladder(sys, 0).unwrap();
        assert_relative_eq!(a.matrix()[(0, 1)].re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(a.matrix()[(1, 2)].re, 2.0_f64.sqrt(), epsilon = 1e-15);
        // a|0⟩ = 0.
        let col0 = a.matrix().column(0);
        assert!(col0.norm() < 1e-15);
    }

    #[test]
    fn ladder_ccr_on_interior() {
        let sys = ModeSystem::with_guard_band(1, 12, 2).unwrap();
        let a = ladder(sys, 0).unwrap().into_matrix();
        let comm = linalg::commutator(&a, &a.adjoint());
        let defect = sys.compress_interior(&(comm - linalg::identity(12)));
        assert!(linalg::operator_norm(&defect) <= 1e-10);
    }

    #[test]
    fn quadrature_elements_and_ccr() {
        let sys = ModeSystem::with_guard_band(1, 12, 2).unwrap();
        let (q, p) = quadratures(sys, 0).unwrap();
        // ⟨0|Q|1⟩ = 1/√2.
        assert_relative_eq!(q.matrix()[(0, 1)].re, 1.0 / 2.0_f64.sqrt(), epsilon = 1e-14);
        // ⟨0|P|0⟩ = 0.
        assert!(p.matrix()[(0, 0)].norm() < 1e-15);
        // Π[Q,P]Π = iΠ.
        let comm = linalg::commutator(q.matrix(), p.matrix());
        let pi = sys.interior_projector();
        let defect = &pi * (comm - linalg::identity(12) * c(0.0, 1.0)) * &pi;
        assert!(linalg::operator_norm(&defect) <= 1e-10);
    }

    #[test]
    fn number_operator_diagonal() {
        let sys = single(4);
        let n = number_operator(sys);
        for k in 0..4 {
            assert_relative_eq!(n.matrix()[(k, k)].re, k as f64, epsilon = 1e-15);
        }
        // Two modes: ⟨1,2|N|1,2⟩ = 3.
        let sys2 = ModeSystem::new(2, 4).unwrap();
        let n2 = number_operator(sys2);
        let idx = sys2.index(&[1, 2]);
        assert_relative_eq!(n2.matrix()[(idx, idx)].re, 3.0, epsilon = 1e-15);
        // N|0,0⟩ = 0.
        assert_relative_eq!(n2.matrix()[(0, 0)].re, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn displacement_identity_and_inverse() {
        let sys = single(10);
        let d0 = displacement(sys, 0, c(0.0, 0.0)).unwrap();
        assert!((d0.matrix() - linalg::identity(10)).norm() < 1e-12);

        let alpha = c(0.7, -0.3);
        let d = displacement(sys, 0, alpha).unwrap();
        let dinv = displacement(sys, 0, -alpha).unwrap();
        let prod = d.matrix() * dinv.matrix();
        assert!(linalg::operator_norm(&(prod - linalg::identity(10))) <= 1e-10);
        assert!(d.unitarity_defect() <= 1e-10);
    }

    #[test]
    fn displacement_vacuum_overlap() {
        // ⟨0|D(1)|0⟩ = e^{-1/2} at d ≥ 24.
        let sys = single(24);
        let d = displacement(sys, 0, c(1.0, 0.0)).unwrap();
        let got = d.matrix()[(0, 0)].re;
        assert_relative_eq!(got, (-0.5_f64).exp(), epsilon = 1e-6);
    }

    #[test]
    fn partial_trace_product_and_bell() {
        let d = 3;
        let sys1 = single(d);
        let rho = QuantumState::fock(sys1, &[1]).unwrap();
        let sigma_m = CMat::from_diagonal(&CVec::from_vec(vec![
            c(0.25, 0.0),
            c(0.25, 0.0),
            c(0.5, 0.0),
        ]));
        let sigma = DenseOperator::hermitian(sys1, sigma_m);
        let prod = tensor(rho.op(), &sigma).unwrap();
        let kept = partial_trace(&prod, &[0]).unwrap();
        assert!((kept.matrix() - rho.matrix()).norm() < 1e-12);
        // Trace preserved.
        assert_relative_eq!(
            linalg::trace(kept.matrix()).re,
            linalg::trace(prod.matrix()).re,
            epsilon = 1e-12
        );

        // (|0,0⟩+|1,1⟩)/√2: marginal = diag(1/2, 1/2, 0).
        let sys2 = ModeSystem::new(2, d).unwrap();
        let psi = (sys2.basis_vector(&[0, 0]) + sys2.basis_vector(&[1, 1])).scale(1.0 / 2.0_f64.sqrt());
        let bell = QuantumState::from_vector(sys2, &psi).unwrap();
        let marg = partial_trace(bell.op(), &[0]).unwrap();
        assert_relative_eq!(marg.matrix()[(0, 0)].re, 0.5, epsilon = 1e-12);
        assert_relative_eq!(marg.matrix()[(1, 1)].re, 0.5, epsilon = 1e-12);
        assert!(marg.matrix()[(2, 2)].norm() < 1e-12);
    }

    #[test]
    fn norm_examples() {
        // ‖[Q, |0⟩⟨0|]‖₁ = √2 at d ≥ 8.
        let sys = single(8);
        let (q, _) = quadratures(sys, 0).unwrap();
        let vac = QuantumState::vacuum(sys).unwrap();
        let comm = linalg::commutator(q.matrix(), vac.matrix());
        let (tn, _) = norms(&DenseOperator::new(sys, comm));
        assert_relative_eq!(tn, 2.0_f64.sqrt(), epsilon = 1e-10);

        let id = DenseOperator::identity(sys);
        let (_, on) = norms(&id);
        assert_relative_eq!(on, 1.0, epsilon = 1e-12);

        // ‖|0⟩⟨0| - |1⟩⟨1|‖₁ = 2.
        let f0 = QuantumState::fock(sys, &[0]).unwrap();
        let f1 = QuantumState::fock(sys, &[1]).unwrap();
        let diff = DenseOperator::new(sys, f0.matrix() - f1.matrix());
        assert_relative_eq!(norms(&diff).0, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn coherent_energy() {
        let sys = single(24);
        let st = coherent_state(sys, c(1.0, 0.0)).unwrap();
        // tr[ρN] = |α|² for a coherent state.
        assert_relative_eq!(st.energy(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn invalid_inputs() {
        let sys = single(4);
        assert!(ladder(sys, 1).is_err());
        assert!(displacement(sys, 0, c(f64::NAN, 0.0)).is_err());
        let op = DenseOperator::identity(sys);
        assert!(partial_trace(&op, &[]).is_err());
        assert!(partial_trace(&op, &[3]).is_err());
    }
}
