//! Quantum channels and their adjoints: the beamsplitter loss channel with
//! arbitrary environment state, thermal states, the Bose Ornstein-Uhlenbeck
//! semigroup, and the smoothing constant κ.

use crate::error::{Error, Result};
use crate::fock::{self, DenseOperator, ModeSystem, QuantumState};
use crate::linalg::{self, c, CMat, CVec};

/// Default trace-preservation gate for constructed channels.
pub const TP_DEFECT_TOLERANCE: f64 = 1e-3;

/// Environment state attached at the beamsplitter's second port.
#[derive(Debug, Clone)]
pub enum EnvironmentSpec {
    Vacuum,
    /// Thermal state ∝ e^{-βN}, β > 0.
    Thermal { beta: f64 },
    Custom(QuantumState),
}

impl EnvironmentSpec {
    /// Spectral decomposition of the environment state at cutoff `d`,
    /// dropping eigenvalues below 1e-12.
    pub fn decompose(&self, d: usize) -> Result<Vec<(f64, CVec)>> {
        let sys = ModeSystem::new(1, d)?;
        match self {
            EnvironmentSpec::Vacuum => Ok(vec![(1.0, sys.basis_vector(&[0]))]),
            EnvironmentSpec::Thermal { beta } => {
                let st = thermal_state(*beta, d)?;
                let diag = st.matrix().diagonal();
                Ok((0..d)
                    .filter(|&k| diag[k].re > 1e-12)
                    .map(|k| (diag[k].re, sys.basis_vector(&[k])))
                    .collect())
            }
            EnvironmentSpec::Custom(state) => {
                if state.matrix().nrows() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: state.matrix().nrows(),
                    });
                }
                let (vals, vecs) = linalg::hermitian_eigen(state.matrix());
                Ok((0..d)
                    .filter(|&k| vals[k] > 1e-12)
                    .map(|k| (vals[k], vecs.column(k).into_owned()))
                    .collect())
            }
        }
    }

    /// The environment density operator at cutoff `d`.
    pub fn state(&self, d: usize) -> Result<QuantumState> {
        match self {
            EnvironmentSpec::Vacuum => QuantumState::vacuum(ModeSystem::new(1, d)?),
            EnvironmentSpec::Thermal { beta } => thermal_state(*beta, d),
            EnvironmentSpec::Custom(state) => {
                if state.matrix().nrows() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: state.matrix().nrows(),
                    });
                }
                Ok(state.clone())
            }
        }
    }
}

/// Anything that acts as a CPTP map on density matrices of a fixed dimension.
///
/// `apply_matrix`/`adjoint_matrix` work on raw matrices so observables and
/// non-normalized operators can be pushed through; `apply` wraps the result
/// as a state after checking the trace drift against the channel's
/// trace-preservation defect gate.
pub trait Channel: Send + Sync {
    fn dim(&self) -> usize;
    fn apply_matrix(&self, rho: &CMat) -> CMat;
    fn adjoint_matrix(&self, x: &CMat) -> CMat;
    fn tp_defect(&self) -> f64;

    fn apply(&self, state: &QuantumState) -> Result<QuantumState> {
        if state.matrix().nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: state.matrix().nrows(),
            });
        }
        let out = self.apply_matrix(state.matrix());
        let tr = linalg::trace(&out).re;
        if (tr - 1.0).abs() > TP_DEFECT_TOLERANCE {
            return Err(Error::QualityGate {
                check: "trace drift under channel application",
                value: (tr - 1.0).abs(),
                limit: TP_DEFECT_TOLERANCE,
            });
        }
        QuantumState::renormalized(state.system(), &out)
    }

    fn adjoint_apply(&self, x: &DenseOperator) -> Result<DenseOperator> {
        if x.matrix().nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.matrix().nrows(),
            });
        }
        Ok(DenseOperator::new(
            x.system(),
            self.adjoint_matrix(x.matrix()),
        ))
    }
}

/// A channel in Kraus form. Completely positive by construction; the
/// trace-preservation defect ‖ΣK†K - I‖∞ is cached at construction.
#[derive(Debug, Clone)]
pub struct ChannelRep {
    kraus: Vec<CMat>,
    dim: usize,
    tp_defect: f64,
}

impl ChannelRep {
    pub fn from_kraus(kraus: Vec<CMat>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::invalid("kraus", "empty Kraus set"));
        }
        let dim = kraus[0].ncols();
        for k in &kraus {
            if k.ncols() != dim || k.nrows() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: k.ncols(),
                });
            }
        }
        let mut sum = CMat::zeros(dim, dim);
        for k in &kraus {
            sum += k.adjoint() * k;
        }
        let tp_defect = linalg::operator_norm(&(sum - linalg::identity(dim)));
        Ok(ChannelRep {
            kraus,
            dim,
            tp_defect,
        })
    }

    /// From Kraus, enforcing the trace-preservation gate.
    pub fn from_kraus_gated(kraus: Vec<CMat>, tol: f64) -> Result<Self> {
        let rep = Self::from_kraus(kraus)?;
        if rep.tp_defect > tol {
            return Err(Error::QualityGate {
                check: "tp_defect",
                value: rep.tp_defect,
                limit: tol,
            });
        }
        Ok(rep)
    }

    pub fn identity(dim: usize) -> Self {
        ChannelRep {
            kraus: vec![linalg::identity(dim)],
            dim,
            tp_defect: 0.0,
        }
    }

    /// Stinespring extraction: Kraus operators K_{k,m} = √p_m (I⊗⟨k|) U (I⊗|e_m⟩)
    /// for an environment σ_E = Σ_m p_m |e_m⟩⟨e_m| on the second (slow) mode.
    /// Kraus terms with negligible Frobenius weight are dropped.
    pub fn from_stinespring(
        u: &CMat,
        env: &[(f64, CVec)],
        sys_dim: usize,
        env_dim: usize,
    ) -> Result<Self> {
        if u.nrows() != sys_dim * env_dim {
            return Err(Error::DimensionMismatch {
                expected: sys_dim * env_dim,
                got: u.nrows(),
            });
        }
        let mut kraus = Vec::new();
        for (p, e) in env {
            // B = U (I ⊗ |e⟩): column i is U applied to |i⟩⊗|e⟩.
            let mut b = CMat::zeros(sys_dim * env_dim, sys_dim);
            for i in 0..sys_dim {
                let mut col = CVec::zeros(sys_dim * env_dim);
                for (be, &amp) in e.iter().enumerate() {
                    if amp.norm_sqr() > 0.0 {
                        // little-endian: global = i + sys_dim * env_level
                        col += u.column(i + sys_dim * be).scale(1.0) * amp;
                    }
                }
                b.set_column(i, &col);
            }
            let sp = p.sqrt();
            for k in 0..env_dim {
                let mut km = CMat::zeros(sys_dim, sys_dim);
                for i in 0..sys_dim {
                    for ii in 0..sys_dim {
                        km[(ii, i)] = b[(ii + sys_dim * k, i)] * sp;
                    }
                }
                if km.norm_squared() > 1e-16 {
                    kraus.push(km);
                }
            }
        }
        Self::from_kraus(kraus)
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    /// Tensor lift of a channel acting on one mode of a larger system:
    /// every Kraus operator is lifted as I ⊗ K ⊗ I per the little-endian
    /// mode order of `system`.
    pub fn lift(&self, system: ModeSystem, mode: usize) -> Result<ChannelRep> {
        let kraus = self
            .kraus
            .iter()
            .map(|k| system.lift(mode, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(ChannelRep {
            kraus,
            dim: system.dim(),
            tp_defect: self.tp_defect,
        })
    }
}

impl Channel for ChannelRep {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_matrix(&self, rho: &CMat) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for k in &self.kraus {
            out += k * rho * k.adjoint();
        }
        out
    }

    fn adjoint_matrix(&self, x: &CMat) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for k in &self.kraus {
            out += k.adjoint() * x * k;
        }
        out
    }

    fn tp_defect(&self) -> f64 {
        self.tp_defect
    }
}

/// Product of identical or distinct single-mode channels, one per mode,
/// applied by lifting each factor's Kraus operators on the fly.
pub struct ProductChannel {
    factors: Vec<ChannelRep>,
    system: ModeSystem,
}

impl ProductChannel {
    pub fn new(system: ModeSystem, factors: Vec<ChannelRep>) -> Result<Self> {
        if factors.len() != system.n_modes() {
            return Err(Error::DimensionMismatch {
                expected: system.n_modes(),
                got: factors.len(),
            });
        }
        for f in &factors {
            if f.dim() != system.cutoff() {
                return Err(Error::DimensionMismatch {
                    expected: system.cutoff(),
                    got: f.dim(),
                });
            }
        }
        Ok(ProductChannel { factors, system })
    }

    pub fn uniform(system: ModeSystem, factor: ChannelRep) -> Result<Self> {
        let factors = vec![factor; system.n_modes()];
        Self::new(system, factors)
    }
}

impl Channel for ProductChannel {
    fn dim(&self) -> usize {
        self.system.dim()
    }

    fn apply_matrix(&self, rho: &CMat) -> CMat {
        let mut out = rho.clone();
        for (mode, f) in self.factors.iter().enumerate() {
            let lifted = f.lift(self.system, mode).expect("validated at construction");
            out = lifted.apply_matrix(&out);
        }
        out
    }

    fn adjoint_matrix(&self, x: &CMat) -> CMat {
        let mut out = x.clone();
        for (mode, f) in self.factors.iter().enumerate().rev() {
            let lifted = f.lift(self.system, mode).expect("validated at construction");
            out = lifted.adjoint_matrix(&out);
        }
        out
    }

    fn tp_defect(&self) -> f64 {
        self.factors.iter().map(|f| f.tp_defect()).sum()
    }
}

/// Composition: `stages[0]` acts first in the Schrödinger picture.
pub struct ComposedChannel<'a> {
    stages: Vec<&'a dyn Channel>,
    dim: usize,
}

impl<'a> ComposedChannel<'a> {
    pub fn new(stages: Vec<&'a dyn Channel>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::invalid("stages", "empty composition"));
        }
        let dim = stages[0].dim();
        for s in &stages {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.dim(),
                });
            }
        }
        Ok(ComposedChannel { stages, dim })
    }
}

impl Channel for ComposedChannel<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_matrix(&self, rho: &CMat) -> CMat {
        let mut out = rho.clone();
        for s in &self.stages {
            out = s.apply_matrix(&out);
        }
        out
    }

    fn adjoint_matrix(&self, x: &CMat) -> CMat {
        let mut out = x.clone();
        for s in self.stages.iter().rev() {
            out = s.adjoint_matrix(&out);
        }
        out
    }

    fn tp_defect(&self) -> f64 {
        self.stages.iter().map(|s| s.tp_defect()).sum()
    }
}

/// Beamsplitter unitary U_λ = exp((a†b - b†a) arccos(√λ)) on a two-mode
/// system (mode 0 = a, mode 1 = b). The generator conserves total photon
/// number, so the exponential is built sector by sector, which keeps the
/// result exactly unitary and cheap at large cutoffs.
pub fn beamsplitter_unitary(lambda: f64, system: ModeSystem) -> Result<DenseOperator> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid("lambda", format!("{lambda} outside [0,1]")));
    }
    if system.n_modes() != 2 {
        return Err(Error::invalid("system", "beamsplitter needs two modes"));
    }
    let d = system.cutoff();
    let theta = lambda.sqrt().acos();
    let mut u = CMat::zeros(d * d, d * d);
    for s in 0..=(2 * (d - 1)) {
        let k_min = s.saturating_sub(d - 1);
        let k_max = s.min(d - 1);
        let size = k_max - k_min + 1;
        // M = -i(a†b - b†a) restricted to the total-photon-number-s sector.
        let mut m = CMat::zeros(size, size);
        for (row, k) in (k_min..=k_max).enumerate() {
            if k + 1 <= k_max {
                let amp = (((k + 1) * (s - k)) as f64).sqrt();
                m[(row + 1, row)] = c(0.0, -amp);
                m[(row, row + 1)] = c(0.0, amp);
            }
        }
        let us = linalg::unitary_exp(&m, theta);
        for (row, ka) in (k_min..=k_max).enumerate() {
            for (col, kb) in (k_min..=k_max).enumerate() {
                let gi = ka + d * (s - ka);
                let gj = kb + d * (s - kb);
                u[(gi, gj)] = us[(row, col)];
            }
        }
    }
    Ok(DenseOperator::new(system, u))
}

/// One-mode beamsplitter loss channel of transmissivity λ with environment
/// `env`, via Stinespring extraction at matching environment cutoff.
pub fn loss_channel(lambda: f64, env: &EnvironmentSpec, d: usize) -> Result<ChannelRep> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid("lambda", format!("{lambda} outside [0,1]")));
    }
    if lambda == 1.0 {
        return Ok(ChannelRep::identity(d));
    }
    let sys2 = ModeSystem::new(2, d)?;
    let u = beamsplitter_unitary(lambda, sys2)?;
    let env_decomp = env.decompose(d)?;
    let rep = ChannelRep::from_stinespring(u.matrix(), &env_decomp, d, d)?;
    if rep.tp_defect() > TP_DEFECT_TOLERANCE {
        return Err(Error::QualityGate {
            check: "tp_defect",
            value: rep.tp_defect(),
            limit: TP_DEFECT_TOLERANCE,
        });
    }
    Ok(rep)
}

/// Thermal state σ_β ∝ e^{-βN} at cutoff d, normalized after truncation.
pub fn thermal_state(beta: f64, d: usize) -> Result<QuantumState> {
    if beta <= 0.0 || !beta.is_finite() {
        return Err(Error::invalid("beta", "must be positive and finite"));
    }
    let sys = ModeSystem::new(1, d)?;
    let weights: Vec<f64> = (0..d).map(|n| (-beta * n as f64).exp()).collect();
    let z: f64 = weights.iter().sum();
    let m = CMat::from_diagonal(&CVec::from_iterator(
        d,
        weights.iter().map(|&w| c(w / z, 0.0)),
    ));
    QuantumState::new(DenseOperator::hermitian(sys, m))
}

/// One step of the Bose Ornstein-Uhlenbeck semigroup, realized as the loss
/// channel with λ = e^{-2 sinh(β/2) t} and thermal environment σ_β.
pub fn ou_step(beta: f64, t: f64, d: usize) -> Result<ChannelRep> {
    if t < 0.0 {
        return Err(Error::invalid("t", "must be nonnegative"));
    }
    if beta <= 0.0 {
        return Err(Error::invalid("beta", "must be positive"));
    }
    let lambda = (-2.0 * (beta / 2.0).sinh() * t).exp();
    loss_channel(lambda, &EnvironmentSpec::Thermal { beta }, d)
}

/// Independent oracle for `ou_step`: integrates the Lindblad generator
/// dρ/dt = e^{β/2} D[a]ρ + e^{-β/2} D[a†]ρ with classical RK4 at fixed
/// step t/steps. Rejects the result if the trace drifts by more than 1e-6.
pub fn ou_lindblad_apply(beta: f64, t: f64, rho: &QuantumState, steps: usize) -> Result<QuantumState> {
    if beta <= 0.0 || t < 0.0 {
        return Err(Error::invalid("beta/t", "need beta > 0, t >= 0"));
    }
    let sys = rho.system();
    let a = fock::ladder(sys, 0)?.into_matrix();
    let ad = a.adjoint();
    let ada = &ad * &a;
    let aad = &a * &ad;
    let (gd, gu) = ((beta / 2.0).exp(), (-beta / 2.0).exp());
    let rhs = |r: &CMat| -> CMat {
        let down = &a * r * &ad - (&ada * r + r * &ada).scale(0.5);
        let up = &ad * r * &a - (&aad * r + r * &aad).scale(0.5);
        down.scale(gd) + up.scale(gu)
    };
    let n = steps.max(1);
    let h = t / n as f64;
    let mut r = rho.matrix().clone();
    for _ in 0..n {
        let k1 = rhs(&r);
        let k2 = rhs(&(&r + k1.scale(h / 2.0)));
        let k3 = rhs(&(&r + k2.scale(h / 2.0)));
        let k4 = rhs(&(&r + k3.scale(h)));
        r += (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0);
    }
    let drift = (linalg::trace(&r).re - 1.0).abs();
    if drift > 1e-6 {
        return Err(Error::QualityGate {
            check: "OU integrator trace drift",
            value: drift,
            limit: 1e-6,
        });
    }
    QuantumState::renormalized(sys, &r)
}

/// Smoothing constant κ = √(λ/(1-λ)) · max{‖[Q,σ_E]‖₁, ‖[P,σ_E]‖₁},
/// evaluated with truncated commutator trace norms at cutoff d.
pub fn kappa(lambda: f64, env: &EnvironmentSpec, d: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) || lambda == 0.0 || lambda == 1.0 {
        return Err(Error::invalid("lambda", "must lie strictly inside (0,1)"));
    }
    let sys = ModeSystem::new(1, d)?;
    let sigma = env.state(d)?;
    let (q, p) = fock::quadratures(sys, 0)?;
    let cq = linalg::trace_norm(&linalg::commutator(q.matrix(), sigma.matrix()));
    let cp = linalg::trace_norm(&linalg::commutator(p.matrix(), sigma.matrix()));
    Ok((lambda / (1.0 - lambda)).sqrt() * cq.max(cp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_relative_eq;

    #[test]
    fn beamsplitter_endpoints_and_interior_relations() {
        // The two-mode relation U†aU = √λ a + √(1-λ) b needs every total-photon
        // sector hit by interior indices to be complete: g ≥ (d-1)/2.
        let sys = ModeSystem::with_guard_band(2, 16, 8).unwrap();
        // λ = 1 → identity.
        let u1 = beamsplitter_unitary(1.0, sys).unwrap();
        assert!((u1.matrix() - linalg::identity(256)).norm() < 1e-12);

        let a = fock::ladder(sys, 0).unwrap().into_matrix();
        let b = fock::ladder(sys, 1).unwrap().into_matrix();
        let pi = sys.interior_projector();

        // λ = 0 → U†aU = b on the interior.
        let u0 = beamsplitter_unitary(0.0, sys).unwrap();
        let conj = u0.matrix().adjoint() * &a * u0.matrix();
        let defect = &pi * (&conj - &b) * &pi;
        assert!(linalg::operator_norm(&defect) <= 1e-8);

        // λ = 0.5 → U†aU = (a+b)/√2 on the interior.
        let uh = beamsplitter_unitary(0.5, sys).unwrap();
        assert!(uh.unitarity_defect() <= 1e-10);
        let conj = uh.matrix().adjoint() * &a * uh.matrix();
        let target = (&a + &b).scale(1.0 / 2.0_f64.sqrt());
        let defect = &pi * (&conj - target) * &pi;
        assert!(linalg::operator_norm(&defect) <= 1e-8);
    }

    #[test]
    fn loss_identity_at_full_transmissivity() {
        let ch = loss_channel(1.0, &EnvironmentSpec::Vacuum, 12).unwrap();
        let sys = ModeSystem::new(1, 12).unwrap();
        let mut r = rng::stream(11, 0);
        let rho = rng::random_state(sys, &mut r, false);
        let out = ch.apply(&rho).unwrap();
        assert!((out.matrix() - rho.matrix()).norm() < 1e-10);
    }

    #[test]
    fn loss_half_on_single_photon() {
        // λ = 0.5, vacuum env, |1⟩⟨1| → diag(0.5, 0.5, 0, ...).
        let d = 16;
        let ch = loss_channel(0.5, &EnvironmentSpec::Vacuum, d).unwrap();
        let sys = ModeSystem::new(1, d).unwrap();
        let rho = QuantumState::fock(sys, &[1]).unwrap();
        let out = ch.apply(&rho).unwrap();
        assert_relative_eq!(out.matrix()[(0, 0)].re, 0.5, epsilon = 1e-8);
        assert_relative_eq!(out.matrix()[(1, 1)].re, 0.5, epsilon = 1e-8);
        assert!(out.matrix()[(2, 2)].norm() < 1e-8);
    }

    #[test]
    fn loss_kraus_match_amplitude_damping_oracle() {
        // Vacuum-environment oracle: K_k = Σ_n √C(n,k) √λ^{n-k} √(1-λ)^k |n-k⟩⟨n|.
        let (d, lambda) = (14, 0.37);
        let ch = loss_channel(lambda, &EnvironmentSpec::Vacuum, d).unwrap();
        let sys = ModeSystem::new(1, d).unwrap();
        let mut r = rng::stream(12, 3);
        let rho = rng::random_state(sys, &mut r, true);

        let mut oracle = CMat::zeros(d, d);
        for k in 0..d {
            let mut kk = CMat::zeros(d, d);
            for n in k..d {
                let mut binom = 1.0f64;
                for j in 0..k {
                    binom *= (n - j) as f64 / (j + 1) as f64;
                }
                let amp = binom.sqrt()
                    * lambda.powf((n - k) as f64 / 2.0)
                    * (1.0 - lambda).powf(k as f64 / 2.0);
                kk[(n - k, n)] = c(amp, 0.0);
            }
            oracle += &kk * rho.matrix() * kk.adjoint();
        }
        let got = ch.apply_matrix(rho.matrix());
        assert!(
            (&got - &oracle).norm() < 1e-8,
            "disagreement {}",
            (&got - &oracle).norm()
        );
    }

    #[test]
    fn loss_maps_coherent_to_attenuated_coherent() {
        // λ = 0.64: coherent |1⟩ → coherent |0.8⟩ with fidelity ≥ 1 - 1e-6 at d = 24.
        let d = 24;
        let sys = ModeSystem::new(1, d).unwrap();
        let ch = loss_channel(0.64, &EnvironmentSpec::Vacuum, d).unwrap();
        let input = fock::coherent_state(sys, c(1.0, 0.0)).unwrap();
        let out = ch.apply(&input).unwrap();
        let target = fock::coherent_state(sys, c(0.8, 0.0)).unwrap();
        let psi = fock::displacement(sys, 0, c(0.8, 0.0))
            .unwrap()
            .matrix()
            .column(0)
            .into_owned();
        let fidelity = out.overlap(&psi);
        assert!(fidelity >= 1.0 - 1e-6, "fidelity {fidelity}");
        let _ = target;
    }

    #[test]
    fn adjoint_duality_and_unitality() {
        let d = 12;
        let ch = loss_channel(0.3, &EnvironmentSpec::Vacuum, d).unwrap();
        let sys = ModeSystem::new(1, d).unwrap();
        let mut worst = 0.0f64;
        for trial in 0..50 {
            let mut r = rng::stream(13, trial);
            let rho = rng::random_state(sys, &mut r, false);
            let x = rng::gue(&mut r, d);
            let lhs = linalg::trace(&(&x * ch.apply_matrix(rho.matrix()))).re;
            let rhs = linalg::trace(&(ch.adjoint_matrix(&x) * rho.matrix())).re;
            worst = worst.max((lhs - rhs).abs());
        }
        assert!(worst <= 1e-10, "duality deviation {worst}");

        // Identity channel adjoint is the identity map.
        let idch = ChannelRep::identity(d);
        let x = rng::gue(&mut rng::stream(13, 99), d);
        assert!((idch.adjoint_matrix(&x) - &x).norm() < 1e-12);

        // Unitality up to tp_defect: N†(I) = I.
        let ui = ch.adjoint_matrix(&linalg::identity(d));
        let defect = linalg::operator_norm(&(ui - linalg::identity(d)));
        assert!(defect <= ch.tp_defect() + 1e-10);
    }

    #[test]
    fn thermal_state_properties() {
        // Ground-state limit.
        let cold = thermal_state(50.0, 20).unwrap();
        assert!((cold.matrix()[(0, 0)].re - 1.0).abs() < 1e-12);

        // β = ln 2, d = 40: energy = 1/(e^β - 1) = 1.
        let st = thermal_state(2.0f64.ln(), 40).unwrap();
        assert_relative_eq!(st.energy(), 1.0, epsilon = 1e-6);

        // Purity (1-q)²/(1-q²), q = e^{-β}.
        let q = 0.5f64;
        let purity = linalg::trace(&(st.matrix() * st.matrix())).re;
        assert_relative_eq!(purity, (1.0 - q).powi(2) / (1.0 - q * q), epsilon = 1e-6);

        assert!(thermal_state(0.0, 10).is_err());
        assert!(thermal_state(-1.0, 10).is_err());
    }

    #[test]
    fn ou_step_endpoints_and_fixed_point() {
        // t = 0 → identity channel.
        let ch0 = ou_step(1.0, 0.0, 10).unwrap();
        assert_eq!(ch0.kraus().len(), 1);

        // σ_β is a fixed point (interior-supported check at d = 30).
        let beta = 1.0;
        let d = 30;
        let ch = ou_step(beta, 0.4, d).unwrap();
        let sigma = thermal_state(beta, d).unwrap();
        let out = ch.apply_matrix(sigma.matrix());
        let diff = linalg::trace_norm(&(out - sigma.matrix()));
        assert!(diff <= 1e-6, "fixed point drift {diff}");
    }

    #[test]
    fn ou_step_matches_lindblad_integrator() {
        // Two independent implementations agree in trace norm.
        let beta = 2.0 * 1.0f64.asinh();
        let (t, d) = (0.5, 24);
        let sys = ModeSystem::new(1, d).unwrap();
        let ch = ou_step(beta, t, d).unwrap();
        let mut worst = 0.0f64;
        for trial in 0..3 {
            let mut r = rng::stream(14, trial);
            let rho = rng::random_state(sys, &mut r, true);
            let via_channel = ch.apply(&rho).unwrap();
            let via_lindblad = ou_lindblad_apply(beta, t, &rho, 200).unwrap();
            let dist = linalg::trace_norm(&(via_channel.matrix() - via_lindblad.matrix()));
            worst = worst.max(dist);
        }
        assert!(worst <= 1e-3, "OU route disagreement {worst}");
    }

    #[test]
    fn kappa_values() {
        // Vacuum: ‖[Q, |0⟩⟨0|]‖₁ = √2, so κ(0.5) = √2, κ(0.1) = √2/3.
        let k_half = kappa(0.5, &EnvironmentSpec::Vacuum, 16).unwrap();
        assert_relative_eq!(k_half, 2.0_f64.sqrt(), epsilon = 1e-9);
        let k_tenth = kappa(0.1, &EnvironmentSpec::Vacuum, 16).unwrap();
        assert_relative_eq!(k_tenth, 2.0_f64.sqrt() / 3.0, epsilon = 1e-9);
        assert!(kappa(0.0, &EnvironmentSpec::Vacuum, 16).is_err());
        assert!(kappa(1.0, &EnvironmentSpec::Vacuum, 16).is_err());

        // Q↔P symmetry of vacuum and thermal environments.
        for env in [
            EnvironmentSpec::Vacuum,
            EnvironmentSpec::Thermal { beta: 0.7 },
        ] {
            let sys = ModeSystem::new(1, 16).unwrap();
            let sigma = env.state(16).unwrap();
            let (q, p) = fock::quadratures(sys, 0).unwrap();
            let cq = linalg::trace_norm(&linalg::commutator(q.matrix(), sigma.matrix()));
            let cp = linalg::trace_norm(&linalg::commutator(p.matrix(), sigma.matrix()));
            assert!((cq - cp).abs() <= 1e-10);
        }
    }

    #[test]
    fn composition_of_losses_multiplies_transmissivities() {
        let d = 14;
        let sys = ModeSystem::new(1, d).unwrap();
        let c1 = loss_channel(0.6, &EnvironmentSpec::Vacuum, d).unwrap();
        let c2 = loss_channel(0.7, &EnvironmentSpec::Vacuum, d).unwrap();
        let c12 = loss_channel(0.42, &EnvironmentSpec::Vacuum, d).unwrap();
        let mut worst = 0.0f64;
        for trial in 0..20 {
            let mut r = rng::stream(15, trial);
            let rho = rng::random_state(sys, &mut r, true);
            let seq = c2.apply_matrix(&c1.apply_matrix(rho.matrix()));
            let direct = c12.apply_matrix(rho.matrix());
            worst = worst.max(linalg::trace_norm(&(seq - direct)));
        }
        assert!(worst <= 1e-6, "composition mismatch {worst}");
    }

    #[test]
    fn lambda_out_of_range_rejected() {
        assert!(beamsplitter_unitary(1.2, ModeSystem::new(2, 8).unwrap()).is_err());
        assert!(loss_channel(-0.1, &EnvironmentSpec::Vacuum, 8).is_err());
    }
}
