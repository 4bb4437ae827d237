//! Exact pure-state evolution with ħ = 1.
//!
//! Three engines share the bit convention of [`crate::model`]:
//!
//! * branching: closed form for `H = σ^z_0 ⊗ Σ_i B_i σ^z_i` acting on a
//!   product state, giving `α_0|0⟩⊗|𝔬_i(t)⟩ + β_0|1⟩⊗|𝔩_i(t)⟩` with
//!   `|𝔬_i(t)⟩ = α_i e^{-iB_i t}|0⟩ + β_i e^{iB_i t}|1⟩` and
//!   `|𝔩_i(t)⟩ = α_i e^{iB_i t}|0⟩ + β_i e^{-iB_i t}|1⟩`;
//! * diagonal: per-basis-state phases for Hamiltonians built from `σ^z`
//!   strings only;
//! * dense: `exp(-iHt)` through a Hermitian eigendecomposition computed once
//!   and reused for any number of times.

use std::f64::consts::TAU;

use faer::{c64, Mat, Side};

use crate::error::{invalid, Error, Result};
use crate::model::{self, hamiltonian_matrix, Axis, ModelInstance};
use crate::rng::SeededRng;

/// Largest qubit count handled by the diagonal engine.
pub const DIAGONAL_QUBIT_CAP: usize = 26;

const NORM_TOL: f64 = 1e-9;
const SITE_NORM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: Vec<c64>,
}

impl PureState {
    pub fn new(n_qubits: usize, amplitudes: Vec<c64>) -> Result<Self> {
        if amplitudes.len() != 1usize << n_qubits {
            return Err(Error::LengthMismatch {
                expected: 1 << n_qubits,
                got: amplitudes.len(),
            });
        }
        let state = Self {
            n_qubits,
            amplitudes,
        };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(state)
    }

    /// Tensor product of single-qubit states, site 0 least significant.
    pub fn product(coeffs: &ProductCoeffs) -> Self {
        let sites: Vec<[c64; 2]> = coeffs.sites.iter().map(|&(a, b)| [a, b]).collect();
        Self {
            n_qubits: sites.len(),
            amplitudes: kron_sites(&sites),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[c64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// `|v_0⟩ ⊗ ... ⊗ |v_{n-1}⟩` with `v_0` on the least significant bit.
fn kron_sites(sites: &[[c64; 2]]) -> Vec<c64> {
    let mut out = Vec::with_capacity(1 << sites.len());
    out.push(c64::new(1.0, 0.0));
    for v in sites {
        let len = out.len();
        out.extend_from_within(..);
        for k in 0..len {
            let base = out[k];
            out[k] = base * v[0];
            out[k + len] = base * v[1];
        }
    }
    out
}

/// Largest amplitude difference after rotating `b` onto the global phase of
/// `a`, fixed by the largest-magnitude amplitude of `a`.
pub fn phase_aligned_distance(a: &PureState, b: &PureState) -> f64 {
    assert_eq!(a.amplitudes.len(), b.amplitudes.len());
    let (k, _) = a
        .amplitudes
        .iter()
        .enumerate()
        .fold((0, -1.0), |best, (k, z)| {
            if z.norm() > best.1 {
                (k, z.norm())
            } else {
                best
            }
        });
    let ratio = a.amplitudes[k] * b.amplitudes[k].conj();
    let phase = if ratio.norm() > 0.0 {
        ratio / ratio.norm()
    } else {
        c64::new(1.0, 0.0)
    };
    a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| (x - y * phase).norm())
        .fold(0.0, f64::max)
}

/// Per-qubit coefficients `(α_i, β_i)` of a product state, `i = 0..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductCoeffs {
    sites: Vec<(c64, c64)>,
}

impl ProductCoeffs {
    pub fn new(sites: Vec<(c64, c64)>) -> Result<Self> {
        if sites.is_empty() {
            return invalid("a product state needs at least one qubit");
        }
        for (k, (a, b)) in sites.iter().enumerate() {
            let n = a.norm_sqr() + b.norm_sqr();
            if (n - 1.0).abs() > SITE_NORM_TOL {
                return invalid(format!("site {k} has |α|²+|β|² = {n}"));
            }
        }
        Ok(Self { sites })
    }

    pub fn sites(&self) -> &[(c64, c64)] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

/// Random product state: per qubit, `|α|²` uniform on [0, 1) and the phases
/// of `α` and `β` independent and uniform on [0, 2π), drawn in that order.
pub fn random_product_state(n_qubits: usize, seed: u64) -> Result<ProductCoeffs> {
    if n_qubits == 0 {
        return invalid("n_qubits must be at least 1");
    }
    let mut rng = SeededRng::new(seed);
    let sites = (0..n_qubits)
        .map(|_| {
            let u = rng.uniform01();
            let pa = TAU * rng.uniform01();
            let pb = TAU * rng.uniform01();
            (
                c64::from_polar(u.sqrt(), pa),
                c64::from_polar((1.0 - u).sqrt(), pb),
            )
        })
        .collect();
    Ok(ProductCoeffs { sites })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchSite {
    pub alpha: c64,
    pub beta: c64,
    /// System–site coupling `B_i`.
    pub field: f64,
}

/// Singly branching state of the system and `N` environment qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchingState {
    pub alpha0: c64,
    pub beta0: c64,
    pub sites: Vec<BranchSite>,
    pub time: f64,
}

impl BranchingState {
    pub fn n_env(&self) -> usize {
        self.sites.len()
    }

    pub fn alpha0_sq(&self) -> f64 {
        self.alpha0.norm_sqr()
    }

    fn site(&self, i: usize) -> &BranchSite {
        assert!(
            i >= 1 && i <= self.sites.len(),
            "environment site {i} out of range"
        );
        &self.sites[i - 1]
    }

    /// `|𝔬_i(t)⟩`, the record of site `i` (1-based) in the system-|0⟩ branch.
    pub fn branch_zero(&self, i: usize) -> [c64; 2] {
        let s = self.site(i);
        let ph = c64::from_polar(1.0, -s.field * self.time);
        [s.alpha * ph, s.beta * ph.conj()]
    }

    /// `|𝔩_i(t)⟩`, the record of site `i` in the system-|1⟩ branch.
    pub fn branch_one(&self, i: usize) -> [c64; 2] {
        let s = self.site(i);
        let ph = c64::from_polar(1.0, s.field * self.time);
        [s.alpha * ph, s.beta * ph.conj()]
    }

    /// `Γ_i = ⟨𝔩_i|𝔬_i⟩ = |α_i|² e^{-2iB_i t} + |β_i|² e^{2iB_i t}`.
    pub fn site_overlap(&self, i: usize) -> c64 {
        let o = self.branch_zero(i);
        let l = self.branch_one(i);
        l[0].conj() * o[0] + l[1].conj() * o[1]
    }
}

pub fn evolve_branching(init: &ProductCoeffs, fields: &[f64], t: f64) -> Result<BranchingState> {
    if init.len() != fields.len() + 1 {
        return Err(Error::LengthMismatch {
            expected: fields.len() + 1,
            got: init.len(),
        });
    }
    if !(t.is_finite() && t >= 0.0) {
        return invalid(format!("time must be finite and >= 0, got {t}"));
    }
    let (alpha0, beta0) = init.sites[0];
    let sites = init.sites[1..]
        .iter()
        .zip(fields)
        .map(|(&(alpha, beta), &field)| BranchSite { alpha, beta, field })
        .collect();
    Ok(BranchingState {
        alpha0,
        beta0,
        sites,
        time: t,
    })
}

pub fn branching_to_dense(bs: &BranchingState) -> PureState {
    let n = bs.n_env();
    let zero: Vec<[c64; 2]> = (1..=n).map(|i| bs.branch_zero(i)).collect();
    let one: Vec<[c64; 2]> = (1..=n).map(|i| bs.branch_one(i)).collect();
    let e0 = kron_sites(&zero);
    let e1 = kron_sites(&one);
    let mut amplitudes = vec![c64::new(0.0, 0.0); 2 << n];
    for k in 0..e0.len() {
        amplitudes[k << 1] = bs.alpha0 * e0[k];
        amplitudes[(k << 1) | 1] = bs.beta0 * e1[k];
    }
    PureState {
        n_qubits: n + 1,
        amplitudes,
    }
}

fn check_input(instance: &ModelInstance, psi0: &PureState) -> Result<()> {
    if psi0.n_qubits != instance.n_qubits() {
        return Err(Error::LengthMismatch {
            expected: instance.n_qubits(),
            got: psi0.n_qubits,
        });
    }
    let norm = psi0.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(norm));
    }
    Ok(())
}

/// Eigendecomposition `H = V diag(λ) V†`, reusable for many evolution times.
pub struct SpectralPropagator {
    n_qubits: usize,
    energies: Vec<f64>,
    vectors: Mat<c64>,
}

impl SpectralPropagator {
    pub fn new(instance: &ModelInstance) -> Result<Self> {
        let h = hamiltonian_matrix(instance)?;
        let evd = h
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::LinAlg(format!("eigendecomposition failed: {e:?}")))?;
        let energies = evd.S().column_vector().iter().map(|z| z.re).collect();
        Ok(Self {
            n_qubits: instance.n_qubits(),
            energies,
            vectors: evd.U().to_owned(),
        })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn evolve(&self, psi0: &PureState, t: f64) -> Result<PureState> {
        if psi0.n_qubits != self.n_qubits {
            return Err(Error::LengthMismatch {
                expected: self.n_qubits,
                got: psi0.n_qubits,
            });
        }
        let norm = psi0.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        let v = &self.vectors;
        let dim = self.energies.len();
        // c = V† ψ0, then ψ(t) = V e^{-iλt} c
        let mut coeffs = vec![c64::new(0.0, 0.0); dim];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let col = v.col(k);
            let mut acc = c64::new(0.0, 0.0);
            for (r, a) in psi0.amplitudes.iter().enumerate() {
                acc += col[r].conj() * a;
            }
            *c = acc * c64::from_polar(1.0, -self.energies[k] * t);
        }
        let mut amplitudes = vec![c64::new(0.0, 0.0); dim];
        for (k, c) in coeffs.iter().enumerate() {
            let col = v.col(k);
            for (r, out) in amplitudes.iter_mut().enumerate() {
                *out += col[r] * c;
            }
        }
        Ok(PureState {
            n_qubits: self.n_qubits,
            amplitudes,
        })
    }
}

pub fn evolve_dense(instance: &ModelInstance, psi0: &PureState, t: f64) -> Result<PureState> {
    check_input(instance, psi0)?;
    SpectralPropagator::new(instance)?.evolve(psi0, t)
}

/// Basis-state energies of a Hamiltonian made of `σ^z` strings.
pub struct DiagonalPropagator {
    n_qubits: usize,
    energies: Vec<f64>,
}

impl DiagonalPropagator {
    pub fn new(instance: &ModelInstance) -> Result<Self> {
        if !instance.is_diagonal() {
            return Err(Error::NonDiagonal(
                "instance has x or y couplings or fields".into(),
            ));
        }
        let m = instance.n_qubits();
        model::check_qubit_cap(m, DIAGONAL_QUBIT_CAP)?;

        let zz = |i: usize, j: usize| instance.coupling(i, j, Axis::Z, Axis::Z);
        let hz: Vec<f64> = (0..m).map(|k| instance.field(k).z).collect();
        // all-zeros state has every spin +1
        let mut e0 = hz.iter().sum::<f64>();
        for i in 0..m {
            for j in i + 1..m {
                e0 += zz(i, j);
            }
        }
        let mut energies = vec![0.0; 1 << m];
        energies[0] = e0;
        // Setting bit k on a state with only lower bits flips spin k:
        // E(b | 2^k) = E(b) - 2 (h_k + Σ_{j<k} J_jk s_j(b) + Σ_{j>k} J_kj).
        for (k, &h) in hz.iter().enumerate() {
            let upper: f64 = (k + 1..m).map(|j| zz(k, j)).sum();
            let lower: Vec<f64> = (0..k).map(|j| zz(j, k)).collect();
            let half = 1usize << k;
            for b in 0..half {
                let mut local = h + upper;
                for (j, w) in lower.iter().enumerate() {
                    local += if (b >> j) & 1 == 0 { *w } else { -*w };
                }
                energies[b | half] = energies[b] - 2.0 * local;
            }
        }
        Ok(Self {
            n_qubits: m,
            energies,
        })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn evolve(&self, psi0: &PureState, t: f64) -> Result<PureState> {
        if psi0.n_qubits != self.n_qubits {
            return Err(Error::LengthMismatch {
                expected: self.n_qubits,
                got: psi0.n_qubits,
            });
        }
        let norm = psi0.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        let amplitudes = psi0
            .amplitudes
            .iter()
            .zip(&self.energies)
            .map(|(a, e)| a * c64::from_polar(1.0, -e * t))
            .collect();
        Ok(PureState {
            n_qubits: self.n_qubits,
            amplitudes,
        })
    }
}

pub fn evolve_diagonal(instance: &ModelInstance, psi0: &PureState, t: f64) -> Result<PureState> {
    check_input(instance, psi0)?;
    DiagonalPropagator::new(instance)?.evolve(psi0, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, sample_instance, ModelKind, ModelOverrides};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    fn instance(kind: ModelKind, n: usize, seed: u64) -> ModelInstance {
        let spec = build_model(kind, n, &ModelOverrides::default()).unwrap();
        sample_instance(&spec, seed).unwrap()
    }

    fn bell_init() -> ProductCoeffs {
        let h = c64::new(FRAC_1_SQRT_2, 0.0);
        ProductCoeffs::new(vec![(h, h), (h, h)]).unwrap()
    }

    fn system_purity(psi: &PureState) -> f64 {
        let (mut p0, mut p1, mut off) = (0.0, 0.0, c64::new(0.0, 0.0));
        for k in 0..psi.amplitudes.len() / 2 {
            let a = psi.amplitudes[k << 1];
            let b = psi.amplitudes[(k << 1) | 1];
            p0 += a.norm_sqr();
            p1 += b.norm_sqr();
            off += a * b.conj();
        }
        p0 * p0 + p1 * p1 + 2.0 * off.norm_sqr()
    }

    #[test]
    fn random_product_state_normalized_and_deterministic() {
        let a = random_product_state(50, 9).unwrap();
        for (x, y) in a.sites() {
            assert!((x.norm_sqr() + y.norm_sqr() - 1.0).abs() < 1e-12);
        }
        assert_eq!(a, random_product_state(50, 9).unwrap());
        assert!(random_product_state(0, 1).is_err());
    }

    #[test]
    fn mean_epsilon_of_random_sites() {
        let c = random_product_state(100_000, 3).unwrap();
        let mean = c
            .sites()
            .iter()
            .map(|(a, b)| a.norm_sqr().powi(2) + b.norm_sqr().powi(2))
            .sum::<f64>()
            / c.len() as f64;
        assert!((mean - 2.0 / 3.0).abs() < 5e-3, "{mean}");
    }

    #[test]
    fn branching_at_time_zero_is_product() {
        let init = random_product_state(4, 1).unwrap();
        let bs = evolve_branching(&init, &[0.3, -0.8, 0.5], 0.0).unwrap();
        let dense = branching_to_dense(&bs);
        let product = PureState::product(&init);
        for (a, b) in dense.amplitudes.iter().zip(&product.amplitudes) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn definite_site_overlap_is_pure_phase() {
        let one = c64::new(1.0, 0.0);
        let zero = c64::new(0.0, 0.0);
        let h = c64::new(FRAC_1_SQRT_2, 0.0);
        let init = ProductCoeffs::new(vec![(h, h), (one, zero)]).unwrap();
        for t in [0.0, 0.4, 3.0] {
            let bs = evolve_branching(&init, &[0.9], t).unwrap();
            let g = bs.site_overlap(1);
            assert!((g - c64::from_polar(1.0, -2.0 * 0.9 * t)).norm() < 1e-14);
        }
    }

    #[test]
    fn bell_case() {
        let b = 0.7;
        let bs = evolve_branching(&bell_init(), &[b], FRAC_PI_4 / b).unwrap();
        assert!(bs.site_overlap(1).norm() < 1e-15);
        let psi = branching_to_dense(&bs);
        for a in psi.amplitudes() {
            assert!((a.norm_sqr() - 0.25).abs() < 1e-14);
        }
        assert!((system_purity(&psi) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn length_mismatch() {
        let init = random_product_state(3, 0).unwrap();
        assert!(matches!(
            evolve_branching(&init, &[1.0], 0.5),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn dense_identity_at_zero_and_unnormalized_rejected() {
        let inst = instance(ModelKind::Codi, 3, 4);
        let psi = PureState::product(&random_product_state(4, 4).unwrap());
        let out = evolve_dense(&inst, &psi, 0.0).unwrap();
        for (a, b) in out.amplitudes.iter().zip(&psi.amplitudes) {
            assert!((a - b).norm() < 1e-12);
        }
        let bad = PureState {
            n_qubits: 4,
            amplitudes: psi.amplitudes.iter().map(|a| a * 1.1).collect(),
        };
        assert!(matches!(
            evolve_dense(&inst, &bad, 1.0),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn dense_unitarity_long_time() {
        let inst = instance(ModelKind::Codi, 4, 8);
        let psi = PureState::product(&random_product_state(5, 8).unwrap());
        let out = evolve_dense(&inst, &psi, 100.0).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn branching_matches_dense() {
        for seed in 0..5 {
            let inst = instance(ModelKind::Cpdi, 4, seed);
            let init = random_product_state(5, 100 + seed).unwrap();
            let psi0 = PureState::product(&init);
            let prop = SpectralPropagator::new(&inst).unwrap();
            let fields = inst.branching_fields().unwrap();
            for t in [0.3, 1.0, 3.0] {
                let exact = branching_to_dense(&evolve_branching(&init, &fields, t).unwrap());
                let dense = prop.evolve(&psi0, t).unwrap();
                assert!(phase_aligned_distance(&exact, &dense) < 1e-8);
            }
        }
    }

    #[test]
    fn diagonal_matches_dense_with_scrambling() {
        let inst = instance(ModelKind::CpdiS, 8, 2);
        let psi0 = PureState::product(&random_product_state(9, 2).unwrap());
        let prop = SpectralPropagator::new(&inst).unwrap();
        let diag = DiagonalPropagator::new(&inst).unwrap();
        for t in [0.5, 7.0] {
            let a = prop.evolve(&psi0, t).unwrap();
            let b = diag.evolve(&psi0, t).unwrap();
            assert!(phase_aligned_distance(&a, &b) < 1e-9);
        }
    }

    #[test]
    fn diagonal_energies_match_matrix_diagonal() {
        let mut inst = instance(ModelKind::CpdiS, 4, 5);
        inst.set_field(0, crate::model::Vec3::new(0.0, 0.0, 0.4));
        inst.set_field(3, crate::model::Vec3::new(0.0, 0.0, -0.2));
        let h = hamiltonian_matrix(&inst).unwrap();
        let diag = DiagonalPropagator::new(&inst).unwrap();
        for (b, e) in diag.energies().iter().enumerate() {
            assert!((h[(b, b)].re - e).abs() < 1e-12);
        }
    }

    #[test]
    fn codi_is_not_diagonal() {
        let inst = instance(ModelKind::Codi, 3, 0);
        assert!(matches!(
            DiagonalPropagator::new(&inst),
            Err(Error::NonDiagonal(_))
        ));
    }

    #[test]
    fn large_diagonal_instance() {
        let inst = instance(ModelKind::Cpdi, 20, 1);
        let start = std::time::Instant::now();
        let init = random_product_state(21, 1).unwrap();
        let psi0 = PureState::product(&init);
        let out = evolve_diagonal(&inst, &psi0, 2.0).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-10);
        assert!(start.elapsed().as_secs_f64() < 1.0);
    }

    #[test]
    fn composition() {
        let inst = instance(ModelKind::Codi, 3, 6);
        let psi0 = PureState::product(&random_product_state(4, 6).unwrap());
        let prop = SpectralPropagator::new(&inst).unwrap();
        let whole = prop.evolve(&psi0, 2.5).unwrap();
        let split = prop.evolve(&prop.evolve(&psi0, 1.1).unwrap(), 1.4).unwrap();
        assert!(phase_aligned_distance(&whole, &split) < 1e-9);
    }

    #[test]
    fn pointer_state_stays_pure() {
        let inst = instance(ModelKind::Cpdi, 5, 3);
        let mut sites = random_product_state(6, 3).unwrap().sites;
        sites[0] = (c64::new(1.0, 0.0), c64::new(0.0, 0.0));
        let init = ProductCoeffs::new(sites).unwrap();
        let psi0 = PureState::product(&init);
        let diag = DiagonalPropagator::new(&inst).unwrap();
        for t in [0.1, 1.0, 10.0, 100.0] {
            let psi = diag.evolve(&psi0, t).unwrap();
            assert!(system_purity(&psi) >= 1.0 - 1e-10);
        }
    }
}
