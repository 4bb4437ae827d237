//! Reduced states and information measures. Entropies are in bits.

use std::f64::consts::{PI, TAU};

use faer::{c64, Mat, Side};

use crate::dynamics::{BranchingState, PureState};
use crate::error::{invalid, Error, Result};

/// Tolerance on trace, positivity and clamping of density-matrix spectra.
pub const DENSITY_TOL: f64 = 1e-9;
const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct DensityMatrix {
    data: Mat<c64>,
}

impl DensityMatrix {
    /// Checks the trace and Hermiticity; positivity is checked when the
    /// spectrum is computed.
    pub fn new(data: Mat<c64>) -> Result<Self> {
        if data.nrows() != data.ncols() || data.nrows() == 0 {
            return Err(Error::InvalidDensityMatrix(format!(
                "shape {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        let n = data.nrows();
        let mut trace = 0.0;
        for i in 0..n {
            trace += data[(i, i)].re;
            for j in i..n {
                if (data[(i, j)] - data[(j, i)].conj()).norm() > HERMITIAN_TOL {
                    return Err(Error::InvalidDensityMatrix(format!(
                        "not Hermitian at ({i}, {j})"
                    )));
                }
            }
        }
        if (trace - 1.0).abs() > DENSITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {trace}")));
        }
        Ok(Self { data })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &Mat<c64> {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> c64 {
        self.data[(row, col)]
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(&self.data)
    }

    pub fn purity(&self) -> f64 {
        let n = self.dim();
        let mut p = 0.0;
        for i in 0..n {
            for j in 0..n {
                p += self.data[(i, j)].norm_sqr();
            }
        }
        p
    }
}

fn hermitian_eigenvalues(m: &Mat<c64>) -> Result<Vec<f64>> {
    match m.nrows() {
        1 => Ok(vec![m[(0, 0)].re]),
        2 => {
            let (a, d, b) = (m[(0, 0)].re, m[(1, 1)].re, m[(0, 1)]);
            let mean = 0.5 * (a + d);
            let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
            Ok(vec![mean - r, mean + r])
        }
        _ => m
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::LinAlg(format!("eigenvalues failed: {e:?}"))),
    }
}

/// Environment sites an observer intercepts, 1-based and distinct.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FragmentSpec {
    sites: Vec<usize>,
}

impl FragmentSpec {
    pub fn new(sites: Vec<usize>, n_env: usize) -> Result<Self> {
        for (k, &s) in sites.iter().enumerate() {
            if s == 0 || s > n_env {
                return Err(Error::IndexOutOfRange {
                    index: s,
                    n_qubits: n_env + 1,
                });
            }
            if sites[..k].contains(&s) {
                return Err(Error::DuplicateIndex(s));
            }
        }
        Ok(Self { sites })
    }

    /// Sites `1..=n`.
    pub fn prefix(n: usize) -> Self {
        Self {
            sites: (1..=n).collect(),
        }
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// The remaining environment sites, ascending.
    pub fn complement(&self, n_env: usize) -> Self {
        Self {
            sites: (1..=n_env).filter(|s| !self.sites.contains(s)).collect(),
        }
    }

    fn check_within(&self, n_env: usize) -> Result<()> {
        match self.sites.iter().find(|&&s| s > n_env) {
            Some(&s) => Err(Error::IndexOutOfRange {
                index: s,
                n_qubits: n_env + 1,
            }),
            None => Ok(()),
        }
    }
}

fn check_subset(keep: &[usize], n_qubits: usize) -> Result<()> {
    for (k, &q) in keep.iter().enumerate() {
        if q >= n_qubits {
            return Err(Error::IndexOutOfRange { index: q, n_qubits });
        }
        if keep[..k].contains(&q) {
            return Err(Error::DuplicateIndex(q));
        }
    }
    Ok(())
}

/// Amplitudes reshaped as a `2^|keep| x 2^(n-|keep|)` matrix; row bits follow
/// `keep` order, column bits the complement in ascending order.
fn bipartition(psi: &PureState, keep: &[usize]) -> Mat<c64> {
    let n = psi.n_qubits();
    let rest: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let gather = |b: usize, qubits: &[usize]| {
        qubits
            .iter()
            .enumerate()
            .fold(0usize, |acc, (pos, &q)| acc | (((b >> q) & 1) << pos))
    };
    let mut a = Mat::<c64>::zeros(1 << keep.len(), 1 << rest.len());
    for (b, amp) in psi.amplitudes().iter().enumerate() {
        a[(gather(b, keep), gather(b, &rest))] = *amp;
    }
    a
}

/// `ρ_keep = Tr_rest |ψ⟩⟨ψ|`; the first kept qubit is the least significant
/// bit of the reduced basis.
pub fn reduced_density(psi: &PureState, keep: &[usize]) -> Result<DensityMatrix> {
    check_subset(keep, psi.n_qubits())?;
    let a = bipartition(psi, keep);
    DensityMatrix::new(&a * a.adjoint())
}

fn entropy_of_spectrum(eigs: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &l in eigs {
        if !(-DENSITY_TOL..=1.0 + DENSITY_TOL).contains(&l) {
            return Err(Error::InvalidDensityMatrix(format!("eigenvalue {l}")));
        }
        let l = l.clamp(0.0, 1.0);
        if l > 0.0 {
            s -= l * l.log2();
        }
    }
    Ok(s.max(0.0))
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    entropy_of_spectrum(&rho.eigenvalues()?)
}

/// Entropy of the reduced state on `subset`, diagonalizing whichever side of
/// the bipartition is smaller.
pub fn subsystem_entropy(psi: &PureState, subset: &[usize]) -> Result<f64> {
    let n = psi.n_qubits();
    check_subset(subset, n)?;
    if subset.is_empty() || subset.len() == n {
        return Ok(0.0);
    }
    let a = bipartition(psi, subset);
    let gram = if a.nrows() <= a.ncols() {
        &a * a.adjoint()
    } else {
        a.adjoint() * &a
    };
    entropy_of_spectrum(&hermitian_eigenvalues(&gram)?)
}

/// `I(S:F) = S_S + S_F - S_SF` on a global pure state.
pub fn mutual_information(psi: &PureState, frag: &FragmentSpec) -> Result<f64> {
    frag.check_within(psi.n_qubits() - 1)?;
    if frag.is_empty() {
        return Ok(0.0);
    }
    let mut joint = vec![0];
    joint.extend_from_slice(frag.sites());
    Ok(
        subsystem_entropy(psi, &[0])? + subsystem_entropy(psi, frag.sites())?
            - subsystem_entropy(psi, &joint)?,
    )
}

/// `h[x] = -x log₂ x - (1-x) log₂(1-x)`, with `x` clamped to [0, 1].
pub fn binary_entropy(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    term(x) + term(1.0 - x)
}

/// Entropy of a rank-two mixture `a|u⟩⟨u| + (1-a)|v⟩⟨v|` with `|⟨u|v⟩|² = overlap_sq`:
/// `h[(1 + √(1 - 4a(1-a)(1 - overlap_sq)))/2]`.
pub fn branch_entropy(alpha0_sq: f64, overlap_sq: f64) -> f64 {
    let ab = alpha0_sq * (1.0 - alpha0_sq);
    let disc = (1.0 - 4.0 * ab * (1.0 - overlap_sq)).max(0.0);
    binary_entropy(0.5 * (1.0 + disc.sqrt()))
}

/// `Γ_F = Π_{i∈F} Γ_i` with `Γ_i = ⟨𝔩_i|𝔬_i⟩`.
pub fn fragment_decoherence_factor(bs: &BranchingState, frag: &FragmentSpec) -> Result<c64> {
    frag.check_within(bs.n_env())?;
    Ok(frag
        .sites()
        .iter()
        .fold(c64::new(1.0, 0.0), |acc, &i| acc * bs.site_overlap(i)))
}

/// Squared decoherence factors `(|Γ_E|², |Γ_F|², |Γ_F̄|²)`.
pub fn branching_factors(bs: &BranchingState, frag: &FragmentSpec) -> Result<(f64, f64, f64)> {
    frag.check_within(bs.n_env())?;
    let mut in_frag = 1.0;
    let mut out_frag = 1.0;
    for i in 1..=bs.n_env() {
        let g = bs.site_overlap(i).norm_sqr();
        if frag.sites().contains(&i) {
            in_frag *= g;
        } else {
            out_frag *= g;
        }
    }
    Ok((in_frag * out_frag, in_frag, out_frag))
}

/// Exact `S_S` of a branching state.
pub fn system_entropy_branching(bs: &BranchingState) -> f64 {
    let g: f64 = (1..=bs.n_env())
        .map(|i| bs.site_overlap(i).norm_sqr())
        .product();
    branch_entropy(bs.alpha0_sq(), g)
}

/// Exact `I(S:F)` of a branching state from its decoherence factors; every
/// marginal is a rank-two mixture of branch records.
pub fn mutual_information_branching(bs: &BranchingState, frag: &FragmentSpec) -> Result<f64> {
    let (ge, gf, gfbar) = branching_factors(bs, frag)?;
    let a = bs.alpha0_sq();
    Ok(branch_entropy(a, ge) + branch_entropy(a, gf) - branch_entropy(a, gfbar))
}

/// Holevo quantity of a branching state for measurements on `frag`:
/// `h[(1+√(1-4|α₀β₀|²(1-|Γ|²)))/2] - h[(1+√(1-4|α₀β₀|²(|Γ_F|²-|Γ|²)))/2]`.
pub fn holevo_branching(bs: &BranchingState, frag: &FragmentSpec) -> Result<f64> {
    let (ge, gf, _) = branching_factors(bs, frag)?;
    let a = bs.alpha0_sq();
    let ab = a * (1.0 - a);
    let conditional = (1.0 - 4.0 * ab * (gf - ge).max(0.0)).max(0.0);
    Ok(branch_entropy(a, ge) - binary_entropy(0.5 * (1.0 + conditional.sqrt())))
}

pub const MIN_GRID: usize = 16;

/// Brute-force Holevo quantity for a single-site fragment: `S_S` minus the
/// smallest outcome-averaged entropy of `S` after a projective measurement of
/// the fragment qubit along `(θ_k, φ_l)`, with `θ_k = kπ/(grid-1)` for
/// `k < grid` and `φ_l = 2πl/(2 grid)` for `l < 2 grid`. A finite grid can
/// only miss the optimum, so the result never exceeds the true value.
pub fn holevo_grid_oracle(psi: &PureState, frag: &FragmentSpec, grid: usize) -> Result<f64> {
    if frag.len() != 1 {
        return invalid(format!(
            "grid oracle needs a single-site fragment, got {}",
            frag.len()
        ));
    }
    if grid < MIN_GRID {
        return invalid(format!("grid resolution must be >= {MIN_GRID}, got {grid}"));
    }
    frag.check_within(psi.n_qubits() - 1)?;
    // basis index: system bit + 2 * fragment bit
    let rho = reduced_density(psi, &[0, frag.sites()[0]])?;
    let r = |s: usize, f: usize, s2: usize, f2: usize| rho.get(s + 2 * f, s2 + 2 * f2);

    let mut rho_s = Mat::<c64>::zeros(2, 2);
    for s in 0..2 {
        for s2 in 0..2 {
            rho_s[(s, s2)] = r(s, 0, s2, 0) + r(s, 1, s2, 1);
        }
    }
    let s_sys = entropy_of_spectrum(&hermitian_eigenvalues(&rho_s)?)?;

    let mut best = f64::INFINITY;
    let n_phi = 2 * grid;
    for k in 0..grid {
        let theta = PI * k as f64 / (grid - 1) as f64;
        for l in 0..n_phi {
            let phi = TAU * l as f64 / n_phi as f64;
            let (nx, ny, nz) = (
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            );
            let mut conditional = 0.0;
            for sign in [1.0, -1.0] {
                // P = (I + sign n·σ)/2 on the fragment qubit
                let p = [
                    [
                        c64::new(0.5 * (1.0 + sign * nz), 0.0),
                        c64::new(0.5 * sign * nx, -0.5 * sign * ny),
                    ],
                    [
                        c64::new(0.5 * sign * nx, 0.5 * sign * ny),
                        c64::new(0.5 * (1.0 - sign * nz), 0.0),
                    ],
                ];
                // post = Tr_F[(I ⊗ P) ρ_SF]
                let post = Mat::<c64>::from_fn(2, 2, |s, s2| {
                    [(0, 0), (0, 1), (1, 0), (1, 1)]
                        .iter()
                        .map(|&(f, f2)| p[f2][f] * r(s, f, s2, f2))
                        .sum()
                });
                let prob = post[(0, 0)].re + post[(1, 1)].re;
                if prob > 1e-15 {
                    let scaled = Mat::<c64>::from_fn(2, 2, |i, j| post[(i, j)] / prob);
                    conditional += prob * entropy_of_spectrum(&hermitian_eigenvalues(&scaled)?)?;
                }
            }
            best = best.min(conditional);
        }
    }
    Ok(s_sys - best)
}

/// `D(S:F̌) = I(S:F) - χ(S:F̌)`, with `I` from the dense state and `χ` from
/// the branching closed form; `psi` must be the dense form of `bs`.
pub fn quantum_discord(psi: &PureState, bs: &BranchingState, frag: &FragmentSpec) -> Result<f64> {
    Ok(mutual_information(psi, frag)? - holevo_branching(bs, frag)?)
}
