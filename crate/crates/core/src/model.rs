//! Two-body qubit Hamiltonians: specifications with random coefficient laws,
//! sampled numeric instances, the four reference models and the pointer-basis
//! classifier.
//!
//! Qubit 0 is the system, qubits 1..=N the environment. In a basis index `b`
//! the state of qubit `k` is bit `k` of `b` (system least significant), and
//! `σ^z|0⟩ = +|0⟩`.

use std::fmt;
use std::str::FromStr;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::SeededRng;

/// Largest qubit count for which a dense Hamiltonian may be materialized.
pub const DENSE_QUBIT_CAP: usize = 13;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn component(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
            Axis::Z => self.z,
        }
    }

    pub fn set(&mut self, axis: Axis, value: f64) {
        match axis {
            Axis::X => self.x = value,
            Axis::Y => self.y = value,
            Axis::Z => self.z = value,
        }
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, o: &Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, c: f64) -> Vec3 {
        Vec3::new(c * self.x, c * self.y, c * self.z)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Pauli axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Law of a random coupling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum CouplingDistribution {
    /// Uniform on `[-a, a]`.
    #[serde(rename = "uniform")]
    ContinuousUniform {
        #[serde(rename = "a")]
        half_width: f64,
    },
    /// Uniform over a finite set of distinct values.
    #[serde(rename = "discrete")]
    DiscreteUniform { support: Vec<f64> },
    #[serde(rename = "const")]
    PointMass { value: f64 },
}

impl CouplingDistribution {
    pub fn uniform(half_width: f64) -> Result<Self> {
        let d = Self::ContinuousUniform { half_width };
        d.validate()?;
        Ok(d)
    }

    pub fn discrete(support: Vec<f64>) -> Result<Self> {
        let d = Self::DiscreteUniform { support };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::ContinuousUniform { half_width } => {
                if !(half_width.is_finite() && *half_width > 0.0) {
                    return invalid(format!("uniform half-width must be > 0, got {half_width}"));
                }
            }
            Self::DiscreteUniform { support } => {
                if support.is_empty() {
                    return invalid("discrete support is empty");
                }
                if support.iter().any(|v| !v.is_finite()) {
                    return invalid("discrete support contains a non-finite value");
                }
                for (k, a) in support.iter().enumerate() {
                    if support[k + 1..].contains(a) {
                        return invalid(format!("discrete support repeats {a}"));
                    }
                }
            }
            Self::PointMass { value } => {
                if !value.is_finite() {
                    return invalid("point mass must be finite");
                }
            }
        }
        Ok(())
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, Self::ContinuousUniform { .. })
    }

    /// Point masses are deterministic and consume no draw.
    pub fn sample(&self, rng: &mut SeededRng) -> f64 {
        match self {
            Self::ContinuousUniform { half_width } => rng.uniform(-half_width, *half_width),
            Self::DiscreteUniform { support } => support[rng.index(support.len())],
            Self::PointMass { value } => *value,
        }
    }
}

impl fmt::Display for CouplingDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ContinuousUniform { half_width } => write!(f, "uniform:{half_width}"),
            Self::DiscreteUniform { support } => {
                let parts: Vec<String> = support.iter().map(|v| v.to_string()).collect();
                write!(f, "discrete:{}", parts.join(","))
            }
            Self::PointMass { value } => write!(f, "const:{value}"),
        }
    }
}

/// Shell-friendly grammar: `uniform:<a>`, `discrete:v1,v2,...`, `const:<v>`.
impl FromStr for CouplingDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("distribution `{s}` lacks `kind:`")))?;
        let num = |t: &str| -> Result<f64> {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("`{t}` is not a number")))
        };
        let d = match kind.trim() {
            "uniform" => Self::ContinuousUniform {
                half_width: num(rest)?,
            },
            "discrete" => Self::DiscreteUniform {
                support: rest.split(',').map(num).collect::<Result<_>>()?,
            },
            "const" => Self::PointMass { value: num(rest)? },
            other => return invalid(format!("unknown distribution kind `{other}`")),
        };
        d.validate()?;
        Ok(d)
    }
}

/// Where a Hamiltonian coefficient comes from before sampling.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum CoefficientSource {
    #[default]
    Zero,
    Constant(f64),
    Random(CouplingDistribution),
}

impl CoefficientSource {
    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::Zero => Ok(()),
            Self::Constant(v) if v.is_finite() => Ok(()),
            Self::Constant(v) => invalid(format!("constant coefficient {v} is not finite")),
            Self::Random(d) => d.validate(),
        }
    }

    fn draw(&self, rng: &mut SeededRng) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant(v) => *v,
            Self::Random(d) => d.sample(rng),
        }
    }
}

// JSON form: `{"type":"uniform","a":..}`, `{"type":"discrete","support":[..]}`,
// `{"type":"const","value":..}` and `{"type":"zero"}`.
#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum SourceRepr {
    Zero,
    Const { value: f64 },
    Uniform { a: f64 },
    Discrete { support: Vec<f64> },
}

impl Serialize for CoefficientSource {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match self {
            Self::Zero => SourceRepr::Zero,
            Self::Constant(value) => SourceRepr::Const { value: *value },
            Self::Random(CouplingDistribution::PointMass { value }) => {
                SourceRepr::Const { value: *value }
            }
            Self::Random(CouplingDistribution::ContinuousUniform { half_width }) => {
                SourceRepr::Uniform { a: *half_width }
            }
            Self::Random(CouplingDistribution::DiscreteUniform { support }) => {
                SourceRepr::Discrete {
                    support: support.clone(),
                }
            }
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoefficientSource {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match SourceRepr::deserialize(d)? {
            SourceRepr::Zero => Self::Zero,
            SourceRepr::Const { value } => Self::Constant(value),
            SourceRepr::Uniform { a } => {
                Self::Random(CouplingDistribution::ContinuousUniform { half_width: a })
            }
            SourceRepr::Discrete { support } => {
                Self::Random(CouplingDistribution::DiscreteUniform { support })
            }
        })
    }
}

/// Index of the unordered pair `i < j` among `m` items, pairs in lexicographic order.
fn pair_index(i: usize, j: usize, m: usize) -> usize {
    debug_assert!(i < j && j < m);
    i * m - i * (i + 1) / 2 + (j - i - 1)
}

fn pair_count(m: usize) -> usize {
    m * m.saturating_sub(1) / 2
}

/// Structural description of a two-body Hamiltonian before its random
/// coefficients are drawn.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub label: String,
    n_env: usize,
    pub b0: Vec3,
    // (alpha, site-1, beta), row-major
    sys_env: Vec<CoefficientSource>,
    // (pair(i-1, j-1), alpha, beta)
    intra_env: Vec<CoefficientSource>,
    // (site-1, axis)
    env_fields: Vec<CoefficientSource>,
}

impl ModelSpec {
    /// A spec with every coefficient zero.
    pub fn empty(label: impl Into<String>, n_env: usize) -> Result<Self> {
        if n_env == 0 {
            return invalid("n_env must be at least 1");
        }
        Ok(Self {
            label: label.into(),
            n_env,
            b0: Vec3::ZERO,
            sys_env: vec![CoefficientSource::Zero; 9 * n_env],
            intra_env: vec![CoefficientSource::Zero; 9 * pair_count(n_env)],
            env_fields: vec![CoefficientSource::Zero; 3 * n_env],
        })
    }

    pub fn n_env(&self) -> usize {
        self.n_env
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site == 0 || site > self.n_env {
            return Err(Error::IndexOutOfRange {
                index: site,
                n_qubits: self.n_env + 1,
            });
        }
        Ok(())
    }

    fn sys_slot(&self, alpha: Axis, site: usize, beta: Axis) -> usize {
        (alpha.index() * self.n_env + site - 1) * 3 + beta.index()
    }

    fn intra_slot(&self, i: usize, j: usize, alpha: Axis, beta: Axis) -> usize {
        pair_index(i - 1, j - 1, self.n_env) * 9 + alpha.index() * 3 + beta.index()
    }

    /// `J^{αβ}_{0j}` source.
    pub fn sys_env(&self, alpha: Axis, site: usize, beta: Axis) -> &CoefficientSource {
        &self.sys_env[self.sys_slot(alpha, site, beta)]
    }

    pub fn set_sys_env(
        &mut self,
        alpha: Axis,
        site: usize,
        beta: Axis,
        source: CoefficientSource,
    ) -> Result<()> {
        self.check_site(site)?;
        source.validate()?;
        let k = self.sys_slot(alpha, site, beta);
        self.sys_env[k] = source;
        Ok(())
    }

    /// `J^{αβ}_{ij}` source for environment sites `1 <= i < j <= N`.
    pub fn intra_env(&self, i: usize, j: usize, alpha: Axis, beta: Axis) -> &CoefficientSource {
        &self.intra_env[self.intra_slot(i, j, alpha, beta)]
    }

    pub fn set_intra_env(
        &mut self,
        i: usize,
        j: usize,
        alpha: Axis,
        beta: Axis,
        source: CoefficientSource,
    ) -> Result<()> {
        self.check_site(i)?;
        self.check_site(j)?;
        if i >= j {
            return invalid(format!(
                "intra-environment pair needs i < j, got ({i}, {j})"
            ));
        }
        source.validate()?;
        let k = self.intra_slot(i, j, alpha, beta);
        self.intra_env[k] = source;
        Ok(())
    }

    pub fn env_field(&self, site: usize, axis: Axis) -> &CoefficientSource {
        &self.env_fields[(site - 1) * 3 + axis.index()]
    }

    pub fn set_env_field(
        &mut self,
        site: usize,
        axis: Axis,
        source: CoefficientSource,
    ) -> Result<()> {
        self.check_site(site)?;
        source.validate()?;
        self.env_fields[(site - 1) * 3 + axis.index()] = source;
        Ok(())
    }

    /// True when every non-zero system–environment coupling is drawn from a
    /// continuous law (and at least one is). Constant couplings are point
    /// masses and count as discrete.
    pub fn continuous_support(&self) -> bool {
        let mut any = false;
        for s in &self.sys_env {
            match s {
                CoefficientSource::Zero => {}
                CoefficientSource::Random(d) if d.is_continuous() => any = true,
                _ => return false,
            }
        }
        any
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_env == 0 {
            return invalid("n_env must be at least 1");
        }
        if !self.b0.is_finite() {
            return invalid("b0 must be finite");
        }
        for s in self
            .sys_env
            .iter()
            .chain(&self.intra_env)
            .chain(&self.env_fields)
        {
            s.validate()?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelSpecDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelSpecDoc = serde_json::from_str(text)?;
        doc.try_into()
    }
}

#[derive(Serialize, Deserialize)]
struct SysEnvEntry {
    alpha: Axis,
    site: usize,
    beta: Axis,
    coeff: CoefficientSource,
}

#[derive(Serialize, Deserialize)]
struct IntraEnvEntry {
    i: usize,
    j: usize,
    alpha: Axis,
    beta: Axis,
    coeff: CoefficientSource,
}

#[derive(Serialize, Deserialize)]
struct FieldEntry {
    site: usize,
    axis: Axis,
    coeff: CoefficientSource,
}

/// Sparse JSON layout of a [`ModelSpec`]; absent entries are zero.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSpecDoc {
    label: String,
    n_env: usize,
    #[serde(default)]
    b0: Vec3,
    #[serde(default)]
    sys_env: Vec<SysEnvEntry>,
    #[serde(default)]
    intra_env: Vec<IntraEnvEntry>,
    #[serde(default)]
    env_fields: Vec<FieldEntry>,
}

impl From<&ModelSpec> for ModelSpecDoc {
    fn from(spec: &ModelSpec) -> Self {
        let n = spec.n_env;
        let mut sys_env = Vec::new();
        for alpha in Axis::ALL {
            for site in 1..=n {
                for beta in Axis::ALL {
                    let c = spec.sys_env(alpha, site, beta);
                    if !c.is_zero() {
                        sys_env.push(SysEnvEntry {
                            alpha,
                            site,
                            beta,
                            coeff: c.clone(),
                        });
                    }
                }
            }
        }
        let mut intra_env = Vec::new();
        for i in 1..=n {
            for j in i + 1..=n {
                for alpha in Axis::ALL {
                    for beta in Axis::ALL {
                        let c = spec.intra_env(i, j, alpha, beta);
                        if !c.is_zero() {
                            intra_env.push(IntraEnvEntry {
                                i,
                                j,
                                alpha,
                                beta,
                                coeff: c.clone(),
                            });
                        }
                    }
                }
            }
        }
        let mut env_fields = Vec::new();
        for site in 1..=n {
            for axis in Axis::ALL {
                let c = spec.env_field(site, axis);
                if !c.is_zero() {
                    env_fields.push(FieldEntry {
                        site,
                        axis,
                        coeff: c.clone(),
                    });
                }
            }
        }
        Self {
            label: spec.label.clone(),
            n_env: n,
            b0: spec.b0,
            sys_env,
            intra_env,
            env_fields,
        }
    }
}

impl TryFrom<ModelSpecDoc> for ModelSpec {
    type Error = Error;

    fn try_from(doc: ModelSpecDoc) -> Result<Self> {
        let mut spec = ModelSpec::empty(doc.label, doc.n_env)?;
        spec.b0 = doc.b0;
        for e in doc.sys_env {
            spec.set_sys_env(e.alpha, e.site, e.beta, e.coeff)?;
        }
        for e in doc.intra_env {
            spec.set_intra_env(e.i, e.j, e.alpha, e.beta, e.coeff)?;
        }
        for e in doc.env_fields {
            spec.set_env_field(e.site, e.axis, e.coeff)?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// The four reference models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// Continuous parallel decoherent interaction.
    #[serde(rename = "CPDI")]
    Cpdi,
    /// Discrete parallel decoherent interaction.
    #[serde(rename = "DPDI")]
    Dpdi,
    /// Continuous orthogonal decoherent interaction (extra `σ^y_0` field).
    #[serde(rename = "CODI")]
    Codi,
    /// CPDI plus weak random `σ^z σ^z` couplings inside the environment.
    #[serde(rename = "CPDI_S", alias = "CPDI-S")]
    CpdiS,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [Self::Cpdi, Self::Dpdi, Self::Codi, Self::CpdiS];

    pub fn name(self) -> &'static str {
        match self {
            Self::Cpdi => "CPDI",
            Self::Dpdi => "DPDI",
            Self::Codi => "CODI",
            Self::CpdiS => "CPDI_S",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace('-', "_").as_str() {
            "CPDI" => Ok(Self::Cpdi),
            "DPDI" => Ok(Self::Dpdi),
            "CODI" => Ok(Self::Codi),
            "CPDI_S" => Ok(Self::CpdiS),
            _ => Err(Error::UnknownModel(s.to_string())),
        }
    }
}

/// Optional parameter changes for [`build_model`]. Fields that do not apply
/// to the chosen kind are ignored.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOverrides {
    /// Half-width of the continuous system–environment law (CPDI, CODI, CPDI_S).
    pub half_width: Option<f64>,
    /// Support of the discrete law (DPDI).
    pub discrete_support: Option<Vec<f64>>,
    /// Half-width of the intra-environment law (CPDI_S); 0 removes the couplings.
    pub scrambling_strength: Option<f64>,
}

pub const DEFAULT_HALF_WIDTH: f64 = 1.0;
pub const DEFAULT_DISCRETE_SUPPORT: [f64; 4] = [-1.0, -0.5, 0.5, 1.0];
pub const DEFAULT_SCRAMBLING_STRENGTH: f64 = 0.03;

pub fn build_model(kind: ModelKind, n_env: usize, overrides: &ModelOverrides) -> Result<ModelSpec> {
    let half_width = overrides.half_width.unwrap_or(DEFAULT_HALF_WIDTH);
    let coupling = match kind {
        ModelKind::Dpdi => CouplingDistribution::discrete(
            overrides
                .discrete_support
                .clone()
                .unwrap_or_else(|| DEFAULT_DISCRETE_SUPPORT.to_vec()),
        )?,
        _ => CouplingDistribution::uniform(half_width)?,
    };
    let scrambling = overrides
        .scrambling_strength
        .unwrap_or(DEFAULT_SCRAMBLING_STRENGTH);
    if kind == ModelKind::CpdiS && !(scrambling.is_finite() && scrambling >= 0.0) {
        return invalid(format!(
            "scrambling strength must be >= 0, got {scrambling}"
        ));
    }

    let mut spec = ModelSpec::empty(kind.name(), n_env)?;
    for site in 1..=n_env {
        spec.set_sys_env(
            Axis::Z,
            site,
            Axis::Z,
            CoefficientSource::Random(coupling.clone()),
        )?;
    }
    match kind {
        ModelKind::Codi => spec.b0 = Vec3::new(0.0, 1.0, 0.0),
        ModelKind::CpdiS if scrambling > 0.0 => {
            let law = CouplingDistribution::uniform(scrambling)?;
            for i in 1..=n_env {
                for j in i + 1..=n_env {
                    spec.set_intra_env(
                        i,
                        j,
                        Axis::Z,
                        Axis::Z,
                        CoefficientSource::Random(law.clone()),
                    )?;
                }
            }
        }
        _ => {}
    }
    Ok(spec)
}

/// Numeric realization of a [`ModelSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelInstance {
    n_env: usize,
    // (pair(i, j) over 0 <= i < j <= N, alpha, beta)
    couplings: Vec<f64>,
    fields: Vec<Vec3>,
}

impl ModelInstance {
    pub fn zeros(n_env: usize) -> Self {
        let m = n_env + 1;
        Self {
            n_env,
            couplings: vec![0.0; 9 * pair_count(m)],
            fields: vec![Vec3::ZERO; m],
        }
    }

    pub fn n_env(&self) -> usize {
        self.n_env
    }

    pub fn n_qubits(&self) -> usize {
        self.n_env + 1
    }

    fn slot(&self, i: usize, j: usize, alpha: Axis, beta: Axis) -> usize {
        pair_index(i, j, self.n_qubits()) * 9 + alpha.index() * 3 + beta.index()
    }

    /// `J^{αβ}_{ij}` for `0 <= i < j <= N`.
    pub fn coupling(&self, i: usize, j: usize, alpha: Axis, beta: Axis) -> f64 {
        self.couplings[self.slot(i, j, alpha, beta)]
    }

    pub fn set_coupling(&mut self, i: usize, j: usize, alpha: Axis, beta: Axis, value: f64) {
        assert!(i < j && j <= self.n_env, "coupling ({i}, {j}) out of range");
        let k = self.slot(i, j, alpha, beta);
        self.couplings[k] = value;
    }

    pub fn field(&self, site: usize) -> Vec3 {
        self.fields[site]
    }

    pub fn set_field(&mut self, site: usize, value: Vec3) {
        self.fields[site] = value;
    }

    /// Every `(i, j, α, β, J)` with `J != 0`.
    pub fn nonzero_couplings(&self) -> impl Iterator<Item = (usize, usize, Axis, Axis, f64)> + '_ {
        let m = self.n_qubits();
        (0..m).flat_map(move |i| {
            (i + 1..m).flat_map(move |j| {
                Axis::ALL.into_iter().flat_map(move |a| {
                    Axis::ALL.into_iter().filter_map(move |b| {
                        let v = self.coupling(i, j, a, b);
                        (v != 0.0).then_some((i, j, a, b, v))
                    })
                })
            })
        })
    }

    pub fn max_coupling_magnitude(&self) -> f64 {
        self.couplings.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Multiplies every coupling and field by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n_env: self.n_env,
            couplings: self.couplings.iter().map(|v| v * c).collect(),
            fields: self.fields.iter().map(|f| f.scale(c)).collect(),
        }
    }

    /// True when only `σ^z σ^z` couplings and z fields are present.
    pub fn is_diagonal(&self) -> bool {
        self.nonzero_couplings()
            .all(|(_, _, a, b, _)| a == Axis::Z && b == Axis::Z)
            && self.fields.iter().all(|f| f.x == 0.0 && f.y == 0.0)
    }

    /// The couplings `B_i` when the instance is exactly
    /// `σ^z_0 ⊗ Σ_i B_i σ^z_i`, the form whose evolution keeps product states
    /// singly branching.
    pub fn branching_fields(&self) -> Result<Vec<f64>> {
        for (i, j, a, b, _) in self.nonzero_couplings() {
            if i != 0 || a != Axis::Z || b != Axis::Z {
                return Err(Error::NotBranching(format!(
                    "coupling J[{i},{j}]({a:?},{b:?}) is not a system z-z term"
                )));
            }
        }
        if let Some(k) = self.fields.iter().position(|f| *f != Vec3::ZERO) {
            return Err(Error::NotBranching(format!("local field on qubit {k}")));
        }
        Ok((1..=self.n_env)
            .map(|j| self.coupling(0, j, Axis::Z, Axis::Z))
            .collect())
    }
}

/// Draws a numeric instance. Draw order: system–environment sources in
/// lexicographic `(α, j, β)`, then intra-environment sources in `(i, j, α, β)`,
/// then environment fields by site and axis. Each random source takes one
/// draw; zero and constant sources take none.
pub fn sample_instance(spec: &ModelSpec, seed: u64) -> Result<ModelInstance> {
    spec.validate()?;
    let n = spec.n_env;
    let mut rng = SeededRng::new(seed);
    let mut inst = ModelInstance::zeros(n);
    inst.fields[0] = spec.b0;
    for alpha in Axis::ALL {
        for site in 1..=n {
            for beta in Axis::ALL {
                let v = spec.sys_env(alpha, site, beta).draw(&mut rng);
                inst.set_coupling(0, site, alpha, beta, v);
            }
        }
    }
    for i in 1..=n {
        for j in i + 1..=n {
            for alpha in Axis::ALL {
                for beta in Axis::ALL {
                    let v = spec.intra_env(i, j, alpha, beta).draw(&mut rng);
                    inst.set_coupling(i, j, alpha, beta, v);
                }
            }
        }
    }
    for site in 1..=n {
        for axis in Axis::ALL {
            let v = spec.env_field(site, axis).draw(&mut rng);
            inst.fields[site].set(axis, v);
        }
    }
    Ok(inst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub pointer_basis: bool,
    pub continuous_support: bool,
    pub no_scrambling: bool,
    pub darwinism_supported: bool,
    pub pointer_direction: Option<Vec3>,
}

pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-9;

/// Checks the pointer-basis structure: the system–environment block
/// `M[α, (j, β)] = J^{αβ}_{0j}` must have rank at most one with its system
/// direction parallel to `B_0`; the environment must be free of couplings.
pub fn classify(
    instance: &ModelInstance,
    continuous_support: bool,
    tol: f64,
) -> Result<Classification> {
    if !(tol > 0.0 && tol.is_finite()) {
        return invalid(format!("tolerance must be > 0, got {tol}"));
    }
    let n = instance.n_env;
    let block = Mat::<f64>::from_fn(3, 3 * n, |a, col| {
        instance.coupling(0, col / 3 + 1, Axis::ALL[a], Axis::ALL[col % 3])
    });

    let direction = if block.norm_max() == 0.0 {
        None
    } else {
        let svd = block
            .thin_svd()
            .map_err(|e| Error::LinAlg(format!("svd failed: {e:?}")))?;
        let s = svd.S().column_vector();
        let rank_le_one = s[1] <= tol * s[0];
        let u = svd.U();
        let mut v = Vec3::new(u[(0, 0)], u[(1, 0)], u[(2, 0)]);
        v = v.scale(1.0 / v.norm());
        // sign convention: largest component positive
        let lead = [v.x, v.y, v.z]
            .into_iter()
            .fold(0.0f64, |m, c| if c.abs() > m.abs() { c } else { m });
        if lead < 0.0 {
            v = v.scale(-1.0);
        }
        Some((rank_le_one, v))
    };

    let b0 = instance.field(0);
    let (pointer_basis, pointer_direction) = match direction {
        None => (true, None),
        Some((false, _)) => (false, None),
        Some((true, v)) => {
            let parallel = b0.cross(&v).norm() <= tol * b0.norm();
            (parallel, parallel.then_some(v))
        }
    };

    let scale = instance.max_coupling_magnitude();
    let no_scrambling = instance
        .nonzero_couplings()
        .filter(|(i, ..)| *i >= 1)
        .all(|(.., v)| v.abs() <= tol * scale);

    Ok(Classification {
        pointer_basis,
        continuous_support,
        no_scrambling,
        darwinism_supported: pointer_basis && continuous_support && no_scrambling,
        pointer_direction,
    })
}

pub(crate) fn check_qubit_cap(n_qubits: usize, cap: usize) -> Result<()> {
    if n_qubits > cap {
        return Err(Error::DimensionCap {
            qubits: n_qubits,
            max: cap,
        });
    }
    Ok(())
}

/// Action of a single Pauli on bit value `bit`: (flips, phase).
#[inline]
fn pauli_action(axis: Axis, bit: usize) -> (bool, c64) {
    match (axis, bit) {
        (Axis::X, _) => (true, c64::new(1.0, 0.0)),
        (Axis::Y, 0) => (true, c64::new(0.0, 1.0)),
        (Axis::Y, _) => (true, c64::new(0.0, -1.0)),
        (Axis::Z, 0) => (false, c64::new(1.0, 0.0)),
        (Axis::Z, _) => (false, c64::new(-1.0, 0.0)),
    }
}

/// Dense matrix of `Σ_{i<j} J^{αβ}_{ij} σ^α_i σ^β_j + Σ_i B_i·σ_i`.
pub fn hamiltonian_matrix(instance: &ModelInstance) -> Result<Mat<c64>> {
    let m = instance.n_qubits();
    check_qubit_cap(m, DENSE_QUBIT_CAP)?;
    let dim = 1usize << m;
    let mut h = Mat::<c64>::zeros(dim, dim);

    for (i, j, a, b, coeff) in instance.nonzero_couplings() {
        for col in 0..dim {
            let (fi, pi) = pauli_action(a, (col >> i) & 1);
            let (fj, pj) = pauli_action(b, (col >> j) & 1);
            let row = col ^ ((fi as usize) << i) ^ ((fj as usize) << j);
            h[(row, col)] += pi * pj * coeff;
        }
    }
    for site in 0..m {
        let f = instance.field(site);
        for axis in Axis::ALL {
            let coeff = f.component(axis);
            if coeff == 0.0 {
                continue;
            }
            for col in 0..dim {
                let (flip, p) = pauli_action(axis, (col >> site) & 1);
                let row = col ^ ((flip as usize) << site);
                h[(row, col)] += p * coeff;
            }
        }
    }
    Ok(h)
}
