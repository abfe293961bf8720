//! JSON problem files.
//!
//! Complex numbers are `[re, im]` pairs (a bare number is read as a real
//! entry), matrices are lists of rows, and an algebra element is one matrix
//! per block.

use ncdist_core::algebra::{AlgebraElement, FiniteAlgebra, Projection, State, StateSet};
use ncdist_core::classical::FiniteMetricSpace;
use ncdist_core::numerics::{CMatrix, C64};
use ncdist_core::qmetric::{from_metric, from_metric_pruned, Combine, DerivationFamily, DerivationMap, Seminorm, SeminormKind};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    pub fn value(&self) -> C64 {
        match *self {
            Entry::Real(x) => C64::new(x, 0.0),
            Entry::Complex([re, im]) => C64::new(re, im),
        }
    }
}

impl From<C64> for Entry {
    fn from(z: C64) -> Self {
        Entry::Complex([z.re, z.im])
    }
}

/// Row-major matrix.
pub type MatrixSpec = Vec<Vec<Entry>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ElementSpec {
    /// Values at the points of a commutative algebra.
    Diagonal { diag: Vec<f64> },
    Blocks(Vec<MatrixSpec>),
}

impl ElementSpec {
    pub fn from_element(a: &AlgebraElement) -> Self {
        ElementSpec::Blocks(a.blocks().iter().map(matrix_spec).collect())
    }

    fn blocks(&self, algebra: &FiniteAlgebra, at: &str) -> Result<Vec<CMatrix>, CliError> {
        match self {
            ElementSpec::Diagonal { diag } => {
                Ok(AlgebraElement::diagonal(algebra, diag).map_err(|e| invalid(at, e))?.blocks().to_vec())
            }
            ElementSpec::Blocks(bs) => {
                if bs.len() != algebra.num_blocks() {
                    return Err(invalid(at, format!("{} blocks given, the algebra has {}", bs.len(), algebra.num_blocks())));
                }
                bs.iter()
                    .enumerate()
                    .map(|(k, rows)| {
                        let n = algebra.blocks()[k];
                        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                            return Err(invalid(&format!("{at}[{k}]"), format!("block must be {n}x{n}")));
                        }
                        let data = rows.iter().flatten().map(Entry::value).collect();
                        Ok(CMatrix::from_row_major(n, n, data).expect("shape checked"))
                    })
                    .collect()
            }
        }
    }

    pub fn element(&self, algebra: &FiniteAlgebra, at: &str) -> Result<AlgebraElement, CliError> {
        AlgebraElement::new(algebra, self.blocks(algebra, at)?).map_err(|e| invalid(at, e))
    }

    pub fn state(&self, algebra: &FiniteAlgebra, at: &str) -> Result<State, CliError> {
        State::new(algebra, self.blocks(algebra, at)?).map_err(|e| invalid(at, e))
    }
}

fn matrix_spec(m: &CMatrix) -> MatrixSpec {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)].into()).collect()).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombineSpec {
    #[default]
    Max,
    Sum,
}

impl From<CombineSpec> for Combine {
    fn from(c: CombineSpec) -> Self {
        match c {
            CombineSpec::Max => Combine::Max,
            CombineSpec::Sum => Combine::Sum,
        }
    }
}

impl From<Combine> for CombineSpec {
    fn from(c: Combine) -> Self {
        match c {
            Combine::Max => CombineSpec::Max,
            Combine::Sum => CombineSpec::Sum,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub h: ElementSpec,
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    /// Block sizes of the target algebra.
    pub target: Vec<usize>,
    /// `realified_dim(target) × param_dim`, row-major.
    pub matrix: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeminormSpec {
    /// Lipschitz seminorm of a metric on the points of a commutative algebra.
    Metric {
        distances: Vec<Vec<f64>>,
        #[serde(default)]
        pruned: bool,
    },
    /// `L(a) = min Σ c_k |t_k|` over `a = Σ t_k h_k` modulo scalars.
    Polyhedral { generators: Vec<GeneratorSpec> },
    /// `L(a) = max_j ‖i[D_j, a]‖` (or the sum).
    Commutator {
        d: Vec<ElementSpec>,
        #[serde(default)]
        combine: CombineSpec,
    },
    /// A general derivation family in realified coordinates.
    Derivation {
        param_dim: usize,
        realize: Vec<f64>,
        maps: Vec<MapSpec>,
        #[serde(default)]
        combine: CombineSpec,
    },
}

impl SeminormSpec {
    pub fn from_seminorm(l: &Seminorm) -> Self {
        match l.kind() {
            SeminormKind::Polyhedral { generators } => SeminormSpec::Polyhedral {
                generators: generators.iter().map(|g| GeneratorSpec { h: ElementSpec::from_element(&g.h), c: g.c }).collect(),
            },
            SeminormKind::Derivation(f) => SeminormSpec::Derivation {
                param_dim: f.param_dim,
                realize: f.realize.clone(),
                maps: f.maps.iter().map(|m| MapSpec { target: m.target.blocks().to_vec(), matrix: m.matrix.clone() }).collect(),
                combine: f.combine.into(),
            },
        }
    }

    pub fn build(&self, algebra: &FiniteAlgebra) -> Result<Seminorm, CliError> {
        let at = "seminorm";
        match self {
            SeminormSpec::Metric { distances, pruned } => {
                let x = FiniteMetricSpace::new(distances.clone()).map_err(|e| invalid("seminorm.distances", e))?;
                if !algebra.is_commutative() || algebra.num_blocks() != x.size() {
                    return Err(invalid(at, format!("a metric on {} points needs the commutative algebra C^{}", x.size(), x.size())));
                }
                let l = if *pruned { from_metric_pruned(&x) } else { from_metric(&x) };
                l.map_err(|e| invalid(at, e))
            }
            SeminormSpec::Polyhedral { generators } => {
                let gens = generators
                    .iter()
                    .enumerate()
                    .map(|(k, g)| Ok((g.h.element(algebra, &format!("seminorm.generators[{k}].h"))?, g.c)))
                    .collect::<Result<Vec<_>, CliError>>()?;
                Seminorm::polyhedral(algebra, gens).map_err(|e| invalid(at, e))
            }
            SeminormSpec::Commutator { d, combine } => {
                let ds = d
                    .iter()
                    .enumerate()
                    .map(|(k, e)| e.element(algebra, &format!("seminorm.d[{k}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                Seminorm::commutator(algebra, &ds, (*combine).into()).map_err(|e| invalid(at, e))
            }
            SeminormSpec::Derivation { param_dim, realize, maps, combine } => {
                let maps = maps
                    .iter()
                    .enumerate()
                    .map(|(k, m)| {
                        let target = FiniteAlgebra::new(m.target.clone()).map_err(|e| invalid(&format!("seminorm.maps[{k}].target"), e))?;
                        Ok(DerivationMap { target, matrix: m.matrix.clone() })
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                let family = DerivationFamily { param_dim: *param_dim, realize: realize.clone(), maps, combine: (*combine).into() };
                Seminorm::derivation(algebra, family).map_err(|e| invalid(at, e))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    /// `F_p = {μ : μ(p) = 1}`.
    Face { projection: ElementSpec },
    /// Face of the indicator of a set of points (commutative algebras).
    Subset { members: Vec<usize> },
    /// `{μ : μ(c_k) = z_k}`.
    Moment { constraints: Vec<ElementSpec>, targets: Vec<Entry> },
    /// A moment set whose targets form a unital character.
    Character { basis: Vec<ElementSpec>, values: Vec<Entry> },
    Whole,
}

impl SetSpec {
    pub fn build(&self, algebra: &FiniteAlgebra, at: &str) -> Result<StateSet, CliError> {
        let elements = |es: &[ElementSpec], field: &str| {
            es.iter()
                .enumerate()
                .map(|(k, e)| e.element(algebra, &format!("{at}.{field}[{k}]")))
                .collect::<Result<Vec<_>, _>>()
        };
        let values = |vs: &[Entry]| vs.iter().map(Entry::value).collect::<Vec<_>>();
        match self {
            SetSpec::Face { projection } => {
                let p = Projection::new(algebra, projection.blocks(algebra, at)?).map_err(|e| invalid(at, e))?;
                Ok(StateSet::face_from_projection(&p)?)
            }
            SetSpec::Subset { members } => {
                let n = algebra.num_blocks();
                let mut ind = vec![false; n];
                for &m in members {
                    *ind.get_mut(m).ok_or_else(|| invalid(at, format!("point {m} out of range 0..{n}")))? = true;
                }
                let p = Projection::indicator(algebra, &ind).map_err(|e| invalid(at, e))?;
                Ok(StateSet::face_from_projection(&p)?)
            }
            SetSpec::Moment { constraints, targets } => {
                StateSet::moment(algebra, elements(constraints, "constraints")?, values(targets)).map_err(|e| invalid(at, e))
            }
            SetSpec::Character { basis, values: vs } => {
                StateSet::face_from_character(algebra, elements(basis, "basis")?, values(vs)).map_err(|e| invalid(at, e))
            }
            SetSpec::Whole => Ok(StateSet::whole(algebra)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Rho,
    Infimum,
    Hausdorff,
    Lip,
    L1l2,
}

/// Per-run overrides of solver tolerances.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_cuts: Option<usize>,
    pub box_bound: Option<f64>,
    pub first_batch: Option<usize>,
    pub plateau: Option<f64>,
    pub max_samples: Option<usize>,
    /// Pure-state pairs sampled for the derivation `L1` lower bound.
    pub l1_samples: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    /// Block sizes; `[1, 1, 1]` is `C^3`, `[2]` is `M_2`.
    pub algebra: Vec<usize>,
    pub seminorm: SeminormSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub states: Vec<ElementSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sets: Vec<SetSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub elements: Vec<ElementSpec>,
    /// Index pairs to evaluate; all pairs `i < j` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
}

impl ProblemFile {
    /// Parses a problem, reporting the line, column and field path of the
    /// first schema error.
    pub fn parse(text: &str, path: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            CliError::Schema { path: path.into(), line: inner.line(), column: inner.column(), field, message: inner.to_string() }
        })
    }

    pub fn algebra(&self) -> Result<FiniteAlgebra, CliError> {
        FiniteAlgebra::new(self.algebra.clone()).map_err(|e| invalid("algebra", e))
    }

    /// The requested pairs, checked against `count` items.
    pub fn pairs_for(&self, count: usize, what: &str) -> Result<Vec<(usize, usize)>, CliError> {
        match &self.pairs {
            Some(ps) => {
                for &(i, j) in ps {
                    if i >= count || j >= count {
                        return Err(invalid("pairs", format!("pair ({i}, {j}) is out of range for {count} {what}")));
                    }
                }
                Ok(ps.clone())
            }
            None => Ok((0..count).flat_map(|i| (i + 1..count).map(move |j| (i, j))).collect()),
        }
    }
}

pub(crate) fn invalid(at: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(format!("{at}: {e}"))
}
