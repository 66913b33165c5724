//! Relaxed Hamiltonian losses and exact discrete objectives.
//!
//! | kind | relaxed loss | discrete Hamiltonian |
//! |------|--------------|----------------------|
//! | MIS  | `−Σ p_i + P·Σ_E p_i p_j` | `−|S| + P·violations` |
//! | MC   | `Σ_E (2 p_i p_j − p_i − p_j)` | `−N_MC` |
//! | GC   | `Σ_E Σ_c p_ic p_jc` | `N_GC` (conflicting edges) |
//! | QUBO | `pᵀQp` | `xᵀQx` |
//!
//! Edge sums run over the canonical edge list, so each undirected edge is
//! counted once.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    Mis,
    MaxCut,
    Coloring,
    Qubo,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::Mis => "mis",
            ProblemKind::MaxCut => "mc",
            ProblemKind::Coloring => "gc",
            ProblemKind::Qubo => "qubo",
        })
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mis" => Ok(ProblemKind::Mis),
            "mc" | "maxcut" => Ok(ProblemKind::MaxCut),
            "gc" | "coloring" => Ok(ProblemKind::Coloring),
            "qubo" => Ok(ProblemKind::Qubo),
            _ => Err(Error::param(format!("unknown problem `{s}`"))),
        }
    }
}

pub const DEFAULT_MIS_PENALTY: f64 = 2.0;

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemEncoding<T> {
    Mis { penalty: T },
    MaxCut,
    Coloring { colors: usize },
    /// Explicit symmetric coefficient matrix over the nodes.
    Qubo { q: Matrix<T> },
}

impl<T: Scalar> ProblemEncoding<T> {
    pub fn mis(penalty: T) -> Result<Self> {
        let e = ProblemEncoding::Mis { penalty };
        e.validate()?;
        Ok(e)
    }

    pub fn coloring(colors: usize) -> Result<Self> {
        let e = ProblemEncoding::Coloring { colors };
        e.validate()?;
        Ok(e)
    }

    pub fn qubo(q: Matrix<T>) -> Result<Self> {
        let e = ProblemEncoding::Qubo { q };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProblemEncoding::Mis { penalty } if !(*penalty > T::zero() && penalty.is_finite()) => {
                Err(Error::param(format!("MIS penalty must be positive, got {penalty}")))
            }
            ProblemEncoding::Coloring { colors } if *colors < 2 => {
                Err(Error::param(format!("need at least 2 colors, got {colors}")))
            }
            ProblemEncoding::Qubo { q } => {
                if q.rows() != q.cols() {
                    return Err(Error::param("QUBO matrix must be square"));
                }
                for i in 0..q.rows() {
                    for j in 0..i {
                        if q[(i, j)] != q[(j, i)] {
                            return Err(Error::param("QUBO matrix must be symmetric"));
                        }
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn kind(&self) -> ProblemKind {
        match self {
            ProblemEncoding::Mis { .. } => ProblemKind::Mis,
            ProblemEncoding::MaxCut => ProblemKind::MaxCut,
            ProblemEncoding::Coloring { .. } => ProblemKind::Coloring,
            ProblemEncoding::Qubo { .. } => ProblemKind::Qubo,
        }
    }

    /// Width of the network output (1 for binary problems, q for coloring).
    pub fn output_width(&self) -> usize {
        match self {
            ProblemEncoding::Coloring { colors } => *colors,
            _ => 1,
        }
    }

    /// Number of values each node's decision can take.
    pub fn domain_size(&self) -> usize {
        match self {
            ProblemEncoding::Coloring { colors } => *colors,
            _ => 2,
        }
    }

    /// Relaxed loss and `∂loss/∂p` without any input validation.
    pub fn evaluate(&self, p: &Matrix<T>, g: &Graph) -> (T, Matrix<T>) {
        let n = g.n_nodes();
        let mut grad = Matrix::zeros(p.rows(), p.cols());
        let two = T::lit(2.0);
        match self {
            ProblemEncoding::Mis { penalty } => {
                let mut sum = T::zero();
                let mut pairs = T::zero();
                for i in 0..n {
                    sum += p[(i, 0)];
                }
                for &(u, v) in g.edges() {
                    pairs += p[(u, 0)] * p[(v, 0)];
                }
                for i in 0..n {
                    let nb: T = g.neighbors(i).iter().map(|&j| p[(j, 0)]).sum();
                    grad[(i, 0)] = -T::one() + *penalty * nb;
                }
                (-sum + *penalty * pairs, grad)
            }
            ProblemEncoding::MaxCut => {
                let mut loss = T::zero();
                for &(u, v) in g.edges() {
                    let (a, b) = (p[(u, 0)], p[(v, 0)]);
                    loss += two * a * b - a - b;
                }
                for i in 0..n {
                    grad[(i, 0)] = g
                        .neighbors(i)
                        .iter()
                        .map(|&j| two * p[(j, 0)] - T::one())
                        .sum();
                }
                (loss, grad)
            }
            ProblemEncoding::Coloring { .. } => {
                let mut loss = T::zero();
                for &(u, v) in g.edges() {
                    for (&a, &b) in p.row(u).iter().zip(p.row(v)) {
                        loss += a * b;
                    }
                }
                for i in 0..n {
                    for &j in g.neighbors(i) {
                        for (d, &b) in grad.row_mut(i).iter_mut().zip(p.row(j)) {
                            *d += b;
                        }
                    }
                }
                (loss, grad)
            }
            ProblemEncoding::Qubo { q } => {
                let mut loss = T::zero();
                for i in 0..n {
                    let qp: T = q.row(i).iter().zip(0..n).map(|(&c, j)| c * p[(j, 0)]).sum();
                    loss += p[(i, 0)] * qp;
                    grad[(i, 0)] = two * qp;
                }
                (loss, grad)
            }
        }
    }
}

/// Relaxed loss and its gradient with respect to the soft assignment.
pub fn loss_and_grad<T: Scalar>(
    enc: &ProblemEncoding<T>,
    p: &Matrix<T>,
    g: &Graph,
) -> Result<(T, Matrix<T>)> {
    enc.validate()?;
    let width = enc.output_width();
    if p.shape() != (g.n_nodes(), width) {
        return Err(Error::contract(format!(
            "soft assignment shape {:?}, expected ({}, {width})",
            p.shape(),
            g.n_nodes()
        )));
    }
    if let ProblemEncoding::Qubo { q } = enc {
        if q.rows() != g.n_nodes() {
            return Err(Error::contract("QUBO matrix size differs from node count"));
        }
    }
    if let Some(x) = p.as_slice().iter().find(|&&x| !(x >= T::zero() && x <= T::one())) {
        return Err(Error::contract(format!("probability {x} outside [0, 1]")));
    }
    if width > 1 {
        let tol = T::lit(1e-6);
        for i in 0..p.rows() {
            let s: T = p.row(i).iter().copied().sum();
            if (s - T::one()).abs() > tol {
                return Err(Error::contract(format!("row {i} sums to {s}, expected 1")));
            }
        }
    }
    Ok(enc.evaluate(p, g))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveReport {
    pub kind: ProblemKind,
    /// `N_MIS` (selected nodes), `N_MC` (cut edges), `N_GC` (conflicting
    /// edges), or the number of ones for QUBO.
    pub objective: u64,
    /// Edges inside the selected set for MIS; equals `objective` for GC.
    pub violations: u64,
    /// Hamiltonian at the discrete point; lower is better for every kind.
    pub hamiltonian: f64,
}

impl ObjectiveReport {
    pub fn is_better_than(&self, other: &ObjectiveReport) -> bool {
        self.hamiltonian < other.hamiltonian
    }
}

impl fmt::Display for ObjectiveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            ProblemKind::Mis => "N_MIS",
            ProblemKind::MaxCut => "N_MC",
            ProblemKind::Coloring => "N_GC",
            ProblemKind::Qubo => "ones",
        };
        write!(
            f,
            "{name}={} violations={} H={}",
            self.objective, self.violations, self.hamiltonian
        )
    }
}

pub fn discrete_objective<T: Scalar>(
    enc: &ProblemEncoding<T>,
    assignment: &[usize],
    g: &Graph,
) -> Result<ObjectiveReport> {
    if assignment.len() != g.n_nodes() {
        return Err(Error::contract(format!(
            "assignment length {} != node count {}",
            assignment.len(),
            g.n_nodes()
        )));
    }
    let domain = enc.domain_size();
    if let Some(&x) = assignment.iter().find(|&&x| x >= domain) {
        return Err(Error::contract(format!("value {x} outside 0..{domain}")));
    }
    let selected = |i: usize| assignment[i] == 1;
    let report = match enc {
        ProblemEncoding::Mis { penalty } => {
            let size = assignment.iter().filter(|&&x| x == 1).count() as u64;
            let viol = g.edges().iter().filter(|&&(u, v)| selected(u) && selected(v)).count() as u64;
            let h = -(size as f64) + penalty.as_f64() * viol as f64;
            ObjectiveReport {
                kind: ProblemKind::Mis,
                objective: size,
                violations: viol,
                hamiltonian: h,
            }
        }
        ProblemEncoding::MaxCut => {
            let cut = g.edges().iter().filter(|&&(u, v)| selected(u) != selected(v)).count() as u64;
            ObjectiveReport {
                kind: ProblemKind::MaxCut,
                objective: cut,
                violations: 0,
                hamiltonian: -(cut as f64),
            }
        }
        ProblemEncoding::Coloring { .. } => {
            let conflicts = g
                .edges()
                .iter()
                .filter(|&&(u, v)| assignment[u] == assignment[v])
                .count() as u64;
            ObjectiveReport {
                kind: ProblemKind::Coloring,
                objective: conflicts,
                violations: conflicts,
                hamiltonian: conflicts as f64,
            }
        }
        ProblemEncoding::Qubo { q } => {
            if q.rows() != g.n_nodes() {
                return Err(Error::contract("QUBO matrix size differs from node count"));
            }
            let ones: Vec<usize> = (0..g.n_nodes()).filter(|&i| selected(i)).collect();
            let mut h = T::zero();
            for &i in &ones {
                let row: T = ones.iter().map(|&j| q[(i, j)]).sum();
                h += row;
            }
            ObjectiveReport {
                kind: ProblemKind::Qubo,
                objective: ones.len() as u64,
                violations: 0,
                hamiltonian: h.as_f64(),
            }
        }
    };
    Ok(report)
}

pub const BRUTE_FORCE_MAX_BINARY_NODES: usize = 20;
pub const BRUTE_FORCE_MAX_STATES: u128 = 10_000_000;

/// Global optimum by exhaustive enumeration. Ties keep the first assignment
/// in lexicographic (node 0 least significant) order.
pub fn brute_force<T: Scalar>(
    enc: &ProblemEncoding<T>,
    g: &Graph,
) -> Result<(Vec<usize>, ObjectiveReport)> {
    let n = g.n_nodes();
    let q = enc.domain_size();
    if q == 2 && n > BRUTE_FORCE_MAX_BINARY_NODES {
        return Err(Error::TooLarge(format!(
            "{n} binary variables (limit {BRUTE_FORCE_MAX_BINARY_NODES})"
        )));
    }
    let states = (q as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if states > BRUTE_FORCE_MAX_STATES.max(1 << BRUTE_FORCE_MAX_BINARY_NODES) {
        return Err(Error::TooLarge(format!("{q}^{n} states")));
    }
    let mut x = vec![0usize; n];
    let mut best_x = x.clone();
    let mut best = discrete_objective(enc, &x, g)?;
    for _ in 1..states {
        // Odometer increment.
        for v in x.iter_mut() {
            *v += 1;
            if *v < q {
                break;
            }
            *v = 0;
        }
        let r = discrete_objective(enc, &x, g)?;
        if r.is_better_than(&best) {
            best = r;
            best_x.copy_from_slice(&x);
        }
    }
    Ok((best_x, best))
}
