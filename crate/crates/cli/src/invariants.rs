//! Hodge and Betti numbers of the free quotient `T/G`, from the complex
//! representation of `G` alone.

use hyptor_core::exact_linear::{IntegerMatrix, Rat, RationalMatrix};
use num_complex::Complex;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::certificate::{torus_from_json, Certificate};
use crate::error::CliError;

/// Gaussian rationals `a + b·i` with `a, b ∈ ℚ`.
pub type Gaussian = Complex<Rat>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub g: usize,
    pub group_order: usize,
    /// `hodge[p][q] = h^{p,q}`.
    pub hodge: Vec<Vec<u64>>,
    /// `betti[k] = b_k`, `0 ≤ k ≤ 2g`.
    pub betti: Vec<u64>,
}

impl InvariantReport {
    /// Failed identities among `h^{p,q} = h^{q,p}`, `h^{g−p,g−q} = h^{p,q}`
    /// and `h^{0,0} = 1`.
    pub fn symmetry_violations(&self) -> Vec<String> {
        let g = self.g;
        let h = &self.hodge;
        let mut out = Vec::new();
        for p in 0..=g {
            for q in 0..=g {
                if h[p][q] != h[q][p] {
                    out.push(format!("h^{{{p},{q}}} != h^{{{q},{p}}}"));
                }
                if h[g - p][g - q] != h[p][q] {
                    out.push(format!("h^{{{},{}}} != h^{{{p},{q}}}", g - p, g - q));
                }
            }
        }
        if h[0][0] != 1 {
            out.push("h^{0,0} != 1".to_string());
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("group order {}\nHodge numbers h^{{p,q}} (row p, column q):\n", self.group_order);
        for row in &self.hodge {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>4}")).collect();
            out += &format!("{}\n", cells.join(""));
        }
        let betti: Vec<String> = self.betti.iter().map(u64::to_string).collect();
        out += &format!("Betti numbers: {}\n", betti.join(" "));
        out
    }
}

/// A real basis `v₁…v_g, Jv₁…Jv_g` built greedily from standard vectors.
fn complex_basis(j: &RationalMatrix) -> RationalMatrix {
    let n = j.rows();
    let mut columns: Vec<Vec<Rat>> = Vec::new();
    let mut chosen: Vec<Vec<Rat>> = Vec::new();
    for i in 0..n {
        if chosen.len() * 2 == n {
            break;
        }
        let mut e = vec![Rat::zero(); n];
        e[i] = Rat::one();
        let je = j.mul_vec(&e);
        let mut trial = columns.clone();
        trial.push(e.clone());
        trial.push(je.clone());
        if RationalMatrix::from_columns(n, &trial).rank() == trial.len() {
            columns = trial;
            chosen.push(e);
        }
    }
    let js: Vec<Vec<Rat>> = chosen.iter().map(|v| j.mul_vec(v)).collect();
    let all: Vec<Vec<Rat>> = chosen.into_iter().chain(js).collect();
    RationalMatrix::from_columns(n, &all)
}

/// The `g×g` complex matrix of `A` on `(ℝ^{2g}, J)` in the basis from
/// [`complex_basis`]: `A·v_k = Σⱼ (aⱼₖ + i·bⱼₖ)·vⱼ` where `i·v = J·v`.
pub fn complex_matrix(j: &RationalMatrix, a: &IntegerMatrix) -> Result<Vec<Vec<Gaussian>>, CliError> {
    let n = j.rows();
    if n % 2 != 0 || a.rows() != n || a.cols() != n {
        return Err(CliError::Invalid("linear part does not match the complex structure".into()));
    }
    let g = n / 2;
    let basis = complex_basis(j);
    let inverse = basis.inverse().ok_or_else(|| CliError::Invalid("complex structure is degenerate".into()))?;
    let coords = &(&inverse * &a.to_rational()) * &basis;
    Ok((0..g)
        .map(|r| (0..g).map(|c| Complex::new(coords[(r, c)].clone(), coords[(r + g, c)].clone())).collect())
        .collect())
}

pub fn determinant(m: &[Vec<Gaussian>]) -> Gaussian {
    let n = m.len();
    let mut a: Vec<Vec<Gaussian>> = m.to_vec();
    let mut det = Gaussian::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Gaussian::zero();
        };
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        let p = a[col][col].clone();
        det *= p.clone();
        for r in col + 1..n {
            let factor = a[r][col].clone() / p.clone();
            for c in col..n {
                let delta = factor.clone() * a[col][c].clone();
                a[r][c] -= delta;
            }
        }
    }
    det
}

/// `e_p` of the eigenvalues: the sum of the principal `p×p` minors.
pub fn elementary_symmetric(m: &[Vec<Gaussian>], p: usize) -> Gaussian {
    let n = m.len();
    subsets(n, p)
        .into_iter()
        .map(|idx| {
            let minor: Vec<Vec<Gaussian>> =
                idx.iter().map(|&r| idx.iter().map(|&c| m[r][c].clone()).collect()).collect();
            determinant(&minor)
        })
        .fold(Gaussian::zero(), |acc, d| acc + d)
}

fn subsets(n: usize, p: usize) -> Vec<Vec<usize>> {
    if p == 0 {
        return vec![Vec::new()];
    }
    if p > n {
        return Vec::new();
    }
    let mut with_last = subsets(n - 1, p - 1);
    for s in &mut with_last {
        s.push(n - 1);
    }
    let mut out = subsets(n - 1, p);
    out.extend(with_last);
    out
}

/// `h^{p,q} = (1/|G|)·Σ_g e_p(λ(g))·conj(e_q(λ(g)))` for the group with the
/// given linear parts (all elements, identity included).
pub fn hodge_numbers(j: &RationalMatrix, linear_parts: &[IntegerMatrix]) -> Result<InvariantReport, CliError> {
    if linear_parts.is_empty() {
        return Err(CliError::Invalid("a group has at least one element".into()));
    }
    let g = j.rows() / 2;
    let matrices = linear_parts.iter().map(|a| complex_matrix(j, a)).collect::<Result<Vec<_>, _>>()?;
    let e: Vec<Vec<Gaussian>> =
        matrices.iter().map(|m| (0..=g).map(|p| elementary_symmetric(m, p)).collect()).collect();
    let order = Rat::from_integer(linear_parts.len().into());
    let mut hodge = vec![vec![0u64; g + 1]; g + 1];
    for p in 0..=g {
        for q in 0..=g {
            let sum = e.iter().fold(Gaussian::zero(), |acc, ep| acc + ep[p].clone() * ep[q].conj());
            let value = Complex::new(sum.re / &order, sum.im / &order);
            hodge[p][q] = as_count(&value)
                .ok_or_else(|| CliError::Failed(format!("h^{{{p},{q}}} = {value} is not a nonnegative integer")))?;
        }
    }
    let betti = (0..=2 * g)
        .map(|k| (0..=g).filter(|&p| k >= p && k - p <= g).map(|p| hodge[p][k - p]).sum())
        .collect();
    Ok(InvariantReport { g, group_order: linear_parts.len(), hodge, betti })
}

fn as_count(z: &Gaussian) -> Option<u64> {
    if !z.im.is_zero() || !z.re.is_integer() || z.re.is_negative() {
        return None;
    }
    z.re.to_integer().to_u64()
}

/// Invariants of a certificate's group. The caller is expected to have
/// verified the certificate.
pub fn invariants_from_certificate(cert: &Certificate) -> Result<InvariantReport, CliError> {
    let torus = torus_from_json(&cert.torus)?.map_err(|e| CliError::Failed(format!("torus: {e}")))?;
    let linear = cert
        .elements
        .iter()
        .map(|e| e.linear.to_integer(&e.word))
        .collect::<Result<Vec<_>, _>>()?;
    hodge_numbers(torus.complex_structure(), &linear)
}
