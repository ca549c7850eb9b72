//! Donoghue m-functions of self-adjoint extensions in the canonical basis of `N_i`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::deficiency::{
    deficiency_basis_with, orthonormal_basis_with, weyl_solution_with, DeficiencyBasis, EndPairs,
    OrthonormalDeficiencyBasis,
};
use crate::error::{Error, Result};
use crate::krein::{krein_vn_reduced, reduced_coupling, ReducedCoupling};
use crate::linalg::ComplexMat2;
use crate::problem::{ExtensionSpec, SlProblem};

type C = Complex64;

const I: C = C::new(0.0, 1.0);
/// Smallest admissible `|Im z|`.
pub const MIN_IM: f64 = 1e-6;

/// `M(z)` in the basis `{φ(i)}` (dim 1) or `{v₁(i), v₂(i)}` (dim 2); dim 1 uses `entries.m[0][0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DonoghueMatrix {
    pub z: C,
    pub dim: usize,
    pub entries: ComplexMat2,
}

impl DonoghueMatrix {
    pub fn scalar(z: C, m: C) -> Self {
        DonoghueMatrix { z, dim: 1, entries: ComplexMat2::new(m, C::default(), C::default(), C::default()) }
    }

    pub fn matrix(z: C, m: ComplexMat2) -> Self {
        DonoghueMatrix { z, dim: 2, entries: m }
    }

    pub fn entry(&self, i: usize, j: usize) -> C {
        self.entries.m[i][j]
    }

    /// Row-major entries, `dim²` of them.
    pub fn flat(&self) -> Vec<C> {
        if self.dim == 1 {
            vec![self.entries.m[0][0]]
        } else {
            self.entries.m.iter().flatten().copied().collect()
        }
    }

    /// Eigenvalues of `[Im z]⁻¹ Im M(z)`, ascending.
    pub fn normalized_imag_eigenvalues(&self) -> Vec<f64> {
        let s = 1.0 / self.z.im;
        if self.dim == 1 {
            vec![self.entries.m[0][0].im * s]
        } else {
            let h = self.entries.imag_part().scale(C::new(s, 0.0));
            let e = h.hermitian_eigenvalues();
            vec![e[0].min(e[1]), e[0].max(e[1])]
        }
    }

    pub fn sub_norm(&self, other: &DonoghueMatrix) -> f64 {
        self.flat().iter().zip(other.flat()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖M ∓ iI‖` at `z = ±i`.
    pub fn normalization_residual(&self) -> f64 {
        let target = if self.z.im > 0.0 { I } else { -I };
        let id = DonoghueMatrix {
            z: self.z,
            dim: self.dim,
            entries: ComplexMat2::scalar(target),
        };
        self.sub_norm(&id)
    }
}

fn check_z(z: C) -> Result<()> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::InvalidParameter(format!("z = {z}")));
    }
    if z.im.abs() < MIN_IM {
        return Err(Error::NearRealAxis { im: z.im });
    }
    Ok(())
}

fn exact_pm_i(z: C) -> Option<C> {
    if z == I {
        Some(I)
    } else if z == -I {
        Some(-I)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// One limit-circle endpoint

/// Weyl data shared across a z-grid: `m₀(i)`.
pub struct OneLcDonoghue {
    pub problem: SlProblem,
    pub pairs: EndPairs,
    pub m_i: C,
}

impl OneLcDonoghue {
    pub fn new(problem: &SlProblem) -> Result<Self> {
        let pairs = EndPairs::for_problem(problem)?;
        let m_i = weyl_solution_with(problem, &pairs, I)?.m0;
        if !(m_i.im > 0.0) {
            return Err(Error::NonPositiveNorm { value: m_i.im });
        }
        Ok(OneLcDonoghue { problem: problem.clone(), pairs, m_i })
    }

    pub fn m0(&self, z: C) -> Result<C> {
        Ok(weyl_solution_with(&self.problem, &self.pairs, z)?.m0)
    }

    pub fn eval(&self, alpha: f64, z: C) -> Result<DonoghueMatrix> {
        ExtensionSpec::OneEndpoint { alpha }.check()?;
        check_z(z)?;
        if let Some(v) = exact_pm_i(z) {
            return Ok(DonoghueMatrix::scalar(z, v));
        }
        let m = self.m0(z)?;
        one_lc_entry(alpha, self.m_i, m).map(|v| DonoghueMatrix::scalar(z, v))
    }
}

/// Entry from `m₀(i)` and `m₀(z)`:
/// `−i + [m(z) − m(−i)]/Im m(i)`, less `[m(z) − m(−i)][m(z) − m(i)] / (Im m(i) [cot α + m(z)])` for `α > 0`.
pub fn one_lc_entry(alpha: f64, m_i: C, m: C) -> Result<C> {
    let n2 = m_i.im;
    let m_mi = m_i.conj();
    let base = -I + (m - m_mi) / n2;
    if alpha == 0.0 {
        return Ok(base);
    }
    let den = alpha.cos() / alpha.sin() + m;
    if den.norm() < 1e-12 {
        return Err(Error::DegenerateDenominator);
    }
    Ok(base - (m - m_mi) * (m - m_i) / (n2 * den))
}

pub fn donoghue_one_lc(problem: &SlProblem, spec: &ExtensionSpec, z: C) -> Result<DonoghueMatrix> {
    match *spec {
        ExtensionSpec::OneEndpoint { alpha } => OneLcDonoghue::new(problem)?.eval(alpha, z),
        _ => Err(Error::Unsupported("one-endpoint assembly needs a OneEndpoint spec".into())),
    }
}

// ---------------------------------------------------------------------------
// Two limit-circle endpoints

/// `W_{j,k}(z) = W(v_j(−i), v_k(z))|_a^b`, `W^Kr_{ℓ,k}(z) = W(v_ℓ(−i), u_k(z))|_a^b` and
/// overlaps `O_{j,n}(z) = (u_j(z̄), v_n(i))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WronskianMatrices {
    pub w: ComplexMat2,
    pub w_kr: ComplexMat2,
    pub overlaps: ComplexMat2,
}

/// Endpoint data of `u_q(ζ)`: `(ũ(a), ũ′(a), ũ(b), ũ′(b))`.
fn u_ends(data: &[C; 4], q: usize) -> [C; 4] {
    let one = C::new(1.0, 0.0);
    let zero = C::default();
    match q {
        0 => [zero, data[0], one, data[1]],
        _ => [one, data[2], zero, data[3]],
    }
}

/// `W(u_q(ζ₁), u_p(ζ₂))|_a^b` from boundary data.
pub fn bracket(d1: &[C; 4], q: usize, d2: &[C; 4], p: usize) -> C {
    let f = u_ends(d1, q);
    let g = u_ends(d2, p);
    (f[2] * g[3] - f[3] * g[2]) - (f[0] * g[1] - f[1] * g[0])
}

/// Printed closed forms for `W` and `W^Kr`, with overlaps by the Wronskian reduction.
pub fn wronskian_matrices(ortho: &OrthonormalDeficiencyBasis, data_z: [C; 4], z: C) -> WronskianMatrices {
    let (c1, c2, mu) = (ortho.c1, ortho.c2, ortho.mu);
    let [u1a, u1b, u2a, u2b] = data_z;
    let [n1a, n1b, n2a, n2b] = ortho.at_minus_i.data;
    let w = ComplexMat2::new(
        c1 * c1 * (u1b - n1b),
        c1 * c2 * (mu * (n1b - u1b) + u2b + n1a),
        -c1 * c2 * (mu * (u1b - n1b) + n2b + u1a),
        c2 * c2 * ((n2b - u2b + mu * (u1b - n1b)) * mu + n2a - u2a + mu * (u1a - n1a)),
    );
    let w_kr = ComplexMat2::new(
        c1 * (u1b - n1b),
        c1 * (u2b + n1a),
        -c2 * (mu * (u1b - n1b) + n2b + u1a),
        -c2 * (mu * (u2b + n1a) + u2a - n2a),
    );
    let t = ortho.transform();
    let di = ortho.at_i.data;
    let mut overlaps = ComplexMat2::zero();
    for j in 0..2 {
        for n in 0..2 {
            let mut s = C::default();
            for p in 0..2 {
                s += t[n][p] * bracket(&data_z, j, &di, p);
            }
            overlaps.m[j][n] = s / (z - I);
        }
    }
    WronskianMatrices { w, w_kr, overlaps }
}

/// Same matrices from generic boundary-data brackets of the basis combinations.
pub fn wronskian_matrices_generic(ortho: &OrthonormalDeficiencyBasis, data_z: [C; 4], z: C) -> WronskianMatrices {
    let t = ortho.transform();
    let dm = ortho.at_minus_i.data;
    let di = ortho.at_i.data;
    let mut w = ComplexMat2::zero();
    let mut w_kr = ComplexMat2::zero();
    let mut overlaps = ComplexMat2::zero();
    for j in 0..2 {
        for k in 0..2 {
            let mut s = C::default();
            let mut s_kr = C::default();
            let mut s_o = C::default();
            for q in 0..2 {
                s_kr += t[j][q] * bracket(&dm, q, &data_z, k);
                s_o += t[k][q] * bracket(&data_z, j, &di, q);
                for p in 0..2 {
                    s += t[j][q] * t[k][p] * bracket(&dm, q, &data_z, p);
                }
            }
            w.m[j][k] = s;
            w_kr.m[j][k] = s_kr;
            overlaps.m[j][k] = s_o / (z - I);
        }
    }
    WronskianMatrices { w, w_kr, overlaps }
}

/// Assembly from the orthonormal basis, boundary data at `z` and a coupling (`None` for `T_{0,0}`).
pub fn assemble_two_lc(
    wm: &WronskianMatrices,
    coupling: Option<&ReducedCoupling>,
    z: C,
) -> Result<ComplexMat2> {
    let mut m = ComplexMat2::scalar(-I) - wm.w;
    let Some(cp) = coupling else {
        return Ok(m);
    };
    let kinv = cp.inverse()?;
    // right_kr[ℓ][k] = Σ_p right[k][p] W^Kr_{ℓ,p}; left_o[j][n] = Σ_q left[j][q] O_{q,n}
    let mut right_kr = [[C::default(); 2]; 2];
    let mut left_o = [[C::default(); 2]; 2];
    for a in 0..cp.dim {
        for b in 0..2 {
            for p in 0..2 {
                right_kr[b][a] += cp.right[a][p] * wm.w_kr.m[b][p];
                left_o[a][b] += cp.left[a][p] * wm.overlaps.m[p][b];
            }
        }
    }
    for l in 0..2 {
        for n in 0..2 {
            let mut s = C::default();
            for j in 0..cp.dim {
                for k in 0..cp.dim {
                    s += kinv.m[j][k] * right_kr[l][k] * left_o[j][n];
                }
            }
            m.m[l][n] += (I - z) * s;
        }
    }
    Ok(m)
}

/// Orthonormal basis and `z = 0` data shared across a z-grid.
pub struct TwoLcDonoghue {
    pub problem: SlProblem,
    pub ortho: OrthonormalDeficiencyBasis,
}

/// Extension for the two-endpoint assembly; the Krein–von Neumann case uses its own coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TwoLcExtension {
    Spec(ExtensionSpec),
    KreinVonNeumann { at_zero: [C; 4] },
}

impl TwoLcDonoghue {
    pub fn new(problem: &SlProblem) -> Result<Self> {
        let pairs = EndPairs::for_problem(problem)?;
        let ortho = orthonormal_basis_with(problem, pairs)?;
        Ok(TwoLcDonoghue { problem: problem.clone(), ortho })
    }

    pub fn basis_at(&self, z: C) -> Result<DeficiencyBasis> {
        deficiency_basis_with(&self.problem, &self.ortho.pairs, z)
    }

    pub fn wronskians(&self, z: C) -> Result<WronskianMatrices> {
        let b = self.basis_at(z)?;
        Ok(wronskian_matrices(&self.ortho, b.data, z))
    }

    pub fn eval(&self, spec: &ExtensionSpec, z: C) -> Result<DonoghueMatrix> {
        self.eval_ext(&TwoLcExtension::Spec(*spec), z)
    }

    pub fn eval_ext(&self, ext: &TwoLcExtension, z: C) -> Result<DonoghueMatrix> {
        if let TwoLcExtension::Spec(spec) = ext {
            spec.check()?;
            if !spec.is_two_endpoint() {
                return Err(Error::Unsupported("two-endpoint assembly needs a two-endpoint spec".into()));
            }
        }
        check_z(z)?;
        if let Some(v) = exact_pm_i(z) {
            return Ok(DonoghueMatrix::matrix(z, ComplexMat2::scalar(v)));
        }
        self.assemble(ext, z)
    }

    /// Several extensions at one `z`, sharing the deficiency basis.
    pub fn eval_all(&self, exts: &[TwoLcExtension], z: C) -> Result<Vec<Result<DonoghueMatrix>>> {
        check_z(z)?;
        if let Some(v) = exact_pm_i(z) {
            return Ok(exts.iter().map(|_| Ok(DonoghueMatrix::matrix(z, ComplexMat2::scalar(v)))).collect());
        }
        let data = self.basis_at(z)?.data;
        Ok(exts.iter().map(|e| self.assemble_from(e, data, z)).collect())
    }

    /// The assembly formulas without the exact return at `±i`; singular at `z = i`.
    pub fn assemble(&self, ext: &TwoLcExtension, z: C) -> Result<DonoghueMatrix> {
        let data = self.basis_at(z)?.data;
        self.assemble_from(ext, data, z)
    }

    pub fn assemble_from(&self, ext: &TwoLcExtension, data: [C; 4], z: C) -> Result<DonoghueMatrix> {
        if let TwoLcExtension::Spec(spec) = ext {
            spec.check()?;
            if !spec.is_two_endpoint() {
                return Err(Error::Unsupported("two-endpoint assembly needs a two-endpoint spec".into()));
            }
        }
        let wm = wronskian_matrices(&self.ortho, data, z);
        let coupling = match ext {
            TwoLcExtension::Spec(spec) => match reduced_coupling(spec, data) {
                Ok(c) => Some(c),
                Err(Error::FriedrichsReference) => None,
                Err(e) => return Err(e),
            },
            TwoLcExtension::KreinVonNeumann { at_zero } => Some(krein_vn_reduced(z, data, *at_zero)?),
        };
        Ok(DonoghueMatrix::matrix(z, assemble_two_lc(&wm, coupling.as_ref(), z)?))
    }
}

pub fn donoghue_two_lc(problem: &SlProblem, spec: &ExtensionSpec, z: C) -> Result<DonoghueMatrix> {
    TwoLcDonoghue::new(problem)?.eval(spec, z)
}

// ---------------------------------------------------------------------------
// Herglotz checks

/// `2/[(|z|²+1) + √((|z|²−1)² + 4(Re z)²)]`.
pub fn herglotz_bound(z: C) -> f64 {
    let a = z.norm_sqr();
    2.0 / ((a + 1.0) + ((a - 1.0).powi(2) + 4.0 * z.re * z.re).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HerglotzRow {
    pub z: C,
    pub min_eigenvalue: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
    /// `‖M(z̄) − M(z)*‖` when the sample set contains `z̄`.
    pub sym_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HerglotzReport {
    pub rows: Vec<HerglotzRow>,
    pub worst_margin: f64,
    pub worst_sym_residual: f64,
    pub pass: bool,
}

pub const HERGLOTZ_SLACK: f64 = 1e-8;

pub fn symmetry_residual(m: &DonoghueMatrix, m_conj: &DonoghueMatrix) -> f64 {
    let adj = DonoghueMatrix { z: m.z.conj(), dim: m.dim, entries: m.entries.adjoint() };
    m_conj.sub_norm(&adj)
}

pub fn herglotz_row(m: &DonoghueMatrix, m_conj: Option<&DonoghueMatrix>) -> HerglotzRow {
    let min_eigenvalue = m.normalized_imag_eigenvalues()[0];
    let bound = herglotz_bound(m.z);
    let margin = min_eigenvalue - bound;
    HerglotzRow {
        z: m.z,
        min_eigenvalue,
        bound,
        margin,
        pass: margin >= -HERGLOTZ_SLACK,
        sym_residual: m_conj.map(|c| symmetry_residual(m, c)),
    }
}

pub fn herglotz_report(samples: &[DonoghueMatrix]) -> HerglotzReport {
    let rows: Vec<HerglotzRow> = samples
        .iter()
        .map(|m| {
            let partner = samples.iter().find(|o| (o.z - m.z.conj()).norm() <= 1e-14 * (1.0 + m.z.norm()));
            herglotz_row(m, partner)
        })
        .collect();
    let worst_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let worst_sym_residual = rows.iter().filter_map(|r| r.sym_residual).fold(0.0, f64::max);
    let pass = rows.iter().all(|r| r.pass);
    HerglotzReport { rows, worst_margin, worst_sym_residual, pass }
}
