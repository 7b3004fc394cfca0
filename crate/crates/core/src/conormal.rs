//! Classical, generalised and canonical co-normal derivatives with their
//! Green identities.
//!
//! A co-normal derivative lives in a negative-order boundary space, so the
//! primary representation here is the dual one: the vector of its actions
//! ⟨T, w_i⟩ on the boundary P1 basis. Pointwise values are recovered through
//! the boundary mass matrix when a function representative is wanted.
//!
//! The generalised derivative T(f̃, u) is defined against a chosen extension
//! f̃ of the interior functional: ⟨T(f̃,u), w⟩ = E(u, γ₋₁w) - ⟨f̃, γ₋₁w⟩.
//! With the zero-interior lifting this collapses to the boundary rows of
//! Ľu - f̃; a second (discretely harmonic) lifting is provided to check that
//! the result does not depend on the lifting when u solves the system.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fem::{boundary_mass, ComponentFn, FemField, FemSystem};
use crate::linalg::{BandMatrix, DenseLu};
use crate::mesh::Mesh;

/// Tolerance separating a modelling inconsistency (an f̃ that does not extend
/// the interior action of L on u) from roundoff.
pub const CONSISTENCY_TOL: f64 = 1e-8;

/// Boundary functional in the dual of boundary traces.
#[derive(Clone)]
pub struct ConormalTrace {
    pub mesh: Arc<Mesh>,
    pub m: usize,
    /// dual[i*m + k] = ⟨T, w_i e_k⟩ over boundary nodes in mesh order.
    pub dual: Vec<Complex64>,
}

impl ConormalTrace {
    pub fn zero(mesh: Arc<Mesh>, m: usize) -> Self {
        let n = mesh.boundary_nodes().len() * m;
        Self {
            mesh,
            m,
            dual: vec![Complex64::default(); n],
        }
    }

    /// Bilinear pairing ⟨T, g⟩ with a boundary trace given by nodal values.
    pub fn pair(&self, trace_values: &[Complex64]) -> Complex64 {
        self.dual
            .iter()
            .zip(trace_values)
            .map(|(d, g)| d * g)
            .sum()
    }

    pub fn sub(&self, other: &ConormalTrace) -> ConormalTrace {
        ConormalTrace {
            mesh: self.mesh.clone(),
            m: self.m,
            dual: self
                .dual
                .iter()
                .zip(&other.dual)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, alpha: Complex64) -> ConormalTrace {
        ConormalTrace {
            mesh: self.mesh.clone(),
            m: self.m,
            dual: self.dual.iter().map(|d| alpha * d).collect(),
        }
    }
}

/// Boundary mass machinery cached per (mesh, m); safe to share for reads.
pub struct ConormalSpace {
    pub mesh: Arc<Mesh>,
    pub m: usize,
    mass_lu: DenseLu,
    mass: crate::linalg::DenseMatrix,
}

impl ConormalSpace {
    pub fn new(mesh: Arc<Mesh>, m: usize) -> Result<Self> {
        let mass = boundary_mass(&mesh, m);
        let mass_lu = mass.clone().factor()?;
        Ok(Self {
            mesh,
            m,
            mass_lu,
            mass,
        })
    }

    /// Mass-solved function representative of a dual vector.
    pub fn values(&self, t: &ConormalTrace) -> Vec<Complex64> {
        self.mass_lu.solve(&t.dual)
    }

    /// Dual vector of a boundary density given by nodal values: M g.
    pub fn dual_of_density(&self, density: &[Complex64]) -> Vec<Complex64> {
        self.mass.matvec(density)
    }

    /// Boundary L2 norm of a density in nodal values.
    pub fn l2_norm(&self, density: &[Complex64]) -> f64 {
        let mg = self.mass.matvec(density);
        let ip: Complex64 = density
            .iter()
            .zip(&mg)
            .map(|(d, m)| d.conj() * m)
            .sum();
        ip.re.max(0.0).sqrt()
    }

    /// Boundary L2 norm of the function representative of a trace.
    pub fn trace_l2_norm(&self, t: &ConormalTrace) -> f64 {
        self.l2_norm(&self.values(t))
    }

    /// Nodal boundary values of a bulk field.
    pub fn boundary_values(&self, u: &FemField) -> Vec<Complex64> {
        let nodes = self.mesh.boundary_nodes();
        let mut out = vec![Complex64::default(); nodes.len() * self.m];
        for (i, &v) in nodes.iter().enumerate() {
            for k in 0..self.m {
                out[i * self.m + k] = u.values[v * self.m + k];
            }
        }
        out
    }
}

/// How the interior functional Lu is extended up to the boundary.
pub enum ExtensionChoice {
    /// f̃ = Ľu: the extension whose co-normal derivative vanishes.
    Aggregate,
    /// Zero extension of interior L2 data; unique for |t| < 1/2.
    Canonical { f: ComponentFn },
    /// Extension nominating the strong flux a ∇u · ν of the trial field.
    Classical,
    /// Extension nominating an arbitrary boundary functional.
    Nominated { t: ConormalTrace },
    /// Fully resolved functional over all nodes.
    Custom { functional: Vec<Complex64> },
}

/// Resolve an extension choice into the functional ⟨f̃, φ_j⟩ over all nodes.
pub fn resolve_extension(
    system: &FemSystem,
    u: &FemField,
    choice: &ExtensionChoice,
) -> Result<Vec<Complex64>> {
    match choice {
        ExtensionChoice::Aggregate => Ok(system.apply_aggregate(u)),
        ExtensionChoice::Canonical { f } => Ok(canonical_extension(system, |k, x| f(k, x), 0.0)?),
        ExtensionChoice::Classical => {
            let space = ConormalSpace::new(system.mesh.clone(), system.m())?;
            let t = classical_conormal(system, &space, u);
            Ok(nominate_conormal(system, u, &t))
        }
        ExtensionChoice::Nominated { t } => Ok(nominate_conormal(system, u, t)),
        ExtensionChoice::Custom { functional } => Ok(functional.clone()),
    }
}

/// Zero extension of interior data f onto the nodal functionals — the unique
/// extension for |t| < 1/2, realised as plain volume quadrature against all
/// basis functions with no boundary layer.
pub fn canonical_extension<F>(system: &FemSystem, f: F, t: f64) -> Result<Vec<Complex64>>
where
    F: Fn(usize, &[f64]) -> Complex64,
{
    if !(-0.5..0.5).contains(&t) {
        return Err(Error::Domain(format!(
            "canonical extension is unique only for |t| < 1/2, got t = {t}"
        )));
    }
    Ok(system.volume_functional(f))
}

/// Strong flux Σ a_ij γ(∂_j u) ν_i evaluated facet-wise from the owning
/// element's one-sided gradient, projected onto the boundary basis.
pub fn classical_conormal(system: &FemSystem, space: &ConormalSpace, u: &FemField) -> ConormalTrace {
    flux_trace(system, space, u, false)
}

/// Modified strong flux Σ ā_ji^T γ(∂_j v) ν_i + Σ b̄_i^T γv ν_i associated
/// with the adjoint operator.
pub fn modified_conormal(system: &FemSystem, space: &ConormalSpace, v: &FemField) -> ConormalTrace {
    flux_trace(system, space, v, true)
}

fn flux_trace(system: &FemSystem, space: &ConormalSpace, u: &FemField, adjoint: bool) -> ConormalTrace {
    let mesh = &system.mesh;
    let m = system.m();
    let dim = mesh.dim();
    let coeffs = &system.coeffs;
    let mut dual = vec![Complex64::default(); mesh.boundary_nodes().len() * m];
    for facet in mesh.boundary() {
        let e = facet.element;
        let el = &mesh.elements()[e];
        let grads = mesh.element_gradients(e);
        let normal = mesh.facet_normal(facet);
        // constant per-component gradient of the P1 field on the element
        let mut grad_u = vec![Complex64::default(); m * dim];
        for (loc, &v) in el.iter().enumerate() {
            for k in 0..m {
                for d in 0..dim {
                    grad_u[k * dim + d] +=
                        u.values[v * m + k] * Complex64::new(grads[loc][d], 0.0);
                }
            }
        }
        let flux_at = |x: &[f64]| -> Vec<Complex64> {
            let mut flux = vec![Complex64::default(); m];
            for i in 0..dim {
                for j in 0..dim {
                    let aij = (coeffs.a[i * dim + j])(x);
                    for k in 0..m {
                        for l in 0..m {
                            let a_kl = if adjoint {
                                // ā_ji^T entry (k,l): conj(a_ji[l,k])
                                (coeffs.a[j * dim + i])(x)[l * m + k].conj()
                            } else {
                                aij[k * m + l]
                            };
                            flux[k] += a_kl
                                * grad_u[l * dim + j]
                                * Complex64::new(normal[i], 0.0);
                        }
                    }
                }
            }
            if adjoint {
                if let Some(b) = &coeffs.b {
                    // + Σ_i b̄_i^T γv ν_i with γv interpolated at x
                    let val = interp_on_element(mesh, u, e, x);
                    for i in 0..dim {
                        let bi = b[i](x);
                        for k in 0..m {
                            for l in 0..m {
                                flux[k] += bi[l * m + k].conj()
                                    * val[l]
                                    * Complex64::new(normal[i], 0.0);
                            }
                        }
                    }
                }
            }
            flux
        };
        match dim {
            1 => {
                let v = facet.vertices[0];
                let x = mesh.vertex(v).to_vec();
                let flux = flux_at(&x);
                let bi = mesh.boundary_index(v).expect("boundary node");
                for k in 0..m {
                    dual[bi * m + k] += flux[k];
                }
            }
            _ => {
                let a = mesh.vertex(facet.vertices[0]).to_vec();
                let b = mesh.vertex(facet.vertices[1]).to_vec();
                let len = mesh.facet_measure(facet);
                let g = 0.5 / 3f64.sqrt();
                for &t in &[0.5 - g, 0.5 + g] {
                    let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                    let flux = flux_at(&x);
                    let w = 0.5 * len;
                    for (loc, &v) in facet.vertices.iter().enumerate() {
                        let shape = if loc == 0 { 1.0 - t } else { t };
                        let bi = mesh.boundary_index(v).expect("boundary node");
                        for k in 0..m {
                            dual[bi * m + k] += flux[k] * Complex64::new(shape * w, 0.0);
                        }
                    }
                }
            }
        }
    }
    let _ = space;
    ConormalTrace {
        mesh: system.mesh.clone(),
        m,
        dual,
    }
}

fn interp_on_element(mesh: &Mesh, u: &FemField, e: usize, x: &[f64]) -> Vec<Complex64> {
    let el = &mesh.elements()[e];
    let m = u.m;
    // barycentric coordinates on the owning element
    let lam: Vec<f64> = match mesh.dim() {
        1 => {
            let (x0, x1) = (mesh.vertex(el[0])[0], mesh.vertex(el[1])[0]);
            let t = (x[0] - x0) / (x1 - x0);
            vec![1.0 - t, t]
        }
        _ => {
            let (a, b, c) = (mesh.vertex(el[0]), mesh.vertex(el[1]), mesh.vertex(el[2]));
            let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
            let l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (x[1] - a[1])) / det;
            let l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
            vec![1.0 - l1 - l2, l1, l2]
        }
    };
    let mut out = vec![Complex64::default(); m];
    for (l, &v) in lam.iter().zip(el) {
        for k in 0..m {
            out[k] += Complex64::new(*l, 0.0) * u.values[v * m + k];
        }
    }
    out
}

/// Lifting γ₋₁ used to test boundary functionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lifting {
    /// Boundary nodal values, zero at interior nodes (cheapest right inverse).
    ZeroInterior,
    /// Interior values chosen so the system's rows vanish at interior nodes.
    Harmonic,
}

/// T(f̃, u) via ⟨T, w_i⟩ = E(u, γ₋₁ w_i) - ⟨f̃, γ₋₁ w_i⟩ with the chosen
/// lifting. Errors if f̃ disagrees with Ľu on interior test functions.
pub fn generalized_conormal_with_lifting(
    system: &FemSystem,
    u: &FemField,
    f_tilde: &[Complex64],
    lifting: Lifting,
) -> Result<ConormalTrace> {
    let mesh = &system.mesh;
    let m = system.m();
    let residual = aggregate_residual(system, u, f_tilde);
    check_interior_consistency(system, &residual, f_tilde)?;
    let nodes = mesh.boundary_nodes();
    let mut dual = vec![Complex64::default(); nodes.len() * m];
    match lifting {
        Lifting::ZeroInterior => {
            for (i, &v) in nodes.iter().enumerate() {
                for k in 0..m {
                    dual[i * m + k] = residual[v * m + k];
                }
            }
        }
        Lifting::Harmonic => {
            // one factorization with unit rows at boundary dofs, then a solve
            // per boundary basis function
            let mut mat: BandMatrix = system.matrix().clone();
            for &b in nodes {
                for k in 0..m {
                    mat.set_unit_row(b * m + k);
                }
            }
            let lu = mat.factor()?;
            let n_dofs = system.n_dofs();
            for (i, &v) in nodes.iter().enumerate() {
                for k in 0..m {
                    let mut rhs = vec![Complex64::default(); n_dofs];
                    rhs[v * m + k] = Complex64::new(1.0, 0.0);
                    let w = lu.solve(&rhs);
                    let mut acc = Complex64::default();
                    for (wj, rj) in w.iter().zip(&residual) {
                        acc += wj * rj;
                    }
                    dual[i * m + k] = acc;
                }
            }
        }
    }
    Ok(ConormalTrace {
        mesh: system.mesh.clone(),
        m,
        dual,
    })
}

pub fn generalized_conormal(
    system: &FemSystem,
    u: &FemField,
    f_tilde: &[Complex64],
) -> Result<ConormalTrace> {
    generalized_conormal_with_lifting(system, u, f_tilde, Lifting::ZeroInterior)
}

fn aggregate_residual(system: &FemSystem, u: &FemField, f_tilde: &[Complex64]) -> Vec<Complex64> {
    system
        .apply_aggregate(u)
        .iter()
        .zip(f_tilde)
        .map(|(a, b)| a - b)
        .collect()
}

fn check_interior_consistency(
    system: &FemSystem,
    residual: &[Complex64],
    f_tilde: &[Complex64],
) -> Result<()> {
    let m = system.m();
    let scale = f_tilde
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        .max(residual.iter().map(|z| z.norm()).fold(0.0, f64::max))
        .max(1e-300);
    for p in 0..system.mesh.n_vertices() {
        if system.mesh.is_boundary_node(p) {
            continue;
        }
        for k in 0..m {
            let r = residual[p * m + k].norm();
            if r > CONSISTENCY_TOL * scale {
                return Err(Error::InconsistentExtension(format!(
                    "interior node {p} component {k}: residual {r:.3e} vs scale {scale:.3e}"
                )));
            }
        }
    }
    Ok(())
}

/// Canonical co-normal derivative: the generalised one against the zero
/// extension of the interior L2 data; unique and linear in u.
pub fn canonical_conormal<F>(system: &FemSystem, u: &FemField, f: F) -> Result<ConormalTrace>
where
    F: Fn(usize, &[f64]) -> Complex64,
{
    let f_tilde = canonical_extension(system, f, 0.0)?;
    generalized_conormal(system, u, &f_tilde)
}

/// Extension nominating an arbitrary boundary functional t as the co-normal
/// derivative: ⟨f̃, v⟩ = E(u,v) - ⟨t, γv⟩.
pub fn nominate_conormal(system: &FemSystem, u: &FemField, t: &ConormalTrace) -> Vec<Complex64> {
    let m = system.m();
    let mut f_tilde = system.apply_aggregate(u);
    for (i, &v) in system.mesh.boundary_nodes().iter().enumerate() {
        for k in 0..m {
            f_tilde[v * m + k] -= t.dual[i * m + k];
        }
    }
    f_tilde
}

/// Difference of two generalised co-normal derivatives and, independently,
/// the boundary density recovered from f̃₂ - f̃₁ by a boundary mass solve.
/// The two agree because the difference of extensions is a boundary layer.
pub struct ConormalDifference {
    pub direct: ConormalTrace,
    pub recovered_density: Vec<Complex64>,
}

pub fn conormal_difference(
    system: &FemSystem,
    space: &ConormalSpace,
    u: &FemField,
    f1: &[Complex64],
    f2: &[Complex64],
) -> Result<ConormalDifference> {
    let t1 = generalized_conormal(system, u, f1)?;
    let t2 = generalized_conormal(system, u, f2)?;
    let direct = t1.sub(&t2);
    // g = f̃₂ - f̃₁ is supported on boundary functionals; its density solves
    // M v = g restricted to the boundary rows.
    let m = system.m();
    let nodes = system.mesh.boundary_nodes();
    let mut g_b = vec![Complex64::default(); nodes.len() * m];
    for (i, &v) in nodes.iter().enumerate() {
        for k in 0..m {
            g_b[i * m + k] = f2[v * m + k] - f1[v * m + k];
        }
    }
    let recovered_density = space.mass_lu.solve(&g_b);
    Ok(ConormalDifference {
        direct,
        recovered_density,
    })
}

/// Residual of the first Green identity E(u,v) - ⟨f̃,v⟩ = ⟨T, γv⟩ maximised
/// over all nodal test functions, relative to the data scale.
pub fn first_green_residual(
    system: &FemSystem,
    u: &FemField,
    f_tilde: &[Complex64],
    t: &ConormalTrace,
) -> f64 {
    let m = system.m();
    let residual = aggregate_residual(system, u, f_tilde);
    let scale = residual
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        .max(t.dual.iter().map(|z| z.norm()).fold(0.0, f64::max))
        .max(1e-300);
    let mut worst: f64 = 0.0;
    for p in 0..system.mesh.n_vertices() {
        for k in 0..m {
            let pair = match system.mesh.boundary_index(p) {
                Some(i) => t.dual[i * m + k],
                None => Complex64::default(),
            };
            worst = worst.max((residual[p * m + k] - pair).norm());
        }
    }
    worst / scale
}

/// Generalised modified co-normal derivative of the adjoint system:
/// ⟨𝒯(f̃*, v), w⟩ = E*(v, γ₋₁w) - ⟨f̃*, γ₋₁w⟩ with the zero-interior lifting.
pub fn generalized_modified_conormal(
    system: &FemSystem,
    v: &FemField,
    f_star: &[Complex64],
) -> Result<ConormalTrace> {
    let m = system.m();
    let adj = system.assemble_adjoint();
    let residual: Vec<Complex64> = adj
        .matvec(&v.values)
        .iter()
        .zip(f_star)
        .map(|(a, b)| a - b)
        .collect();
    check_interior_consistency(system, &residual, f_star)?;
    let nodes = system.mesh.boundary_nodes();
    let mut dual = vec![Complex64::default(); nodes.len() * m];
    for (i, &p) in nodes.iter().enumerate() {
        for k in 0..m {
            dual[i * m + k] = residual[p * m + k];
        }
    }
    Ok(ConormalTrace {
        mesh: system.mesh.clone(),
        m,
        dual,
    })
}

/// Ambient-grid H^t norms of interior data across a grid family: finiteness
/// and refinement stability indicate membership of Lu in H^t, the condition
/// for the canonical extension to exist.
pub fn canonical_membership_probe<F>(
    f: F,
    mesh: &Mesh,
    t: f64,
    grids: &[crate::grid::GridSpec],
) -> Result<Vec<f64>>
where
    F: Fn(usize, &[f64]) -> Complex64,
{
    let m = grids.first().map(|g| g.components()).unwrap_or(1);
    grids
        .iter()
        .map(|grid| {
            if grid.components() != m {
                return Err(Error::GridMismatch("component counts differ".into()));
            }
            let field = crate::field::SpectralField::from_fn(grid.clone(), |k, x| {
                if mesh.locate(x).is_some() {
                    f(k, x)
                } else {
                    Complex64::default()
                }
            });
            Ok(field.sobolev_norm(t))
        })
        .collect()
}

/// CSV export of a trace: boundary node coordinates, dual coefficients and
/// the mass-solved pointwise representative.
pub fn write_trace_csv<P: AsRef<std::path::Path>>(
    space: &ConormalSpace,
    t: &ConormalTrace,
    path: P,
) -> Result<()> {
    use std::io::Write;
    let vals = space.values(t);
    let mesh = &space.mesh;
    let m = space.m;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut header = String::from(if mesh.dim() == 1 { "x" } else { "x,y" });
    for k in 0..m {
        header.push_str(&format!(",dual_re_{k},dual_im_{k},value_re_{k},value_im_{k}"));
    }
    writeln!(out, "{header}")?;
    for (i, &v) in mesh.boundary_nodes().iter().enumerate() {
        let p = mesh.vertex(v);
        let mut line = if mesh.dim() == 1 {
            format!("{:.12e}", p[0])
        } else {
            format!("{:.12e},{:.12e}", p[0], p[1])
        };
        for k in 0..m {
            let d = t.dual[i * m + k];
            let w = vals[i * m + k];
            line.push_str(&format!(
                ",{:.12e},{:.12e},{:.12e},{:.12e}",
                d.re, d.im, w.re, w.im
            ));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Residual of the generalised second Green identity
/// ⟨f̃, v̄⟩ - ⟨u, conj(f̃*)⟩ = ⟨u⁺, conj(𝒯(f̃*,v))⟩ - ⟨T(f̃,u), conj(v⁺)⟩.
pub fn second_green_residual(
    system: &FemSystem,
    space: &ConormalSpace,
    u: &FemField,
    v: &FemField,
    f_tilde: &[Complex64],
    f_star: &[Complex64],
) -> Result<f64> {
    let t_u = generalized_conormal(system, u, f_tilde)?;
    let t_v = generalized_modified_conormal(system, v, f_star)?;
    let mut lhs = Complex64::default();
    let mut mass = 0.0;
    for (vv, f) in v.values.iter().zip(f_tilde) {
        lhs += vv.conj() * f;
        mass += (vv.conj() * f).norm();
    }
    for (uu, f) in u.values.iter().zip(f_star) {
        lhs -= uu * f.conj();
        mass += (uu * f.conj()).norm();
    }
    let ub = space.boundary_values(u);
    let vb = space.boundary_values(v);
    let mut rhs = Complex64::default();
    for (uu, d) in ub.iter().zip(&t_v.dual) {
        rhs += uu * d.conj();
        mass += (uu * d.conj()).norm();
    }
    for (vv, d) in vb.iter().zip(&t_u.dual) {
        rhs -= vv.conj() * d;
        mass += (vv.conj() * d).norm();
    }
    // L1-mass normalisation: the individual pairings may cancel to roundoff
    Ok((lhs - rhs).norm() / mass.max(1e-300))
}
