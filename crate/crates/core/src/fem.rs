//! P1 Galerkin discretisation of m-component second order systems
//!
//! ```text
//! Lu = -Σ ∂_i(a_ij ∂_j u) + Σ b_j ∂_j u + c u
//! ```
//!
//! through the bilinear form E(u,v) = Σ⟨a_ij ∂_j u, ∂_i v⟩ + Σ⟨b_j ∂_j u, v⟩
//! plus ⟨cu, v⟩, together with the weak Dirichlet / Neumann / mixed
//! settings. The same assembled matrix tested against all nodal functions
//! realises the aggregate operator, and its rows at boundary nodes carry
//! the variational boundary flux consumed by the co-normal module.
//!
//! The Sobolev index of the continuous setting does not parameterise the
//! discrete solver; it only enters post-processing norms.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::GridSpec;
use crate::linalg::{hermitian_min_eigenvalue, BandMatrix, DenseMatrix};
use crate::mesh::Mesh;

pub type MatrixFn = Arc<dyn Fn(&[f64]) -> Vec<Complex64> + Send + Sync>;
pub type ComponentFn = Arc<dyn Fn(usize, &[f64]) -> Complex64 + Send + Sync>;

fn const_matrix(m: usize, diag: Complex64) -> MatrixFn {
    Arc::new(move |_: &[f64]| {
        let mut v = vec![Complex64::default(); m * m];
        for k in 0..m {
            v[k * m + k] = diag;
        }
        v
    })
}

/// The PDE data: a_ij, b_j, c as m x m matrix functions, plus the optional
/// ellipticity multiplier θ.
#[derive(Clone)]
pub struct CoefficientSet {
    pub dim: usize,
    pub m: usize,
    /// a[i * dim + j]
    pub a: Vec<MatrixFn>,
    pub b: Option<Vec<MatrixFn>>,
    pub c: Option<MatrixFn>,
    pub theta: Option<MatrixFn>,
}

impl CoefficientSet {
    /// a = δ_ij I, b = 0, c = 0.
    pub fn laplacian(dim: usize, m: usize) -> Self {
        let mut a = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let d = if i == j { 1.0 } else { 0.0 };
                a.push(const_matrix(m, Complex64::new(d, 0.0)));
            }
        }
        Self {
            dim,
            m,
            a,
            b: None,
            c: None,
            theta: None,
        }
    }

    /// a = δ_ij I, c = c0 I.
    pub fn helmholtz(dim: usize, m: usize, c0: f64) -> Self {
        Self::laplacian(dim, m).with_constant_c(Complex64::new(c0, 0.0))
    }

    /// Scalar operator -div(a ∇u) + c u with variable a.
    pub fn scalar_variable<A>(dim: usize, a_fn: A, c0: f64) -> Self
    where
        A: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        let a_arc = Arc::new(a_fn);
        let mut a: Vec<MatrixFn> = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let af = a_arc.clone();
                if i == j {
                    a.push(Arc::new(move |x: &[f64]| vec![Complex64::new(af(x), 0.0)]));
                } else {
                    a.push(const_matrix(1, Complex64::default()));
                }
            }
        }
        let out = Self {
            dim,
            m: 1,
            a,
            b: None,
            c: None,
            theta: None,
        };
        if c0 != 0.0 {
            out.with_constant_c(Complex64::new(c0, 0.0))
        } else {
            out
        }
    }

    pub fn with_constant_c(mut self, c0: Complex64) -> Self {
        self.c = Some(const_matrix(self.m, c0));
        self
    }

    pub fn with_c(mut self, c: MatrixFn) -> Self {
        self.c = Some(c);
        self
    }

    pub fn with_b(mut self, b: Vec<MatrixFn>) -> Self {
        assert_eq!(b.len(), self.dim);
        self.b = Some(b);
        self
    }

    pub fn with_a(mut self, a: Vec<MatrixFn>) -> Self {
        assert_eq!(a.len(), self.dim * self.dim);
        self.a = a;
        self
    }

    pub fn with_theta(mut self, theta: MatrixFn) -> Self {
        self.theta = Some(theta);
        self
    }
}

/// Strong ellipticity margin: min over sampled x and unit ξ of the smallest
/// eigenvalue of the Hermitian part of θ(x) Σ a_ij(x) ξ_i ξ_j. A positive
/// margin certifies the sample check; solvers refuse nonpositive margins.
pub fn check_strong_ellipticity(coeffs: &CoefficientSet, points: &[Vec<f64>]) -> f64 {
    let m = coeffs.m;
    let dim = coeffs.dim;
    let dirs: Vec<Vec<f64>> = match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..64)
            .map(|k| {
                let t = std::f64::consts::PI * k as f64 / 32.0;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let mut v = Vec::new();
            let steps = 12;
            for p in 0..steps {
                for q in 0..(2 * steps) {
                    let th = std::f64::consts::PI * (p as f64 + 0.5) / steps as f64;
                    let ph = std::f64::consts::PI * q as f64 / steps as f64;
                    v.push(vec![th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]);
                }
            }
            v
        }
    };
    let mut margin = f64::INFINITY;
    for x in points {
        let theta = coeffs.theta.as_ref().map(|t| t(x));
        for xi in &dirs {
            let mut sym = vec![Complex64::default(); m * m];
            for i in 0..dim {
                for j in 0..dim {
                    let aij = (coeffs.a[i * dim + j])(x);
                    let w = xi[i] * xi[j];
                    for k in 0..m * m {
                        sym[k] += aij[k] * w;
                    }
                }
            }
            let eff = match &theta {
                Some(t) => {
                    let mut prod = vec![Complex64::default(); m * m];
                    for r in 0..m {
                        for ccol in 0..m {
                            let mut acc = Complex64::default();
                            for k in 0..m {
                                acc += t[r * m + k] * sym[k * m + ccol];
                            }
                            prod[r * m + ccol] = acc;
                        }
                    }
                    prod
                }
                None => sym,
            };
            margin = margin.min(hermitian_min_eigenvalue(&eff, m));
        }
    }
    margin
}

/// Sample points for the ellipticity check: element quadrature nodes.
pub fn ellipticity_sample_points(mesh: &Mesh) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    for e in 0..mesh.elements().len() {
        for (lambda, _) in element_rule(mesh.dim()) {
            pts.push(phys_point(mesh, e, &lambda));
        }
    }
    pts
}

// 3-point Gauss on the unit segment (degree 5).
const GAUSS3: [(f64, f64); 3] = [
    (0.112701665379258311, 0.277777777777777778),
    (0.5, 0.444444444444444444),
    (0.887298334620741689, 0.277777777777777778),
];

// Edge-midpoint rule on the triangle (degree 2), barycentric.
const TRI3: [([f64; 3], f64); 3] = [
    ([0.5, 0.5, 0.0], 1.0 / 3.0),
    ([0.0, 0.5, 0.5], 1.0 / 3.0),
    ([0.5, 0.0, 0.5], 1.0 / 3.0),
];

// 7-point degree-5 triangle rule for error norms and data functionals.
fn tri7() -> Vec<([f64; 3], f64)> {
    let s15 = 15f64.sqrt();
    let a1 = (6.0 + s15) / 21.0;
    let w1 = (155.0 + s15) / 1200.0;
    let a2 = (6.0 - s15) / 21.0;
    let w2 = (155.0 - s15) / 1200.0;
    let mut rule = vec![([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 9.0 / 40.0)];
    for (a, w) in [(a1, w1), (a2, w2)] {
        rule.push(([1.0 - 2.0 * a, a, a], w));
        rule.push(([a, 1.0 - 2.0 * a, a], w));
        rule.push(([a, a, 1.0 - 2.0 * a], w));
    }
    rule
}

/// Assembly rule per the build contract: 3-point Gauss on segments,
/// edge-midpoint rule on triangles.
fn element_rule(dim: usize) -> Vec<(Vec<f64>, f64)> {
    match dim {
        1 => GAUSS3
            .iter()
            .map(|&(x, w)| (vec![1.0 - x, x], w))
            .collect(),
        _ => TRI3
            .iter()
            .map(|&(l, w)| (l.to_vec(), w))
            .collect(),
    }
}

fn error_rule(dim: usize) -> Vec<(Vec<f64>, f64)> {
    match dim {
        1 => {
            let (xs, ws) = crate::quad::gauss_legendre(5);
            xs.iter()
                .zip(&ws)
                .map(|(&x, &w)| {
                    let t = 0.5 * (x + 1.0);
                    (vec![1.0 - t, t], 0.5 * w)
                })
                .collect()
        }
        _ => tri7().iter().map(|&(l, w)| (l.to_vec(), w)).collect(),
    }
}

fn phys_point(mesh: &Mesh, e: usize, lambda: &[f64]) -> Vec<f64> {
    let el = &mesh.elements()[e];
    let dim = mesh.dim();
    let mut x = vec![0.0; dim];
    for (loc, &v) in el.iter().enumerate() {
        let p = mesh.vertex(v);
        for d in 0..dim {
            x[d] += lambda[loc] * p[d];
        }
    }
    x
}

/// Term selection for the generic form assembler. The adjoint form swaps the
/// first-order term from the trial to the test side, so both orientations
/// are supported.
#[derive(Clone)]
pub struct FormCoefficients {
    pub dim: usize,
    pub m: usize,
    pub a: Vec<MatrixFn>,
    /// first-order term on the trial function: ⟨b_j ∂_j u, v⟩
    pub b_trial: Option<Vec<MatrixFn>>,
    /// first-order term on the test function: ⟨d_j u, ∂_j v⟩
    pub d_test: Option<Vec<MatrixFn>>,
    pub c: Option<MatrixFn>,
}

impl FormCoefficients {
    pub fn primal(coeffs: &CoefficientSet) -> Self {
        Self {
            dim: coeffs.dim,
            m: coeffs.m,
            a: coeffs.a.clone(),
            b_trial: coeffs.b.clone(),
            d_test: None,
            c: coeffs.c.clone(),
        }
    }

    /// Coefficients of the formally adjoint operator
    /// L*v = -Σ ∂_i(ā_ji^T ∂_j v) - Σ ∂_j(b̄_j^T v) + c̄^T v:
    /// a*_ij = ā_ji^T, the b term moves to the test side as b̄_j^T, c* = c̄^T.
    pub fn adjoint(coeffs: &CoefficientSet) -> Self {
        let dim = coeffs.dim;
        let m = coeffs.m;
        let mut a_star: Vec<MatrixFn> = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let src = coeffs.a[j * dim + i].clone();
                a_star.push(conj_transpose_fn(src, m));
            }
        }
        let d_test = coeffs
            .b
            .as_ref()
            .map(|b| b.iter().map(|f| conj_transpose_fn(f.clone(), m)).collect());
        let c_star = coeffs.c.as_ref().map(|c| conj_transpose_fn(c.clone(), m));
        Self {
            dim,
            m,
            a: a_star,
            b_trial: None,
            d_test,
            c: c_star,
        }
    }
}

fn conj_transpose_fn(f: MatrixFn, m: usize) -> MatrixFn {
    Arc::new(move |x: &[f64]| {
        let v = f(x);
        let mut out = vec![Complex64::default(); m * m];
        for k in 0..m {
            for l in 0..m {
                out[k * m + l] = v[l * m + k].conj();
            }
        }
        out
    })
}

/// Assemble the matrix E with E[(p,k),(q,l)] = E(φ_q e_l, φ_p e_k); rows are
/// test functions, columns trial functions, dofs interleaved (node*m + comp).
pub fn assemble_form(mesh: &Mesh, fc: &FormCoefficients) -> BandMatrix {
    let m = fc.m;
    let dim = fc.dim;
    let n_dofs = mesh.n_vertices() * m;
    let mut bw = 0usize;
    for el in mesh.elements() {
        for &p in el {
            for &q in el {
                let lo = p.min(q) * m;
                let hi = p.max(q) * m + (m - 1);
                bw = bw.max(hi - lo);
            }
        }
    }
    let mut mat = BandMatrix::new(n_dofs, bw, bw);
    let rule = element_rule(dim);
    for e in 0..mesh.elements().len() {
        let el = mesh.elements()[e].clone();
        let grads = mesh.element_gradients(e);
        let measure = mesh.element_measure(e);
        for (lambda, w) in &rule {
            let x = phys_point(mesh, e, lambda);
            let weight = w * measure;
            let a_vals: Vec<Vec<Complex64>> = fc.a.iter().map(|f| f(&x)).collect();
            let b_vals: Option<Vec<Vec<Complex64>>> =
                fc.b_trial.as_ref().map(|b| b.iter().map(|f| f(&x)).collect());
            let d_vals: Option<Vec<Vec<Complex64>>> =
                fc.d_test.as_ref().map(|d| d.iter().map(|f| f(&x)).collect());
            let c_val: Option<Vec<Complex64>> = fc.c.as_ref().map(|f| f(&x));
            for (lp, &vp) in el.iter().enumerate() {
                for (lq, &vq) in el.iter().enumerate() {
                    for k in 0..m {
                        for l in 0..m {
                            let mut acc = Complex64::default();
                            for i in 0..dim {
                                for j in 0..dim {
                                    acc += a_vals[i * dim + j][k * m + l]
                                        * grads[lq][j]
                                        * grads[lp][i];
                                }
                            }
                            if let Some(bv) = &b_vals {
                                for j in 0..dim {
                                    acc += bv[j][k * m + l] * grads[lq][j] * lambda[lp];
                                }
                            }
                            if let Some(dv) = &d_vals {
                                for j in 0..dim {
                                    acc += dv[j][k * m + l] * lambda[lq] * grads[lp][j];
                                }
                            }
                            if let Some(cv) = &c_val {
                                acc += cv[k * m + l] * lambda[lq] * lambda[lp];
                            }
                            mat.add(vp * m + k, vq * m + l, acc * weight);
                        }
                    }
                }
            }
        }
    }
    mat
}

/// A P1 field: nodal coefficients, dof = node*m + component.
#[derive(Clone)]
pub struct FemField {
    pub mesh: Arc<Mesh>,
    pub m: usize,
    pub values: Vec<Complex64>,
}

impl FemField {
    pub fn new(mesh: Arc<Mesh>, m: usize, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), mesh.n_vertices() * m);
        Self { mesh, m, values }
    }

    pub fn from_fn<F: Fn(usize, &[f64]) -> Complex64>(mesh: Arc<Mesh>, m: usize, f: F) -> Self {
        let mut values = vec![Complex64::default(); mesh.n_vertices() * m];
        for v in 0..mesh.n_vertices() {
            let x = mesh.vertex(v).to_vec();
            for k in 0..m {
                values[v * m + k] = f(k, &x);
            }
        }
        Self { mesh, m, values }
    }

    pub fn eval(&self, x: &[f64]) -> Option<Vec<Complex64>> {
        let (e, lam) = self.mesh.locate(x)?;
        let el = &self.mesh.elements()[e];
        let mut out = vec![Complex64::default(); self.m];
        for (l, &v) in lam.iter().zip(el) {
            for k in 0..self.m {
                out[k] += Complex64::new(*l, 0.0) * self.values[v * self.m + k];
            }
        }
        Some(out)
    }

    /// L2 and H1-seminorm errors against a manufactured solution.
    pub fn error_norms<F, G>(&self, exact: F, exact_grad: G) -> (f64, f64)
    where
        F: Fn(usize, &[f64]) -> Complex64,
        G: Fn(usize, &[f64]) -> Vec<Complex64>,
    {
        let mesh = &self.mesh;
        let dim = mesh.dim();
        let rule = error_rule(dim);
        let mut l2 = 0.0;
        let mut h1 = 0.0;
        for e in 0..mesh.elements().len() {
            let el = &mesh.elements()[e];
            let grads = mesh.element_gradients(e);
            let measure = mesh.element_measure(e);
            for (lambda, w) in &rule {
                let x = phys_point(mesh, e, lambda);
                let weight = w * measure;
                for k in 0..self.m {
                    let mut uh = Complex64::default();
                    let mut guh = vec![Complex64::default(); dim];
                    for (l, &v) in el.iter().enumerate() {
                        let coef = self.values[v * self.m + k];
                        uh += Complex64::new(lambda[l], 0.0) * coef;
                        for d in 0..dim {
                            guh[d] += Complex64::new(grads[l][d], 0.0) * coef;
                        }
                    }
                    let ue = exact(k, &x);
                    let ge = exact_grad(k, &x);
                    l2 += weight * (uh - ue).norm_sqr();
                    for d in 0..dim {
                        h1 += weight * (guh[d] - ge[d]).norm_sqr();
                    }
                }
            }
        }
        (l2.sqrt(), h1.sqrt())
    }

    /// Sample the P1 interpolant on a periodic grid, zero outside the mesh:
    /// the zero extension onto the ambient box.
    pub fn embed(&self, grid: &GridSpec) -> Result<SpectralField> {
        if grid.components() != self.m {
            return Err(Error::GridMismatch(format!(
                "grid carries {} components, field has {}",
                grid.components(),
                self.m
            )));
        }
        if grid.dimension() != self.mesh.dim() {
            return Err(Error::GridMismatch(
                "grid and mesh dimension disagree".into(),
            ));
        }
        let field = SpectralField::from_fn(grid.clone(), |k, x| {
            match self.eval(x) {
                Some(vals) => vals[k],
                None => Complex64::default(),
            }
        });
        Ok(field)
    }

    pub fn scale(&self, alpha: Complex64) -> FemField {
        FemField {
            mesh: self.mesh.clone(),
            m: self.m,
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn add(&self, other: &FemField) -> FemField {
        FemField {
            mesh: self.mesh.clone(),
            m: self.m,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

/// Aggregate right-hand side: a volume functional over all nodes plus a
/// boundary functional (zero on Dirichlet-constrained test functions).
#[derive(Clone)]
pub struct AggregateRhs {
    pub volume: Vec<Complex64>,
    pub boundary: Vec<Complex64>,
}

impl AggregateRhs {
    pub fn total(&self) -> Vec<Complex64> {
        self.volume
            .iter()
            .zip(&self.boundary)
            .map(|(a, b)| a + b)
            .collect()
    }
}

/// Assembled weak system for one coefficient set on one mesh.
pub struct FemSystem {
    pub mesh: Arc<Mesh>,
    pub coeffs: CoefficientSet,
    matrix: BandMatrix,
}

impl FemSystem {
    pub fn new(mesh: Arc<Mesh>, coeffs: CoefficientSet) -> Result<Self> {
        mesh.validate()?;
        if coeffs.dim != mesh.dim() {
            return Err(Error::Mesh(format!(
                "coefficients are {}-dimensional, mesh is {}-dimensional",
                coeffs.dim,
                mesh.dim()
            )));
        }
        let matrix = assemble_form(&mesh, &FormCoefficients::primal(&coeffs));
        Ok(Self {
            mesh,
            coeffs,
            matrix,
        })
    }

    pub fn m(&self) -> usize {
        self.coeffs.m
    }

    pub fn n_dofs(&self) -> usize {
        self.mesh.n_vertices() * self.coeffs.m
    }

    pub fn matrix(&self) -> &BandMatrix {
        &self.matrix
    }

    pub fn assemble_adjoint(&self) -> BandMatrix {
        assemble_form(&self.mesh, &FormCoefficients::adjoint(&self.coeffs))
    }

    /// The sampled strong ellipticity margin on element quadrature points.
    pub fn ellipticity_margin(&self) -> f64 {
        check_strong_ellipticity(&self.coeffs, &ellipticity_sample_points(&self.mesh))
    }

    /// ⟨f, φ_p e_k⟩ for all nodes, by the degree-5 rule.
    pub fn volume_functional<F: Fn(usize, &[f64]) -> Complex64>(&self, f: F) -> Vec<Complex64> {
        let mesh = &self.mesh;
        let m = self.coeffs.m;
        let rule = error_rule(mesh.dim());
        let mut out = vec![Complex64::default(); self.n_dofs()];
        for e in 0..mesh.elements().len() {
            let el = &mesh.elements()[e];
            let measure = mesh.element_measure(e);
            for (lambda, w) in &rule {
                let x = phys_point(mesh, e, lambda);
                let weight = w * measure;
                for (l, &v) in el.iter().enumerate() {
                    for k in 0..m {
                        out[v * m + k] += f(k, &x) * Complex64::new(lambda[l] * weight, 0.0);
                    }
                }
            }
        }
        out
    }

    /// ⟨ψ, γv⟩ over the boundary (or the tagged part of it), assembled with
    /// 2-point Gauss per edge; point evaluation in 1D.
    pub fn boundary_functional<F: Fn(usize, &[f64]) -> Complex64>(
        &self,
        psi: F,
        tags: Option<&BTreeSet<u32>>,
    ) -> Vec<Complex64> {
        let mesh = &self.mesh;
        let m = self.coeffs.m;
        let mut out = vec![Complex64::default(); self.n_dofs()];
        for facet in mesh.boundary() {
            if let Some(t) = tags {
                if !t.contains(&facet.tag) {
                    continue;
                }
            }
            match mesh.dim() {
                1 => {
                    let v = facet.vertices[0];
                    let x = mesh.vertex(v).to_vec();
                    for k in 0..m {
                        out[v * m + k] += psi(k, &x);
                    }
                }
                _ => {
                    let a = mesh.vertex(facet.vertices[0]).to_vec();
                    let b = mesh.vertex(facet.vertices[1]).to_vec();
                    let len = mesh.facet_measure(facet);
                    let g = 0.5 / 3f64.sqrt();
                    for &t in &[0.5 - g, 0.5 + g] {
                        let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                        let w = 0.5 * len;
                        for (loc, &v) in facet.vertices.iter().enumerate() {
                            let shape = if loc == 0 { 1.0 - t } else { t };
                            for k in 0..m {
                                out[v * m + k] += psi(k, &x) * Complex64::new(shape * w, 0.0);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Aggregate right-hand side from a volume density and a boundary flux.
    pub fn aggregate_rhs<F, P>(&self, f: F, psi: P, tags: Option<&BTreeSet<u32>>) -> AggregateRhs
    where
        F: Fn(usize, &[f64]) -> Complex64,
        P: Fn(usize, &[f64]) -> Complex64,
    {
        AggregateRhs {
            volume: self.volume_functional(f),
            boundary: self.boundary_functional(psi, tags),
        }
    }

    /// The aggregate operator: (Ľu)_p = E(u, φ_p) over all nodes including
    /// boundary ones.
    pub fn apply_aggregate(&self, u: &FemField) -> Vec<Complex64> {
        self.matrix.matvec(&u.values)
    }

    /// Residual of the aggregate second Green identity
    /// ⟨Ľu, v̄⟩ = ⟨u, conj(Ľ*v)⟩, an exact transpose relation discretely.
    pub fn aggregate_second_green_check(&self, u: &FemField, v: &FemField) -> f64 {
        let adj = self.assemble_adjoint();
        let eu = self.matrix.matvec(&u.values);
        let e_star_v = adj.matvec(&v.values);
        let mut lhs = Complex64::default();
        let mut mass = 0.0;
        for (vv, e) in v.values.iter().zip(&eu) {
            lhs += vv.conj() * e;
            mass += (vv.conj() * e).norm();
        }
        let mut rhs = Complex64::default();
        for (uu, e) in u.values.iter().zip(&e_star_v) {
            rhs += uu * e.conj();
            mass += (uu * e.conj()).norm();
        }
        // normalise by the L1 mass of the pairings, not the (possibly
        // cancelling) sums
        (lhs - rhs).norm() / mass.max(1e-300)
    }

    fn require_elliptic(&self) -> Result<()> {
        let margin = self.ellipticity_margin();
        if margin <= 0.0 {
            return Err(Error::NotElliptic { margin });
        }
        Ok(())
    }

    /// Weak Dirichlet problem: E(u,v) = ⟨f,v⟩ for interior test functions,
    /// γu = φ0 imposed by nodal interpolation.
    pub fn solve_dirichlet<P>(&self, f: &[Complex64], phi0: P) -> Result<FemField>
    where
        P: Fn(usize, &[f64]) -> Complex64,
    {
        self.require_elliptic()?;
        let m = self.coeffs.m;
        let mut mat = self.matrix.clone();
        let mut rhs = f.to_vec();
        for &b in self.mesh.boundary_nodes() {
            let x = self.mesh.vertex(b).to_vec();
            for k in 0..m {
                let dof = b * m + k;
                mat.set_unit_row(dof);
                rhs[dof] = phi0(k, &x);
            }
        }
        self.factor_solve(mat, &rhs)
    }

    /// Weak Neumann problem: E(u,v) = ⟨f̌,v⟩ against all nodal functions.
    /// Singular systems (nullspace of per-component constants) require the
    /// compatibility defect ⟨f̌, e_k⟩ to vanish; the solution is then fixed by
    /// the zero-mean constraint.
    pub fn solve_neumann(&self, rhs: &AggregateRhs) -> Result<FemField> {
        self.require_elliptic()?;
        let f = rhs.total();
        match self.factor_solve(self.matrix.clone(), &f) {
            Ok(u) => Ok(u),
            Err(Error::SingularSystem(_)) => {
                let m = self.coeffs.m;
                let scale: f64 = f.iter().map(|z| z.norm()).sum::<f64>().max(1e-300);
                for k in 0..m {
                    let defect: Complex64 = (0..self.mesh.n_vertices())
                        .map(|p| f[p * m + k])
                        .sum();
                    if defect.norm() > 1e-10 * scale {
                        return Err(Error::Incompatible {
                            defect: defect.norm() / scale,
                            tol: 1e-10,
                        });
                    }
                }
                // Pin one dof per component, then shift to zero mean; on
                // compatible data this is the zero-mean constrained solution.
                let mut mat = self.matrix.clone();
                let mut fr = f.clone();
                for k in 0..m {
                    mat.set_unit_row(k);
                    fr[k] = Complex64::default();
                }
                let mut u = self.factor_solve(mat, &fr)?;
                let ones = self.volume_functional(|_, _| Complex64::new(1.0, 0.0));
                let volume: f64 = (0..self.mesh.n_vertices()).map(|p| ones[p * m].re).sum();
                for k in 0..m {
                    let mean: Complex64 = (0..self.mesh.n_vertices())
                        .map(|p| u.values[p * m + k] * ones[p * m + k])
                        .sum::<Complex64>()
                        / volume;
                    for p in 0..self.mesh.n_vertices() {
                        u.values[p * m + k] -= mean;
                    }
                }
                Ok(u)
            }
            Err(e) => Err(e),
        }
    }

    /// Weak mixed problem: Dirichlet data on the tagged part, the aggregate
    /// functional tested against interior and Neumann-part nodes only.
    pub fn solve_mixed<P>(
        &self,
        rhs: &AggregateRhs,
        phi0: P,
        dirichlet_tags: &BTreeSet<u32>,
    ) -> Result<FemField>
    where
        P: Fn(usize, &[f64]) -> Complex64,
    {
        let dirichlet_nodes = self.dirichlet_nodes(dirichlet_tags);
        if dirichlet_nodes.is_empty() {
            return self.solve_neumann(rhs);
        }
        self.require_elliptic()?;
        let m = self.coeffs.m;
        let mut mat = self.matrix.clone();
        let mut f = rhs.total();
        for &b in &dirichlet_nodes {
            let x = self.mesh.vertex(b).to_vec();
            for k in 0..m {
                let dof = b * m + k;
                mat.set_unit_row(dof);
                f[dof] = phi0(k, &x);
            }
        }
        self.factor_solve(mat, &f)
    }

    /// Nodes lying on facets with a Dirichlet tag (corner nodes shared with
    /// the Neumann part count as Dirichlet).
    pub fn dirichlet_nodes(&self, tags: &BTreeSet<u32>) -> Vec<usize> {
        let mut nodes: Vec<usize> = self
            .mesh
            .boundary()
            .iter()
            .filter(|fct| tags.contains(&fct.tag))
            .flat_map(|fct| fct.vertices.iter().copied())
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    fn factor_solve(&self, mat: BandMatrix, rhs: &[Complex64]) -> Result<FemField> {
        let check = mat.clone();
        let lu = mat.factor()?;
        let x = lu.solve(rhs);
        let ax = check.matvec(&x);
        let mut num = 0.0;
        let mut den = 0.0;
        for (a, b) in ax.iter().zip(rhs) {
            num += (a - b).norm_sqr();
            den += b.norm_sqr();
        }
        let rel = (num / den.max(1e-300)).sqrt();
        if rel > 1e-10 && den > 0.0 {
            return Err(Error::SingularSystem(format!(
                "solver residual {rel:.3e} exceeds 1e-10 (min pivot {:.3e})",
                lu.min_pivot()
            )));
        }
        Ok(FemField::new(self.mesh.clone(), self.coeffs.m, x))
    }

    /// Max interior Galerkin residual |E(u_h, φ_p) - ⟨f, φ_p⟩| over interior
    /// nodes, relative to the functional scale.
    pub fn galerkin_residual(&self, u: &FemField, f: &[Complex64]) -> f64 {
        let eu = self.matrix.matvec(&u.values);
        let m = self.coeffs.m;
        let scale: f64 = f.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
        let mut worst: f64 = 0.0;
        for p in 0..self.mesh.n_vertices() {
            if self.mesh.is_boundary_node(p) {
                continue;
            }
            for k in 0..m {
                worst = worst.max((eu[p * m + k] - f[p * m + k]).norm());
            }
        }
        worst / scale
    }
}

/// Both sides of the distance-weighted inequality
/// ∫ dist(x,∂Ω)^{-2s} |u|² dx <= C ||u||²_{H^s(Ω)}, 0 < s < 1/2.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DistanceWeightReport {
    pub s: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Exact distance to the polygonal boundary.
fn boundary_distance(mesh: &Mesh, x: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for facet in mesh.boundary() {
        match mesh.dim() {
            1 => {
                let p = mesh.vertex(facet.vertices[0])[0];
                best = best.min((x[0] - p).abs());
            }
            _ => {
                let a = mesh.vertex(facet.vertices[0]);
                let b = mesh.vertex(facet.vertices[1]);
                let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                let len2 = dx * dx + dy * dy;
                let t = (((x[0] - a[0]) * dx + (x[1] - a[1]) * dy) / len2).clamp(0.0, 1.0);
                let (px, py) = (a[0] + t * dx, a[1] + t * dy);
                best = best.min(((x[0] - px).powi(2) + (x[1] - py).powi(2)).sqrt());
            }
        }
    }
    best
}

/// The weighted integral on the left side: closed form per element in 1D
/// (the integrand is t^{-2s} times a quadratic), subdivided quadrature in 2D.
pub fn distance_weighted_l2(u: &FemField, s: f64) -> Result<f64> {
    if !(0.0 < s && s < 0.5) {
        return Err(Error::Domain(format!(
            "distance weight needs 0 < s < 1/2, got {s}"
        )));
    }
    let mesh = &u.mesh;
    let m = u.m;
    match mesh.dim() {
        1 => {
            let a = mesh.vertex(0)[0].min(mesh.vertex(mesh.n_vertices() - 1)[0]);
            let b = mesh.vertex(0)[0].max(mesh.vertex(mesh.n_vertices() - 1)[0]);
            let midpoint = 0.5 * (a + b);
            let mut total = 0.0;
            // ∫ t^{-2s} |α + βt|² dt in closed form, t the distance to the
            // nearer endpoint
            let mut piece = |t0: f64, t1: f64, ua: Complex64, ub: Complex64| {
                if t1 <= t0 {
                    return;
                }
                let beta = (ub - ua) / Complex64::new(t1 - t0, 0.0);
                let alpha = ua - beta * t0;
                let pow = |t: f64, e: f64| if t == 0.0 { 0.0 } else { t.powf(e) };
                let t1k = |k: f64| (pow(t1, k - 2.0 * s) - pow(t0, k - 2.0 * s)) / (k - 2.0 * s);
                total += alpha.norm_sqr() * t1k(1.0)
                    + 2.0 * (alpha.conj() * beta).re * t1k(2.0)
                    + beta.norm_sqr() * t1k(3.0);
            };
            for e in 0..mesh.elements().len() {
                let el = &mesh.elements()[e];
                let (x0, x1) = (mesh.vertex(el[0])[0], mesh.vertex(el[1])[0]);
                for k in 0..m {
                    let (u0, u1) = (u.values[el[0] * m + k], u.values[el[1] * m + k]);
                    let interp = |x: f64| {
                        u0 + (u1 - u0) * Complex64::new((x - x0) / (x1 - x0), 0.0)
                    };
                    if x1 <= midpoint {
                        piece(x0 - a, x1 - a, u0, u1);
                    } else if x0 >= midpoint {
                        piece(b - x1, b - x0, u1, u0);
                    } else {
                        piece(x0 - a, midpoint - a, u0, interp(midpoint));
                        piece(b - midpoint, b - x0, interp(midpoint), u0);
                        piece(b - x1, b - midpoint, u1, interp(midpoint));
                    }
                }
            }
            Ok(total)
        }
        _ => {
            let rule = tri7();
            let mut total = 0.0;
            let h = mesh.h_max();
            for e in 0..mesh.elements().len() {
                let el = &mesh.elements()[e];
                let verts: Vec<[f64; 2]> =
                    el.iter().map(|&v| [mesh.vertex(v)[0], mesh.vertex(v)[1]]).collect();
                let vals: Vec<Vec<Complex64>> = (0..m)
                    .map(|k| el.iter().map(|&v| u.values[v * m + k]).collect())
                    .collect();
                let near = verts
                    .iter()
                    .map(|p| boundary_distance(mesh, p))
                    .fold(f64::INFINITY, f64::min)
                    < 1.5 * h;
                let levels = if near { 2 } else { 0 };
                total += weighted_tri_integral(mesh, &verts, &vals, s, levels, &rule);
            }
            Ok(total)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn weighted_tri_integral(
    mesh: &Mesh,
    verts: &[[f64; 2]],
    vals: &[Vec<Complex64>],
    s: f64,
    levels: usize,
    rule: &[([f64; 3], f64)],
) -> f64 {
    if levels > 0 {
        // uniform 4-way split; P1 data interpolates linearly at edge midpoints
        let mid = |i: usize, j: usize| {
            [
                0.5 * (verts[i][0] + verts[j][0]),
                0.5 * (verts[i][1] + verts[j][1]),
            ]
        };
        let points = [verts[0], verts[1], verts[2], mid(0, 1), mid(1, 2), mid(0, 2)];
        let data: Vec<Vec<Complex64>> = vals
            .iter()
            .map(|comp| {
                let half = Complex64::new(0.5, 0.0);
                vec![
                    comp[0],
                    comp[1],
                    comp[2],
                    (comp[0] + comp[1]) * half,
                    (comp[1] + comp[2]) * half,
                    (comp[0] + comp[2]) * half,
                ]
            })
            .collect();
        let mut total = 0.0;
        for idx in [[0usize, 3, 5], [3, 1, 4], [5, 4, 2], [3, 4, 5]] {
            let vv: Vec<[f64; 2]> = idx.iter().map(|&i| points[i]).collect();
            let cc: Vec<Vec<Complex64>> = data
                .iter()
                .map(|comp| idx.iter().map(|&i| comp[i]).collect())
                .collect();
            total += weighted_tri_integral(mesh, &vv, &cc, s, levels - 1, rule);
        }
        return total;
    }
    let area = 0.5
        * ((verts[1][0] - verts[0][0]) * (verts[2][1] - verts[0][1])
            - (verts[2][0] - verts[0][0]) * (verts[1][1] - verts[0][1]))
            .abs();
    let mut acc = 0.0;
    for (lam, w) in rule {
        let x = [
            lam[0] * verts[0][0] + lam[1] * verts[1][0] + lam[2] * verts[2][0],
            lam[0] * verts[0][1] + lam[1] * verts[1][1] + lam[2] * verts[2][1],
        ];
        let d = boundary_distance(mesh, &x).max(1e-14);
        let mut u2 = 0.0;
        for comp in vals {
            let uv = comp[0] * Complex64::new(lam[0], 0.0)
                + comp[1] * Complex64::new(lam[1], 0.0)
                + comp[2] * Complex64::new(lam[2], 0.0);
            u2 += uv.norm_sqr();
        }
        acc += w * area * d.powf(-2.0 * s) * u2;
    }
    acc
}

/// Evaluate both sides of the distance-weight inequality; the H^s(Ω) norm is
/// realised as the ambient-grid norm of the zero extension (legitimate for
/// s < 1/2 where the two spaces coincide).
pub fn distance_weight_check(
    u: &FemField,
    s: f64,
    ambient: &GridSpec,
) -> Result<DistanceWeightReport> {
    let lhs = distance_weighted_l2(u, s)?;
    let embedded = u.embed(ambient)?;
    let rhs = embedded.sobolev_norm(s).powi(2);
    Ok(DistanceWeightReport {
        s,
        lhs,
        rhs,
        ratio: lhs / rhs.max(1e-300),
    })
}

/// Ambient-grid H^s norms of the zero extension of a field with vanishing
/// boundary trace, per index s and per grid. Bounded under refinement for
/// s < 3/2, growing beyond.
pub fn zero_extension_probe(
    u: &FemField,
    s_list: &[f64],
    grids: &[GridSpec],
) -> Result<Vec<(f64, Vec<f64>)>> {
    let m = u.m;
    let scale = u.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for &b in u.mesh.boundary_nodes() {
        for k in 0..m {
            if u.values[b * m + k].norm() > 1e-12 * scale.max(1e-300) {
                return Err(Error::Domain(
                    "zero-extension probe requires zero boundary trace".into(),
                ));
            }
        }
    }
    let fields: Vec<SpectralField> = grids
        .iter()
        .map(|g| u.embed(g))
        .collect::<Result<Vec<_>>>()?;
    Ok(s_list
        .iter()
        .map(|&s| (s, fields.iter().map(|f| f.sobolev_norm(s)).collect()))
        .collect())
}

/// CSV export of a P1 field: node coordinates then per-component values.
pub fn write_solution_csv<P: AsRef<std::path::Path>>(u: &FemField, path: P) -> Result<()> {
    use std::io::Write;
    let mesh = &u.mesh;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut header = String::from(if mesh.dim() == 1 { "x" } else { "x,y" });
    for k in 0..u.m {
        header.push_str(&format!(",re_{k},im_{k}"));
    }
    writeln!(out, "{header}")?;
    for v in 0..mesh.n_vertices() {
        let p = mesh.vertex(v);
        let mut line = if mesh.dim() == 1 {
            format!("{:.12e}", p[0])
        } else {
            format!("{:.12e},{:.12e}", p[0], p[1])
        };
        for k in 0..u.m {
            let val = u.values[v * u.m + k];
            line.push_str(&format!(",{:.12e},{:.12e}", val.re, val.im));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Boundary P1 mass matrix over the boundary nodes (vertex order follows
/// `mesh.boundary_nodes()`), one block per component.
pub fn boundary_mass(mesh: &Mesh, m: usize) -> DenseMatrix {
    let nodes = mesh.boundary_nodes();
    let nb = nodes.len();
    let mut mat = DenseMatrix::new(nb * m);
    match mesh.dim() {
        1 => {
            // the boundary measure is a pair of point masses
            for (i, _) in nodes.iter().enumerate() {
                for k in 0..m {
                    mat.add(i * m + k, i * m + k, Complex64::new(1.0, 0.0));
                }
            }
        }
        _ => {
            for facet in mesh.boundary() {
                let len = mesh.facet_measure(facet);
                let local = [(0usize, 0usize, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)];
                for &(a, b, w) in &local {
                    let ia = mesh.boundary_index(facet.vertices[a]).expect("boundary node");
                    let ib = mesh.boundary_index(facet.vertices[b]).expect("boundary node");
                    for k in 0..m {
                        mat.add(
                            ia * m + k,
                            ib * m + k,
                            Complex64::new(len * w / 6.0, 0.0),
                        );
                    }
                }
            }
        }
    }
    mat
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn interior_stiffness_rows_are_textbook() {
        let mesh = Arc::new(Mesh::interval(0.0, 1.0, 8).unwrap());
        let sys = FemSystem::new(mesh, CoefficientSet::laplacian(1, 1)).unwrap();
        let h = 1.0 / 8.0;
        for i in 1..8 {
            assert!((sys.matrix().get(i, i) - c(2.0 / h)).norm() < 1e-12);
            assert!((sys.matrix().get(i, i - 1) - c(-1.0 / h)).norm() < 1e-12);
            assert!((sys.matrix().get(i, i + 1) - c(-1.0 / h)).norm() < 1e-12);
        }
    }

    #[test]
    fn mass_matrix_rows_sum_to_h() {
        let mesh = Arc::new(Mesh::interval(0.0, 1.0, 8).unwrap());
        let coeffs = CoefficientSet {
            dim: 1,
            m: 1,
            a: vec![const_matrix(1, Complex64::default())],
            b: None,
            c: Some(const_matrix(1, c(1.0))),
            theta: None,
        };
        let sys = FemSystem::new(mesh, coeffs).unwrap();
        let h = 1.0 / 8.0;
        for i in 1..8 {
            let sum = sys.matrix().get(i, i - 1) + sys.matrix().get(i, i) + sys.matrix().get(i, i + 1);
            assert!((sum - c(h)).norm() < 1e-13, "row {i}: {sum}");
        }
    }

    #[test]
    fn variable_coefficient_entries_match_quadrature_oracle() {
        // a(x) = 1 + x on (0,1), h = 1/4: off-diagonal entry (i, i+1) equals
        // -(1 + midpoint)/h exactly since a is linear; 3-point Gauss is exact.
        let mesh = Arc::new(Mesh::interval(0.0, 1.0, 4).unwrap());
        let coeffs = CoefficientSet::scalar_variable(1, |x: &[f64]| 1.0 + x[0], 0.0);
        let sys = FemSystem::new(mesh, coeffs).unwrap();
        let h = 0.25;
        for i in 0..4 {
            let mid = (i as f64 + 0.5) * h;
            let expect = -(1.0 + mid) / h;
            let got = sys.matrix().get(i, i + 1);
            assert!((got - c(expect)).norm() < 1e-14, "i={i}: {got} vs {expect}");
        }
        // diagonal of interior node i: (1 + mid_left)/h + (1 + mid_right)/h
        for i in 1..4 {
            let expect = (1.0 + (i as f64 - 0.5) * h) / h + (1.0 + (i as f64 + 0.5) * h) / h;
            let got = sys.matrix().get(i, i);
            assert!((got - c(expect)).norm() < 1e-13);
        }
    }

    #[test]
    fn ellipticity_margins() {
        let mesh = Mesh::interval(0.0, 1.0, 16).unwrap();
        let pts = ellipticity_sample_points(&mesh);
        // scalar identity
        let lap = CoefficientSet::laplacian(1, 1);
        assert!((check_strong_ellipticity(&lap, &pts) - 1.0).abs() < 1e-12);
        // decoupled diag(1,2) system
        let two = CoefficientSet {
            dim: 1,
            m: 2,
            a: vec![Arc::new(|_: &[f64]| {
                vec![c(1.0), c(0.0), c(0.0), c(2.0)]
            })],
            b: None,
            c: None,
            theta: None,
        };
        assert!((check_strong_ellipticity(&two, &pts) - 1.0).abs() < 1e-12);
        // a(x) = 1 + sin(2πx)/2 has margin 1/2
        let mesh2 = Mesh::interval(0.0, 1.0, 64).unwrap();
        let pts2 = ellipticity_sample_points(&mesh2);
        let varying = CoefficientSet::scalar_variable(1, |x: &[f64]| 1.0 + 0.5 * (2.0 * PI * x[0]).sin(), 0.0);
        let margin = check_strong_ellipticity(&varying, &pts2);
        assert!((margin - 0.5).abs() < 2e-3, "margin {margin}");
    }

    #[test]
    fn dirichlet_patch_test_affine_exact() {
        for mesh in [
            Arc::new(Mesh::interval(0.0, 1.0, 7).unwrap()),
            Arc::new(Mesh::unit_square(5).unwrap()),
        ] {
            let dim = mesh.dim();
            let sys = FemSystem::new(mesh.clone(), CoefficientSet::laplacian(dim, 1)).unwrap();
            let affine = |x: &[f64]| 0.7 + 2.0 * x[0] - if x.len() > 1 { 1.3 * x[1] } else { 0.0 };
            let f = vec![Complex64::default(); sys.n_dofs()];
            let u = sys.solve_dirichlet(&f, |_, x| c(affine(x))).unwrap();
            for v in 0..mesh.n_vertices() {
                let expect = affine(mesh.vertex(v));
                assert!(
                    (u.values[v] - c(expect)).norm() <= 1e-10,
                    "vertex {v}: {} vs {expect}",
                    u.values[v]
                );
            }
        }
    }

    #[test]
    fn neumann_recovers_discrete_field() {
        // well-posed case c = 1: build f̌ = Ľ u0 and recover u0
        let mesh = Arc::new(Mesh::unit_square(6).unwrap());
        let sys = FemSystem::new(mesh.clone(), CoefficientSet::helmholtz(2, 1, 1.0)).unwrap();
        let u0 = FemField::from_fn(mesh, 1, |_, x| c((PI * x[0]).cos() * x[1].powi(2) + 0.3));
        let f = sys.apply_aggregate(&u0);
        let rhs = AggregateRhs {
            volume: f,
            boundary: vec![Complex64::default(); sys.n_dofs()],
        };
        let u = sys.solve_neumann(&rhs).unwrap();
        for (a, b) in u.values.iter().zip(&u0.values) {
            assert!((a - b).norm() <= 1e-10);
        }
    }

    #[test]
    fn pure_neumann_incompatible_rhs_errors() {
        let mesh = Arc::new(Mesh::interval(0.0, 1.0, 16).unwrap());
        let sys = FemSystem::new(mesh, CoefficientSet::laplacian(1, 1)).unwrap();
        // f = 1 pairs nonzero with the constant: incompatible
        let rhs = AggregateRhs {
            volume: sys.volume_functional(|_, _| c(1.0)),
            boundary: vec![Complex64::default(); sys.n_dofs()],
        };
        assert!(matches!(
            sys.solve_neumann(&rhs),
            Err(Error::Incompatible { .. })
        ));
    }

    #[test]
    fn pure_neumann_compatible_solves_mean_zero() {
        let mesh = Arc::new(Mesh::interval(0.0, 1.0, 32).unwrap());
        let sys = FemSystem::new(mesh.clone(), CoefficientSet::laplacian(1, 1)).unwrap();
        // -u'' = f with u = cos(πx): f = π² cos(πx), u'(0) = u'(1) = 0, mean 0
        let rhs = AggregateRhs {
            volume: sys.volume_functional(|_, x| c(PI * PI * (PI * x[0]).cos())),
            boundary: vec![Complex64::default(); sys.n_dofs()],
        };
        let u = sys.solve_neumann(&rhs).unwrap();
        let exact = FemField::from_fn(mesh, 1, |_, x| c((PI * x[0]).cos()));
        let mut worst: f64 = 0.0;
        for (a, b) in u.values.iter().zip(&exact.values) {
            worst = worst.max((a - b).norm());
        }
        assert!(worst < 5e-3, "nodal error {worst}");
    }

    #[test]
    fn mixed_affine_patch_test_is_exact() {
        // affine u = 1 + 2x - y, Dirichlet on the left edge, matching flux
        // -∂u/∂ν on the Neumann edges; P1 reproduces it to rounding.
        let mesh = Arc::new(Mesh::unit_square(6).unwrap());
        let sys = FemSystem::new(mesh.clone(), CoefficientSet::laplacian(2, 1)).unwrap();
        let ntags: BTreeSet<u32> =
            [crate::mesh::TAG_RIGHT, crate::mesh::TAG_BOTTOM, crate::mesh::TAG_TOP].into();
        let flux = |_: usize, x: &[f64]| {
            // grad u = (2, -1); outward normals of right/bottom/top edges
            if (x[0] - 1.0).abs() < 1e-12 {
                c(2.0)
            } else if x[1].abs() < 1e-12 {
                c(1.0)
            } else {
                c(-1.0)
            }
        };
        let rhs = AggregateRhs {
            volume: vec![Complex64::default(); sys.n_dofs()],
            boundary: sys.boundary_functional(flux, Some(&ntags)),
        };
        let dtags: BTreeSet<u32> = [crate::mesh::TAG_LEFT].into();
        let u = sys
            .solve_mixed(&rhs, |_, x| c(1.0 + 2.0 * x[0] - x[1]), &dtags)
            .unwrap();
        let mut worst: f64 = 0.0;
        for v in 0..mesh.n_vertices() {
            let p = mesh.vertex(v);
            worst = worst.max((u.values[v] - c(1.0 + 2.0 * p[0] - p[1])).norm());
        }
        assert!(worst <= 1e-10, "error {worst}");
    }

    #[test]
    fn mixed_quadratic_solution_converges_second_order() {
        // u = x(2-x), Dirichlet on the left edge, zero natural flux elsewhere.
        let solve = |n: usize| -> f64 {
            let mesh = Arc::new(Mesh::unit_square(n).unwrap());
            let sys = FemSystem::new(mesh.clone(), CoefficientSet::laplacian(2, 1)).unwrap();
            let rhs = AggregateRhs {
                volume: sys.volume_functional(|_, _| c(2.0)),
                boundary: vec![Complex64::default(); sys.n_dofs()],
            };
            let dtags: BTreeSet<u32> = [crate::mesh::TAG_LEFT].into();
            let u = sys.solve_mixed(&rhs, |_, _| c(0.0), &dtags).unwrap();
            let (l2, _) = u.error_norms(
                |_, x| c(x[0] * (2.0 - x[0])),
                |_, x| vec![c(2.0 - 2.0 * x[0]), c(0.0)],
            );
            l2
        };
        let e1 = solve(8);
        let e2 = solve(16);
        let rate = (e1 / e2).log2();
        assert!(rate >= 1.9, "rate {rate}");
    }

    #[test]
    fn mixed_with_empty_dirichlet_redirects() {
        let mesh = Arc::new(Mesh::interval(0.0, 1.0, 16).unwrap());
        let sys = FemSystem::new(mesh, CoefficientSet::helmholtz(1, 1, 1.0)).unwrap();
        let rhs = AggregateRhs {
            volume: sys.volume_functional(|_, _| c(1.0)),
            boundary: vec![Complex64::default(); sys.n_dofs()],
        };
        let tags: BTreeSet<u32> = BTreeSet::new();
        let a = sys.solve_mixed(&rhs, |_, _| c(0.0), &tags).unwrap();
        let b = sys.solve_neumann(&rhs).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn block_diagonal_system_matches_scalar_solves() {
        let mesh = Arc::new(Mesh::unit_square(8).unwrap());
        let scalar = FemSystem::new(mesh.clone(), CoefficientSet::laplacian(2, 1)).unwrap();
        let system = FemSystem::new(mesh.clone(), CoefficientSet::laplacian(2, 2)).unwrap();
        let f_scalar = scalar.volume_functional(|_, x| c(2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin()));
        let f_sys = system.volume_functional(|_, x| c(2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin()));
        let us = scalar.solve_dirichlet(&f_scalar, |_, _| c(0.0)).unwrap();
        let uv = system.solve_dirichlet(&f_sys, |_, _| c(0.0)).unwrap();
        for v in 0..mesh.n_vertices() {
            for k in 0..2 {
                assert!((uv.values[v * 2 + k] - us.values[v]).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn galerkin_orthogonality_holds() {
        let mesh = Arc::new(Mesh::unit_square(8).unwrap());
        let sys = FemSystem::new(mesh, CoefficientSet::helmholtz(2, 1, 1.0)).unwrap();
        let f = sys.volume_functional(|_, x| c((3.0 * x[0] - x[1]).sin()));
        let u = sys.solve_dirichlet(&f, |_, _| c(0.0)).unwrap();
        assert!(sys.galerkin_residual(&u, &f) <= 1e-10);
    }

    #[test]
    fn a2gi_residual_is_roundoff() {
        use crate::rng::seeded_rng;
        use rand::Rng;
        let mesh = Arc::new(Mesh::unit_square(5).unwrap());
        // complex non-symmetric coefficients
        let coeffs = CoefficientSet {
            dim: 2,
            m: 2,
            a: (0..4)
                .map(|t| -> MatrixFn {
                    Arc::new(move |x: &[f64]| {
                        let base = 1.0 + 0.3 * (x[0] + (t as f64) * x[1]).sin();
                        vec![
                            Complex64::new(base + if t % 3 == 0 { 1.0 } else { 0.0 }, 0.1),
                            Complex64::new(0.2, -0.05 * base),
                            Complex64::new(-0.1 * base, 0.02),
                            Complex64::new(base + 1.0, -0.1),
                        ]
                    })
                })
                .collect(),
            b: Some(
                (0..2)
                    .map(|t| -> MatrixFn {
                        Arc::new(move |x: &[f64]| {
                            vec![
                                Complex64::new(x[0] * 0.4, 0.1),
                                Complex64::new(0.3 * (t as f64), -0.2),
                                Complex64::new(-0.15, x[1] * 0.1),
                                Complex64::new(0.05, 0.25),
                            ]
                        })
                    })
                    .collect(),
            ),
            c: Some(Arc::new(|x: &[f64]| {
                vec![
                    Complex64::new(1.0 + x[0], 0.3),
                    Complex64::new(0.2, 0.1),
                    Complex64::new(-0.1, 0.4),
                    Complex64::new(2.0 - x[1], -(0.2)),
                ]
            })),
            theta: None,
        };
        let sys = FemSystem::new(mesh.clone(), coeffs).unwrap();
        let mut rng = seeded_rng(33);
        let mut rand_field = || {
            FemField::new(
                mesh.clone(),
                2,
                (0..sys.n_dofs())
                    .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                    .collect(),
            )
        };
        let u = rand_field();
        let v = rand_field();
        assert!(sys.aggregate_second_green_check(&u, &v) <= 1e-12);
    }

    #[test]
    fn adjoint_matrix_of_real_symmetric_problem_is_transpose() {
        let mesh = Arc::new(Mesh::unit_square(4).unwrap());
        let sys = FemSystem::new(mesh, CoefficientSet::helmholtz(2, 1, 2.0)).unwrap();
        let adj = sys.assemble_adjoint();
        let n = sys.n_dofs();
        for i in 0..n {
            for j in i.saturating_sub(12)..n.min(i + 12) {
                let d = (sys.matrix().get(i, j) - adj.get(j, i).conj()).norm();
                assert!(d <= 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn adjoint_strong_form_spot_check() {
        // For L = -Δ + b·∇ with constant real b, L*v = -Δv - b·∇v. Check
        // E*(v, u) = ⟨L*v, u⟩ for smooth v and interior u by quadrature.
        let mesh = Arc::new(Mesh::unit_square(24).unwrap());
        let b: [f64; 2] = [0.7, -0.4];
        let coeffs = CoefficientSet::laplacian(2, 1).with_b(vec![
            Arc::new(move |_: &[f64]| vec![c(b[0])]),
            Arc::new(move |_: &[f64]| vec![c(b[1])]),
        ]);
        let sys = FemSystem::new(mesh.clone(), coeffs).unwrap();
        let adj = sys.assemble_adjoint();
        let v_exact = |x: &[f64]| (PI * x[0]).sin() * (PI * x[1]).sin();
        let lstar_v = move |x: &[f64]| {
            let s0 = (PI * x[0]).sin();
            let s1 = (PI * x[1]).sin();
            let c0 = (PI * x[0]).cos();
            let c1 = (PI * x[1]).cos();
            2.0 * PI * PI * s0 * s1 - b[0] * PI * c0 * s1 - b[1] * PI * s0 * c1
        };
        let v = FemField::from_fn(mesh.clone(), 1, |_, x| c(v_exact(x)));
        let ev = adj.matvec(&v.values);
        let oracle = sys.volume_functional(|_, x| c(lstar_v(x)));
        // compare on interior nodes, normalised by the functional scale ~h²
        let scale = oracle.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for p in 0..mesh.n_vertices() {
            if mesh.is_boundary_node(p) {
                continue;
            }
            worst = worst.max((ev[p] - oracle[p]).norm());
        }
        // discretisation error: first order consistency of P1 nodal residuals
        assert!(worst / scale < 0.02, "relative spot error {}", worst / scale);
    }

    #[test]
    fn distance_weight_constant_function_closed_form() {
        // u = 1 on (0,1), s = 1/4: ∫ min(x,1-x)^{-1/2} dx = 2√2
        let mesh = Arc::new(Mesh::interval(0.0, 1.0, 64).unwrap());
        let u = FemField::from_fn(mesh, 1, |_, _| c(1.0));
        let lhs = distance_weighted_l2(&u, 0.25).unwrap();
        assert!((lhs - 2.0 * 2f64.sqrt()).abs() < 1e-12, "lhs {lhs}");
    }

    #[test]
    fn distance_weight_vanishing_near_boundary_is_plain_l2_like() {
        let mesh = Arc::new(Mesh::interval(0.0, 1.0, 64).unwrap());
        // bump supported in (1/4, 3/4)
        let u = FemField::from_fn(mesh, 1, |_, x| {
            let t = x[0];
            if t > 0.25 && t < 0.75 {
                c(((t - 0.25) * (0.75 - t) * 16.0).powi(2))
            } else {
                c(0.0)
            }
        });
        let lhs = distance_weighted_l2(&u, 0.4).unwrap();
        assert!(lhs.is_finite() && lhs > 0.0);
        // weight <= 4^{2s} on the support
        let l2: f64 = {
            let (l2e, _) = u.error_norms(|_, _| c(0.0), |_, _| vec![c(0.0)]);
            l2e * l2e
        };
        assert!(lhs <= 4f64.powf(0.8) * l2 * 1.01);
    }

    #[test]
    fn distance_weight_ratio_stable_under_refinement() {
        let ambient = GridSpec::new(&[4.0], &[512], 1).unwrap();
        let mut ratios = Vec::new();
        for cells in [16, 32, 64] {
            let mesh = Arc::new(Mesh::interval(0.0, 1.0, cells).unwrap());
            let u = FemField::from_fn(mesh, 1, |_, x| c((PI * x[0]).sin()));
            let report = distance_weight_check(&u, 0.25, &ambient).unwrap();
            ratios.push(report.ratio);
        }
        for r in &ratios {
            assert!(r.is_finite() && *r > 0.0);
        }
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max / min < 2.0, "ratios {ratios:?}");
    }

    #[test]
    fn embed_reproduces_interpolant_values() {
        let mesh = Arc::new(Mesh::interval(0.0, 1.0, 32).unwrap());
        let u = FemField::from_fn(mesh, 1, |_, x| c((PI * x[0]).sin()));
        let grid = GridSpec::new(&[4.0], &[256], 1).unwrap();
        let f = u.embed(&grid).unwrap();
        let vals = f.values();
        for i in 0..256 {
            let x = grid.coord(0, i);
            if !(0.0..=1.0).contains(&x) {
                assert_eq!(vals[i], Complex64::default());
            }
        }
        // midpoint of the domain lands on a grid point in this setup
        let (e, _) = (0.5f64, 0.0);
        let _ = e;
        let idx = (0.5 - grid.coord(0, 0)) / grid.spacing(0);
        assert!((vals[idx as usize].re - 1.0).abs() < 1e-3);
    }

    #[test]
    fn zero_extension_probe_growth_pattern() {
        // sin(πx) has zero trace; its zero extension lies in H^s only for
        // s < 3/2: norms stay put at s = 1 and grow at s = 1.6.
        let grids: Vec<GridSpec> = [128usize, 256, 512, 1024]
            .iter()
            .map(|&n| GridSpec::new(&[4.0], &[n], 1).unwrap())
            .collect();
        let mesh = Arc::new(Mesh::interval(0.0, 1.0, 256).unwrap());
        let u = FemField::from_fn(mesh, 1, |_, x| c((PI * x[0]).sin()));
        let rows = zero_extension_probe(&u, &[1.0, 1.6], &grids).unwrap();
        let at_1 = &rows[0].1;
        let spread = at_1.iter().cloned().fold(0.0, f64::max)
            / at_1.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 1.05, "H^1 norms should be refinement-stable: {at_1:?}");
        let at_16 = &rows[1].1;
        for w in at_16.windows(2) {
            assert!(w[1] > w[0], "H^1.6 norms should grow: {at_16:?}");
        }
        // nonzero trace is rejected
        let bad = FemField::from_fn(u.mesh.clone(), 1, |_, x| c(x[0] + 1.0));
        assert!(zero_extension_probe(&bad, &[1.0], &grids[..1]).is_err());
    }

    #[test]
    fn boundary_mass_square_has_perimeter_row_sums() {
        let mesh = Mesh::unit_square(8).unwrap();
        let mb = boundary_mass(&mesh, 1);
        let nb = mesh.boundary_nodes().len();
        let total: f64 = (0..nb)
            .map(|i| (0..nb).map(|j| mb.get(i, j).re).sum::<f64>())
            .sum();
        assert!((total - 4.0).abs() < 1e-12, "perimeter {total}");
    }
}
