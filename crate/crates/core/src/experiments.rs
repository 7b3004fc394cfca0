//! Configured, reproducible experiment runs behind the command-line
//! interface. Every run writes its fully resolved configuration next to its
//! result files; identical configs and seeds produce identical bytes.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::acceptance;
use crate::conormal::{canonical_conormal, classical_conormal, ConormalSpace};
use crate::error::{Error, Result};
use crate::estimates::{
    apriori_check, commutator, commutator_ratio, estimate_decay_index, product_bound_check,
    solve_periodic_scalar, ConstantCoefficients,
};
use crate::fem::{AggregateRhs, CoefficientSet, FemSystem};
use crate::field::SpectralField;
use crate::grid::GridSpec;
use crate::halfspace::{
    blowup_probe, extension, recover_density, trace, trace_adjoint, trace_constant,
    trace_constant_quadrature, ExtensionKernel,
};
use crate::holder::HolderFunction;
use crate::mesh::{Mesh, TAG_LEFT, TAG_RIGHT};
use crate::potential::pairing_report;
use crate::rng::random_band_limited;

/// What a run produced: a verdict, human-readable lines, artifact paths.
pub struct Outcome {
    pub passed: bool,
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            passed: true,
            lines: Vec::new(),
            files: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.lines
            .push(format!("[{}] {line}", if ok { "pass" } else { "FAIL" }));
    }

    fn note(&mut self, line: String) {
        self.lines.push(line);
    }
}

pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            toml::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", p.display())))
        }
    }
}

fn emit_config<T: Serialize>(cfg: &T, dir: &Path, name: &str, out: &mut Outcome) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{name}_config.toml"));
    let text = toml::to_string_pretty(cfg).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(&path, text)?;
    out.files.push(path);
    Ok(())
}

fn write_text(dir: &Path, name: &str, content: &str, out: &mut Outcome) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut f = std::fs::File::create(&path)?;
    f.write_all(content.as_bytes())?;
    out.files.push(path);
    Ok(())
}

// --- trace-norm -------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceNormConfig {
    pub s_values: Vec<f64>,
    /// bulk dimension n; the probe densities live on the (n-1)-hyperplane
    pub dimension: usize,
    pub points: usize,
    pub extent: f64,
    pub probes: usize,
    pub seed: u64,
}

impl Default for TraceNormConfig {
    fn default() -> Self {
        Self {
            s_values: vec![0.51, 0.55, 0.6, 0.75, 1.0],
            dimension: 2,
            points: 256,
            extent: 16.0,
            probes: 50,
            seed: 42,
        }
    }
}

pub fn run_trace_norm(cfg: &TraceNormConfig, dir: &Path) -> Result<Outcome> {
    let mut out = Outcome::new();
    emit_config(cfg, dir, "trace_norm", &mut out)?;
    let boundary = if cfg.dimension <= 1 {
        GridSpec::point(1)
    } else {
        GridSpec::cubic(cfg.dimension - 1, cfg.extent, cfg.points, 1)?
    };
    let rows = blowup_probe(&boundary, &cfg.s_values, cfg.probes, cfg.seed)?;
    let mut csv = String::from("s,c_s,c_s_quadrature,empirical_norm,ratio_to_sqrt_cs\n");
    let mut worst_quad: f64 = 0.0;
    for row in &rows {
        let quad = trace_constant_quadrature(row.s)?;
        worst_quad = worst_quad.max((quad - row.c_s).abs() / row.c_s);
        csv.push_str(&format!(
            "{:.6},{:.12e},{:.12e},{:.12e},{:.12e}\n",
            row.s, row.c_s, quad, row.empirical_norm, row.ratio_to_sqrt_cs
        ));
        out.note(format!(
            "s={:.3}: C_s={:.6} empirical={:.6} ratio={:.6}",
            row.s, row.c_s, row.empirical_norm, row.ratio_to_sqrt_cs
        ));
    }
    write_text(dir, "trace_norm.csv", &csv, &mut out)?;
    let decreasing = rows
        .windows(2)
        .all(|w| w[0].empirical_norm > w[1].empirical_norm);
    let worst_ratio = rows
        .iter()
        .map(|r| (r.ratio_to_sqrt_cs - 1.0).abs())
        .fold(0.0, f64::max);
    out.check(decreasing, "empirical norms decrease in s".into());
    out.check(
        worst_ratio <= 0.05,
        format!("max |ratio - 1| = {worst_ratio:.3e} <= 5e-2"),
    );
    out.check(
        worst_quad <= 1e-10,
        format!("gamma formula vs quadrature {worst_quad:.3e} <= 1e-10"),
    );
    Ok(out)
}

// --- extension ----------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtensionConfig {
    pub s_values: Vec<f64>,
    pub points: usize,
    pub extent: f64,
    pub probes: usize,
    pub band: usize,
    pub seed: u64,
}

impl Default for ExtensionConfig {
    fn default() -> Self {
        Self {
            s_values: vec![0.6, 1.0, 1.4],
            points: 128,
            extent: 16.0,
            probes: 50,
            band: 20,
            seed: 7,
        }
    }
}

pub fn run_extension(cfg: &ExtensionConfig, dir: &Path) -> Result<Outcome> {
    let mut out = Outcome::new();
    emit_config(cfg, dir, "extension", &mut out)?;
    let grid = GridSpec::cubic(2, cfg.extent, cfg.points, 1)?;
    let bgrid = grid.boundary_grid()?;
    let mut csv = String::from("s,max_right_inverse_error,max_norm_ratio\n");
    let mut worst_err: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for (k, &s) in cfg.s_values.iter().enumerate() {
        let mut err_s: f64 = 0.0;
        let mut ratio_s: f64 = 0.0;
        for p in 0..cfg.probes {
            let v = random_band_limited(
                &bgrid,
                cfg.band,
                cfg.seed + 1000 * k as u64 + p as u64,
            );
            let ext = extension(&v, s, &grid)?;
            let back = trace(&ext)?;
            err_s = err_s.max(back.sub(&v)?.sobolev_norm(0.0) / v.sobolev_norm(0.0));
            ratio_s = ratio_s.max(ext.sobolev_norm(s) / v.sobolev_norm(s - 0.5));
        }
        csv.push_str(&format!("{s:.6},{err_s:.12e},{ratio_s:.12e}\n"));
        out.note(format!("s={s}: right-inverse error {err_s:.3e}, norm ratio {ratio_s:.3}"));
        worst_err = worst_err.max(err_s);
        worst_ratio = worst_ratio.max(ratio_s);
    }
    write_text(dir, "extension.csv", &csv, &mut out)?;
    out.check(
        worst_err <= 1e-10,
        format!("trace of extension returns the density to {worst_err:.3e}"),
    );
    out.check(
        worst_ratio < 10.0,
        format!("extension norm ratio bounded: {worst_ratio:.3}"),
    );
    Ok(out)
}

// --- recover-density ---------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoverDensityConfig {
    pub points: usize,
    pub extent: f64,
    pub t: f64,
    pub band: usize,
    pub seed: u64,
}

impl Default for RecoverDensityConfig {
    fn default() -> Self {
        Self {
            points: 64,
            extent: 8.0,
            t: -0.75,
            band: 8,
            seed: 11,
        }
    }
}

pub fn run_recover_density(cfg: &RecoverDensityConfig, dir: &Path) -> Result<Outcome> {
    let mut out = Outcome::new();
    emit_config(cfg, dir, "recover_density", &mut out)?;
    let grid = GridSpec::cubic(2, cfg.extent, cfg.points, 1)?;
    let bgrid = grid.boundary_grid()?;
    let v0 = random_band_limited(&bgrid, cfg.band, cfg.seed);
    let g = trace_adjoint(&v0, &grid)?;
    let v_exp = recover_density(&g, cfg.t, ExtensionKernel::Exponential)?;
    let v_gauss = recover_density(&g, cfg.t, ExtensionKernel::Gaussian)?;
    let roundtrip = v_exp.sub(&v0)?.sobolev_norm(0.0) / v0.sobolev_norm(0.0);
    let kernels = v_exp.sub(&v_gauss)?.sobolev_norm(0.0) / v0.sobolev_norm(0.0);
    let csv = format!(
        "quantity,value\nroundtrip_error,{roundtrip:.12e}\nkernel_disagreement,{kernels:.12e}\n"
    );
    write_text(dir, "recover_density.csv", &csv, &mut out)?;
    out.check(
        roundtrip <= 1e-8,
        format!("density recovered from its layer to {roundtrip:.3e}"),
    );
    out.check(
        kernels <= 1e-8,
        format!("recovery independent of the lifting kernel to {kernels:.3e}"),
    );
    Ok(out)
}

// --- bvp ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BvpConfig {
    /// dirichlet | neumann | mixed
    pub problem: String,
    /// interval | square
    pub domain: String,
    pub base_cells: usize,
    pub refinements: usize,
}

impl Default for BvpConfig {
    fn default() -> Self {
        Self {
            problem: "dirichlet".into(),
            domain: "square".into(),
            base_cells: 8,
            refinements: 4,
        }
    }
}

pub fn run_bvp(cfg: &BvpConfig, dir: &Path) -> Result<Outcome> {
    use std::f64::consts::PI;
    let c = |re: f64| Complex64::new(re, 0.0);
    let mut out = Outcome::new();
    emit_config(cfg, dir, "bvp", &mut out)?;
    let mut errs: Vec<(f64, f64, f64)> = Vec::new(); // (h, l2, h1)
    let mut finest: Option<crate::fem::FemField> = None;
    for level in 0..cfg.refinements {
        let cells = cfg.base_cells << level;
        let (mesh, dim) = match cfg.domain.as_str() {
            "interval" => (Arc::new(Mesh::interval(0.0, 1.0, cells)?), 1),
            "square" => (Arc::new(Mesh::unit_square(cells)?), 2),
            other => return Err(Error::Domain(format!("unknown domain '{other}'"))),
        };
        let h = mesh.h_max();
        let (l2, h1) = match (cfg.problem.as_str(), dim) {
            ("dirichlet", 1) => {
                let sys = FemSystem::new(mesh, CoefficientSet::laplacian(1, 1))?;
                let f = sys.volume_functional(|_, x| c(PI * PI * (PI * x[0]).sin()));
                let u = sys.solve_dirichlet(&f, |_, _| c(0.0))?;
                let e = u.error_norms(
                    |_, x| c((PI * x[0]).sin()),
                    |_, x| vec![c(PI * (PI * x[0]).cos())],
                );
                if level + 1 == cfg.refinements {
                    finest = Some(u);
                }
                e
            }
            ("dirichlet", _) => {
                let sys = FemSystem::new(mesh, CoefficientSet::laplacian(2, 1))?;
                let f = sys.volume_functional(|_, x| {
                    c(2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin())
                });
                let u = sys.solve_dirichlet(&f, |_, _| c(0.0))?;
                let e = u.error_norms(
                    |_, x| c((PI * x[0]).sin() * (PI * x[1]).sin()),
                    |_, x| {
                        vec![
                            c(PI * (PI * x[0]).cos() * (PI * x[1]).sin()),
                            c(PI * (PI * x[0]).sin() * (PI * x[1]).cos()),
                        ]
                    },
                );
                if level + 1 == cfg.refinements {
                    finest = Some(u);
                }
                e
            }
            ("neumann", 1) => {
                let sys = FemSystem::new(mesh, CoefficientSet::helmholtz(1, 1, 1.0))?;
                let rhs = AggregateRhs {
                    volume: sys
                        .volume_functional(|_, x| c((PI * PI + 1.0) * (PI * x[0]).cos())),
                    boundary: vec![Complex64::default(); sys.n_dofs()],
                };
                let u = sys.solve_neumann(&rhs)?;
                let e = u.error_norms(
                    |_, x| c((PI * x[0]).cos()),
                    |_, x| vec![c(-PI * (PI * x[0]).sin())],
                );
                if level + 1 == cfg.refinements {
                    finest = Some(u);
                }
                e
            }
            ("neumann", _) => {
                let sys = FemSystem::new(mesh, CoefficientSet::helmholtz(2, 1, 1.0))?;
                let rhs = AggregateRhs {
                    volume: sys.volume_functional(|_, x| {
                        c((2.0 * PI * PI + 1.0) * (PI * x[0]).cos() * (PI * x[1]).cos())
                    }),
                    boundary: vec![Complex64::default(); sys.n_dofs()],
                };
                let u = sys.solve_neumann(&rhs)?;
                let e = u.error_norms(
                    |_, x| c((PI * x[0]).cos() * (PI * x[1]).cos()),
                    |_, x| {
                        vec![
                            c(-PI * (PI * x[0]).sin() * (PI * x[1]).cos()),
                            c(-PI * (PI * x[0]).cos() * (PI * x[1]).sin()),
                        ]
                    },
                );
                if level + 1 == cfg.refinements {
                    finest = Some(u);
                }
                e
            }
            ("mixed", 1) => {
                let sys = FemSystem::new(mesh, CoefficientSet::laplacian(1, 1))?;
                let ntags: BTreeSet<u32> = [TAG_RIGHT].into();
                let rhs = AggregateRhs {
                    volume: sys.volume_functional(|_, x| c(PI * PI * (PI * x[0]).sin())),
                    boundary: sys.boundary_functional(|_, _| c(1.0 - PI), Some(&ntags)),
                };
                let dtags: BTreeSet<u32> = [TAG_LEFT].into();
                let u = sys.solve_mixed(&rhs, |_, _| c(0.0), &dtags)?;
                let e = u.error_norms(
                    |_, x| c((PI * x[0]).sin() + x[0]),
                    |_, x| vec![c(PI * (PI * x[0]).cos() + 1.0)],
                );
                if level + 1 == cfg.refinements {
                    finest = Some(u);
                }
                e
            }
            ("mixed", _) => {
                let sys = FemSystem::new(mesh, CoefficientSet::laplacian(2, 1))?;
                let rhs = AggregateRhs {
                    volume: sys.volume_functional(|_, _| c(2.0)),
                    boundary: vec![Complex64::default(); sys.n_dofs()],
                };
                let dtags: BTreeSet<u32> = [TAG_LEFT].into();
                let u = sys.solve_mixed(&rhs, |_, _| c(0.0), &dtags)?;
                let e = u.error_norms(
                    |_, x| c(x[0] * (2.0 - x[0])),
                    |_, x| vec![c(2.0 - 2.0 * x[0]), c(0.0)],
                );
                if level + 1 == cfg.refinements {
                    finest = Some(u);
                }
                e
            }
            (other, _) => return Err(Error::Domain(format!("unknown problem '{other}'"))),
        };
        errs.push((h, l2, h1));
    }
    if let Some(u) = &finest {
        let path = dir.join(format!("bvp_{}_{}_solution.csv", cfg.problem, cfg.domain));
        crate::fem::write_solution_csv(u, &path)?;
        out.files.push(path);
    }
    let mut csv = String::from("level,h,l2_error,h1_error,l2_rate,h1_rate\n");
    let mut min_l2 = f64::INFINITY;
    let mut min_h1 = f64::INFINITY;
    for (i, (h, l2, h1)) in errs.iter().enumerate() {
        let (rl2, rh1) = if i == 0 {
            (f64::NAN, f64::NAN)
        } else {
            let r = (
                (errs[i - 1].1 / l2).log2(),
                (errs[i - 1].2 / h1).log2(),
            );
            min_l2 = min_l2.min(r.0);
            min_h1 = min_h1.min(r.1);
            r
        };
        csv.push_str(&format!(
            "{i},{h:.6e},{l2:.12e},{h1:.12e},{rl2:.4},{rh1:.4}\n"
        ));
        out.note(format!(
            "level {i}: h={h:.4} L2={l2:.3e} H1={h1:.3e} rates {rl2:.2}/{rh1:.2}"
        ));
    }
    write_text(
        dir,
        &format!("bvp_{}_{}.csv", cfg.problem, cfg.domain),
        &csv,
        &mut out,
    )?;
    out.check(min_l2 >= 1.9, format!("L2 rate {min_l2:.2} >= 1.9"));
    out.check(min_h1 >= 0.9, format!("H1 rate {min_h1:.2} >= 0.9"));
    Ok(out)
}

// --- conormal ------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConormalConfig {
    /// sin-square | interior-bump
    pub case: String,
    pub base_cells: usize,
    pub refine: usize,
}

impl Default for ConormalConfig {
    fn default() -> Self {
        Self {
            case: "sin-square".into(),
            base_cells: 8,
            refine: 4,
        }
    }
}

pub fn run_conormal(cfg: &ConormalConfig, dir: &Path) -> Result<Outcome> {
    use std::f64::consts::PI;
    let c = |re: f64| Complex64::new(re, 0.0);
    let mut out = Outcome::new();
    emit_config(cfg, dir, "conormal", &mut out)?;
    let mut rows: Vec<(f64, f64)> = Vec::new(); // (h, distance)
    for level in 0..cfg.refine {
        let n = cfg.base_cells << level;
        let mesh = Arc::new(Mesh::unit_square(n)?);
        let sys = FemSystem::new(mesh.clone(), CoefficientSet::laplacian(2, 1))?;
        let space = ConormalSpace::new(mesh, 1)?;
        let last_level = level + 1 == cfg.refine;
        let distance = match cfg.case.as_str() {
            "sin-square" => {
                let f_fn = move |_: usize, x: &[f64]| {
                    c(2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin())
                };
                let f = sys.volume_functional(f_fn);
                let u = sys.solve_dirichlet(&f, |_, _| c(0.0))?;
                let t = canonical_conormal(&sys, &u, f_fn)?;
                if last_level {
                    let path = dir.join("conormal_trace.csv");
                    crate::conormal::write_trace_csv(&space, &t, &path)?;
                    out.files.push(path);
                }
                let vals = space.values(&t);
                let exact = |x: &[f64]| -> Complex64 {
                    let gx = PI * (PI * x[0]).cos() * (PI * x[1]).sin();
                    let gy = PI * (PI * x[0]).sin() * (PI * x[1]).cos();
                    if x[0] == 0.0 {
                        c(-gx)
                    } else if x[0] == 1.0 {
                        c(gx)
                    } else if x[1] == 0.0 {
                        c(-gy)
                    } else {
                        c(gy)
                    }
                };
                let diff: Vec<Complex64> = sys
                    .mesh
                    .boundary_nodes()
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| vals[i] - exact(sys.mesh.vertex(v)))
                    .collect();
                space.l2_norm(&diff)
            }
            "interior-bump" => {
                let f_fn = |_: usize, x: &[f64]| {
                    let r2 = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2);
                    if r2 < 0.04 {
                        c((1.0 - r2 / 0.04).powi(3))
                    } else {
                        c(0.0)
                    }
                };
                let f = sys.volume_functional(f_fn);
                let u = sys.solve_dirichlet(&f, |_, _| c(0.0))?;
                let t_can = canonical_conormal(&sys, &u, f_fn)?;
                let t_cl = classical_conormal(&sys, &space, &u);
                let dv: Vec<Complex64> = space
                    .values(&t_can)
                    .iter()
                    .zip(&space.values(&t_cl))
                    .map(|(a, b)| a - b)
                    .collect();
                space.l2_norm(&dv)
            }
            other => return Err(Error::Domain(format!("unknown case '{other}'"))),
        };
        rows.push((1.0 / n as f64, distance));
    }
    let mut csv = String::from("level,h,boundary_l2_distance,rate\n");
    let mut min_rate = f64::INFINITY;
    for (i, (h, d)) in rows.iter().enumerate() {
        let rate = if i == 0 {
            f64::NAN
        } else {
            let r = (rows[i - 1].1 / d).log2();
            min_rate = min_rate.min(r);
            r
        };
        csv.push_str(&format!("{i},{h:.6e},{d:.12e},{rate:.4}\n"));
        out.note(format!("level {i}: h={h:.4} distance={d:.3e} rate={rate:.2}"));
    }
    write_text(dir, &format!("conormal_{}.csv", cfg.case), &csv, &mut out)?;
    out.check(
        min_rate >= 1.0,
        format!("canonical flux converges at rate {min_rate:.2} >= 1.0"),
    );
    Ok(out)
}

// --- green ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreenConfig {
    pub cells: usize,
    pub seed: u64,
}

impl Default for GreenConfig {
    fn default() -> Self {
        Self { cells: 10, seed: 3 }
    }
}

#[derive(Debug, Clone, Serialize)]
struct GreenRecord {
    identity: &'static str,
    residual: f64,
    mesh_size: f64,
}

pub fn run_green(cfg: &GreenConfig, dir: &Path) -> Result<Outcome> {
    use crate::conormal::{
        first_green_residual, generalized_conormal, second_green_residual,
    };
    use rand::Rng;
    use std::f64::consts::PI;
    let c = |re: f64| Complex64::new(re, 0.0);
    let mut out = Outcome::new();
    emit_config(cfg, dir, "green", &mut out)?;
    let mesh = Arc::new(Mesh::unit_square(cfg.cells)?);
    let h = mesh.h_max();
    let sys = FemSystem::new(mesh.clone(), CoefficientSet::helmholtz(2, 1, 1.0))?;
    let space = ConormalSpace::new(mesh, 1)?;
    let mut records = Vec::new();

    // first Green identity with the canonical extension of a smooth solve
    let fu = |_: usize, x: &[f64]| c((2.0 * PI * PI + 1.0) * (PI * x[0]).sin() * (PI * x[1]).sin());
    let fu_vec = sys.volume_functional(fu);
    let u = sys.solve_dirichlet(&fu_vec, |_, _| c(0.0))?;
    let t_u = canonical_conormal(&sys, &u, fu)?;
    records.push(GreenRecord {
        identity: "first_green_canonical",
        residual: first_green_residual(&sys, &u, &fu_vec, &t_u),
        mesh_size: h,
    });

    // aggregate second Green identity on random fields
    let mut rng = crate::rng::seeded_rng(cfg.seed);
    let mut rand_field = || {
        crate::fem::FemField::new(
            sys.mesh.clone(),
            1,
            (0..sys.n_dofs())
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect(),
        )
    };
    let ur = rand_field();
    let vr = rand_field();
    records.push(GreenRecord {
        identity: "aggregate_second_green",
        residual: sys.aggregate_second_green_check(&ur, &vr),
        mesh_size: h,
    });

    // generalised second Green identity with aggregate extensions
    let f_agg = sys.apply_aggregate(&ur);
    let f_star_agg = sys.assemble_adjoint().matvec(&vr.values);
    records.push(GreenRecord {
        identity: "generalized_second_green_aggregate",
        residual: second_green_residual(&sys, &space, &ur, &vr, &f_agg, &f_star_agg)?,
        mesh_size: h,
    });

    // canonical second Green identity on two smooth solves
    let fv = |_: usize, x: &[f64]| c((2.0 * PI * PI + 1.0) * (PI * x[0]).cos() * (PI * x[1]).sin());
    let fv_vec = sys.volume_functional(fv);
    let v = sys.solve_dirichlet(&fv_vec, |_, x| c((PI * x[0]).cos() * (PI * x[1]).sin()))?;
    records.push(GreenRecord {
        identity: "second_green_canonical",
        residual: second_green_residual(&sys, &space, &u, &v, &fu_vec, &fv_vec)?,
        mesh_size: h,
    });

    // vanishing aggregate co-normal derivative
    let t_agg = generalized_conormal(&sys, &ur, &f_agg)?;
    let agg_norm = t_agg.dual.iter().map(|d| d.norm()).fold(0.0, f64::max);
    records.push(GreenRecord {
        identity: "aggregate_conormal_vanishing",
        residual: agg_norm,
        mesh_size: h,
    });

    let json = serde_json::to_string_pretty(&records).map_err(|e| Error::Format(e.to_string()))?;
    write_text(dir, "green_identities.json", &json, &mut out)?;
    for r in &records {
        let tol = match r.identity {
            "aggregate_second_green" => 1e-12,
            _ => 1e-10,
        };
        out.check(
            r.residual <= tol,
            format!("{}: residual {:.3e} <= {tol:.0e}", r.identity, r.residual),
        );
    }
    Ok(out)
}

// --- commutator ------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommutatorConfig {
    pub resolutions: Vec<usize>,
    pub extent: f64,
    pub s: f64,
    pub t: f64,
}

impl Default for CommutatorConfig {
    fn default() -> Self {
        Self {
            resolutions: vec![128, 256, 512],
            extent: 16.0,
            s: 0.5,
            t: 1.0,
        }
    }
}

pub fn run_commutator(cfg: &CommutatorConfig, dir: &Path) -> Result<Outcome> {
    use std::f64::consts::PI;
    let mut out = Outcome::new();
    emit_config(cfg, dir, "commutator", &mut out)?;
    let extent = cfg.extent;
    let g = HolderFunction::new_1d(
        move |x| (2.0 * PI * x / extent).cos(),
        2.0,
        -extent / 2.0,
        extent / 2.0,
    );
    let gauss = |grid: &GridSpec| {
        SpectralField::from_scalar_fn(grid.clone(), |x| {
            Complex64::new((-PI * x[0] * x[0]).exp(), 0.0)
        })
    };
    let mut csv = String::from("points,ratio\n");
    let mut ratios = Vec::new();
    for &n in &cfg.resolutions {
        let grid = GridSpec::new(&[cfg.extent], &[n], 1)?;
        let w = gauss(&grid);
        let r = commutator_ratio(&g, &w, cfg.t, cfg.s)?;
        ratios.push(r);
        csv.push_str(&format!("{n},{r:.12e}\n"));
        out.note(format!("N={n}: ratio {r:.4}"));
    }
    write_text(dir, "commutator.csv", &csv, &mut out)?;
    let grid = GridSpec::new(&[cfg.extent], &[cfg.resolutions[0]], 1)?;
    let w = gauss(&grid);
    let g_const = HolderFunction::new_1d(|_| 3.0, 2.0, -extent / 2.0, extent / 2.0);
    let zero_const = commutator(&g_const, &w, cfg.t)?.sobolev_norm(0.0) / w.sobolev_norm(0.0);
    let zero_t = commutator(&g, &w, 0.0)?.sobolev_norm(0.0) / w.sobolev_norm(0.0);
    out.check(
        zero_const <= 1e-12 && zero_t <= 1e-12,
        format!("vanishing cases: constant g {zero_const:.1e}, t = 0 {zero_t:.1e}"),
    );
    let first = ratios.first().copied().unwrap_or(0.0);
    let last = ratios.last().copied().unwrap_or(0.0);
    out.check(
        last <= 1.5 * first,
        format!("refinement stability: {last:.3} <= 1.5 x {first:.3}"),
    );
    let n_half = commutator(&g, &w, cfg.t / 2.0)?.sobolev_norm(cfg.s - cfg.t / 2.0 + 1.0);
    let n_quarter = commutator(&g, &w, cfg.t / 4.0)?.sobolev_norm(cfg.s - cfg.t / 4.0 + 1.0);
    let factor = n_half / n_quarter;
    out.check(
        (factor - 2.0).abs() <= 0.4,
        format!("linear-in-t scaling factor {factor:.2} within 20% of 2"),
    );
    Ok(out)
}

// --- product-bound -----------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProductBoundConfig {
    pub resolutions: Vec<usize>,
    pub extent: f64,
    pub s: f64,
    pub mu: f64,
}

impl Default for ProductBoundConfig {
    fn default() -> Self {
        Self {
            resolutions: vec![128, 256, 512],
            extent: 16.0,
            s: 0.9,
            mu: 1.5,
        }
    }
}

pub fn run_product_bound(cfg: &ProductBoundConfig, dir: &Path) -> Result<Outcome> {
    use std::f64::consts::PI;
    let mut out = Outcome::new();
    emit_config(cfg, dir, "product_bound", &mut out)?;
    let half = cfg.extent / 2.0;
    let g1 = HolderFunction::new_1d(move |x| (2.0 * PI * x).cos(), 2.0, -half, half);
    let rows = product_bound_check(&g1, cfg.mu, cfg.s, cfg.extent, &cfg.resolutions, |grid| {
        SpectralField::from_scalar_fn(grid.clone(), |x| {
            Complex64::new((-PI * x[0] * x[0]).exp(), 0.0)
        })
    })?;
    let mut csv = String::from("points,ratio\n");
    for r in &rows {
        csv.push_str(&format!("{},{:.12e}\n", r.points, r.ratio));
        out.note(format!("N={}: ratio {:.4}", r.points, r.ratio));
    }
    write_text(dir, "product_bound.csv", &csv, &mut out)?;
    let first = rows.first().map(|r| r.ratio).unwrap_or(0.0);
    let last = rows.last().map(|r| r.ratio).unwrap_or(0.0);
    out.check(
        last <= 1.5 * first,
        format!("product ratio refinement-stable: {last:.3} <= 1.5 x {first:.3}"),
    );
    Ok(out)
}

// --- apriori -------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AprioriConfig {
    pub s_values: Vec<f64>,
    pub probes: usize,
    pub points: usize,
    pub extent: f64,
    pub band: usize,
    pub seed: u64,
}

impl Default for AprioriConfig {
    fn default() -> Self {
        Self {
            s_values: vec![-1.0, 0.0, 0.5],
            probes: 100,
            points: 32,
            extent: 8.0,
            band: 10,
            seed: 17,
        }
    }
}

pub fn run_apriori(cfg: &AprioriConfig, dir: &Path) -> Result<Outcome> {
    let mut out = Outcome::new();
    emit_config(cfg, dir, "apriori", &mut out)?;
    let mut csv = String::from("system,s,min_slack,c1,margin\n");
    let mut min_slack = f64::INFINITY;
    let scalar = ConstantCoefficients::scalar_laplacian(2);
    let coupled = ConstantCoefficients {
        dim: 2,
        m: 2,
        a: vec![
            vec![
                Complex64::new(2.0, 0.0),
                Complex64::new(0.3, 0.1),
                Complex64::new(0.3, -0.1),
                Complex64::new(1.5, 0.0),
            ],
            vec![Complex64::default(); 4],
            vec![Complex64::default(); 4],
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(-0.2, 0.0),
                Complex64::new(-0.2, 0.0),
                Complex64::new(2.5, 0.0),
            ],
        ],
        theta: None,
    };
    for (label, coeffs, m) in [("scalar", &scalar, 1usize), ("m2", &coupled, 2)] {
        let grid = GridSpec::cubic(2, cfg.extent, cfg.points, m)?;
        for &s in &cfg.s_values {
            let mut slack_s = f64::INFINITY;
            let mut c1 = 0.0;
            let mut margin = 0.0;
            for p in 0..cfg.probes {
                let f = random_band_limited(&grid, cfg.band, cfg.seed + 31 * p as u64);
                let rep = apriori_check(coeffs, &f, s)?;
                slack_s = slack_s.min(rep.slack);
                c1 = rep.c1;
                margin = rep.margin;
            }
            csv.push_str(&format!(
                "{label},{s:.3},{slack_s:.12e},{c1:.12e},{margin:.12e}\n"
            ));
            out.note(format!("{label} s={s}: min slack {slack_s:.3e}"));
            min_slack = min_slack.min(slack_s);
        }
    }
    write_text(dir, "apriori.csv", &csv, &mut out)?;
    out.check(
        min_slack >= 0.0,
        format!("inequality slack nonnegative: {min_slack:.3e}"),
    );
    Ok(out)
}

// --- regularity ------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularityConfig {
    pub mu_values: Vec<f64>,
    pub points: usize,
    pub extent: f64,
    pub smooth_threshold: f64,
}

impl Default for RegularityConfig {
    fn default() -> Self {
        Self {
            mu_values: vec![0.9, 0.6, 0.3],
            points: 512,
            extent: 2.0,
            smooth_threshold: 8.0,
        }
    }
}

pub fn run_regularity(cfg: &RegularityConfig, dir: &Path) -> Result<Outcome> {
    use std::f64::consts::PI;
    let mut out = Outcome::new();
    emit_config(cfg, dir, "regularity", &mut out)?;
    let grid = GridSpec::new(&[cfg.extent], &[cfg.points], 1)?;
    let f = SpectralField::from_scalar_fn(grid.clone(), |x| {
        Complex64::new((PI * x[0]).cos() + 0.3 * (2.0 * PI * x[0]).sin(), 0.0)
    });
    let mut csv = String::from("mu,s_hat,fit_residual,smooth\n");
    let mut hats = Vec::new();
    for &mu in &cfg.mu_values {
        let a = move |x: &[f64]| 1.0 + 0.5 * (PI * x[0]).sin().abs().powf(mu);
        let u = solve_periodic_scalar(a, &f, 1e-12, 800)?;
        let rep = estimate_decay_index(&u, cfg.smooth_threshold)?;
        csv.push_str(&format!(
            "{mu:.3},{:.6},{:.6},{}\n",
            rep.s_hat, rep.fit_residual, rep.smooth
        ));
        out.note(format!(
            "mu={mu}: s_hat {:.3} (fit residual {:.3})",
            rep.s_hat, rep.fit_residual
        ));
        hats.push(rep.s_hat);
    }
    let u_smooth = solve_periodic_scalar(|_| 1.5, &f, 1e-12, 800)?;
    let smooth_rep = estimate_decay_index(&u_smooth, cfg.smooth_threshold)?;
    csv.push_str(&format!(
        "smooth,{:.6},{:.6},{}\n",
        smooth_rep.s_hat, smooth_rep.fit_residual, smooth_rep.smooth
    ));
    write_text(dir, "regularity.csv", &csv, &mut out)?;
    let monotone = hats.windows(2).all(|w| w[0] + 0.05 >= w[1]);
    out.check(
        monotone,
        format!("estimated index non-increasing as mu decreases: {hats:?}"),
    );
    out.check(
        smooth_rep.smooth,
        "smooth-coefficient baseline flagged smooth".into(),
    );
    Ok(out)
}

// --- appendix -----------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppendixConfig {
    pub radius: f64,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for AppendixConfig {
    fn default() -> Self {
        Self {
            radius: 1.0,
            n_theta: 48,
            n_phi: 8,
        }
    }
}

pub fn run_appendix(cfg: &AppendixConfig, dir: &Path) -> Result<Outcome> {
    let mut out = Outcome::new();
    emit_config(cfg, dir, "appendix", &mut out)?;
    let rep = pairing_report(cfg.radius, cfg.n_theta, cfg.n_phi)?;
    let json = serde_json::to_string_pretty(&rep).map_err(|e| Error::Format(e.to_string()))?;
    write_text(dir, "appendix.json", &json, &mut out)?;
    out.note(format!(
        "pairing {:.8} vs radial oracle {:.8}",
        rep.value_re, rep.oracle_re
    ));
    out.check(rep.value_re > 1.0, format!("pairing {:.4} exceeds 1", rep.value_re));
    out.check(
        rep.value_im.abs() <= 1e-10,
        format!("imaginary part {:.2e} negligible", rep.value_im),
    );
    out.check(
        rep.relative_deviation <= 1e-4,
        format!("deviation from oracle {:.2e} <= 1e-4", rep.relative_deviation),
    );
    Ok(out)
}

// --- suite ------------------------------------------------------------------------------

pub fn run_suite(name: &str, dir: &Path) -> Result<Outcome> {
    let mut out = Outcome::new();
    let ids: Vec<usize> = match name {
        "acceptance" => (1..=15).collect(),
        "quick" => acceptance::quick_ids(),
        other => {
            return Err(Error::Domain(format!(
                "unknown suite '{other}' (expected 'acceptance' or 'quick')"
            )))
        }
    };
    let mut reports = Vec::new();
    for id in ids {
        let rep = acceptance::run_criterion(id)?;
        out.check(
            rep.pass,
            format!("criterion {:2} {}: {}", rep.id, rep.name, rep.measured),
        );
        reports.push(rep);
    }
    let json =
        serde_json::to_string_pretty(&reports).map_err(|e| Error::Format(e.to_string()))?;
    write_text(dir, &format!("suite_{name}.json"), &json, &mut out)?;
    Ok(out)
}

// --- sanity check on the trace-constant closed forms used all over -----------

pub fn trace_constant_row(s: f64) -> Result<(f64, f64)> {
    Ok((trace_constant(s)?.value, trace_constant_quadrature(s)?))
}
