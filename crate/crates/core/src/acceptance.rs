//! The acceptance registry: one entry per verification criterion, each with
//! its tolerance pinned here. `run_all` powers both the `suite` subcommand
//! and the integration test gate.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_complex::Complex64;

use crate::conormal::{
    canonical_conormal, classical_conormal, first_green_residual,
    generalized_conormal, generalized_conormal_with_lifting, nominate_conormal,
    second_green_residual, ConormalSpace, ConormalTrace, Lifting,
};
use crate::error::Result;
use crate::estimates::{
    apriori_check, commutator, commutator_ratio, estimate_decay_index, solve_periodic_scalar,
    ConstantCoefficients,
};
use crate::fem::{AggregateRhs, CoefficientSet, FemField, FemSystem};
use crate::field::SpectralField;
use crate::grid::GridSpec;
use crate::halfspace::{
    blowup_probe, extension, trace, trace_constant, trace_constant_quadrature, LayerNorm,
};
use crate::holder::HolderFunction;
use crate::mesh::{Mesh, TAG_LEFT, TAG_RIGHT};
use crate::potential::pairing_report;
use crate::rng::{random_band_limited, seeded_rng};

#[derive(Debug, Clone, serde::Serialize)]
pub struct CriterionReport {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub measured: String,
}

pub const CRITERIA: [(usize, &str); 15] = [
    (1, "trace constant closed form vs quadrature"),
    (2, "adjoint-trace norm identity"),
    (3, "trace norm blow-up trend"),
    (4, "extension right-inverse"),
    (5, "fem manufactured convergence"),
    (6, "aggregate co-normal vanishing"),
    (7, "first green identity"),
    (8, "lifting independence"),
    (9, "canonical equals classical flux"),
    (10, "nomination round trip"),
    (11, "second green identities"),
    (12, "commutator estimate"),
    (13, "a-priori estimate slack"),
    (14, "volume potential pairing"),
    (15, "regularity probe monotonicity"),
];

pub fn run_criterion(id: usize) -> Result<CriterionReport> {
    match id {
        1 => criterion_trace_constant(),
        2 => criterion_adjoint_norm(),
        3 => criterion_blowup(),
        4 => criterion_extension_right_inverse(),
        5 => criterion_fem_convergence(),
        6 => criterion_aggregate_vanishing(),
        7 => criterion_first_green(),
        8 => criterion_lifting_independence(),
        9 => criterion_canonical_classical(),
        10 => criterion_nomination_round_trip(),
        11 => criterion_second_green(),
        12 => criterion_commutator(),
        13 => criterion_apriori(),
        14 => criterion_pairing(),
        15 => criterion_regularity(),
        _ => Err(crate::error::Error::Domain(format!(
            "unknown criterion {id}"
        ))),
    }
}

pub fn run_all() -> Result<Vec<CriterionReport>> {
    (1..=15).map(run_criterion).collect()
}

/// The fast subset used by `suite quick`.
pub fn quick_ids() -> Vec<usize> {
    vec![1, 2, 4, 6, 10, 12, 13, 14]
}

fn report(id: usize, pass: bool, measured: String) -> Result<CriterionReport> {
    let name = CRITERIA[id - 1].1;
    Ok(CriterionReport {
        id,
        name,
        pass,
        measured,
    })
}

fn criterion_trace_constant() -> Result<CriterionReport> {
    let c1 = trace_constant(1.0)?.value;
    let c32 = trace_constant(1.5)?.value;
    let e1 = (c1 - std::f64::consts::PI).abs();
    let e32 = (c32 - 2.0).abs();
    let mut worst_gap: f64 = 0.0;
    for s in [0.6, 0.75, 1.0, 1.25] {
        let closed = trace_constant(s)?.value;
        let quadr = trace_constant_quadrature(s)?;
        worst_gap = worst_gap.max((closed - quadr).abs() / closed);
    }
    let pass = e1 <= 1e-12 && e32 <= 1e-12 && worst_gap <= 1e-10;
    report(
        1,
        pass,
        format!("|C_1-pi|={e1:.2e} |C_1.5-2|={e32:.2e} gamma-vs-quadrature={worst_gap:.2e}"),
    )
}

fn criterion_adjoint_norm() -> Result<CriterionReport> {
    let grid = GridSpec::new(&[16.0, 16.0], &[256, 256], 1)?;
    let bgrid = grid.boundary_grid()?;
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for s in [0.6, 0.75, 1.0] {
        let layer = LayerNorm::new(&bgrid, s)?;
        let c_s = trace_constant(s)?.value;
        for seed in 0..100u64 {
            let v = random_band_limited(&bgrid, 40, 1000 + seed);
            let ratio = layer.adjoint_norm(&v) / (c_s.sqrt() * v.sobolev_norm(0.5 - s));
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    let pass = lo >= 0.99 && hi <= 1.01;
    report(2, pass, format!("ratio range [{lo:.6}, {hi:.6}]"))
}

fn criterion_blowup() -> Result<CriterionReport> {
    let bgrid = GridSpec::new(&[16.0], &[256], 1)?;
    let rows = blowup_probe(&bgrid, &[0.51, 0.55, 0.6, 0.75, 1.0], 50, 42)?;
    let decreasing = rows.windows(2).all(|w| w[0].empirical_norm > w[1].empirical_norm);
    let worst = rows
        .iter()
        .map(|r| (r.ratio_to_sqrt_cs - 1.0).abs())
        .fold(0.0, f64::max);
    let pass = decreasing && worst <= 0.05;
    report(
        3,
        pass,
        format!("decreasing={decreasing} max |ratio-1|={worst:.3e}"),
    )
}

fn criterion_extension_right_inverse() -> Result<CriterionReport> {
    let grid = GridSpec::new(&[16.0, 16.0], &[128, 128], 1)?;
    let bgrid = grid.boundary_grid()?;
    let mut worst: f64 = 0.0;
    for (k, s) in [0.6, 1.0, 1.4].into_iter().enumerate() {
        for seed in 0..50u64 {
            let v = random_band_limited(&bgrid, 20, 300 * k as u64 + seed);
            let ext = extension(&v, s, &grid)?;
            let back = trace(&ext)?;
            worst = worst.max(back.sub(&v)?.sobolev_norm(0.0) / v.sobolev_norm(0.0));
        }
    }
    report(4, worst <= 1e-10, format!("max relative error {worst:.3e}"))
}

struct ConvergenceCase {
    name: &'static str,
    l2_rate: f64,
    h1_rate: f64,
}

fn rates(errors: &[(f64, f64)]) -> (f64, f64) {
    // least-squares slope of log error against log refinement level index
    let n = errors.len();
    let mut l2 = f64::INFINITY;
    let mut h1 = f64::INFINITY;
    for i in 1..n {
        l2 = l2.min((errors[i - 1].0 / errors[i].0).log2());
        h1 = h1.min((errors[i - 1].1 / errors[i].1).log2());
    }
    (l2, h1)
}

fn criterion_fem_convergence() -> Result<CriterionReport> {
    use std::f64::consts::PI;
    let c = |re: f64| Complex64::new(re, 0.0);
    let mut cases: Vec<ConvergenceCase> = Vec::new();

    // interval Dirichlet: u = sin(πx), f = π² sin(πx)
    {
        let mut errs = Vec::new();
        for cells in [16usize, 32, 64, 128] {
            let mesh = Arc::new(Mesh::interval(0.0, 1.0, cells)?);
            let sys = FemSystem::new(mesh, CoefficientSet::laplacian(1, 1))?;
            let f = sys.volume_functional(|_, x| c(PI * PI * (PI * x[0]).sin()));
            let u = sys.solve_dirichlet(&f, |_, _| c(0.0))?;
            errs.push(u.error_norms(
                |_, x| c((PI * x[0]).sin()),
                |_, x| vec![c(PI * (PI * x[0]).cos())],
            ));
        }
        let (l2, h1) = rates(&errs);
        cases.push(ConvergenceCase { name: "interval dirichlet", l2_rate: l2, h1_rate: h1 });
    }
    // interval Neumann with c = 1: u = cos(πx), natural data zero
    {
        let mut errs = Vec::new();
        for cells in [16usize, 32, 64, 128] {
            let mesh = Arc::new(Mesh::interval(0.0, 1.0, cells)?);
            let sys = FemSystem::new(mesh, CoefficientSet::helmholtz(1, 1, 1.0))?;
            let rhs = AggregateRhs {
                volume: sys.volume_functional(|_, x| c((PI * PI + 1.0) * (PI * x[0]).cos())),
                boundary: vec![Complex64::default(); sys.n_dofs()],
            };
            let u = sys.solve_neumann(&rhs)?;
            errs.push(u.error_norms(
                |_, x| c((PI * x[0]).cos()),
                |_, x| vec![c(-PI * (PI * x[0]).sin())],
            ));
        }
        let (l2, h1) = rates(&errs);
        cases.push(ConvergenceCase { name: "interval neumann", l2_rate: l2, h1_rate: h1 });
    }
    // interval mixed: u = sin(πx) + x, Dirichlet left, flux 1 - π right
    {
        let mut errs = Vec::new();
        for cells in [16usize, 32, 64, 128] {
            let mesh = Arc::new(Mesh::interval(0.0, 1.0, cells)?);
            let sys = FemSystem::new(mesh, CoefficientSet::laplacian(1, 1))?;
            let ntags: BTreeSet<u32> = [TAG_RIGHT].into();
            let rhs = AggregateRhs {
                volume: sys.volume_functional(|_, x| c(PI * PI * (PI * x[0]).sin())),
                boundary: sys.boundary_functional(|_, _| c(1.0 - PI), Some(&ntags)),
            };
            let dtags: BTreeSet<u32> = [TAG_LEFT].into();
            let u = sys.solve_mixed(&rhs, |_, _| c(0.0), &dtags)?;
            errs.push(u.error_norms(
                |_, x| c((PI * x[0]).sin() + x[0]),
                |_, x| vec![c(PI * (PI * x[0]).cos() + 1.0)],
            ));
        }
        let (l2, h1) = rates(&errs);
        cases.push(ConvergenceCase { name: "interval mixed", l2_rate: l2, h1_rate: h1 });
    }
    // square Dirichlet: u = sin(πx) sin(πy)
    {
        let mut errs = Vec::new();
        for n in [8usize, 16, 32, 64] {
            let mesh = Arc::new(Mesh::unit_square(n)?);
            let sys = FemSystem::new(mesh, CoefficientSet::laplacian(2, 1))?;
            let f = sys
                .volume_functional(|_, x| c(2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin()));
            let u = sys.solve_dirichlet(&f, |_, _| c(0.0))?;
            errs.push(u.error_norms(
                |_, x| c((PI * x[0]).sin() * (PI * x[1]).sin()),
                |_, x| {
                    vec![
                        c(PI * (PI * x[0]).cos() * (PI * x[1]).sin()),
                        c(PI * (PI * x[0]).sin() * (PI * x[1]).cos()),
                    ]
                },
            ));
        }
        let (l2, h1) = rates(&errs);
        cases.push(ConvergenceCase { name: "square dirichlet", l2_rate: l2, h1_rate: h1 });
    }
    // square Neumann with c = 1: u = cos(πx) cos(πy)
    {
        let mut errs = Vec::new();
        for n in [8usize, 16, 32, 64] {
            let mesh = Arc::new(Mesh::unit_square(n)?);
            let sys = FemSystem::new(mesh, CoefficientSet::helmholtz(2, 1, 1.0))?;
            let rhs = AggregateRhs {
                volume: sys.volume_functional(|_, x| {
                    c((2.0 * PI * PI + 1.0) * (PI * x[0]).cos() * (PI * x[1]).cos())
                }),
                boundary: vec![Complex64::default(); sys.n_dofs()],
            };
            let u = sys.solve_neumann(&rhs)?;
            errs.push(u.error_norms(
                |_, x| c((PI * x[0]).cos() * (PI * x[1]).cos()),
                |_, x| {
                    vec![
                        c(-PI * (PI * x[0]).sin() * (PI * x[1]).cos()),
                        c(-PI * (PI * x[0]).cos() * (PI * x[1]).sin()),
                    ]
                },
            ));
        }
        let (l2, h1) = rates(&errs);
        cases.push(ConvergenceCase { name: "square neumann", l2_rate: l2, h1_rate: h1 });
    }
    // square mixed: u = x(2-x), Dirichlet on the left edge
    {
        let mut errs = Vec::new();
        for n in [8usize, 16, 32, 64] {
            let mesh = Arc::new(Mesh::unit_square(n)?);
            let sys = FemSystem::new(mesh, CoefficientSet::laplacian(2, 1))?;
            let rhs = AggregateRhs {
                volume: sys.volume_functional(|_, _| c(2.0)),
                boundary: vec![Complex64::default(); sys.n_dofs()],
            };
            let dtags: BTreeSet<u32> = [TAG_LEFT].into();
            let u = sys.solve_mixed(&rhs, |_, _| c(0.0), &dtags)?;
            errs.push(u.error_norms(
                |_, x| c(x[0] * (2.0 - x[0])),
                |_, x| vec![c(2.0 - 2.0 * x[0]), c(0.0)],
            ));
        }
        let (l2, h1) = rates(&errs);
        cases.push(ConvergenceCase { name: "square mixed", l2_rate: l2, h1_rate: h1 });
    }

    let pass = cases.iter().all(|cs| cs.l2_rate >= 1.9 && cs.h1_rate >= 0.9);
    let measured = cases
        .iter()
        .map(|cs| format!("{}: L2 {:.2} H1 {:.2}", cs.name, cs.l2_rate, cs.h1_rate))
        .collect::<Vec<_>>()
        .join("; ");
    report(5, pass, measured)
}

fn random_field(system: &FemSystem, seed: u64) -> FemField {
    use rand::Rng;
    let mut rng = seeded_rng(seed);
    FemField::new(
        system.mesh.clone(),
        system.m(),
        (0..system.n_dofs())
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect(),
    )
}

fn criterion_aggregate_vanishing() -> Result<CriterionReport> {
    let mut worst: f64 = 0.0;
    let meshes: Vec<Arc<Mesh>> = vec![
        Arc::new(Mesh::interval(0.0, 1.0, 32)?),
        Arc::new(Mesh::unit_square(8)?),
    ];
    for mesh in meshes {
        let dim = mesh.dim();
        let sys = FemSystem::new(mesh, CoefficientSet::helmholtz(dim, 1, 1.0))?;
        for seed in 0..20u64 {
            let u = random_field(&sys, seed);
            let f = sys.apply_aggregate(&u);
            let t = generalized_conormal(&sys, &u, &f)?;
            let scale = f.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
            worst = worst.max(t.dual.iter().map(|d| d.norm()).fold(0.0, f64::max) / scale);
        }
    }
    report(6, worst <= 1e-10, format!("max trace magnitude {worst:.3e}"))
}

fn criterion_first_green() -> Result<CriterionReport> {
    use std::f64::consts::PI;
    let c = |re: f64| Complex64::new(re, 0.0);
    let mesh = Arc::new(Mesh::unit_square(16)?);
    let sys = FemSystem::new(mesh.clone(), CoefficientSet::laplacian(2, 1))?;
    let space = ConormalSpace::new(mesh, 1)?;
    let f_fn = move |_: usize, x: &[f64]| c(2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin());
    let f = sys.volume_functional(f_fn);
    let u = sys.solve_dirichlet(&f, |_, _| c(0.0))?;
    let t_can = canonical_conormal(&sys, &u, f_fn)?;
    let r_can = first_green_residual(&sys, &u, &f, &t_can);
    let t_cl = classical_conormal(&sys, &space, &u);
    let f_cl = nominate_conormal(&sys, &u, &t_cl);
    let r_cl = first_green_residual(&sys, &u, &f_cl, &t_cl);
    use rand::Rng;
    let mut rng = seeded_rng(77);
    let t_rand = ConormalTrace {
        mesh: sys.mesh.clone(),
        m: 1,
        dual: (0..sys.mesh.boundary_nodes().len())
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect(),
    };
    let f_nom = nominate_conormal(&sys, &u, &t_rand);
    let r_nom = first_green_residual(&sys, &u, &f_nom, &t_rand);
    let worst = r_can.max(r_cl).max(r_nom);
    report(
        7,
        worst <= 1e-10,
        format!("residuals canonical {r_can:.2e} classical {r_cl:.2e} nominated {r_nom:.2e}"),
    )
}

fn criterion_lifting_independence() -> Result<CriterionReport> {
    use std::f64::consts::PI;
    let c = |re: f64| Complex64::new(re, 0.0);
    let mut worst: f64 = 0.0;
    {
        let mesh = Arc::new(Mesh::unit_square(12)?);
        let sys = FemSystem::new(mesh, CoefficientSet::helmholtz(2, 1, 1.0))?;
        let f = sys.volume_functional(|_, x| c((2.0 * x[0] + x[1]).sin()));
        let u = sys.solve_dirichlet(&f, |_, x| c(x[0] * x[1]))?;
        let t0 = generalized_conormal_with_lifting(&sys, &u, &f, Lifting::ZeroInterior)?;
        let t1 = generalized_conormal_with_lifting(&sys, &u, &f, Lifting::Harmonic)?;
        let scale = t0.dual.iter().map(|d| d.norm()).fold(0.0, f64::max).max(1.0);
        let d = t0
            .dual
            .iter()
            .zip(&t1.dual)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        worst = worst.max(d / scale);
    }
    {
        let mesh = Arc::new(Mesh::interval(0.0, 1.0, 48)?);
        let sys = FemSystem::new(mesh, CoefficientSet::laplacian(1, 1))?;
        let f = sys.volume_functional(|_, x| c(PI * PI * (PI * x[0]).sin()));
        let u = sys.solve_dirichlet(&f, |_, _| c(0.0))?;
        let t0 = generalized_conormal_with_lifting(&sys, &u, &f, Lifting::ZeroInterior)?;
        let t1 = generalized_conormal_with_lifting(&sys, &u, &f, Lifting::Harmonic)?;
        let scale = t0.dual.iter().map(|d| d.norm()).fold(0.0, f64::max).max(1.0);
        let d = t0
            .dual
            .iter()
            .zip(&t1.dual)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        worst = worst.max(d / scale);
    }
    report(8, worst <= 1e-10, format!("max lifting disagreement {worst:.3e}"))
}

fn criterion_canonical_classical() -> Result<CriterionReport> {
    use std::f64::consts::PI;
    let c = |re: f64| Complex64::new(re, 0.0);
    let mut dists = Vec::new();
    for n in [8usize, 16, 32, 64] {
        let mesh = Arc::new(Mesh::unit_square(n)?);
        let sys = FemSystem::new(mesh.clone(), CoefficientSet::laplacian(2, 1))?;
        let space = ConormalSpace::new(mesh, 1)?;
        let f_fn =
            move |_: usize, x: &[f64]| c(2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin());
        let f = sys.volume_functional(f_fn);
        let u = sys.solve_dirichlet(&f, |_, _| c(0.0))?;
        let t = canonical_conormal(&sys, &u, f_fn)?;
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
        dists.push(space.l2_norm(&diff));
    }
    let mut min_rate = f64::INFINITY;
    for w in dists.windows(2) {
        min_rate = min_rate.min((w[0] / w[1]).log2());
    }
    report(
        9,
        min_rate >= 1.0,
        format!("distances {dists:?} min rate {min_rate:.2}"),
    )
}

fn criterion_nomination_round_trip() -> Result<CriterionReport> {
    use rand::Rng;
    let mesh = Arc::new(Mesh::unit_square(10)?);
    let sys = FemSystem::new(mesh, CoefficientSet::helmholtz(2, 2, 1.0))?;
    let u = random_field(&sys, 99);
    let mut rng = seeded_rng(55);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let t = ConormalTrace {
            mesh: sys.mesh.clone(),
            m: 2,
            dual: (0..sys.mesh.boundary_nodes().len() * 2)
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect(),
        };
        let f = nominate_conormal(&sys, &u, &t);
        let back = generalized_conormal(&sys, &u, &f)?;
        let scale = t.dual.iter().map(|d| d.norm()).fold(0.0, f64::max);
        let d = back
            .dual
            .iter()
            .zip(&t.dual)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        worst = worst.max(d / scale);
    }
    report(10, worst <= 1e-10, format!("max round-trip error {worst:.3e}"))
}

fn criterion_second_green() -> Result<CriterionReport> {
    use std::f64::consts::PI;
    let c = |re: f64| Complex64::new(re, 0.0);
    // A2GI on a complex non-symmetric system
    let mesh = Arc::new(Mesh::unit_square(6)?);
    let coeffs = CoefficientSet {
        dim: 2,
        m: 2,
        a: (0..4)
            .map(|t| -> crate::fem::MatrixFn {
                Arc::new(move |x: &[f64]| {
                    let base = 1.0 + 0.25 * (x[0] + t as f64 * x[1]).sin();
                    vec![
                        Complex64::new(base + 1.0, 0.1),
                        Complex64::new(0.2, -0.05),
                        Complex64::new(-0.1, 0.02 * base),
                        Complex64::new(base + 1.5, -0.1),
                    ]
                })
            })
            .collect(),
        b: Some(
            (0..2)
                .map(|t| -> crate::fem::MatrixFn {
                    Arc::new(move |x: &[f64]| {
                        vec![
                            Complex64::new(0.4 * x[0], 0.1),
                            Complex64::new(0.3 * t as f64, -0.2),
                            Complex64::new(-0.15, 0.1 * x[1]),
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
                Complex64::new(2.0 - x[1], -0.2),
            ]
        })),
        theta: None,
    };
    let sys = FemSystem::new(mesh, coeffs)?;
    let mut a2gi_worst: f64 = 0.0;
    for seed in 0..10u64 {
        let u = random_field(&sys, 200 + seed);
        let v = random_field(&sys, 300 + seed);
        a2gi_worst = a2gi_worst.max(sys.aggregate_second_green_check(&u, &v));
    }
    // canonical second Green identity on a self-adjoint problem
    let mesh2 = Arc::new(Mesh::unit_square(10)?);
    let sys2 = FemSystem::new(mesh2.clone(), CoefficientSet::helmholtz(2, 1, 1.0))?;
    let space = ConormalSpace::new(mesh2, 1)?;
    let fu = |_: usize, x: &[f64]| c((2.0 * PI * PI + 1.0) * (PI * x[0]).sin() * (PI * x[1]).sin());
    let fv = |_: usize, x: &[f64]| c((2.0 * PI * PI + 1.0) * (PI * x[0]).cos() * (PI * x[1]).sin());
    let fu_vec = sys2.volume_functional(fu);
    let fv_vec = sys2.volume_functional(fv);
    let u = sys2.solve_dirichlet(&fu_vec, |_, _| c(0.0))?;
    let v = sys2.solve_dirichlet(&fv_vec, |_, x| c((PI * x[0]).cos() * (PI * x[1]).sin()))?;
    let canonical = second_green_residual(&sys2, &space, &u, &v, &fu_vec, &fv_vec)?;
    let pass = a2gi_worst <= 1e-12 && canonical <= 1e-10;
    report(
        11,
        pass,
        format!("a2gi {a2gi_worst:.2e} canonical {canonical:.2e}"),
    )
}

fn criterion_commutator() -> Result<CriterionReport> {
    use std::f64::consts::PI;
    let gauss = |grid: &GridSpec| {
        SpectralField::from_scalar_fn(grid.clone(), |x| {
            Complex64::new((-PI * x[0] * x[0]).exp(), 0.0)
        })
    };
    // exact vanishing
    let grid = GridSpec::new(&[16.0], &[256], 1)?;
    let w = gauss(&grid);
    let g_const = HolderFunction::new_1d(|_| 2.0, 2.0, -8.0, 8.0);
    let zero_const = commutator(&g_const, &w, 0.7)?.sobolev_norm(0.0) / w.sobolev_norm(0.0);
    let g = HolderFunction::new_1d(|x| (2.0 * PI * x / 16.0).cos(), 2.0, -8.0, 8.0);
    let zero_t = commutator(&g, &w, 0.0)?.sobolev_norm(0.0) / w.sobolev_norm(0.0);
    // refinement stability
    let (s, t) = (0.5, 1.0);
    let ratio_at = |n: usize| -> Result<f64> {
        let grid = GridSpec::new(&[16.0], &[n], 1)?;
        let w = gauss(&grid);
        let g = HolderFunction::new_1d(|x| (2.0 * PI * x / 16.0).cos(), 2.0, -8.0, 8.0);
        commutator_ratio(&g, &w, t, s)
    };
    let r128 = ratio_at(128)?;
    let r512 = ratio_at(512)?;
    // linear scaling in t
    let norm_at = |t: f64| -> Result<f64> {
        Ok(commutator(&g, &w, t)?.sobolev_norm(s - t + 1.0))
    };
    let factor = norm_at(0.5)? / norm_at(0.25)?;
    let pass = zero_const <= 1e-12
        && zero_t <= 1e-12
        && r512 <= 1.5 * r128
        && (factor - 2.0).abs() <= 0.4;
    report(
        12,
        pass,
        format!(
            "zeros {zero_const:.1e}/{zero_t:.1e} ratios N128 {r128:.3} N512 {r512:.3} t-scaling {factor:.2}"
        ),
    )
}

fn criterion_apriori() -> Result<CriterionReport> {
    let mut min_slack = f64::INFINITY;
    let grid1 = GridSpec::new(&[8.0, 8.0], &[32, 32], 1)?;
    let lap = ConstantCoefficients::scalar_laplacian(2);
    for s in [-1.0, 0.0, 0.5] {
        for seed in 0..100u64 {
            let f = random_band_limited(&grid1, 10, 7000 + seed);
            min_slack = min_slack.min(apriori_check(&lap, &f, s)?.slack);
        }
    }
    let sys = ConstantCoefficients {
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
    let grid2 = GridSpec::new(&[8.0, 8.0], &[32, 32], 2)?;
    for s in [-1.0, 0.0, 0.5] {
        for seed in 0..100u64 {
            let f = random_band_limited(&grid2, 8, 9000 + seed);
            min_slack = min_slack.min(apriori_check(&sys, &f, s)?.slack);
        }
    }
    report(13, min_slack >= 0.0, format!("min slack {min_slack:.3e}"))
}

fn criterion_pairing() -> Result<CriterionReport> {
    let rep = pairing_report(1.0, 48, 8)?;
    let pass = rep.value_re > 1.0
        && rep.value_im.abs() <= 1e-10
        && rep.relative_deviation <= 1e-4;
    report(
        14,
        pass,
        format!(
            "value {:.6} oracle {:.6} deviation {:.2e}",
            rep.value_re, rep.oracle_re, rep.relative_deviation
        ),
    )
}

fn criterion_regularity() -> Result<CriterionReport> {
    use std::f64::consts::PI;
    let grid = GridSpec::new(&[2.0], &[512], 1)?;
    let f = SpectralField::from_scalar_fn(grid.clone(), |x| {
        Complex64::new((PI * x[0]).cos() + 0.3 * (2.0 * PI * x[0]).sin(), 0.0)
    });
    let mut hats = Vec::new();
    let mut residuals = Vec::new();
    for mu in [0.9, 0.6, 0.3] {
        let a = move |x: &[f64]| 1.0 + 0.5 * (PI * x[0]).sin().abs().powf(mu);
        let u = solve_periodic_scalar(a, &f, 1e-12, 800)?;
        let rep = estimate_decay_index(&u, 8.0)?;
        hats.push(rep.s_hat);
        residuals.push(rep.fit_residual);
    }
    let smooth_a = |_: &[f64]| 1.5;
    let u_smooth = solve_periodic_scalar(smooth_a, &f, 1e-12, 800)?;
    let smooth_rep = estimate_decay_index(&u_smooth, 8.0)?;
    let monotone = hats[0] + 0.05 >= hats[1] && hats[1] + 0.05 >= hats[2];
    let pass = monotone && smooth_rep.smooth;
    report(
        15,
        pass,
        format!(
            "s_hat(mu=0.9,0.6,0.3) = {:.2}, {:.2}, {:.2}; residuals {:.2}/{:.2}/{:.2}; smooth baseline flagged {}",
            hats[0], hats[1], hats[2], residuals[0], residuals[1], residuals[2], smooth_rep.smooth
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_complete() {
        assert_eq!(CRITERIA.len(), 15);
        for (i, (id, _)) in CRITERIA.iter().enumerate() {
            assert_eq!(*id, i + 1);
        }
        for id in quick_ids() {
            assert!((1..=15).contains(&id));
        }
    }
}
