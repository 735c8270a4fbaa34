//! Shared fixtures for the integration suites: a convergence-study driver
//! with the command-line defaults, and the invariant checks that both the
//! standalone suite and the summary assertions reuse.

// Each integration target compiles its own copy; none uses every helper.
#![allow(dead_code)]

use rand::Rng as _;
use rand::SeedableRng as _;
use rand_chacha::ChaCha8Rng;

use surfem::assembly::{assemble, PenaltyConfig, PenaltyNormal};
use surfem::cli::{run_study, NormalMode, RunConfig, StudyResult, SurfaceKind};
use surfem::curved::{build_curved, quad_rule, CurvedMesh};
use surfem::errors::{compute_errors, eoc_fit, ErrorReport};
use surfem::fespace::build_tensor_space;
use surfem::levelset::LevelSetSurface;
use surfem::manufactured::manufactured_solution;
use surfem::mesh::FlatMesh;
use surfem::simplex::SimplexBasis;
use surfem::solver::{solve_dense_cholesky, CsrMatrix};
use surfem::tensor::{Tensor, TensorProjector};

/// Run a convergence study with the command-line default quadrature
/// degrees: `2k_u + 2` for assembly and `2(k_u + k_g) + 2` for errors,
/// capped at the tabulated maxima.
pub fn study(
    surface: SurfaceKind,
    rank: usize,
    orders: (usize, usize, usize),
    alpha: f64,
    betas: &[f64],
    levels: (usize, usize),
    normal_mode: NormalMode,
) -> StudyResult {
    let (k_g, k_u, k_p) = orders;
    let cap = if surface == SurfaceKind::Ellipse { 20 } else { 14 };
    let cfg = RunConfig {
        surface,
        rank,
        k_g,
        k_u,
        k_p,
        alpha,
        betas: betas.to_vec(),
        level_lo: levels.0,
        level_hi: levels.1,
        normal_mode,
        lifted: false,
        quad_degree: 2 * k_u + 2,
        error_quad_degree: (2 * (k_u + k_g) + 2).min(cap),
        progress: false,
    };
    cfg.validate().expect("study configuration is valid");
    run_study(&cfg).expect("study completes")
}

/// Fitted convergence order of one error norm of a study.
pub fn order(result: &StudyResult, f: impl Fn(&ErrorReport) -> f64) -> f64 {
    result.eoc(f).expect("study spans at least two levels").order
}

fn random_unit<const D: usize>(rng: &mut ChaCha8Rng) -> [f64; D] {
    loop {
        let v: [f64; D] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let len = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if len > 0.1 {
            return std::array::from_fn(|i| v[i] / len);
        }
    }
}

fn projector_defect_dim<const D: usize>(rng: &mut ChaCha8Rng) -> f64 {
    let normal = random_unit::<D>(rng);
    let proj = TensorProjector::new(&normal);
    let mut worst: f64 = 0.0;
    for rank in 1..=2 {
        let mut t = Tensor::<D>::zeros(rank);
        for v in t.data_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let p = proj.project(&t);
        let q = proj.complement(&t);
        // Idempotence 𝐏𝐏t = 𝐏t.
        let mut defect = proj.project(&p);
        defect.add_scaled(&p, -1.0);
        worst = worst.max(defect.norm());
        // Completeness 𝐏t + 𝐐̃t = t.
        let mut sum = p.clone();
        sum.add_scaled(&q, 1.0);
        sum.add_scaled(&t, -1.0);
        worst = worst.max(sum.norm());
        // Orthogonality ⟨𝐏t, 𝐐̃t⟩ = 0 and the Pythagoras split.
        worst = worst.max(p.inner(&q).abs());
        let split = t.inner(&t) - p.inner(&p) - q.inner(&q);
        worst = worst.max(split.abs());
    }
    worst
}

/// Largest defect of the tensor-projector identities (idempotence,
/// completeness, orthogonality) over random normals and random tensors of
/// rank 1 and 2 in both ambient dimensions.
pub fn projector_algebra_defect() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        worst = worst.max(projector_defect_dim::<2>(&mut rng));
        worst = worst.max(projector_defect_dim::<3>(&mut rng));
    }
    worst
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Largest quadrature error over all reference-simplex monomials up to each
/// rule's stated degree: `∫₀¹ ξ^p = 1/(p+1)` on the segment and
/// `∫_T ξ^a η^b = a! b! / (a+b+2)!` on the unit triangle.
pub fn quadrature_exactness_defect() -> f64 {
    let mut worst: f64 = 0.0;
    for degree in 1..=20usize {
        let rule = quad_rule::<1>(degree).expect("segment rule");
        for p in 0..=degree {
            let got: f64 = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(xi, w)| w * xi[0].powi(p as i32))
                .sum();
            worst = worst.max((got - 1.0 / (p as f64 + 1.0)).abs());
        }
    }
    for degree in 1..=14usize {
        let rule = quad_rule::<2>(degree).expect("triangle rule");
        for a in 0..=degree {
            for b in 0..=(degree - a) {
                let got: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(xi, w)| w * xi[0].powi(a as i32) * xi[1].powi(b as i32))
                    .sum();
                let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                worst = worst.max((got - exact).abs());
            }
        }
    }
    worst
}

fn partition_defect_dim<const RD: usize>(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for order in 1..=4usize {
        let basis = SimplexBasis::<RD>::new(order);
        let nn = basis.node_count();
        let mut vals = vec![0.0; nn];
        let mut grads = vec![[0.0; RD]; nn];
        for _ in 0..20 {
            // Interior reference point by rescaled random coordinates.
            let raw: [f64; RD] = std::array::from_fn(|_| rng.gen_range(0.0..1.0));
            let total: f64 = raw.iter().sum();
            let xi: [f64; RD] = std::array::from_fn(|i| raw[i] / (total + 1.0));
            basis.eval(&xi, &mut vals);
            basis.eval_grad(&xi, &mut grads);
            let sum: f64 = vals.iter().sum();
            worst = worst.max((sum - 1.0).abs());
            for a in 0..RD {
                let gsum: f64 = grads.iter().map(|g| g[a]).sum();
                worst = worst.max(gsum.abs());
            }
        }
    }
    worst
}

/// Largest defect of `Σ_i φ_i = 1` and `Σ_i ∇φ_i = 0` for the Lagrange
/// bases of order 1 through 4 at random reference points.
pub fn partition_of_unity_defect() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    partition_defect_dim::<1>(&mut rng).max(partition_defect_dim::<2>(&mut rng))
}

/// Fitted decay order of the nodal interpolation error
/// `‖I_h(u∘π) − u∘π‖_{L²(Γ_h)}` on the ellipsoid with isoparametric
/// order `k` over levels 1–4. Expected `k + 1`.
pub fn interpolation_order(k: usize) -> f64 {
    let surface = LevelSetSurface::ellipsoid(0.75, 1.25, 1.0);
    let solution = manufactured_solution(&surface, 1).expect("rank-1 field");
    let penalty = PenaltyConfig {
        beta: 1.0,
        alpha: 0.0,
        normal: PenaltyNormal::Discrete,
    };
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for level in 1..=4usize {
        let mesh = FlatMesh::<3>::generate(&surface, level).expect("mesh");
        let cmesh = build_curved::<3, 2>(&surface, &mesh, k).expect("curved mesh");
        let space = build_tensor_space(&cmesh, k, 1).expect("space");
        let coeffs = space.interpolate(|x| {
            let p = surface.point_data(x).expect("dof point in tube").point;
            solution.exact_solution(&p)
        });
        let report = compute_errors(
            &surface,
            &cmesh,
            &space,
            &coeffs,
            &solution,
            &penalty,
            (2 * (k + k) + 2).min(14),
            false,
        )
        .expect("error integration");
        hs.push(cmesh.base.h);
        errs.push(report.l2_full);
    }
    eoc_fit(&hs, &errs).expect("four levels").order
}

/// Relative symmetry defect of a sparse matrix: `max |A_ij − A_ji|`
/// over the stored pattern, divided by `max |A_ij|`.
pub fn symmetry_defect(a: &CsrMatrix) -> f64 {
    let entry = |i: usize, j: usize| -> f64 {
        let row = &a.indices[a.indptr[i]..a.indptr[i + 1]];
        match row.binary_search(&j) {
            Ok(k) => a.values[a.indptr[i] + k],
            Err(_) => 0.0,
        }
    };
    let scale = a.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst: f64 = 0.0;
    for i in 0..a.n {
        for k in a.indptr[i]..a.indptr[i + 1] {
            let j = a.indices[k];
            worst = worst.max((a.values[k] - entry(j, i)).abs());
        }
    }
    worst / scale
}

fn assemble_case<const D: usize, const RD: usize>(
    surface: &LevelSetSurface<D>,
    mesh: &FlatMesh<D>,
    rank: usize,
    k: usize,
    penalty: &PenaltyConfig,
) -> CsrMatrix {
    let cmesh: CurvedMesh<D, RD> = build_curved(surface, mesh, k).expect("curved mesh");
    let space = build_tensor_space(&cmesh, k, rank).expect("space");
    let solution = manufactured_solution(surface, rank).expect("solution");
    let system = assemble(surface, &cmesh, &space, &solution, penalty, 2 * k + 2)
        .expect("assembly");
    system.matrix
}

/// Worst symmetry defect and SPD verdict over a grid of assembled systems
/// (both ambient dimensions, both ranks, orders 1–2, three penalty
/// exponents, two penalty weights). Positive definiteness is certified by
/// a dense Cholesky factorization of every system.
pub fn assembled_systems_defect() -> (f64, usize) {
    let ellipse = LevelSetSurface::ellipse(0.75, 1.25);
    let sphere = LevelSetSurface::sphere();
    let ellipsoid = LevelSetSurface::ellipsoid(0.75, 1.25, 1.0);
    let mesh1 = FlatMesh::<2>::generate(&ellipse, 2).expect("ellipse mesh");
    let mesh2s = FlatMesh::<3>::generate(&sphere, 0).expect("sphere mesh");
    let mesh2e = FlatMesh::<3>::generate(&ellipsoid, 0).expect("ellipsoid mesh");
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for &alpha in &[0.0, 0.5, 1.0] {
        for &beta in &[10.0, 1e4] {
            let penalty = PenaltyConfig {
                beta,
                alpha,
                normal: PenaltyNormal::Discrete,
            };
            for k in 1..=2usize {
                for rank in 1..=2usize {
                    let a = assemble_case::<2, 1>(&ellipse, &mesh1, rank, k, &penalty);
                    worst = worst.max(symmetry_defect(&a));
                    let b = vec![1.0; a.n];
                    solve_dense_cholesky(&a, &b).expect("ellipse system is SPD");
                    checked += 1;
                }
                let a = assemble_case::<3, 2>(&ellipsoid, &mesh2e, 1, k, &penalty);
                worst = worst.max(symmetry_defect(&a));
                let b = vec![1.0; a.n];
                solve_dense_cholesky(&a, &b).expect("ellipsoid system is SPD");
                let a = assemble_case::<3, 2>(&sphere, &mesh2s, 2, k, &penalty);
                worst = worst.max(symmetry_defect(&a));
                let b = vec![1.0; a.n];
                solve_dense_cholesky(&a, &b).expect("sphere system is SPD");
                checked += 2;
            }
        }
    }
    (worst, checked)
}

/// Largest relative defect of the energy split
/// `energy_Ah² = energy_ah² + β h^{−2α} ‖𝐐̃ e‖²` over solved systems.
pub fn energy_split_defect() -> f64 {
    let mut worst: f64 = 0.0;
    let mut check = |report: &ErrorReport, penalty: &PenaltyConfig, h: f64| {
        let lhs = report.energy_full * report.energy_full;
        let rhs = report.energy_ah * report.energy_ah
            + penalty.prefactor(h) * report.l2_norm_pen * report.l2_norm_pen;
        worst = worst.max((lhs - rhs).abs() / lhs.max(1e-300));
    };

    let ellipse = LevelSetSurface::ellipse(0.75, 1.25);
    let mesh = FlatMesh::<2>::generate(&ellipse, 3).expect("ellipse mesh");
    for (rank, alpha, beta) in [(1usize, 0.5, 10.0), (2usize, 1.0, 1e4)] {
        let penalty = PenaltyConfig {
            beta,
            alpha,
            normal: PenaltyNormal::Discrete,
        };
        let cmesh = build_curved::<2, 1>(&ellipse, &mesh, 2).expect("curved mesh");
        let space = build_tensor_space(&cmesh, 2, rank).expect("space");
        let solution = manufactured_solution(&ellipse, rank).expect("solution");
        let system = assemble(&ellipse, &cmesh, &space, &solution, &penalty, 6)
            .expect("assembly");
        let x = solve_dense_cholesky(&system.matrix, &system.rhs).expect("solve");
        let report = compute_errors(
            &ellipse, &cmesh, &space, &x, &solution, &penalty, 10, false,
        )
        .expect("errors");
        check(&report, &penalty, cmesh.base.h);
    }

    let sphere = LevelSetSurface::sphere();
    let mesh = FlatMesh::<3>::generate(&sphere, 1).expect("sphere mesh");
    let penalty = PenaltyConfig {
        beta: 100.0,
        alpha: 0.5,
        normal: PenaltyNormal::Discrete,
    };
    let cmesh = build_curved::<3, 2>(&sphere, &mesh, 2).expect("curved mesh");
    let space = build_tensor_space(&cmesh, 2, 2).expect("space");
    let solution = manufactured_solution(&sphere, 2).expect("solution");
    let system = assemble(&sphere, &cmesh, &space, &solution, &penalty, 6).expect("assembly");
    let x = solve_dense_cholesky(&system.matrix, &system.rhs).expect("solve");
    let report =
        compute_errors(&sphere, &cmesh, &space, &x, &solution, &penalty, 10, false)
            .expect("errors");
    check(&report, &penalty, cmesh.base.h);

    worst
}
