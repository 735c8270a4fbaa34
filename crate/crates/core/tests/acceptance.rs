//! End-to-end acceptance runs: the headline convergence orders of the
//! penalized tangential tensor equation on every supported surface, the
//! geometric approximation rates of the curved elements, a weak-form
//! consistency oracle for the manufactured solutions, and the invariant
//! checks, each at its stated tolerance.

mod common;

use std::time::Instant;

use rand::Rng as _;
use rand::SeedableRng as _;
use rand_chacha::ChaCha8Rng;

use surfem::cli::{NormalMode, SurfaceKind};
use surfem::curved::{build_curved, quad_rule};
use surfem::dual::{Dual1, Scalar as _};
use surfem::errors::eoc_fit;
use surfem::levelset::LevelSetSurface;
use surfem::manufactured::{manufactured_solution, ManufacturedSolution};
use surfem::mesh::FlatMesh;
use surfem::simplex::SimplexBasis;
use surfem::tensor::{Tensor, TensorProjector};

use common::{order, study};

fn assert_window(name: &str, got: f64, expected: f64, tol: f64) {
    assert!(
        (got - expected).abs() <= tol,
        "{name}: got {got:.4}, expected {expected} ± {tol}"
    );
    println!("{name}: {got:.4} (expected {expected} ± {tol})");
}

#[test]
fn ellipsoid_rank1_isogeometric_quadratic_orders() {
    let start = Instant::now();
    let result = study(
        SurfaceKind::Ellipsoid,
        1,
        (2, 2, 2),
        0.5,
        &[10.0, 100.0, 1e4],
        (1, 4),
        NormalMode::Discrete,
    );
    let elapsed = start.elapsed().as_secs_f64();
    assert_window("tangential L2 order", order(&result, |r| r.l2_tan), 3.0, 0.3);
    let full = order(&result, |r| r.l2_full);
    assert!(full >= 1.9, "full L2 order: got {full:.4}, expected >= 1.9");
    println!("full L2 order: {full:.4} (expected >= 1.9)");
    assert_window("a_h energy order", order(&result, |r| r.energy_ah), 2.0, 0.3);
    assert!(elapsed < 600.0, "study took {elapsed:.1} s, budget 600 s");
}

#[test]
fn ellipsoid_rank1_linear_geometry_quadratic_penalty_orders() {
    let result = study(
        SurfaceKind::Ellipsoid,
        1,
        (1, 1, 2),
        1.0,
        &[10.0],
        (1, 4),
        NormalMode::Interp,
    );
    assert_window("full L2 order", order(&result, |r| r.l2_full), 2.0, 0.3);
    assert_window("tangential L2 order", order(&result, |r| r.l2_tan), 2.0, 0.3);
    assert_window("A_h energy order", order(&result, |r| r.energy_full), 1.0, 0.25);
}

#[test]
fn ellipsoid_rank1_piecewise_flat_orders_and_stall() {
    let result = study(
        SurfaceKind::Ellipsoid,
        1,
        (1, 1, 1),
        0.5,
        &[10.0],
        (1, 4),
        NormalMode::Discrete,
    );
    let tan = order(&result, |r| r.l2_tan);
    assert!(tan >= 0.8, "tangential L2 order: got {tan:.4}, expected >= 0.8");
    println!("tangential L2 order: {tan:.4} (expected >= 0.8)");
    assert_window("a_h energy order", order(&result, |r| r.energy_ah), 1.0, 0.25);

    // With the full penalty exponent the piecewise-flat normals are too
    // inaccurate and the tangential error stops decaying.
    let stalled = study(
        SurfaceKind::Ellipsoid,
        1,
        (1, 1, 1),
        1.0,
        &[10.0, 100.0, 1e4],
        (1, 4),
        NormalMode::Discrete,
    );
    let tan = order(&stalled, |r| r.l2_tan);
    assert!(tan < 0.3, "stalled tangential order: got {tan:.4}, expected < 0.3");
    println!("stalled tangential order: {tan:.4} (expected < 0.3)");
}

#[test]
fn sphere_rank2_orders_for_linear_and_quadratic_geometry() {
    let linear = study(
        SurfaceKind::Sphere,
        2,
        (1, 1, 1),
        0.5,
        &[10.0],
        (1, 4),
        NormalMode::Discrete,
    );
    assert_window(
        "tangential L2 order, k = 1",
        order(&linear, |r| r.l2_tan),
        1.0,
        0.3,
    );
    let quadratic = study(
        SurfaceKind::Sphere,
        2,
        (2, 2, 2),
        0.5,
        &[10.0],
        (1, 4),
        NormalMode::Discrete,
    );
    assert_window(
        "tangential L2 order, k = 2",
        order(&quadratic, |r| r.l2_tan),
        3.0,
        0.4,
    );
}

#[test]
fn ellipse_rank1_and_rank2_orders() {
    let rank1 = study(
        SurfaceKind::Ellipse,
        1,
        (2, 2, 2),
        0.5,
        &[10.0],
        (2, 7),
        NormalMode::Discrete,
    );
    assert_window(
        "tangential L2 order, rank 1",
        order(&rank1, |r| r.l2_tan),
        3.0,
        0.3,
    );
    let rank2 = study(
        SurfaceKind::Ellipse,
        2,
        (2, 2, 2),
        0.5,
        &[10.0],
        (2, 7),
        NormalMode::Discrete,
    );
    assert_window(
        "tangential L2 order, rank 2",
        order(&rank2, |r| r.l2_tan),
        3.0,
        0.3,
    );
    // The rank-2 field carries larger absolute errors level for level.
    for (li, level) in rank1.levels.iter().enumerate() {
        let e1 = rank1.reports[li][0].l2_tan;
        let e2 = rank2.reports[li][0].l2_tan;
        assert!(
            e2 > e1,
            "level {level}: rank-2 error {e2:.3e} not above rank-1 error {e1:.3e}"
        );
    }
}

/// Per-element sampling set for sup-norm estimates: a degree-10 interior
/// rule plus the order-4 Lagrange lattice, so element boundaries and
/// vertices are probed as well.
fn sup_sample_points() -> Vec<[f64; 2]> {
    let rule = quad_rule::<2>(10).expect("sampling rule");
    let lattice = SimplexBasis::<2>::new(4);
    rule.points
        .iter()
        .copied()
        .chain(lattice.nodes().iter().copied())
        .collect()
}

/// Sup-norm decay orders of the geometric approximations of one curved
/// mesh family: interpolated projection vs exact projection, discrete vs
/// exact normal, and the lifted measure ratio.
///
/// The projection error is measured on the unit sphere: its uniform
/// curvature puts every refinement level in the asymptotic regime, so the
/// weighted fit resolves the limiting order cleanly. The normal and
/// measure-ratio errors are measured on a generic ellipsoid instead,
/// because on the sphere the antipodal symmetry of the mesh family makes
/// those two quantities superconvergent for even geometry orders, hiding
/// the generic rate.
fn geometry_slopes(k_g: usize) -> (f64, f64, f64) {
    let sphere = LevelSetSurface::sphere();
    let ellipsoid = LevelSetSurface::ellipsoid(0.75, 1.25, 1.0);
    let pts = sup_sample_points();
    let (mut hs_sphere, mut hs) = (Vec::new(), Vec::new());
    let (mut e_pi, mut e_n, mut e_b) = (Vec::new(), Vec::new(), Vec::new());
    for level in 1..=4usize {
        let mesh = FlatMesh::<3>::generate(&sphere, level).expect("mesh");
        let cmesh = build_curved::<3, 2>(&sphere, &mesh, k_g).expect("curved mesh");
        hs_sphere.push(cmesh.base.h);
        let mut m_pi = 0.0f64;
        for e in 0..cmesh.elem_count() {
            let verts = mesh.cell_vertices(e);
            for xi in &pts {
                let curved = cmesh.map_point(e, xi);
                let mut affine = verts[0];
                for (a, vert) in verts.iter().enumerate().skip(1) {
                    for i in 0..3 {
                        affine[i] += xi[a - 1] * (vert[i] - verts[0][i]);
                    }
                }
                let (projected, _) = sphere.closest_point(&affine).expect("projection");
                for i in 0..3 {
                    m_pi = m_pi.max((projected[i] - curved[i]).abs());
                }
            }
        }
        let mesh = FlatMesh::<3>::generate(&ellipsoid, level).expect("mesh");
        let cmesh = build_curved::<3, 2>(&ellipsoid, &mesh, k_g).expect("curved mesh");
        let (mut m_n, mut m_b) = (0.0f64, 0.0f64);
        for e in 0..cmesh.elem_count() {
            for xi in &pts {
                let geom = cmesh.eval(e, xi).expect("geometry");
                let lift = geom.lift(&ellipsoid).expect("lift");
                for i in 0..3 {
                    m_n = m_n.max((lift.normal[i] - geom.n_h[i]).abs());
                }
                m_b = m_b.max((1.0 - lift.det_b).abs());
            }
        }
        hs.push(cmesh.base.h);
        e_pi.push(m_pi);
        e_n.push(m_n);
        e_b.push(m_b);
    }
    let fit = |hs: &[f64], errs: &[f64]| eoc_fit(hs, errs).expect("four levels").order;
    (fit(&hs_sphere, &e_pi), fit(&hs, &e_n), fit(&hs, &e_b))
}

#[test]
fn geometry_approximations_converge_at_expected_orders() {
    for k_g in 1..=3usize {
        let (s_pi, s_n, s_b) = geometry_slopes(k_g);
        let k = k_g as f64;
        assert_window(&format!("|pi - pi_h| slope, k_g = {k_g}"), s_pi, k + 1.0, 0.3);
        assert_window(&format!("|n - n_h| slope, k_g = {k_g}"), s_n, k, 0.3);
        assert_window(&format!("|1 - det B| slope, k_g = {k_g}"), s_b, k + 1.0, 0.4);
    }
}

/// A random ambient polynomial tensor field projected into the tangent
/// bundle: `v(x) = 𝐏(x) q(x)` slotwise, with every component of `q` a
/// quadratic polynomial. Returns the value and the full ambient Jacobian
/// (derivative slot last) of the chosen extension.
fn random_tangential_field<const D: usize>(
    semiaxes: &[f64; D],
    rank: usize,
    coeffs: &[f64],
    x: &[f64; D],
) -> (Tensor<D>, Tensor<D>) {
    let jets = Dual1::seed(x);
    // Extended unit normal n = ∇φ/|∇φ| of the level set.
    let g: [Dual1<D>; D] =
        std::array::from_fn(|i| jets[i] / Dual1::constant(semiaxes[i] * semiaxes[i]));
    let mut q = Dual1::constant(0.0);
    for gi in &g {
        q = q + *gi * *gi;
    }
    let inv = Dual1::constant(1.0) / q.sqrt();
    let n: [Dual1<D>; D] = std::array::from_fn(|i| g[i] * inv);
    let p: Vec<Vec<Dual1<D>>> = (0..D)
        .map(|i| {
            (0..D)
                .map(|j| {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    Dual1::constant(delta) - n[i] * n[j]
                })
                .collect()
        })
        .collect();

    let poly_len = 1 + D + D * D;
    let components = D.pow(rank as u32);
    assert_eq!(coeffs.len(), components * poly_len);
    let raw: Vec<Dual1<D>> = (0..components)
        .map(|c| {
            let cs = &coeffs[c * poly_len..(c + 1) * poly_len];
            let mut acc = Dual1::constant(cs[0]);
            for i in 0..D {
                acc = acc + Dual1::constant(cs[1 + i]) * jets[i];
                for j in 0..D {
                    acc = acc + Dual1::constant(cs[1 + D + i * D + j]) * jets[i] * jets[j];
                }
            }
            acc
        })
        .collect();

    let projected: Vec<Dual1<D>> = match rank {
        1 => (0..D)
            .map(|i| {
                let mut acc = Dual1::constant(0.0);
                for j in 0..D {
                    acc = acc + p[i][j] * raw[j];
                }
                acc
            })
            .collect(),
        2 => {
            let mut out = Vec::with_capacity(D * D);
            for i in 0..D {
                for j in 0..D {
                    let mut acc = Dual1::constant(0.0);
                    for k in 0..D {
                        for l in 0..D {
                            acc = acc + p[i][k] * raw[k * D + l] * p[l][j];
                        }
                    }
                    out.push(acc);
                }
            }
            out
        }
        _ => unreachable!("ranks 1 and 2 only"),
    };

    let mut value = Tensor::zeros(rank);
    let mut deriv = Tensor::zeros(rank + 1);
    for (c, jet) in projected.iter().enumerate() {
        value.data_mut()[c] = jet.v;
        for b in 0..D {
            deriv.data_mut()[c * D + b] = jet.d[b];
        }
    }
    (value, deriv)
}

/// Largest relative weak-form residual
/// `|⟨∇u,∇v⟩ + ⟨u,v⟩ − ⟨f,v⟩|` over random tangential test fields,
/// integrated on the exact surface through the measure-ratio lift of a
/// curved mesh.
fn weak_form_defect<const D: usize, const RD: usize>(
    surface: &LevelSetSurface<D>,
    mesh: &FlatMesh<D>,
    rank: usize,
    degree: usize,
    seed: u64,
) -> f64 {
    let solution: ManufacturedSolution<D> =
        manufactured_solution(surface, rank).expect("manufactured case");
    let cmesh = build_curved::<D, RD>(surface, mesh, 2).expect("curved mesh");
    let rule = quad_rule::<RD>(degree).expect("rule");

    // Exact-surface quadrature with cached solution data per point.
    struct Point<const D: usize> {
        w: f64,
        y: [f64; D],
        proj: TensorProjector<D>,
        u: Tensor<D>,
        grad_u: Tensor<D>,
        f: Tensor<D>,
    }
    let mut points: Vec<Point<D>> = Vec::new();
    for e in 0..cmesh.elem_count() {
        for (xi, w) in rule.points.iter().zip(&rule.weights) {
            let geom = cmesh.eval(e, xi).expect("geometry");
            let lift = geom.lift(surface).expect("lift");
            let y = lift.point;
            let proj = TensorProjector::new(&lift.normal);
            let (u, du) = solution.exact_solution_with_gradient(&y);
            let grad_u = proj.project(&du);
            let f = solution.rhs(&y);
            points.push(Point {
                w: w * geom.measure * lift.det_b,
                y,
                proj,
                u,
                grad_u,
                f,
            });
        }
    }

    let poly_len = 1 + D + D * D;
    let components = D.pow(rank as u32);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let coeffs: Vec<f64> = (0..components * poly_len)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let mut residual = 0.0;
        let (mut nu_h1, mut nv_h1, mut nf, mut nv) = (0.0, 0.0, 0.0, 0.0);
        for pt in &points {
            let (v, dv) = random_tangential_field(surface.semiaxes(), rank, &coeffs, &pt.y);
            let grad_v = pt.proj.project(&dv);
            residual +=
                pt.w * (pt.grad_u.inner(&grad_v) + pt.u.inner(&v) - pt.f.inner(&v));
            nu_h1 += pt.w * (pt.grad_u.inner(&pt.grad_u) + pt.u.inner(&pt.u));
            nv_h1 += pt.w * (grad_v.inner(&grad_v) + v.inner(&v));
            nf += pt.w * pt.f.inner(&pt.f);
            nv += pt.w * v.inner(&v);
        }
        let scale = (nu_h1 * nv_h1).sqrt() + (nf * nv).sqrt();
        worst = worst.max(residual.abs() / scale);
    }
    worst
}

#[test]
fn manufactured_solutions_satisfy_the_weak_form() {
    let ellipse = LevelSetSurface::ellipse(0.75, 1.25);
    let mesh1 = FlatMesh::<2>::generate(&ellipse, 6).expect("ellipse mesh");
    let ellipsoid = LevelSetSurface::ellipsoid(0.75, 1.25, 1.0);
    let mesh2 = FlatMesh::<3>::generate(&ellipsoid, 3).expect("ellipsoid mesh");
    let sphere = LevelSetSurface::sphere();
    let mesh3 = FlatMesh::<3>::generate(&sphere, 3).expect("sphere mesh");

    let cases: [(&str, f64); 4] = [
        ("ellipse rank 1", weak_form_defect::<2, 1>(&ellipse, &mesh1, 1, 16, 101)),
        ("ellipse rank 2", weak_form_defect::<2, 1>(&ellipse, &mesh1, 2, 16, 102)),
        ("ellipsoid rank 1", weak_form_defect::<3, 2>(&ellipsoid, &mesh2, 1, 12, 103)),
        ("sphere rank 2", weak_form_defect::<3, 2>(&sphere, &mesh3, 2, 12, 104)),
    ];
    for (name, defect) in cases {
        assert!(
            defect < 1e-6,
            "{name}: weak-form residual {defect:.3e} above 1e-6 of the norm product"
        );
        println!("{name}: weak-form residual {defect:.3e} (< 1e-6)");
    }
}

#[test]
fn invariant_checks_hold_at_stated_tolerances() {
    let defect = common::projector_algebra_defect();
    assert!(defect < 1e-12, "projector algebra defect {defect:.3e}");
    let defect = common::quadrature_exactness_defect();
    assert!(defect < 1e-12, "quadrature exactness defect {defect:.3e}");
    let defect = common::partition_of_unity_defect();
    assert!(defect < 1e-10, "partition of unity defect {defect:.3e}");
    for k in 1..=3usize {
        let order = common::interpolation_order(k);
        let expected = (k + 1) as f64;
        assert!(
            (order - expected).abs() < 0.2,
            "interpolation order for k = {k}: got {order:.4}, expected {expected} ± 0.2"
        );
    }
    let (defect, checked) = common::assembled_systems_defect();
    assert!(checked >= 24, "grid covers at least 24 systems");
    assert!(defect < 1e-12, "symmetry defect {defect:.3e}");
    let defect = common::energy_split_defect();
    assert!(defect < 1e-10, "energy split defect {defect:.3e}");
}
