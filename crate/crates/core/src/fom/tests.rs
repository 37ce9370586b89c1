use super::oseen::weighted_norm;
use super::*;

fn poiseuille(_x: f64, y: f64) -> [f64; 2] {
    [y * (3.0 - y), 0.0]
}

fn rel_error(mesh: &Mesh, a: &[f64], b: &[f64]) -> f64 {
    let w = mesh.velocity_weights();
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    weighted_norm(&d, &w) / weighted_norm(b, &w)
}

#[test]
fn reynolds_numbers() {
    assert_eq!(reynolds(1.0, 1.0, 1.0).unwrap(), 1.0);
    assert!((reynolds(2.25, 3.0, 0.15).unwrap() - 45.0).abs() < 1e-12);
    assert!((reynolds(2.25, 3.0, 0.2).unwrap() - 33.75).abs() < 1e-12);
    assert!(matches!(reynolds(0.0, 1.0, 1.0), Err(Error::Domain(_))));
    assert!(matches!(reynolds(1.0, 1.0, -1.0), Err(Error::Domain(_))));
}

#[test]
fn config_validation() {
    assert!(FlowConfig::default().validate().is_ok());
    for cfg in [
        FlowConfig::with_viscosity(0.0),
        FlowConfig { oseen_tol: 0.0, ..Default::default() },
        FlowConfig { relaxation: 1.5, ..Default::default() },
        FlowConfig { relaxation: 0.0, ..Default::default() },
    ] {
        assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{cfg:?}");
    }
}

#[test]
fn homogeneous_data_gives_zero_solution() {
    let mesh = build_mesh(&GeometrySpec::straight(6.0), 8, 4).unwrap();
    let cfg = FlowConfig {
        inflow: Inflow::Homogeneous,
        outlet: Outlet::NoSlip,
        ..Default::default()
    };
    let f = oseen_step(&mesh, &cfg, &Field::zero(&mesh)).unwrap();
    assert!(f.velocity.iter().all(|v| v.abs() < 1e-14));
    assert!(f.pressure.iter().all(|p| p.abs() < 1e-12));
}

#[test]
fn poiseuille_is_a_fixed_point() {
    let mesh = build_mesh(&GeometrySpec::straight(6.0), 12, 6).unwrap();
    let nu = 0.7;
    let cfg = FlowConfig::with_viscosity(nu);
    let exact = Field::from_velocity_fn(&mesh, poiseuille);
    let next = oseen_step(&mesh, &cfg, &exact).unwrap();
    assert!(rel_error(&mesh, &next.velocity, &exact.velocity) < 1e-10);

    // dp/dx = -2 nu, p = 0 at the outlet (x = 6)
    let p = next.nodal_pressure(&mesh);
    for (c, &pv) in mesh.coords().iter().zip(&p) {
        let expected = 2.0 * nu * (6.0 - c[0]);
        assert!((pv - expected).abs() < 1e-8, "p({:?}) = {pv}, expected {expected}", c);
    }
}

#[test]
fn poiseuille_solve_from_exact_field() {
    let mesh = build_mesh(&GeometrySpec::straight(6.0), 12, 6).unwrap();
    let cfg = FlowConfig::with_viscosity(0.2);
    let exact = Field::from_velocity_fn(&mesh, poiseuille);
    let sol = oseen_solve(&mesh, &cfg, &exact).unwrap();
    assert!(sol.iterations() <= 2, "{:?}", sol.trace);
    assert!(rel_error(&mesh, &sol.field.velocity, &exact.velocity) < 1e-8);
}

#[test]
fn poiseuille_solve_from_zero_field() {
    let mesh = build_mesh(&GeometrySpec::straight(6.0), 12, 6).unwrap();
    let cfg = FlowConfig::with_viscosity(1.0);
    let exact = Field::from_velocity_fn(&mesh, poiseuille);
    let sol = oseen_solve(&mesh, &cfg, &Field::zero(&mesh)).unwrap();
    assert!(rel_error(&mesh, &sol.field.velocity, &exact.velocity) < 1e-8);
}

#[test]
fn zero_advection_step_is_a_stokes_solve() {
    let mesh = build_mesh(&GeometrySpec::narrowing_width(1.0), 12, 6).unwrap();
    let cfg = FlowConfig::with_viscosity(1.0);
    let stokes = oseen_step(&mesh, &cfg, &Field::zero(&mesh)).unwrap();
    // Stokes solution is linear in the data: scaling nu scales pressure only
    let cfg2 = FlowConfig::with_viscosity(2.0);
    let stokes2 = oseen_step(&mesh, &cfg2, &Field::zero(&mesh)).unwrap();
    assert!(rel_error(&mesh, &stokes2.velocity, &stokes.velocity) < 1e-10);
    for (a, b) in stokes.pressure.iter().zip(&stokes2.pressure) {
        assert!((2.0 * a - b).abs() < 1e-8 * (1.0 + b.abs()));
    }
}

#[test]
fn stokes_regime_converges_quickly() {
    let mesh = build_mesh(&GeometrySpec::narrowing_width(1.0), 12, 6).unwrap();
    let cfg = FlowConfig {
        nu_visc: 1e6,
        oseen_tol: 1e-8,
        ..Default::default()
    };
    let sol = oseen_solve(&mesh, &cfg, &Field::zero(&mesh)).unwrap();
    assert!(sol.iterations() <= 3, "{:?}", sol.trace);
}

#[test]
fn model_one_linear_rate() {
    let mesh = build_mesh(&GeometrySpec::narrowing_width(1.0), 24, 8).unwrap();
    let cfg = FlowConfig::with_viscosity(1.0);
    let sol = oseen_solve(&mesh, &cfg, &Field::zero(&mesh)).unwrap();
    let t = &sol.trace;
    assert!(t.len() >= 6, "{t:?}");
    assert!(t.windows(2).all(|w| w[1] < w[0]), "{t:?}");
    let ratios: Vec<f64> = t[t.len() - 6..].windows(2).map(|w| w[1] / w[0]).collect();
    let (lo, hi) = ratios
        .iter()
        .fold((f64::MAX, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    assert!(hi < 1.0 && hi / lo < 2.0, "{ratios:?}");
}

#[test]
fn converged_field_is_discretely_divergence_free() {
    let mesh = build_mesh(&GeometrySpec::narrowing_width(0.8), 16, 8).unwrap();
    let cfg = FlowConfig::with_viscosity(0.5);
    let sol = oseen_solve(&mesh, &cfg, &Field::zero(&mesh)).unwrap();
    let w = mesh.velocity_weights();
    let scale = weighted_norm(&sol.field.velocity, &w);
    assert!(divergence_residual(&mesh, &sol.field) <= 10.0 * cfg.oseen_tol * scale);
}

#[test]
fn snapshots_depend_continuously_on_mu() {
    let cfg = FlowConfig::with_viscosity(1.0);
    let solve = |mu: f64| {
        let mesh = build_mesh(&GeometrySpec::narrowing_width(mu), 16, 8).unwrap();
        let sol = oseen_solve(&mesh, &cfg, &Field::zero(&mesh)).unwrap();
        (pullback(&sol.field, &mesh).unwrap(), mesh)
    };
    let (a, mesh) = solve(1.0);
    let (b, _) = solve(1.001);
    assert_eq!(a.len(), b.len());
    assert!(rel_error(&mesh, &b, &a) <= 1e-2);
}

#[test]
fn pullback_is_identity_and_checks_length() {
    let mesh = build_mesh(&GeometrySpec::narrowing_width(1.0), 8, 4).unwrap();
    let f = Field::from_velocity_fn(&mesh, |x, y| [x, y]);
    assert_eq!(pullback(&f, &mesh).unwrap(), f.velocity);
    let g = Field::from_velocity_fn(&mesh, |x, _| [1.0, x]);
    let combo = Field {
        velocity: f.velocity.iter().zip(&g.velocity).map(|(a, b)| 2.0 * a - 3.0 * b).collect(),
        pressure: f.pressure.clone(),
    };
    let pa = pullback(&f, &mesh).unwrap();
    let pb = pullback(&g, &mesh).unwrap();
    for ((c, a), b) in pullback(&combo, &mesh).unwrap().iter().zip(&pa).zip(&pb) {
        assert_eq!(*c, 2.0 * a - 3.0 * b);
    }
    let bad = Field { velocity: vec![0.0; 3], pressure: vec![] };
    assert!(matches!(pullback(&bad, &mesh), Err(Error::DimensionMismatch { .. })));

    let other = build_mesh(&GeometrySpec::narrowing_width(2.5), 8, 4).unwrap();
    assert_eq!(other.velocity_dofs(), mesh.velocity_dofs());
}

#[test]
fn field_csv_has_one_row_per_node() {
    let mesh = build_mesh(&GeometrySpec::straight(6.0), 4, 4).unwrap();
    let f = Field::from_velocity_fn(&mesh, poiseuille);
    let mut buf = Vec::new();
    write_field_csv(&mesh, &f, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("x,y,u_x,u_y,p"));
    assert_eq!(text.lines().count(), mesh.num_velocity_nodes() + 1);
}
