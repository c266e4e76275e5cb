use jlip_core::alphaharmonic::{theorem31_condition, verify_lipschitz_j, AlphaHarmonicMap};
use jlip_core::maps::BuiltinMap;
use jlip_core::metrics::{j_disk, mobius_disk, DiskPoint, SampleSpec};
use jlip_core::quasiconformal::{composition_property_check, thm24_audit, GridSpec, QCParams};
use jlip_core::specfun::{gauss_2f1, HypParams};
use jlip_core::{Complex64, Error};

#[test]
fn coefficient_file_from_disk() {
    let dir = std::env::temp_dir().join(format!("jlip-core-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("map.json");
    std::fs::write(&path, r#"{"alpha": 2, "coeffs": [{"k": 2, "re": 1.5, "im": 0}]}"#).unwrap();
    let f = AlphaHarmonicMap::load(&path).unwrap();
    let c = theorem31_condition(&f).unwrap();
    assert!((c.value - 1.0).abs() < 1e-15 && c.satisfied);

    let builtin = BuiltinMap::parse(&format!("alphaharm:{}", path.display())).unwrap();
    assert_eq!(builtin, BuiltinMap::AlphaHarmonic(f));
    std::fs::remove_dir_all(&dir).unwrap();

    let missing = AlphaHarmonicMap::load(std::path::Path::new("/nonexistent/map.json"));
    assert!(matches!(missing, Err(Error::Io { .. })));
}

#[test]
fn automorphism_and_its_inverse() {
    let a = DiskPoint::from_parts(0.4, -0.3).unwrap();
    let m = mobius_disk(a, 0.8);
    let inv = m.inverse();
    let z = Complex64::new(-0.2, 0.55);
    assert!((inv.apply(m.apply(z)) - z).norm() < 1e-14);

    // the inverse is also bounded by factor 2, so j changes by at most 2x both ways
    let (p, q) = (DiskPoint::from_parts(0.9, 0.0).unwrap(), DiskPoint::from_parts(0.1, 0.2).unwrap());
    let image = j_disk(DiskPoint::new(m.apply(p.value())).unwrap(), DiskPoint::new(m.apply(q.value())).unwrap());
    let base = j_disk(p, q);
    assert!(image <= 2.0 * base + 1e-12 && base <= 2.0 * image + 1e-12);
}

#[test]
fn harmonic_polynomial_under_condition() {
    let f = AlphaHarmonicMap::from_json_str(
        r#"{"alpha": 0, "coeffs": [{"k": 1, "re": 0.5, "im": 0.2}, {"k": -2, "re": 0.1, "im": -0.1}, {"k": 3, "re": 0.2, "im": 0}]}"#,
    )
    .unwrap();
    let f = f.scaled_to_condition(1.0).unwrap();
    let r = verify_lipschitz_j(f.as_fn(), 1.0, &SampleSpec::new(12, 20_000));
    assert!(r.holds(), "{}", r.extremum);
}

#[test]
fn audit_then_compose() {
    let map = BuiltinMap::parse("mobius:0.2,0.1,0.4").unwrap();
    let f = map.planar_map();
    let grid = GridSpec::new(61, 1e-2).unwrap();
    let q = map.nominal_params(&grid);
    let audit = thm24_audit(&f, &q, &SampleSpec::new(3, 5_000), &grid).unwrap();
    assert!(audit.sweep.holds());
    assert!(audit.sweep.extremum <= audit.lipschitz_constant);
    let composed = composition_property_check(&f, &q, Complex64::new(0.5, 0.5), &grid).unwrap();
    assert!(composed.holds());
    assert!(composition_property_check(&f, &q, Complex64::new(1.5, 0.0), &grid).is_err());
}

#[test]
fn nominal_radial_cubic_params() {
    let grid = GridSpec::new(21, 1e-2).unwrap();
    let q = BuiltinMap::RadialCubic.nominal_params(&grid);
    assert_eq!(q, QCParams::new(3.0, 0.0, 0.0, 8.0).unwrap());
}

#[test]
fn hypergeometric_through_public_params() {
    let p = HypParams::new(0.5, 0.5, 1.0, 0.3).unwrap().with_tol(1e-15).unwrap();
    // 2F1(1/2, 1/2; 1; k²) = 2 K(k) / π
    let k2: f64 = 0.3;
    let agm = {
        let (mut a, mut b) = (1.0_f64, (1.0 - k2).sqrt());
        for _ in 0..30 {
            let next = ((a + b) / 2.0, (a * b).sqrt());
            a = next.0;
            b = next.1;
        }
        a
    };
    assert!((gauss_2f1(&p).unwrap() - 1.0 / agm).abs() < 1e-14);
}
