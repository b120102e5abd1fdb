use ado3d_web::{kernel, profile, spectrum};

#[test]
fn profile_engines_agree_at_linear_scattering() {
    let a = profile("ado-iso", 0.01, 10.0, 0.9, 1, 9, 5.0, 1.0, 6.0, 6).unwrap();
    let b = profile("analytic", 0.01, 10.0, 0.9, 1, 9, 5.0, 1.0, 6.0, 6).unwrap();
    assert_eq!(a.len(), 6);
    for (x, y) in a.iter().zip(&b) {
        assert!((x / y - 1.0).abs() < 1e-6, "{x} vs {y}");
    }
}

#[test]
fn profile_rejects_bad_input() {
    let err = profile("analytic", 0.01, 10.0, 0.9, 9, 9, 5.0, 1.0, 6.0, 6).unwrap_err();
    assert!(err.contains("lmax <= 1"), "{err}");
    assert!(profile("ado-iso", 0.01, 10.0, 0.9, 1, 9, 5.0, 6.0, 1.0, 6).is_err());
    assert!(profile("ado-iso", -1.0, 10.0, 0.9, 1, 9, 5.0, 1.0, 6.0, 6).is_err());
    assert!(profile("warp", 0.01, 10.0, 0.9, 1, 9, 5.0, 1.0, 6.0, 6).is_err());
}

#[test]
fn spectrum_is_positive_and_descending() {
    let nu = spectrum(0.01, 10.0, 0.9, 9, 9, 0).unwrap();
    assert_eq!(nu.len(), 9);
    assert!(nu.windows(2).all(|w| w[0] > w[1]) && nu[8] > 0.0, "{nu:?}");
}

#[test]
fn kernels_have_the_requested_length() {
    let iso = kernel("iso", 0.01, 10.0, 0.9, 9, 9, 1.0, 2.0, 50).unwrap();
    assert_eq!(iso.len(), 50);
    assert!(iso.iter().all(|v| v.is_finite()));
    let pencil = kernel("pencil", 0.01, 10.0, 0.9, 1, 9, 1.0, 2.0, 50).unwrap();
    assert_eq!(pencil.len(), 50);
    assert!(kernel("beam", 0.01, 10.0, 0.9, 1, 9, 1.0, 2.0, 50).is_err());
}
