use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zpc::datadriven::{build_model_set, load_manifest, save_manifest, stack_data, NoiseSpec};
use zpc::harness::{collect_data, SystemModel};
use zpc::linalg::hcat;
use zpc::setalg::Zonotope;

fn random_instance(rng: &mut ChaCha8Rng) -> (SystemModel, NoiseSpec, Zonotope, usize) {
    let n = rng.random_range(1..=3);
    let m = rng.random_range(1..=2);
    let mut a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let rho = a
        .complex_eigenvalues()
        .iter()
        .map(|e| e.norm())
        .fold(0.0, f64::max);
    if rho > 0.95 {
        a *= 0.9 / rho;
    }
    let b = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
    let sys = SystemModel::new(a, b).unwrap();
    let gen = |rng: &mut ChaCha8Rng| {
        let g = rng.random_range(0..=n);
        Zonotope::new(
            DVector::zeros(n),
            DMatrix::from_fn(n, g, |_, _| rng.random_range(-0.05..0.05)),
        )
        .unwrap()
    };
    let (w, v) = (gen(rng), gen(rng));
    let noise = NoiseSpec::with_derived_zav(w, v, &sys.a).unwrap();
    let u = Zonotope::new(DVector::zeros(m), DMatrix::identity(m, m) * 2.0).unwrap();
    let t = rng.random_range(3 * (n + m)..6 * (n + m));
    (sys, noise, u, t)
}

#[test]
fn model_set_contains_the_true_system() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in 0..100 {
        let (sys, noise, u, t) = random_instance(&mut rng);
        let data = collect_data(&sys, &noise, t, &u, i).unwrap();
        let ms = build_model_set(&stack_data(&data.data).unwrap(), &noise).unwrap();
        let truth = hcat(sys.state_dim(), &[&sys.a, &sys.b]);
        assert!(ms.contains(&truth), "instance {i}");
        assert!(ms.msigma().contains(&truth), "instance {i}, explicit form");
    }
}

#[test]
fn manifest_round_trip_preserves_the_model_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (sys, noise, u, t) = random_instance(&mut rng);
    let data = collect_data(&sys, &noise, t, &u, 5).unwrap().data;
    let dir = tempfile::tempdir().unwrap();
    let path = save_manifest(dir.path(), &data, &noise).unwrap();
    let (back, back_noise) = load_manifest(&path).unwrap();
    assert_eq!(back_noise, noise);
    let a = build_model_set(&stack_data(&data).unwrap(), &noise).unwrap();
    let b = build_model_set(&stack_data(&back).unwrap(), &back_noise).unwrap();
    assert_eq!(a.center(), b.center());
}

#[test]
fn too_few_samples_are_rejected() {
    let sys = SystemModel::benchmark();
    let noise = NoiseSpec::zero(5);
    let u = Zonotope::new(
        DVector::from_element(1, 7.0),
        DMatrix::from_element(1, 1, 19.0),
    )
    .unwrap();
    let data = collect_data(&sys, &noise, 4, &u, 0).unwrap();
    assert!(build_model_set(&stack_data(&data.data).unwrap(), &noise).is_err());
}
