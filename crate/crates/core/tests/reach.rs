use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zpc::datadriven::{build_model_set, stack_data, NoiseSpec};
use zpc::harness::{collect_data, NoiseRealization, SystemModel};
use zpc::reach::{reach_horizon, CoefficientBound, FactoredReach};
use zpc::setalg::Zonotope;

fn small() -> (SystemModel, NoiseSpec, zpc::datadriven::ModelSet) {
    let a = DMatrix::from_row_slice(2, 2, &[0.7, 0.2, -0.1, 0.8]);
    let b = DMatrix::from_row_slice(2, 1, &[1.0, 0.5]);
    let sys = SystemModel::new(a, b).unwrap();
    let noise = NoiseSpec::with_derived_zav(
        NoiseSpec::uniform_generator(2, 0.02),
        NoiseSpec::uniform_generator(2, 0.01),
        &sys.a,
    )
    .unwrap();
    let u = Zonotope::new(DVector::zeros(1), DMatrix::from_element(1, 1, 1.5)).unwrap();
    let data = collect_data(&sys, &noise, 6, &u, 2).unwrap();
    let ms = build_model_set(&stack_data(&data.data).unwrap(), &noise).unwrap();
    (sys, noise, ms)
}

#[test]
fn factored_hulls_enclose_concrete_hulls() {
    let (_, noise, ms) = small();
    let y0 = DVector::from_vec(vec![0.5, -0.2]);
    let horizon = 4;
    let fr = FactoredReach::new(&y0, horizon, &ms, &noise).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5 {
        let u = DVector::from_fn(horizon, |_, _| rng.random_range(-1.0..1.0));
        let inputs: Vec<Zonotope> = (0..horizon)
            .map(|k| Zonotope::singleton(DVector::from_element(1, u[k])))
            .collect();
        let concrete = reach_horizon(&y0, &inputs, &ms, &noise).unwrap().hulls();
        let exact = fr.hulls(&u, &fr.sigma(&u, &CoefficientBound::Exact.matrix(&ms)));
        let svd = fr.hulls(&u, &fr.sigma(&u, &CoefficientBound::Svd.matrix(&ms)));
        for k in 0..horizon {
            assert!(concrete[k + 1].is_subset_of(&exact[k], 1e-9), "step {k}");
            assert!(exact[k].is_subset_of(&svd[k], 1e-9), "step {k}");
        }
    }
}

#[test]
fn concrete_sets_contain_simulated_outputs() {
    let (sys, noise, ms) = small();
    let x0 = DVector::from_vec(vec![1.0, 0.0]);
    let horizon = 4;
    let u: Vec<f64> = vec![0.5, -0.3, 0.8, 0.0];
    let inputs: Vec<Zonotope> = u
        .iter()
        .map(|&v| Zonotope::singleton(DVector::from_element(1, v)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let real = NoiseRealization::sample(&noise.zw, &noise.zv, horizon, &mut rng);
        let seq = reach_horizon(&(&x0 + real.v(0)), &inputs, &ms, &noise).unwrap();
        let mut x = x0.clone();
        for k in 0..horizon {
            x = &sys.a * &x + &sys.b * u[k] + real.w(k);
            assert!(seq.sets[k + 1].contains(&(&x + real.v(k + 1))), "step {k}");
        }
    }
}
