//! Central finite differences against the analytic backward pass, over every
//! parameter entry of a small network.

use idriftnet_core::model::{init_parameters, ContextVector, ModelConfig, Network, ParameterSet};
use idriftnet_core::spectral::SequenceBlock;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PROBE: [f64; 2] = [0.7, -1.3];

fn objective(net: &Network, window: &SequenceBlock, ctx: &ContextVector, seed: Option<u64>) -> f64 {
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    let (out, _) = net.forward_trace(window, ctx, rng.as_mut()).unwrap();
    PROBE[0] * out[0] + PROBE[1] * out[1]
}

fn randomized(cfg: &ModelConfig) -> ParameterSet {
    let mut params = init_parameters(cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for t in params.tensors_mut() {
        if t.name.starts_with("head") || t.name.ends_with("bias") {
            t.data
                .iter_mut()
                .for_each(|v| *v = rng.gen_range(-0.5..0.5));
        }
        if t.name.ends_with("log_sigma") {
            t.data
                .iter_mut()
                .for_each(|v| *v = rng.gen_range(-1.5..0.0));
        }
    }
    params
}

fn check(cfg: ModelConfig, dropout_seed: Option<u64>) {
    let params = randomized(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let window = SequenceBlock::from_vec(
        cfg.window,
        cfg.features,
        (0..cfg.window * cfg.features)
            .map(|_| rng.gen::<f64>())
            .collect(),
    )
    .unwrap();
    let ctx = ContextVector(std::array::from_fn(|_| rng.gen::<f64>()));

    let net = Network::new(cfg.clone(), params.clone()).unwrap();
    let mut drop_rng = dropout_seed.map(ChaCha8Rng::seed_from_u64);
    let (_, trace) = net.forward_trace(&window, &ctx, drop_rng.as_mut()).unwrap();
    let mut acc = net.accumulator();
    net.backward(&trace, PROBE, &mut acc);
    let analytic = net.gradients(&acc);

    let h = 1e-5;
    for (ti, tensor) in params.tensors().iter().enumerate() {
        let mut diff2 = 0.0;
        let mut norm2 = 0.0;
        for k in 0..tensor.data.len() {
            let eval = |delta: f64| {
                let mut p = params.clone();
                p.tensors_mut()[ti].data[k] += delta;
                let net = Network::new(cfg.clone(), p).unwrap();
                objective(&net, &window, &ctx, dropout_seed)
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            let an = analytic.tensors()[ti].data[k];
            diff2 += (fd - an).powi(2);
            norm2 += fd.powi(2);
        }
        let rel = diff2.sqrt() / norm2.sqrt().max(1e-8);
        assert!(
            rel < 1e-4,
            "{}: relative error {rel:e} (|fd| = {:e})",
            tensor.name,
            norm2.sqrt()
        );
    }
}

fn small() -> ModelConfig {
    ModelConfig {
        hidden: 8,
        ..ModelConfig::default()
    }
}

#[test]
fn full_model_gradients_odd_window() {
    check(small(), None);
}

#[test]
fn full_model_gradients_even_window() {
    check(
        ModelConfig {
            window: 6,
            ..small()
        },
        None,
    );
}

#[test]
fn gradients_with_fixed_dropout_mask() {
    check(small(), Some(11));
}

#[test]
fn gradients_with_ablations() {
    check(
        ModelConfig {
            ablate_rotate: true,
            ablate_gabor: true,
            encoder_blocks: 1,
            decoder_blocks: 3,
            ..small()
        },
        None,
    );
}
