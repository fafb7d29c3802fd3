// debug binary: examine worst grad-check coordinate
use lsw_core::corpus::{Batch, Label, TokenSequence, BOS, EOS};
use lsw_core::lstm::{tiny_config, GradTask, HeadKind, ModelParams};
use lsw_core::lm::{lm_batch_loss, lm_batch_step};
use lsw_core::math::Rng;

fn main() {
    let config = tiny_config();
    let mut rng = Rng::sub(17, "grad-check-batch");
    let lens = [4usize, 6, 3];
    let seqs: Vec<TokenSequence> = lens.iter().map(|&len| {
        let mut ids = vec![BOS];
        for _ in 0..len { ids.push(4 + rng.below(config.vocab_size - 4) as u32); }
        ids.push(EOS);
        TokenSequence::new(ids, None)
    }).collect();
    let batch = Batch::from_sequences(&seqs.iter().collect::<Vec<_>>());
    let mut params = ModelParams::init(&config, HeadKind::Lm, &mut Rng::sub(17, "grad-check-init"));

    params.zero_grads();
    lm_batch_step(&mut params, &config, &batch, None).unwrap();
    let analytic: Vec<(String, Vec<f64>)> = params.blocks().iter().map(|(n, b)| (n.clone(), b.grad.data().to_vec())).collect();
    params.zero_grads();

    let mut worst = (0.0f64, String::new(), 0usize, 0.0, 0.0);
    for (bi, (name, grads)) in analytic.iter().enumerate() {
        for i in 0..grads.len() {
            for &eps in &[1e-5f64] {
                let orig = params.blocks_mut()[bi].1.value.data()[i];
                params.blocks_mut()[bi].1.value.data_mut()[i] = orig + eps;
                let plus = lm_batch_loss(&params, &config, &batch).unwrap().0;
                params.blocks_mut()[bi].1.value.data_mut()[i] = orig - eps;
                let minus = lm_batch_loss(&params, &config, &batch).unwrap().0;
                params.blocks_mut()[bi].1.value.data_mut()[i] = orig;
                let numeric = (plus - minus) / (2.0 * eps);
                let a = grads[i];
                let rel = (a - numeric).abs() / (1e-8f64).max(a.abs() + numeric.abs());
                if rel > worst.0 { worst = (rel, name.clone(), i, a, numeric); }
            }
        }
    }
    println!("worst rel={:.3e} block={} idx={} analytic={:.6e} numeric={:.6e}", worst.0, worst.1, worst.2, worst.3, worst.4);
    // re-probe worst coordinate at several eps
    let (_, name, idx, a, _) = worst.clone();
    let bi = analytic.iter().position(|(n, _)| *n == name).unwrap();
    for &eps in &[1e-6f64, 1e-5, 1e-4, 1e-3] {
        let orig = params.blocks_mut()[bi].1.value.data()[idx];
        params.blocks_mut()[bi].1.value.data_mut()[idx] = orig + eps;
        let plus = lm_batch_loss(&params, &config, &batch).unwrap().0;
        params.blocks_mut()[bi].1.value.data_mut()[idx] = orig - eps;
        let minus = lm_batch_loss(&params, &config, &batch).unwrap().0;
        params.blocks_mut()[bi].1.value.data_mut()[idx] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        println!("eps={:.0e}: numeric={:.9e} analytic={:.9e} diff={:.3e}", eps, numeric, a, (numeric - a).abs());
    }
}
