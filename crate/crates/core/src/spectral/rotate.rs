use super::SequenceBlock;

/// Dyadic per-channel shifts Δ_i = 2^⌊i·log₂(T)/d⌋, channels indexed from 0.
pub fn rotation_shifts(steps: usize, channels: usize) -> Vec<usize> {
    let log_t = (steps as f64).log2();
    (0..channels)
        .map(|i| {
            let exponent = (i as f64 * log_t / channels as f64).floor() as u32;
            1usize << exponent
        })
        .collect()
}

/// Cyclically rolls each channel forward in time by its dyadic shift:
/// the value at step t lands at step (t + Δ_i) mod T.
pub fn rotate_block(x: &SequenceBlock) -> SequenceBlock {
    roll(x, true)
}

/// Undoes [`rotate_block`].
pub fn rotate_block_inverse(x: &SequenceBlock) -> SequenceBlock {
    roll(x, false)
}

fn roll(x: &SequenceBlock, forward: bool) -> SequenceBlock {
    let steps = x.steps();
    let mut out = SequenceBlock::zeros(steps, x.channels());
    if steps == 0 {
        return out;
    }
    for (c, shift) in rotation_shifts(steps, x.channels()).into_iter().enumerate() {
        let shift = shift % steps;
        for t in 0..steps {
            let dest = if forward {
                (t + shift) % steps
            } else {
                (t + steps - shift) % steps
            };
            out.set(dest, c, x.get(t, c));
        }
    }
    out
}
