use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub(crate) fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random `outputs x inputs` matrix with orthonormal rows (or columns when
/// `outputs > inputs`), scaled by `gain`, returned input-major.
pub(crate) fn orthogonal(
    inputs: usize,
    outputs: usize,
    gain: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    // Orthonormalize the vectors along the shorter dimension.
    let (count, len) = if outputs <= inputs {
        (outputs, inputs)
    } else {
        (inputs, outputs)
    };
    let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(count);
    while vecs.len() < count {
        let mut v: Vec<f64> = (0..len).map(|_| StandardNormal.sample(rng)).collect();
        // Two passes of modified Gram-Schmidt keeps the basis orthogonal to
        // rounding error.
        for _ in 0..2 {
            for u in &vecs {
                let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-10 {
            continue;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        vecs.push(v);
    }
    let mut w = vec![0.0; inputs * outputs];
    for (k, v) in vecs.iter().enumerate() {
        for (j, &val) in v.iter().enumerate() {
            // Row k of A (outputs <= inputs): A[k][j]; otherwise column k: A[j][k].
            let (o, i) = if outputs <= inputs { (k, j) } else { (j, k) };
            w[i * outputs + o] = gain * val;
        }
    }
    w
}
