use super::{Gradients, NetError, PolicyParameters};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 2.5e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update over every tensor.
pub fn adam_step(
    params: &mut PolicyParameters,
    grads: &Gradients,
    cfg: AdamConfig,
) -> Result<(), NetError> {
    if grads.tensors.len() != params.tensors.len()
        || grads
            .tensors
            .iter()
            .zip(&params.tensors)
            .any(|(g, p)| g.len() != p.len())
    {
        return Err(NetError::Shape(
            "gradient tensors do not match parameter tensors".into(),
        ));
    }
    params.step += 1;
    let t = params.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for ti in 0..params.tensors.len() {
        let g = &grads.tensors[ti];
        let m = &mut params.moment1[ti];
        let v = &mut params.moment2[ti];
        let p = &mut params.tensors[ti];
        for k in 0..p.len() {
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
            let m_hat = m[k] / c1;
            let v_hat = v[k] / c2;
            p[k] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
    Ok(())
}
