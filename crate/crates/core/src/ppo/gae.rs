use super::PpoError;

/// Generalized advantage estimates and value targets.
///
/// `values[t]` is `V(s_t)`; `bootstrap_value` stands in for `V(s_{T+1})`.
/// `dones[t]` marks that the episode ended at step `t`, which cuts both the
/// bootstrap and the `(γλ)` accumulation.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap_value: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>), PpoError> {
    let n = rewards.len();
    if values.len() != n || dones.len() != n {
        return Err(PpoError::LengthMismatch(format!(
            "rewards {n}, values {}, dones {}",
            values.len(),
            dones.len()
        )));
    }
    let mut adv = vec![0.0; n];
    let mut acc = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 < n {
            values[t + 1]
        } else {
            bootstrap_value
        };
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        acc = delta + gamma * lambda * live * acc;
        adv[t] = acc;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, returns))
}
