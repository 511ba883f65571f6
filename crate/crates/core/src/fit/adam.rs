use super::GradBuffer;
use crate::volume::Flut;

/// Adaptive-moment optimizer over FLUT entries that updates only entries
/// with a nonzero gradient block. Bias correction uses the global step.
#[derive(Clone, Debug)]
pub struct SparseAdam {
    pub coeff_lr: f32,
    pub density_lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    m: Vec<f32>,
    v: Vec<f32>,
    step: u64,
}

impl SparseAdam {
    pub fn new(len: usize, stride: usize, coeff_lr: f32, density_lr: f32, beta1: f32, beta2: f32, eps: f32) -> Self {
        Self {
            coeff_lr,
            density_lr,
            beta1,
            beta2,
            eps,
            m: vec![0.0; len * stride],
            v: vec![0.0; len * stride],
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update and clamps updated densities to be non-negative.
    pub fn step(&mut self, flut: &mut Flut<f32>, grad: &GradBuffer<f32>) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - (self.beta1 as f64).powi(t);
        let bc2 = 1.0 - (self.beta2 as f64).powi(t);
        let s = flut.stride();
        for &i in grad.touched() {
            let g = grad.entry(i);
            if g.iter().all(|v| *v == 0.0) {
                continue;
            }
            let base = i as usize * s;
            let entry = flut.entry_mut(i as usize);
            for k in 0..s {
                let m = &mut self.m[base + k];
                let v = &mut self.v[base + k];
                *m = self.beta1 * *m + (1.0 - self.beta1) * g[k];
                *v = self.beta2 * *v + (1.0 - self.beta2) * g[k] * g[k];
                let m_hat = *m as f64 / bc1;
                let v_hat = *v as f64 / bc2;
                let lr = if k + 1 == s { self.density_lr } else { self.coeff_lr };
                entry[k] -= (lr as f64 * m_hat / (v_hat.sqrt() + self.eps as f64)) as f32;
            }
            if !(entry[s - 1] >= 0.0) {
                entry[s - 1] = 0.0;
            }
        }
    }
}
