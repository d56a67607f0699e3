use ndarray::Array2;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedParam {
    pub name: String,
    pub shape: [usize; 2],
    pub data: Vec<f64>,
}

/// Ordered, named parameter matrices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Array2<f64>>,
}

impl ParamStore {
    pub fn push(&mut self, name: impl Into<String>, value: Array2<f64>) -> usize {
        self.names.push(name.into());
        self.values.push(value);
        self.values.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, id: usize) -> &Array2<f64> {
        &self.values[id]
    }

    pub fn get_mut(&mut self, id: usize) -> &mut Array2<f64> {
        &mut self.values[id]
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn count_scalars(&self) -> usize {
        self.values.iter().map(Array2::len).sum()
    }

    pub fn to_named(&self) -> Vec<NamedParam> {
        self.names
            .iter()
            .zip(&self.values)
            .map(|(name, v)| NamedParam {
                name: name.clone(),
                shape: [v.nrows(), v.ncols()],
                data: v.iter().copied().collect(),
            })
            .collect()
    }
}

/// Adaptive-moment optimiser with per-parameter step counters, so disjoint
/// parameter groups can be stepped independently.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
    t: Vec<i32>,
}

impl Adam {
    pub fn new(params: &ParamStore, lr: f64) -> Self {
        let zeros = |p: &Array2<f64>| Array2::zeros(p.raw_dim());
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: params.values.iter().map(zeros).collect(),
            v: params.values.iter().map(zeros).collect(),
            t: vec![0; params.len()],
        }
    }

    /// Applies one update to every parameter in `ids` that has a gradient.
    pub fn step(&mut self, params: &mut ParamStore, grads: &[Option<Array2<f64>>], ids: &[usize]) {
        for &id in ids {
            let Some(g) = &grads[id] else { continue };
            self.t[id] += 1;
            let t = self.t[id];
            let (b1, b2) = (self.beta1, self.beta2);
            let bc1 = 1.0 - b1.powi(t);
            let bc2 = 1.0 - b2.powi(t);
            let step = self.lr / bc1;
            let m = &mut self.m[id];
            let v = &mut self.v[id];
            let p = &mut params.values[id];
            ndarray::Zip::from(p)
                .and(m)
                .and(v)
                .and(g)
                .for_each(|p, m, v, &g| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= step * *m / ((*v / bc2).sqrt() + self.eps);
                });
        }
    }
}

/// Scales gradients in `ids` so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(grads: &mut [Option<Array2<f64>>], ids: &[usize], max_norm: f64) -> f64 {
    let norm = ids
        .iter()
        .filter_map(|&id| grads[id].as_ref())
        .map(|g| g.iter().map(|x| x * x).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    if max_norm > 0.0 && norm > max_norm {
        let s = max_norm / norm;
        for &id in ids {
            if let Some(g) = grads[id].as_mut() {
                g.mapv_inplace(|x| x * s);
            }
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut ps = ParamStore::default();
        let id = ps.push("w", array![[1.0, -1.0]]);
        let mut opt = Adam::new(&ps, 0.1);
        let grads = vec![Some(array![[2.0, -0.5]])];
        opt.step(&mut ps, &grads, &[id]);
        let w = ps.get(id);
        assert!((w[[0, 0]] - 0.9).abs() < 1e-6);
        assert!((w[[0, 1]] + 0.9).abs() < 1e-6);
    }

    #[test]
    fn clipping_bounds_norm() {
        let mut grads = vec![Some(array![[3.0, 4.0]]), None];
        let before = clip_grad_norm(&mut grads, &[0, 1], 1.0);
        assert!((before - 5.0).abs() < 1e-12);
        let g = grads[0].as_ref().unwrap();
        assert!((g[[0, 0]] - 0.6).abs() < 1e-12);
    }
}
