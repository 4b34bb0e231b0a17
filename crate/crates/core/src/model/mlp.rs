//! The edge-logit network: `tanh` hidden layers and a linear scalar output.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Initial parameters are drawn uniformly from `[-INIT_RANGE, INIT_RANGE]`.
pub const INIT_RANGE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `outputs × inputs`.
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Layer inputs: the batch itself followed by each hidden activation.
    inputs: Vec<DMatrix<f64>>,
}

impl Mlp {
    /// A seeded network; `hidden` may be empty for a linear model.
    pub fn new(input_width: usize, hidden: &[usize], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut widths = vec![input_width];
        widths.extend_from_slice(hidden);
        widths.push(1);
        let layers = widths
            .windows(2)
            .map(|w| {
                let weights = DMatrix::from_fn(w[1], w[0], |_, _| rng.gen_range(-INIT_RANGE..=INIT_RANGE));
                let bias = DVector::from_fn(w[1], |_, _| rng.gen_range(-INIT_RANGE..=INIT_RANGE));
                Layer { weights, bias }
            })
            .collect();
        Self { layers }
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() || layers.last().unwrap().weights.nrows() != 1 {
            return Err(Error::DimensionMismatch("the last layer must have a single output".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.weights.nrows() {
                return Err(Error::DimensionMismatch(format!("layer {i}: bias length {} for {} outputs", l.bias.len(), l.weights.nrows())));
            }
            if i > 0 && layers[i - 1].weights.nrows() != l.weights.ncols() {
                return Err(Error::DimensionMismatch(format!("layer {i} expects {} inputs", l.weights.ncols())));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(|l| l.weights.nrows()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Parameters flattened layer by layer: weights in row-major order, then bias.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            for r in 0..l.weights.nrows() {
                out.extend(l.weights.row(r).iter());
            }
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "parameter vector length");
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            for r in 0..l.weights.nrows() {
                for c in 0..l.weights.ncols() {
                    l.weights[(r, c)] = it.next().unwrap();
                }
            }
            for b in l.bias.iter_mut() {
                *b = it.next().unwrap();
            }
        }
    }

    /// Scalar outputs for every row of `batch` (`rows × input_width`).
    pub fn forward(&self, batch: &DMatrix<f64>) -> Result<(Vec<f64>, ForwardCache)> {
        if batch.ncols() != self.input_width() {
            return Err(Error::DimensionMismatch(format!("network expects {} inputs, got {}", self.input_width(), batch.ncols())));
        }
        let mut inputs = vec![batch.clone()];
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut a = inputs.last().unwrap() * l.weights.transpose();
            for mut row in a.row_iter_mut() {
                row += l.bias.transpose();
            }
            if i == last {
                let z: Vec<f64> = a.column(0).iter().copied().collect();
                if z.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { stage: "edge logits" });
                }
                return Ok((z, ForwardCache { inputs }));
            }
            a.apply(|v| *v = v.tanh());
            inputs.push(a);
        }
        unreachable!()
    }

    /// Gradient of `Σ_r dz[r] · z[r]` with respect to the flattened parameters.
    pub fn backward(&self, cache: &ForwardCache, dz: &[f64]) -> Vec<f64> {
        let mut delta = DMatrix::from_column_slice(dz.len(), 1, dz);
        let mut grads: Vec<(DMatrix<f64>, DVector<f64>)> = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate().rev() {
            let input = &cache.inputs[i];
            let gw = delta.transpose() * input;
            let gb = DVector::from_iterator(delta.ncols(), delta.column_iter().map(|c| c.sum()));
            grads.push((gw, gb));
            if i > 0 {
                let mut d = &delta * &l.weights;
                d.zip_apply(input, |g, h| *g *= 1.0 - h * h);
                delta = d;
            }
        }
        grads.reverse();
        let mut out = Vec::with_capacity(self.param_count());
        for (gw, gb) in grads {
            for r in 0..gw.nrows() {
                out.extend(gw.row(r).iter());
            }
            out.extend(gb.iter());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_network_gives_zero_logits() {
        let mut mlp = Mlp::new(4, &[3], 1);
        mlp.set_params(&vec![0.0; mlp.param_count()]);
        let (z, _) = mlp.forward(&DMatrix::from_element(5, 4, 0.7)).unwrap();
        assert_eq!(z, vec![0.0; 5]);
    }

    #[test]
    fn hand_evaluated_single_hidden_unit() {
        // z = v · tanh(a·x + b) + c
        let mlp = Mlp::from_layers(vec![
            Layer { weights: DMatrix::from_row_slice(1, 2, &[0.5, -1.0]), bias: DVector::from_element(1, 0.25) },
            Layer { weights: DMatrix::from_row_slice(1, 1, &[2.0]), bias: DVector::from_element(1, -0.5) },
        ])
        .unwrap();
        let (z, _) = mlp.forward(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -1.0, 0.0])).unwrap();
        assert_eq!(z[0], 2.0 * (0.5f64 - 2.0 + 0.25).tanh() - 0.5);
        assert_eq!(z[1], 2.0 * (-0.5f64 + 0.25).tanh() - 0.5);
    }

    #[test]
    fn permuting_rows_permutes_outputs() {
        let mlp = Mlp::new(3, &[4, 4], 9);
        let x = DMatrix::from_row_slice(3, 3, &[0.1, 0.2, 0.3, -1.0, 0.5, 2.0, 0.0, 0.0, 1.0]);
        let swapped = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.1, 0.2, 0.3, -1.0, 0.5, 2.0]);
        let (a, _) = mlp.forward(&x).unwrap();
        let (b, _) = mlp.forward(&swapped).unwrap();
        assert_eq!(b, vec![a[2], a[0], a[1]]);
    }

    #[test]
    fn params_round_trip_and_init_range() {
        let mut mlp = Mlp::new(5, &[16, 16], 3);
        assert_eq!(mlp.param_count(), 5 * 16 + 16 + 16 * 16 + 16 + 16 + 1);
        let p = mlp.params();
        assert!(p.iter().all(|v| v.abs() <= INIT_RANGE));
        let before = mlp.clone();
        mlp.set_params(&p);
        assert_eq!(mlp, before);
        assert_eq!(Mlp::new(5, &[16, 16], 3), before);
        assert_ne!(Mlp::new(5, &[16, 16], 4), before);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut mlp = Mlp::new(3, &[4, 2], 5);
        let x = DMatrix::from_row_slice(2, 3, &[0.3, -0.7, 1.1, 2.0, 0.1, -0.4]);
        let dz = [0.7, -1.3];
        let (_, cache) = mlp.forward(&x).unwrap();
        let grad = mlp.backward(&cache, &dz);
        let p0 = mlp.params();
        let objective = |mlp: &Mlp| {
            let (z, _) = mlp.forward(&x).unwrap();
            z.iter().zip(&dz).map(|(a, b)| a * b).sum::<f64>()
        };
        for k in 0..p0.len() {
            let step = 1e-6;
            let mut p = p0.clone();
            p[k] += step;
            mlp.set_params(&p);
            let up = objective(&mlp);
            p[k] -= 2.0 * step;
            mlp.set_params(&p);
            let down = objective(&mlp);
            let fd = (up - down) / (2.0 * step);
            assert!((fd - grad[k]).abs() < 1e-8, "param {k}: {fd} vs {}", grad[k]);
        }
    }

    #[test]
    fn linear_model_has_closed_form_gradient() {
        let mlp = Mlp::new(2, &[], 0);
        let x = DMatrix::from_row_slice(1, 2, &[3.0, -2.0]);
        let (_, cache) = mlp.forward(&x).unwrap();
        assert_eq!(mlp.backward(&cache, &[1.5]), vec![4.5, -3.0, 1.5]);
    }
}
