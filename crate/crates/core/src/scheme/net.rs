//! Fully connected networks and ResNets with a flat parameter layout
//! (A₁ row-major, b₁, A₂, b₂, …, A_{L+1}, b_{L+1}).

use serde::{Deserialize, Serialize};

use super::KinkContact;
use crate::activation::Activation;
use crate::error::{dim, invalid, Result};
use crate::rng::{self, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Network {
    pub input_dim: usize,
    pub output_dim: usize,
    /// Hidden widths w₁..w_L.
    pub widths: Vec<usize>,
    /// One activation per hidden layer.
    pub activations: Vec<Activation>,
    /// Skip matrices E_i (w_i × w_{i−1}), present only for ResNets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skips: Option<Vec<Vec<Vec<f64>>>>,
}

/// Per-sample forward values: pre-activations u_i and layer outputs z_i
/// (z_0 = x, z_{L+1} = output).
#[derive(Clone, Debug)]
pub struct Trace {
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
}

impl Network {
    pub fn feed_forward(input_dim: usize, output_dim: usize, widths: Vec<usize>, activations: Vec<Activation>) -> Result<Self> {
        let net = Self { input_dim, output_dim, widths, activations, skips: None };
        net.validate()?;
        Ok(net)
    }

    pub fn res_net(
        input_dim: usize,
        output_dim: usize,
        widths: Vec<usize>,
        activations: Vec<Activation>,
        skips: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let net = Self { input_dim, output_dim, widths, activations, skips: Some(skips) };
        net.validate()?;
        Ok(net)
    }

    /// Same activation in every hidden layer.
    pub fn uniform(input_dim: usize, output_dim: usize, widths: &[usize], act: Activation) -> Result<Self> {
        Self::feed_forward(input_dim, output_dim, widths.to_vec(), vec![act; widths.len()])
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(invalid("network input and output dimensions must be positive"));
        }
        if self.widths.is_empty() {
            return Err(invalid("network needs at least one hidden layer"));
        }
        if self.widths.contains(&0) {
            return Err(invalid("hidden widths must be positive"));
        }
        if self.activations.len() != self.widths.len() {
            return Err(dim(format!("{} activations for {} hidden layers", self.activations.len(), self.widths.len())));
        }
        for a in &self.activations {
            a.validate()?;
        }
        if let Some(skips) = &self.skips {
            if skips.len() != self.depth() {
                return Err(dim("one skip matrix per hidden layer is required"));
            }
            for (i, e) in skips.iter().enumerate() {
                let (rows, cols) = (self.width(i + 1), self.width(i));
                if e.len() != rows || e.iter().any(|r| r.len() != cols) {
                    return Err(dim(format!("skip matrix {} must be {rows}x{cols}", i + 1)));
                }
            }
        }
        Ok(())
    }

    /// Number of hidden layers L.
    pub fn depth(&self) -> usize {
        self.widths.len()
    }

    /// w_i with w_0 = d_x and w_{L+1} = d_y.
    pub fn width(&self, i: usize) -> usize {
        if i == 0 {
            self.input_dim
        } else if i <= self.depth() {
            self.widths[i - 1]
        } else {
            self.output_dim
        }
    }

    pub fn is_resnet(&self) -> bool {
        self.skips.is_some()
    }

    pub fn param_count(&self) -> usize {
        (1..=self.depth() + 1).map(|i| self.width(i) * (self.width(i - 1) + 1)).sum()
    }

    /// Offset of A_i (1-based layer index).
    pub fn offset_a(&self, i: usize) -> usize {
        (1..i).map(|j| self.width(j) * (self.width(j - 1) + 1)).sum()
    }

    /// Offset of b_i.
    pub fn offset_b(&self, i: usize) -> usize {
        self.offset_a(i) + self.width(i) * self.width(i - 1)
    }

    pub fn a_index(&self, i: usize, row: usize, col: usize) -> usize {
        self.offset_a(i) + row * self.width(i - 1) + col
    }

    pub fn b_index(&self, i: usize, row: usize) -> usize {
        self.offset_b(i) + row
    }

    /// Structured view: (A_i as rows, b_i) for i = 1..=L+1.
    pub fn unpack(&self, alpha: &[f64]) -> Vec<(Vec<Vec<f64>>, Vec<f64>)> {
        (1..=self.depth() + 1)
            .map(|i| {
                let (r, c) = (self.width(i), self.width(i - 1));
                let a0 = self.offset_a(i);
                let a = (0..r).map(|row| alpha[a0 + row * c..a0 + (row + 1) * c].to_vec()).collect();
                let b0 = self.offset_b(i);
                (a, alpha[b0..b0 + r].to_vec())
            })
            .collect()
    }

    pub fn pack(&self, layers: &[(Vec<Vec<f64>>, Vec<f64>)]) -> Result<Vec<f64>> {
        if layers.len() != self.depth() + 1 {
            return Err(dim("wrong number of layers"));
        }
        let mut out = Vec::with_capacity(self.param_count());
        for (i, (a, b)) in layers.iter().enumerate() {
            let (r, c) = (self.width(i + 1), self.width(i));
            if a.len() != r || a.iter().any(|row| row.len() != c) || b.len() != r {
                return Err(dim(format!("layer {} must be {r}x{c} with {r} biases", i + 1)));
            }
            for row in a {
                out.extend_from_slice(row);
            }
            out.extend_from_slice(b);
        }
        Ok(out)
    }

    fn skip(&self, i: usize) -> Option<&Vec<Vec<f64>>> {
        self.skips.as_ref().map(|s| &s[i - 1])
    }

    fn affine(&self, alpha: &[f64], i: usize, z: &[f64]) -> Vec<f64> {
        let (r, c) = (self.width(i), self.width(i - 1));
        let a0 = self.offset_a(i);
        let b0 = self.offset_b(i);
        (0..r)
            .map(|row| {
                let w = &alpha[a0 + row * c..a0 + (row + 1) * c];
                w.iter().zip(z).map(|(p, q)| p * q).sum::<f64>() + alpha[b0 + row]
            })
            .collect()
    }

    fn affine_t(&self, alpha: &[f64], i: usize, v: &[f64]) -> Vec<f64> {
        let (r, c) = (self.width(i), self.width(i - 1));
        let a0 = self.offset_a(i);
        let mut out = vec![0.0; c];
        for (row, vr) in v.iter().enumerate().take(r) {
            let w = &alpha[a0 + row * c..a0 + (row + 1) * c];
            for (o, wv) in out.iter_mut().zip(w) {
                *o += wv * vr;
            }
        }
        out
    }

    fn linear(&self, alpha: &[f64], i: usize, z: &[f64]) -> Vec<f64> {
        let (r, c) = (self.width(i), self.width(i - 1));
        let a0 = self.offset_a(i);
        (0..r)
            .map(|row| alpha[a0 + row * c..a0 + (row + 1) * c].iter().zip(z).map(|(p, q)| p * q).sum())
            .collect()
    }

    fn add_skip(&self, i: usize, z_prev: &[f64], out: &mut [f64]) {
        if let Some(e) = self.skip(i) {
            for (o, row) in out.iter_mut().zip(e) {
                *o += row.iter().zip(z_prev).map(|(p, q)| p * q).sum::<f64>();
            }
        }
    }

    fn add_skip_t(&self, i: usize, v: &[f64], out: &mut [f64]) {
        if let Some(e) = self.skip(i) {
            for (row, vr) in e.iter().zip(v) {
                for (o, ev) in out.iter_mut().zip(row) {
                    *o += ev * vr;
                }
            }
        }
    }

    pub fn trace(&self, alpha: &[f64], x: &[f64]) -> Trace {
        let l = self.depth();
        let mut pre = Vec::with_capacity(l + 1);
        let mut post = Vec::with_capacity(l + 2);
        post.push(x.to_vec());
        for i in 1..=l {
            let u = self.affine(alpha, i, &post[i - 1]);
            let act = self.activations[i - 1];
            let mut z: Vec<f64> = u.iter().map(|&s| act.eval(s)).collect();
            self.add_skip(i, &post[i - 1], &mut z);
            pre.push(u);
            post.push(z);
        }
        let out = self.affine(alpha, l + 1, &post[l]);
        pre.push(out.clone());
        post.push(out);
        Trace { pre, post }
    }

    pub fn eval(&self, alpha: &[f64], x: &[f64]) -> Vec<f64> {
        let mut z = x.to_vec();
        for i in 1..=self.depth() {
            let act = self.activations[i - 1];
            let mut next: Vec<f64> = self.affine(alpha, i, &z).into_iter().map(|s| act.eval(s)).collect();
            self.add_skip(i, &z, &mut next);
            z = next;
        }
        self.affine(alpha, self.depth() + 1, &z)
    }

    /// Adds ∂/∂α of ⟨dout, ψ(α, x)⟩ into `grad`; records kink contacts.
    pub fn backprop(
        &self,
        alpha: &[f64],
        trace: &Trace,
        dout: &[f64],
        grad: &mut [f64],
        sample: usize,
        kink_tol: f64,
        kinks: &mut Vec<KinkContact>,
    ) {
        let l = self.depth();
        let mut delta = dout.to_vec();
        for i in (1..=l + 1).rev() {
            let (r, c) = (self.width(i), self.width(i - 1));
            let z_prev = &trace.post[i - 1];
            let du: Vec<f64> = if i == l + 1 {
                delta.clone()
            } else {
                let act = self.activations[i - 1];
                trace.pre[i - 1]
                    .iter()
                    .enumerate()
                    .zip(&delta)
                    .map(|((unit, &u), &d)| {
                        if act.near_kink(u, kink_tol) {
                            kinks.push(KinkContact { sample, layer: i, unit, preactivation: u });
                        }
                        d * act.deriv(u)
                    })
                    .collect()
            };
            let a0 = self.offset_a(i);
            let b0 = self.offset_b(i);
            for row in 0..r {
                let g = du[row];
                if g != 0.0 {
                    for col in 0..c {
                        grad[a0 + row * c + col] += g * z_prev[col];
                    }
                }
                grad[b0 + row] += g;
            }
            if i > 1 {
                let mut next = self.affine_t(alpha, i, &du);
                if i <= l {
                    self.add_skip_t(i, &delta, &mut next);
                }
                delta = next;
            }
        }
    }

    /// First and second directional derivatives of ψ(·, x) at α along h.
    pub fn directional(&self, alpha: &[f64], h: &[f64], x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let l = self.depth();
        let mut z = x.to_vec();
        let mut z1 = vec![0.0; x.len()];
        let mut z2 = vec![0.0; x.len()];
        for i in 1..=l + 1 {
            let u = self.affine(alpha, i, &z);
            // u' = A'z + b' + A z'
            let da = self.affine(h, i, &z);
            let az1 = self.linear(alpha, i, &z1);
            let u1: Vec<f64> = da.iter().zip(&az1).map(|(p, q)| p + q).collect();
            // u'' = 2A'z' + A z''
            let dz1 = self.linear(h, i, &z1);
            let az2 = self.linear(alpha, i, &z2);
            let u2: Vec<f64> = dz1.iter().zip(&az2).map(|(p, q)| 2.0 * p + q).collect();
            if i == l + 1 {
                return (u1, u2);
            }
            let act = self.activations[i - 1];
            let mut nz: Vec<f64> = u.iter().map(|&s| act.eval(s)).collect();
            let mut nz1: Vec<f64> = u.iter().zip(&u1).map(|(&s, &d)| act.deriv(s) * d).collect();
            let mut nz2: Vec<f64> = u
                .iter()
                .zip(&u1)
                .zip(&u2)
                .map(|((&s, &d1), &d2)| act.second(s) * d1 * d1 + act.deriv(s) * d2)
                .collect();
            self.add_skip(i, &z, &mut nz);
            self.add_skip(i, &z1, &mut nz1);
            self.add_skip(i, &z2, &mut nz2);
            z = nz;
            z1 = nz1;
            z2 = nz2;
        }
        unreachable!("loop returns at the top layer")
    }

    /// Gaussian parameters with 1/√fan-in scaling.
    pub fn random_params(&self, rng: &mut Rng, scale: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for i in 1..=self.depth() + 1 {
            let (r, c) = (self.width(i), self.width(i - 1));
            let s = scale / (c as f64).sqrt();
            out.extend((0..r * c).map(|_| s * rng::gaussian(rng)));
            out.extend((0..r).map(|_| scale * rng::gaussian(rng)));
        }
        out
    }

    /// Range of flat indices occupied by (A_{L+1}, b_{L+1}).
    pub fn top_layer_range(&self) -> std::ops::Range<usize> {
        self.offset_a(self.depth() + 1)..self.param_count()
    }

    /// Range of flat indices occupied by A₁.
    pub fn first_weight_range(&self) -> std::ops::Range<usize> {
        0..self.offset_b(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn parameter_count_and_layout() {
        let net = Network::uniform(3, 2, &[4, 5], Activation::Tanh).unwrap();
        assert_eq!(net.param_count(), 4 * 4 + 5 * 5 + 2 * 6);
        assert_eq!(net.offset_b(1), 12);
        assert_eq!(net.offset_a(2), 16);
        assert_eq!(net.offset_a(3), 41);
        let mut rng = seeded(2);
        let alpha = net.random_params(&mut rng, 1.0);
        let back = net.pack(&net.unpack(&alpha)).unwrap();
        assert_eq!(alpha, back);
    }

    #[test]
    fn forward_matches_hand_computation() {
        // One hidden ReLU layer, widths 1 → 2 → 1.
        let net = Network::uniform(1, 1, &[2], Activation::Relu).unwrap();
        let alpha = [1.0, -1.0, 0.0, 0.5, 2.0, 3.0, 0.25];
        // u = (x, -x + 0.5); z = relu(u); out = 2 z1 + 3 z2 + 0.25.
        let out = net.eval(&alpha, &[0.2]);
        assert!((out[0] - (2.0 * 0.2 + 3.0 * 0.3 + 0.25)).abs() < 1e-15);
    }

    #[test]
    fn resnet_skip_is_added() {
        let net = Network::res_net(1, 1, vec![1], vec![Activation::Relu], vec![vec![vec![2.0]]]).unwrap();
        // z1 = 2x + relu(x), out = z1.
        let alpha = [1.0, 0.0, 1.0, 0.0];
        assert_eq!(net.eval(&alpha, &[-1.0])[0], -2.0);
        assert_eq!(net.eval(&alpha, &[1.0])[0], 3.0);
        assert!(Network::res_net(1, 1, vec![2], vec![Activation::Relu], vec![vec![vec![2.0]]]).is_err());
    }

    #[test]
    fn directional_matches_differences() {
        let net = Network::res_net(
            2,
            1,
            vec![3, 2],
            vec![Activation::Tanh, Activation::Sigmoid],
            vec![vec![vec![0.5, 0.1], vec![0.0, 1.0], vec![0.2, 0.2]], vec![vec![1.0, 0.0, 0.3], vec![0.0, 0.4, 0.0]]],
        )
        .unwrap();
        let mut rng = seeded(9);
        let a = net.random_params(&mut rng, 1.0);
        let h = net.random_params(&mut rng, 1.0);
        let x = [0.3, -0.7];
        let (d1, d2) = net.directional(&a, &h, &x);
        let t = 1e-4;
        let at = |s: f64| {
            let p: Vec<f64> = a.iter().zip(&h).map(|(p, q)| p + s * q).collect();
            net.eval(&p, &x)[0]
        };
        let fd1 = (at(t) - at(-t)) / (2.0 * t);
        let fd2 = (at(t) - 2.0 * at(0.0) + at(-t)) / (t * t);
        assert!((d1[0] - fd1).abs() < 1e-7);
        assert!((d2[0] - fd2).abs() < 1e-5);
    }
}
