//! Bidirectional GRU encoder with backpropagation through time.
//!
//! Cell equations, with `h_0 = 0`:
//!
//! ```text
//! z_t = σ(W_z x_t + U_z h_{t−1} + b_z)
//! r_t = σ(W_r x_t + U_r h_{t−1} + b_r)
//! ñ_t = tanh(W_h x_t + U_h (r_t ⊙ h_{t−1}) + b_h)
//! h_t = (1 − z_t) ⊙ ñ_t + z_t ⊙ h_{t−1}
//! ```
//!
//! The forward direction reads `x_1..x_T`, the backward direction reads
//! `x_T..x_1`, and the encoder output is `[h_fwd_T ; h_bwd_T]` of length `2h`.

use serde::{Deserialize, Serialize};

use super::activation::sigmoid;
use super::linalg::{add_assign, matvec_acc, matvec_t_acc, outer_acc};
use super::FlatParams;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Parameters of one GRU direction. `w_*` are `hidden × input`, `u_*` are
/// `hidden × hidden`, all row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruCell {
    pub w_z: Vec<f64>,
    pub w_r: Vec<f64>,
    pub w_h: Vec<f64>,
    pub u_z: Vec<f64>,
    pub u_r: Vec<f64>,
    pub u_h: Vec<f64>,
    pub b_z: Vec<f64>,
    pub b_r: Vec<f64>,
    pub b_h: Vec<f64>,
}

impl GruCell {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let w = vec![0.0; hidden * input];
        let u = vec![0.0; hidden * hidden];
        let b = vec![0.0; hidden];
        Self {
            w_z: w.clone(),
            w_r: w.clone(),
            w_h: w,
            u_z: u.clone(),
            u_r: u.clone(),
            u_h: u,
            b_z: b.clone(),
            b_r: b.clone(),
            b_h: b,
        }
    }

    /// Input matrices draw from `±1/√input`, recurrent matrices and biases
    /// from `±1/√hidden`; fields are filled in flattening order.
    pub fn init(input: usize, hidden: usize, rng: &mut SplitMix64) -> Self {
        let mut cell = Self::zeros(input, hidden);
        let sw = 1.0 / (input as f64).sqrt();
        let su = 1.0 / (hidden as f64).sqrt();
        for (i, slice) in cell.slices_mut().into_iter().enumerate() {
            let s = if i < 3 { sw } else { su };
            for x in slice.iter_mut() {
                *x = rng.uniform(-s, s);
            }
        }
        cell
    }

    fn slices(&self) -> [&Vec<f64>; 9] {
        [
            &self.w_z, &self.w_r, &self.w_h, &self.u_z, &self.u_r, &self.u_h, &self.b_z,
            &self.b_r, &self.b_h,
        ]
    }

    fn slices_mut(&mut self) -> [&mut Vec<f64>; 9] {
        [
            &mut self.w_z,
            &mut self.w_r,
            &mut self.w_h,
            &mut self.u_z,
            &mut self.u_r,
            &mut self.u_h,
            &mut self.b_z,
            &mut self.b_r,
            &mut self.b_h,
        ]
    }

    fn check_shape(&self, input: usize, hidden: usize) -> Result<()> {
        let expected = [
            hidden * input,
            hidden * input,
            hidden * input,
            hidden * hidden,
            hidden * hidden,
            hidden * hidden,
            hidden,
            hidden,
            hidden,
        ];
        for (slice, want) in self.slices().iter().zip(expected) {
            if slice.len() != want {
                return Err(Error::DimensionMismatch {
                    expected: want,
                    found: slice.len(),
                    context: "GRU parameter block".into(),
                });
            }
            if slice.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("GRU parameters"));
            }
        }
        Ok(())
    }
}

/// Flattening order: `w_z, w_r, w_h, u_z, u_r, u_h, b_z, b_r, b_h`.
impl FlatParams for GruCell {
    fn num_params(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    fn flatten(&self) -> Vec<f64> {
        self.slices().iter().flat_map(|s| s.iter().copied()).collect()
    }

    fn assign(&mut self, flat: &[f64]) {
        let mut offset = 0;
        for slice in self.slices_mut() {
            let n = slice.len();
            slice.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
    }
}

/// Both directions of the bidirectional encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruParams {
    pub input: usize,
    pub hidden: usize,
    pub forward: GruCell,
    pub backward: GruCell,
}

impl GruParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            input,
            hidden,
            forward: GruCell::zeros(input, hidden),
            backward: GruCell::zeros(input, hidden),
        }
    }

    /// Forward direction first, then backward, each via [`GruCell::init`].
    pub fn init(input: usize, hidden: usize, rng: &mut SplitMix64) -> Self {
        let forward = GruCell::init(input, hidden, rng);
        let backward = GruCell::init(input, hidden, rng);
        Self {
            input,
            hidden,
            forward,
            backward,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input == 0 || self.hidden == 0 {
            return Err(Error::InvalidArgument("GRU sizes must be positive".into()));
        }
        self.forward.check_shape(self.input, self.hidden)?;
        self.backward.check_shape(self.input, self.hidden)
    }

    pub fn output_len(&self) -> usize {
        2 * self.hidden
    }
}

/// Flattening order: forward cell, then backward cell.
impl FlatParams for GruParams {
    fn num_params(&self) -> usize {
        self.forward.num_params() + self.backward.num_params()
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = self.forward.flatten();
        out.extend(self.backward.flatten());
        out
    }

    fn assign(&mut self, flat: &[f64]) {
        let n = self.forward.num_params();
        self.forward.assign(&flat[..n]);
        self.backward.assign(&flat[n..]);
    }
}

#[derive(Debug, Clone)]
struct StepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    n: Vec<f64>,
}

/// Intermediates of one [`bigru_forward`] call.
#[derive(Debug, Clone)]
pub struct BiGruCache {
    forward: Vec<StepCache>,
    backward: Vec<StepCache>,
}

fn cell_step(cell: &GruCell, x: &[f64], h_prev: &[f64]) -> StepCache {
    let h = h_prev.len();
    let mut z = cell.b_z.clone();
    matvec_acc(&mut z, &cell.w_z, x);
    matvec_acc(&mut z, &cell.u_z, h_prev);
    z.iter_mut().for_each(|v| *v = sigmoid(*v));

    let mut r = cell.b_r.clone();
    matvec_acc(&mut r, &cell.w_r, x);
    matvec_acc(&mut r, &cell.u_r, h_prev);
    r.iter_mut().for_each(|v| *v = sigmoid(*v));

    let rh: Vec<f64> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
    let mut n = cell.b_h.clone();
    matvec_acc(&mut n, &cell.w_h, x);
    matvec_acc(&mut n, &cell.u_h, &rh);
    n.iter_mut().for_each(|v| *v = v.tanh());

    debug_assert_eq!(n.len(), h);
    StepCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        z,
        r,
        n,
    }
}

fn step_output(step: &StepCache) -> Vec<f64> {
    step.z
        .iter()
        .zip(&step.n)
        .zip(&step.h_prev)
        .map(|((z, n), hp)| (1.0 - z) * n + z * hp)
        .collect()
}

fn run_direction<'a>(cell: &GruCell, hidden: usize, xs: impl Iterator<Item = &'a Vec<f64>>) -> (Vec<f64>, Vec<StepCache>) {
    let mut h = vec![0.0; hidden];
    let mut steps = Vec::new();
    for x in xs {
        let step = cell_step(cell, x, &h);
        h = step_output(&step);
        steps.push(step);
    }
    (h, steps)
}

/// Encodes `sequence` into `[h_fwd_T ; h_bwd_T]`.
pub fn bigru_forward<S: AsRef<[f32]>>(
    params: &GruParams,
    sequence: &[S],
) -> Result<(Vec<f64>, BiGruCache)> {
    if sequence.is_empty() {
        return Err(Error::EmptyInput("sequence"));
    }
    let xs = sequence
        .iter()
        .map(|s| {
            let s = s.as_ref();
            if s.len() != params.input {
                return Err(Error::DimensionMismatch {
                    expected: params.input,
                    found: s.len(),
                    context: "GRU input".into(),
                });
            }
            Ok(s.iter().map(|&v| f64::from(v)).collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let (h_fwd, forward) = run_direction(&params.forward, params.hidden, xs.iter());
    let (h_bwd, backward) = run_direction(&params.backward, params.hidden, xs.iter().rev());
    let mut out = h_fwd;
    out.extend(h_bwd);
    Ok((out, BiGruCache { forward, backward }))
}

fn backprop_direction(cell: &GruCell, steps: &[StepCache], d_final: &[f64], grad: &mut GruCell) {
    let hidden = d_final.len();
    let mut dh = d_final.to_vec();
    for step in steps.iter().rev() {
        let mut dh_prev: Vec<f64> = dh.iter().zip(&step.z).map(|(d, z)| d * z).collect();
        let mut da_n = vec![0.0; hidden];
        let mut da_z = vec![0.0; hidden];
        for i in 0..hidden {
            let dn = dh[i] * (1.0 - step.z[i]);
            let dz = dh[i] * (step.h_prev[i] - step.n[i]);
            da_n[i] = dn * (1.0 - step.n[i] * step.n[i]);
            da_z[i] = dz * step.z[i] * (1.0 - step.z[i]);
        }
        let rh: Vec<f64> = step.r.iter().zip(&step.h_prev).map(|(a, b)| a * b).collect();
        outer_acc(&mut grad.w_h, &da_n, &step.x);
        outer_acc(&mut grad.u_h, &da_n, &rh);
        add_assign(&mut grad.b_h, &da_n);
        let mut d_rh = vec![0.0; hidden];
        matvec_t_acc(&mut d_rh, &cell.u_h, &da_n);

        let mut da_r = vec![0.0; hidden];
        for i in 0..hidden {
            dh_prev[i] += d_rh[i] * step.r[i];
            let dr = d_rh[i] * step.h_prev[i];
            da_r[i] = dr * step.r[i] * (1.0 - step.r[i]);
        }
        outer_acc(&mut grad.w_z, &da_z, &step.x);
        outer_acc(&mut grad.u_z, &da_z, &step.h_prev);
        add_assign(&mut grad.b_z, &da_z);
        matvec_t_acc(&mut dh_prev, &cell.u_z, &da_z);

        outer_acc(&mut grad.w_r, &da_r, &step.x);
        outer_acc(&mut grad.u_r, &da_r, &step.h_prev);
        add_assign(&mut grad.b_r, &da_r);
        matvec_t_acc(&mut dh_prev, &cell.u_r, &da_r);

        dh = dh_prev;
    }
}

/// Accumulates `∂L/∂params` into `grad` given `d_output = ∂L/∂output`.
pub fn bigru_backward(params: &GruParams, cache: &BiGruCache, d_output: &[f64], grad: &mut GruParams) {
    let h = params.hidden;
    debug_assert_eq!(d_output.len(), 2 * h);
    backprop_direction(&params.forward, &cache.forward, &d_output[..h], &mut grad.forward);
    backprop_direction(&params.backward, &cache.backward, &d_output[h..], &mut grad.backward);
}
