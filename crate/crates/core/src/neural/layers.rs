//! Flat parameter layouts, fully connected layers and LSTM layers with exact
//! backpropagation through time.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::tensor::{gemm_nn, gemm_nt, gemm_tn, SeqTensor};
use crate::env::sigmoid;
#[allow(unused_imports)]
use crate::prelude::*;

/// How a parameter segment is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    /// U(−1/√fan_in, 1/√fan_in).
    FanIn(usize),
    Zero,
    /// LSTM bias: forget-gate block set to 1, the rest 0.
    LstmBias {
        hidden: usize,
    },
}

/// A named, shaped slice of a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
    pub init: Init,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> core::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamLayout {
    segments: Vec<Segment>,
    total: usize,
}

impl ParamLayout {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a segment and returns its offset.
    pub fn push(&mut self, name: &str, rows: usize, cols: usize, init: Init) -> usize {
        let offset = self.total;
        self.segments.push(Segment {
            name: name.into(),
            rows,
            cols,
            offset,
            init,
        });
        self.total += rows * cols;
        offset
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment(&self, name: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.name == name)
    }

    pub fn initialize<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut params = vec![0.0; self.total];
        for seg in &self.segments {
            let slot = &mut params[seg.range()];
            match seg.init {
                Init::FanIn(fan_in) => {
                    let bound = 1.0 / (fan_in as f64).sqrt();
                    for p in slot.iter_mut() {
                        *p = bound * (2.0 * rng.random::<f64>() - 1.0);
                    }
                }
                Init::Zero => {}
                Init::LstmBias { hidden } => slot[..hidden].fill(1.0),
            }
        }
        params
    }
}

/// Fully connected layer `y = act(W x + b)`, W stored (output × input).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dense {
    pub input: usize,
    pub output: usize,
    pub relu: bool,
    w: usize,
    b: usize,
}

impl Dense {
    pub fn register(
        layout: &mut ParamLayout,
        name: &str,
        input: usize,
        output: usize,
        relu: bool,
    ) -> Self {
        let w = layout.push(
            &alloc::format!("{name}.w"),
            output,
            input,
            Init::FanIn(input),
        );
        let b = layout.push(&alloc::format!("{name}.b"), output, 1, Init::Zero);
        Self {
            input,
            output,
            relu,
            w,
            b,
        }
    }

    fn weights<'p>(&self, params: &'p [f64]) -> &'p [f64] {
        &params[self.w..self.w + self.input * self.output]
    }

    /// Applies the layer to `rows` stacked inputs.
    pub fn forward(&self, params: &[f64], x: &[f64], rows: usize) -> Vec<f64> {
        let mut y = vec![0.0; rows * self.output];
        let bias = &params[self.b..self.b + self.output];
        for row in y.chunks_exact_mut(self.output) {
            row.copy_from_slice(bias);
        }
        gemm_nt(
            rows,
            self.output,
            self.input,
            x,
            self.weights(params),
            1.0,
            &mut y,
        );
        if self.relu {
            for v in y.iter_mut() {
                *v = v.max(0.0);
            }
        }
        y
    }

    /// Backward pass given the forward input `x`, output `y` and upstream `dy`
    /// (overwritten with the pre-activation gradient). Parameter gradients are
    /// accumulated into `grads` when given; the input gradient is returned when
    /// `want_dx`.
    pub fn backward(
        &self,
        params: &[f64],
        x: &[f64],
        y: &[f64],
        dy: &mut [f64],
        rows: usize,
        grads: Option<&mut [f64]>,
        want_dx: bool,
    ) -> Option<Vec<f64>> {
        if self.relu {
            for (d, &out) in dy.iter_mut().zip(y) {
                if out <= 0.0 {
                    *d = 0.0;
                }
            }
        }
        if let Some(g) = grads {
            gemm_tn(
                self.output,
                self.input,
                rows,
                dy,
                x,
                1.0,
                &mut g[self.w..self.w + self.input * self.output],
            );
            let gb = &mut g[self.b..self.b + self.output];
            for row in dy.chunks_exact(self.output) {
                for (acc, v) in gb.iter_mut().zip(row) {
                    *acc += v;
                }
            }
        }
        if want_dx {
            let mut dx = vec![0.0; rows * self.input];
            gemm_nn(
                rows,
                self.input,
                self.output,
                dy,
                self.weights(params),
                0.0,
                &mut dx,
            );
            Some(dx)
        } else {
            None
        }
    }
}

/// LSTM layer. Gate blocks are ordered (forget, input, candidate, output) in
/// the 4H rows of W (4H × input), U (4H × H) and b (4H).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lstm {
    pub input: usize,
    pub hidden: usize,
    w: usize,
    u: usize,
    b: usize,
}

/// Intermediates retained for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCache {
    pub x: SeqTensor,
    /// Activated gates (L·B × 4H).
    gates: Vec<f64>,
    /// Cell states (L·B × H).
    pub c: Vec<f64>,
    tanh_c: Vec<f64>,
    /// Hidden outputs (L, B, H).
    pub h: SeqTensor,
    h0: Vec<f64>,
    c0: Vec<f64>,
}

impl LstmCache {
    /// Final (h, c), each batch × hidden.
    pub fn final_state(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.h.batch * self.h.dim;
        if self.h.len == 0 {
            return (self.h0.clone(), self.c0.clone());
        }
        let start = (self.h.len - 1) * n;
        (
            self.h.data[start..start + n].to_vec(),
            self.c[start..start + n].to_vec(),
        )
    }
}

impl Lstm {
    pub fn register(layout: &mut ParamLayout, name: &str, input: usize, hidden: usize) -> Self {
        let w = layout.push(
            &alloc::format!("{name}.w"),
            4 * hidden,
            input,
            Init::FanIn(input),
        );
        let u = layout.push(
            &alloc::format!("{name}.u"),
            4 * hidden,
            hidden,
            Init::FanIn(hidden),
        );
        let b = layout.push(
            &alloc::format!("{name}.b"),
            4 * hidden,
            1,
            Init::LstmBias { hidden },
        );
        Self {
            input,
            hidden,
            w,
            u,
            b,
        }
    }

    fn w<'p>(&self, params: &'p [f64]) -> &'p [f64] {
        &params[self.w..self.w + 4 * self.hidden * self.input]
    }

    fn u<'p>(&self, params: &'p [f64]) -> &'p [f64] {
        &params[self.u..self.u + 4 * self.hidden * self.hidden]
    }

    /// Runs the layer over a whole window from the initial state (h0, c0).
    pub fn forward(&self, params: &[f64], x: &SeqTensor, h0: &[f64], c0: &[f64]) -> LstmCache {
        let (len, batch, hid) = (x.len, x.batch, self.hidden);
        assert_eq!(x.dim, self.input, "LSTM input width");
        assert_eq!(h0.len(), batch * hid, "LSTM h0 shape");
        assert_eq!(c0.len(), batch * hid, "LSTM c0 shape");
        let g4 = 4 * hid;
        let rows = len * batch;

        // Input projections for all steps at once, bias folded in.
        let mut gates = vec![0.0; rows * g4];
        let bias = &params[self.b..self.b + g4];
        for row in gates.chunks_exact_mut(g4) {
            row.copy_from_slice(bias);
        }
        gemm_nt(
            rows,
            g4,
            self.input,
            &x.data,
            self.w(params),
            1.0,
            &mut gates,
        );

        let mut c = vec![0.0; rows * hid];
        let mut tanh_c = vec![0.0; rows * hid];
        let mut h = SeqTensor::zeros(len, batch, hid);
        for t in 0..len {
            let step = t * batch;
            {
                let h_prev: &[f64] = if t == 0 {
                    h0
                } else {
                    &h.data[(step - batch) * hid..step * hid]
                };
                gemm_nt(
                    batch,
                    g4,
                    hid,
                    h_prev,
                    self.u(params),
                    1.0,
                    &mut gates[step * g4..(step + batch) * g4],
                );
            }
            for b in 0..batch {
                let r = step + b;
                let z = &mut gates[r * g4..(r + 1) * g4];
                for j in 0..hid {
                    z[j] = sigmoid(z[j]);
                    z[hid + j] = sigmoid(z[hid + j]);
                    z[2 * hid + j] = z[2 * hid + j].tanh();
                    z[3 * hid + j] = sigmoid(z[3 * hid + j]);
                }
                for j in 0..hid {
                    let c_prev = if t == 0 {
                        c0[b * hid + j]
                    } else {
                        c[(r - batch) * hid + j]
                    };
                    let c_new = z[j] * c_prev + z[hid + j] * z[2 * hid + j];
                    let tc = c_new.tanh();
                    c[r * hid + j] = c_new;
                    tanh_c[r * hid + j] = tc;
                    h.data[r * hid + j] = z[3 * hid + j] * tc;
                }
            }
        }
        LstmCache {
            x: x.clone(),
            gates,
            c,
            tanh_c,
            h,
            h0: h0.to_vec(),
            c0: c0.to_vec(),
        }
    }

    /// Backpropagation through time. `dh` is the loss gradient with respect to
    /// every hidden output; the final cell/hidden state is treated as unused.
    pub fn backward(
        &self,
        params: &[f64],
        cache: &LstmCache,
        dh: &SeqTensor,
        grads: &mut [f64],
        want_dx: bool,
    ) -> Option<SeqTensor> {
        let (len, batch, hid) = (cache.h.len, cache.h.batch, self.hidden);
        assert_eq!(
            (dh.len, dh.batch, dh.dim),
            (len, batch, hid),
            "LSTM upstream gradient shape"
        );
        let g4 = 4 * hid;
        let rows = len * batch;
        let mut dz = vec![0.0; rows * g4];
        let mut dh_next = vec![0.0; batch * hid];
        let mut dc_next = vec![0.0; batch * hid];

        for t in (0..len).rev() {
            let step = t * batch;
            for b in 0..batch {
                let r = step + b;
                let z = &cache.gates[r * g4..(r + 1) * g4];
                let d = &mut dz[r * g4..(r + 1) * g4];
                for j in 0..hid {
                    let f = z[j];
                    let i = z[hid + j];
                    let g = z[2 * hid + j];
                    let o = z[3 * hid + j];
                    let tc = cache.tanh_c[r * hid + j];
                    let c_prev = if t == 0 {
                        cache.c0[b * hid + j]
                    } else {
                        cache.c[(r - batch) * hid + j]
                    };
                    let dh_total = dh.data[r * hid + j] + dh_next[b * hid + j];
                    let d_o = dh_total * tc;
                    let dc = dh_total * o * (1.0 - tc * tc) + dc_next[b * hid + j];
                    d[j] = dc * c_prev * f * (1.0 - f);
                    d[hid + j] = dc * g * i * (1.0 - i);
                    d[2 * hid + j] = dc * i * (1.0 - g * g);
                    d[3 * hid + j] = d_o * o * (1.0 - o);
                    dc_next[b * hid + j] = dc * f;
                }
            }
            if t > 0 {
                gemm_nn(
                    batch,
                    hid,
                    g4,
                    &dz[step * g4..(step + batch) * g4],
                    self.u(params),
                    0.0,
                    &mut dh_next,
                );
            }
        }

        // Parameter gradients over the whole window.
        gemm_tn(
            g4,
            self.input,
            rows,
            &dz,
            &cache.x.data,
            1.0,
            &mut grads[self.w..self.w + g4 * self.input],
        );
        let mut h_prev = vec![0.0; rows * hid];
        h_prev[..batch * hid].copy_from_slice(&cache.h0);
        if len > 1 {
            h_prev[batch * hid..].copy_from_slice(&cache.h.data[..(len - 1) * batch * hid]);
        }
        gemm_tn(
            g4,
            hid,
            rows,
            &dz,
            &h_prev,
            1.0,
            &mut grads[self.u..self.u + g4 * hid],
        );
        let gb = &mut grads[self.b..self.b + g4];
        for row in dz.chunks_exact(g4) {
            for (acc, v) in gb.iter_mut().zip(row) {
                *acc += v;
            }
        }

        if want_dx {
            let mut dx = SeqTensor::zeros(len, batch, self.input);
            gemm_nn(rows, self.input, g4, &dz, self.w(params), 0.0, &mut dx.data);
            Some(dx)
        } else {
            None
        }
    }
}

/// One LSTM step for a batch: returns (h, c).
pub fn lstm_cell_forward(
    layer: &Lstm,
    params: &[f64],
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let batch = x.len() / layer.input;
    let input = SeqTensor::from_vec(1, batch, layer.input, x.to_vec());
    layer.forward(params, &input, h_prev, c_prev).final_state()
}
