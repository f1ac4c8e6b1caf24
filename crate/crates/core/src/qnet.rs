//! A fully connected Q-network with its own backpropagation.
//!
//! The network maps the 4-component cart state to one Q-value per action
//! through ReLU hidden layers and a linear output layer. Training minimizes
//! the mean squared Bellman error over a minibatch, with the bootstrap
//! targets treated as constants (they come from a frozen [`TargetNetwork`]
//! snapshot) and the gradient flowing only through the Q-value of the taken
//! action. Everything is 64-bit.
//!
//! Minibatch passes run in feature-major batch layout (`values[feature][sample]`,
//! samples contiguous) so the inner loops are independent lane-wise
//! fused-multiply-adds — they vectorize without any floating-point
//! reassociation, which keeps results bitwise identical across compiler
//! flag changes. Reductions (weight gradients, loss) use a fixed
//! four-accumulator order defined in source for the same reason.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand_core::RngCore;

use crate::env::{Action, CartState};
use crate::rng;

/// Width of the input layer: the four state components.
pub const INPUT_DIM: usize = 4;
/// Width of the output layer: one Q-value per action.
pub const OUTPUT_DIM: usize = 2;

/// Fused multiply-add `a * b + c` with a single rounding. The `std` build
/// lowers to the hardware instruction; the no-std build uses libm's exact
/// software FMA. Both are correctly rounded, so results agree bitwise.
#[inline(always)]
fn fma(a: f64, b: f64, c: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        a.mul_add(b, c)
    }
    #[cfg(not(feature = "std"))]
    {
        libm::fma(a, b, c)
    }
}

/// Per-layer nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Linear,
}

#[derive(Clone, Debug)]
struct Layer {
    in_dim: usize,
    out_dim: usize,
    /// Row-major `out_dim × in_dim`.
    w: Vec<f64>,
    b: Vec<f64>,
    act: Activation,
}

/// Construction and import failures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QnetError {
    /// `init` needs at least one hidden layer.
    EmptyHidden,
    /// An architecture chain must run from 4 inputs to 2 outputs through
    /// positive widths.
    BadArchitecture,
    /// A weight record points outside the declared architecture.
    RecordOutOfRange { index: usize },
    /// An import must carry exactly one record per parameter.
    RecordCountMismatch { expected: usize, got: usize },
}

impl fmt::Display for QnetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QnetError::EmptyHidden => f.write_str("at least one hidden layer is required"),
            QnetError::BadArchitecture => {
                f.write_str("architecture must chain 4 inputs to 2 outputs through positive widths")
            }
            QnetError::RecordOutOfRange { index } => {
                write!(f, "weight record {index} is outside the architecture")
            }
            QnetError::RecordCountMismatch { expected, got } => {
                write!(f, "expected {expected} weight records, got {got}")
            }
        }
    }
}

impl core::error::Error for QnetError {}

/// Which parameter array a [`WeightRecord`] addresses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightKind {
    Weight,
    Bias,
}

/// One exported parameter: layer index, array, position, value. Bias
/// records use `col = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightRecord {
    pub layer: usize,
    pub kind: WeightKind,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// One training sample: where the agent was, what it did, and the constant
/// Bellman target its Q-value is regressed toward.
#[derive(Clone, Copy, Debug)]
pub struct BellmanSample {
    pub state: CartState,
    pub action: Action,
    pub target: f64,
}

/// The greedy action for a pair of Q-values; ties resolve to `PushLeft`.
pub fn greedy_action(q: [f64; 2]) -> Action {
    if q[1] > q[0] {
        Action::PushRight
    } else {
        Action::PushLeft
    }
}

/// The Q-network: an ordered stack of affine layers with ReLU hidden
/// activations and a linear output.
#[derive(Clone, Debug)]
pub struct QNetwork {
    layers: Vec<Layer>,
}

impl QNetwork {
    /// Fresh network with the given hidden widths. Weights are uniform in
    /// ±1/√fan_in, biases zero; the draw order (layer by layer, row-major)
    /// is part of the determinism contract.
    pub fn init<R: RngCore + ?Sized>(
        hidden_sizes: &[usize],
        rng: &mut R,
    ) -> Result<QNetwork, QnetError> {
        if hidden_sizes.is_empty() {
            return Err(QnetError::EmptyHidden);
        }
        let mut arch = Vec::with_capacity(hidden_sizes.len() + 2);
        arch.push(INPUT_DIM);
        arch.extend_from_slice(hidden_sizes);
        arch.push(OUTPUT_DIM);
        let mut net = QNetwork::from_arch(&arch)?;
        for layer in &mut net.layers {
            let scale = 1.0 / libm::sqrt(layer.in_dim as f64);
            for w in &mut layer.w {
                *w = rng::uniform_in(rng, -scale, scale);
            }
        }
        Ok(net)
    }

    /// Zero-parameter network with the full width chain (input 4 through
    /// output 2), e.g. for weight import.
    pub fn from_arch(arch: &[usize]) -> Result<QNetwork, QnetError> {
        if arch.len() < 2
            || arch[0] != INPUT_DIM
            || *arch.last().unwrap() != OUTPUT_DIM
            || arch.contains(&0)
        {
            return Err(QnetError::BadArchitecture);
        }
        let layers = arch
            .windows(2)
            .enumerate()
            .map(|(i, pair)| Layer {
                in_dim: pair[0],
                out_dim: pair[1],
                w: vec![0.0; pair[0] * pair[1]],
                b: vec![0.0; pair[1]],
                act: if i + 2 == arch.len() {
                    Activation::Linear
                } else {
                    Activation::Relu
                },
            })
            .collect();
        Ok(QNetwork { layers })
    }

    /// The full width chain, input through output.
    pub fn arch(&self) -> Vec<usize> {
        let mut arch = Vec::with_capacity(self.layers.len() + 1);
        arch.push(INPUT_DIM);
        arch.extend(self.layers.iter().map(|l| l.out_dim));
        arch
    }

    /// Total number of parameters, Σ(out·in + out) over layers.
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Read one parameter by flat index (per layer: weights row-major, then
    /// biases). Panics if out of range.
    pub fn get_param(&self, index: usize) -> f64 {
        let mut i = index;
        for layer in &self.layers {
            if i < layer.w.len() {
                return layer.w[i];
            }
            i -= layer.w.len();
            if i < layer.b.len() {
                return layer.b[i];
            }
            i -= layer.b.len();
        }
        panic!("parameter index out of range: {index}");
    }

    /// Write one parameter by flat index. Panics if out of range.
    pub fn set_param(&mut self, index: usize, value: f64) {
        let mut i = index;
        for layer in &mut self.layers {
            if i < layer.w.len() {
                layer.w[i] = value;
                return;
            }
            i -= layer.w.len();
            if i < layer.b.len() {
                layer.b[i] = value;
                return;
            }
            i -= layer.b.len();
        }
        panic!("parameter index out of range: {index}");
    }

    /// Q-values for one state. Convenience path that allocates its own
    /// scratch; hot loops should use [`QNetwork::q_values`] with a reusable
    /// [`Workspace`].
    ///
    /// # Panics
    /// Panics if the state is not finite.
    pub fn forward(&self, state: &CartState) -> [f64; 2] {
        let mut ws = Workspace::for_net(self, 1);
        self.q_values(state, &mut ws)
    }

    /// Q-values for one state using caller-owned scratch.
    ///
    /// # Panics
    /// Panics if the state is not finite.
    pub fn q_values(&self, state: &CartState, ws: &mut Workspace) -> [f64; 2] {
        assert!(state.is_finite(), "q_values requires a finite state");
        let input = state.as_array();
        let mut cur: &mut Vec<f64> = &mut ws.single_a;
        let mut next: &mut Vec<f64> = &mut ws.single_b;
        cur.clear();
        cur.extend_from_slice(&input);
        for layer in &self.layers {
            next.clear();
            next.resize(layer.out_dim, 0.0);
            for (j, out) in next.iter_mut().enumerate() {
                let row = &layer.w[j * layer.in_dim..(j + 1) * layer.in_dim];
                let mut z = layer.b[j];
                for (wv, av) in row.iter().zip(cur.iter()) {
                    z = fma(*wv, *av, z);
                }
                *out = match layer.act {
                    Activation::Relu => {
                        if z > 0.0 {
                            z
                        } else {
                            0.0
                        }
                    }
                    Activation::Linear => z,
                };
            }
            core::mem::swap(&mut cur, &mut next);
        }
        [cur[0], cur[1]]
    }

    /// Mean squared Bellman error of the batch, forward passes only.
    ///
    /// # Panics
    /// Panics if the batch is empty.
    pub fn loss(&self, batch: &[BellmanSample]) -> f64 {
        assert!(!batch.is_empty(), "loss requires a non-empty batch");
        let mut ws = Workspace::for_net(self, 1);
        let mut sum = 0.0;
        for sample in batch {
            let q = self.q_values(&sample.state, &mut ws);
            let err = q[sample.action.index()] - sample.target;
            sum += err * err;
        }
        sum / batch.len() as f64
    }

    /// Mean squared Bellman error and its exact gradients for one batch.
    ///
    /// Gradients are written into `grads` (overwritten, not accumulated).
    /// Targets are constants; only the taken action's Q-value carries
    /// gradient.
    ///
    /// # Panics
    /// Panics if the batch is empty or `grads` has the wrong shape.
    pub fn loss_and_gradients(
        &self,
        batch: &[BellmanSample],
        grads: &mut GradientSet,
        ws: &mut Workspace,
    ) -> f64 {
        assert!(
            !batch.is_empty(),
            "loss_and_gradients requires a non-empty batch"
        );
        assert!(
            grads.is_congruent(self),
            "gradient shapes must match the network"
        );
        let b = batch.len();
        ws.ensure_batch(self, b);
        grads.zero();

        // Input features, feature-major.
        for (s, sample) in batch.iter().enumerate() {
            let x = sample.state.as_array();
            for (k, xv) in x.iter().enumerate() {
                ws.acts[0][k * b + s] = *xv;
            }
        }
        self.batch_forward(b, &mut ws.acts);

        // Output deltas: δ[a_s][s] = 2(q_{a_s,s} − y_s)/B, zero elsewhere.
        let out = &ws.acts[self.layers.len()];
        let inv_b = 1.0 / b as f64;
        ws.delta_a[..OUTPUT_DIM * b].fill(0.0);
        let mut loss = 0.0;
        for (s, sample) in batch.iter().enumerate() {
            let q = out[sample.action.index() * b + s];
            let err = q - sample.target;
            loss += err * err;
            ws.delta_a[sample.action.index() * b + s] = 2.0 * err * inv_b;
        }
        loss *= inv_b;

        // Backward, output layer toward input. `delta_a` holds δ for the
        // output of layer `li`; `delta_b` receives δ for its input.
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let acts_in = &ws.acts[li];
            let lg = &mut grads.layers[li];
            for j in 0..layer.out_dim {
                let drow = &ws.delta_a[j * b..j * b + b];
                lg.b[j] = sum_fixed(drow);
                for k in 0..layer.in_dim {
                    lg.w[j * layer.in_dim + k] = dot_fixed(drow, &acts_in[k * b..k * b + b]);
                }
            }
            if li > 0 {
                let dprev = &mut ws.delta_b[..layer.in_dim * b];
                dprev.fill(0.0);
                for j in 0..layer.out_dim {
                    let wrow = &layer.w[j * layer.in_dim..(j + 1) * layer.in_dim];
                    let drow = &ws.delta_a[j * b..j * b + b];
                    for (k, wv) in wrow.iter().enumerate() {
                        let dst = &mut dprev[k * b..k * b + b];
                        for (d, dj) in dst.iter_mut().zip(drow.iter()) {
                            *d = fma(*wv, *dj, *d);
                        }
                    }
                }
                // Gate through ReLU: the layer below is always a hidden
                // layer here, and post-activation > 0 ⟺ pre-activation > 0.
                for (d, a) in dprev.iter_mut().zip(acts_in.iter()) {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                }
                core::mem::swap(&mut ws.delta_a, &mut ws.delta_b);
            }
        }
        loss
    }

    /// One plain gradient-descent update: every parameter decremented by
    /// `learning_rate × gradient`.
    ///
    /// # Panics
    /// Panics if `grads` has the wrong shape.
    pub fn sgd_step(&mut self, grads: &GradientSet, learning_rate: f64) {
        assert!(
            grads.is_congruent(self),
            "gradient shapes must match the network"
        );
        for (layer, lg) in self.layers.iter_mut().zip(grads.layers.iter()) {
            for (w, g) in layer.w.iter_mut().zip(lg.w.iter()) {
                *w -= learning_rate * g;
            }
            for (bv, g) in layer.b.iter_mut().zip(lg.b.iter()) {
                *bv -= learning_rate * g;
            }
        }
    }

    /// Freeze a deep copy of the current parameters for bootstrap targets.
    pub fn sync_target(&self) -> TargetNetwork {
        TargetNetwork { net: self.clone() }
    }

    /// All parameters as flat records, in the same order as the flat index.
    pub fn to_records(&self) -> Vec<WeightRecord> {
        let mut records = Vec::with_capacity(self.param_count());
        for (li, layer) in self.layers.iter().enumerate() {
            for j in 0..layer.out_dim {
                for k in 0..layer.in_dim {
                    records.push(WeightRecord {
                        layer: li,
                        kind: WeightKind::Weight,
                        row: j,
                        col: k,
                        value: layer.w[j * layer.in_dim + k],
                    });
                }
            }
            for (j, bv) in layer.b.iter().enumerate() {
                records.push(WeightRecord {
                    layer: li,
                    kind: WeightKind::Bias,
                    row: j,
                    col: 0,
                    value: *bv,
                });
            }
        }
        records
    }

    /// Rebuild a network from an architecture chain plus one record per
    /// parameter (any order).
    pub fn from_records(arch: &[usize], records: &[WeightRecord]) -> Result<QNetwork, QnetError> {
        let mut net = QNetwork::from_arch(arch)?;
        let expected = net.param_count();
        if records.len() != expected {
            return Err(QnetError::RecordCountMismatch {
                expected,
                got: records.len(),
            });
        }
        for (i, rec) in records.iter().enumerate() {
            let layer = net
                .layers
                .get_mut(rec.layer)
                .ok_or(QnetError::RecordOutOfRange { index: i })?;
            match rec.kind {
                WeightKind::Weight => {
                    if rec.row >= layer.out_dim || rec.col >= layer.in_dim {
                        return Err(QnetError::RecordOutOfRange { index: i });
                    }
                    layer.w[rec.row * layer.in_dim + rec.col] = rec.value;
                }
                WeightKind::Bias => {
                    if rec.row >= layer.out_dim || rec.col != 0 {
                        return Err(QnetError::RecordOutOfRange { index: i });
                    }
                    layer.b[rec.row] = rec.value;
                }
            }
        }
        Ok(net)
    }

    /// Batch forward in feature-major layout; `acts[0]` must hold the input
    /// features and every buffer must be sized `width × b`.
    fn batch_forward(&self, b: usize, acts: &mut [Vec<f64>]) {
        for (li, layer) in self.layers.iter().enumerate() {
            let (before, after) = acts.split_at_mut(li + 1);
            let a_prev = &before[li];
            let z = &mut after[0];
            for j in 0..layer.out_dim {
                let zrow = &mut z[j * b..j * b + b];
                zrow.fill(layer.b[j]);
                let wrow = &layer.w[j * layer.in_dim..(j + 1) * layer.in_dim];
                for (k, wv) in wrow.iter().enumerate() {
                    let arow = &a_prev[k * b..k * b + b];
                    for (zv, av) in zrow.iter_mut().zip(arow.iter()) {
                        *zv = fma(*wv, *av, *zv);
                    }
                }
                if layer.act == Activation::Relu {
                    for zv in zrow.iter_mut() {
                        if *zv < 0.0 {
                            *zv = 0.0;
                        }
                    }
                }
            }
        }
    }
}

/// A frozen deep copy of a [`QNetwork`]; never touched by gradient steps,
/// replaced wholesale on sync.
#[derive(Clone, Debug)]
pub struct TargetNetwork {
    net: QNetwork,
}

impl TargetNetwork {
    /// Q-values for one state (allocating convenience path).
    pub fn forward(&self, state: &CartState) -> [f64; 2] {
        self.net.forward(state)
    }

    /// Q-values for one state using caller-owned scratch.
    pub fn q_values(&self, state: &CartState, ws: &mut Workspace) -> [f64; 2] {
        self.net.q_values(state, ws)
    }

    /// `max_a Q(s, a)` for a batch of states in one feature-major pass;
    /// one entry per state is written into `out`.
    pub fn batch_max_q(&self, states: &[CartState], ws: &mut Workspace, out: &mut Vec<f64>) {
        let b = states.len();
        if b == 0 {
            out.clear();
            return;
        }
        ws.ensure_batch(&self.net, b);
        for (s, state) in states.iter().enumerate() {
            let x = state.as_array();
            for (k, xv) in x.iter().enumerate() {
                ws.acts[0][k * b + s] = *xv;
            }
        }
        self.net.batch_forward(b, &mut ws.acts);
        let q = &ws.acts[self.net.layers.len()];
        out.clear();
        out.extend((0..b).map(|s| q[s].max(q[b + s])));
    }

    pub fn arch(&self) -> Vec<usize> {
        self.net.arch()
    }
}

/// One-step bootstrapped target: `r` when terminal, else
/// `r + γ·max_a Q(s′, a)` under the frozen snapshot.
pub fn bellman_target(
    r: f64,
    next_state: &CartState,
    terminal: bool,
    target: &TargetNetwork,
    gamma: f64,
) -> f64 {
    if terminal {
        return r;
    }
    let q = target.forward(next_state);
    r + gamma * q[0].max(q[1])
}

/// Per-layer gradient arrays, shape-congruent with their network.
#[derive(Clone, Debug)]
pub struct GradientSet {
    layers: Vec<LayerGrads>,
}

#[derive(Clone, Debug)]
struct LayerGrads {
    w: Vec<f64>,
    b: Vec<f64>,
}

impl GradientSet {
    pub fn zeros_like(net: &QNetwork) -> GradientSet {
        GradientSet {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrads {
                    w: vec![0.0; l.w.len()],
                    b: vec![0.0; l.b.len()],
                })
                .collect(),
        }
    }

    fn is_congruent(&self, net: &QNetwork) -> bool {
        self.layers.len() == net.layers.len()
            && self
                .layers
                .iter()
                .zip(net.layers.iter())
                .all(|(g, l)| g.w.len() == l.w.len() && g.b.len() == l.b.len())
    }

    pub fn zero(&mut self) {
        for lg in &mut self.layers {
            lg.w.fill(0.0);
            lg.b.fill(0.0);
        }
    }

    /// Global L2 norm over every entry.
    pub fn l2_norm(&self) -> f64 {
        let mut sum = 0.0;
        for lg in &self.layers {
            for g in &lg.w {
                sum += g * g;
            }
            for g in &lg.b {
                sum += g * g;
            }
        }
        libm::sqrt(sum)
    }

    /// Scale every entry by `factor`.
    pub fn scale(&mut self, factor: f64) {
        for lg in &mut self.layers {
            for g in &mut lg.w {
                *g *= factor;
            }
            for g in &mut lg.b {
                *g *= factor;
            }
        }
    }

    /// Rescale so the global L2 norm does not exceed `max_norm`; returns
    /// the norm before clipping.
    pub fn clip_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.l2_norm();
        if norm > max_norm {
            self.scale(max_norm / norm);
        }
        norm
    }

    /// Read one gradient by the same flat index as [`QNetwork::get_param`].
    pub fn get(&self, index: usize) -> f64 {
        let mut i = index;
        for lg in &self.layers {
            if i < lg.w.len() {
                return lg.w[i];
            }
            i -= lg.w.len();
            if i < lg.b.len() {
                return lg.b[i];
            }
            i -= lg.b.len();
        }
        panic!("gradient index out of range: {index}");
    }
}

/// Reusable scratch for forward/backward passes: single-sample ping-pong
/// buffers plus feature-major batch activations and deltas.
#[derive(Clone, Debug)]
pub struct Workspace {
    widths: Vec<usize>,
    batch_cap: usize,
    single_a: Vec<f64>,
    single_b: Vec<f64>,
    acts: Vec<Vec<f64>>,
    delta_a: Vec<f64>,
    delta_b: Vec<f64>,
}

impl Workspace {
    /// Scratch sized for `net` and minibatches up to `batch_capacity`.
    pub fn for_net(net: &QNetwork, batch_capacity: usize) -> Workspace {
        let widths = net.arch();
        let max_width = widths.iter().copied().max().unwrap_or(1);
        Workspace {
            acts: widths
                .iter()
                .map(|w| vec![0.0; w * batch_capacity.max(1)])
                .collect(),
            delta_a: vec![0.0; max_width * batch_capacity.max(1)],
            delta_b: vec![0.0; max_width * batch_capacity.max(1)],
            single_a: Vec::with_capacity(max_width),
            single_b: Vec::with_capacity(max_width),
            widths,
            batch_cap: batch_capacity.max(1),
        }
    }

    /// Regrow the batch buffers if the network or batch size outgrew them.
    fn ensure_batch(&mut self, net: &QNetwork, batch: usize) {
        let widths = net.arch();
        if widths != self.widths || batch > self.batch_cap {
            *self = Workspace::for_net(net, batch.max(self.batch_cap));
        }
    }
}

/// Ordered sum with four fixed accumulators; the exact summation order is
/// part of the determinism contract.
fn sum_fixed(values: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let mut chunks = values.chunks_exact(4);
    for c in &mut chunks {
        acc[0] += c[0];
        acc[1] += c[1];
        acc[2] += c[2];
        acc[3] += c[3];
    }
    let mut total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for v in chunks.remainder() {
        total += v;
    }
    total
}

/// Ordered dot product with four fixed accumulators.
fn dot_fixed(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let mut ac = a.chunks_exact(4);
    let mut bc = b.chunks_exact(4);
    for (ca, cb) in (&mut ac).zip(&mut bc) {
        acc[0] = fma(ca[0], cb[0], acc[0]);
        acc[1] = fma(ca[1], cb[1], acc[1]);
        acc[2] = fma(ca[2], cb[2], acc[2]);
        acc[3] = fma(ca[3], cb[3], acc[3]);
    }
    let mut total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (va, vb) in ac.remainder().iter().zip(bc.remainder()) {
        total = fma(*va, *vb, total);
    }
    total
}
