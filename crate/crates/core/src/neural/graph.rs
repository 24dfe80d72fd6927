use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::NeuralError;
use crate::math::{exp, ln_1p, sigmoid, tanh};

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    AddRowBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    SliceCols {
        a: Var,
        start: usize,
    },
    ConcatCols(Vec<Var>),
    Conv1d {
        x: Var,
        w: Var,
        b: Var,
        window: usize,
        embed: usize,
        positions: usize,
    },
    MaxTime {
        a: Var,
        argmax: Vec<usize>,
    },
    MeanTime {
        a: Var,
        feat: usize,
        valid: Vec<usize>,
    },
    MaskBlend {
        prev: Var,
        new: Var,
        mask: Vec<f64>,
    },
    Dropout {
        a: Var,
        mask: Vec<f64>,
    },
    BceWithLogits {
        logits: Var,
        targets: Vec<f64>,
    },
    Sum(Var),
    SparseLinear {
        w: Var,
        rows: Vec<(Vec<u32>, Vec<f64>)>,
    },
}

#[derive(Debug, Clone)]
struct Node {
    rows: usize,
    cols: usize,
    value: Vec<f64>,
    requires_grad: bool,
    /// Accumulated gradient; only kept for leaves.
    grad: Option<Vec<f64>>,
    op: Op,
}

/// A tape of row-major matrix operations with reverse-mode
/// differentiation. Nodes are evaluated eagerly when created; vectors
/// are `1 x n` matrices.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

fn shape_err(op: &str, detail: alloc::string::String) -> NeuralError {
    NeuralError::Shape(format!("{op}: {detail}"))
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, rows: usize, cols: usize, value: Vec<f64>, requires_grad: bool, op: Op) -> Var {
        debug_assert_eq!(value.len(), rows * cols);
        self.nodes.push(Node {
            rows,
            cols,
            value,
            requires_grad,
            grad: None,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    /// An input or parameter. Leaves with `requires_grad` accumulate
    /// gradients across [`Graph::backward`] calls.
    pub fn leaf(&mut self, rows: usize, cols: usize, data: Vec<f64>, requires_grad: bool) -> Result<Var, NeuralError> {
        if data.len() != rows * cols {
            return Err(shape_err("leaf", format!("{} values for {rows}x{cols}", data.len())));
        }
        let grad = requires_grad.then(|| vec![0.0; data.len()]);
        self.nodes.push(Node {
            rows,
            cols,
            value: data,
            requires_grad,
            grad,
            op: Op::Leaf,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn constant(&mut self, rows: usize, cols: usize, data: Vec<f64>) -> Result<Var, NeuralError> {
        self.leaf(rows, cols, data, false)
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        let n = &self.nodes[v.0];
        (n.rows, n.cols)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    /// The scalar held by a `1 x 1` node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[0]
    }

    /// Accumulated gradient of a leaf.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].grad.as_deref()
    }

    pub fn zero_grad(&mut self) {
        for n in &mut self.nodes {
            if let Some(g) = &mut n.grad {
                g.iter_mut().for_each(|x| *x = 0.0);
            }
        }
    }

    fn rg(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NeuralError> {
        let ((n, k), (k2, m)) = (self.shape(a), self.shape(b));
        if k != k2 {
            return Err(shape_err("matmul", format!("{n}x{k} times {k2}x{m}")));
        }
        let mut out = vec![0.0; n * m];
        matmul_into(&self.nodes[a.0].value, &self.nodes[b.0].value, &mut out, n, k, m);
        let rg = self.rg(&[a, b]);
        Ok(self.push(n, m, out, rg, Op::MatMul(a, b)))
    }

    /// Adds a `1 x m` (or length-`m`) bias to every row.
    pub fn add_row_bias(&mut self, a: Var, bias: Var) -> Result<Var, NeuralError> {
        let (n, m) = self.shape(a);
        let bl = self.nodes[bias.0].value.len();
        if bl != m {
            return Err(shape_err("add_row_bias", format!("bias of {bl} for {n}x{m}")));
        }
        let b = &self.nodes[bias.0].value;
        let out = self.nodes[a.0]
            .value
            .chunks(m)
            .flat_map(|row| row.iter().zip(b).map(|(x, y)| x + y))
            .collect();
        let rg = self.rg(&[a, bias]);
        Ok(self.push(n, m, out, rg, Op::AddRowBias(a, bias)))
    }

    fn same_shape(&self, op: &str, a: Var, b: Var) -> Result<(usize, usize), NeuralError> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(shape_err(op, format!("{sa:?} vs {sb:?}")));
        }
        Ok(sa)
    }

    fn zip_op(&mut self, name: &str, a: Var, b: Var, f: fn(f64, f64) -> f64, op: Op) -> Result<Var, NeuralError> {
        let (n, m) = self.same_shape(name, a, b)?;
        let out = self.nodes[a.0]
            .value
            .iter()
            .zip(&self.nodes[b.0].value)
            .map(|(&x, &y)| f(x, y))
            .collect();
        let rg = self.rg(&[a, b]);
        Ok(self.push(n, m, out, rg, op))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NeuralError> {
        self.zip_op("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, NeuralError> {
        self.zip_op("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    /// Element-wise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NeuralError> {
        self.zip_op("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    fn map_op(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let (n, m) = self.shape(a);
        let out = self.nodes[a.0].value.iter().map(|&x| f(x)).collect();
        let rg = self.rg(&[a]);
        self.push(n, m, out, rg, op)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        self.map_op(a, |x| x * s, Op::Scale(a, s))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.map_op(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.map_op(a, tanh, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.map_op(a, |x| if x > 0.0 { x } else { 0.0 }, Op::Relu(a))
    }

    /// Columns `start..start + len` of every row.
    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Result<Var, NeuralError> {
        let (n, m) = self.shape(a);
        if start + len > m || len == 0 {
            return Err(shape_err("slice_cols", format!("{start}+{len} of {m} columns")));
        }
        let out = self.nodes[a.0]
            .value
            .chunks(m)
            .flat_map(|row| row[start..start + len].iter().copied())
            .collect();
        let rg = self.rg(&[a]);
        Ok(self.push(n, len, out, rg, Op::SliceCols { a, start }))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, NeuralError> {
        let Some(&first) = parts.first() else {
            return Err(shape_err("concat_cols", "no inputs".into()));
        };
        let n = self.shape(first).0;
        if let Some(bad) = parts.iter().find(|v| self.shape(**v).0 != n) {
            return Err(shape_err("concat_cols", format!("{} rows vs {n}", self.shape(*bad).0)));
        }
        let m: usize = parts.iter().map(|v| self.shape(*v).1).sum();
        let mut out = Vec::with_capacity(n * m);
        for r in 0..n {
            for v in parts {
                let c = self.shape(*v).1;
                out.extend_from_slice(&self.nodes[v.0].value[r * c..(r + 1) * c]);
            }
        }
        let rg = self.rg(parts);
        Ok(self.push(n, m, out, rg, Op::ConcatCols(parts.to_vec())))
    }

    /// Convolution over time. Each row of `x` is a sequence of `steps`
    /// vectors of length `embed`; `w` is `(window * embed) x maps` and `b`
    /// has `maps` entries. The result row holds, for every start position
    /// `p` in `0..=steps - window`, the `maps` responses to the window
    /// starting at `p`.
    pub fn conv1d(&mut self, x: Var, w: Var, b: Var, embed: usize, window: usize) -> Result<Var, NeuralError> {
        let (n, width) = self.shape(x);
        let (wr, maps) = self.shape(w);
        if embed == 0 || width % embed != 0 || wr != window * embed || self.nodes[b.0].value.len() != maps {
            return Err(shape_err(
                "conv1d",
                format!("x {n}x{width}, w {wr}x{maps}, embed {embed}, window {window}"),
            ));
        }
        let steps = width / embed;
        if window == 0 || window > steps {
            return Err(shape_err("conv1d", format!("window {window} over {steps} steps")));
        }
        let positions = steps - window + 1;
        let mut out = vec![0.0; n * positions * maps];
        let (xv, wv, bv) = (&self.nodes[x.0].value, &self.nodes[w.0].value, &self.nodes[b.0].value);
        for r in 0..n {
            for p in 0..positions {
                let win = &xv[r * width + p * embed..r * width + (p + window) * embed];
                let dst = &mut out[(r * positions + p) * maps..(r * positions + p + 1) * maps];
                dst.copy_from_slice(bv);
                matmul_into(win, wv, dst, 1, window * embed, maps);
            }
        }
        let rg = self.rg(&[x, w, b]);
        Ok(self.push(
            n,
            positions * maps,
            out,
            rg,
            Op::Conv1d {
                x,
                w,
                b,
                window,
                embed,
                positions,
            },
        ))
    }

    fn time_shape(&self, op: &str, a: Var, feat: usize, valid: &[usize]) -> Result<(usize, usize), NeuralError> {
        let (n, m) = self.shape(a);
        if feat == 0 || m % feat != 0 || valid.len() != n {
            return Err(shape_err(
                op,
                format!("{n}x{m} with feat {feat} and {} lengths", valid.len()),
            ));
        }
        let steps = m / feat;
        if let Some(row) = valid.iter().position(|&v| v == 0) {
            return Err(NeuralError::EmptyMask { row });
        }
        if let Some(&v) = valid.iter().find(|&&v| v > steps) {
            return Err(shape_err(op, format!("valid length {v} over {steps} steps")));
        }
        Ok((n, steps))
    }

    /// Max over the first `valid[r]` time steps of row `r`; later steps
    /// are treated as minus infinity. Ties go to the earliest step.
    pub fn max_time(&mut self, a: Var, feat: usize, valid: &[usize]) -> Result<Var, NeuralError> {
        let (n, _) = self.time_shape("max_time", a, feat, valid)?;
        let m = self.shape(a).1;
        let av = &self.nodes[a.0].value;
        let mut out = vec![f64::NEG_INFINITY; n * feat];
        let mut argmax = vec![0usize; n * feat];
        for r in 0..n {
            for p in 0..valid[r] {
                for f in 0..feat {
                    let x = av[r * m + p * feat + f];
                    if x > out[r * feat + f] || p == 0 {
                        out[r * feat + f] = x;
                        argmax[r * feat + f] = p * feat + f;
                    }
                }
            }
        }
        let rg = self.rg(&[a]);
        Ok(self.push(n, feat, out, rg, Op::MaxTime { a, argmax }))
    }

    /// Mean over the first `valid[r]` time steps of row `r`.
    pub fn mean_time(&mut self, a: Var, feat: usize, valid: &[usize]) -> Result<Var, NeuralError> {
        let (n, _) = self.time_shape("mean_time", a, feat, valid)?;
        let m = self.shape(a).1;
        let av = &self.nodes[a.0].value;
        let mut out = vec![0.0; n * feat];
        for r in 0..n {
            for p in 0..valid[r] {
                for f in 0..feat {
                    out[r * feat + f] += av[r * m + p * feat + f];
                }
            }
            let k = valid[r] as f64;
            out[r * feat..(r + 1) * feat].iter_mut().for_each(|x| *x /= k);
        }
        let rg = self.rg(&[a]);
        Ok(self.push(
            n,
            feat,
            out,
            rg,
            Op::MeanTime {
                a,
                feat,
                valid: valid.to_vec(),
            },
        ))
    }

    /// `prev + mask * (new - prev)` with one mask value per row.
    pub fn mask_blend(&mut self, prev: Var, new: Var, mask: &[f64]) -> Result<Var, NeuralError> {
        let (n, m) = self.same_shape("mask_blend", prev, new)?;
        if mask.len() != n {
            return Err(shape_err(
                "mask_blend",
                format!("{} mask values for {n} rows", mask.len()),
            ));
        }
        let (pv, nv) = (&self.nodes[prev.0].value, &self.nodes[new.0].value);
        let out = (0..n * m).map(|i| pv[i] + mask[i / m] * (nv[i] - pv[i])).collect();
        let rg = self.rg(&[prev, new]);
        Ok(self.push(
            n,
            m,
            out,
            rg,
            Op::MaskBlend {
                prev,
                new,
                mask: mask.to_vec(),
            },
        ))
    }

    /// Element-wise product with a fixed mask (already scaled by
    /// `1 / (1 - rate)` for inverted dropout).
    pub fn dropout_with_mask(&mut self, a: Var, mask: Vec<f64>) -> Result<Var, NeuralError> {
        let (n, m) = self.shape(a);
        if mask.len() != n * m {
            return Err(shape_err("dropout", format!("{} mask values for {n}x{m}", mask.len())));
        }
        let out = self.nodes[a.0].value.iter().zip(&mask).map(|(x, k)| x * k).collect();
        let rg = self.rg(&[a]);
        Ok(self.push(n, m, out, rg, Op::Dropout { a, mask }))
    }

    /// Mean binary cross-entropy of `n x 1` logits against 0/1 targets.
    pub fn bce_with_logits(&mut self, logits: Var, targets: &[f64]) -> Result<Var, NeuralError> {
        let (n, m) = self.shape(logits);
        if m != 1 || targets.len() != n || n == 0 {
            return Err(shape_err(
                "bce_with_logits",
                format!("{n}x{m} logits, {} targets", targets.len()),
            ));
        }
        let lv = &self.nodes[logits.0].value;
        let total: f64 = lv
            .iter()
            .zip(targets)
            .map(|(&x, &y)| x.max(0.0) - x * y + ln_1p(exp(-x.abs())))
            .sum();
        let rg = self.rg(&[logits]);
        Ok(self.push(
            1,
            1,
            vec![total / n as f64],
            rg,
            Op::BceWithLogits {
                logits,
                targets: targets.to_vec(),
            },
        ))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.nodes[a.0].value.iter().sum();
        let rg = self.rg(&[a]);
        self.push(1, 1, vec![s], rg, Op::Sum(a))
    }

    /// `X W` for sparse rows `X` given as `(indices, values)`.
    pub fn sparse_linear(&mut self, rows: Vec<(Vec<u32>, Vec<f64>)>, w: Var) -> Result<Var, NeuralError> {
        let (d, o) = self.shape(w);
        let wv = &self.nodes[w.0].value;
        let mut out = vec![0.0; rows.len() * o];
        for (r, (idx, vals)) in rows.iter().enumerate() {
            if idx.len() != vals.len() {
                return Err(shape_err("sparse_linear", "index/value length mismatch".into()));
            }
            for (&i, &v) in idx.iter().zip(vals) {
                let i = i as usize;
                if i >= d {
                    return Err(shape_err("sparse_linear", format!("index {i} for {d} rows")));
                }
                for k in 0..o {
                    out[r * o + k] += v * wv[i * o + k];
                }
            }
        }
        let n = rows.len();
        let rg = self.rg(&[w]);
        Ok(self.push(n, o, out, rg, Op::SparseLinear { w, rows }))
    }

    /// Reverse pass from a `1 x 1` node. Leaf gradients are added to what
    /// they already hold.
    pub fn backward(&mut self, loss: Var) -> Result<(), NeuralError> {
        let (r, c) = self.shape(loss);
        if (r, c) != (1, 1) {
            return Err(NeuralError::NonScalarLoss { rows: r, cols: c });
        }
        let mut adj: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        adj[loss.0] = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            if !self.nodes[i].requires_grad {
                continue;
            }
            if let Op::Leaf = self.nodes[i].op {
                if let Some(acc) = &mut self.nodes[i].grad {
                    acc.iter_mut().zip(&g).for_each(|(a, x)| *a += x);
                }
                continue;
            }
            self.propagate(i, &g, &mut adj);
        }
        Ok(())
    }

    fn propagate(&self, i: usize, g: &[f64], adj: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[i];
        let (n, m) = (node.rows, node.cols);
        let nodes = &self.nodes;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let k = nodes[a.0].cols;
                if let Some(da) = slot(nodes, adj, *a) {
                    // dA = G B^T
                    let bv = &nodes[b.0].value;
                    for r in 0..n {
                        for j in 0..m {
                            let gv = g[r * m + j];
                            if gv != 0.0 {
                                for t in 0..k {
                                    da[r * k + t] += gv * bv[t * m + j];
                                }
                            }
                        }
                    }
                }
                if let Some(db) = slot(nodes, adj, *b) {
                    // dB = A^T G
                    let av = &nodes[a.0].value;
                    for r in 0..n {
                        for t in 0..k {
                            let x = av[r * k + t];
                            if x != 0.0 {
                                let row = &mut db[t * m..(t + 1) * m];
                                row.iter_mut()
                                    .zip(&g[r * m..(r + 1) * m])
                                    .for_each(|(d, gv)| *d += x * gv);
                            }
                        }
                    }
                }
            }
            Op::AddRowBias(a, bias) => {
                if let Some(da) = slot(nodes, adj, *a) {
                    da.iter_mut().zip(g).for_each(|(d, x)| *d += x);
                }
                if let Some(db) = slot(nodes, adj, *bias) {
                    for row in g.chunks(m) {
                        db.iter_mut().zip(row).for_each(|(d, x)| *d += x);
                    }
                }
            }
            Op::Add(a, b) | Op::Sub(a, b) => {
                let sign = if matches!(node.op, Op::Sub(..)) { -1.0 } else { 1.0 };
                if let Some(da) = slot(nodes, adj, *a) {
                    da.iter_mut().zip(g).for_each(|(d, x)| *d += x);
                }
                if let Some(db) = slot(nodes, adj, *b) {
                    db.iter_mut().zip(g).for_each(|(d, x)| *d += sign * x);
                }
            }
            Op::Mul(a, b) => {
                if let Some(da) = slot(nodes, adj, *a) {
                    da.iter_mut()
                        .zip(g)
                        .zip(&nodes[b.0].value)
                        .for_each(|((d, x), y)| *d += x * y);
                }
                if let Some(db) = slot(nodes, adj, *b) {
                    db.iter_mut()
                        .zip(g)
                        .zip(&nodes[a.0].value)
                        .for_each(|((d, x), y)| *d += x * y);
                }
            }
            Op::Scale(a, s) => {
                if let Some(da) = slot(nodes, adj, *a) {
                    da.iter_mut().zip(g).for_each(|(d, x)| *d += s * x);
                }
            }
            Op::Sigmoid(a) | Op::Tanh(a) | Op::Relu(a) => {
                let y = &node.value;
                let local: fn(f64) -> f64 = match node.op {
                    Op::Sigmoid(_) => |y| y * (1.0 - y),
                    Op::Tanh(_) => |y| 1.0 - y * y,
                    _ => |y| if y > 0.0 { 1.0 } else { 0.0 },
                };
                if let Some(da) = slot(nodes, adj, *a) {
                    da.iter_mut().zip(g).zip(y).for_each(|((d, x), &y)| *d += x * local(y));
                }
            }
            Op::SliceCols { a, start } => {
                let src = nodes[a.0].cols;
                if let Some(da) = slot(nodes, adj, *a) {
                    for r in 0..n {
                        da[r * src + start..r * src + start + m]
                            .iter_mut()
                            .zip(&g[r * m..(r + 1) * m])
                            .for_each(|(d, x)| *d += x);
                    }
                }
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for v in parts {
                    let c = nodes[v.0].cols;
                    if let Some(dv) = slot(nodes, adj, *v) {
                        for r in 0..n {
                            dv[r * c..(r + 1) * c]
                                .iter_mut()
                                .zip(&g[r * m + offset..r * m + offset + c])
                                .for_each(|(d, x)| *d += x);
                        }
                    }
                    offset += c;
                }
            }
            Op::Conv1d {
                x,
                w,
                b,
                window,
                embed,
                positions,
            } => {
                let maps = nodes[w.0].cols;
                let width = nodes[x.0].cols;
                let span = window * embed;
                let (xv, wv) = (&nodes[x.0].value, &nodes[w.0].value);
                if let Some(db) = slot(nodes, adj, *b) {
                    for chunk in g.chunks(maps) {
                        db.iter_mut().zip(chunk).for_each(|(d, v)| *d += v);
                    }
                }
                if let Some(dw) = slot(nodes, adj, *w) {
                    for r in 0..n {
                        for p in 0..*positions {
                            let go = &g[(r * positions + p) * maps..(r * positions + p + 1) * maps];
                            let win = &xv[r * width + p * embed..r * width + p * embed + span];
                            for (t, &xi) in win.iter().enumerate() {
                                if xi != 0.0 {
                                    dw[t * maps..(t + 1) * maps]
                                        .iter_mut()
                                        .zip(go)
                                        .for_each(|(d, gv)| *d += xi * gv);
                                }
                            }
                        }
                    }
                }
                if let Some(dx) = slot(nodes, adj, *x) {
                    for r in 0..n {
                        for p in 0..*positions {
                            let go = &g[(r * positions + p) * maps..(r * positions + p + 1) * maps];
                            let dst = &mut dx[r * width + p * embed..r * width + p * embed + span];
                            for (t, d) in dst.iter_mut().enumerate() {
                                *d += wv[t * maps..(t + 1) * maps]
                                    .iter()
                                    .zip(go)
                                    .map(|(a, b)| a * b)
                                    .sum::<f64>();
                            }
                        }
                    }
                }
            }
            Op::MaxTime { a, argmax } => {
                let src = nodes[a.0].cols;
                if let Some(da) = slot(nodes, adj, *a) {
                    for r in 0..n {
                        for f in 0..m {
                            da[r * src + argmax[r * m + f]] += g[r * m + f];
                        }
                    }
                }
            }
            Op::MeanTime { a, feat, valid } => {
                let src = nodes[a.0].cols;
                if let Some(da) = slot(nodes, adj, *a) {
                    for r in 0..n {
                        let k = valid[r] as f64;
                        for p in 0..valid[r] {
                            for f in 0..*feat {
                                da[r * src + p * feat + f] += g[r * m + f] / k;
                            }
                        }
                    }
                }
            }
            Op::MaskBlend { prev, new, mask } => {
                if let Some(dp) = slot(nodes, adj, *prev) {
                    dp.iter_mut()
                        .zip(g)
                        .enumerate()
                        .for_each(|(i, (d, x))| *d += (1.0 - mask[i / m]) * x);
                }
                if let Some(dn) = slot(nodes, adj, *new) {
                    dn.iter_mut()
                        .zip(g)
                        .enumerate()
                        .for_each(|(i, (d, x))| *d += mask[i / m] * x);
                }
            }
            Op::Dropout { a, mask } => {
                if let Some(da) = slot(nodes, adj, *a) {
                    da.iter_mut().zip(g).zip(mask).for_each(|((d, x), k)| *d += x * k);
                }
            }
            Op::BceWithLogits { logits, targets } => {
                let lv = &nodes[logits.0].value;
                let scale = g[0] / targets.len() as f64;
                if let Some(dl) = slot(nodes, adj, *logits) {
                    dl.iter_mut()
                        .zip(lv)
                        .zip(targets)
                        .for_each(|((d, &x), &y)| *d += scale * (sigmoid(x) - y));
                }
            }
            Op::Sum(a) => {
                if let Some(da) = slot(nodes, adj, *a) {
                    da.iter_mut().for_each(|d| *d += g[0]);
                }
            }
            Op::SparseLinear { w, rows } => {
                let o = nodes[w.0].cols;
                if let Some(dw) = slot(nodes, adj, *w) {
                    for (r, (idx, vals)) in rows.iter().enumerate() {
                        for (&i, &v) in idx.iter().zip(vals) {
                            for k in 0..o {
                                dw[i as usize * o + k] += v * g[r * o + k];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint buffer of `v`, created on first use; `None` when `v` needs no
/// gradient.
fn slot<'a>(nodes: &[Node], adj: &'a mut [Option<Vec<f64>>], v: Var) -> Option<&'a mut Vec<f64>> {
    if !nodes[v.0].requires_grad {
        return None;
    }
    let len = nodes[v.0].value.len();
    Some(adj[v.0].get_or_insert_with(|| vec![0.0; len]))
}

/// `out += a (n x k) * b (k x m)`, row-major.
fn matmul_into(a: &[f64], b: &[f64], out: &mut [f64], n: usize, k: usize, m: usize) {
    for r in 0..n {
        let dst = &mut out[r * m..(r + 1) * m];
        for t in 0..k {
            let x = a[r * k + t];
            if x != 0.0 {
                dst.iter_mut()
                    .zip(&b[t * m..(t + 1) * m])
                    .for_each(|(d, y)| *d += x * y);
            }
        }
    }
}
