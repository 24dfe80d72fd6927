//! Central finite differences against reverse-mode gradients. Every check
//! takes a case number, draws its own random shapes from it and returns
//! the worst relative error over all inputs.

use rand::Rng;
use revembed_core::neural::{dropout, logistic_loss, logistic_loss_grad, lstm_cell, Graph, NeuralError, Var};
use revembed_core::rng::{seeded, SeededRng};

pub const H: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;
pub const CASES: u64 = 6;

pub struct Input {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

fn random(rng: &mut SeededRng, rows: usize, cols: usize) -> Input {
    Input {
        rows,
        cols,
        data: (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect(),
    }
}

/// Reduces `out` to a scalar through a fixed random weighting so every
/// output component contributes a distinct amount.
fn project(g: &mut Graph, out: Var, seed: u64) -> Result<Var, NeuralError> {
    let (r, c) = g.shape(out);
    let mut rng = seeded(seed ^ 0x5eed);
    let w = g.constant(r, c, (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect())?;
    let prod = g.mul(out, w)?;
    Ok(g.sum(prod))
}

fn evaluate<F>(inputs: &[Input], build: &F) -> Vec<Vec<f64>>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var, NeuralError>,
{
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs
        .iter()
        .map(|x| g.leaf(x.rows, x.cols, x.data.clone(), true).unwrap())
        .collect();
    let loss = build(&mut g, &vars).unwrap();
    g.backward(loss).unwrap();
    vars.iter().map(|&v| g.grad(v).unwrap().to_vec()).collect()
}

fn loss_at<F>(inputs: &[Input], build: &F) -> f64
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var, NeuralError>,
{
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs
        .iter()
        .map(|x| g.leaf(x.rows, x.cols, x.data.clone(), false).unwrap())
        .collect();
    let loss = build(&mut g, &vars).unwrap();
    g.scalar(loss)
}

pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt() + b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

/// Checks every input of `build`, returning the worst relative error.
pub fn gradcheck<F>(mut inputs: Vec<Input>, build: F) -> f64
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var, NeuralError>,
{
    let analytic = evaluate(&inputs, &build);
    let mut worst: f64 = 0.0;
    for k in 0..inputs.len() {
        let mut numeric = vec![0.0; inputs[k].data.len()];
        for i in 0..numeric.len() {
            let x0 = inputs[k].data[i];
            inputs[k].data[i] = x0 + H;
            let up = loss_at(&inputs, &build);
            inputs[k].data[i] = x0 - H;
            let down = loss_at(&inputs, &build);
            inputs[k].data[i] = x0;
            numeric[i] = (up - down) / (2.0 * H);
        }
        worst = worst.max(relative_error(&analytic[k], &numeric));
    }
    worst
}

fn shape(rng: &mut SeededRng, lo: usize, hi: usize) -> usize {
    rng.random_range(lo..=hi)
}

fn lengths(rng: &mut SeededRng, n: usize, steps: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(1..=steps)).collect()
}

pub fn linear_layer(case: u64) -> f64 {
    let mut rng = seeded(case);
    let (n, d, o) = (shape(&mut rng, 1, 6), shape(&mut rng, 1, 7), shape(&mut rng, 1, 4));
    let inputs = vec![random(&mut rng, n, d), random(&mut rng, d, o), random(&mut rng, 1, o)];
    gradcheck(inputs, |g, v| {
        let z = g.matmul(v[0], v[1])?;
        let z = g.add_row_bias(z, v[2])?;
        project(g, z, case)
    })
}

pub fn three_layer_mlp(case: u64) -> f64 {
    let mut rng = seeded(100 + case);
    let (n, d, h1, h2) = (
        shape(&mut rng, 2, 5),
        shape(&mut rng, 2, 6),
        shape(&mut rng, 2, 5),
        shape(&mut rng, 2, 5),
    );
    let inputs = vec![
        random(&mut rng, n, d),
        random(&mut rng, d, h1),
        random(&mut rng, 1, h1),
        random(&mut rng, h1, h2),
        random(&mut rng, 1, h2),
        random(&mut rng, h2, 1),
    ];
    let targets: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
    gradcheck(inputs, |g, v| {
        let a = g.matmul(v[0], v[1])?;
        let a = g.add_row_bias(a, v[2])?;
        let a = g.tanh(a);
        let b = g.matmul(a, v[3])?;
        let b = g.add_row_bias(b, v[4])?;
        let b = g.sigmoid(b);
        let out = g.matmul(b, v[5])?;
        g.bce_with_logits(out, &targets)
    })
}

pub fn sparse_linear_layer(case: u64) -> f64 {
    let mut rng = seeded(200 + case);
    let (n, d) = (shape(&mut rng, 1, 5), shape(&mut rng, 3, 9));
    let rows: Vec<(Vec<u32>, Vec<f64>)> = (0..n)
        .map(|_| {
            let idx: Vec<u32> = (0..d as u32).filter(|_| rng.random_bool(0.5)).collect();
            let val = idx.iter().map(|_| rng.random_range(-2.0..2.0)).collect();
            (idx, val)
        })
        .collect();
    let inputs = vec![random(&mut rng, d, 1)];
    gradcheck(inputs, |g, v| {
        let z = g.sparse_linear(rows.clone(), v[0])?;
        project(g, z, case)
    })
}

pub fn convolution_over_time(case: u64) -> f64 {
    let mut rng = seeded(300 + case);
    let (n, e, k, f) = (
        shape(&mut rng, 1, 3),
        shape(&mut rng, 1, 4),
        shape(&mut rng, 1, 3),
        shape(&mut rng, 1, 4),
    );
    let steps = k + shape(&mut rng, 0, 4);
    let inputs = vec![
        random(&mut rng, n, steps * e),
        random(&mut rng, k * e, f),
        random(&mut rng, 1, f),
    ];
    gradcheck(inputs, |g, v| {
        let z = g.conv1d(v[0], v[1], v[2], e, k)?;
        project(g, z, case)
    })
}

pub fn lstm_cell_step(case: u64) -> f64 {
    let mut rng = seeded(400 + case);
    let (n, d, h) = (shape(&mut rng, 1, 4), shape(&mut rng, 1, 5), shape(&mut rng, 1, 4));
    let inputs = vec![
        random(&mut rng, n, d),
        random(&mut rng, n, h),
        random(&mut rng, n, h),
        random(&mut rng, d, 4 * h),
        random(&mut rng, h, 4 * h),
        random(&mut rng, 1, 4 * h),
    ];
    gradcheck(inputs, |g, v| {
        let (h_new, c_new) = lstm_cell(g, v[0], v[1], v[2], v[3], v[4], v[5], h)?;
        let both = g.concat_cols(&[h_new, c_new])?;
        project(g, both, case)
    })
}

/// Two chained cells with a partial mask, as in a padded batch.
pub fn masked_recurrence(case: u64) -> f64 {
    let mut rng = seeded(450 + case);
    let (d, h) = (shape(&mut rng, 1, 3), shape(&mut rng, 1, 3));
    let n = 3;
    let inputs = vec![
        random(&mut rng, n, 2 * d),
        random(&mut rng, d, 4 * h),
        random(&mut rng, h, 4 * h),
        random(&mut rng, 1, 4 * h),
    ];
    gradcheck(inputs, |g, v| {
        let mut hs = g.constant(n, h, vec![0.0; n * h])?;
        let mut cs = g.constant(n, h, vec![0.0; n * h])?;
        for (t, mask) in [[1.0, 1.0, 1.0], [1.0, 0.0, 1.0]].iter().enumerate() {
            let x = g.slice_cols(v[0], t * d, d)?;
            let (h_new, c_new) = lstm_cell(g, x, hs, cs, v[1], v[2], v[3], h)?;
            cs = g.mask_blend(cs, c_new, mask)?;
            hs = g.mask_blend(hs, h_new, mask)?;
        }
        project(g, hs, case)
    })
}

pub fn max_pooling(case: u64) -> f64 {
    let mut rng = seeded(500 + case);
    let (n, f, steps) = (shape(&mut rng, 1, 4), shape(&mut rng, 1, 4), shape(&mut rng, 1, 5));
    let valid = lengths(&mut rng, n, steps);
    let inputs = vec![random(&mut rng, n, steps * f)];
    gradcheck(inputs, |g, v| {
        let z = g.max_time(v[0], f, &valid)?;
        project(g, z, case)
    })
}

pub fn mean_pooling(case: u64) -> f64 {
    let mut rng = seeded(600 + case);
    let (n, f, steps) = (shape(&mut rng, 1, 4), shape(&mut rng, 1, 4), shape(&mut rng, 1, 5));
    let valid = lengths(&mut rng, n, steps);
    let inputs = vec![random(&mut rng, n, steps * f)];
    gradcheck(inputs, |g, v| {
        let z = g.mean_time(v[0], f, &valid)?;
        project(g, z, case)
    })
}

pub fn relu_then_pooling(case: u64) -> f64 {
    let mut rng = seeded(650 + case);
    let (n, f, steps) = (shape(&mut rng, 1, 3), shape(&mut rng, 1, 3), shape(&mut rng, 2, 5));
    let valid = lengths(&mut rng, n, steps);
    let inputs = vec![random(&mut rng, n, steps * f)];
    gradcheck(inputs, |g, v| {
        let a = g.relu(v[0]);
        let avg = g.mean_time(a, f, &valid)?;
        let max = g.max_time(v[0], f, &valid)?;
        let z = g.concat_cols(&[avg, max])?;
        project(g, z, case)
    })
}

/// Inference path: dropout is the identity.
pub fn dropout_off(case: u64) -> f64 {
    let mut rng = seeded(700 + case);
    let (n, d) = (shape(&mut rng, 1, 5), shape(&mut rng, 1, 5));
    let inputs = vec![random(&mut rng, n, d)];
    gradcheck(inputs, |g, v| {
        let z = dropout(g, v[0], 0.3, None)?;
        let z = g.tanh(z);
        project(g, z, case)
    })
}

/// Training path with a fixed mask.
pub fn dropout_mask(case: u64) -> f64 {
    let mut rng = seeded(750 + case);
    let (n, d) = (shape(&mut rng, 1, 5), shape(&mut rng, 1, 5));
    let inputs = vec![random(&mut rng, n, d)];
    let mask: Vec<f64> = (0..n * d)
        .map(|_| if rng.random_bool(0.7) { 1.0 / 0.7 } else { 0.0 })
        .collect();
    gradcheck(inputs, |g, v| {
        let z = g.dropout_with_mask(v[0], mask.clone())?;
        project(g, z, case)
    })
}

pub fn logistic_loss_on_logits(case: u64) -> f64 {
    let mut rng = seeded(800 + case);
    let n = shape(&mut rng, 1, 8);
    let targets: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 }).collect();
    let mut logits = random(&mut rng, n, 1);
    logits.data.iter_mut().for_each(|x| *x *= 6.0);
    gradcheck(vec![logits], |g, v| g.bce_with_logits(v[0], &targets))
}

/// The closed-form loss on probabilities, at 20 random points.
pub fn logistic_loss_on_probabilities(case: u64) -> f64 {
    let mut rng = seeded(900 + case);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let p: f64 = rng.random_range(0.01..0.99);
        let y = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
        let numeric = (logistic_loss(p + H, y) - logistic_loss(p - H, y)) / (2.0 * H);
        worst = worst.max(relative_error(&[logistic_loss_grad(p, y)], &[numeric]));
    }
    worst
}

pub fn elementwise_ops(case: u64) -> f64 {
    let mut rng = seeded(1000 + case);
    let (n, d) = (shape(&mut rng, 1, 4), shape(&mut rng, 1, 4));
    let inputs = vec![random(&mut rng, n, d), random(&mut rng, n, d)];
    gradcheck(inputs, |g, v| {
        let a = g.sub(v[0], v[1])?;
        let b = g.mul(a, v[0])?;
        let c = g.scale(b, 0.7);
        let s = g.slice_cols(c, 0, d.min(2))?;
        let s = g.sigmoid(s);
        let z = g.concat_cols(&[s, c])?;
        project(g, z, case)
    })
}

pub type Check = fn(u64) -> f64;

pub const LAYERS: [(&str, Check); 14] = [
    ("linear", linear_layer),
    ("mlp", three_layer_mlp),
    ("sparse linear", sparse_linear_layer),
    ("conv over time", convolution_over_time),
    ("lstm cell", lstm_cell_step),
    ("masked recurrence", masked_recurrence),
    ("max pooling", max_pooling),
    ("mean pooling", mean_pooling),
    ("relu pooling", relu_then_pooling),
    ("dropout off", dropout_off),
    ("dropout mask", dropout_mask),
    ("logistic loss (logits)", logistic_loss_on_logits),
    ("logistic loss (probabilities)", logistic_loss_on_probabilities),
    ("elementwise", elementwise_ops),
];

/// Worst error of `check` over cases `0..CASES`.
pub fn worst(check: Check) -> f64 {
    (0..CASES).map(check).fold(0.0, f64::max)
}
