use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{Graph, NeuralError, Var};
use crate::math::sqrt;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    /// Row-major values.
    pub data: Vec<f64>,
    pub requires_grad: bool,
    pub grad: Option<Vec<f64>>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>, requires_grad: bool) -> Result<Self, NeuralError> {
        let size: usize = shape.iter().product();
        if shape.is_empty() || size != data.len() {
            return Err(NeuralError::Shape(format!("{} values for shape {shape:?}", data.len())));
        }
        let grad = requires_grad.then(|| vec![0.0; size]);
        Ok(Tensor {
            shape,
            data,
            requires_grad,
            grad,
        })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let size = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; size],
            requires_grad: true,
            grad: Some(vec![0.0; size]),
        }
    }

    /// Uniform Glorot initialization for a `fan_in x fan_out` weight.
    pub fn glorot<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let limit = sqrt(6.0 / (fan_in + fan_out) as f64);
        let mut t = Tensor::zeros(vec![fan_in, fan_out]);
        t.data.iter_mut().for_each(|x| *x = rng.random_range(-limit..limit));
        t
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// The tensor viewed as a matrix: rank 1 is a single row, higher
    /// ranks fold every dimension after the first into columns.
    pub fn matrix_shape(&self) -> (usize, usize) {
        match self.shape.as_slice() {
            [n] => (1, *n),
            [r, rest @ ..] => (*r, rest.iter().product()),
            [] => (0, 0),
        }
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = &mut self.grad {
            g.iter_mut().for_each(|x| *x = 0.0);
        }
    }
}

/// Named parameters of a model, in a fixed order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    entries: Vec<(String, Tensor)>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet { entries: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, tensor: Tensor) {
        self.entries.push((name.into(), tensor));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.entries.iter_mut().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.entries.iter_mut().map(|(n, t)| (n.as_str(), t))
    }

    pub fn total_len(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.len()).sum()
    }

    /// Replaces values with those of `other`, which must hold the same
    /// names and shapes.
    pub fn load(&mut self, other: &ParamSet) -> Result<(), NeuralError> {
        if other.len() != self.len() {
            return Err(NeuralError::Shape(format!(
                "{} tensors, expected {}",
                other.len(),
                self.len()
            )));
        }
        for ((name, t), (oname, o)) in self.entries.iter_mut().zip(&other.entries) {
            if name != oname {
                return Err(NeuralError::UnknownParam(oname.clone()));
            }
            if t.shape != o.shape {
                return Err(NeuralError::Shape(format!("{name}: {:?} vs {:?}", o.shape, t.shape)));
            }
            t.data.copy_from_slice(&o.data);
        }
        Ok(())
    }

    /// Adds every tensor to `g` as a leaf, in order.
    pub fn bind(&self, g: &mut Graph) -> Result<Vec<Var>, NeuralError> {
        self.entries
            .iter()
            .map(|(_, t)| {
                let (r, c) = t.matrix_shape();
                g.leaf(r, c, t.data.clone(), t.requires_grad)
            })
            .collect()
    }

    /// Adds the leaf gradients of a bound graph into the tensors.
    pub fn collect_grads(&mut self, g: &Graph, vars: &[Var]) {
        for ((_, t), v) in self.entries.iter_mut().zip(vars) {
            if let (Some(acc), Some(src)) = (&mut t.grad, g.grad(*v)) {
                acc.iter_mut().zip(src).for_each(|(a, s)| *a += s);
            }
        }
    }

    pub fn zero_grads(&mut self) {
        self.entries.iter_mut().for_each(|(_, t)| t.zero_grad());
    }
}
