//! Reverse-mode automatic differentiation on a per-pass tape, plus the
//! finite-difference gradient checker used as the universal correctness
//! oracle for every differentiable operation in the crate.
//!
//! A [`Graph`] records nodes in the order they are created, so node index
//! order is already a topological order. [`Graph::backward`] walks the tape
//! in reverse, invoking each node's backward rule and summing contributions
//! into parent gradients. Gradients live in a separate [`Gradients`] value,
//! so a fresh backward pass can never see stale accumulation.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{gelu, gelu_grad, relu, BinaryKind, Tensor, UnaryKind};

/// Handle to a node on a [`Graph`] tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub(crate) usize);

/// Backward rule: maps (output grad, output value, parent values) to one
/// gradient tensor per parent, in parent order.
type BackwardFn<T> =
    Box<dyn Fn(&Tensor<T>, &Tensor<T>, &[&Tensor<T>]) -> Result<Vec<Tensor<T>>>>;

struct Node<T: Scalar> {
    value: Tensor<T>,
    parents: Vec<NodeId>,
    backward: Option<BackwardFn<T>>,
    requires_grad: bool,
}

/// Tape of one forward pass.
pub struct Graph<T: Scalar> {
    nodes: Vec<Node<T>>,
}

/// Gradients produced by one backward pass, indexed by [`NodeId`].
pub struct Gradients<T: Scalar> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient of the root with respect to `id`, if it was reachable and
    /// requested gradients.
    pub fn get(&self, id: NodeId) -> Option<&Tensor<T>> {
        self.grads.get(id.0).and_then(|g| g.as_ref())
    }

    /// Removes and returns the gradient for `id`.
    pub fn take(&mut self, id: NodeId) -> Option<Tensor<T>> {
        self.grads.get_mut(id.0).and_then(|g| g.take())
    }
}

/// Sums `grad` down to `shape` under the trailing-dimension broadcast rule,
/// undoing the stretch a forward broadcast performed.
fn reduce_to_shape<T: Scalar>(grad: &Tensor<T>, shape: &[usize]) -> Result<Tensor<T>> {
    if grad.shape() == shape {
        return Ok(grad.clone());
    }
    let mut g = grad.clone();
    // Collapse leading dimensions the smaller shape does not have.
    while g.rank() > shape.len() {
        g = g.reduce(crate::tensor::ReduceKind::Sum, Some(0))?;
        if g.rank() == 0 {
            g = g.reshape(&[1])?;
            break;
        }
    }
    // Sum over dimensions that were stretched from size 1. Reducing removes
    // the axis, so reshape back to keep rank aligned.
    for k in 0..shape.len() {
        if shape[k] == 1 && g.shape()[k] != 1 {
            let mut target = g.shape().to_vec();
            target[k] = 1;
            g = g
                .reduce(crate::tensor::ReduceKind::Sum, Some(k))?
                .reshape(&target)?;
        }
    }
    g.reshape(shape)
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Records an input node. Only nodes created with `requires_grad = true`
    /// (and their descendants) participate in the backward pass.
    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            value,
            parents: Vec::new(),
            backward: None,
            requires_grad,
        });
        id
    }

    /// Constant input; gradients never flow into it.
    pub fn constant(&mut self, value: Tensor<T>) -> NodeId {
        self.leaf(value, false)
    }

    pub fn value(&self, id: NodeId) -> &Tensor<T> {
        &self.nodes[id.0].value
    }

    pub fn requires_grad(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    /// Records an op node. `backward` is dropped when no parent tracks
    /// gradients, pruning dead subgraphs from the backward walk.
    pub(crate) fn push(
        &mut self,
        value: Tensor<T>,
        parents: Vec<NodeId>,
        backward: BackwardFn<T>,
    ) -> NodeId {
        let requires_grad = parents.iter().any(|p| self.nodes[p.0].requires_grad);
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            value,
            parents,
            backward: if requires_grad { Some(backward) } else { None },
            requires_grad,
        });
        id
    }

    fn binary(&mut self, kind: BinaryKind, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.nodes[a.0].value.binary(kind, &self.nodes[b.0].value)?;
        let backward: BackwardFn<T> = Box::new(move |g, _out, parents| {
            let (pa, pb) = (parents[0], parents[1]);
            let (ga, gb) = match kind {
                BinaryKind::Add => (g.clone(), g.clone()),
                BinaryKind::Sub => (g.clone(), g.unary(UnaryKind::Neg)?),
                BinaryKind::Mul => (
                    g.binary(BinaryKind::Mul, pb)?,
                    g.binary(BinaryKind::Mul, pa)?,
                ),
                BinaryKind::Div => {
                    let ga = g.binary(BinaryKind::Div, pb)?;
                    // d(a/b)/db = -a / b^2
                    let gb = ga
                        .binary(BinaryKind::Mul, pa)?
                        .binary(BinaryKind::Div, pb)?
                        .unary(UnaryKind::Neg)?;
                    (ga, gb)
                }
            };
            Ok(vec![
                reduce_to_shape(&ga, pa.shape())?,
                reduce_to_shape(&gb, pb.shape())?,
            ])
        });
        Ok(self.push(value, vec![a, b], backward))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary(BinaryKind::Add, a, b)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary(BinaryKind::Sub, a, b)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary(BinaryKind::Mul, a, b)
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary(BinaryKind::Div, a, b)
    }

    pub fn neg(&mut self, x: NodeId) -> Result<NodeId> {
        let value = self.nodes[x.0].value.unary(UnaryKind::Neg)?;
        let backward: BackwardFn<T> =
            Box::new(|g, _, _| Ok(vec![g.unary(UnaryKind::Neg)?]));
        Ok(self.push(value, vec![x], backward))
    }

    pub fn exp(&mut self, x: NodeId) -> Result<NodeId> {
        let value = self.nodes[x.0].value.unary(UnaryKind::Exp)?;
        let backward: BackwardFn<T> =
            Box::new(|g, out, _| Ok(vec![g.binary(BinaryKind::Mul, out)?]));
        Ok(self.push(value, vec![x], backward))
    }

    pub fn square(&mut self, x: NodeId) -> Result<NodeId> {
        let value = self.nodes[x.0].value.unary(UnaryKind::Square)?;
        let backward: BackwardFn<T> = Box::new(|g, _, parents| {
            let two = parents[0].map(|v| v + v);
            Ok(vec![g.binary(BinaryKind::Mul, &two)?])
        });
        Ok(self.push(value, vec![x], backward))
    }

    pub fn sqrt(&mut self, x: NodeId) -> Result<NodeId> {
        let value = self.nodes[x.0].value.unary(UnaryKind::Sqrt)?;
        let backward: BackwardFn<T> = Box::new(|g, out, _| {
            // d sqrt(x) = 1 / (2 sqrt(x)) = 0.5 / out
            let half_inv = out.map(|y| T::cast(0.5) / y);
            Ok(vec![g.binary(BinaryKind::Mul, &half_inv)?])
        });
        Ok(self.push(value, vec![x], backward))
    }

    pub fn relu(&mut self, x: NodeId) -> Result<NodeId> {
        let value = self.nodes[x.0].value.map(relu);
        let backward: BackwardFn<T> = Box::new(|g, _, parents| {
            // Subgradient at 0 is 0.
            let mask = parents[0].map(|v| if v > T::zero() { T::one() } else { T::zero() });
            Ok(vec![g.binary(BinaryKind::Mul, &mask)?])
        });
        Ok(self.push(value, vec![x], backward))
    }

    pub fn gelu(&mut self, x: NodeId) -> Result<NodeId> {
        let value = self.nodes[x.0].value.map(gelu);
        let backward: BackwardFn<T> = Box::new(|g, _, parents| {
            let dg = parents[0].map(gelu_grad);
            Ok(vec![g.binary(BinaryKind::Mul, &dg)?])
        });
        Ok(self.push(value, vec![x], backward))
    }

    /// Multiplication by a compile-time constant scalar.
    pub fn scale(&mut self, x: NodeId, c: T) -> Result<NodeId> {
        let value = self.nodes[x.0].value.map(|v| v * c);
        let backward: BackwardFn<T> = Box::new(move |g, _, _| Ok(vec![g.map(|v| v * c)]));
        Ok(self.push(value, vec![x], backward))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.nodes[a.0].value.matmul(&self.nodes[b.0].value)?;
        let backward: BackwardFn<T> = Box::new(|g, _, parents| {
            let (pa, pb) = (parents[0], parents[1]);
            let ga = g.matmul(&pb.transpose2()?)?;
            let gb = pa.transpose2()?.matmul(g)?;
            Ok(vec![ga, gb])
        });
        Ok(self.push(value, vec![a, b], backward))
    }

    pub fn reshape(&mut self, x: NodeId, shape: &[usize]) -> Result<NodeId> {
        let value = self.nodes[x.0].value.reshape(shape)?;
        let backward: BackwardFn<T> =
            Box::new(|g, _, parents| Ok(vec![g.reshape(parents[0].shape())?]));
        Ok(self.push(value, vec![x], backward))
    }

    pub fn sum_all(&mut self, x: NodeId) -> Result<NodeId> {
        let value = self.nodes[x.0].value.reduce(crate::tensor::ReduceKind::Sum, None)?;
        let backward: BackwardFn<T> = Box::new(|g, _, parents| {
            let gv = g.item()?;
            Ok(vec![Tensor::full(parents[0].shape(), gv)?])
        });
        Ok(self.push(value, vec![x], backward))
    }

    pub fn mean_all(&mut self, x: NodeId) -> Result<NodeId> {
        let n = self.nodes[x.0].value.len();
        let s = self.sum_all(x)?;
        self.scale(s, T::one() / T::cast(n as f64))
    }

    /// Reverse pass from a scalar root. Contributions from nodes reached
    /// along multiple paths accumulate by summation.
    pub fn backward(&self, root: NodeId) -> Result<Gradients<T>> {
        let root_value = &self.nodes[root.0].value;
        if root_value.len() != 1 {
            return Err(Error::InvalidArgument(format!(
                "backward root must be scalar, got shape {:?}",
                root_value.shape()
            )));
        }
        if !self.nodes[root.0].requires_grad {
            return Err(Error::InvalidArgument(String::from(
                "backward root does not depend on any gradient-tracking leaf",
            )));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root.0] = Some(Tensor::full(root_value.shape().to_vec().as_slice(), T::one()).unwrap_or_else(|_| Tensor::scalar(T::one())));
        for i in (0..=root.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if let Some(back) = &node.backward {
                let parent_values: Vec<&Tensor<T>> =
                    node.parents.iter().map(|p| &self.nodes[p.0].value).collect();
                let contribs = back(&g, &node.value, &parent_values)?;
                debug_assert_eq!(contribs.len(), node.parents.len());
                for (p, c) in node.parents.iter().zip(contribs) {
                    if !self.nodes[p.0].requires_grad {
                        continue;
                    }
                    if c.shape() != self.nodes[p.0].value.shape() {
                        return Err(Error::ShapeMismatch(format!(
                            "backward rule produced grad shape {:?} for value shape {:?}",
                            c.shape(),
                            self.nodes[p.0].value.shape()
                        )));
                    }
                    match &mut grads[p.0] {
                        Some(acc) => acc.add_assign(&c)?,
                        slot @ None => *slot = Some(c),
                    }
                }
            }
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }
}

impl<T: Scalar> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Outcome of a finite-difference gradient check.
#[derive(Debug, Clone)]
pub struct GradReport {
    /// Relative error per checked coordinate, in input-then-coordinate order.
    pub per_param: Vec<f64>,
    /// Maximum over `per_param` (0 when nothing was checked).
    pub max: f64,
    /// Whether `max < tol`.
    pub pass: bool,
}

/// Relative error between an analytic and numeric derivative, floored so
/// near-zero pairs compare absolutely.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(1e-8);
    (analytic - numeric).abs() / denom
}

/// Checks the analytic gradient of a scalar-valued function of one tensor
/// against central differences `(f(x+εeᵢ) − f(x−εeᵢ)) / 2ε`.
pub fn grad_check<F>(f: F, x: &Tensor<f64>, eps: f64, tol: f64) -> Result<GradReport>
where
    F: Fn(&mut Graph<f64>, NodeId) -> Result<NodeId>,
{
    grad_check_multi(
        |graph, ids| f(graph, ids[0]),
        core::slice::from_ref(x),
        eps,
        tol,
    )
}

/// Multi-input variant of [`grad_check`]: every coordinate of every input is
/// perturbed. The closure must rebuild the computation from scratch on the
/// graph it is handed, so each evaluation is independent. Coordinates that
/// miss the tolerance at step `eps` are retried at `eps/4` and `eps/16`,
/// then at `4·eps`, `16·eps` and `64·eps`, and report their best agreement
/// (see the comment on the numeric loop below).
pub fn grad_check_multi<F>(f: F, inputs: &[Tensor<f64>], eps: f64, tol: f64) -> Result<GradReport>
where
    F: Fn(&mut Graph<f64>, &[NodeId]) -> Result<NodeId>,
{
    grad_check_inner(f, inputs, eps, tol, None)
}

/// Like [`grad_check_multi`], but perturbs at most `per_tensor` coordinates
/// of each input, chosen by a seeded draw, so full-model checks finish in
/// reasonable time. Inputs with no more than `per_tensor` coordinates are
/// still checked exhaustively. The analytic gradient always comes from a
/// complete backward pass; only the numeric probing is subsampled.
pub fn grad_check_sampled<F>(
    f: F,
    inputs: &[Tensor<f64>],
    eps: f64,
    tol: f64,
    per_tensor: usize,
    seed: u64,
) -> Result<GradReport>
where
    F: Fn(&mut Graph<f64>, &[NodeId]) -> Result<NodeId>,
{
    if per_tensor == 0 {
        return Err(Error::InvalidArgument(String::from(
            "grad_check_sampled needs per_tensor >= 1",
        )));
    }
    grad_check_inner(f, inputs, eps, tol, Some((per_tensor, seed)))
}

fn grad_check_inner<F>(
    f: F,
    inputs: &[Tensor<f64>],
    eps: f64,
    tol: f64,
    sample: Option<(usize, u64)>,
) -> Result<GradReport>
where
    F: Fn(&mut Graph<f64>, &[NodeId]) -> Result<NodeId>,
{
    if eps <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "grad_check eps must be positive, got {eps}"
        )));
    }

    let eval = |tensors: &[Tensor<f64>]| -> Result<f64> {
        let mut graph = Graph::new();
        let ids: Vec<NodeId> = tensors.iter().map(|t| graph.constant(t.clone())).collect();
        let root = f(&mut graph, &ids)?;
        let v = graph.value(root);
        if v.len() != 1 {
            return Err(Error::InvalidArgument(format!(
                "grad_check function must be scalar-valued, got shape {:?}",
                v.shape()
            )));
        }
        let y = v.item()?;
        if !y.is_finite() {
            return Err(Error::NonFinite(String::from(
                "grad_check function produced a non-finite value",
            )));
        }
        Ok(y)
    };

    // Analytic gradients from one recorded pass.
    let mut graph = Graph::new();
    let ids: Vec<NodeId> = inputs.iter().map(|t| graph.leaf(t.clone(), true)).collect();
    let root = f(&mut graph, &ids)?;
    if graph.value(root).len() != 1 {
        return Err(Error::InvalidArgument(format!(
            "grad_check function must be scalar-valued, got shape {:?}",
            graph.value(root).shape()
        )));
    }
    let mut grads = graph.backward(root)?;
    let analytic: Vec<Tensor<f64>> = ids
        .iter()
        .zip(inputs)
        .map(|(&id, input)| {
            grads
                .take(id)
                .unwrap_or_else(|| Tensor::zeros(input.shape()).unwrap_or_else(|_| Tensor::scalar(0.0)))
        })
        .collect();

    // Numeric gradients coordinate by coordinate. Central differences face a
    // step-size dilemma: a step that spans a ReLU kink blends the slopes of
    // both sides, while a step small enough to stay on one side can lose the
    // difference to f64 round-off when the function value dwarfs the
    // gradient. A coordinate that misses the tolerance at the requested step
    // is therefore retried at smaller and larger steps, keeping its best
    // agreement; a genuine backward error disagrees at every step and still
    // fails.
    //
    // The difference quotient also carries irreducible round-off noise of
    // roughly ε_mach·|f|/step: a coordinate whose true gradient sits below
    // that floor cannot be certified by central differences at any
    // tolerance, so that budget is subtracted from the observed gap before
    // the relative comparison. Gradient errors above the floor are
    // unaffected.
    const STEP_SCALES: [f64; 6] = [1.0, 0.25, 0.0625, 4.0, 16.0, 64.0];
    const NOISE_FACTOR: f64 = 4.0;
    let mut work: Vec<Tensor<f64>> = inputs.to_vec();
    let f_base = eval(&work)?;
    let mut per_param = Vec::new();
    for (which, input) in inputs.iter().enumerate() {
        let coords: Vec<usize> = match sample {
            Some((cap, seed)) if input.len() > cap => {
                let mut rng = crate::rng::derived(seed, which as u64);
                rand::seq::index::sample(&mut rng, input.len(), cap).into_vec()
            }
            _ => (0..input.len()).collect(),
        };
        for i in coords {
            let orig = input.data()[i];
            let a = analytic[which].data()[i];
            let mut best = f64::INFINITY;
            for &scale in &STEP_SCALES {
                let step = eps * scale;
                work[which].data_mut()[i] = orig + step;
                let plus = eval(&work)?;
                work[which].data_mut()[i] = orig - step;
                let minus = eval(&work)?;
                work[which].data_mut()[i] = orig;
                let numeric = (plus - minus) / (2.0 * step);
                let noise = NOISE_FACTOR * f64::EPSILON * f_base.abs() / step;
                let gap = ((a - numeric).abs() - noise).max(0.0);
                let denom = a.abs().max(numeric.abs()).max(1e-8);
                best = best.min(gap / denom);
                if best < tol {
                    break;
                }
            }
            per_param.push(best);
        }
    }
    let max = per_param.iter().copied().fold(0.0, f64::max);
    Ok(GradReport {
        per_param,
        max,
        pass: max < tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::ReduceKind;

    fn t(shape: &[usize], data: &[f64]) -> Tensor<f64> {
        Tensor::from_vec(shape.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn sum_grad_is_ones() {
        let mut g = Graph::new();
        let x = g.leaf(t(&[3], &[5.0, -1.0, 2.0]), true);
        let s = g.sum_all(x).unwrap();
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(x).unwrap().data(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn square_grad_is_two_x() {
        let mut g = Graph::new();
        let x = g.leaf(t(&[2], &[1.0, 2.0]), true);
        let sq = g.square(x).unwrap();
        let s = g.sum_all(sq).unwrap();
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(x).unwrap().data(), &[2.0, 4.0]);
    }

    #[test]
    fn exp_grad_is_exp() {
        let mut g = Graph::new();
        let x = g.leaf(t(&[2], &[0.0, 1.0]), true);
        let e = g.exp(x).unwrap();
        let s = g.sum_all(e).unwrap();
        let grads = g.backward(s).unwrap();
        let gx = grads.get(x).unwrap();
        assert!((gx.data()[0] - 1.0).abs() < 1e-15);
        assert!((gx.data()[1] - core::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn fanout_accumulates_double_grad() {
        // f(x) = g(x) + g(x) with g = sum(square(.)) must give 2 * grad g.
        let xv = t(&[3], &[0.5, -2.0, 3.0]);
        let mut g = Graph::new();
        let x = g.leaf(xv.clone(), true);
        let sq = g.square(x).unwrap();
        let s1 = g.sum_all(sq).unwrap();
        let both = g.add(s1, s1).unwrap();
        let grads = g.backward(both).unwrap();
        for (got, xi) in grads.get(x).unwrap().data().iter().zip(xv.data()) {
            assert!((got - 4.0 * xi).abs() < 1e-14);
        }
    }

    #[test]
    fn repeated_backward_passes_identical() {
        // Fresh Gradients per pass: nothing carries over between calls.
        let mut g = Graph::new();
        let x = g.leaf(t(&[2], &[1.0, -3.0]), true);
        let sq = g.square(x).unwrap();
        let s = g.sum_all(sq).unwrap();
        let a = g.backward(s).unwrap();
        let b = g.backward(s).unwrap();
        assert_eq!(a.get(x).unwrap(), b.get(x).unwrap());
    }

    #[test]
    fn non_scalar_root_rejected() {
        let mut g = Graph::new();
        let x = g.leaf(t(&[2], &[1.0, 2.0]), true);
        assert!(g.backward(x).is_err());
    }

    #[test]
    fn broadcast_add_reduces_grad_to_bias_shape() {
        // (4,3) + (3,) bias: bias grad is the column sum of ones = 4 each.
        let mut g = Graph::<f64>::new();
        let x = g.leaf(Tensor::zeros(&[4, 3]).unwrap(), true);
        let b = g.leaf(Tensor::zeros(&[3]).unwrap(), true);
        let y = g.add(x, b).unwrap();
        let s = g.sum_all(y).unwrap();
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(b).unwrap().shape(), &[3]);
        assert_eq!(grads.get(b).unwrap().data(), &[4.0, 4.0, 4.0]);
    }

    #[test]
    fn matmul_grad_matches_finite_difference() {
        let a = Tensor::<f64>::rand_normal(&[3, 4], 0.0, 1.0, 21).unwrap();
        let b = Tensor::<f64>::rand_normal(&[4, 2], 0.0, 1.0, 22).unwrap();
        let report = grad_check_multi(
            |g, ids| {
                let p = g.matmul(ids[0], ids[1])?;
                g.sum_all(p)
            },
            &[a, b],
            1e-5,
            1e-6,
        )
        .unwrap();
        assert!(report.pass, "max rel err {}", report.max);
    }

    #[test]
    fn grad_check_square_tight() {
        let x = Tensor::<f64>::rand_normal(&[5], 0.0, 1.0, 7).unwrap();
        let report = grad_check(
            |g, x| {
                let sq = g.square(x)?;
                g.sum_all(sq)
            },
            &x,
            1e-5,
            1e-7,
        )
        .unwrap();
        assert!(report.max < 1e-7, "max rel err {}", report.max);
    }

    #[test]
    fn grad_check_linear_relu_chain() {
        let x = Tensor::<f64>::rand_normal(&[4], 0.0, 1.0, 8).unwrap();
        let w = Tensor::<f64>::rand_normal(&[4, 3], 0.0, 1.0, 9).unwrap();
        let report = grad_check_multi(
            |g, ids| {
                let xm = g.reshape(ids[0], &[1, 4])?;
                let h = g.matmul(xm, ids[1])?;
                let r = g.relu(h)?;
                g.sum_all(r)
            },
            &[x, w],
            1e-5,
            1e-4,
        )
        .unwrap();
        assert!(report.pass, "max rel err {}", report.max);
    }

    #[test]
    fn grad_check_constant_function_zero_error() {
        let x = t(&[3], &[1.0, 2.0, 3.0]);
        let report = grad_check(
            |g, x| {
                // Constant: x contributes through a zero multiplier.
                let z = g.scale(x, 0.0)?;
                g.sum_all(z)
            },
            &x,
            1e-5,
            1e-4,
        )
        .unwrap();
        assert_eq!(report.max, 0.0);
        assert!(report.pass);
    }

    #[test]
    fn grad_check_all_unary_ops() {
        // Positive inputs so sqrt stays in-domain under the eps perturbation.
        let xpos = Tensor::<f64>::rand_normal(&[6], 2.0, 0.3, 11).unwrap();
        let x = Tensor::<f64>::rand_normal(&[6], 0.0, 1.0, 12).unwrap();
        type BuildFn = fn(&mut Graph<f64>, NodeId) -> Result<NodeId>;
        let cases: &[(&str, BuildFn, &Tensor<f64>)] = &[
            ("neg", |g, x| g.neg(x), &x),
            ("exp", |g, x| g.exp(x), &x),
            ("sqrt", |g, x| g.sqrt(x), &xpos),
            ("gelu", |g, x| g.gelu(x), &x),
            ("div", |g, x| { let c = g.constant(Tensor::full(&[6], 3.0)?); g.div(x, c) }, &x),
        ];
        for (name, build, input) in cases {
            let report = grad_check(
                |g, x| {
                    let y = build(g, x)?;
                    g.sum_all(y)
                },
                input,
                1e-5,
                1e-6,
            )
            .unwrap();
            assert!(report.pass, "{name}: max rel err {}", report.max);
        }
    }

    #[test]
    fn mean_all_and_reduce_consistency() {
        let x = Tensor::<f64>::rand_normal(&[8], 0.0, 1.0, 31).unwrap();
        let mut g = Graph::new();
        let id = g.leaf(x.clone(), true);
        let m = g.mean_all(id).unwrap();
        let want = x.reduce(ReduceKind::Mean, None).unwrap().item().unwrap();
        assert!((g.value(m).item().unwrap() - want).abs() < 1e-15);
        let grads = g.backward(m).unwrap();
        for &v in grads.get(id).unwrap().data() {
            assert!((v - 1.0 / 8.0).abs() < 1e-15);
        }
    }
}
