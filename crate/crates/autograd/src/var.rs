use std::cell::Cell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::array::Array;
use crate::error::{Error, Result};
use crate::scalar::Float;

static NEXT_ID: AtomicUsize = AtomicUsize::new(0);

thread_local! {
    static GRAD_ENABLED: Cell<bool> = const { Cell::new(true) };
}

/// Whether newly created operations record their inputs for differentiation.
pub fn grad_enabled() -> bool {
    GRAD_ENABLED.with(|g| g.get())
}

/// Runs `f` with graph recording switched to `enabled`, restoring the
/// previous mode afterwards (also on panic).
pub fn with_grad_mode<R>(enabled: bool, f: impl FnOnce() -> R) -> R {
    struct Restore(bool);
    impl Drop for Restore {
        fn drop(&mut self) {
            GRAD_ENABLED.with(|g| g.set(self.0));
        }
    }
    let _restore = Restore(GRAD_ENABLED.with(|g| g.replace(enabled)));
    f()
}

/// Runs `f` without recording any graph.
pub fn no_grad<R>(f: impl FnOnce() -> R) -> R {
    with_grad_mode(false, f)
}

/// Local derivative rule of one recorded operation.
///
/// Input gradients must be built from differentiable `Var` operations so
/// that gradients of gradients are available when requested.
pub(crate) trait Backward<T: Float> {
    fn backward(&self, inputs: &[Var<T>], output: &Var<T>, grad: &Var<T>)
        -> Result<Vec<Option<Var<T>>>>;
}

struct Node<T: Float> {
    id: usize,
    value: Array<T>,
    requires_grad: bool,
    inputs: Vec<Var<T>>,
    rule: Option<Box<dyn Backward<T>>>,
}

/// A value in the computation graph.
///
/// Cloning is cheap (reference counted); values are immutable once built.
pub struct Var<T: Float>(Rc<Node<T>>);

impl<T: Float> Clone for Var<T> {
    fn clone(&self) -> Self {
        Var(Rc::clone(&self.0))
    }
}

impl<T: Float> fmt::Debug for Var<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Var")
            .field("id", &self.0.id)
            .field("shape", &self.0.value.shape())
            .field("requires_grad", &self.0.requires_grad)
            .finish()
    }
}

impl<T: Float> Var<T> {
    fn make(
        value: Array<T>,
        requires_grad: bool,
        inputs: Vec<Var<T>>,
        rule: Option<Box<dyn Backward<T>>>,
    ) -> Self {
        Var(Rc::new(Node {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            value,
            requires_grad,
            inputs,
            rule,
        }))
    }

    /// A value gradients never flow into.
    pub fn constant(value: Array<T>) -> Self {
        Self::make(value, false, Vec::new(), None)
    }

    /// A differentiable leaf (parameter or input being probed).
    pub fn leaf(value: Array<T>) -> Self {
        Self::make(value, true, Vec::new(), None)
    }

    pub fn scalar(value: T) -> Self {
        Self::constant(Array::scalar(value))
    }

    pub(crate) fn from_op(
        value: Array<T>,
        inputs: Vec<Var<T>>,
        rule: impl Backward<T> + 'static,
    ) -> Self {
        if grad_enabled() && inputs.iter().any(Var::requires_grad) {
            Self::make(value, true, inputs, Some(Box::new(rule)))
        } else {
            Self::constant(value)
        }
    }

    pub fn id(&self) -> usize {
        self.0.id
    }

    pub fn value(&self) -> &Array<T> {
        &self.0.value
    }

    pub fn shape(&self) -> &[usize] {
        self.0.value.shape()
    }

    pub fn requires_grad(&self) -> bool {
        self.0.requires_grad
    }

    /// Same value, cut from the graph.
    pub fn detach(&self) -> Self {
        Self::constant(self.0.value.clone())
    }

    pub fn item(&self) -> T {
        self.0.value.item()
    }
}

/// Gradients of one scalar with respect to every leaf it depends on.
#[derive(Debug, Default)]
pub struct Gradients<T: Float> {
    by_id: HashMap<usize, Array<T>>,
}

impl<T: Float> Gradients<T> {
    pub fn get(&self, var: &Var<T>) -> Option<&Array<T>> {
        self.by_id.get(&var.id())
    }

    pub fn remove(&mut self, var: &Var<T>) -> Option<Array<T>> {
        self.by_id.remove(&var.id())
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }
}

/// Nodes reachable from `root` through differentiable edges, ordered so
/// every node precedes its inputs.
fn reverse_topological<T: Float>(root: &Var<T>) -> Vec<Var<T>> {
    let mut order = Vec::new();
    let mut visited = std::collections::HashSet::new();
    let mut stack: Vec<(Var<T>, bool)> = vec![(root.clone(), false)];
    while let Some((node, expanded)) = stack.pop() {
        if expanded {
            order.push(node);
            continue;
        }
        if !visited.insert(node.id()) {
            continue;
        }
        stack.push((node.clone(), true));
        for input in &node.0.inputs {
            if input.requires_grad() && !visited.contains(&input.id()) {
                stack.push((input.clone(), false));
            }
        }
    }
    order.reverse();
    order
}

fn propagate<T: Float>(output: &Var<T>, keep: impl Fn(&Var<T>) -> bool) -> Result<HashMap<usize, Var<T>>> {
    if output.value().len() != 1 {
        return Err(Error::NonScalarOutput(output.shape().to_vec()));
    }
    let mut grads: HashMap<usize, Var<T>> = HashMap::new();
    let mut kept = HashMap::new();
    if !output.requires_grad() {
        return Ok(kept);
    }
    grads.insert(
        output.id(),
        Var::constant(Array::ones(output.shape())),
    );
    for node in reverse_topological(output) {
        let Some(grad) = grads.remove(&node.id()) else {
            continue;
        };
        if let Some(rule) = &node.0.rule {
            let input_grads = rule.backward(&node.0.inputs, &node, &grad)?;
            for (input, g) in node.0.inputs.iter().zip(input_grads) {
                let Some(g) = g else { continue };
                if !input.requires_grad() {
                    continue;
                }
                let merged = match grads.remove(&input.id()) {
                    Some(prev) => prev.add(&g)?,
                    None => g,
                };
                grads.insert(input.id(), merged);
            }
        }
        if keep(&node) {
            kept.insert(node.id(), grad);
        }
    }
    Ok(kept)
}

/// Gradients of the scalar `output` with respect to each of `wrt`.
///
/// With `create_graph`, the returned gradients are themselves part of the
/// graph and can be differentiated again. Inputs `output` does not depend
/// on receive zeros.
pub fn grad<T: Float>(output: &Var<T>, wrt: &[&Var<T>], create_graph: bool) -> Result<Vec<Var<T>>> {
    let wanted: std::collections::HashSet<usize> = wrt.iter().map(|v| v.id()).collect();
    let mut kept = with_grad_mode(create_graph, || {
        propagate(output, |n| wanted.contains(&n.id()))
    })?;
    Ok(wrt
        .iter()
        .map(|v| {
            kept.remove(&v.id())
                .unwrap_or_else(|| Var::constant(Array::zeros(v.shape())))
        })
        .collect())
}

/// Gradients of the scalar `output` with respect to all leaves.
pub fn backward<T: Float>(output: &Var<T>) -> Result<Gradients<T>> {
    let kept = no_grad(|| propagate(output, |n| n.0.rule.is_none()))?;
    Ok(Gradients {
        by_id: kept
            .into_iter()
            .map(|(id, v)| (id, v.value().clone()))
            .collect(),
    })
}
