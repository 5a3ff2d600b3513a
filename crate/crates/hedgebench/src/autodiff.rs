//! Scalar reverse-mode automatic differentiation on an append-only tape.
//!
//! Primitives cover what the hedging ledger and the policy network need:
//! arithmetic, exp/ln, abs and relu (with recorded branch signs), a guarded
//! square root for the batch standard deviation, and a fused multiply-add
//! that keeps dot products compact. Each node stores its input indices and
//! local partials; [`Tape::backward`] runs reverse accumulation.

use crate::error::{HedgeError, Result};

const NONE: u32 = u32::MAX;

/// Index of a recorded scalar on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(u32);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    Leaf,
    Const(f64),
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Exp,
    Ln,
    Abs,
    Relu,
    /// sqrt with derivative forced to 0 at 0, so an all-equal batch yields a
    /// zero gradient instead of NaN.
    SqrtGuarded,
    Scale(f64),
    AddConst(f64),
    /// `a + b*c`
    Fma,
}

#[derive(Debug, Clone, Copy)]
struct Node {
    op: Op,
    parents: [u32; 3],
    partials: [f64; 3],
    value: f64,
}

/// Append-only record of a forward computation.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    /// Signs taken at abs/relu kinks, in recording order. Two forward passes
    /// whose traces differ crossed a branch somewhere.
    trace: Vec<bool>,
}

impl Tape {
    pub fn new() -> Tape {
        Tape::default()
    }

    pub fn with_capacity(n: usize) -> Tape {
        Tape {
            nodes: Vec::with_capacity(n),
            trace: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn clear(&mut self) {
        self.nodes.clear();
        self.trace.clear();
    }

    pub fn value(&self, v: Var) -> f64 {
        self.nodes[v.0 as usize].value
    }

    pub fn branch_trace(&self) -> &[bool] {
        &self.trace
    }

    fn push(&mut self, op: Op, parents: [u32; 3], partials: [f64; 3], value: f64) -> Var {
        let idx = self.nodes.len() as u32;
        self.nodes.push(Node {
            op,
            parents,
            partials,
            value,
        });
        Var(idx)
    }

    /// A differentiable input (parameter) node.
    pub fn leaf(&mut self, value: f64) -> Var {
        self.push(Op::Leaf, [NONE; 3], [0.0; 3], value)
    }

    /// A constant: recorded, but nothing flows back through it.
    pub fn constant(&mut self, value: f64) -> Var {
        self.push(Op::Const(value), [NONE; 3], [0.0; 3], value)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        self.push(Op::Add, [a.0, b.0, NONE], [1.0, 1.0, 0.0], v)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) - self.value(b);
        self.push(Op::Sub, [a.0, b.0, NONE], [1.0, -1.0, 0.0], v)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        self.push(Op::Mul, [a.0, b.0, NONE], [vb, va, 0.0], va * vb)
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if vb == 0.0 {
            return Err(HedgeError::Autodiff("division by zero".into()));
        }
        Ok(self.push(
            Op::Div,
            [a.0, b.0, NONE],
            [1.0 / vb, -va / (vb * vb), 0.0],
            va / vb,
        ))
    }

    pub fn neg(&mut self, a: Var) -> Var {
        let v = -self.value(a);
        self.push(Op::Neg, [a.0, NONE, NONE], [-1.0, 0.0, 0.0], v)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let v = self.value(a).exp();
        self.push(Op::Exp, [a.0, NONE, NONE], [v, 0.0, 0.0], v)
    }

    pub fn ln(&mut self, a: Var) -> Result<Var> {
        let va = self.value(a);
        if va <= 0.0 {
            return Err(HedgeError::Autodiff(format!("log of non-positive {va}")));
        }
        Ok(self.push(Op::Ln, [a.0, NONE, NONE], [1.0 / va, 0.0, 0.0], va.ln()))
    }

    /// |a| with subgradient 0 at exactly 0.
    pub fn abs(&mut self, a: Var) -> Var {
        let va = self.value(a);
        let d = if va > 0.0 {
            1.0
        } else if va < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.trace.push(va > 0.0);
        self.push(Op::Abs, [a.0, NONE, NONE], [d, 0.0, 0.0], va.abs())
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let va = self.value(a);
        let active = va > 0.0;
        self.trace.push(active);
        self.push(
            Op::Relu,
            [a.0, NONE, NONE],
            [if active { 1.0 } else { 0.0 }, 0.0, 0.0],
            if active { va } else { 0.0 },
        )
    }

    pub fn sqrt_guarded(&mut self, a: Var) -> Var {
        let va = self.value(a).max(0.0);
        let v = va.sqrt();
        let d = if v > 0.0 { 0.5 / v } else { 0.0 };
        self.push(Op::SqrtGuarded, [a.0, NONE, NONE], [d, 0.0, 0.0], v)
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let v = self.value(a) * k;
        self.push(Op::Scale(k), [a.0, NONE, NONE], [k, 0.0, 0.0], v)
    }

    pub fn add_const(&mut self, a: Var, k: f64) -> Var {
        let v = self.value(a) + k;
        self.push(Op::AddConst(k), [a.0, NONE, NONE], [1.0, 0.0, 0.0], v)
    }

    /// `a + b*c` as one node.
    pub fn fma(&mut self, a: Var, b: Var, c: Var) -> Var {
        let (va, vb, vc) = (self.value(a), self.value(b), self.value(c));
        self.push(
            Op::Fma,
            [a.0, b.0, c.0],
            [1.0, vc, vb],
            va + vb * vc,
        )
    }

    /// Reverse accumulation from `output`; returns the adjoint of every node.
    pub fn backward(&self, output: Var) -> Vec<f64> {
        let mut adjoint = vec![0.0; self.nodes.len()];
        adjoint[output.0 as usize] = 1.0;
        for idx in (0..=output.0 as usize).rev() {
            let a = adjoint[idx];
            if a == 0.0 {
                continue;
            }
            let node = &self.nodes[idx];
            for k in 0..3 {
                let p = node.parents[k];
                if p != NONE {
                    adjoint[p as usize] += a * node.partials[k];
                }
            }
        }
        adjoint
    }

    /// Adjoints of the first `n_leading` nodes (the parameter leaves, when
    /// they were pushed first).
    pub fn gradient(&self, output: Var, n_leading: usize) -> Vec<f64> {
        let mut adj = self.backward(output);
        adj.truncate(n_leading);
        adj
    }

    /// Seeded variant of [`Tape::backward`]: the output adjoint starts at
    /// `seed` instead of 1, and adjoints for the first `n_leading` nodes are
    /// accumulated into `out`.
    pub fn accumulate_gradient(&self, output: Var, seed: f64, out: &mut [f64]) {
        if seed == 0.0 {
            return;
        }
        let mut adjoint = vec![0.0; self.nodes.len()];
        adjoint[output.0 as usize] = seed;
        for idx in (0..=output.0 as usize).rev() {
            let a = adjoint[idx];
            if a == 0.0 {
                continue;
            }
            let node = &self.nodes[idx];
            for k in 0..3 {
                let p = node.parents[k];
                if p != NONE {
                    adjoint[p as usize] += a * node.partials[k];
                }
            }
        }
        for (o, a) in out.iter_mut().zip(adjoint.iter()) {
            *o += a;
        }
    }

    /// Recompute every node value from its parents; the result must match the
    /// recorded values bit for bit.
    pub fn replay_forward(&self) -> Vec<f64> {
        let mut values = vec![0.0; self.nodes.len()];
        for (idx, node) in self.nodes.iter().enumerate() {
            let p = |k: usize| values[node.parents[k] as usize];
            values[idx] = match node.op {
                Op::Leaf | Op::Const(_) => node.value,
                Op::Add => p(0) + p(1),
                Op::Sub => p(0) - p(1),
                Op::Mul => p(0) * p(1),
                Op::Div => p(0) / p(1),
                Op::Neg => -p(0),
                Op::Exp => p(0).exp(),
                Op::Ln => p(0).ln(),
                Op::Abs => p(0).abs(),
                Op::Relu => {
                    if p(0) > 0.0 {
                        p(0)
                    } else {
                        0.0
                    }
                }
                Op::SqrtGuarded => p(0).max(0.0).sqrt(),
                Op::Scale(k) => p(0) * k,
                Op::AddConst(k) => p(0) + k,
                Op::Fma => p(0) + p(1) * p(2),
            };
        }
        values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_basics() {
        let mut t = Tape::new();
        let a = t.leaf(2.0);
        let b = t.leaf(3.0);
        let s = t.add(a, b);
        assert_eq!(t.value(s), 5.0);
        let minus_one = t.constant(-1.0);
        let r1 = t.relu(minus_one);
        assert_eq!(t.value(r1), 0.0);
        let two = t.constant(2.0);
        let r2 = t.relu(two);
        assert_eq!(t.value(r2), 2.0);
        let zero = t.leaf(0.0);
        let az = t.abs(zero);
        assert_eq!(t.value(az), 0.0);
        let adj = t.backward(az);
        assert_eq!(adj[zero.0 as usize], 0.0, "subgradient 0 at 0");
    }

    #[test]
    fn square_gradient() {
        let mut t = Tape::new();
        let x = t.leaf(3.0);
        let y = t.mul(x, x);
        let adj = t.backward(y);
        assert_eq!(adj[x.0 as usize], 6.0);
    }

    #[test]
    fn product_plus_term() {
        // f(x, y) = x*y + y at (2, 5) -> grad (5, 3)
        let mut t = Tape::new();
        let x = t.leaf(2.0);
        let y = t.leaf(5.0);
        let xy = t.mul(x, y);
        let f = t.add(xy, y);
        let g = t.gradient(f, 2);
        assert_eq!(g, vec![5.0, 3.0]);
    }

    #[test]
    fn fma_matches_mul_add() {
        let mut t1 = Tape::new();
        let (a, b, c) = (t1.leaf(1.5), t1.leaf(-2.0), t1.leaf(0.7));
        let f1 = t1.fma(a, b, c);
        let g1 = t1.gradient(f1, 3);

        let mut t2 = Tape::new();
        let (a2, b2, c2) = (t2.leaf(1.5), t2.leaf(-2.0), t2.leaf(0.7));
        let bc = t2.mul(b2, c2);
        let f2 = t2.add(a2, bc);
        let g2 = t2.gradient(f2, 3);
        assert_eq!(t1.value(f1), t2.value(f2));
        assert_eq!(g1, g2);
    }

    #[test]
    fn division_and_log_errors() {
        let mut t = Tape::new();
        let a = t.leaf(1.0);
        let zero = t.constant(0.0);
        assert!(t.div(a, zero).is_err());
        let neg = t.constant(-1.0);
        assert!(t.ln(neg).is_err());
    }

    #[test]
    fn sqrt_guarded_at_zero() {
        let mut t = Tape::new();
        let x = t.leaf(0.0);
        let s = t.sqrt_guarded(x);
        assert_eq!(t.value(s), 0.0);
        let adj = t.backward(s);
        assert_eq!(adj[x.0 as usize], 0.0);
    }

    #[test]
    fn linearity_of_gradients() {
        // grad(a*f + b*g) == a*grad f + b*grad g
        let build = |t: &mut Tape, x: Var, y: Var| -> (Var, Var) {
            let f = t.mul(x, y);
            let e = t.exp(x);
            let g = t.add(e, y);
            (f, g)
        };
        let mut t = Tape::new();
        let x = t.leaf(0.3);
        let y = t.leaf(-1.2);
        let (f, g) = build(&mut t, x, y);
        let af = t.scale(f, 2.5);
        let bg = t.scale(g, -0.75);
        let combo = t.add(af, bg);
        let gc = t.gradient(combo, 2);
        let gf = t.gradient(f, 2);
        let gg = t.gradient(g, 2);
        for k in 0..2 {
            let lin = 2.5 * gf[k] - 0.75 * gg[k];
            assert!((gc[k] - lin).abs() < 1e-15 * lin.abs().max(1.0));
        }
    }

    #[test]
    fn replay_reproduces_values() {
        let mut t = Tape::new();
        let x = t.leaf(0.37);
        let y = t.leaf(1.41);
        let m = t.mul(x, y);
        let e = t.exp(m);
        let a = t.abs(y);
        let q = t.div(e, a).unwrap();
        let l = t.ln(q).unwrap();
        let s = t.sub(l, x);
        let r = t.relu(s);
        let f = t.fma(r, x, y);
        let _ = t.sqrt_guarded(f);
        let replayed = t.replay_forward();
        for (idx, v) in replayed.iter().enumerate() {
            assert_eq!(v.to_bits(), t.nodes[idx].value.to_bits(), "node {idx}");
        }
    }

    #[test]
    fn determinism() {
        let run = || {
            let mut t = Tape::new();
            let x = t.leaf(0.123);
            let e = t.exp(x);
            let m = t.mul(e, x);
            let out = t.sqrt_guarded(m);
            t.gradient(out, 1)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn branch_trace_records_kinks() {
        let mut t = Tape::new();
        let x = t.leaf(0.5);
        let _ = t.relu(x);
        let neg = t.add_const(x, -1.0);
        let _ = t.relu(neg);
        let _ = t.abs(neg);
        assert_eq!(t.branch_trace(), &[true, false, false]);
    }
}
