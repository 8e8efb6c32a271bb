use std::cell::RefCell;
use std::collections::HashMap;

use super::expr::{BinaryOp, Expr, UnaryOp, Var};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(f64),
    Var(Var),
    Unary(UnaryOp, u32),
    Binary(BinaryOp, u32, u32),
    Pow(u32, u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Const(u64),
    Var(Var),
    Unary(UnaryOp, u32),
    Binary(BinaryOp, u32, u32),
    Pow(u32, u32),
}

/// Straight-line program evaluating several expressions at once, with
/// common subexpressions shared.
#[derive(Debug, Clone)]
pub struct Tape {
    ops: Vec<Op>,
    outputs: Vec<u32>,
}

thread_local! {
    static SCRATCH: RefCell<Vec<f64>> = const { RefCell::new(Vec::new()) };
}

impl Tape {
    pub fn compile(exprs: &[&Expr]) -> Tape {
        let mut b = Builder { ops: Vec::new(), index: HashMap::new() };
        let outputs = exprs.iter().map(|e| b.emit(e)).collect();
        Tape { ops: b.ops, outputs }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Writes one value per compiled expression into `out`.
    pub fn eval(&self, x: f64, y: f64, t: f64, out: &mut [f64]) {
        SCRATCH.with(|cell| {
            let mut regs = cell.borrow_mut();
            regs.clear();
            regs.reserve(self.ops.len());
            for op in &self.ops {
                let v = match *op {
                    Op::Const(c) => c,
                    Op::Var(Var::X) => x,
                    Op::Var(Var::Y) => y,
                    Op::Var(Var::T) => t,
                    Op::Unary(u, a) => {
                        let a = regs[a as usize];
                        match u {
                            UnaryOp::Neg => -a,
                            UnaryOp::Sin => a.sin(),
                            UnaryOp::Cos => a.cos(),
                            UnaryOp::Exp => a.exp(),
                        }
                    }
                    Op::Binary(bop, a, b) => {
                        let (a, b) = (regs[a as usize], regs[b as usize]);
                        match bop {
                            BinaryOp::Add => a + b,
                            BinaryOp::Sub => a - b,
                            BinaryOp::Mul => a * b,
                            BinaryOp::Div => a / b,
                        }
                    }
                    Op::Pow(a, n) => regs[a as usize].powi(n as i32),
                };
                regs.push(v);
            }
            for (slot, &i) in out.iter_mut().zip(&self.outputs) {
                *slot = regs[i as usize];
            }
        });
    }
}

struct Builder {
    ops: Vec<Op>,
    index: HashMap<Key, u32>,
}

impl Builder {
    fn intern(&mut self, key: Key, op: Op) -> u32 {
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.ops.len() as u32;
        self.ops.push(op);
        self.index.insert(key, i);
        i
    }

    fn emit(&mut self, e: &Expr) -> u32 {
        match e {
            Expr::Const(c) => self.intern(Key::Const(c.to_bits()), Op::Const(*c)),
            Expr::Var(v) => self.intern(Key::Var(*v), Op::Var(*v)),
            Expr::Unary(u, a) => {
                let a = self.emit(a);
                self.intern(Key::Unary(*u, a), Op::Unary(*u, a))
            }
            Expr::Binary(bop, a, b) => {
                let (a, b) = (self.emit(a), self.emit(b));
                self.intern(Key::Binary(*bop, a, b), Op::Binary(*bop, a, b))
            }
            Expr::Pow(a, n) => {
                let a = self.emit(a);
                self.intern(Key::Pow(a, *n), Op::Pow(a, *n))
            }
        }
    }
}
