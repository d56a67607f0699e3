//! A small reverse-mode differentiation tape over dense row-major matrices.
//!
//! Every operation appends a node holding its value; `backward` walks the
//! nodes in reverse and accumulates gradients. Parameters enter through
//! [`Graph::param`] so their gradients can be collected by id afterwards.

use ndarray::{s, concatenate, Array2, ArrayView2, Axis, Zip};

/// Handle to a node on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

/// Lower/upper clamp applied to probabilities before taking logs.
pub const PROB_EPS: f64 = 1e-7;

enum Op {
    Leaf,
    Param(usize),
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    MulConst(Var, Array2<f64>),
    Scale(Var, f64),
    /// `mask * a + (1 - mask) * b` with a column mask broadcast over columns.
    Blend { mask: Array2<f64>, a: Var, b: Var },
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Exp(Var),
    SliceCols(Var, usize, usize),
    SliceRows(Var, usize, usize),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    Gather(Var, Vec<usize>),
    /// Clamped binary cross-entropy between sigmoid(logits) and one-hot rows.
    BceOneHot {
        logits: Var,
        targets: Vec<usize>,
        weights: Vec<f64>,
        denom: f64,
        probs: Array2<f64>,
    },
    /// Mean over rows of the closed-form KL to a standard normal, with the
    /// log-variance parameterisation.
    Kl { mu: Var, logvar: Var, literal: bool },
    /// Mean clamped binary cross-entropy of sigmoid(logits) against a
    /// constant target in {0, 1}.
    Logistic { logits: Var, target: f64, probs: Array2<f64> },
}

struct Node {
    value: Array2<f64>,
    op: Op,
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn clamp_prob(p: f64) -> (f64, bool) {
    if p < PROB_EPS {
        (PROB_EPS, true)
    } else if p > 1.0 - PROB_EPS {
        (1.0 - PROB_EPS, true)
    } else {
        (p, false)
    }
}

fn bce(target: f64, p: f64) -> f64 {
    let (pc, _) = clamp_prob(p);
    -(target * pc.ln() + (1.0 - target) * (1.0 - pc).ln())
}

fn accumulate(slot: &mut Option<Array2<f64>>, g: Array2<f64>) {
    match slot {
        Some(acc) => *acc += &g,
        None => *slot = Some(g),
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Array2<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[[0, 0]]
    }

    pub fn constant(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn param(&mut self, id: usize, value: &Array2<f64>) -> Var {
        self.push(value.clone(), Op::Param(id))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).dot(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        self.push(v, Op::Add(a, b))
    }

    /// Adds a 1×n row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let v = self.value(a) + self.value(row);
        self.push(v, Op::AddRow(a, row))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) * self.value(b);
        self.push(v, Op::Mul(a, b))
    }

    pub fn mul_const(&mut self, a: Var, c: Array2<f64>) -> Var {
        let v = self.value(a) * &c;
        self.push(v, Op::MulConst(a, c))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a) * c;
        self.push(v, Op::Scale(a, c))
    }

    /// Row-wise select: rows with mask 1 take `a`, rows with mask 0 keep `b`.
    pub fn blend(&mut self, mask: Array2<f64>, a: Var, b: Var) -> Var {
        let mut v = self.value(b).clone();
        Zip::from(v.rows_mut())
            .and(self.value(a).rows())
            .and(mask.rows())
            .for_each(|mut out, ra, m| {
                let m = m[0];
                if m != 0.0 {
                    out.zip_mut_with(&ra, |o, &x| *o = m * x + (1.0 - m) * *o);
                }
            });
        self.push(v, Op::Blend { mask, a, b })
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(sigmoid);
        self.push(v, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(f64::tanh);
        self.push(v, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(|x| x.max(0.0));
        self.push(v, Op::Relu(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(f64::exp);
        self.push(v, Op::Exp(a))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Var {
        let v = self.value(a).slice(s![.., start..end]).to_owned();
        self.push(v, Op::SliceCols(a, start, end))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, end: usize) -> Var {
        let v = self.value(a).slice(s![start..end, ..]).to_owned();
        self.push(v, Op::SliceRows(a, start, end))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let views: Vec<ArrayView2<f64>> = parts.iter().map(|p| self.value(*p).view()).collect();
        let v = concatenate(Axis(1), &views).expect("row counts agree");
        self.push(v, Op::ConcatCols(parts.to_vec()))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        let views: Vec<ArrayView2<f64>> = parts.iter().map(|p| self.value(*p).view()).collect();
        let v = concatenate(Axis(0), &views).expect("column counts agree");
        self.push(v, Op::ConcatRows(parts.to_vec()))
    }

    /// Row lookup into an embedding table.
    pub fn gather(&mut self, table: Var, ids: Vec<usize>) -> Var {
        let t = self.value(table);
        let mut v = Array2::zeros((ids.len(), t.ncols()));
        for (mut row, &id) in v.rows_mut().into_iter().zip(&ids) {
            row.assign(&t.row(id));
        }
        self.push(v, Op::Gather(table, ids))
    }

    /// Binary cross-entropy between `sigmoid(logits)` and one-hot targets,
    /// summed over rows weighted by `weights` and over all columns, divided
    /// by `(sum of weights) * columns`. Probabilities are clamped to
    /// `[PROB_EPS, 1 - PROB_EPS]`; clamped entries carry no gradient.
    pub fn bce_one_hot(&mut self, logits: Var, targets: Vec<usize>, weights: Vec<f64>) -> Var {
        let z = self.value(logits);
        assert_eq!(z.nrows(), targets.len());
        assert_eq!(z.nrows(), weights.len());
        let probs = z.mapv(sigmoid);
        let denom = weights.iter().sum::<f64>() * z.ncols() as f64;
        let mut total = 0.0;
        for ((row, &t), &w) in probs.rows().into_iter().zip(&targets).zip(&weights) {
            if w == 0.0 {
                continue;
            }
            let mut acc = 0.0;
            for (j, &p) in row.iter().enumerate() {
                acc += bce(if j == t { 1.0 } else { 0.0 }, p);
            }
            total += w * acc;
        }
        let loss = if denom > 0.0 { total / denom } else { 0.0 };
        self.push(
            Array2::from_elem((1, 1), loss),
            Op::BceOneHot {
                logits,
                targets,
                weights,
                denom,
                probs,
            },
        )
    }

    /// Mean over rows of `-1/2 * sum(1 + log σ² - μ² - σ²)` with
    /// `logvar = log σ²`. With `literal`, the `log σ²` term is replaced by
    /// `log σ`.
    pub fn kl_normal(&mut self, mu: Var, logvar: Var, literal: bool) -> Var {
        let m = self.value(mu);
        let lv = self.value(logvar);
        let rows = m.nrows().max(1) as f64;
        let log_term = if literal { 0.5 } else { 1.0 };
        let mut total = 0.0;
        Zip::from(m).and(lv).for_each(|&mu, &lv| {
            total += -0.5 * (1.0 + log_term * lv - mu * mu - lv.exp());
        });
        self.push(
            Array2::from_elem((1, 1), total / rows),
            Op::Kl { mu, logvar, literal },
        )
    }

    /// Mean of `-[t ln d + (1-t) ln(1-d)]` with `d = sigmoid(logits)`.
    pub fn logistic_loss(&mut self, logits: Var, target: f64) -> Var {
        let probs = self.value(logits).mapv(sigmoid);
        let n = probs.len().max(1) as f64;
        let loss = probs.iter().map(|&p| bce(target, p)).sum::<f64>() / n;
        self.push(
            Array2::from_elem((1, 1), loss),
            Op::Logistic {
                logits,
                target,
                probs,
            },
        )
    }

    /// Reverse pass from the scalar `loss`. Returns gradients for every
    /// parameter id that participated (indexed by id, `None` if unused).
    pub fn backward(&self, loss: Var, n_params: usize) -> Vec<Option<Array2<f64>>> {
        let mut grads: Vec<Option<Array2<f64>>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(Array2::ones(self.nodes[loss.0].value.raw_dim()));
        let mut param_grads: Vec<Option<Array2<f64>>> = vec![None; n_params];

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {}
                Op::Param(id) => accumulate(&mut param_grads[*id], g),
                Op::MatMul(a, b) => {
                    let ga = g.dot(&self.value(*b).t());
                    let gb = self.value(*a).t().dot(&g);
                    accumulate(&mut grads[a.0], ga);
                    accumulate(&mut grads[b.0], gb);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads[b.0], g.clone());
                    accumulate(&mut grads[a.0], g);
                }
                Op::AddRow(a, row) => {
                    let gr = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    accumulate(&mut grads[row.0], gr);
                    accumulate(&mut grads[a.0], g);
                }
                Op::Mul(a, b) => {
                    let ga = &g * self.value(*b);
                    let gb = &g * self.value(*a);
                    accumulate(&mut grads[a.0], ga);
                    accumulate(&mut grads[b.0], gb);
                }
                Op::MulConst(a, c) => accumulate(&mut grads[a.0], &g * c),
                Op::Scale(a, c) => accumulate(&mut grads[a.0], &g * *c),
                Op::Blend { mask, a, b } => {
                    let ga = &g * mask;
                    let gb = &g * &mask.mapv(|m| 1.0 - m);
                    accumulate(&mut grads[a.0], ga);
                    accumulate(&mut grads[b.0], gb);
                }
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    let ga = Zip::from(&g).and(y).map_collect(|&g, &y| g * y * (1.0 - y));
                    accumulate(&mut grads[a.0], ga);
                }
                Op::Tanh(a) => {
                    let y = &node.value;
                    let ga = Zip::from(&g).and(y).map_collect(|&g, &y| g * (1.0 - y * y));
                    accumulate(&mut grads[a.0], ga);
                }
                Op::Relu(a) => {
                    let x = self.value(*a);
                    let ga = Zip::from(&g)
                        .and(x)
                        .map_collect(|&g, &x| if x > 0.0 { g } else { 0.0 });
                    accumulate(&mut grads[a.0], ga);
                }
                Op::Exp(a) => accumulate(&mut grads[a.0], &g * &node.value),
                Op::SliceCols(a, start, end) => {
                    let mut ga = Array2::zeros(self.value(*a).raw_dim());
                    ga.slice_mut(s![.., *start..*end]).assign(&g);
                    accumulate(&mut grads[a.0], ga);
                }
                Op::SliceRows(a, start, end) => {
                    let mut ga = Array2::zeros(self.value(*a).raw_dim());
                    ga.slice_mut(s![*start..*end, ..]).assign(&g);
                    accumulate(&mut grads[a.0], ga);
                }
                Op::ConcatCols(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let w = self.value(*p).ncols();
                        accumulate(&mut grads[p.0], g.slice(s![.., off..off + w]).to_owned());
                        off += w;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let h = self.value(*p).nrows();
                        accumulate(&mut grads[p.0], g.slice(s![off..off + h, ..]).to_owned());
                        off += h;
                    }
                }
                Op::Gather(table, ids) => {
                    let mut gt = Array2::zeros(self.value(*table).raw_dim());
                    for (row, &id) in g.rows().into_iter().zip(ids) {
                        let mut dst = gt.row_mut(id);
                        dst += &row;
                    }
                    accumulate(&mut grads[table.0], gt);
                }
                Op::BceOneHot {
                    logits,
                    targets,
                    weights,
                    denom,
                    probs,
                } => {
                    let scale = g[[0, 0]] / denom.max(f64::MIN_POSITIVE);
                    let mut gz = Array2::zeros(probs.raw_dim());
                    for (((mut out, prow), &t), &w) in gz
                        .rows_mut()
                        .into_iter()
                        .zip(probs.rows())
                        .zip(targets)
                        .zip(weights)
                    {
                        if w == 0.0 {
                            continue;
                        }
                        for (j, (o, &p)) in out.iter_mut().zip(prow.iter()).enumerate() {
                            if clamp_prob(p).1 {
                                continue;
                            }
                            let target = if j == t { 1.0 } else { 0.0 };
                            *o = scale * w * (p - target);
                        }
                    }
                    accumulate(&mut grads[logits.0], gz);
                }
                Op::Kl {
                    mu,
                    logvar,
                    literal,
                } => {
                    let m = self.value(*mu);
                    let lv = self.value(*logvar);
                    let scale = g[[0, 0]] / m.nrows().max(1) as f64;
                    let log_term = if *literal { 0.5 } else { 1.0 };
                    accumulate(&mut grads[mu.0], m * scale);
                    let glv = lv.mapv(|x| -0.5 * (log_term - x.exp()) * scale);
                    accumulate(&mut grads[logvar.0], glv);
                }
                Op::Logistic {
                    logits,
                    target,
                    probs,
                } => {
                    let scale = g[[0, 0]] / probs.len().max(1) as f64;
                    let gz = probs.mapv(|p| {
                        if clamp_prob(p).1 {
                            0.0
                        } else {
                            scale * (p - target)
                        }
                    });
                    accumulate(&mut grads[logits.0], gz);
                }
            }
        }
        param_grads
    }
}
