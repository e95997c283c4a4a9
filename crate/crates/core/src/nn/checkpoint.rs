//! Plain-text checkpoint container.
//!
//! A checkpoint is an ordered list of named entries, one per line:
//!
//! ```text
//! hammer-checkpoint 1
//! tensor local.actor.w0 64 14 <64*14 row-major values>
//! tensor local.actor.b0 64 1 <64 values>
//! scalar local.actor.adam.step 120
//! end
//! ```
//!
//! `tensor` lines carry the name, the shape (any number of dimensions, ended by
//! `:`) and the row-major values. `scalar` lines carry a single value. Values
//! are written in shortest round-trip exponent notation, so loading a saved
//! file reproduces every `f64` bit for bit. Names contain no whitespace.

use std::fmt::Write as _;
use std::path::Path;

use super::{AdamState, Mlp, NnError};

const MAGIC: &str = "hammer-checkpoint 1";

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Entry {
    Tensor(Tensor),
    Scalar(f64),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Checkpoint {
    entries: Vec<(String, Entry)>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[(String, Entry)] {
        &self.entries
    }

    pub fn put_tensor(&mut self, name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        self.entries
            .push((name.into(), Entry::Tensor(Tensor { shape, data })));
    }

    pub fn put_scalar(&mut self, name: impl Into<String>, value: f64) {
        self.entries.push((name.into(), Entry::Scalar(value)));
    }

    fn get(&self, name: &str) -> Result<&Entry, NnError> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, e)| e)
            .ok_or_else(|| NnError::Checkpoint(format!("missing entry `{name}`")))
    }

    pub fn tensor(&self, name: &str) -> Result<&Tensor, NnError> {
        match self.get(name)? {
            Entry::Tensor(t) => Ok(t),
            Entry::Scalar(_) => Err(NnError::Checkpoint(format!("`{name}` is not a tensor"))),
        }
    }

    pub fn scalar(&self, name: &str) -> Result<f64, NnError> {
        match self.get(name)? {
            Entry::Scalar(v) => Ok(*v),
            Entry::Tensor(_) => Err(NnError::Checkpoint(format!("`{name}` is not a scalar"))),
        }
    }

    pub fn put_mlp(&mut self, prefix: &str, net: &Mlp) {
        let sizes = net
            .layer_sizes()
            .iter()
            .map(|&s| s as f64)
            .collect::<Vec<_>>();
        self.put_tensor(format!("{prefix}.layer_sizes"), vec![sizes.len()], sizes);
        self.put_scalar(
            format!("{prefix}.head"),
            match net.head() {
                super::Head::Linear => 0.0,
                super::Head::Tanh => 1.0,
                super::Head::Softmax => 2.0,
            },
        );
        for ((name, rows, cols), t) in net.tensor_shapes().into_iter().zip(net.tensors()) {
            let shape = if cols == 1 { vec![rows] } else { vec![rows, cols] };
            self.put_tensor(format!("{prefix}.{name}"), shape, t.to_vec());
        }
    }

    pub fn get_mlp(&self, prefix: &str) -> Result<Mlp, NnError> {
        let sizes: Vec<usize> = self
            .tensor(&format!("{prefix}.layer_sizes"))?
            .data
            .iter()
            .map(|&s| s as usize)
            .collect();
        let head = match self.scalar(&format!("{prefix}.head"))? as i64 {
            0 => super::Head::Linear,
            1 => super::Head::Tanh,
            2 => super::Head::Softmax,
            other => return Err(NnError::Checkpoint(format!("unknown head code {other}"))),
        };
        let mut net = Mlp::zeros(&sizes, head)?;
        let names = net.tensor_shapes();
        for ((name, _, _), dst) in names.iter().zip(net.tensors_mut()) {
            let src = self.tensor(&format!("{prefix}.{name}"))?;
            if src.data.len() != dst.len() {
                return Err(NnError::Checkpoint(format!(
                    "`{prefix}.{name}` has {} values, expected {}",
                    src.data.len(),
                    dst.len()
                )));
            }
            dst.copy_from_slice(&src.data);
        }
        Ok(net)
    }

    pub fn put_vector(&mut self, name: impl Into<String>, v: &[f64]) {
        self.put_tensor(name, vec![v.len()], v.to_vec());
    }

    pub fn put_adam(&mut self, prefix: &str, state: &AdamState) {
        self.put_scalar(format!("{prefix}.step"), state.step_count as f64);
        self.put_scalar(format!("{prefix}.beta1"), state.beta1);
        self.put_scalar(format!("{prefix}.beta2"), state.beta2);
        self.put_scalar(format!("{prefix}.epsilon"), state.epsilon);
        self.put_scalar(format!("{prefix}.tensors"), state.first_moment.len() as f64);
        for (k, (m, v)) in state
            .first_moment
            .iter()
            .zip(&state.second_moment)
            .enumerate()
        {
            self.put_vector(format!("{prefix}.m{k}"), m);
            self.put_vector(format!("{prefix}.v{k}"), v);
        }
    }

    pub fn get_adam(&self, prefix: &str) -> Result<AdamState, NnError> {
        let n = self.scalar(&format!("{prefix}.tensors"))? as usize;
        let mut first_moment = Vec::with_capacity(n);
        let mut second_moment = Vec::with_capacity(n);
        for k in 0..n {
            first_moment.push(self.tensor(&format!("{prefix}.m{k}"))?.data.clone());
            second_moment.push(self.tensor(&format!("{prefix}.v{k}"))?.data.clone());
        }
        Ok(AdamState {
            first_moment,
            second_moment,
            step_count: self.scalar(&format!("{prefix}.step"))? as u64,
            beta1: self.scalar(&format!("{prefix}.beta1"))?,
            beta2: self.scalar(&format!("{prefix}.beta2"))?,
            epsilon: self.scalar(&format!("{prefix}.epsilon"))?,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        for (name, entry) in &self.entries {
            match entry {
                Entry::Scalar(v) => {
                    let _ = writeln!(out, "scalar {name} {v:e}");
                }
                Entry::Tensor(t) => {
                    let _ = write!(out, "tensor {name}");
                    for d in &t.shape {
                        let _ = write!(out, " {d}");
                    }
                    out.push_str(" :");
                    for v in &t.data {
                        let _ = write!(out, " {v:e}");
                    }
                    out.push('\n');
                }
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self, NnError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim() == MAGIC => {}
            _ => return Err(NnError::Checkpoint("missing checkpoint header".into())),
        }
        let mut ckpt = Checkpoint::new();
        let parse_err = |line: usize, msg: &str| NnError::Checkpoint(format!("line {}: {msg}", line + 1));
        for (lineno, line) in lines {
            let mut tok = line.split_ascii_whitespace();
            match tok.next() {
                Some("end") => return Ok(ckpt),
                Some("scalar") => {
                    let name = tok.next().ok_or_else(|| parse_err(lineno, "missing name"))?;
                    let v = tok
                        .next()
                        .and_then(|s| s.parse::<f64>().ok())
                        .ok_or_else(|| parse_err(lineno, "bad scalar value"))?;
                    ckpt.put_scalar(name, v);
                }
                Some("tensor") => {
                    let name = tok.next().ok_or_else(|| parse_err(lineno, "missing name"))?;
                    let mut shape = Vec::new();
                    loop {
                        match tok.next() {
                            Some(":") => break,
                            Some(d) => shape.push(
                                d.parse::<usize>()
                                    .map_err(|_| parse_err(lineno, "bad dimension"))?,
                            ),
                            None => return Err(parse_err(lineno, "unterminated shape")),
                        }
                    }
                    let data = tok
                        .map(|s| s.parse::<f64>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| parse_err(lineno, "bad tensor value"))?;
                    if data.len() != shape.iter().product::<usize>() {
                        return Err(parse_err(lineno, "value count does not match shape"));
                    }
                    ckpt.entries
                        .push((name.to_string(), Entry::Tensor(Tensor { shape, data })));
                }
                Some(other) => return Err(parse_err(lineno, &format!("unknown record `{other}`"))),
                None => continue,
            }
        }
        Err(NnError::Checkpoint("missing `end` record".into()))
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        std::fs::write(path, self.to_text()).map_err(|e| NnError::Checkpoint(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, NnError> {
        let text = std::fs::read_to_string(path).map_err(|e| NnError::Checkpoint(e.to_string()))?;
        Self::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Head;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mlp_and_adam_round_trip_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = Mlp::two_hidden(14, 64, 5, Head::Softmax, 0.01, &mut rng).unwrap();
        let mut adam = AdamState::new(&net.tensors().iter().map(|t| t.len()).collect::<Vec<_>>());
        adam.step_count = 17;
        adam.first_moment[2][3] = 1.0 / 3.0;
        adam.second_moment[5][0] = 1e-300;

        let mut ck = Checkpoint::new();
        ck.put_mlp("local.actor", &net);
        ck.put_adam("local.actor.adam", &adam);
        let text = ck.to_text();
        let back = Checkpoint::from_text(&text).unwrap();
        assert_eq!(back, ck);
        let net2 = back.get_mlp("local.actor").unwrap();
        for (a, b) in net.tensors().iter().zip(net2.tensors()) {
            assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        assert_eq!(back.get_adam("local.actor.adam").unwrap(), adam);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(Checkpoint::from_text("nope\n").is_err());
        assert!(Checkpoint::from_text("hammer-checkpoint 1\ntensor x 2 : 1.0\nend\n").is_err());
        assert!(Checkpoint::from_text("hammer-checkpoint 1\nscalar x 1.0\n").is_err());
        assert!(Checkpoint::from_text("hammer-checkpoint 1\nwhat\nend\n").is_err());
    }

    proptest! {
        #[test]
        fn any_finite_value_round_trips(values in proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 0..50)) {
            let mut ck = Checkpoint::new();
            ck.put_vector("v", &values);
            let back = Checkpoint::from_text(&ck.to_text()).unwrap();
            let got = &back.tensor("v").unwrap().data;
            prop_assert_eq!(got.len(), values.len());
            for (a, b) in got.iter().zip(&values) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
