use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;

use super::{Arch, NetworkConfig};

/// Offsets of each tensor inside [`NetworkParams::values`].
///
/// Recurrent archs: `input` is the gate-stacked input kernel (`G·H × n`),
/// `recurrent` the gate-stacked recurrent kernel (`G·H × H`), `bias` (`G·H`).
/// CNN: `input` holds the kernels (`K × k × n`), `bias` one per kernel, and
/// `recurrent` is empty. Both end with the dense head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub input: Range<usize>,
    pub recurrent: Range<usize>,
    pub bias: Range<usize>,
    pub head_w: Range<usize>,
    pub head_b: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub arch: Arch,
    /// Features per timestep.
    pub n: usize,
    /// Window length.
    pub l: usize,
    pub hidden: usize,
    pub kernels: usize,
    pub kernel_width: usize,
    pub values: Vec<f64>,
}

impl NetworkParams {
    /// Zero-valued parameters with the shape implied by `cfg`, `n` and `l`.
    pub fn zeros(cfg: &NetworkConfig, n: usize, l: usize) -> Result<Self> {
        cfg.validate()?;
        if n == 0 || l == 0 {
            return Err(Error::invalid("network input must have n ≥ 1 and l ≥ 1"));
        }
        if cfg.arch == Arch::Cnn && cfg.kernel_width >= l {
            return Err(Error::invalid(format!(
                "kernel width {} must be smaller than window length {l}",
                cfg.kernel_width
            )));
        }
        let mut p = Self {
            arch: cfg.arch,
            n,
            l,
            hidden: cfg.hidden_size,
            kernels: cfg.kernel_count,
            kernel_width: cfg.kernel_width,
            values: Vec::new(),
        };
        p.values = vec![0.0; p.layout().head_b + 1];
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Gate blocks stacked in the recurrent kernels (LSTM i,f,g,o; GRU r,z,h).
    pub fn gates(&self) -> usize {
        match self.arch {
            Arch::Lstm => 4,
            Arch::Gru => 3,
            Arch::Cnn => 0,
        }
    }

    /// Number of conv outputs per kernel.
    pub fn conv_len(&self) -> usize {
        self.l + 1 - self.kernel_width
    }

    /// Width of the representation fed to the dense head.
    pub fn head_inputs(&self) -> usize {
        match self.arch {
            Arch::Cnn => self.kernels * self.conv_len(),
            _ => self.hidden,
        }
    }

    pub fn layout(&self) -> Layout {
        let (input, recurrent, bias) = match self.arch {
            Arch::Cnn => {
                let k = self.kernels * self.kernel_width * self.n;
                (k, 0, self.kernels)
            }
            _ => {
                let gh = self.gates() * self.hidden;
                (gh * self.n, gh * self.hidden, gh)
            }
        };
        let r = input..input + recurrent;
        let b = r.end..r.end + bias;
        let h = b.end..b.end + self.head_inputs();
        Layout {
            input: 0..input,
            recurrent: r,
            bias: b,
            head_b: h.end,
            head_w: h,
        }
    }

    /// Coordinates covered by the L2 penalty (the input layer).
    pub fn regularized(&self) -> Range<usize> {
        self.layout().input
    }

    /// Named tensors with their shapes, in storage order.
    pub fn shapes(&self) -> Vec<(&'static str, Vec<usize>)> {
        let lay = self.layout();
        match self.arch {
            Arch::Cnn => vec![
                ("kernels", vec![self.kernels, self.kernel_width, self.n]),
                ("kernel_bias", vec![self.kernels]),
                ("head_w", vec![lay.head_w.len()]),
                ("head_b", vec![1]),
            ],
            _ => {
                let gh = self.gates() * self.hidden;
                vec![
                    ("input_kernel", vec![gh, self.n]),
                    ("recurrent_kernel", vec![gh, self.hidden]),
                    ("bias", vec![gh]),
                    ("head_w", vec![self.hidden]),
                    ("head_b", vec![1]),
                ]
            }
        }
    }

    pub fn check_window(&self, l: usize, n: usize) -> Result<()> {
        if l != self.l || n != self.n {
            return Err(Error::invalid(format!(
                "window is {l}×{n} but the network expects {}×{}",
                self.l, self.n
            )));
        }
        Ok(())
    }
}

/// Uniform fan-in initialization, deterministic in `cfg.seed`.
pub fn init_params(cfg: &NetworkConfig, n: usize, l: usize) -> Result<NetworkParams> {
    let mut p = NetworkParams::zeros(cfg, n, l)?;
    let lay = p.layout();
    let mut rng = seeded(cfg.seed);
    let mut fill = |v: &mut [f64], fan_in: usize| {
        let s = 1.0 / (fan_in as f64).sqrt();
        for x in v {
            *x = rng.random_range(-s..=s);
        }
    };
    match p.arch {
        Arch::Cnn => {
            let fan = p.kernel_width * p.n;
            fill(&mut p.values[lay.input.clone()], fan);
        }
        _ => {
            fill(&mut p.values[lay.input.clone()], n);
            fill(&mut p.values[lay.recurrent.clone()], p.hidden);
        }
    }
    let head_fan = p.head_inputs();
    fill(&mut p.values[lay.head_w.clone()], head_fan);
    if p.arch == Arch::Lstm {
        let h = p.hidden;
        p.values[lay.bias.start + h..lay.bias.start + 2 * h].fill(1.0);
    }
    Ok(p)
}
