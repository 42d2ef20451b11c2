//! The two model problems: uniform source pushed onto a PDE-induced target.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::Result;
use crate::map::PushforwardMap;
use crate::measures::{closed_form_1d, closed_form_2d, ExactMap1d, Law, SampleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Example {
    /// Uniform on `[0,1]` to density `x + 1/2`.
    OneD,
    /// Uniform on the unit disk to density `(2/pi)(1 - |x|^2)`.
    TwoD,
}

impl Example {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "1d" => Some(Example::OneD),
            "2d" => Some(Example::TwoD),
            _ => None,
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Example::OneD => "1d",
            Example::TwoD => "2d",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Example::OneD => 1,
            Example::TwoD => 2,
        }
    }

    pub fn source(&self) -> Law {
        match self {
            Example::OneD => Law::UniformInterval { lo: 0.0, hi: 1.0 },
            Example::TwoD => Law::UniformDisk,
        }
    }

    pub fn target(&self) -> Law {
        match self {
            Example::OneD => Law::InverseCdf(Arc::new(closed_form_1d())),
            Example::TwoD => Law::RejectionDisk {
                density: Arc::new(closed_form_2d()),
                envelope: 2.0 / PI,
            },
        }
    }

    pub fn target_id(&self) -> &'static str {
        match self {
            Example::OneD => "closed_form_1d",
            Example::TwoD => "closed_form_2d",
        }
    }

    pub fn sample_source(&self, n: usize, seed: u64) -> Result<SampleSet> {
        self.source().sample(n, seed)
    }

    pub fn sample_target(&self, n: usize, seed: u64) -> Result<SampleSet> {
        Ok(self.target().sample(n, seed)?.with_measure_id(self.target_id()))
    }

    /// The optimal map, where known in closed form.
    pub fn exact_map(&self) -> Option<Box<dyn PushforwardMap>> {
        match self {
            Example::OneD => Some(Box::new(ExactMap1d)),
            Example::TwoD => None,
        }
    }

    /// Hidden-layer architecture used in the reference experiments.
    pub fn reference_layers(&self) -> Vec<usize> {
        let d = self.dim();
        vec![d, 256, 256, d]
    }
}
