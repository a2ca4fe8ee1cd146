use serde::{Deserialize, Serialize};

/// Layer whose parameters are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "layer", rename_all = "lowercase")]
pub enum LayerDesc {
    Dense {
        window: usize,
        c_in: usize,
        c_out: usize,
    },
    /// One learnable weight per pair per `(c_out, c_in)`.
    Pdc {
        pairs: usize,
        c_in: usize,
        c_out: usize,
    },
    /// `m` fixed binary kernels followed by a `c_out x m` pooling.
    Lbc {
        m: usize,
        window: usize,
        c_in: usize,
        c_out: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamCount {
    pub learnable: u64,
    pub fixed: u64,
}

pub fn param_count(layer: &LayerDesc) -> ParamCount {
    let u = |v: usize| v as u64;
    match *layer {
        LayerDesc::Dense {
            window,
            c_in,
            c_out,
        } => ParamCount {
            learnable: u(window * window * c_in * c_out),
            fixed: 0,
        },
        LayerDesc::Pdc { pairs, c_in, c_out } => ParamCount {
            learnable: u(pairs * c_in * c_out),
            fixed: 0,
        },
        LayerDesc::Lbc {
            m,
            window,
            c_in,
            c_out,
        } => ParamCount {
            learnable: u(m * c_out),
            fixed: u(m * c_in * window * window),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_vs_lbc() {
        let dense = param_count(&LayerDesc::Dense {
            window: 3,
            c_in: 64,
            c_out: 128,
        });
        assert_eq!(dense.learnable, 73_728);
        let lbc = param_count(&LayerDesc::Lbc {
            m: 64,
            window: 3,
            c_in: 64,
            c_out: 128,
        });
        assert_eq!(lbc.learnable, 8192);
        assert_eq!(lbc.fixed, 64 * 64 * 9);
        assert_eq!(dense.learnable as f64 / lbc.learnable as f64, 9.0);
        let pdc = param_count(&LayerDesc::Pdc {
            pairs: 8,
            c_in: 64,
            c_out: 128,
        });
        assert_eq!(pdc.learnable, 65_536);
    }
}
