use crate::error::{Error, Result};

use super::layout::SubsystemLayout;
use super::linalg::{isometry_defect, CMatrix, ZERO};

pub const ISOMETRY_TOL: f64 = 1e-10;

/// Linear map `V` with `V^H V = I` between labeled spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct Isometry {
    matrix: CMatrix,
    input: SubsystemLayout,
    output: SubsystemLayout,
}

impl Isometry {
    pub fn new(matrix: CMatrix, input: SubsystemLayout, output: SubsystemLayout) -> Result<Self> {
        Self::with_tolerance(matrix, input, output, ISOMETRY_TOL)
    }

    pub(crate) fn with_tolerance(
        matrix: CMatrix,
        input: SubsystemLayout,
        output: SubsystemLayout,
        tol: f64,
    ) -> Result<Self> {
        if matrix.nrows() != output.total_dim() || matrix.ncols() != input.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for {input} -> {output}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.nrows() < matrix.ncols() {
            return Err(Error::DimensionMismatch("isometry output smaller than input".into()));
        }
        let defect = isometry_defect(&matrix);
        if defect > tol {
            return Err(Error::NotIsometry(defect));
        }
        Ok(Self { matrix, input, output })
    }

    /// Skips the `V^H V` check for matrices built by an isometric construction.
    pub(crate) fn from_trusted(matrix: CMatrix, input: SubsystemLayout, output: SubsystemLayout) -> Self {
        debug_assert_eq!(matrix.shape(), (output.total_dim(), input.total_dim()));
        Self { matrix, input, output }
    }

    pub fn identity(layout: SubsystemLayout) -> Self {
        let d = layout.total_dim();
        Self { matrix: CMatrix::identity(d, d), input: layout.clone(), output: layout }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn input(&self) -> &SubsystemLayout {
        &self.input
    }

    pub fn output(&self) -> &SubsystemLayout {
        &self.output
    }

    pub fn defect(&self) -> f64 {
        isometry_defect(&self.matrix)
    }
}

/// Completely positive trace-preserving map in Kraus form.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    ops: Vec<CMatrix>,
    input: SubsystemLayout,
    output: SubsystemLayout,
}

impl KrausChannel {
    pub fn new(ops: Vec<CMatrix>, input: SubsystemLayout, output: SubsystemLayout) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidChannel(1.0));
        }
        let (din, dout) = (input.total_dim(), output.total_dim());
        let mut sum = CMatrix::zeros(din, din);
        for k in &ops {
            if k.nrows() != dout || k.ncols() != din {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator {}x{} for {input} -> {output}",
                    k.nrows(),
                    k.ncols()
                )));
            }
            sum += k.adjoint() * k;
        }
        let defect = (sum - CMatrix::identity(din, din)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if defect > ISOMETRY_TOL {
            return Err(Error::InvalidChannel(defect));
        }
        Ok(Self { ops, input, output })
    }

    /// Identity map between two layouts of equal total dimension.
    pub fn identity(input: SubsystemLayout, output: SubsystemLayout) -> Result<Self> {
        let d = input.total_dim();
        Self::new(vec![CMatrix::identity(output.total_dim(), d)], input, output)
    }

    /// Discards the input and prepares basis state `|0>` on the output.
    pub fn replacement(input: SubsystemLayout, output: SubsystemLayout) -> Result<Self> {
        let (din, dout) = (input.total_dim(), output.total_dim());
        let ops = (0..din)
            .map(|i| {
                let mut k = CMatrix::from_element(dout, din, ZERO);
                k[(0, i)] = super::linalg::ONE;
                k
            })
            .collect();
        Self::new(ops, input, output)
    }

    /// Stinespring dilation `input -> output (x) env`, with `env` of dimension `#ops`.
    pub fn stinespring(&self, env_label: &str) -> Result<Isometry> {
        let r = self.ops.len();
        let env = SubsystemLayout::single(env_label, r)?;
        let out_layout = self.output.concat(&env)?;
        let (din, dout) = (self.input.total_dim(), self.output.total_dim());
        let mut v = CMatrix::zeros(dout * r, din);
        for (k, op) in self.ops.iter().enumerate() {
            for o in 0..dout {
                for i in 0..din {
                    v[(o * r + k, i)] = op[(o, i)];
                }
            }
        }
        Isometry::new(v, self.input.clone(), out_layout)
    }

    pub fn kraus_ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn input(&self) -> &SubsystemLayout {
        &self.input
    }

    pub fn output(&self) -> &SubsystemLayout {
        &self.output
    }
}
