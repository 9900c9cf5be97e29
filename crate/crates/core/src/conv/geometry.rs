use crate::error::{Error, Result};

/// Kernel size, stride, zero padding and dilation rate of a 2-D convolution.
///
/// `kernel_m` and input extent `i_w` refer to the first (row) axis of an
/// image, `kernel_n` and `i_h` to the second. Output positions `(i, j)` and
/// patch coordinates use the same (first, second) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConvGeometry {
    pub kernel_m: usize,
    pub kernel_n: usize,
    pub stride: usize,
    pub padding: usize,
    pub dilation: usize,
}

impl Default for ConvGeometry {
    /// 2×2 kernel, stride 2, no padding, no dilation.
    fn default() -> Self {
        ConvGeometry {
            kernel_m: 2,
            kernel_n: 2,
            stride: 2,
            padding: 0,
            dilation: 1,
        }
    }
}

impl ConvGeometry {
    pub fn new(
        kernel_m: usize,
        kernel_n: usize,
        stride: usize,
        padding: usize,
        dilation: usize,
    ) -> Result<Self> {
        let g = ConvGeometry {
            kernel_m,
            kernel_n,
            stride,
            padding,
            dilation,
        };
        g.validate()?;
        Ok(g)
    }

    /// Square kernel with the given stride, padding and dilation.
    pub fn square(kernel: usize, stride: usize, padding: usize, dilation: usize) -> Result<Self> {
        ConvGeometry::new(kernel, kernel, stride, padding, dilation)
    }

    pub fn with_dilation(self, dilation: usize) -> Self {
        ConvGeometry { dilation, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel_m == 0 || self.kernel_n == 0 {
            return Err(Error::Geometry("kernel dimensions must be at least 1".into()));
        }
        if self.stride == 0 {
            return Err(Error::Geometry("stride must be at least 1".into()));
        }
        if self.dilation == 0 {
            return Err(Error::Geometry("dilation rate must be at least 1".into()));
        }
        Ok(())
    }

    pub fn kernel_len(&self) -> usize {
        self.kernel_m * self.kernel_n
    }

    /// Input extent covered by one dilated kernel: `m + (m−1)(r−1)` per axis.
    pub fn receptive_field(&self) -> (usize, usize) {
        (
            self.kernel_m + (self.kernel_m - 1) * (self.dilation - 1),
            self.kernel_n + (self.kernel_n - 1) * (self.dilation - 1),
        )
    }

    fn axis_len(&self, input: usize, extent: usize, axis: &str) -> Result<usize> {
        let padded = input + 2 * self.padding;
        if extent > padded {
            return Err(Error::Geometry(format!(
                "dilated kernel extent {extent} exceeds padded {axis} extent {padded}"
            )));
        }
        Ok((padded - extent) / self.stride + 1)
    }

    /// `o = ⌊(i − m − (m−1)(r−1) + 2p) / s⌋ + 1` on each axis.
    pub fn output_dims(&self, i_w: usize, i_h: usize) -> Result<(usize, usize)> {
        self.validate()?;
        let (em, en) = self.receptive_field();
        Ok((self.axis_len(i_w, em, "first-axis")?, self.axis_len(i_h, en, "second-axis")?))
    }

    /// Circuit executions needed to sweep one `i_w × i_h` image.
    pub fn positions(&self, i_w: usize, i_h: usize) -> Result<usize> {
        let (ow, oh) = self.output_dims(i_w, i_h)?;
        Ok(ow * oh)
    }

    /// Input coordinates read by output cell `(i, j)`, row-major over the
    /// kernel: `(i·s + q·r − p, j·s + l·r − p)`. Coordinates outside the
    /// image denote zero-padding reads.
    pub fn patch_indices(
        &self,
        out_pos: (usize, usize),
        i_w: usize,
        i_h: usize,
    ) -> Result<Vec<(isize, isize)>> {
        let (ow, oh) = self.output_dims(i_w, i_h)?;
        let (i, j) = out_pos;
        if i >= ow || j >= oh {
            return Err(Error::Geometry(format!(
                "output position ({i}, {j}) outside output dims ({ow}, {oh})"
            )));
        }
        Ok(self.patch_iter(i, j).collect())
    }

    pub(crate) fn patch_iter(&self, i: usize, j: usize) -> impl Iterator<Item = (isize, isize)> + '_ {
        let (s, r, p) = (
            self.stride as isize,
            self.dilation as isize,
            self.padding as isize,
        );
        (0..self.kernel_m as isize).flat_map(move |q| {
            (0..self.kernel_n as isize)
                .map(move |l| (i as isize * s + q * r - p, j as isize * s + l * r - p))
        })
    }
}
