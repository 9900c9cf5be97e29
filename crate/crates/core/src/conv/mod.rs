//! Dilated convolution: output shapes, dilated patch coordinates, a classical
//! reference convolution, and the quantum convolution layer.

mod geometry;
mod tensor;

pub use geometry::ConvGeometry;
pub use tensor::{read_tensors, write_tensors, FeatureTensor, Image};

use crate::error::{Error, Result};
use crate::qfilter::{Executor, GradMethod, Jacobian, QuantumFilter};

fn single_channel(image: &Image) -> Result<()> {
    if image.channels() != 1 {
        return Err(Error::Usage(format!(
            "only single-channel inputs are supported, got {} channels",
            image.channels()
        )));
    }
    Ok(())
}

/// `y[i,j] = Σ_q Σ_l k[q,l] · x[i·s + q·r − p, j·s + l·r − p]` with zero
/// padding. `kernel` is `m × n`, row-major. Reference path for tests and
/// geometry checks.
pub fn classical_dilated_conv(
    image: &Image,
    kernel: &[f64],
    geometry: &ConvGeometry,
) -> Result<FeatureTensor> {
    single_channel(image)?;
    if kernel.len() != geometry.kernel_len() {
        return Err(Error::Geometry(format!(
            "kernel has {} weights, geometry expects {}",
            kernel.len(),
            geometry.kernel_len()
        )));
    }
    let (ow, oh) = geometry.output_dims(image.rows(), image.cols())?;
    let mut out = FeatureTensor::zeros(ow, oh, 1);
    for i in 0..ow {
        for j in 0..oh {
            let y = geometry
                .patch_iter(i, j)
                .zip(kernel)
                .map(|((a, b), k)| k * image.get_padded(a, b, 0))
                .sum();
            out.set(i, j, 0, y);
        }
    }
    Ok(out)
}

fn check_filter(image: &Image, filter: &QuantumFilter, geometry: &ConvGeometry) -> Result<(usize, usize)> {
    single_channel(image)?;
    if filter.patch_len() != geometry.kernel_len() {
        return Err(Error::Config(format!(
            "filter encodes {} pixels but the kernel is {}×{}",
            filter.patch_len(),
            geometry.kernel_m,
            geometry.kernel_n
        )));
    }
    geometry.output_dims(image.rows(), image.cols())
}

/// Gathers the dilated patch for output cell `(i, j)` into `buf`.
pub fn gather_patch(image: &Image, geometry: &ConvGeometry, i: usize, j: usize, buf: &mut Vec<f64>) {
    buf.clear();
    buf.extend(geometry.patch_iter(i, j).map(|(a, b)| image.get_padded(a, b, 0)));
}

/// Slides the quantum filter over `image`, one circuit per output cell in
/// row-major order. The result has one channel per qubit.
pub fn quantum_conv(
    image: &Image,
    filter: &QuantumFilter,
    geometry: &ConvGeometry,
    executor: &Executor,
) -> Result<FeatureTensor> {
    let (ow, oh) = check_filter(image, filter, geometry)?;
    let channels = filter.n_channels();
    let mut values = Vec::with_capacity(ow * oh * channels);
    let mut patch = Vec::with_capacity(geometry.kernel_len());
    for i in 0..ow {
        for j in 0..oh {
            gather_patch(image, geometry, i, j, &mut patch);
            values.extend_from_slice(executor.apply_filter(filter, &patch)?.values());
        }
    }
    FeatureTensor::new(ow, oh, channels, values)
}

/// Like [`quantum_conv`], also returning the filter Jacobian of every output
/// cell (row-major). Costs `1 + gradient_cost` executions per cell.
pub fn quantum_conv_with_jacobians(
    image: &Image,
    filter: &QuantumFilter,
    geometry: &ConvGeometry,
    executor: &Executor,
    method: GradMethod,
) -> Result<(FeatureTensor, Vec<Jacobian>)> {
    let (ow, oh) = check_filter(image, filter, geometry)?;
    let channels = filter.n_channels();
    let mut values = Vec::with_capacity(ow * oh * channels);
    let mut jacobians = Vec::with_capacity(ow * oh);
    let mut patch = Vec::with_capacity(geometry.kernel_len());
    for i in 0..ow {
        for j in 0..oh {
            gather_patch(image, geometry, i, j, &mut patch);
            let (fwd, jac) = executor.forward_with_jacobian(filter, &patch, method)?;
            values.extend_from_slice(fwd.values());
            jacobians.push(jac);
        }
    }
    Ok((FeatureTensor::new(ow, oh, channels, values)?, jacobians))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfilter::{CircuitSpec, generate_random_spec};
    use crate::qsim::{Gate, GateKind};

    fn ramp5() -> Image {
        Image::image(5, 5, (0..25).map(f64::from).collect()).unwrap()
    }

    #[test]
    fn ramp_r2_hand_sums() {
        // x[a][b] = 5a + b, k = [[1,2],[3,4]], r = 2, s = 1:
        // y[i][j] = x[i][j] + 2x[i][j+2] + 3x[i+2][j] + 4x[i+2][j+2] = 50i + 10j + 82
        let g = ConvGeometry::square(2, 1, 0, 2).unwrap();
        let y = classical_dilated_conv(&ramp5(), &[1.0, 2.0, 3.0, 4.0], &g).unwrap();
        assert_eq!(y.dims(), (3, 3, 1));
        let expect = [82.0, 92.0, 102.0, 132.0, 142.0, 152.0, 182.0, 192.0, 202.0];
        assert_eq!(y.values(), &expect);
    }

    #[test]
    fn constant_image_all_ones_kernel() {
        let img = Image::image(6, 6, vec![0.375; 36]).unwrap();
        for r in 1..=3 {
            let g = ConvGeometry::square(2, 1, 0, r).unwrap();
            let y = classical_dilated_conv(&img, &[1.0; 4], &g).unwrap();
            assert!(y.values().iter().all(|&v| v == 4.0 * 0.375));
        }
    }

    #[test]
    fn kernel_size_checked() {
        let g = ConvGeometry::default();
        assert!(matches!(
            classical_dilated_conv(&ramp5(), &[1.0; 3], &g),
            Err(Error::Geometry(_))
        ));
    }

    fn zero_rotation_filter() -> QuantumFilter {
        let layer = (0..4)
            .map(|w| Gate::rotation(GateKind::RY, w, w).unwrap())
            .collect();
        let spec = CircuitSpec::new(0, 4, (0..4).collect(), false, vec![layer]).unwrap();
        QuantumFilter::new(spec, vec![0.0; 4], false).unwrap()
    }

    #[test]
    fn quantum_conv_shapes_and_counts() {
        let img = Image::image(28, 28, vec![0.0; 784]).unwrap();
        let f = zero_rotation_filter();
        for (r, side) in [(1, 14), (2, 13), (3, 13)] {
            let ex = Executor::analytic();
            let g = ConvGeometry::default().with_dilation(r);
            let y = quantum_conv(&img, &f, &g, &ex).unwrap();
            assert_eq!(y.dims(), (side, side, 4));
            assert_eq!(ex.executions(), (side * side) as u64);
            assert!(y.values().iter().all(|&v| v == 1.0));
        }
    }

    #[test]
    fn quantum_conv_rejects_multichannel_and_bad_kernel() {
        let f = zero_rotation_filter();
        let ex = Executor::analytic();
        let rgb = FeatureTensor::zeros(8, 8, 3);
        assert!(matches!(
            quantum_conv(&rgb, &f, &ConvGeometry::default(), &ex),
            Err(Error::Usage(_))
        ));
        let img = Image::image(8, 8, vec![0.0; 64]).unwrap();
        let g = ConvGeometry::square(3, 1, 0, 1).unwrap();
        assert!(matches!(quantum_conv(&img, &f, &g, &ex), Err(Error::Config(_))));
    }

    #[test]
    fn jacobian_sweep_counts() {
        let spec = generate_random_spec(4, 4, 2, 4).unwrap();
        let f = QuantumFilter::with_random_theta(spec, 4, true).unwrap();
        let img = Image::image(6, 6, (0..36).map(|v| v as f64 / 35.0).collect()).unwrap();
        let g = ConvGeometry::default().with_dilation(2);
        let ex = Executor::analytic();
        let (y, jacs) =
            quantum_conv_with_jacobians(&img, &f, &g, &ex, GradMethod::ParameterShift).unwrap();
        assert_eq!(y.dims(), (2, 2, 4));
        assert_eq!(jacs.len(), 4);
        assert_eq!(ex.executions(), 4 * 17);
        let plain = quantum_conv(&img, &f, &g, &Executor::analytic()).unwrap();
        assert_eq!(plain, y);
    }
}
