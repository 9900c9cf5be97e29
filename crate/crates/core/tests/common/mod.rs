//! Helpers shared by integration test targets.

use qdcnn::conv::ConvGeometry;

/// Counts window origins along one axis by walking the padded grid.
fn enumerate_axis(input: usize, m: usize, s: usize, p: usize, r: usize) -> usize {
    let lo = -(p as isize);
    let hi = (input + p) as isize; // exclusive
    let mut count = 0;
    let mut origin = lo;
    loop {
        let last_tap = origin + ((m - 1) * r) as isize;
        if last_tap >= hi {
            break;
        }
        count += 1;
        origin += s as isize;
    }
    count
}

/// Checks the closed form against exhaustive enumeration over the grid.
pub fn check_shape_grid() -> usize {
    let mut checked = 0;
    for i in 4..=32 {
        for m in 1..=4 {
            for s in 1..=3 {
                for p in 0..=2 {
                    for r in 1..=4 {
                        let g = ConvGeometry::square(m, s, p, r).unwrap();
                        let want = enumerate_axis(i, m, s, p, r);
                        match g.output_dims(i, i) {
                            Ok((ow, oh)) => {
                                assert_eq!((ow, oh), (want, want), "i={i} m={m} s={s} p={p} r={r}");
                                if r == 1 {
                                    assert_eq!(ow, (i - m + 2 * p) / s + 1);
                                }
                            }
                            Err(_) => assert_eq!(want, 0, "i={i} m={m} s={s} p={p} r={r}"),
                        }
                        checked += 1;
                    }
                }
            }
        }
    }
    checked
}
