//! Point location in the image of a lattice under a map.
//!
//! Each lattice cell is split into two triangles; their images under the map
//! are binned on a uniform grid over the image bounding box.

use num_complex::Complex64;

pub(crate) struct ImageMesh<'a> {
    n: usize,
    points: &'a [Complex64],
    lo: Complex64,
    bin: f64,
    bins_per_axis: usize,
    bins: Vec<Vec<u32>>,
}

const SLACK: f64 = 1e-10;

impl<'a> ImageMesh<'a> {
    /// `points` are the images of an `n × n` lattice in row-major order;
    /// triangles touching a node with `usable[k] == false` are left out.
    pub fn new(n: usize, points: &'a [Complex64], usable: impl Fn(usize) -> bool) -> Self {
        let (mut lo, mut hi) = (
            Complex64::new(f64::INFINITY, f64::INFINITY),
            Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for p in points {
            lo = Complex64::new(lo.re.min(p.re), lo.im.min(p.im));
            hi = Complex64::new(hi.re.max(p.re), hi.im.max(p.im));
        }
        let bins_per_axis = (n - 1).max(1);
        let bin = ((hi.re - lo.re).max(hi.im - lo.im) / bins_per_axis as f64).max(f64::MIN_POSITIVE);
        let mut mesh = Self {
            n,
            points,
            lo,
            bin,
            bins_per_axis,
            bins: vec![Vec::new(); bins_per_axis * bins_per_axis],
        };
        for t in 0..2 * (n - 1) * (n - 1) {
            let v = mesh.vertices(t);
            if !v.iter().all(|&k| usable(k)) {
                continue;
            }
            let p = v.map(|k| points[k]);
            let (xa, xb) = mesh.bin_range(p.iter().map(|q| q.re), lo.re);
            let (ya, yb) = mesh.bin_range(p.iter().map(|q| q.im), lo.im);
            for by in ya..=yb {
                for bx in xa..=xb {
                    mesh.bins[by * bins_per_axis + bx].push(t as u32);
                }
            }
        }
        mesh
    }

    fn bin_range(&self, coords: impl Iterator<Item = f64> + Clone, origin: f64) -> (usize, usize) {
        let min = coords.clone().fold(f64::INFINITY, f64::min);
        let max = coords.fold(f64::NEG_INFINITY, f64::max);
        (self.bin_of(min - origin), self.bin_of(max - origin))
    }

    fn bin_of(&self, offset: f64) -> usize {
        ((offset / self.bin).floor().max(0.0) as usize).min(self.bins_per_axis - 1)
    }

    fn vertices(&self, t: usize) -> [usize; 3] {
        let cells = self.n - 1;
        let (c, upper) = (t / 2, t % 2 == 1);
        let (i, j) = (c % cells, c / cells);
        let k = |a: usize, b: usize| b * self.n + a;
        if upper {
            [k(i, j), k(i + 1, j + 1), k(i, j + 1)]
        } else {
            [k(i, j), k(i + 1, j), k(i + 1, j + 1)]
        }
    }

    /// Triangle containing `w` and its barycentric coordinates.
    pub fn locate(&self, w: Complex64) -> Option<([usize; 3], [f64; 3])> {
        let off = w - self.lo;
        if off.re < -SLACK || off.im < -SLACK {
            return None;
        }
        let (bx, by) = (
            (off.re / self.bin).floor() as usize,
            (off.im / self.bin).floor() as usize,
        );
        if bx > self.bins_per_axis || by > self.bins_per_axis {
            return None;
        }
        let (bx, by) = (bx.min(self.bins_per_axis - 1), by.min(self.bins_per_axis - 1));
        let mut best: Option<([usize; 3], [f64; 3])> = None;
        let mut best_min = -SLACK;
        for &t in &self.bins[by * self.bins_per_axis + bx] {
            let v = self.vertices(t as usize);
            let Some(bary) = barycentric(w, v.map(|k| self.points[k])) else {
                continue;
            };
            let m = bary[0].min(bary[1]).min(bary[2]);
            if m >= best_min {
                best_min = m;
                best = Some((v, bary));
                if m >= 0.0 {
                    break;
                }
            }
        }
        best
    }
}

fn barycentric(w: Complex64, p: [Complex64; 3]) -> Option<[f64; 3]> {
    let (a, b, c) = (p[0], p[1], p[2]);
    let cross = |u: Complex64, v: Complex64| u.re * v.im - u.im * v.re;
    let area = cross(b - a, c - a);
    if area.abs() < f64::MIN_POSITIVE {
        return None;
    }
    let l1 = cross(b - w, c - w) / area;
    let l2 = cross(c - w, a - w) / area;
    Some([l1, l2, 1.0 - l1 - l2])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverts_a_shear() {
        let n = 21;
        let h = 2.0 / (n - 1) as f64;
        let f = |z: Complex64| z + 0.4 * z.conj() + Complex64::new(0.0, 0.1) * z * z;
        let points: Vec<Complex64> = (0..n * n)
            .map(|k| f(Complex64::new(-1.0 + (k % n) as f64 * h, -1.0 + (k / n) as f64 * h)))
            .collect();
        let mesh = ImageMesh::new(n, &points, |_| true);
        let z0 = Complex64::new(0.23, -0.41);
        let (v, bary) = mesh.locate(f(z0)).unwrap();
        let z = |k: usize| Complex64::new(-1.0 + (k % n) as f64 * h, -1.0 + (k / n) as f64 * h);
        let back = z(v[0]) * bary[0] + z(v[1]) * bary[1] + z(v[2]) * bary[2];
        assert!((back - z0).norm() < 1e-2);
        assert!(mesh.locate(Complex64::new(5.0, 5.0)).is_none());
    }

    #[test]
    fn nodes_are_found_exactly() {
        let n = 5;
        let points: Vec<Complex64> = (0..n * n)
            .map(|k| Complex64::new((k % n) as f64, (k / n) as f64))
            .collect();
        let mesh = ImageMesh::new(n, &points, |_| true);
        let (v, bary) = mesh.locate(Complex64::new(2.0, 3.0)).unwrap();
        let at: f64 = v
            .iter()
            .zip(bary)
            .filter(|(&k, _)| k == 3 * n + 2)
            .map(|(_, b)| b)
            .sum();
        assert!((at - 1.0).abs() < 1e-12);
    }
}
