//! Central moments, affine moment invariants and affine resampling.
//!
//! Features are ten affine moment invariants (orders up to four) of a
//! real-valued raster. Each invariant is an isobaric polynomial in the
//! central moments, normalized by a power of mu00 so the value is
//! unchanged by any non-degenerate affine deformation of the underlying
//! shape. The set was generated with the graph method: an invariant of
//! weight w and degree r corresponds to a multigraph on r vertices,
//! every edge (i, j) contributing a cross factor
//! x_i*y_j - x_j*y_i to the symmetrized integrand, and the normalizer
//! is mu00^(w+r). All ten polynomials were verified symbolically
//! against the exact affine transformation law of central moments, and
//! the same law backs a property test below.
//!
//! Coordinate convention throughout: x is the column index, y is the
//! row index, so a raster element `[row, col]` is the sample at
//! (x, y) = (col, row).

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::segmentation::SegmentedAei;

/// Binomial coefficients C(n, k) for n, k <= 4.
const BINOM: [[f64; 5]; 5] = [
    [1.0, 0.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 0.0, 0.0],
    [1.0, 2.0, 1.0, 0.0, 0.0],
    [1.0, 3.0, 3.0, 1.0, 0.0],
    [1.0, 4.0, 6.0, 4.0, 1.0],
];

/// Central moments mu_ab of a raster for a + b <= 4.
///
/// Computed with an integer anchor: the raster is first reduced about
/// the rounded centroid (an exact integer shift), and the residual
/// sub-pixel centroid offset is removed afterwards with the binomial
/// shift identity. Because an integer translation of the input moves
/// the anchor by exactly the same offset, every floating-point
/// operation sees identical operands and the resulting moments are
/// bit-for-bit translation invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralMoments {
    mu: [[f64; 5]; 5],
    centroid: (f64, f64),
}

impl CentralMoments {
    /// mu_ab with a the x-order (columns) and b the y-order (rows).
    pub fn mu(&self, a: usize, b: usize) -> f64 {
        debug_assert!(a + b <= 4, "moment order {a}+{b} out of range");
        self.mu[a][b]
    }

    /// Total mass mu00.
    pub fn mass(&self) -> f64 {
        self.mu[0][0]
    }

    /// Centroid (x, y) in raster coordinates.
    pub fn centroid(&self) -> (f64, f64) {
        self.centroid
    }

    #[cfg(test)]
    pub(crate) fn from_raw(mu: [[f64; 5]; 5], centroid: (f64, f64)) -> Self {
        CentralMoments { mu, centroid }
    }
}

fn central_moments_inner(image: &Array2<f64>) -> Option<CentralMoments> {
    let (h, w) = image.dim();

    // Pass 1: raw moments for the anchor.
    let mut m00 = 0.0;
    let mut m10 = 0.0;
    let mut m01 = 0.0;
    for y in 0..h {
        for x in 0..w {
            let v = image[[y, x]];
            if v != 0.0 {
                m00 += v;
                m10 += x as f64 * v;
                m01 += y as f64 * v;
            }
        }
    }
    if !m00.is_finite() || m00 <= 0.0 {
        return None;
    }
    let ax = (m10 / m00).round();
    let ay = (m01 / m00).round();

    // Pass 2: moments about the integer anchor.
    let mut eta = [[0.0f64; 5]; 5];
    for y in 0..h {
        for x in 0..w {
            let v = image[[y, x]];
            if v == 0.0 {
                continue;
            }
            let dx = x as f64 - ax;
            let dy = y as f64 - ay;
            let dx2 = dx * dx;
            let dy2 = dy * dy;
            let px = [1.0, dx, dx2, dx2 * dx, dx2 * dx2];
            let py = [1.0, dy, dy2, dy2 * dy, dy2 * dy2];
            for a in 0..5 {
                for b in 0..5 - a {
                    eta[a][b] += px[a] * py[b] * v;
                }
            }
        }
    }

    // Residual sub-pixel centroid relative to the anchor.
    let fx = eta[1][0] / eta[0][0];
    let fy = eta[0][1] / eta[0][0];

    // Binomial shift to true central moments:
    // mu_ab = sum_{i<=a, j<=b} C(a,i) C(b,j) (-fx)^(a-i) (-fy)^(b-j) eta_ij
    let nfx = [1.0, -fx, fx * fx, -fx * fx * fx, fx * fx * fx * fx];
    let nfy = [1.0, -fy, fy * fy, -fy * fy * fy, fy * fy * fy * fy];
    let mut mu = [[0.0f64; 5]; 5];
    for a in 0..5 {
        for b in 0..5 - a {
            let mut acc = 0.0;
            for i in 0..=a {
                for j in 0..=b {
                    acc += BINOM[a][i] * BINOM[b][j] * nfx[a - i] * nfy[b - j] * eta[i][j];
                }
            }
            mu[a][b] = acc;
        }
    }
    // First-order central moments vanish identically; pin them so
    // downstream algebra never sees residual rounding noise.
    mu[1][0] = 0.0;
    mu[0][1] = 0.0;

    Some(CentralMoments {
        mu,
        centroid: (ax + fx, ay + fy),
    })
}

/// Central moments of a nonnegative raster up to order four.
pub fn central_moments(image: &Array2<f64>) -> Result<CentralMoments> {
    central_moments_inner(image).ok_or(Error::ZeroMass)
}

/// Ten affine moment invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmiVector {
    values: [f64; 10],
}

impl AmiVector {
    pub fn new(values: [f64; 10]) -> Self {
        AmiVector { values }
    }

    pub fn zeros() -> Self {
        AmiVector { values: [0.0; 10] }
    }

    pub fn values(&self) -> &[f64; 10] {
        &self.values
    }
}

/// Evaluates the ten affine moment invariants from central moments.
///
/// Normalizer exponents follow the graph-method rule w + r (weight
/// plus degree); every polynomial below is isobaric of even weight, so
/// the features are also reflection invariant.
pub fn ami_vector(m: &CentralMoments) -> AmiVector {
    let m02 = m.mu(0, 2);
    let m03 = m.mu(0, 3);
    let m04 = m.mu(0, 4);
    let m11 = m.mu(1, 1);
    let m12 = m.mu(1, 2);
    let m13 = m.mu(1, 3);
    let m20 = m.mu(2, 0);
    let m21 = m.mu(2, 1);
    let m22 = m.mu(2, 2);
    let m30 = m.mu(3, 0);
    let m31 = m.mu(3, 1);
    let m40 = m.mu(4, 0);

    // Powers of mu00 up to 11.
    let mut pow00 = [1.0f64; 12];
    for i in 1..12 {
        pow00[i] = pow00[i - 1] * m.mass();
    }

    // weight 2, degree 2 (graph: double edge on two vertices)
    let a1 = (m02 * m20 - m11 * m11) / pow00[4];

    // weight 6, degree 4; third-order moments only
    let a2 = (m03 * m03 * m30 * m30 - 6.0 * m03 * m12 * m21 * m30
        + 4.0 * m03 * m21 * m21 * m21
        + 4.0 * m12 * m12 * m12 * m30
        - 3.0 * m12 * m12 * m21 * m21)
        / pow00[10];

    // weight 4, degree 3; second and third order
    let a3 =
        (m02 * m12 * m30 - m02 * m21 * m21 - m03 * m11 * m30 + m03 * m20 * m21 + m11 * m12 * m21
            - m12 * m12 * m20)
            / pow00[7];

    // weight 6, degree 5; second and third order
    let a4 = (m02 * m02 * m02 * m30 * m30 - 6.0 * m02 * m02 * m11 * m21 * m30
        + 3.0 * m02 * m02 * m20 * m21 * m21
        + 6.0 * m02 * m11 * m11 * m12 * m30
        + 6.0 * m02 * m11 * m11 * m21 * m21
        - 12.0 * m02 * m11 * m12 * m20 * m21
        + 3.0 * m02 * m12 * m12 * m20 * m20
        + m03 * m03 * m20 * m20 * m20
        - 2.0 * m03 * m11 * m11 * m11 * m30
        + 6.0 * m03 * m11 * m11 * m20 * m21
        - 6.0 * m03 * m11 * m12 * m20 * m20
        - 6.0 * m11 * m11 * m11 * m12 * m21
        + 6.0 * m11 * m11 * m12 * m12 * m20)
        / pow00[11];

    // weight 4, degree 2; fourth order only
    let a5 = (m04 * m40 - 4.0 * m13 * m31 + 3.0 * m22 * m22) / pow00[6];

    // weight 6, degree 3; fourth order only
    let a6 = (m04 * m22 * m40 - m04 * m31 * m31 - m13 * m13 * m40 + 2.0 * m13 * m22 * m31
        - m22 * m22 * m22)
        / pow00[9];

    // weight 6, degree 4; orders 2, 3, 3, 4 (graph edges (1,2)^2 (2,4) (3,4)^3)
    let a7 = (m02 * m03 * m21 * m40 - m02 * m03 * m30 * m31 + m02 * m04 * m30 * m30
        - 3.0 * m02 * m12 * m21 * m31
        + 3.0 * m02 * m12 * m22 * m30
        - 4.0 * m02 * m13 * m21 * m30
        + 3.0 * m02 * m21 * m21 * m22
        + m03 * m03 * m20 * m40
        - 2.0 * m03 * m11 * m12 * m40
        + 2.0 * m03 * m11 * m21 * m31
        - 4.0 * m03 * m12 * m20 * m31
        - m03 * m13 * m20 * m30
        + 3.0 * m03 * m20 * m21 * m22
        - 2.0 * m04 * m11 * m21 * m30
        + m04 * m12 * m20 * m30
        + 6.0 * m11 * m12 * m12 * m31
        + 2.0 * m11 * m12 * m13 * m30
        - 12.0 * m11 * m12 * m21 * m22
        + 6.0 * m11 * m13 * m21 * m21
        + 3.0 * m12 * m12 * m20 * m22
        - 3.0 * m12 * m13 * m20 * m21)
        / pow00[10];

    // weight 4, degree 3; second and fourth order
    let a8 = (m02 * m02 * m40 - 4.0 * m02 * m11 * m31
        + 2.0 * m02 * m20 * m22
        + m04 * m20 * m20
        + 4.0 * m11 * m11 * m22
        - 4.0 * m11 * m13 * m20)
        / pow00[7];

    // weight 6, degree 4; second and fourth order
    let a9 = (m02 * m02 * m22 * m40 - m02 * m02 * m31 * m31 - 2.0 * m02 * m11 * m13 * m40
        + 2.0 * m02 * m11 * m22 * m31
        + 2.0 * m02 * m13 * m20 * m31
        - 2.0 * m02 * m20 * m22 * m22
        + m04 * m11 * m11 * m40
        - 2.0 * m04 * m11 * m20 * m31
        + m04 * m20 * m20 * m22
        - m11 * m11 * m22 * m22
        + 2.0 * m11 * m13 * m20 * m22
        - m13 * m13 * m20 * m20)
        / pow00[10];

    // weight 6, degree 4; orders 2, 3, 3, 4 (graph edges (1,3)(1,4)(2,3)(2,4)^2(3,4))
    let a10 = (m02 * m03 * m21 * m40 - m02 * m03 * m30 * m31 - m02 * m12 * m12 * m40
        + m02 * m12 * m21 * m31
        + m02 * m12 * m22 * m30
        - m02 * m21 * m21 * m22
        - 2.0 * m03 * m11 * m21 * m31
        + 2.0 * m03 * m11 * m22 * m30
        - m03 * m13 * m20 * m30
        + m03 * m20 * m21 * m22
        + m04 * m12 * m20 * m30
        - m04 * m20 * m21 * m21
        + 2.0 * m11 * m12 * m12 * m31
        - 2.0 * m11 * m12 * m13 * m30
        - 2.0 * m11 * m12 * m21 * m22
        + 2.0 * m11 * m13 * m21 * m21
        - m12 * m12 * m20 * m22
        + m12 * m13 * m20 * m21)
        / pow00[10];

    AmiVector::new([a1, a2, a3, a4, a5, a6, a7, a8, a9, a10])
}

/// 2D affine map (x, y) -> (a0 + a1 x + a2 y, b0 + b1 x + b2 y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
}

/// Determinant magnitude below which a transform is treated as
/// numerically degenerate.
pub const DEGENERACY_EPS: f64 = 1e-12;

impl AffineTransform {
    pub fn identity() -> Self {
        AffineTransform {
            a0: 0.0,
            a1: 1.0,
            a2: 0.0,
            b0: 0.0,
            b1: 0.0,
            b2: 1.0,
        }
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        AffineTransform {
            a0: dx,
            a1: 1.0,
            a2: 0.0,
            b0: dy,
            b1: 0.0,
            b2: 1.0,
        }
    }

    /// Counterclockwise rotation in the (x right, y down) raster frame.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        AffineTransform {
            a0: 0.0,
            a1: c,
            a2: -s,
            b0: 0.0,
            b1: s,
            b2: c,
        }
    }

    pub fn scale(sx: f64, sy: f64) -> Self {
        AffineTransform {
            a0: 0.0,
            a1: sx,
            a2: 0.0,
            b0: 0.0,
            b1: 0.0,
            b2: sy,
        }
    }

    /// Horizontal shear: x' = x + s*y.
    pub fn shear(s: f64) -> Self {
        AffineTransform {
            a0: 0.0,
            a1: 1.0,
            a2: s,
            b0: 0.0,
            b1: 0.0,
            b2: 1.0,
        }
    }

    /// Determinant of the linear part.
    pub fn determinant(&self) -> f64 {
        self.a1 * self.b2 - self.a2 * self.b1
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.a0 + self.a1 * x + self.a2 * y,
            self.b0 + self.b1 * x + self.b2 * y,
        )
    }

    /// Composition: `self.compose(other)` applies `other` first.
    pub fn compose(&self, other: &AffineTransform) -> AffineTransform {
        AffineTransform {
            a0: self.a0 + self.a1 * other.a0 + self.a2 * other.b0,
            a1: self.a1 * other.a1 + self.a2 * other.b1,
            a2: self.a1 * other.a2 + self.a2 * other.b2,
            b0: self.b0 + self.b1 * other.a0 + self.b2 * other.b0,
            b1: self.b1 * other.a1 + self.b2 * other.b1,
            b2: self.b1 * other.a2 + self.b2 * other.b2,
        }
    }

    pub fn inverse(&self) -> Result<AffineTransform> {
        let det = self.determinant();
        if det.abs() < DEGENERACY_EPS {
            return Err(Error::DegenerateTransform { det });
        }
        Ok(AffineTransform {
            a0: (-self.b2 * self.a0 + self.a2 * self.b0) / det,
            a1: self.b2 / det,
            a2: -self.a2 / det,
            b0: (self.b1 * self.a0 - self.a1 * self.b0) / det,
            b1: -self.b1 / det,
            b2: self.a1 / det,
        })
    }
}

fn bilinear_sample(image: &Array2<f64>, x: f64, y: f64) -> f64 {
    let (h, w) = image.dim();
    let x0 = x.floor();
    let y0 = y.floor();
    let tx = x - x0;
    let ty = y - y0;
    let xi = x0 as isize;
    let yi = y0 as isize;

    let at = |xx: isize, yy: isize| -> f64 {
        if xx < 0 || yy < 0 || xx >= w as isize || yy >= h as isize {
            0.0
        } else {
            image[[yy as usize, xx as usize]]
        }
    };

    (1.0 - tx) * (1.0 - ty) * at(xi, yi)
        + tx * (1.0 - ty) * at(xi + 1, yi)
        + (1.0 - tx) * ty * at(xi, yi + 1)
        + tx * ty * at(xi + 1, yi + 1)
}

/// Warps a raster through an affine transform by inverse mapping with
/// bilinear interpolation. Samples falling outside the source read 0.
pub fn apply_affine(
    image: &Array2<f64>,
    transform: &AffineTransform,
    out_width: usize,
    out_height: usize,
) -> Result<Array2<f64>> {
    let inv = transform.inverse()?;
    let mut out = Array2::<f64>::zeros((out_height, out_width));
    for v in 0..out_height {
        for u in 0..out_width {
            let (x, y) = inv.apply(u as f64, v as f64);
            out[[v, u]] = bilinear_sample(image, x, y);
        }
    }
    Ok(out)
}

/// Feature of one energy-image strip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentFeature {
    /// Invariant vector; all zeros when the strip is degenerate.
    pub ami: AmiVector,
    /// True when the strip carries no energy (zero mass), so no
    /// moments exist for it.
    pub degenerate: bool,
}

/// Extracts the per-strip invariant features of a segmented energy
/// image. Strips with zero mass yield a zero vector flagged degenerate
/// instead of an error, so sparse body regions cannot abort a pipeline
/// run.
pub fn features_from_segmented(seg: &SegmentedAei) -> Vec<SegmentFeature> {
    seg.segments()
        .iter()
        .map(|strip| match central_moments_inner(strip) {
            Some(m) => SegmentFeature {
                ami: ami_vector(&m),
                degenerate: false,
            },
            None => SegmentFeature {
                ami: AmiVector::zeros(),
                degenerate: true,
            },
        })
        .collect()
}
