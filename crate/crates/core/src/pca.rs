//! Principal component analysis via symmetric eigendecomposition.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{invalid, Result};
use crate::linalg::symmetric_eigen;
use crate::textfmt::{push_row, Lines};

const FORMAT_TAG: &str = "texscore-pca";
const FORMAT_VERSION: u32 = 1;

/// Eigenvalues at or below this fraction of the largest are treated as zero
/// when recovering components from the Gram matrix.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Array1<f64>,
    /// `k x p`, orthonormal rows.
    components: Array2<f64>,
    eigenvalues: Array1<f64>,
}

impl PcaModel {
    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn components(&self) -> &Array2<f64> {
        &self.components
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    /// Eigenvalues in fitted (non-increasing) order.
    pub fn explained_spectrum(&self) -> Vec<f64> {
        self.eigenvalues.to_vec()
    }

    pub fn project(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        if x.len() != self.input_dim() {
            return Err(invalid(format!(
                "expected a length-{} vector, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        Ok(self.components.dot(&(&x - &self.mean)))
    }

    /// Projects every row of `data`.
    pub fn project_rows(&self, data: ArrayView2<f64>) -> Result<Array2<f64>> {
        if data.ncols() != self.input_dim() {
            return Err(invalid(format!(
                "expected {} columns, got {}",
                self.input_dim(),
                data.ncols()
            )));
        }
        let centered = &data - &self.mean.view().insert_axis(Axis(0));
        Ok(centered.dot(&self.components.t()))
    }

    pub fn reconstruct(&self, z: ArrayView1<f64>) -> Result<Array1<f64>> {
        if z.len() != self.n_components() {
            return Err(invalid(format!(
                "expected {} scores, got {}",
                self.n_components(),
                z.len()
            )));
        }
        Ok(self.components.t().dot(&z) + &self.mean)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{FORMAT_TAG} {FORMAT_VERSION} {} {}\n",
            self.input_dim(),
            self.n_components()
        );
        out.push_str("mean\n");
        push_row(&mut out, self.mean.iter().copied());
        out.push_str("eigenvalues\n");
        push_row(&mut out, self.eigenvalues.iter().copied());
        out.push_str("components\n");
        for row in self.components.rows() {
            push_row(&mut out, row.iter().copied());
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let header = lines.tagged(FORMAT_TAG)?;
        if header.len() != 3 {
            return Err(lines.err("header must be: texscore-pca <version> <p> <k>"));
        }
        let version: u32 = lines.parse(header[0], "version")?;
        if version != FORMAT_VERSION {
            return Err(lines.err(format!("unsupported version {version}")));
        }
        let p: usize = lines.parse(header[1], "input dimension")?;
        let k: usize = lines.parse(header[2], "component count")?;
        lines.tagged("mean")?;
        let mean = Array1::from(lines.floats(p)?);
        lines.tagged("eigenvalues")?;
        let eigenvalues = Array1::from(lines.floats(k)?);
        lines.tagged("components")?;
        let mut components = Array2::zeros((k, p));
        for i in 0..k {
            let row = lines.floats(p)?;
            components.row_mut(i).assign(&Array1::from(row));
        }
        Ok(Self {
            mean,
            components,
            eigenvalues,
        })
    }
}

/// Fits the top-`k` principal components of `data` (rows are observations).
///
/// The covariance uses divisor `N - 1`. When `p > N` the eigenproblem is
/// solved on the `N x N` Gram matrix instead. Each component is sign-fixed so
/// its largest-magnitude coordinate is positive. Directions with zero
/// variance (e.g. all rows identical) are filled with an arbitrary
/// orthonormal completion.
pub fn fit_pca(data: ArrayView2<f64>, k: usize) -> Result<PcaModel> {
    let (n, p) = data.dim();
    if n < 2 {
        return Err(invalid(format!("PCA needs at least 2 rows, got {n}")));
    }
    if k == 0 || k > n.min(p) {
        return Err(invalid(format!(
            "component count {k} outside [1, {}]",
            n.min(p)
        )));
    }
    let mean = data.mean_axis(Axis(0)).expect("non-empty");
    let centered = &data - &mean.view().insert_axis(Axis(0));
    let denom = (n - 1) as f64;

    let (mut eigenvalues, mut components) = if p <= n {
        let cov = centered.t().dot(&centered) / denom;
        let eig = symmetric_eigen(&cov);
        let comps = eig.vectors.slice(s![.., ..k]).t().to_owned();
        (eig.values.slice(s![..k]).to_owned(), comps)
    } else {
        let gram = centered.dot(&centered.t()) / denom;
        let eig = symmetric_eigen(&gram);
        let top = eig.values[0].max(0.0);
        let mut comps = Array2::zeros((k, p));
        let mut values = Array1::zeros(k);
        let mut filled = 0;
        for j in 0..k {
            let lambda = eig.values[j];
            if lambda <= RANK_TOL * top || lambda <= 0.0 {
                break;
            }
            let v = centered.t().dot(&eig.vectors.column(j)) / (lambda * denom).sqrt();
            comps.row_mut(j).assign(&v);
            values[j] = lambda;
            filled += 1;
        }
        complete_orthonormal(&mut comps, filled);
        (values, comps)
    };

    for v in eigenvalues.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    for mut row in components.rows_mut() {
        let mut lead = 0;
        for (i, x) in row.iter().enumerate() {
            if x.abs() > row[lead].abs() {
                lead = i;
            }
        }
        if row[lead] < 0.0 {
            row.mapv_inplace(|x| -x);
        }
    }
    Ok(PcaModel {
        mean,
        components,
        eigenvalues,
    })
}

/// Fills rows `filled..` with unit vectors orthogonal to all earlier rows,
/// drawn from the standard basis by Gram-Schmidt.
fn complete_orthonormal(rows: &mut Array2<f64>, filled: usize) {
    let (k, p) = rows.dim();
    let mut next = filled;
    let mut basis = 0;
    while next < k && basis < p {
        let mut v = Array1::<f64>::zeros(p);
        v[basis] = 1.0;
        basis += 1;
        for _ in 0..2 {
            for i in 0..next {
                let r = rows.row(i);
                let proj = r.dot(&v);
                v.scaled_add(-proj, &r);
            }
        }
        let norm = v.dot(&v).sqrt();
        if norm > 1e-6 {
            rows.row_mut(next).assign(&(v / norm));
            next += 1;
        }
    }
}

/// Writes `index,eigenvalue` CSV, 1-based index.
pub fn spectrum_csv(eigenvalues: &[f64]) -> String {
    let mut out = String::from("index,eigenvalue\n");
    for (i, v) in eigenvalues.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, v));
    }
    out
}
