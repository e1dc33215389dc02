//! Benchmark objective suites: VLMOP2, DTLZ2, F2 and the RE33/RE36/RE37
//! engineering problems, with their boxes, hypervolume reference points
//! and true (or approximate) Pareto fronts.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moo::non_dominated_filter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemId {
    Vlmop2,
    Dtlz2,
    F2,
    Re33,
    Re36,
    Re37,
}

impl ProblemId {
    pub const ALL: [ProblemId; 6] = [
        ProblemId::Vlmop2,
        ProblemId::Dtlz2,
        ProblemId::F2,
        ProblemId::Re33,
        ProblemId::Re36,
        ProblemId::Re37,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemId::Vlmop2 => "vlmop2",
            ProblemId::Dtlz2 => "dtlz2",
            ProblemId::F2 => "f2",
            ProblemId::Re33 => "re33",
            ProblemId::Re36 => "re36",
            ProblemId::Re37 => "re37",
        }
    }

    pub fn is_synthetic(self) -> bool {
        matches!(self, ProblemId::Vlmop2 | ProblemId::Dtlz2 | ProblemId::F2)
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemId::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown problem '{s}'")))
    }
}

/// Which distance term DTLZ2 uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dtlz2Distance {
    /// g = Σ (x_i − 0.5)² over the last n − m + 1 coordinates.
    #[default]
    Standard,
    /// g = ‖x − 0.5‖₂ over all coordinates.
    NormAllCoordinates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub id: ProblemId,
    pub n: usize,
    pub m: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub reference_point: Vec<f64>,
    pub integrality: Vec<bool>,
    pub dtlz2_distance: Dtlz2Distance,
}

impl ProblemSpec {
    pub fn new(id: ProblemId) -> Self {
        let (n, m, lo, hi, reference): (usize, usize, f64, f64, Vec<f64>) = match id {
            ProblemId::Vlmop2 => (6, 2, -2.0, 2.0, vec![1.1, 1.1]),
            ProblemId::F2 => (6, 2, 0.0, 1.0, vec![1.1, 1.1]),
            ProblemId::Dtlz2 => (6, 3, 0.0, 1.0, vec![1.1, 1.1, 1.1]),
            ProblemId::Re33 => (4, 3, 0.0, 1.0, vec![5.8374, 3.4412, 27.5]),
            ProblemId::Re36 => (4, 3, 0.0, 1.0, vec![6.5241, 61.6, 0.3913]),
            ProblemId::Re37 => (4, 3, 0.0, 1.0, vec![1.0884, 1.0522, 1.0863]),
        };
        Self {
            id,
            n,
            m,
            lower: vec![lo; n],
            upper: vec![hi; n],
            reference_point: reference,
            integrality: vec![id == ProblemId::Re36; n],
            dtlz2_distance: Dtlz2Distance::Standard,
        }
    }

    pub fn with_dtlz2_distance(mut self, distance: Dtlz2Distance) -> Self {
        self.dtlz2_distance = distance;
        self
    }

    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lower, &self.upper)
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: x.len(),
            });
        }
        for (index, ((&value, &lower), &upper)) in x.iter().zip(&self.lower).zip(&self.upper).enumerate() {
            if !(value >= lower && value <= upper) {
                return Err(Error::Bounds {
                    index,
                    value,
                    lower,
                    upper,
                });
            }
        }
        Ok(())
    }

    /// True objective vector at `x`.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        Ok(self.evaluate_unchecked(x))
    }

    /// Objective formulas without the box check.
    pub fn evaluate_unchecked(&self, x: &[f64]) -> Vec<f64> {
        match self.id {
            ProblemId::Vlmop2 => vlmop2(x),
            ProblemId::Dtlz2 => dtlz2(x, self.m, self.dtlz2_distance),
            ProblemId::F2 => f2(x),
            ProblemId::Re33 => re33(&scale(x, &[55.0, 75.0, 1000.0, 11.0], &[80.0, 110.0, 3000.0, 20.0])),
            ProblemId::Re36 => {
                let raw = scale(x, &[12.0; 4], &[60.0; 4]);
                re36(&raw.iter().map(|v| v.round()).collect::<Vec<_>>())
            }
            ProblemId::Re37 => re37(x),
        }
    }

    /// Moves `x` onto the admissible grid for integer-valued problems.
    pub fn snap(&self, x: &[f64]) -> Vec<f64> {
        match self.id {
            ProblemId::Re36 => x
                .iter()
                .map(|&u| {
                    let teeth = (12.0 + 48.0 * u).round();
                    ((teeth - 12.0) / 48.0).clamp(0.0, 1.0)
                })
                .collect(),
            _ => x.to_vec(),
        }
    }

    pub fn default_front_density(&self) -> usize {
        if self.m == 2 {
            200
        } else {
            990
        }
    }
}

fn scale(x: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(lo.iter().zip(hi))
        .map(|(&u, (&l, &h))| l + u * (h - l))
        .collect()
}

fn vlmop2(x: &[f64]) -> Vec<f64> {
    let shift = 1.0 / (x.len() as f64).sqrt();
    let d1: f64 = x.iter().map(|v| (v - shift).powi(2)).sum();
    let d2: f64 = x.iter().map(|v| (v + shift).powi(2)).sum();
    vec![1.0 - (-d1).exp(), 1.0 - (-d2).exp()]
}

fn dtlz2(x: &[f64], m: usize, distance: Dtlz2Distance) -> Vec<f64> {
    use std::f64::consts::FRAC_PI_2;
    let g = match distance {
        Dtlz2Distance::Standard => x[m - 1..].iter().map(|v| (v - 0.5).powi(2)).sum::<f64>(),
        Dtlz2Distance::NormAllCoordinates => x.iter().map(|v| (v - 0.5).powi(2)).sum::<f64>().sqrt(),
    };
    let scale = 1.0 + g;
    let mut f = vec![scale; m];
    for i in 0..m {
        for &xj in &x[..m - 1 - i] {
            f[i] *= (xj * FRAC_PI_2).cos();
        }
        if i > 0 {
            f[i] *= (x[m - 1 - i] * FRAC_PI_2).sin();
        }
    }
    f
}

/// Subproblem sums of F2: `s1` over odd indices j ∈ [2, n] (1-based), `s2` over even.
fn f2_sums(x: &[f64]) -> (f64, usize, f64, usize) {
    let n = x.len();
    let (mut s1, mut c1, mut s2, mut c2) = (0.0, 0, 0.0, 0);
    for j in 2..=n {
        let target = (4.0 * std::f64::consts::PI * x[0] + j as f64 * std::f64::consts::PI / n as f64).sin();
        let d = (x[j - 1] - target).powi(2);
        if j % 2 == 0 {
            s2 += d;
            c2 += 1;
        } else {
            s1 += d;
            c1 += 1;
        }
    }
    (s1, c1.max(1), s2, c2.max(1))
}

fn f2(x: &[f64]) -> Vec<f64> {
    let (s1, c1, s2, c2) = f2_sums(x);
    let a1 = 1.0 + s1 / c1 as f64;
    let a2 = 1.0 + s2 / c2 as f64;
    vec![a1 * x[0], a2 * (1.0 - (x[0] / a2).sqrt())]
}

fn violation(g: f64) -> f64 {
    if g < 0.0 {
        -g
    } else {
        0.0
    }
}

// 3.14 is the constant of the published problem, not an approximation of pi.
#[allow(clippy::approx_constant)]
fn re33(x: &[f64]) -> Vec<f64> {
    let (x1, x2, x3, x4) = (x[0], x[1], x[2], x[3]);
    let sq = x2 * x2 - x1 * x1;
    let cu = x2 * x2 * x2 - x1 * x1 * x1;
    let f1 = 4.9e-5 * sq * (x4 - 1.0);
    let f2 = (9.82e6 * sq) / (x3 * x4 * cu);
    let g = [
        (x2 - x1) - 20.0,
        0.4 - x3 / (3.14 * sq),
        1.0 - (2.22e-3 * x3 * cu) / (sq * sq),
        (2.66e-2 * x3 * x4 * cu) / sq - 900.0,
    ];
    vec![f1, f2, g.iter().copied().map(violation).sum()]
}

fn re36(x: &[f64]) -> Vec<f64> {
    let (x1, x2, x3, x4) = (x[0], x[1], x[2], x[3]);
    let f1 = (6.931 - (x3 / x1) * (x4 / x2)).abs();
    let f2 = x1.max(x2).max(x3).max(x4);
    let f3 = violation(0.5 - f1 / 6.931);
    vec![f1, f2, f3]
}

fn re37(x: &[f64]) -> Vec<f64> {
    let (a, ha, oa, optt) = (x[0], x[1], x[2], x[3]);
    let f1 = 0.692 + 0.477 * a - 0.687 * ha - 0.080 * oa - 0.0650 * optt - 0.167 * a * a
        - 0.0129 * ha * a
        + 0.0796 * ha * ha
        - 0.0634 * oa * a
        - 0.0257 * oa * ha
        + 0.0877 * oa * oa
        - 0.0521 * optt * a
        + 0.00156 * optt * ha
        + 0.00198 * optt * oa
        + 0.0184 * optt * optt;
    let f2 = 0.153 - 0.322 * a + 0.396 * ha + 0.424 * oa + 0.0226 * optt + 0.175 * a * a
        + 0.0185 * ha * a
        - 0.0701 * ha * ha
        - 0.251 * oa * a
        + 0.179 * oa * ha
        + 0.0150 * oa * oa
        + 0.0134 * optt * a
        + 0.0296 * optt * ha
        + 0.0752 * optt * oa
        + 0.0192 * optt * optt;
    let f3 = 0.370 - 0.205 * a + 0.0307 * ha + 0.108 * oa + 1.019 * optt - 0.135 * a * a
        + 0.0141 * ha * a
        + 0.0998 * ha * ha
        + 0.208 * oa * a
        - 0.0301 * oa * ha
        - 0.226 * oa * oa
        + 0.353 * optt * a
        - 0.0497 * optt * oa
        - 0.423 * optt * optt
        + 0.202 * ha * a * a
        - 0.281 * oa * a * a
        - 0.342 * ha * ha * a
        - 0.245 * ha * ha * oa
        + 0.281 * oa * oa * ha
        - 0.184 * optt * optt * a
        - 0.281 * ha * a * oa;
    vec![f1, f2, f3]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrontSource {
    Analytic,
    DenseSampled,
    ExternalFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontSample {
    pub points: Vec<Vec<f64>>,
    pub source: FrontSource,
}

/// Directory holding the bundled approximate fronts of the RE problems.
pub fn bundled_data_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/data"))
}

pub fn front_file(data_dir: &Path, id: ProblemId) -> PathBuf {
    data_dir.join(format!("{}_front.csv", id.name()))
}

/// Points of the simplex lattice {w : w_i = c_i / h, Σ c_i = h} in three dimensions.
pub(crate) fn simplex_lattice3(h: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity((h + 1) * (h + 2) / 2);
    for i in 0..=h {
        for j in 0..=h - i {
            out.push([i, j, h - i - j]);
        }
    }
    out
}

/// Largest lattice resolution whose triangular count fits in `count`.
pub(crate) fn lattice_resolution(count: usize) -> usize {
    let mut h = 0;
    while (h + 2) * (h + 3) / 2 <= count {
        h += 1;
    }
    h
}

/// Samples the true Pareto front (or loads the bundled approximation).
pub fn true_front(spec: &ProblemSpec, density: usize, data_dir: &Path) -> Result<FrontSample> {
    if density < 2 {
        return Err(Error::InvalidArgument(format!("front density {density} < 2")));
    }
    let (points, source) = match spec.id {
        ProblemId::Dtlz2 => {
            let h = lattice_resolution(density);
            let pts = simplex_lattice3(h)
                .into_iter()
                .map(|c| {
                    let w: Vec<f64> = c.iter().map(|&v| v as f64).collect();
                    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
                    w.iter().map(|v| v / norm).collect()
                })
                .collect();
            (pts, FrontSource::Analytic)
        }
        ProblemId::Vlmop2 => {
            let shift = 1.0 / (spec.n as f64).sqrt();
            let pts = (0..density)
                .map(|k| {
                    let t = -shift + 2.0 * shift * k as f64 / (density - 1) as f64;
                    vlmop2(&vec![t; spec.n])
                })
                .collect();
            (pts, FrontSource::DenseSampled)
        }
        ProblemId::F2 => {
            let pts = (0..density)
                .map(|k| f2(&f2_pareto_design(k as f64 / (density - 1) as f64, spec.n)))
                .collect();
            (pts, FrontSource::DenseSampled)
        }
        ProblemId::Re33 | ProblemId::Re36 | ProblemId::Re37 => {
            let path = front_file(data_dir, spec.id);
            (load_front_csv(&path, spec)?, FrontSource::ExternalFile)
        }
    };
    let keep = non_dominated_filter(&points);
    Ok(FrontSample {
        points: keep.into_iter().map(|i| points[i].clone()).collect(),
        source,
    })
}

/// Best in-box design of F2 for a given first coordinate: each remaining
/// coordinate sits on its target curve, clipped to [0, 1].
pub(crate) fn f2_pareto_design(x1: f64, n: usize) -> Vec<f64> {
    let mut x = vec![x1; n];
    for (j, xj) in x.iter_mut().enumerate().skip(1) {
        let idx = (j + 1) as f64;
        *xj = (4.0 * std::f64::consts::PI * x1 + idx * std::f64::consts::PI / n as f64)
            .sin()
            .clamp(0.0, 1.0);
    }
    x
}

fn load_front_csv(path: &Path, spec: &ProblemSpec) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::DataFile {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut points = Vec::new();
    for (row, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let values: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|v| v.trim().parse::<f64>()).collect();
        let values = values.map_err(|e| Error::DataFile {
            path: path.to_path_buf(),
            message: format!("row {row}: {e}"),
        })?;
        if values.len() != spec.m {
            return Err(Error::DataFile {
                path: path.to_path_buf(),
                message: format!("row {row}: expected {} columns, got {}", spec.m, values.len()),
            });
        }
        if !values.iter().zip(&spec.reference_point).all(|(v, r)| v < r) {
            return Err(Error::FrontReferenceMismatch {
                path: path.to_path_buf(),
                row,
            });
        }
        points.push(values);
    }
    if points.is_empty() {
        return Err(Error::DataFile {
            path: path.to_path_buf(),
            message: "no rows".into(),
        });
    }
    Ok(points)
}

/// Writes a front as header-less CSV, one objective vector per row.
pub fn write_front_csv(path: &Path, points: &[Vec<f64>]) -> Result<()> {
    let mut text = String::new();
    for p in points {
        let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn table_values() {
        let v = ProblemSpec::new(ProblemId::Vlmop2);
        assert_eq!((v.n, v.m), (6, 2));
        assert_eq!(v.bounds(), (&[-2.0; 6][..], &[2.0; 6][..]));
        let d = ProblemSpec::new(ProblemId::Dtlz2);
        assert_eq!((d.n, d.m), (6, 3));
        assert_eq!(d.bounds(), (&[0.0; 6][..], &[1.0; 6][..]));
        assert_eq!(d.reference_point, vec![1.1; 3]);
        let re = ProblemSpec::new(ProblemId::Re33);
        assert_eq!((re.n, re.m), (4, 3));
        assert_eq!(re.bounds(), (&[0.0; 4][..], &[1.0; 4][..]));
        assert_eq!(re.reference_point, vec![5.8374, 3.4412, 27.5]);
        assert_eq!(ProblemSpec::new(ProblemId::Re36).reference_point, vec![6.5241, 61.6, 0.3913]);
        assert_eq!(ProblemSpec::new(ProblemId::Re37).reference_point, vec![1.0884, 1.0522, 1.0863]);
        assert!(ProblemSpec::new(ProblemId::Re36).integrality.iter().all(|&b| b));
        for id in ProblemId::ALL {
            let s = ProblemSpec::new(id);
            assert!(s.lower.iter().zip(&s.upper).all(|(l, u)| l < u));
            assert_eq!(id.name().parse::<ProblemId>().unwrap(), id);
        }
    }

    #[test]
    fn dtlz2_at_center() {
        let f = ProblemSpec::new(ProblemId::Dtlz2).evaluate(&[0.5; 6]).unwrap();
        assert!((f[0] - 0.5).abs() < 1e-12);
        assert!((f[1] - 0.5).abs() < 1e-12);
        assert!((f[2] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn dtlz2_sphere_when_distance_vanishes() {
        let spec = ProblemSpec::new(ProblemId::Dtlz2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x = [rng.random(), rng.random(), 0.5, 0.5, 0.5, 0.5];
            let f = spec.evaluate(&x).unwrap();
            let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
        let literal = spec.clone().with_dtlz2_distance(Dtlz2Distance::NormAllCoordinates);
        let f = literal.evaluate(&[0.5, 0.5, 1.0, 0.5, 0.5, 0.5]).unwrap();
        assert!((f[2] - 1.5 * std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn vlmop2_at_front_end() {
        let x = vec![1.0 / 6f64.sqrt(); 6];
        let f = ProblemSpec::new(ProblemId::Vlmop2).evaluate(&x).unwrap();
        assert!(f[0].abs() < 1e-15);
        assert!((f[1] - (1.0 - (-4.0f64).exp())).abs() < 1e-12);
        assert!((f[1] - 0.98168).abs() < 1e-5);
    }

    #[test]
    fn f2_on_target_curve() {
        let n = 6;
        let mut x = vec![0.25; n];
        for j in 2..=n {
            x[j - 1] = (4.0 * std::f64::consts::PI * 0.25 + j as f64 * std::f64::consts::PI / n as f64).sin();
        }
        // the target curve leaves the unit box here, so only the formula is checked
        let f = ProblemSpec::new(ProblemId::F2).evaluate_unchecked(&x);
        assert!((f[0] - 0.25).abs() < 1e-12);
        assert!((f[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn evaluate_errors() {
        let spec = ProblemSpec::new(ProblemId::Dtlz2);
        assert!(matches!(spec.evaluate(&[0.5; 5]), Err(Error::Dimension { expected: 6, got: 5 })));
        assert!(matches!(
            spec.evaluate(&[0.5, 0.5, 1.5, 0.5, 0.5, 0.5]),
            Err(Error::Bounds { index: 2, .. })
        ));
        assert!(matches!(spec.evaluate(&[f64::NAN; 6]), Err(Error::Bounds { .. })));
    }

    #[test]
    fn finite_everywhere() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for id in ProblemId::ALL {
            let spec = ProblemSpec::new(id);
            for _ in 0..1000 {
                let x: Vec<f64> = spec
                    .lower
                    .iter()
                    .zip(&spec.upper)
                    .map(|(l, u)| rng.random_range(*l..=*u))
                    .collect();
                let f = spec.evaluate(&x).unwrap();
                assert_eq!(f.len(), spec.m);
                assert!(f.iter().all(|v| v.is_finite()), "{id}: {f:?}");
            }
            // box corners as well
            for corner in [&spec.lower, &spec.upper] {
                assert!(spec.evaluate(corner).unwrap().iter().all(|v| v.is_finite()));
            }
        }
    }

    #[test]
    fn re36_rounds_and_snaps() {
        let spec = ProblemSpec::new(ProblemId::Re36);
        let x = [0.5001, 0.2, 0.77, 0.1];
        let snapped = spec.snap(&x);
        assert_eq!(spec.evaluate(&x).unwrap(), spec.evaluate(&snapped).unwrap());
        for v in &snapped {
            let teeth = 12.0 + 48.0 * v;
            assert!((teeth - teeth.round()).abs() < 1e-9);
        }
        assert_eq!(spec.snap(&snapped), snapped);
        let d = ProblemSpec::new(ProblemId::Dtlz2);
        assert_eq!(d.snap(&[0.3; 6]), vec![0.3; 6]);
    }

    #[test]
    fn analytic_fronts() {
        let dir = bundled_data_dir();
        let d = ProblemSpec::new(ProblemId::Dtlz2);
        let front = true_front(&d, 990, &dir).unwrap();
        assert_eq!(front.points.len(), 990);
        assert_eq!(front.source, FrontSource::Analytic);
        for p in &front.points {
            let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
            assert!(p.iter().all(|&v| v >= 0.0));
        }
        let v = ProblemSpec::new(ProblemId::Vlmop2);
        let front = true_front(&v, 200, &dir).unwrap();
        let end = 1.0 - (-4.0f64).exp();
        assert!(front.points.iter().any(|p| p[0].abs() < 1e-12 && (p[1] - end).abs() < 1e-12));
        let f = ProblemSpec::new(ProblemId::F2);
        let front = true_front(&f, 200, &dir).unwrap();
        assert!(!front.points.is_empty());
        assert!(matches!(true_front(&f, 1, &dir), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn fronts_inside_reference_and_filtered() {
        let dir = bundled_data_dir();
        for id in ProblemId::ALL {
            let spec = ProblemSpec::new(id);
            let front = true_front(&spec, spec.default_front_density(), &dir).unwrap();
            assert!(!front.points.is_empty(), "{id}");
            for p in &front.points {
                assert!(p.iter().zip(&spec.reference_point).all(|(a, r)| a < r), "{id}: {p:?}");
            }
            let again = non_dominated_filter(&front.points);
            assert_eq!(again.len(), front.points.len(), "{id}");
        }
    }

    #[test]
    fn missing_front_file_names_it() {
        let dir = tempfile::tempdir().unwrap();
        let err = true_front(&ProblemSpec::new(ProblemId::Re36), 200, dir.path()).unwrap_err();
        match err {
            Error::DataFile { path, .. } => assert!(path.ends_with("re36_front.csv")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn front_outside_reference_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = front_file(dir.path(), ProblemId::Re37);
        std::fs::write(&path, "0.5,0.5,0.5\n2.0,0.1,0.1\n").unwrap();
        let err = true_front(&ProblemSpec::new(ProblemId::Re37), 200, dir.path()).unwrap_err();
        assert!(matches!(err, Error::FrontReferenceMismatch { row: 1, .. }));
    }
}
