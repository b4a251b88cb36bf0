//! Euclidean projections onto the probability simplex and onto the
//! exploration-floored simplex `{p : p(a) >= xi / A, sum p = 1}`.

use crate::error::{Error, Result};

/// A point of the probability simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// A point of the simplex with every coordinate at least `xi / A`.
#[derive(Clone, Debug, PartialEq)]
pub struct XiSimplexPoint {
    point: Vec<f64>,
    xi: f64,
}

impl XiSimplexPoint {
    pub fn as_slice(&self) -> &[f64] {
        &self.point
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.point
    }
}

/// `argmin_{p in simplex} ||p - v||` by sort-and-threshold.
pub fn project_simplex(v: &[f64]) -> Result<SimplexPoint> {
    if v.is_empty() {
        return Err(Error::arg("cannot project an empty vector"));
    }
    if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::arg(format!("projection input contains non-finite value {bad}")));
    }
    let mut out = vec![0.0; v.len()];
    project_simplex_into(v, &mut out);
    Ok(SimplexPoint(out))
}

/// Unchecked core of [`project_simplex`]; `v` must be finite and nonempty.
pub(crate) fn project_simplex_into(v: &[f64], out: &mut [f64]) {
    let tau = simplex_threshold(v);
    for (o, x) in out.iter_mut().zip(v) {
        *o = (x - tau).max(0.0);
    }
}

/// Threshold `tau` such that `sum_a max(v_a - tau, 0) = 1`.
fn simplex_threshold(v: &[f64]) -> f64 {
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut prefix = 0.0;
    let mut tau = sorted[0] - 1.0;
    for (j, u) in sorted.iter().enumerate() {
        prefix += u;
        let candidate = (prefix - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        } else {
            break;
        }
    }
    tau
}

/// Projection onto `{p : p(a) >= xi / A, sum p = 1}`.
///
/// Substitutes `q = (p - xi/A) / (1 - xi)`, projects onto the plain simplex,
/// and maps back. For `xi = 1` the set is the single uniform point.
pub fn project_xi_simplex(v: &[f64], xi: f64) -> Result<XiSimplexPoint> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::arg(format!("exploration rate {xi} outside [0, 1]")));
    }
    if v.is_empty() {
        return Err(Error::arg("cannot project an empty vector"));
    }
    if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::arg(format!("projection input contains non-finite value {bad}")));
    }
    let mut point = vec![0.0; v.len()];
    project_xi_simplex_into(v, xi, &mut point);
    Ok(XiSimplexPoint { point, xi })
}

pub(crate) fn project_xi_simplex_into(v: &[f64], xi: f64, out: &mut [f64]) {
    let n = v.len() as f64;
    if xi >= 1.0 {
        out.iter_mut().for_each(|o| *o = 1.0 / n);
        return;
    }
    if xi == 0.0 {
        project_simplex_into(v, out);
        return;
    }
    let floor = xi / n;
    let scale = 1.0 - xi;
    let shifted: Vec<f64> = v.iter().map(|x| (x - floor) / scale).collect();
    project_simplex_into(&shifted, out);
    for o in out.iter_mut() {
        *o = floor + scale * *o;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn point_in_simplex_is_fixed() {
        let v = [0.2, 0.3, 0.5];
        assert!(close(project_simplex(&v).unwrap().as_slice(), &v, 1e-15));
    }

    #[test]
    fn nearest_vertex() {
        assert_eq!(project_simplex(&[2.0, 0.0]).unwrap().as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn negative_coordinate_clipped() {
        // KKT: support {0,1}, tau = 0, v_2 = -1 <= tau.
        let p = project_simplex(&[0.5, 0.5, -1.0]).unwrap();
        assert!(close(p.as_slice(), &[0.5, 0.5, 0.0], 1e-15));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(project_simplex(&[f64::NAN, 1.0]).is_err());
        assert!(project_simplex(&[f64::INFINITY, 1.0]).is_err());
        assert!(project_simplex(&[]).is_err());
    }

    #[test]
    fn xi_zero_matches_plain() {
        let v = [0.3, -0.2, 1.4, 0.1];
        let a = project_simplex(&v).unwrap();
        let b = project_xi_simplex(&v, 0.0).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
    }

    #[test]
    fn xi_one_is_uniform() {
        let p = project_xi_simplex(&[5.0, -3.0, 0.0], 1.0).unwrap();
        assert!(close(p.as_slice(), &[1.0 / 3.0; 3], 1e-15));
    }

    #[test]
    fn xi_half_two_actions() {
        let p = project_xi_simplex(&[1.0, 0.0], 0.5).unwrap();
        assert!(close(p.as_slice(), &[0.75, 0.25], 1e-15));
    }

    #[test]
    fn xi_out_of_range() {
        assert!(project_xi_simplex(&[1.0, 0.0], -0.1).is_err());
        assert!(project_xi_simplex(&[1.0, 0.0], 1.1).is_err());
    }

    fn vec_strategy() -> impl Strategy<Value = Vec<f64>> {
        (1usize..7).prop_flat_map(|n| proptest::collection::vec(-3.0f64..3.0, n))
    }

    proptest! {
        #[test]
        fn output_is_simplex_point(v in vec_strategy()) {
            let p = project_simplex(&v).unwrap();
            prop_assert!(p.as_slice().iter().all(|x| *x >= 0.0));
            prop_assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn idempotent(v in vec_strategy()) {
            let p = project_simplex(&v).unwrap();
            let q = project_simplex(p.as_slice()).unwrap();
            prop_assert!(close(p.as_slice(), q.as_slice(), 1e-12));
        }

        #[test]
        fn kkt_conditions(v in vec_strategy()) {
            let p = project_simplex(&v).unwrap();
            let p = p.as_slice();
            let support: Vec<usize> = (0..v.len()).filter(|&a| p[a] > 0.0).collect();
            let tau = v[support[0]] - p[support[0]];
            for a in 0..v.len() {
                if p[a] > 0.0 {
                    prop_assert!((v[a] - p[a] - tau).abs() < 1e-10);
                } else {
                    prop_assert!(v[a] <= tau + 1e-10);
                }
            }
        }

        #[test]
        fn xi_floor_respected(v in vec_strategy(), xi in 0.0f64..=1.0) {
            let p = project_xi_simplex(&v, xi).unwrap();
            let floor = xi / v.len() as f64;
            prop_assert!(p.as_slice().iter().all(|x| *x >= floor - 1e-12));
            prop_assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn nonexpansive(pair in (1usize..6).prop_flat_map(|n| (
            proptest::collection::vec(-3.0f64..3.0, n),
            proptest::collection::vec(-3.0f64..3.0, n),
        ))) {
            let (u, v) = pair;
            let pu = project_simplex(&u).unwrap();
            let pv = project_simplex(&v).unwrap();
            let dp: f64 = pu.as_slice().iter().zip(pv.as_slice()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let d: f64 = u.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(dp <= d + 1e-12);
        }
    }
}
