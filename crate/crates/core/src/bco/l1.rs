/// Euclidean projection onto the l1 ball `{x : |x|_1 <= radius}` by the
/// sorted soft-threshold method. Feasible inputs are returned unchanged.
pub fn l1_project(v: &[f64], radius: f64) -> Vec<f64> {
    let norm: f64 = v.iter().map(|x| x.abs()).sum();
    if norm <= radius {
        return v.to_vec();
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &m) in mags.iter().enumerate() {
        cumsum += m;
        let t = (cumsum - radius) / (i + 1) as f64;
        if m > t {
            theta = t;
        } else {
            break;
        }
    }
    v.iter()
        .map(|&x| x.signum() * (x.abs() - theta).max(0.0))
        .collect()
}

pub fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}
