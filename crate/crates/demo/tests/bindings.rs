use xchurn_demo::{bootstrap_overlap, churn_stripes, gp_ei_curve};

#[test]
fn overlap_concentrates_near_limit() {
    let v = bootstrap_overlap(1000, 400, 3).unwrap();
    assert_eq!(v.len(), 400);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    assert!((mean - 0.3996).abs() < 0.01, "{mean}");
    assert_eq!(v, bootstrap_overlap(1000, 400, 3).unwrap());
}

#[test]
fn stripes_shape_and_churn_range() {
    let s: serde_json::Value = serde_json::from_str(&churn_stripes(10.0, 1.0, 3, 0).unwrap()).unwrap();
    let n = s["ids"].as_array().unwrap().len();
    assert_eq!(n, 60);
    for key in ["erm", "twin"] {
        let m = s[key].as_array().unwrap();
        assert_eq!(m.len(), 3);
        assert!(m.iter().all(|r| r.as_array().unwrap().len() == n));
    }
    for key in ["erm_churn", "twin_churn"] {
        let c = s[key].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&c));
    }
}

#[test]
fn gp_curve_interpolates_and_ei_is_nonnegative() {
    let xs = [0.0, 1.0, 2.5];
    let ys = [0.2, 0.6, 0.4];
    let grid = [0.0, 0.5, 1.0, 2.5, 3.5];
    let out = gp_ei_curve(&xs, &ys, &grid).unwrap();
    assert_eq!(out.len(), 15);
    let (mu, sd, ei) = (&out[..5], &out[5..10], &out[10..]);
    assert!((mu[2] - 0.6).abs() < 0.01 && sd[2] < 0.05);
    assert!(sd[4] > sd[3]);
    assert!(ei.iter().all(|&e| e >= 0.0));
    let prior = gp_ei_curve(&[], &[], &grid).unwrap();
    assert!(prior[10..].iter().all(|&e| e == 0.0));
}
