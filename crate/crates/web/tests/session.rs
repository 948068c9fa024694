use tsunami_web::Session;

#[test]
fn queries_agree_with_full_scan() {
    let s = Session::new(20_000, true, 5).unwrap();
    for i in 0..20 {
        let q = s.sample_query(i);
        let ranges: Vec<(usize, u64, u64)> = q
            .as_array()
            .unwrap()
            .iter()
            .map(|t| (t[0].as_u64().unwrap() as usize, t[1].as_u64().unwrap(), t[2].as_u64().unwrap()))
            .collect();
        let r = s.query(&ranges).unwrap();
        assert_eq!(r["tsunami"]["count"], r["full_scan"]);
        assert_eq!(r["flood"]["count"], r["full_scan"]);
    }
}

#[test]
fn bad_queries_are_errors() {
    let s = Session::new(5_000, false, 1).unwrap();
    assert!(s.query(&[(9, 0, 10)]).is_err());
    assert!(s.query(&[(0, 10, 5)]).is_err());
}

#[test]
fn summary_lists_every_region() {
    let s = Session::new(20_000, true, 2).unwrap();
    let v = s.summary();
    assert_eq!(v["rows"], 20_000);
    let regions = v["regions"].as_array().unwrap();
    assert_eq!(regions.len(), s.tsunami().tree().num_regions());
    let points: u64 = regions.iter().map(|r| r["points"].as_u64().unwrap()).sum();
    assert_eq!(points, 20_000);
    assert_eq!(s.regions_2d(0, 1).as_array().unwrap().len(), regions.len());
    assert_eq!(s.points_2d(0, 1, 1000).len(), 2 * 1000);
}
